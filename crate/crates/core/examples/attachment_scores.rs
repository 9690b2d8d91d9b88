//! Home and destination attachment per migrant, with acculturation classes.
//!
//!     cargo run --example attachment_scores

use std::collections::BTreeMap;

use migrant_attachment::atlas::assign_hashtag_nationalities;
use migrant_attachment::attachment::{compute_scores, ScoreConfig};
use migrant_attachment::corpus::Canonicalizer;
use migrant_attachment::geo::{label_population, LabelConfig};
use migrant_attachment::synth::{generate, PopulationSpec};

fn main() -> migrant_attachment::Result<()> {
    let spec = PopulationSpec {
        n_users: 3000,
        migrant_fraction: 0.15,
        ..Default::default()
    };
    let corpus = generate(&spec)?;
    let canon = Canonicalizer::default();
    let pop = label_population(&corpus.posts, &corpus.friends, &LabelConfig::default());
    let atlas = assign_hashtag_nationalities(&corpus.posts, &pop, spec.year, 0.5, &canon)?;
    let table = compute_scores(&corpus.posts, &pop, &atlas, &ScoreConfig::default(), &canon);

    println!(
        "{} migrants scored, mean HA {:.3}, mean DA {:.3}, splits {:?}",
        table.len(),
        table.mean_ha(),
        table.mean_da(),
        table.splits
    );
    let mut classes: BTreeMap<_, usize> = BTreeMap::new();
    for s in &table.scores {
        *classes.entry(s.acc_class).or_default() += 1;
    }
    for (c, n) in classes {
        println!("{c:<16} {n}");
    }
    for s in table.scores.iter().take(5) {
        println!(
            "{} {}->{} HA={:.2} DA={:.2} ({} tags)",
            s.user_id, s.nationality, s.residence, s.ha, s.da, s.n_hashtags
        );
    }
    Ok(())
}
