//! Plot-ready tables rendered in memory.
//!
//!     cargo run --release --example report_bundle

use migrant_attachment::atlas::assign_hashtag_nationalities;
use migrant_attachment::attachment::{compute_scores, ScoreConfig};
use migrant_attachment::corpus::Canonicalizer;
use migrant_attachment::geo::{label_population, LabelConfig};
use migrant_attachment::nullmodel::{null_distribution, ShuffleScope};
use migrant_attachment::report::{chord_edges, render_bundle, ReportInputs};
use migrant_attachment::synth::{generate, PopulationSpec};

fn main() -> migrant_attachment::Result<()> {
    let spec = PopulationSpec {
        n_users: 3000,
        migrant_fraction: 0.2,
        ..Default::default()
    };
    let corpus = generate(&spec)?;
    let canon = Canonicalizer::default();
    let config = ScoreConfig::default();
    let pop = label_population(&corpus.posts, &corpus.friends, &LabelConfig::default());
    let atlas = assign_hashtag_nationalities(&corpus.posts, &pop, spec.year, 0.5, &canon)?;
    let scores = compute_scores(&corpus.posts, &pop, &atlas, &config, &canon);
    let null = null_distribution(&corpus.posts, &pop, &atlas, &config, 2, 1, ShuffleScope::ScoredMigrants, &canon)?;
    let null_rows: Vec<_> = null
        .runs
        .iter()
        .flat_map(|r| r.scores.scores.iter().map(move |s| (r.replicate_index, s.clone())))
        .collect();

    for e in chord_edges(&pop, 10).iter().take(5) {
        println!("{} -> {}: {}", e.origin, e.destination, e.count);
    }
    let bundle = render_bundle(&ReportInputs {
        population: &pop,
        atlas: &atlas,
        scores: &scores,
        null: &null_rows,
        min_flow: 10,
        min_group: 10,
        bins: 20,
    })?;
    for (name, bytes) in bundle {
        let text = String::from_utf8_lossy(&bytes);
        println!("{name}: {} lines; header {}", text.lines().count(), text.lines().next().unwrap_or(""));
    }
    Ok(())
}
