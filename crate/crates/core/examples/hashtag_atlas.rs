//! Assigning hashtags to countries by the entropy of their native usage.
//!
//!     cargo run --example hashtag_atlas

use migrant_attachment::atlas::{assign_hashtag_nationalities, entropy_histogram, Assignment};
use migrant_attachment::corpus::Canonicalizer;
use migrant_attachment::geo::{label_population, LabelConfig};
use migrant_attachment::synth::{generate, PopulationSpec};

fn main() -> migrant_attachment::Result<()> {
    let spec = PopulationSpec {
        n_users: 1500,
        ..Default::default()
    };
    let corpus = generate(&spec)?;
    let pop = label_population(&corpus.posts, &corpus.friends, &LabelConfig::default());
    let atlas = assign_hashtag_nationalities(&corpus.posts, &pop, spec.year, 0.5, &Canonicalizer::default())?;
    let international = atlas
        .records
        .values()
        .filter(|r| r.assignment == Assignment::International)
        .count();
    println!(
        "{} tokens: {} country-specific, {international} international",
        atlas.len(),
        atlas.n_assigned()
    );
    for r in atlas.records.values().step_by(97).take(8) {
        println!("{:<16} H={:.3} -> {}", r.token, r.entropy, r.assignment);
    }
    for b in entropy_histogram(atlas.records.values(), 10) {
        println!("[{:.1}, {:.1}] {}", b.lo, b.hi, b.count);
    }
    Ok(())
}
