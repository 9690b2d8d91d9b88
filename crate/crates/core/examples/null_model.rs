//! Shuffling hashtags across migrants to get a baseline for HA and DA.
//!
//!     cargo run --release --example null_model

use migrant_attachment::atlas::assign_hashtag_nationalities;
use migrant_attachment::attachment::{compute_scores, ScoreConfig};
use migrant_attachment::corpus::Canonicalizer;
use migrant_attachment::geo::{label_population, LabelConfig};
use migrant_attachment::nullmodel::{null_distribution, ShuffleScope};
use migrant_attachment::stats::wilcoxon_rank_sum;
use migrant_attachment::synth::{generate, PopulationSpec};

fn main() -> migrant_attachment::Result<()> {
    let spec = PopulationSpec {
        n_users: 3000,
        ..Default::default()
    };
    let corpus = generate(&spec)?;
    let canon = Canonicalizer::default();
    let config = ScoreConfig::default();
    let pop = label_population(&corpus.posts, &corpus.friends, &LabelConfig::default());
    let atlas = assign_hashtag_nationalities(&corpus.posts, &pop, spec.year, 0.5, &canon)?;
    let real = compute_scores(&corpus.posts, &pop, &atlas, &config, &canon);
    let null = null_distribution(&corpus.posts, &pop, &atlas, &config, 5, 42, ShuffleScope::ScoredMigrants, &canon)?;

    for run in &null.runs {
        println!(
            "replicate {} (seed {}): mean HA {:.3}, DA {:.3}",
            run.replicate_index,
            run.seed,
            run.scores.mean_ha(),
            run.scores.mean_da()
        );
    }
    let ha: Vec<f64> = real.scores.iter().map(|s| s.ha).collect();
    let da: Vec<f64> = real.scores.iter().map(|s| s.da).collect();
    let t_ha = wilcoxon_rank_sum(&ha, &null.pooled_ha())?;
    let t_da = wilcoxon_rank_sum(&da, &null.pooled_da())?;
    println!("real HA {:.3}: p={:.2e} {}", real.mean_ha(), t_ha.p_value, t_ha.stars());
    println!("real DA {:.3}: p={:.2e} {}", real.mean_da(), t_da.p_value, t_da.stars());
    Ok(())
}
