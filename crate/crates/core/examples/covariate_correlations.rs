//! Correlating attachment with country-pair covariates, per user and per group.
//!
//!     cargo run --release --example covariate_correlations

use migrant_attachment::atlas::assign_hashtag_nationalities;
use migrant_attachment::attachment::{compute_scores, ScoreConfig};
use migrant_attachment::corpus::Canonicalizer;
use migrant_attachment::covariates::{
    grouped_correlations, individual_correlations, join_covariates, CovariateSources, DeltaMode,
};
use migrant_attachment::geo::{label_population, LabelConfig};
use migrant_attachment::stats::Method;
use migrant_attachment::synth::{generate_two_regime, TwoRegimeSpec};

fn main() -> migrant_attachment::Result<()> {
    let spec = TwoRegimeSpec::default();
    let corpus = generate_two_regime(&spec)?;
    let canon = Canonicalizer::default();
    let pop = label_population(&corpus.posts, &corpus.friends, &LabelConfig::default());
    let atlas = assign_hashtag_nationalities(&corpus.posts, &pop, spec.year, 0.5, &canon)?;
    let scores = compute_scores(&corpus.posts, &pop, &atlas, &ScoreConfig::default(), &canon);

    let src = CovariateSources {
        hofstede: Some(corpus.hofstede.clone()),
        pairs: Some(corpus.pairs.clone()),
        extras: vec![],
        delta_mode: DeltaMode::Absolute,
    };
    let mut joined = join_covariates(&scores.scores, &src);
    let constant = joined.drop_constant_columns();
    println!("{} users joined, {} dropped, constant columns {constant:?}", joined.rows.len(), joined.dropped);

    println!("individual:\n{}", individual_correlations(&joined)?.render(Method::Pearson));
    println!("grouped:\n{}", grouped_correlations(&joined, 10)?.render(Method::Pearson));
    Ok(())
}
