//! Volume-preserving hashtag shuffles.
//!
//! All canonical hashtag uses of the shuffled population are pooled, permuted
//! uniformly at random, and dealt back so every user keeps exactly as many
//! uses as before. The atlas is left alone: it is built from non-migrants.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::Atlas;
use crate::attachment::{compute_scores, score_user, tokens_by_user, ScoreConfig, ScoreTable};
use crate::corpus::{CanonicalHashtag, Canonicalizer, Post};
use crate::error::{Error, Result};
use crate::geo::Population;

pub const DEFAULT_REPLICATES: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuffleScope {
    /// Only migrants that receive a real score.
    #[default]
    ScoredMigrants,
    /// Every user with hashtag uses in the reference year.
    AllUsers,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShuffleRun {
    pub seed: u64,
    pub replicate_index: usize,
    pub scores: ScoreTable,
}

#[derive(Clone, Debug, Default)]
pub struct NullModel {
    pub runs: Vec<ShuffleRun>,
}

impl NullModel {
    pub fn pooled_ha(&self) -> Vec<f64> {
        self.runs.iter().flat_map(|r| r.scores.scores.iter().map(|s| s.ha)).collect()
    }

    pub fn pooled_da(&self) -> Vec<f64> {
        self.runs.iter().flat_map(|r| r.scores.scores.iter().map(|s| s.da)).collect()
    }
}

pub fn replicate_seed(master: u64, replicate: usize) -> u64 {
    master.wrapping_add(replicate as u64)
}

/// Pools tokens in user order, permutes them, and deals them back.
fn deal<K: Ord + Clone>(per_user: &BTreeMap<K, Vec<CanonicalHashtag>>, seed: u64) -> BTreeMap<K, Vec<CanonicalHashtag>> {
    let mut pool: Vec<CanonicalHashtag> = per_user.values().flatten().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let mut rest = pool.into_iter();
    per_user
        .iter()
        .map(|(k, v)| (k.clone(), rest.by_ref().take(v.len()).collect()))
        .collect()
}

/// Returns a copy of `posts` in which the canonical hashtag uses of `users`
/// within `year` are permuted across those users. Tags rejected by the
/// canonicalizer and all other post fields are left untouched.
pub fn shuffle_hashtags(
    posts: &[Post],
    users: &BTreeSet<String>,
    year: i32,
    seed: u64,
    canon: &Canonicalizer,
) -> Vec<Post> {
    let mut slots: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    let mut tokens: BTreeMap<&str, Vec<CanonicalHashtag>> = BTreeMap::new();
    for (pi, p) in posts.iter().enumerate() {
        if p.year() != year || !users.contains(&p.user_id) {
            continue;
        }
        for (ti, raw) in p.hashtags.iter().enumerate() {
            if let Some(t) = canon.canonicalize(raw) {
                slots.entry(&p.user_id).or_default().push((pi, ti));
                tokens.entry(&p.user_id).or_default().push(t);
            }
        }
    }
    let dealt = deal(&tokens, seed);
    let mut out = posts.to_vec();
    for (user, user_slots) in &slots {
        for ((pi, ti), tok) in user_slots.iter().zip(&dealt[user]) {
            out[*pi].hashtags[*ti] = tok.as_str().to_string();
        }
    }
    out
}

/// Runs `replicates` shuffles and rescores each; replicate `r` uses seed `seed + r`.
#[allow(clippy::too_many_arguments)]
pub fn null_distribution(
    posts: &[Post],
    pop: &Population,
    atlas: &Atlas,
    config: &ScoreConfig,
    replicates: usize,
    seed: u64,
    scope: ShuffleScope,
    canon: &Canonicalizer,
) -> Result<NullModel> {
    if replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    let real = compute_scores(posts, pop, atlas, config, canon);
    let scored: BTreeSet<&str> = real.scores.iter().map(|s| s.user_id.as_str()).collect();
    let tokens = tokens_by_user(posts, config.year, canon, |u| match scope {
        ShuffleScope::ScoredMigrants => scored.contains(u),
        ShuffleScope::AllUsers => true,
    });
    let runs = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let s = replicate_seed(seed, r);
            let dealt = deal(&tokens, s);
            let scores = dealt
                .iter()
                .filter_map(|(u, toks)| {
                    let p = pop.get(u)?;
                    if p.is_migrant != Some(true) {
                        return None;
                    }
                    score_user(u, p.nationality?, p.residence?, toks, atlas, config)
                })
                .collect();
            ShuffleRun {
                seed: s,
                replicate_index: r,
                scores: ScoreTable::from_scores(scores),
            }
        })
        .collect();
    Ok(NullModel { runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::HashtagRecord;
    use crate::corpus::canonicalize_hashtag;
    use crate::country::cc;
    use crate::geo::UserProfile;
    use chrono::{TimeZone, Utc};

    fn post(user: &str, tags: &[&str]) -> Post {
        Post {
            user_id: user.into(),
            timestamp: Utc.with_ymd_and_hms(2018, 6, 1, 12, 0, 0).unwrap(),
            country: None,
            language: Some("en".into()),
            hashtags: tags.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn tok(s: &str) -> CanonicalHashtag {
        canonicalize_hashtag(s).unwrap()
    }

    fn atlas(entries: &[(&str, &str)]) -> Atlas {
        Atlas {
            threshold: 0.5,
            records: entries
                .iter()
                .map(|(t, c)| (tok(t), HashtagRecord::from_counts(tok(t), BTreeMap::from([(cc(c), 1)]), 0.5)))
                .collect(),
        }
    }

    fn users(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn multiset(posts: &[Post], who: &str) -> Vec<String> {
        let mut v: Vec<String> = posts
            .iter()
            .filter(|p| p.user_id == who)
            .flat_map(|p| p.hashtags.clone())
            .collect();
        v.sort();
        v
    }

    #[test]
    fn preserves_volume_and_multiset() {
        let posts = vec![
            post("a", &["#one", "x", "#two"]),
            post("b", &["#three"]),
            post("a", &["#four"]),
            post("c", &["#five"]),
        ];
        let canon = Canonicalizer::default();
        let out = shuffle_hashtags(&posts, &users(&["a", "b"]), 2018, 7, &canon);
        assert_eq!(out.len(), posts.len());
        // the rejected single-character tag stays put
        assert_eq!(out[0].hashtags[1], "x");
        // c is outside the shuffled population
        assert_eq!(out[3], posts[3]);
        for (a, b) in posts.iter().zip(&out) {
            assert_eq!(a.hashtags.len(), b.hashtags.len());
            assert_eq!((a.timestamp, a.country, &a.language), (b.timestamp, b.country, &b.language));
        }
        let mut before: Vec<_> = posts[..3].iter().flat_map(|p| p.canonical_tags(&canon)).collect();
        let mut after: Vec<_> = out[..3].iter().flat_map(|p| p.canonical_tags(&canon)).collect();
        before.sort();
        after.sort();
        assert_eq!(before, after);
    }

    #[test]
    fn single_user_keeps_everything() {
        let posts = vec![post("a", &["#one", "#two"]), post("a", &["#three"])];
        let out = shuffle_hashtags(&posts, &users(&["a"]), 2018, 1, &Canonicalizer::default());
        assert_eq!(multiset(&out, "a"), vec!["one", "three", "two"]);
    }

    #[test]
    fn same_seed_same_output() {
        let posts: Vec<Post> = (0..20).map(|i| post(&format!("u{}", i % 4), &[&format!("#t{i}")])).collect();
        let who = users(&["u0", "u1", "u2", "u3"]);
        let canon = Canonicalizer::default();
        let a = shuffle_hashtags(&posts, &who, 2018, 99, &canon);
        let b = shuffle_hashtags(&posts, &who, 2018, 99, &canon);
        assert_eq!(a, b);
        assert_ne!(a, shuffle_hashtags(&posts, &who, 2018, 100, &canon));
    }

    /// Two migrants with two tags each, one IT and one FR national, both in DE.
    fn two_user_fixture() -> (Vec<Post>, Population, Atlas) {
        let posts = vec![post("a", &["#ita", "#ita"]), post("b", &["#fra", "#fra"])];
        let pop = Population::from_profiles([
            UserProfile::new("a", Some(cc("DE")), Some(cc("IT"))),
            UserProfile::new("b", Some(cc("DE")), Some(cc("FR"))),
        ]);
        (posts, pop, atlas(&[("ita", "IT"), ("fra", "FR")]))
    }

    #[test]
    fn expected_null_ha_matches_enumeration() {
        let (posts, pop, atlas) = two_user_fixture();
        let cfg = ScoreConfig {
            min_hashtags: 1,
            ..Default::default()
        };
        // Enumerate all 4! orderings of the pooled uses [ita, ita, fra, fra];
        // user a receives the first two. Expected HA(a) = pooled IT fraction = 1/2.
        let pool = ["ita", "ita", "fra", "fra"];
        let mut total = 0.0;
        let mut count = 0;
        for i in 0..4 {
            for j in 0..4 {
                if j == i {
                    continue;
                }
                total += [pool[i], pool[j]].iter().filter(|t| **t == "ita").count() as f64 / 2.0;
                count += 1;
            }
        }
        let exact = total / count as f64;
        assert_eq!(exact, 0.5);

        let model = null_distribution(
            &posts,
            &pop,
            &atlas,
            &cfg,
            4000,
            11,
            ShuffleScope::ScoredMigrants,
            &Canonicalizer::default(),
        )
        .unwrap();
        let ha_a: Vec<f64> = model.runs.iter().map(|r| r.scores.get("a").unwrap().ha).collect();
        let mean = ha_a.iter().sum::<f64>() / ha_a.len() as f64;
        assert!((mean - exact).abs() < 0.03, "{mean}");
    }

    #[test]
    fn token_path_matches_post_path() {
        let (mut posts, pop, atlas) = two_user_fixture();
        posts.push(post("a", &["#fra", "#misc"]));
        let cfg = ScoreConfig {
            min_hashtags: 1,
            ..Default::default()
        };
        let canon = Canonicalizer::default();
        let model = null_distribution(&posts, &pop, &atlas, &cfg, 3, 5, ShuffleScope::ScoredMigrants, &canon).unwrap();
        for run in &model.runs {
            let shuffled = shuffle_hashtags(&posts, &users(&["a", "b"]), 2018, run.seed, &canon);
            assert_eq!(compute_scores(&shuffled, &pop, &atlas, &cfg, &canon), run.scores);
        }
    }

    #[test]
    fn replicate_count_and_seeds() {
        let (posts, pop, atlas) = two_user_fixture();
        let cfg = ScoreConfig {
            min_hashtags: 1,
            ..Default::default()
        };
        let canon = Canonicalizer::default();
        let m = null_distribution(&posts, &pop, &atlas, &cfg, 5, 42, ShuffleScope::ScoredMigrants, &canon).unwrap();
        assert_eq!(m.runs.len(), 5);
        let seeds: BTreeSet<u64> = m.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 5);
        for r in &m.runs {
            for s in &r.scores.scores {
                assert_eq!(s.n_hashtags, 2);
            }
        }
        assert!(null_distribution(&posts, &pop, &atlas, &cfg, 0, 42, ShuffleScope::ScoredMigrants, &canon).is_err());
    }
}
