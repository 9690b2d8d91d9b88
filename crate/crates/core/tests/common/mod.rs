#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use migrant_attachment::atlas::{assign_hashtag_nationalities, Atlas};
use migrant_attachment::attachment::{
    annotate_language, compute_scores, Counting, LanguageCutoffs, LanguageTable, ScoreConfig, ScoreTable,
};
use migrant_attachment::corpus::{Canonicalizer, Post};
use migrant_attachment::geo::{label_population, LabelConfig, Population};
use migrant_attachment::synth::SynthCorpus;
use migrant_attachment::CountryCode;

pub struct Run {
    pub corpus: SynthCorpus,
    pub pop: Population,
    pub atlas: Atlas,
    pub scores: ScoreTable,
}

/// Label, atlas and scores with default settings, plus language annotation.
pub fn run_pipeline(corpus: SynthCorpus, year: i32) -> Run {
    let canon = Canonicalizer::default();
    let pop = label_population(
        &corpus.posts,
        &corpus.friends,
        &LabelConfig {
            year,
            ..Default::default()
        },
    );
    let atlas = assign_hashtag_nationalities(&corpus.posts, &pop, year, 0.5, &canon).unwrap();
    let config = ScoreConfig {
        year,
        ..Default::default()
    };
    let mut scores = compute_scores(&corpus.posts, &pop, &atlas, &config, &canon);
    let mut langs = LanguageTable::builtin();
    langs.merge(corpus.languages.clone());
    annotate_language(&mut scores, &pop, &langs, LanguageCutoffs::default());
    Run {
        corpus,
        pop,
        atlas,
        scores,
    }
}

pub fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Character-level cleaner written out longhand.
pub fn naive_canonical(raw: &str) -> Option<String> {
    let mut out = String::new();
    for ch in raw.chars() {
        if matches!(ch, ',' | '"' | '\'' | ';' | '/' | '\\' | '#') {
            continue;
        }
        for lower in ch.to_lowercase() {
            out.push(lower);
        }
    }
    let t = out.trim().to_string();
    (t.chars().count() >= 2).then_some(t)
}

#[derive(Debug, Clone, PartialEq)]
pub enum NaiveAssignment {
    Country(CountryCode),
    International,
}

/// Token -> (entropy, assignment), recounted from scratch.
pub fn naive_atlas(posts: &[Post], pop: &Population, year: i32, threshold: f64) -> BTreeMap<String, (f64, NaiveAssignment)> {
    let mut users: BTreeMap<String, BTreeMap<CountryCode, BTreeSet<String>>> = BTreeMap::new();
    for p in posts {
        if p.year() != year {
            continue;
        }
        let Some(prof) = pop.get(&p.user_id) else { continue };
        let (Some(r), Some(n)) = (prof.residence, prof.nationality) else { continue };
        if r != n {
            continue;
        }
        for raw in &p.hashtags {
            if let Some(t) = naive_canonical(raw) {
                users.entry(t).or_default().entry(n).or_default().insert(p.user_id.clone());
            }
        }
    }
    users
        .into_iter()
        .map(|(tok, by)| {
            let counts: Vec<(CountryCode, usize)> = by.into_iter().map(|(c, s)| (c, s.len())).collect();
            let total: usize = counts.iter().map(|c| c.1).sum();
            let k = counts.len();
            let h = if k == 1 {
                0.0
            } else {
                let mut acc = 0.0;
                for (_, c) in &counts {
                    let p = *c as f64 / total as f64;
                    acc -= p * p.ln();
                }
                acc / (k as f64).ln()
            };
            let mut best = counts[0];
            for c in &counts[1..] {
                if c.1 > best.1 {
                    best = *c;
                }
            }
            let a = if h <= threshold {
                NaiveAssignment::Country(best.0)
            } else {
                NaiveAssignment::International
            };
            (tok, (h, a))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveScore {
    pub user_id: String,
    pub n_hashtags: usize,
    pub n_home: usize,
    pub n_dest: usize,
}

pub fn naive_scores(
    posts: &[Post],
    pop: &Population,
    atlas: &BTreeMap<String, (f64, NaiveAssignment)>,
    year: i32,
    min_hashtags: usize,
    counting: Counting,
) -> Vec<NaiveScore> {
    let mut tokens: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for p in posts {
        if p.year() != year {
            continue;
        }
        for raw in &p.hashtags {
            if let Some(t) = naive_canonical(raw) {
                tokens.entry(p.user_id.clone()).or_default().push(t);
            }
        }
    }
    let mut out = Vec::new();
    for (user, mut toks) in tokens {
        let Some(prof) = pop.get(&user) else { continue };
        let (Some(r), Some(n)) = (prof.residence, prof.nationality) else { continue };
        if r == n {
            continue;
        }
        if counting == Counting::Distinct {
            toks.sort();
            toks.dedup();
        }
        if toks.len() < min_hashtags {
            continue;
        }
        let mut s = NaiveScore {
            user_id: user.clone(),
            n_hashtags: toks.len(),
            n_home: 0,
            n_dest: 0,
        };
        for t in &toks {
            if let Some((_, NaiveAssignment::Country(c))) = atlas.get(t) {
                if *c == n {
                    s.n_home += 1;
                } else if *c == r {
                    s.n_dest += 1;
                }
            }
        }
        out.push(s);
    }
    out
}
