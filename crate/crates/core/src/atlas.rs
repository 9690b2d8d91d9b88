//! Hashtag nationality atlas.
//!
//! For each canonical hashtag we count the distinct non-migrant users of each
//! nationality who used it in the reference year, normalize the counts into a
//! distribution, and measure its normalized Shannon entropy. Tags at or below
//! the entropy threshold are assigned to their most frequent country; the
//! rest are international.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CanonicalHashtag, Canonicalizer, Post};
use crate::country::CountryCode;
use crate::error::{Error, Result};
use crate::geo::Population;
use crate::io;

pub const DEFAULT_ENTROPY_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Assignment {
    Country(CountryCode),
    International,
    Unassigned,
}

impl Assignment {
    pub fn country(&self) -> Option<CountryCode> {
        match self {
            Assignment::Country(c) => Some(*c),
            _ => None,
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assignment::Country(c) => write!(f, "{c}"),
            Assignment::International => f.write_str("international"),
            Assignment::Unassigned => f.write_str("unassigned"),
        }
    }
}

impl FromStr for Assignment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "international" => Ok(Assignment::International),
            "unassigned" => Ok(Assignment::Unassigned),
            other => CountryCode::parse(other).map(Assignment::Country),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HashtagRecord {
    pub token: CanonicalHashtag,
    pub counts: BTreeMap<CountryCode, usize>,
    pub p: BTreeMap<CountryCode, f64>,
    pub entropy: f64,
    pub assignment: Assignment,
}

impl HashtagRecord {
    pub fn from_counts(token: CanonicalHashtag, counts: BTreeMap<CountryCode, usize>, threshold: f64) -> Self {
        debug_assert!(counts.values().all(|n| *n > 0), "zero counts must be dropped");
        let p = distribution_from_counts(&counts);
        if counts.is_empty() {
            return HashtagRecord {
                token,
                counts,
                p,
                entropy: 0.0,
                assignment: Assignment::Unassigned,
            };
        }
        let entropy = entropy_from_counts(counts.values().copied());
        let assignment = if entropy <= threshold {
            Assignment::Country(top_country(&counts).expect("nonempty"))
        } else {
            Assignment::International
        };
        HashtagRecord {
            token,
            counts,
            p,
            entropy,
            assignment,
        }
    }

    pub fn n_users(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn top_fraction(&self) -> f64 {
        self.p.values().copied().fold(0.0, f64::max)
    }
}

fn distribution_from_counts(counts: &BTreeMap<CountryCode, usize>) -> BTreeMap<CountryCode, f64> {
    let total: usize = counts.values().sum();
    counts
        .iter()
        .map(|(c, n)| (*c, *n as f64 / total as f64))
        .collect()
}

/// Highest count, then smallest code.
fn top_country(counts: &BTreeMap<CountryCode, usize>) -> Option<CountryCode> {
    counts
        .iter()
        .max_by(|(ca, a), (cb, b)| a.cmp(b).then(cb.cmp(ca)))
        .map(|(c, _)| *c)
}

/// Normalized Shannon entropy of a probability vector.
///
/// Every value must be positive. A single-country distribution has entropy 0
/// and a uniform one has entropy exactly 1.
pub fn normalized_entropy<I>(p: I) -> Result<f64>
where
    I: IntoIterator<Item = f64>,
{
    let p: Vec<f64> = p.into_iter().collect();
    if p.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if p.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Config(format!("distribution values must be positive: {p:?}")));
    }
    if p.len() == 1 {
        return Ok(0.0);
    }
    if p.iter().all(|x| *x == p[0]) {
        return Ok(1.0);
    }
    let h: f64 = -p.iter().map(|x| x * x.ln()).sum::<f64>();
    Ok((h / (p.len() as f64).ln()).clamp(0.0, 1.0))
}

fn entropy_from_counts(counts: impl IntoIterator<Item = usize>) -> f64 {
    let counts: Vec<usize> = counts.into_iter().collect();
    let total: usize = counts.iter().sum();
    normalized_entropy(counts.iter().map(|n| *n as f64 / total as f64)).expect("nonempty positive counts")
}

/// Distinct native users per nationality, per canonical token, in `year`.
pub fn native_usage(
    posts: &[Post],
    pop: &Population,
    year: i32,
    canon: &Canonicalizer,
) -> HashMap<CanonicalHashtag, BTreeMap<CountryCode, usize>> {
    let mut users: HashMap<CanonicalHashtag, BTreeMap<CountryCode, BTreeSet<&str>>> = HashMap::new();
    for post in posts.iter().filter(|p| p.year() == year) {
        let Some(profile) = pop.get(&post.user_id) else { continue };
        if !profile.is_native() {
            continue;
        }
        let nat = profile.nationality.expect("native users carry a nationality");
        for tag in post.canonical_tags(canon) {
            users
                .entry(tag)
                .or_default()
                .entry(nat)
                .or_default()
                .insert(post.user_id.as_str());
        }
    }
    users
        .into_iter()
        .map(|(t, m)| (t, m.into_iter().map(|(c, s)| (c, s.len())).collect()))
        .collect()
}

/// Nationality distribution of the native users of `token` in `year`.
pub fn build_distribution(
    posts: &[Post],
    pop: &Population,
    token: &CanonicalHashtag,
    year: i32,
) -> BTreeMap<CountryCode, f64> {
    let canon = Canonicalizer::default();
    let mut users: BTreeMap<CountryCode, BTreeSet<&str>> = BTreeMap::new();
    for post in posts.iter().filter(|p| p.year() == year) {
        let Some(profile) = pop.get(&post.user_id).filter(|p| p.is_native()) else { continue };
        if post.canonical_tags(&canon).any(|t| &t == token) {
            users
                .entry(profile.nationality.expect("native"))
                .or_default()
                .insert(post.user_id.as_str());
        }
    }
    let counts = users.into_iter().map(|(c, s)| (c, s.len())).collect();
    distribution_from_counts(&counts)
}

#[derive(Clone, Debug, Default)]
pub struct Atlas {
    pub threshold: f64,
    pub records: BTreeMap<CanonicalHashtag, HashtagRecord>,
}

impl Atlas {
    pub fn assignment(&self, token: &CanonicalHashtag) -> Assignment {
        self.records
            .get(token)
            .map(|r| r.assignment)
            .unwrap_or(Assignment::Unassigned)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_assigned(&self) -> usize {
        self.records
            .values()
            .filter(|r| matches!(r.assignment, Assignment::Country(_)))
            .count()
    }

    /// Re-thresholds an existing atlas without recounting.
    pub fn with_threshold(&self, threshold: f64) -> Atlas {
        Atlas {
            threshold,
            records: self
                .records
                .values()
                .map(|r| {
                    (
                        r.token.clone(),
                        HashtagRecord::from_counts(r.token.clone(), r.counts.clone(), threshold),
                    )
                })
                .collect(),
        }
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(Error::Config(format!("entropy threshold {threshold} outside [0, 1]")))
    }
}

/// Builds the atlas for every token used by at least one native user in `year`.
pub fn assign_hashtag_nationalities(
    posts: &[Post],
    pop: &Population,
    year: i32,
    threshold: f64,
    canon: &Canonicalizer,
) -> Result<Atlas> {
    check_threshold(threshold)?;
    let usage: Vec<_> = native_usage(posts, pop, year, canon).into_iter().collect();
    let records: BTreeMap<_, _> = usage
        .into_par_iter()
        .map(|(token, counts)| (token.clone(), HashtagRecord::from_counts(token, counts, threshold)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    Ok(Atlas { threshold, records })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Entropy histogram with a dedicated bin for exactly zero entropy followed by
/// `bins` equal-width bins over (0, 1].
pub fn entropy_histogram<'a>(records: impl IntoIterator<Item = &'a HashtagRecord>, bins: usize) -> Vec<HistogramBin> {
    let entropies: Vec<f64> = records.into_iter().map(|r| r.entropy).collect();
    if entropies.is_empty() {
        return Vec::new();
    }
    let bins = bins.max(1);
    let width = 1.0 / bins as f64;
    let mut out = vec![HistogramBin {
        lo: 0.0,
        hi: 0.0,
        count: 0,
    }];
    out.extend((0..bins).map(|i| HistogramBin {
        lo: i as f64 * width,
        hi: (i + 1) as f64 * width,
        count: 0,
    }));
    for h in entropies {
        let idx = if h <= 0.0 {
            0
        } else {
            1 + ((h / width).ceil() as usize).saturating_sub(1).min(bins - 1)
        };
        out[idx].count += 1;
    }
    out
}

#[derive(Serialize, Deserialize)]
struct AtlasRow {
    token: String,
    assignment: String,
    entropy: f64,
    n_users: usize,
    top_country_fraction: f64,
}

#[derive(Serialize, Deserialize)]
struct DistRow {
    token: String,
    country: CountryCode,
    fraction: f64,
}

pub fn write_atlas<W: Write>(w: W, atlas: &Atlas) -> Result<()> {
    let mut w = io::writer(w);
    for r in atlas.records.values() {
        w.serialize(AtlasRow {
            token: r.token.to_string(),
            assignment: r.assignment.to_string(),
            entropy: r.entropy,
            n_users: r.n_users(),
            top_country_fraction: r.top_fraction(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_distributions<W: Write>(w: W, atlas: &Atlas) -> Result<()> {
    let mut w = io::writer(w);
    for r in atlas.records.values() {
        for (c, f) in &r.p {
            w.serialize(DistRow {
                token: r.token.to_string(),
                country: *c,
                fraction: *f,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an atlas back. Assignments come from the summary table; counts are
/// rebuilt from fractions when the distribution table is supplied.
pub fn read_atlas<R: Read, D: Read>(summary: R, distributions: Option<D>, threshold: f64) -> Result<Atlas> {
    let canon = Canonicalizer::default();
    let mut dists: HashMap<String, BTreeMap<CountryCode, f64>> = HashMap::new();
    if let Some(d) = distributions {
        for row in io::reader(d).deserialize::<DistRow>() {
            let row = row?;
            dists.entry(row.token).or_default().insert(row.country, row.fraction);
        }
    }
    let mut records = BTreeMap::new();
    for row in io::reader(summary).deserialize::<AtlasRow>() {
        let row = row?;
        let token = canon
            .canonicalize(&row.token)
            .filter(|t| t.as_str() == row.token)
            .ok_or_else(|| Error::Config(format!("atlas token {:?} is not canonical", row.token)))?;
        let p = dists.remove(&row.token).unwrap_or_default();
        let counts = p
            .iter()
            .map(|(c, f)| (*c, (f * row.n_users as f64).round() as usize))
            .collect();
        records.insert(
            token.clone(),
            HashtagRecord {
                token,
                counts,
                p,
                entropy: row.entropy,
                assignment: row.assignment.parse()?,
            },
        );
    }
    Ok(Atlas { threshold, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::country::cc;
    use crate::corpus::canonicalize_hashtag;
    use crate::geo::UserProfile;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn tok(s: &str) -> CanonicalHashtag {
        canonicalize_hashtag(s).unwrap()
    }

    fn post(user: &str, tags: &[&str]) -> Post {
        Post {
            user_id: user.into(),
            timestamp: Utc.with_ymd_and_hms(2018, 6, 1, 12, 0, 0).unwrap(),
            country: None,
            language: None,
            hashtags: tags.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn pop(users: &[(&str, &str, &str)]) -> Population {
        Population::from_profiles(
            users
                .iter()
                .map(|(u, r, n)| UserProfile::new(*u, Some(cc(r)), Some(cc(n)))),
        )
    }

    #[test]
    fn distribution_direct_ratio() {
        let pop = pop(&[("a", "IT", "IT"), ("b", "IT", "IT"), ("c", "IT", "IT"), ("d", "FR", "FR")]);
        let posts: Vec<Post> = ["a", "b", "c", "d"].iter().map(|u| post(u, &["#pasta"])).collect();
        let p = build_distribution(&posts, &pop, &tok("pasta"), 2018);
        assert_eq!(p, BTreeMap::from([(cc("IT"), 0.75), (cc("FR"), 0.25)]));
    }

    #[test]
    fn distribution_ignores_migrants() {
        let pop = pop(&[("m", "FR", "IT")]);
        let posts = vec![post("m", &["#pasta"])];
        assert!(build_distribution(&posts, &pop, &tok("pasta"), 2018).is_empty());
        let atlas = assign_hashtag_nationalities(&posts, &pop, 2018, 0.5, &Canonicalizer::default()).unwrap();
        assert!(atlas.is_empty());
        assert_eq!(atlas.assignment(&tok("pasta")), Assignment::Unassigned);
    }

    #[test]
    fn distribution_counts_users_once() {
        let pop = pop(&[("us", "US", "US")]);
        let posts = vec![post("us", &["#nfl", "#NFL"]), post("us", &["#nfl"])];
        // brute-force recount: distinct users per nationality
        let mut users: Vec<&str> = posts
            .iter()
            .filter(|p| p.hashtags.iter().any(|t| t.to_lowercase() == "#nfl"))
            .map(|p| p.user_id.as_str())
            .collect();
        users.dedup();
        assert_eq!(users.len(), 1);
        assert_eq!(build_distribution(&posts, &pop, &tok("nfl"), 2018), BTreeMap::from([(cc("US"), 1.0)]));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(normalized_entropy([1.0]).unwrap(), 0.0);
        assert_eq!(normalized_entropy([0.5, 0.5]).unwrap(), 1.0);
        let h = normalized_entropy([0.5, 0.25, 0.25]).unwrap();
        assert!((h - 0.946_394_630_357_186_2).abs() < 1e-12);
        assert!(matches!(normalized_entropy(Vec::<f64>::new()), Err(Error::EmptyDistribution)));
        assert!(normalized_entropy([0.5, 0.0, 0.5]).is_err());
    }

    #[test]
    fn entropy_against_frozen_high_precision_values() {
        // 50-digit reference values for count vectors
        let cases: [(&[usize], f64); 5] = [
            (&[18, 1, 1], 0.358_996_249_646_530_4),
            (&[5, 3, 2], 0.937_230_563_216_129_5),
            (&[7, 1, 1, 1], 0.678_389_824_723_519_7),
            (&[100, 1], 0.080_136_047_331_275_24),
            (
                &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20],
                0.943_072_388_006_429_3,
            ),
        ];
        for (counts, want) in cases {
            let got = entropy_from_counts(counts.iter().copied());
            assert!((got - want).abs() < 1e-12, "{counts:?}: {got} vs {want}");
        }
    }

    #[test]
    fn assignment_examples() {
        let t = tok("tag");
        let one = HashtagRecord::from_counts(t.clone(), BTreeMap::from([(cc("IT"), 4)]), 0.5);
        assert_eq!(one.assignment, Assignment::Country(cc("IT")));
        let even = HashtagRecord::from_counts(t.clone(), BTreeMap::from([(cc("IT"), 2), (cc("FR"), 2)]), 0.5);
        assert_eq!(even.assignment, Assignment::International);
        let skew = HashtagRecord::from_counts(
            t.clone(),
            BTreeMap::from([(cc("AR"), 18), (cc("BR"), 1), (cc("CL"), 1)]),
            0.5,
        );
        assert!((skew.entropy - 0.358_996_249_646_530_4).abs() < 1e-12);
        assert_eq!(skew.assignment, Assignment::Country(cc("AR")));
        // tie at the top with a permissive threshold goes to the smaller code
        let tie = HashtagRecord::from_counts(t, BTreeMap::from([(cc("IT"), 2), (cc("FR"), 2)]), 1.0);
        assert_eq!(tie.assignment, Assignment::Country(cc("FR")));
    }

    #[test]
    fn threshold_out_of_range() {
        let pop = pop(&[]);
        assert!(assign_hashtag_nationalities(&[], &pop, 2018, 1.5, &Canonicalizer::default()).is_err());
    }

    #[test]
    fn histogram_shapes() {
        assert!(entropy_histogram(std::iter::empty(), 10).is_empty());
        let t = tok("tag");
        let zero = HashtagRecord::from_counts(t.clone(), BTreeMap::from([(cc("IT"), 3)]), 0.5);
        let recs = vec![zero.clone(), zero.clone(), zero];
        let h = entropy_histogram(&recs, 10);
        assert_eq!(h[0].count, 3);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 3);
        let one = HashtagRecord::from_counts(t, BTreeMap::from([(cc("IT"), 3), (cc("FR"), 3)]), 0.5);
        let h = entropy_histogram([&one], 4);
        assert_eq!(h.last().unwrap().count, 1);
    }

    #[test]
    fn atlas_csv_round_trip() {
        let pop = pop(&[("a", "IT", "IT"), ("b", "FR", "FR"), ("c", "IT", "IT")]);
        let posts = vec![post("a", &["#pasta", "#news"]), post("b", &["#news"]), post("c", &["#pasta"])];
        let atlas = assign_hashtag_nationalities(&posts, &pop, 2018, 0.5, &Canonicalizer::default()).unwrap();
        let (mut s, mut d) = (Vec::new(), Vec::new());
        write_atlas(&mut s, &atlas).unwrap();
        write_distributions(&mut d, &atlas).unwrap();
        assert_eq!(
            String::from_utf8(s.clone()).unwrap(),
            "token,assignment,entropy,n_users,top_country_fraction\nnews,international,1.0,2,0.5\npasta,IT,0.0,2,1.0\n"
        );
        let back = read_atlas(&s[..], Some(&d[..]), 0.5).unwrap();
        assert_eq!(back.records, atlas.records);
    }

    proptest! {
        #[test]
        fn entropy_bounds_and_symmetry(counts in prop::collection::vec(1usize..50, 1..12), k in 1usize..5) {
            let h = entropy_from_counts(counts.iter().copied());
            prop_assert!((0.0..=1.0).contains(&h));
            let mut rev = counts.clone();
            rev.reverse();
            prop_assert!((entropy_from_counts(rev) - h).abs() < 1e-12);
            let scaled = entropy_from_counts(counts.iter().map(|c| c * k));
            prop_assert!((scaled - h).abs() < 1e-12);
            if counts.len() >= 2 && counts.iter().all(|c| *c == counts[0]) {
                prop_assert_eq!(h, 1.0);
            }
        }

        #[test]
        fn threshold_monotone(counts in prop::collection::vec(1usize..30, 1..6), t1 in 0.0f64..1.0, dt in 0.0f64..1.0) {
            let codes = ["AR", "BR", "CL", "DE", "ES", "FR"];
            let m: BTreeMap<_, _> = counts.iter().enumerate().map(|(i, n)| (cc(codes[i]), *n)).collect();
            let lo = HashtagRecord::from_counts(tok("x1"), m.clone(), t1);
            let hi = HashtagRecord::from_counts(tok("x1"), m.clone(), (t1 + dt).min(1.0));
            if let Assignment::Country(c) = lo.assignment {
                prop_assert_eq!(hi.assignment, Assignment::Country(c));
                let max = lo.p.values().copied().fold(0.0, f64::max);
                prop_assert_eq!(lo.p[&c], max);
            }
        }
    }
}
