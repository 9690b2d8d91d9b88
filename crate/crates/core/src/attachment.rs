//! Home and destination attachment indices.
//!
//! For a migrant `u` with nationality `n` and residence `r`, over the hashtag
//! uses of the reference year:
//!
//! ```text
//! HA(u) = uses assigned to n / all uses
//! DA(u) = uses assigned to r / all uses
//! ```
//!
//! International and unassigned tokens stay in the denominator.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{Assignment, Atlas};
use crate::corpus::{CanonicalHashtag, Canonicalizer, Post};
use crate::country::CountryCode;
use crate::error::{Error, Result};
use crate::geo::Population;
use crate::io;

pub const DEFAULT_MIN_HASHTAGS: usize = 10;

/// How hashtag uses are tallied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Counting {
    /// Every use, with multiplicity.
    #[default]
    Uses,
    /// Each distinct token once per user.
    Distinct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccClass {
    Assimilation,
    Integration,
    Marginalisation,
    Separation,
}

impl AccClass {
    pub const ALL: [AccClass; 4] = [
        AccClass::Assimilation,
        AccClass::Integration,
        AccClass::Marginalisation,
        AccClass::Separation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AccClass::Assimilation => "assimilation",
            AccClass::Integration => "integration",
            AccClass::Marginalisation => "marginalisation",
            AccClass::Separation => "separation",
        }
    }
}

impl fmt::Display for AccClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AccClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AccClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown acculturation class {s:?}")))
    }
}

/// Quadrant thresholds; "high" means strictly above the split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub ha: f64,
    pub da: f64,
}

/// Four-fold quadrant rule over (HA, DA).
pub fn classify_acculturation(ha: f64, da: f64, splits: Splits) -> AccClass {
    match (ha > splits.ha, da > splits.da) {
        (false, false) => AccClass::Marginalisation,
        (true, false) => AccClass::Separation,
        (false, true) => AccClass::Assimilation,
        (true, true) => AccClass::Integration,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttachmentScore {
    pub user_id: String,
    pub nationality: CountryCode,
    pub residence: CountryCode,
    pub ha: f64,
    pub da: f64,
    pub n_hashtags: usize,
    pub n_home: usize,
    pub n_dest: usize,
    pub acc_class: AccClass,
    pub speaks_dest_lang: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub year: i32,
    pub min_hashtags: usize,
    /// Tally used for HT(u) and both numerators.
    pub counting: Counting,
    /// Tally compared against `min_hashtags`.
    pub filter_basis: Counting,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            year: 2018,
            min_hashtags: DEFAULT_MIN_HASHTAGS,
            counting: Counting::Uses,
            filter_basis: Counting::Uses,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreTable {
    pub scores: Vec<AttachmentScore>,
    pub splits: Splits,
}

impl ScoreTable {
    pub fn from_scores(mut scores: Vec<AttachmentScore>) -> Self {
        scores.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        let splits = median_splits(&scores);
        for s in &mut scores {
            s.acc_class = classify_acculturation(s.ha, s.da, splits);
        }
        ScoreTable { scores, splits }
    }

    /// Reclassifies every score with explicit splits.
    pub fn reclassify(&mut self, splits: Splits) {
        self.splits = splits;
        for s in &mut self.scores {
            s.acc_class = classify_acculturation(s.ha, s.da, splits);
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn mean_ha(&self) -> f64 {
        mean(self.scores.iter().map(|s| s.ha))
    }

    pub fn mean_da(&self) -> f64 {
        mean(self.scores.iter().map(|s| s.da))
    }

    pub fn get(&self, user: &str) -> Option<&AttachmentScore> {
        self.scores
            .binary_search_by(|s| s.user_id.as_str().cmp(user))
            .ok()
            .map(|i| &self.scores[i])
    }
}

pub(crate) fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { (v[m - 1] + v[m]) / 2.0 } else { v[m] })
}

/// Population medians of HA and DA; zero for an empty table.
pub fn median_splits(scores: &[AttachmentScore]) -> Splits {
    let ha: Vec<f64> = scores.iter().map(|s| s.ha).collect();
    let da: Vec<f64> = scores.iter().map(|s| s.da).collect();
    Splits {
        ha: median(&ha).unwrap_or(0.0),
        da: median(&da).unwrap_or(0.0),
    }
}

/// Canonical tokens per user within `year`, in post order.
pub fn tokens_by_user<'a>(
    posts: &'a [Post],
    year: i32,
    canon: &Canonicalizer,
    keep: impl Fn(&str) -> bool,
) -> BTreeMap<&'a str, Vec<CanonicalHashtag>> {
    let mut out: BTreeMap<&str, Vec<CanonicalHashtag>> = BTreeMap::new();
    for p in posts.iter().filter(|p| p.year() == year && keep(&p.user_id)) {
        out.entry(p.user_id.as_str())
            .or_default()
            .extend(p.canonical_tags(canon));
    }
    out
}

fn tally(tokens: &[CanonicalHashtag], counting: Counting) -> Vec<&CanonicalHashtag> {
    let mut v: Vec<&CanonicalHashtag> = tokens.iter().collect();
    if counting == Counting::Distinct {
        v.sort();
        v.dedup();
    }
    v
}

/// Scores one migrant's token list. `None` when below the activity filter.
pub fn score_user(
    user_id: &str,
    nationality: CountryCode,
    residence: CountryCode,
    tokens: &[CanonicalHashtag],
    atlas: &Atlas,
    config: &ScoreConfig,
) -> Option<AttachmentScore> {
    if tally(tokens, config.filter_basis).len() < config.min_hashtags {
        return None;
    }
    let counted = tally(tokens, config.counting);
    let n_hashtags = counted.len();
    if n_hashtags == 0 {
        return None;
    }
    let (mut n_home, mut n_dest) = (0, 0);
    for t in counted {
        match atlas.assignment(t) {
            Assignment::Country(c) if c == nationality => n_home += 1,
            Assignment::Country(c) if c == residence => n_dest += 1,
            _ => {}
        }
    }
    Some(AttachmentScore {
        user_id: user_id.to_string(),
        nationality,
        residence,
        ha: n_home as f64 / n_hashtags as f64,
        da: n_dest as f64 / n_hashtags as f64,
        n_hashtags,
        n_home,
        n_dest,
        acc_class: AccClass::Marginalisation,
        speaks_dest_lang: None,
    })
}

/// One score per migrant passing the activity filter, classified with median splits.
pub fn compute_scores(
    posts: &[Post],
    pop: &Population,
    atlas: &Atlas,
    config: &ScoreConfig,
    canon: &Canonicalizer,
) -> ScoreTable {
    let tokens = tokens_by_user(posts, config.year, canon, |u| {
        pop.get(u).is_some_and(|p| p.is_migrant == Some(true))
    });
    let entries: Vec<_> = tokens.into_iter().collect();
    let scores: Vec<AttachmentScore> = entries
        .par_iter()
        .filter_map(|(u, toks)| {
            let p = pop.get(u)?;
            score_user(u, p.nationality?, p.residence?, toks, atlas, config)
        })
        .collect();
    ScoreTable::from_scores(scores)
}

/// Country -> primary official language.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LanguageTable(pub BTreeMap<CountryCode, String>);

const BUILTIN_LANGUAGES: &str = include_str!("../data/dest_languages.csv");

#[derive(Deserialize)]
struct LangRow {
    country: CountryCode,
    lang: String,
}

impl LanguageTable {
    pub fn builtin() -> Self {
        LanguageTable::read(BUILTIN_LANGUAGES.as_bytes()).expect("builtin language table parses")
    }

    /// Later rows override earlier ones, which is how a primary language is
    /// chosen for multilingual countries.
    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut m = BTreeMap::new();
        for row in io::reader(r).deserialize::<LangRow>() {
            let row = row?;
            m.insert(row.country, row.lang.trim().to_ascii_lowercase());
        }
        Ok(LanguageTable(m))
    }

    pub fn merge(&mut self, other: LanguageTable) {
        self.0.extend(other.0);
    }

    pub fn get(&self, c: CountryCode) -> Option<&str> {
        self.0.get(&c).map(String::as_str)
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut w = io::writer(w);
        w.write_record(["country", "lang"])?;
        for (c, l) in &self.0 {
            w.write_record([c.as_str(), l])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LanguageStatus {
    Speaker,
    NonSpeaker,
    Unclassified,
    /// Residence country missing from the language table.
    UnknownLanguage,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanguageCutoffs {
    pub hi: f64,
    pub lo: f64,
}

impl Default for LanguageCutoffs {
    fn default() -> Self {
        LanguageCutoffs { hi: 0.9, lo: 0.1 }
    }
}

pub fn language_status(
    score: &AttachmentScore,
    pop: &Population,
    table: &LanguageTable,
    cut: LanguageCutoffs,
) -> LanguageStatus {
    let Some(lang) = table.get(score.residence) else {
        return LanguageStatus::UnknownLanguage;
    };
    let f = pop.get(&score.user_id).map_or(0.0, |p| p.lang_fraction(lang));
    if f >= cut.hi {
        LanguageStatus::Speaker
    } else if f <= cut.lo {
        LanguageStatus::NonSpeaker
    } else {
        LanguageStatus::Unclassified
    }
}

#[derive(Clone, Debug, Default)]
pub struct LanguageCohorts {
    pub speakers: Vec<AttachmentScore>,
    pub non_speakers: Vec<AttachmentScore>,
    pub unclassified: usize,
    pub unknown_language: usize,
}

/// Sets `speaks_dest_lang` on every score.
pub fn annotate_language(scores: &mut ScoreTable, pop: &Population, table: &LanguageTable, cut: LanguageCutoffs) {
    for s in &mut scores.scores {
        s.speaks_dest_lang = match language_status(s, pop, table, cut) {
            LanguageStatus::Speaker => Some(true),
            LanguageStatus::NonSpeaker => Some(false),
            _ => None,
        };
    }
}

/// Splits scored migrants by their share of posts in the destination language.
pub fn language_cohorts(
    scores: &ScoreTable,
    pop: &Population,
    table: &LanguageTable,
    cut: LanguageCutoffs,
) -> LanguageCohorts {
    let mut out = LanguageCohorts::default();
    for s in &scores.scores {
        match language_status(s, pop, table, cut) {
            LanguageStatus::Speaker => out.speakers.push(s.clone()),
            LanguageStatus::NonSpeaker => out.non_speakers.push(s.clone()),
            LanguageStatus::Unclassified => out.unclassified += 1,
            LanguageStatus::UnknownLanguage => out.unknown_language += 1,
        }
    }
    out
}

pub const SCORE_HEADER: [&str; 10] = [
    "user_id",
    "nationality",
    "residence",
    "ha",
    "da",
    "n_hashtags",
    "n_home",
    "n_dest",
    "acc_class",
    "speaks_dest_lang",
];

fn score_record(s: &AttachmentScore) -> Vec<String> {
    vec![
        s.user_id.clone(),
        s.nationality.to_string(),
        s.residence.to_string(),
        s.ha.to_string(),
        s.da.to_string(),
        s.n_hashtags.to_string(),
        s.n_home.to_string(),
        s.n_dest.to_string(),
        s.acc_class.to_string(),
        io::fmt_opt(s.speaks_dest_lang.map(u8::from)),
    ]
}

pub fn write_scores<W: Write>(w: W, table: &ScoreTable) -> Result<()> {
    let mut w = io::writer(w);
    w.write_record(SCORE_HEADER)?;
    for s in &table.scores {
        w.write_record(score_record(s))?;
    }
    w.flush()?;
    Ok(())
}

/// Null-model scores: the score columns plus `replicate`.
pub fn write_replicate_scores<W: Write>(w: W, replicates: &[(usize, &ScoreTable)]) -> Result<()> {
    let mut w = io::writer(w);
    let mut header: Vec<&str> = SCORE_HEADER.to_vec();
    header.push("replicate");
    w.write_record(&header)?;
    for (r, table) in replicates {
        for s in &table.scores {
            let mut rec = score_record(s);
            rec.push(r.to_string());
            w.write_record(rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct ScoreRow {
    user_id: String,
    nationality: CountryCode,
    residence: CountryCode,
    ha: f64,
    da: f64,
    n_hashtags: usize,
    n_home: usize,
    n_dest: usize,
    acc_class: String,
    speaks_dest_lang: String,
    #[serde(default)]
    replicate: Option<usize>,
}

/// Reads a scores table (or a replicate table) into `(replicate, score)` rows.
pub fn read_score_rows<R: Read>(r: R) -> Result<Vec<(Option<usize>, AttachmentScore)>> {
    let mut out = Vec::new();
    for row in io::reader(r).deserialize::<ScoreRow>() {
        let row = row?;
        let speaks = if row.speaks_dest_lang.is_empty() {
            None
        } else {
            Some(io::flag(&row.speaks_dest_lang).map_err(Error::Config)?)
        };
        out.push((
            row.replicate,
            AttachmentScore {
                user_id: row.user_id,
                nationality: row.nationality,
                residence: row.residence,
                ha: row.ha,
                da: row.da,
                n_hashtags: row.n_hashtags,
                n_home: row.n_home,
                n_dest: row.n_dest,
                acc_class: row.acc_class.parse()?,
                speaks_dest_lang: speaks,
            },
        ));
    }
    Ok(out)
}

pub fn read_scores<R: Read>(r: R) -> Result<ScoreTable> {
    let scores: Vec<AttachmentScore> = read_score_rows(r)?.into_iter().map(|(_, s)| s).collect();
    let splits = median_splits(&scores);
    let mut scores = scores;
    scores.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    Ok(ScoreTable { scores, splits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::HashtagRecord;
    use crate::corpus::canonicalize_hashtag;
    use crate::country::cc;
    use crate::geo::UserProfile;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn tok(s: &str) -> CanonicalHashtag {
        canonicalize_hashtag(s).unwrap()
    }

    fn atlas(entries: &[(&str, &[(&str, usize)])]) -> Atlas {
        let records = entries
            .iter()
            .map(|(t, counts)| {
                let m = counts.iter().map(|(c, n)| (cc(c), *n)).collect();
                (tok(t), HashtagRecord::from_counts(tok(t), m, 0.5))
            })
            .collect();
        Atlas { threshold: 0.5, records }
    }

    fn post(user: &str, year: i32, tags: &[&str]) -> Post {
        Post {
            user_id: user.into(),
            timestamp: Utc.with_ymd_and_hms(year, 6, 1, 12, 0, 0).unwrap(),
            country: None,
            language: None,
            hashtags: tags.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn it_kr_fixture() -> (Vec<Post>, Population, Atlas) {
        let atlas = atlas(&[
            ("it1", &[("IT", 3)]),
            ("it2", &[("IT", 2)]),
            ("kr1", &[("KR", 5)]),
            ("world", &[("IT", 1), ("KR", 1), ("US", 1)]),
        ]);
        let posts = vec![
            post("m", 2018, &["#it1", "#it1", "#it2"]),
            post("m", 2018, &["#kr1", "#KR1"]),
            post("m", 2018, &["#world", "#world", "#world", "#world", "#world"]),
            post("m", 2017, &["#it1"]),
        ];
        let pop = Population::from_profiles([UserProfile::new("m", Some(cc("KR")), Some(cc("IT")))]);
        (posts, pop, atlas)
    }

    #[test]
    fn direct_indices() {
        let (posts, pop, atlas) = it_kr_fixture();
        let t = compute_scores(&posts, &pop, &atlas, &ScoreConfig::default(), &Canonicalizer::default());
        let s = t.get("m").unwrap();
        assert_eq!((s.n_hashtags, s.n_home, s.n_dest), (10, 3, 2));
        assert_eq!(s.ha, 0.3);
        assert_eq!(s.da, 0.2);
    }

    #[test]
    fn nine_uses_excluded() {
        let (mut posts, pop, atlas) = it_kr_fixture();
        posts[2].hashtags.pop();
        let t = compute_scores(&posts, &pop, &atlas, &ScoreConfig::default(), &Canonicalizer::default());
        assert!(t.is_empty());
    }

    #[test]
    fn distinct_counting_mode() {
        let (posts, pop, atlas) = it_kr_fixture();
        let cfg = ScoreConfig {
            counting: Counting::Distinct,
            min_hashtags: 4,
            filter_basis: Counting::Distinct,
            ..Default::default()
        };
        let t = compute_scores(&posts, &pop, &atlas, &cfg, &Canonicalizer::default());
        let s = t.get("m").unwrap();
        assert_eq!((s.n_hashtags, s.n_home, s.n_dest), (4, 2, 1));
        let strict = ScoreConfig {
            filter_basis: Counting::Distinct,
            ..Default::default()
        };
        assert!(compute_scores(&posts, &pop, &atlas, &strict, &Canonicalizer::default()).is_empty());
    }

    #[test]
    fn non_migrants_not_scored() {
        let (posts, _, atlas) = it_kr_fixture();
        let pop = Population::from_profiles([UserProfile::new("m", Some(cc("IT")), Some(cc("IT")))]);
        assert!(compute_scores(&posts, &pop, &atlas, &ScoreConfig::default(), &Canonicalizer::default()).is_empty());
    }

    #[test]
    fn quadrant_examples() {
        let s = Splits { ha: 0.1, da: 0.1 };
        assert_eq!(classify_acculturation(0.0, 0.0, Splits { ha: 0.2, da: 0.3 }), AccClass::Marginalisation);
        assert_eq!(classify_acculturation(0.9, 0.05, s), AccClass::Separation);
        assert_eq!(classify_acculturation(0.3, 0.4, s), AccClass::Integration);
        assert_eq!(classify_acculturation(0.05, 0.4, s), AccClass::Assimilation);
        // at the split counts as low
        assert_eq!(classify_acculturation(0.1, 0.1, s), AccClass::Marginalisation);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    fn score(user: &str, res: &str) -> AttachmentScore {
        AttachmentScore {
            user_id: user.into(),
            nationality: cc("IT"),
            residence: cc(res),
            ha: 0.1,
            da: 0.2,
            n_hashtags: 10,
            n_home: 1,
            n_dest: 2,
            acc_class: AccClass::Integration,
            speaks_dest_lang: None,
        }
    }

    #[test]
    fn cohorts() {
        let mut fr95 = UserProfile::new("a", Some(cc("FR")), Some(cc("IT")));
        fr95.lang_fractions = BTreeMap::from([("fr".into(), 0.95), ("it".into(), 0.05)]);
        let mut fr05 = UserProfile::new("b", Some(cc("FR")), Some(cc("IT")));
        fr05.lang_fractions = BTreeMap::from([("fr".into(), 0.05), ("it".into(), 0.95)]);
        let mut mid = UserProfile::new("c", Some(cc("FR")), Some(cc("IT")));
        mid.lang_fractions = BTreeMap::from([("fr".into(), 0.5), ("it".into(), 0.5)]);
        let pop = Population::from_profiles([fr95, fr05, mid, UserProfile::new("d", Some(cc("AQ")), Some(cc("IT")))]);
        let mut table = ScoreTable::from_scores(vec![score("a", "FR"), score("b", "FR"), score("c", "FR"), score("d", "AQ")]);
        let langs = LanguageTable::builtin();
        let c = language_cohorts(&table, &pop, &langs, LanguageCutoffs::default());
        assert_eq!(c.speakers.iter().map(|s| s.user_id.as_str()).collect::<Vec<_>>(), ["a"]);
        assert_eq!(c.non_speakers.iter().map(|s| s.user_id.as_str()).collect::<Vec<_>>(), ["b"]);
        assert_eq!((c.unclassified, c.unknown_language), (1, 1));
        annotate_language(&mut table, &pop, &langs, LanguageCutoffs::default());
        assert_eq!(table.get("a").unwrap().speaks_dest_lang, Some(true));
        assert_eq!(table.get("b").unwrap().speaks_dest_lang, Some(false));
        assert_eq!(table.get("c").unwrap().speaks_dest_lang, None);
    }

    #[test]
    fn language_override() {
        let mut t = LanguageTable::builtin();
        assert_eq!(t.get(cc("CH")), Some("de"));
        t.merge(LanguageTable::read("country,lang\nCH,fr\n".as_bytes()).unwrap());
        assert_eq!(t.get(cc("CH")), Some("fr"));
    }

    #[test]
    fn scores_csv_round_trip() {
        let (posts, pop, atlas) = it_kr_fixture();
        let t = compute_scores(&posts, &pop, &atlas, &ScoreConfig::default(), &Canonicalizer::default());
        let mut buf = Vec::new();
        write_scores(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("user_id,nationality,residence,ha,da,n_hashtags,n_home,n_dest,acc_class,speaks_dest_lang\n"));
        assert_eq!(read_scores(&buf[..]).unwrap(), t);

        let mut buf = Vec::new();
        write_replicate_scores(&mut buf, &[(0, &t), (1, &t)]).unwrap();
        let rows = read_score_rows(&buf[..]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].0, Some(1));
    }

    proptest! {
        #[test]
        fn removing_international_weakly_increases(home in 0usize..8, dest in 0usize..8, intl in 0usize..8, other in 0usize..4) {
            let atlas = atlas(&[("hh", &[("IT", 1)]), ("dd", &[("KR", 1)]), ("ww", &[("IT", 1), ("KR", 1)]), ("oo", &[("US", 2)])]);
            let mk = |intl: usize| {
                let mut v = vec![];
                v.extend(std::iter::repeat_n(tok("hh"), home));
                v.extend(std::iter::repeat_n(tok("dd"), dest));
                v.extend(std::iter::repeat_n(tok("ww"), intl));
                v.extend(std::iter::repeat_n(tok("oo"), other));
                v
            };
            let cfg = ScoreConfig { min_hashtags: 1, ..Default::default() };
            let with = score_user("u", cc("IT"), cc("KR"), &mk(intl), &atlas, &cfg);
            let without = score_user("u", cc("IT"), cc("KR"), &mk(0), &atlas, &cfg);
            if let (Some(a), Some(b)) = (with, without) {
                prop_assert!(b.ha >= a.ha && b.da >= a.da);
                prop_assert!(a.ha + a.da <= 1.0 + 1e-12);
                prop_assert!(a.n_home + a.n_dest + intl + other == a.n_hashtags);
            }
        }

        #[test]
        fn classification_invariant_under_monotone_rescale(ha in 0.0f64..1.0, da in 0.0f64..1.0, sh in 0.01f64..0.99, sd in 0.01f64..0.99) {
            prop_assume!((ha - sh).abs() > 1e-9 && (da - sd).abs() > 1e-9);
            let f = |x: f64| x.sqrt() * 3.0 + 1.0;
            let a = classify_acculturation(ha, da, Splits { ha: sh, da: sd });
            let b = classify_acculturation(f(ha), f(da), Splits { ha: f(sh), da: f(sd) });
            prop_assert_eq!(a, b);
        }
    }
}
