//! Deterministic synthetic corpora with planted labels and attachment values.
//!
//! Every country gets a private tag vocabulary (`it_tag_0001`, ...) used by
//! its natives, plus a shared `intl_0001` vocabulary used everywhere. Migrants
//! draw home, destination and shared tags with class-dependent probabilities,
//! and the realized counts are written to a ground-truth table so scores can be
//! recomputed by prefix counting alone.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{Duration, TimeZone, Utc};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attachment::{classify_acculturation, AccClass, AttachmentScore, LanguageTable, Splits};
use crate::corpus::{canonicalize_hashtag, write_friends_to, write_posts_to, FriendEdge, FriendGraph, Post};
use crate::country::CountryCode;
use crate::covariates::{HofstedeTable, PairCovariates, PairTable};
use crate::error::{Error, Result};
use crate::io;

/// Ten countries with distinct primary languages.
pub const DEFAULT_COUNTRIES: [&str; 10] = ["IT", "FR", "DE", "ES", "GB", "BR", "JP", "KR", "TR", "NL"];

const GEO_TAG_RATE: f64 = 0.85;
const JUNK_TAG_RATE: f64 = 0.05;
const SPEAKER_SHARE: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSpec {
    pub n_users: usize,
    pub migrant_fraction: f64,
    pub countries: Vec<CountryCode>,
    pub acc_mix: BTreeMap<AccClass, f64>,
    /// Inclusive range of in-year hashtag uses per user.
    pub tags_per_user: [usize; 2],
    /// Probability that a planted home or destination tag comes from the
    /// country's own vocabulary rather than the shared one.
    pub country_tag_specificity: f64,
    /// Probability that a native's country tag is borrowed from another country.
    pub noise: f64,
    /// Fraction of a native's tags drawn from their country's vocabulary.
    pub native_country_share: f64,
    pub vocab_per_country: usize,
    pub shared_vocab: usize,
    /// Assimilated and integrated migrants post in the destination language;
    /// separated and marginalised ones mostly do not.
    pub plant_language: bool,
    pub year: i32,
    pub seed: u64,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec {
            n_users: 10_000,
            migrant_fraction: 0.095,
            countries: DEFAULT_COUNTRIES.iter().map(|c| c.parse().unwrap()).collect(),
            acc_mix: AccClass::ALL.iter().map(|c| (*c, 0.25)).collect(),
            tags_per_user: [20, 60],
            country_tag_specificity: 0.8,
            noise: 0.01,
            native_country_share: 0.6,
            vocab_per_country: 150,
            shared_vocab: 60,
            plant_language: true,
            year: 2018,
            seed: 42,
        }
    }
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_users == 0 {
            return bad("n_users must be at least 1".into());
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        for (name, v) in [
            ("migrant_fraction", self.migrant_fraction),
            ("country_tag_specificity", self.country_tag_specificity),
            ("noise", self.noise),
            ("native_country_share", self.native_country_share),
        ] {
            if !unit(v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        let mut seen = self.countries.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.countries.len() || seen.len() < 2 {
            return bad("need at least two distinct countries".into());
        }
        let total: f64 = self.acc_mix.values().sum();
        if self.acc_mix.values().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return bad(format!("acc_mix fractions must be non-negative and sum to 1 (got {total})"));
        }
        let [lo, hi] = self.tags_per_user;
        if lo == 0 || lo > hi {
            return bad(format!("tags_per_user [{lo}, {hi}] must satisfy 1 <= min <= max"));
        }
        if self.vocab_per_country == 0 || self.shared_vocab == 0 {
            return bad("vocabularies must be non-empty".into());
        }
        if self.n_users - self.n_migrants() < self.countries.len() {
            return bad("every country needs at least one native".into());
        }
        Ok(())
    }

    pub fn n_migrants(&self) -> usize {
        (self.n_users as f64 * self.migrant_fraction).round() as usize
    }
}

/// One line of the ground-truth table. Natives carry no class or planted values.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthRow {
    pub user_id: String,
    pub residence: CountryCode,
    pub nationality: CountryCode,
    pub acc_class: Option<AccClass>,
    pub planted_ha: Option<f64>,
    pub planted_da: Option<f64>,
    /// In-year hashtag uses after canonicalization.
    pub n_tags: usize,
}

impl TruthRow {
    pub fn is_migrant(&self) -> bool {
        self.acc_class.is_some()
    }

    pub fn n_home(&self) -> Option<usize> {
        self.planted_ha.map(|f| (f * self.n_tags as f64).round() as usize)
    }

    pub fn n_dest(&self) -> Option<usize> {
        self.planted_da.map(|f| (f * self.n_tags as f64).round() as usize)
    }
}

pub const TRUTH_HEADER: [&str; 7] = [
    "user_id",
    "residence",
    "nationality",
    "acc_class",
    "planted_ha",
    "planted_da",
    "n_tags",
];

pub fn write_truth<W: Write>(w: W, rows: &[TruthRow]) -> Result<()> {
    let mut w = io::writer(w);
    w.write_record(TRUTH_HEADER)?;
    for r in rows {
        w.write_record([
            r.user_id.clone(),
            r.residence.to_string(),
            r.nationality.to_string(),
            io::fmt_opt(r.acc_class),
            io::fmt_opt(r.planted_ha),
            io::fmt_opt(r.planted_da),
            r.n_tags.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct TruthRecord {
    user_id: String,
    residence: CountryCode,
    nationality: CountryCode,
    acc_class: String,
    planted_ha: String,
    planted_da: String,
    n_tags: usize,
}

pub fn read_truth<R: Read>(r: R) -> Result<Vec<TruthRow>> {
    io::reader(r)
        .deserialize::<TruthRecord>()
        .map(|rec| {
            let rec = rec?;
            Ok(TruthRow {
                user_id: rec.user_id,
                residence: rec.residence,
                nationality: rec.nationality,
                acc_class: match rec.acc_class.as_str() {
                    "" => None,
                    s => Some(s.parse()?),
                },
                planted_ha: io::opt_f64(&rec.planted_ha).map_err(Error::Config)?,
                planted_da: io::opt_f64(&rec.planted_da).map_err(Error::Config)?,
                n_tags: rec.n_tags,
            })
        })
        .collect()
}

/// Country whose private vocabulary a token belongs to, if any.
pub fn planted_country(token: &str) -> Option<CountryCode> {
    let (prefix, rest) = token.split_once("_tag_")?;
    if prefix.len() != 2 || rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    CountryCode::parse(prefix).ok()
}

fn country_tag(c: CountryCode, k: usize) -> String {
    format!("{}_tag_{:04}", c.as_str().to_ascii_lowercase(), k + 1)
}

fn shared_tag(k: usize) -> String {
    format!("intl_{:04}", k + 1)
}

/// HA and DA recomputed by prefix counting over the raw posts, for every
/// migrant in the truth table. No filtering on volume.
pub fn oracle_scores(truth: &[TruthRow], posts: &[Post], year: i32) -> Vec<AttachmentScore> {
    let mut tallies: BTreeMap<&str, (usize, BTreeMap<CountryCode, usize>)> = BTreeMap::new();
    for p in posts.iter().filter(|p| p.year() == year) {
        let entry = tallies.entry(p.user_id.as_str()).or_default();
        for raw in &p.hashtags {
            if let Some(tok) = canonicalize_hashtag(raw) {
                entry.0 += 1;
                if let Some(c) = planted_country(tok.as_str()) {
                    *entry.1.entry(c).or_default() += 1;
                }
            }
        }
    }
    truth
        .iter()
        .filter_map(|t| {
            let class = t.acc_class?;
            let (n, by_country) = tallies.get(t.user_id.as_str()).cloned().unwrap_or_default();
            let n_home = by_country.get(&t.nationality).copied().unwrap_or(0);
            let n_dest = by_country.get(&t.residence).copied().unwrap_or(0);
            let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
            Some(AttachmentScore {
                user_id: t.user_id.clone(),
                nationality: t.nationality,
                residence: t.residence,
                ha: frac(n_home),
                da: frac(n_dest),
                n_hashtags: n,
                n_home,
                n_dest,
                acc_class: class,
                speaks_dest_lang: None,
            })
        })
        .collect()
}

/// A generated corpus with everything needed to run and check the pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub posts: Vec<Post>,
    pub friends: FriendGraph,
    pub truth: Vec<TruthRow>,
    pub hofstede: HofstedeTable,
    pub pairs: PairTable,
    pub languages: LanguageTable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthPaths {
    pub posts: PathBuf,
    pub friends: PathBuf,
    pub truth: PathBuf,
    pub hofstede: PathBuf,
    pub pairs: PathBuf,
    pub languages: PathBuf,
}

impl SynthPaths {
    pub fn in_dir(dir: &Path) -> Self {
        SynthPaths {
            posts: dir.join("posts.jsonl"),
            friends: dir.join("friends.csv"),
            truth: dir.join("truth.csv"),
            hofstede: dir.join("hofstede.csv"),
            pairs: dir.join("pairs.csv"),
            languages: dir.join("dest_languages.csv"),
        }
    }
}

impl SynthCorpus {
    /// Writes all six files into `dir`, each preceded by `header` lines if given.
    pub fn write(&self, dir: &Path, header: &str) -> Result<SynthPaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = SynthPaths::in_dir(dir);
        let emit = |path: &Path, body: &dyn Fn(&mut Vec<u8>) -> Result<()>| -> Result<()> {
            let mut buf = header.as_bytes().to_vec();
            body(&mut buf)?;
            std::fs::write(path, buf).map_err(|e| Error::io(path, e))
        };
        emit(&paths.posts, &|b| write_posts_to(b, &self.posts))?;
        emit(&paths.friends, &|b| write_friends_to(b, &self.friends))?;
        emit(&paths.truth, &|b| write_truth(b, &self.truth))?;
        emit(&paths.hofstede, &|b| self.hofstede.write(b))?;
        emit(&paths.pairs, &|b| self.pairs.write(b))?;
        emit(&paths.languages, &|b| self.languages.write(b))?;
        Ok(paths)
    }

    pub fn migrants(&self) -> impl Iterator<Item = &TruthRow> {
        self.truth.iter().filter(|t| t.is_migrant())
    }
}

enum LangPlan {
    Fixed(Option<String>),
    /// (home language, destination language, share of posts in the destination language)
    Mixed(Option<String>, Option<String>, f64),
}

struct Builder<'a> {
    rng: ChaCha8Rng,
    year: i32,
    langs: &'a LanguageTable,
    vocab: usize,
    shared: usize,
    posts: Vec<Post>,
    edges: Vec<FriendEdge>,
    truth: Vec<TruthRow>,
}

impl<'a> Builder<'a> {
    fn new(seed: u64, year: i32, langs: &'a LanguageTable, vocab: usize, shared: usize) -> Self {
        Builder {
            rng: ChaCha8Rng::seed_from_u64(seed),
            year,
            langs,
            vocab,
            shared,
            posts: Vec::new(),
            edges: Vec::new(),
            truth: Vec::new(),
        }
    }

    fn lang(&self, c: CountryCode) -> Option<String> {
        self.langs.get(c).map(str::to_string)
    }

    fn n_tags(&mut self, range: [usize; 2]) -> usize {
        self.rng.gen_range(range[0]..=range[1])
    }

    fn own_tag(&mut self, c: CountryCode) -> String {
        let k = self.rng.gen_range(0..self.vocab);
        country_tag(c, k)
    }

    fn shared_tag(&mut self) -> String {
        let k = self.rng.gen_range(0..self.shared);
        shared_tag(k)
    }

    /// A planted home or destination tag: private with probability `specificity`.
    fn planted_tag(&mut self, c: CountryCode, specificity: f64) -> (String, bool) {
        if self.rng.gen_bool(specificity) {
            (self.own_tag(c), true)
        } else {
            (self.shared_tag(), false)
        }
    }

    fn native_tags(&mut self, home: CountryCode, countries: &[CountryCode], n: usize, share: f64, noise: f64) -> Vec<String> {
        (0..n)
            .map(|_| {
                if self.rng.gen_bool(share) {
                    let c = if countries.len() > 1 && self.rng.gen_bool(noise) {
                        let others: Vec<CountryCode> = countries.iter().copied().filter(|c| *c != home).collect();
                        *others.choose(&mut self.rng).unwrap()
                    } else {
                        home
                    };
                    self.own_tag(c)
                } else {
                    self.shared_tag()
                }
            })
            .collect()
    }

    /// Returns (tags, realized home uses, realized destination uses).
    fn migrant_tags(
        &mut self,
        nat: CountryCode,
        res: CountryCode,
        p_home: f64,
        p_dest: f64,
        specificity: f64,
        n: usize,
    ) -> (Vec<String>, usize, usize) {
        let (mut home, mut dest) = (0, 0);
        let tags = (0..n)
            .map(|_| {
                let r: f64 = self.rng.gen();
                if r < p_home {
                    let (t, private) = self.planted_tag(nat, specificity);
                    home += private as usize;
                    t
                } else if r < p_home + p_dest {
                    let (t, private) = self.planted_tag(res, specificity);
                    dest += private as usize;
                    t
                } else {
                    self.shared_tag()
                }
            })
            .collect();
        (tags, home, dest)
    }

    /// Varies the surface form while keeping the canonical token.
    fn raw_form(&mut self, tok: &str) -> String {
        match self.rng.gen_range(0..6) {
            0 => format!("#{}", tok.to_uppercase()),
            1 => {
                let mut c = tok.chars();
                let first = c.next().map(|f| f.to_uppercase().collect::<String>()).unwrap_or_default();
                format!("#{first}{}", c.as_str())
            }
            2 => format!("{tok};"),
            3 => {
                let mid = tok.len() / 2;
                format!("#{}'{}", &tok[..mid], &tok[mid..])
            }
            _ => format!("#{tok}"),
        }
    }

    fn timestamp(&mut self, year: i32) -> chrono::DateTime<Utc> {
        let start = Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap();
        let day = self.rng.gen_range(0..365);
        let secs = self.rng.gen_range(0..86_400);
        start + Duration::days(day) + Duration::seconds(secs)
    }

    /// Emits a user's posts: in-year posts geo-tagged at `here` carrying `tags`,
    /// plus `earlier` untagged-by-year posts geo-tagged at the given country.
    fn emit(&mut self, user: &str, here: CountryCode, mut tags: Vec<String>, earlier: Option<(CountryCode, usize)>, plan: LangPlan) {
        tags.shuffle(&mut self.rng);
        let mut posts = Vec::new();
        let mut rest = tags.as_slice();
        while !rest.is_empty() {
            let k = self.rng.gen_range(1..=4).min(rest.len());
            let (chunk, tail) = rest.split_at(k);
            rest = tail;
            let mut hashtags: Vec<String> = chunk.iter().map(|t| self.raw_form(t)).collect();
            if self.rng.gen_bool(JUNK_TAG_RATE) {
                hashtags.push(["#x", "#", "a", "#;"][self.rng.gen_range(0..4)].to_string());
            }
            let geo = posts.is_empty() || self.rng.gen_bool(GEO_TAG_RATE);
            posts.push(Post {
                user_id: user.to_string(),
                timestamp: self.timestamp(self.year),
                country: geo.then_some(here),
                language: None,
                hashtags,
            });
        }
        if let Some((home, n)) = earlier {
            for _ in 0..n {
                let tag = self.own_tag(home);
                posts.push(Post {
                    user_id: user.to_string(),
                    timestamp: self.timestamp(self.year - 1),
                    country: Some(home),
                    language: None,
                    hashtags: vec![format!("#{tag}")],
                });
            }
        }
        match plan {
            LangPlan::Fixed(l) => posts.iter_mut().for_each(|p| p.language = l.clone()),
            LangPlan::Mixed(home, dest, share) => {
                let n = posts.len();
                let k = if share >= 0.5 {
                    (share * n as f64).ceil() as usize
                } else {
                    (share * n as f64).floor() as usize
                };
                let chosen = index::sample(&mut self.rng, n, k.min(n));
                posts.iter_mut().for_each(|p| p.language = home.clone());
                for i in chosen.iter() {
                    posts[i].language = dest.clone();
                }
            }
        }
        posts.sort_by_key(|a| a.timestamp);
        self.posts.extend(posts);
    }

    fn befriend(&mut self, user: &str, pool: &[String], k: usize) {
        let candidates: Vec<&String> = pool.iter().filter(|f| *f != user).collect();
        for f in candidates.choose_multiple(&mut self.rng, k) {
            self.edges.push(FriendEdge {
                user_id: user.to_string(),
                friend_id: (*f).clone(),
            });
        }
    }

    /// Natives for each country; every private and shared tag gets at least one
    /// native user per country that owns it.
    fn natives(
        &mut self,
        natives: &BTreeMap<CountryCode, Vec<String>>,
        countries: &[CountryCode],
        tags_per_user: [usize; 2],
        share: f64,
        noise: f64,
    ) {
        let mut forced: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (ci, (c, users)) in natives.iter().enumerate() {
            for k in 0..self.vocab {
                forced.entry(&users[k % users.len()]).or_default().push(country_tag(*c, k));
            }
            for k in 0..self.shared {
                forced.entry(&users[(k + ci) % users.len()]).or_default().push(shared_tag(k));
            }
        }
        for (c, users) in natives {
            let lang = self.lang(*c);
            for u in users {
                let n = self.n_tags(tags_per_user);
                let mut tags = self.native_tags(*c, countries, n, share, noise);
                tags.extend(forced.remove(u.as_str()).unwrap_or_default());
                let n_tags = tags.len();
                self.emit(u, *c, tags, None, LangPlan::Fixed(lang.clone()));
                self.befriend(u, users, 2);
                self.truth.push(TruthRow {
                    user_id: u.clone(),
                    residence: *c,
                    nationality: *c,
                    acc_class: None,
                    planted_ha: None,
                    planted_da: None,
                    n_tags,
                });
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn migrant(
        &mut self,
        user: &str,
        nat: CountryCode,
        res: CountryCode,
        class: AccClass,
        (p_home, p_dest): (f64, f64),
        specificity: f64,
        n: usize,
        dest_lang_share: f64,
        friends: &[String],
    ) {
        let (tags, home, dest) = self.migrant_tags(nat, res, p_home, p_dest, specificity, n);
        let earlier = self.rng.gen_range(3..=6);
        let plan = LangPlan::Mixed(self.lang(nat), self.lang(res), dest_lang_share);
        self.emit(user, res, tags, Some((nat, earlier)), plan);
        self.befriend(user, friends, 3);
        self.truth.push(TruthRow {
            user_id: user.to_string(),
            residence: res,
            nationality: nat,
            acc_class: Some(class),
            planted_ha: Some(home as f64 / n as f64),
            planted_da: Some(dest as f64 / n as f64),
            n_tags: n,
        });
    }

    fn finish(mut self, countries: &[CountryCode], pairs: PairTable) -> SynthCorpus {
        self.truth.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        let hof = HofstedeTable::builtin();
        SynthCorpus {
            posts: self.posts,
            friends: FriendGraph::from_edges(self.edges),
            truth: self.truth,
            hofstede: HofstedeTable(
                countries
                    .iter()
                    .filter_map(|c| hof.get(*c).map(|s| (*c, s.clone())))
                    .collect(),
            ),
            pairs,
            languages: LanguageTable(
                countries
                    .iter()
                    .filter_map(|c| self.langs.get(*c).map(|l| (*c, l.to_string())))
                    .collect(),
            ),
        }
    }
}

/// Draws (p_home, p_dest) for a planted class.
fn class_probabilities(rng: &mut ChaCha8Rng, class: AccClass) -> (f64, f64) {
    let high = rng.gen_range(0.60..=0.75);
    let mid = (rng.gen_range(0.35..=0.45), rng.gen_range(0.35..=0.45));
    let low = (rng.gen_range(0.0..=0.05), rng.gen_range(0.0..=0.05));
    match class {
        AccClass::Separation => (high, low.1),
        AccClass::Assimilation => (low.0, high),
        AccClass::Integration => mid,
        AccClass::Marginalisation => low,
    }
}

/// Largest-remainder split of `n` into the mix proportions.
fn apportion(n: usize, mix: &BTreeMap<AccClass, f64>) -> Vec<AccClass> {
    let mut counts: Vec<(AccClass, usize, f64)> = mix
        .iter()
        .map(|(c, f)| {
            let exact = f * n as f64;
            (*c, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = counts.iter().map(|c| c.1).sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|a, b| counts[*b].2.total_cmp(&counts[*a].2).then(a.cmp(b)));
    for i in order.into_iter().take(n.saturating_sub(assigned)) {
        counts[i].1 += 1;
    }
    counts
        .into_iter()
        .flat_map(|(c, k, _)| std::iter::repeat_n(c, k))
        .collect()
}

fn random_pairs(rng: &mut ChaCha8Rng, countries: &[CountryCode], langs: &LanguageTable, contig: impl Fn(CountryCode, CountryCode) -> Option<bool>) -> PairTable {
    let mut rows = Vec::new();
    for (i, a) in countries.iter().enumerate() {
        for b in &countries[i + 1..] {
            let same_lang = langs.get(*a).is_some() && langs.get(*a) == langs.get(*b);
            rows.push(PairCovariates {
                origin: *a,
                destination: *b,
                distcap: (rng.gen_range(300.0..12_000.0_f64) * 10.0).round() / 10.0,
                contig: contig(*a, *b).unwrap_or_else(|| rng.gen_bool(0.2)),
                comlang_off: same_lang || rng.gen_bool(0.1),
                csl: if same_lang { 1.0 } else { (rng.gen_range(0.0..0.4_f64) * 100.0).round() / 100.0 },
                cnl: if same_lang { 1.0 } else { (rng.gen_range(0.0..0.2_f64) * 100.0).round() / 100.0 },
            });
        }
    }
    PairTable::from_rows(rows).expect("generated pair covariates are in range")
}

fn user_id(i: usize) -> String {
    format!("u{i:06}")
}

/// Generates a corpus for `spec`. Same spec, same bytes.
pub fn generate(spec: &PopulationSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let langs = LanguageTable::builtin();
    let mut b = Builder::new(spec.seed, spec.year, &langs, spec.vocab_per_country, spec.shared_vocab);
    let n = spec.n_users;
    let m = spec.n_migrants();
    let is_migrant = |i: usize| (i + 1) * m / n > i * m / n;

    let mut natives: BTreeMap<CountryCode, Vec<String>> = BTreeMap::new();
    let mut migrant_ids = Vec::new();
    let mut native_idx = 0;
    for i in 0..n {
        if is_migrant(i) {
            migrant_ids.push(user_id(i));
        } else {
            let c = spec.countries[native_idx % spec.countries.len()];
            natives.entry(c).or_default().push(user_id(i));
            native_idx += 1;
        }
    }
    let mut classes = apportion(migrant_ids.len(), &spec.acc_mix);
    classes.shuffle(&mut b.rng);

    b.natives(&natives, &spec.countries, spec.tags_per_user, spec.native_country_share, spec.noise);
    for (u, class) in migrant_ids.iter().zip(classes) {
        let nat = *spec.countries.choose(&mut b.rng).unwrap();
        let others: Vec<CountryCode> = spec.countries.iter().copied().filter(|c| *c != nat).collect();
        let res = *others.choose(&mut b.rng).unwrap();
        let probs = class_probabilities(&mut b.rng, class);
        let n_tags = b.n_tags(spec.tags_per_user);
        let share = match (spec.plant_language, class) {
            (false, _) => 0.5,
            (true, AccClass::Assimilation | AccClass::Integration) => SPEAKER_SHARE,
            (true, _) => 1.0 - SPEAKER_SHARE,
        };
        b.migrant(u, nat, res, class, probs, spec.country_tag_specificity, n_tags, share, &natives[&nat]);
    }
    let pairs = random_pairs(&mut b.rng, &spec.countries, &langs, |_, _| None);
    Ok(b.finish(&spec.countries, pairs))
}

/// Population where destination attachment depends on the destination's
/// regime, which the pair table exposes as `contig`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoRegimeSpec {
    pub origins: Vec<CountryCode>,
    /// Destinations where migrants use many destination tags (`contig` = 1).
    pub high: Vec<CountryCode>,
    pub low: Vec<CountryCode>,
    pub natives_per_country: usize,
    /// Smallest number of migrants per (origin, destination) pair.
    pub migrants_per_pair: usize,
    pub tags_per_user: [usize; 2],
    pub high_da: f64,
    pub low_da: f64,
    /// Half-width of the uniform spread around each regime's DA.
    pub da_spread: f64,
    pub ha_range: [f64; 2],
    pub year: i32,
    pub seed: u64,
}

impl Default for TwoRegimeSpec {
    fn default() -> Self {
        let cs = |v: &[&str]| v.iter().map(|c| c.parse().unwrap()).collect();
        TwoRegimeSpec {
            origins: cs(&["IT", "FR", "DE", "ES"]),
            high: cs(&["GB", "NL", "PL"]),
            low: cs(&["JP", "KR", "BR"]),
            natives_per_country: 30,
            migrants_per_pair: 4,
            tags_per_user: [30, 60],
            high_da: 0.35,
            low_da: 0.08,
            da_spread: 0.08,
            ha_range: [0.05, 0.35],
            year: 2018,
            seed: 7,
        }
    }
}

pub fn generate_two_regime(spec: &TwoRegimeSpec) -> Result<SynthCorpus> {
    let all: Vec<CountryCode> = spec.origins.iter().chain(&spec.high).chain(&spec.low).copied().collect();
    let mut sorted = all.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != all.len() {
        return Err(Error::Config("origins and destinations must be distinct".into()));
    }
    if spec.natives_per_country == 0 || spec.migrants_per_pair == 0 {
        return Err(Error::Config("need natives and migrants in every group".into()));
    }
    let langs = LanguageTable::builtin();
    let mut b = Builder::new(spec.seed, spec.year, &langs, 40, 30);
    let mut next = 0;
    let mut natives: BTreeMap<CountryCode, Vec<String>> = BTreeMap::new();
    for c in &sorted {
        for _ in 0..spec.natives_per_country {
            natives.entry(*c).or_default().push(user_id(next));
            next += 1;
        }
    }
    b.natives(&natives, &sorted, spec.tags_per_user, 0.6, 0.0);
    let dests: Vec<(CountryCode, bool)> = spec
        .high
        .iter()
        .map(|c| (*c, true))
        .chain(spec.low.iter().map(|c| (*c, false)))
        .collect();
    for (oi, o) in spec.origins.iter().enumerate() {
        for (di, (d, high)) in dests.iter().enumerate() {
            // uneven flows so group means of the pair covariates differ
            let weight = if *high { 1 + (oi + di) % 3 } else { 2 + 2 * (oi % 2) };
            let count = spec.migrants_per_pair * weight;
            for _ in 0..count {
                let centre = if *high { spec.high_da } else { spec.low_da };
                let p_dest = (centre + b.rng.gen_range(-spec.da_spread..=spec.da_spread)).clamp(0.0, 1.0);
                let p_home = b.rng.gen_range(spec.ha_range[0]..=spec.ha_range[1]);
                let class = classify_acculturation(p_home, p_dest, Splits { ha: 0.2, da: 0.2 });
                let n = b.n_tags(spec.tags_per_user);
                let u = user_id(next);
                next += 1;
                b.migrant(&u, *o, *d, class, (p_home, p_dest.min(1.0 - p_home)), 1.0, n, 0.5, &natives[o]);
            }
        }
    }
    let high = spec.high.clone();
    let pairs = random_pairs(&mut b.rng, &all, &langs, |a, c| Some(high.contains(&a) || high.contains(&c)));
    Ok(b.finish(&all, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> PopulationSpec {
        PopulationSpec {
            n_users: 600,
            migrant_fraction: 0.2,
            vocab_per_country: 20,
            shared_vocab: 10,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_bytes() {
        let a = generate(&small(5)).unwrap();
        let b = generate(&small(5)).unwrap();
        assert_eq!(a, b);
        let c = generate(&small(6)).unwrap();
        assert_ne!(a.posts, c.posts);
    }

    #[test]
    fn no_migrants() {
        let mut s = small(1);
        s.migrant_fraction = 0.0;
        let g = generate(&s).unwrap();
        assert_eq!(g.migrants().count(), 0);
    }

    #[test]
    fn balanced_classes_and_fraction() {
        let s = small(2);
        let g = generate(&s).unwrap();
        assert_eq!(g.migrants().count(), 120);
        let mut per: BTreeMap<AccClass, usize> = BTreeMap::new();
        for t in g.migrants() {
            *per.entry(t.acc_class.unwrap()).or_default() += 1;
        }
        assert!(per.values().all(|v| *v == 30));
    }

    #[test]
    fn oracle_matches_planted_counts() {
        let s = small(3);
        let g = generate(&s).unwrap();
        let oracle = oracle_scores(&g.truth, &g.posts, s.year);
        assert_eq!(oracle.len(), g.migrants().count());
        for (o, t) in oracle.iter().zip(g.migrants()) {
            assert_eq!(o.user_id, t.user_id);
            assert_eq!(o.n_hashtags, t.n_tags);
            assert_eq!(Some(o.n_home), t.n_home());
            assert_eq!(Some(o.n_dest), t.n_dest());
            assert_eq!(Some(o.ha), t.planted_ha);
        }
    }

    #[test]
    fn only_planted_vocab_sums_to_one() {
        // every tag is home or destination: HA + DA = 1
        let langs = LanguageTable(BTreeMap::new());
        let mut b = Builder::new(1, 2018, &langs, 5, 5);
        let (it, fr) = (CountryCode::parse("IT").unwrap(), CountryCode::parse("FR").unwrap());
        b.migrant("m", it, fr, AccClass::Integration, (0.5, 0.5), 1.0, 40, 0.5, &[]);
        let truth = b.truth.clone();
        let o = oracle_scores(&truth, &b.posts, 2018);
        assert_eq!(o[0].n_home + o[0].n_dest, o[0].n_hashtags);
        assert!((o[0].ha + o[0].da - 1.0).abs() < 1e-12);
    }

    #[test]
    fn planted_prefix_parsing() {
        assert_eq!(planted_country("it_tag_0001"), CountryCode::parse("IT").ok());
        assert_eq!(planted_country("intl_0001"), None);
        assert_eq!(planted_country("int_tag_0001"), None);
        assert_eq!(planted_country("it_tag_"), None);
        assert_eq!(planted_country("xx_tag_0001"), None);
    }

    #[test]
    fn truth_round_trip() {
        let g = generate(&small(4)).unwrap();
        let mut buf = Vec::new();
        write_truth(&mut buf, &g.truth).unwrap();
        assert_eq!(read_truth(&buf[..]).unwrap(), g.truth);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = small(1);
        s.acc_mix.insert(AccClass::Separation, 0.5);
        assert!(generate(&s).is_err());
        let mut s = small(1);
        s.tags_per_user = [10, 5];
        assert!(generate(&s).is_err());
        let mut s = small(1);
        s.n_users = 5;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn apportion_largest_remainder() {
        let mix: BTreeMap<AccClass, f64> = AccClass::ALL.iter().map(|c| (*c, 0.25)).collect();
        assert_eq!(apportion(7, &mix).len(), 7);
        let mix = BTreeMap::from([(AccClass::Separation, 1.0)]);
        assert_eq!(apportion(3, &mix), vec![AccClass::Separation; 3]);
    }

    #[test]
    fn two_regime_pairs() {
        let s = TwoRegimeSpec::default();
        let g = generate_two_regime(&s).unwrap();
        let p = g.pairs.get(s.origins[0], s.high[0]).unwrap();
        assert!(p.contig);
        assert!(!g.pairs.get(s.origins[0], s.low[0]).unwrap().contig);
        assert!(g.migrants().count() > 100);
    }
}
