//! Residence and nationality labeling.
//!
//! Residence is the country with the most distinct calendar days carrying a
//! geo-tagged post in the reference year. Nationality is a weighted vote over
//! the user's own all-time geo-tags and the dominant countries of the accounts
//! they follow. A migrant is a user whose two labels differ.
//!
//! Labeling runs in two passes: first every user's all-time dominant country,
//! then nationality using the (frozen) dominant countries of friends.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{FriendGraph, Post};
use crate::country::CountryCode;
use crate::error::{Error, Result};
use crate::io;

/// Weights of the nationality vote. The language term is off by default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NationalityWeights {
    pub self_posts: f64,
    pub friends: f64,
    pub language: f64,
}

impl Default for NationalityWeights {
    fn default() -> Self {
        NationalityWeights {
            self_posts: 0.5,
            friends: 0.5,
            language: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    pub year: i32,
    pub weights: NationalityWeights,
    /// Minimum number of geo-tagged posts (or, for nationality, geo-posts plus
    /// labeled friends) before a label is assigned. Zero behaves like one.
    pub min_evidence: usize,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            year: 2018,
            weights: NationalityWeights::default(),
            min_evidence: 0,
        }
    }
}

impl LabelConfig {
    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        if [w.self_posts, w.friends, w.language]
            .iter()
            .any(|x| !x.is_finite() || *x < 0.0)
        {
            return Err(Error::Config(format!("nationality weights must be >= 0: {w:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UserProfile {
    pub user_id: String,
    pub residence: Option<CountryCode>,
    pub nationality: Option<CountryCode>,
    pub is_migrant: Option<bool>,
    /// Share of the user's language-tagged posts in each language.
    pub lang_fractions: BTreeMap<String, f64>,
    /// Distinct geo-tagged days per country in the reference year.
    pub days_per_country: BTreeMap<CountryCode, usize>,
}

impl UserProfile {
    pub fn new(
        user_id: impl Into<String>,
        residence: Option<CountryCode>,
        nationality: Option<CountryCode>,
    ) -> Self {
        let mut p = UserProfile {
            user_id: user_id.into(),
            residence,
            nationality,
            ..Default::default()
        };
        p.refresh_migrant_flag();
        p
    }

    pub fn refresh_migrant_flag(&mut self) {
        self.is_migrant = match (self.residence, self.nationality) {
            (Some(r), Some(n)) => Some(r != n),
            _ => None,
        };
    }

    /// Both labels resolved and equal.
    pub fn is_native(&self) -> bool {
        self.is_migrant == Some(false)
    }

    pub fn lang_fraction(&self, lang: &str) -> f64 {
        self.lang_fractions.get(lang).copied().unwrap_or(0.0)
    }
}

/// Per-country evidence: distinct days and raw post count.
#[derive(Clone, Debug, Default)]
struct CountryEvidence {
    days: BTreeSet<NaiveDate>,
    posts: usize,
}

#[derive(Clone, Debug, Default)]
struct UserActivity {
    all_time: BTreeMap<CountryCode, CountryEvidence>,
    in_year: BTreeMap<CountryCode, CountryEvidence>,
    lang_posts: BTreeMap<String, usize>,
}

impl UserActivity {
    fn add(&mut self, post: &Post, year: i32) {
        if let Some(c) = post.country {
            let day = post.timestamp.date_naive();
            let e = self.all_time.entry(c).or_default();
            e.days.insert(day);
            e.posts += 1;
            if post.year() == year {
                let e = self.in_year.entry(c).or_default();
                e.days.insert(day);
                e.posts += 1;
            }
        }
        if let Some(lang) = &post.language {
            *self.lang_posts.entry(lang.clone()).or_default() += 1;
        }
    }

    fn geo_posts(&self) -> usize {
        self.all_time.values().map(|e| e.posts).sum()
    }

    fn lang_fractions(&self) -> BTreeMap<String, f64> {
        let total: usize = self.lang_posts.values().sum();
        self.lang_posts
            .iter()
            .map(|(l, n)| (l.clone(), *n as f64 / total as f64))
            .collect()
    }
}

/// Most distinct days, then most posts, then the smallest code.
fn day_argmax(evidence: &BTreeMap<CountryCode, CountryEvidence>, min_posts: usize) -> Option<CountryCode> {
    let total: usize = evidence.values().map(|e| e.posts).sum();
    if total == 0 || total < min_posts {
        return None;
    }
    evidence
        .iter()
        .max_by(|(ca, a), (cb, b)| {
            a.days
                .len()
                .cmp(&b.days.len())
                .then(a.posts.cmp(&b.posts))
                .then(cb.cmp(ca))
        })
        .map(|(c, _)| *c)
}

fn group_by_user<'a>(posts: impl IntoIterator<Item = &'a Post>, year: i32) -> BTreeMap<&'a str, UserActivity> {
    let mut users: BTreeMap<&str, UserActivity> = BTreeMap::new();
    for p in posts {
        users.entry(p.user_id.as_str()).or_default().add(p, year);
    }
    users
}

fn activity_of<'a>(posts: impl IntoIterator<Item = &'a Post>, user: &str, year: i32) -> UserActivity {
    let mut act = UserActivity::default();
    for p in posts.into_iter().filter(|p| p.user_id == user) {
        act.add(p, year);
    }
    act
}

/// Country with the most distinct geo-tagged days in `year`.
pub fn assign_residence<'a>(
    posts: impl IntoIterator<Item = &'a Post>,
    user: &str,
    year: i32,
) -> Option<CountryCode> {
    day_argmax(&activity_of(posts, user, year).in_year, 0)
}

/// All-time distinct-day argmax, used for friends' countries.
pub fn dominant_country<'a>(posts: impl IntoIterator<Item = &'a Post>, user: &str) -> Option<CountryCode> {
    day_argmax(&activity_of(posts, user, i32::MIN).all_time, 0)
}

/// Inputs to one nationality vote, already reduced to country fractions.
#[derive(Clone, Debug, Default)]
pub struct NationalityEvidence {
    pub self_fractions: BTreeMap<CountryCode, f64>,
    pub friend_fractions: BTreeMap<CountryCode, f64>,
    pub language_fractions: BTreeMap<CountryCode, f64>,
}

impl NationalityEvidence {
    /// Weighted score per candidate country.
    pub fn scores(&self, w: &NationalityWeights) -> BTreeMap<CountryCode, f64> {
        let mut out: BTreeMap<CountryCode, f64> = BTreeMap::new();
        for (map, weight) in [
            (&self.self_fractions, w.self_posts),
            (&self.friend_fractions, w.friends),
            (&self.language_fractions, w.language),
        ] {
            for (c, f) in map {
                *out.entry(*c).or_default() += weight * f;
            }
        }
        out
    }

    /// Highest positive score; ties go to the smallest code.
    pub fn decide(&self, w: &NationalityWeights) -> Option<CountryCode> {
        if self.self_fractions.is_empty() && self.friend_fractions.is_empty() {
            return None;
        }
        let mut best: Option<(CountryCode, f64)> = None;
        for (c, s) in self.scores(w) {
            if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        best.map(|(c, _)| c)
    }
}

fn fractions<I: IntoIterator<Item = (CountryCode, usize)>>(counts: I) -> BTreeMap<CountryCode, f64> {
    let counts: BTreeMap<CountryCode, usize> = counts.into_iter().fold(BTreeMap::new(), |mut m, (c, n)| {
        *m.entry(c).or_default() += n;
        m
    });
    let total: usize = counts.values().sum();
    counts
        .into_iter()
        .filter(|(_, n)| *n > 0)
        .map(|(c, n)| (c, n as f64 / total as f64))
        .collect()
}

/// Optional mapping used by the language term of the nationality vote.
pub type CountryLanguages = BTreeMap<CountryCode, String>;

fn gather_evidence(
    activity: &UserActivity,
    friends: &FriendGraph,
    dominant: &BTreeMap<String, CountryCode>,
    user: &str,
    languages: Option<&CountryLanguages>,
) -> NationalityEvidence {
    let self_fractions = fractions(activity.all_time.iter().map(|(c, e)| (*c, e.posts)));
    let friend_fractions = fractions(
        friends
            .friends_of(user)
            .filter_map(|f| dominant.get(f))
            .map(|c| (*c, 1)),
    );
    let language_fractions = match languages {
        Some(table) => {
            let lf = activity.lang_fractions();
            table
                .iter()
                .filter_map(|(c, l)| lf.get(l).map(|f| (*c, *f)))
                .filter(|(_, f)| *f > 0.0)
                .collect()
        }
        None => BTreeMap::new(),
    };
    NationalityEvidence {
        self_fractions,
        friend_fractions,
        language_fractions,
    }
}

/// Nationality of `user` from their all-time geo-posts and their friends'
/// dominant countries. `friend_dominant` maps user ids to dominant countries.
pub fn assign_nationality<'a>(
    posts: impl IntoIterator<Item = &'a Post>,
    friends: &FriendGraph,
    friend_dominant: &BTreeMap<String, CountryCode>,
    user: &str,
    weights: &NationalityWeights,
) -> Option<CountryCode> {
    let act = activity_of(posts, user, i32::MIN);
    gather_evidence(&act, friends, friend_dominant, user, None).decide(weights)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LabelSummary {
    pub users: usize,
    pub residences: usize,
    pub nationalities: usize,
    pub both: usize,
    pub migrants: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Population {
    pub profiles: BTreeMap<String, UserProfile>,
    pub summary: LabelSummary,
}

impl Population {
    pub fn from_profiles(profiles: impl IntoIterator<Item = UserProfile>) -> Self {
        let profiles: BTreeMap<String, UserProfile> =
            profiles.into_iter().map(|p| (p.user_id.clone(), p)).collect();
        let summary = summarize(profiles.values());
        Population { profiles, summary }
    }

    pub fn get(&self, user: &str) -> Option<&UserProfile> {
        self.profiles.get(user)
    }

    pub fn migrants(&self) -> impl Iterator<Item = &UserProfile> {
        self.profiles.values().filter(|p| p.is_migrant == Some(true))
    }
}

fn summarize<'a>(profiles: impl Iterator<Item = &'a UserProfile>) -> LabelSummary {
    let mut s = LabelSummary::default();
    for p in profiles {
        s.users += 1;
        s.residences += p.residence.is_some() as usize;
        s.nationalities += p.nationality.is_some() as usize;
        s.both += p.is_migrant.is_some() as usize;
        s.migrants += (p.is_migrant == Some(true)) as usize;
    }
    s
}

/// Labels every user that has at least one post.
pub fn label_population(posts: &[Post], friends: &FriendGraph, config: &LabelConfig) -> Population {
    label_population_with_languages(posts, friends, config, None)
}

pub fn label_population_with_languages(
    posts: &[Post],
    friends: &FriendGraph,
    config: &LabelConfig,
    languages: Option<&CountryLanguages>,
) -> Population {
    let users = group_by_user(posts, config.year);
    let entries: Vec<(&str, &UserActivity)> = users.iter().map(|(u, a)| (*u, a)).collect();

    // pass 1: all-time dominant countries
    let dominant: BTreeMap<String, CountryCode> = entries
        .par_iter()
        .filter_map(|(u, a)| day_argmax(&a.all_time, 0).map(|c| (u.to_string(), c)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    // pass 2: residence and nationality
    let min = config.min_evidence;
    let profiles: Vec<UserProfile> = entries
        .par_iter()
        .map(|(u, a)| {
            let residence = day_argmax(&a.in_year, min);
            let evidence = gather_evidence(a, friends, &dominant, u, languages);
            let n_evidence = a.geo_posts()
                + friends.friends_of(u).filter(|f| dominant.contains_key(*f)).count();
            let nationality = if n_evidence >= min.max(1) {
                evidence.decide(&config.weights)
            } else {
                None
            };
            let mut p = UserProfile::new(*u, residence, nationality);
            p.lang_fractions = a.lang_fractions();
            p.days_per_country = a.in_year.iter().map(|(c, e)| (*c, e.days.len())).collect();
            p
        })
        .collect();
    let pop = Population::from_profiles(profiles);
    log::info!(
        "labeled {} users: {} residences, {} nationalities, {} with both, {} migrants",
        pop.summary.users,
        pop.summary.residences,
        pop.summary.nationalities,
        pop.summary.both,
        pop.summary.migrants
    );
    pop
}

#[derive(Serialize, Deserialize)]
struct ProfileRow {
    user_id: String,
    residence: String,
    nationality: String,
    is_migrant: String,
}

#[derive(Serialize, Deserialize)]
struct LangRow {
    user_id: String,
    lang: String,
    fraction: f64,
}

pub fn write_profiles<W: Write>(w: W, pop: &Population) -> Result<()> {
    let mut w = io::writer(w);
    w.write_record(["user_id", "residence", "nationality", "is_migrant"])?;
    for p in pop.profiles.values() {
        w.write_record([
            p.user_id.as_str(),
            &io::fmt_opt(p.residence),
            &io::fmt_opt(p.nationality),
            &io::fmt_opt(p.is_migrant.map(u8::from)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lang_fractions<W: Write>(w: W, pop: &Population) -> Result<()> {
    let mut w = io::writer(w);
    for p in pop.profiles.values() {
        for (lang, fraction) in &p.lang_fractions {
            w.serialize(LangRow {
                user_id: p.user_id.clone(),
                lang: lang.clone(),
                fraction: *fraction,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

fn opt_country(cell: &str) -> Result<Option<CountryCode>> {
    if cell.trim().is_empty() {
        Ok(None)
    } else {
        CountryCode::parse(cell).map(Some)
    }
}

/// Reads profiles and (optionally) language fractions written by the writers above.
pub fn read_profiles<R: Read, L: Read>(profiles: R, langs: Option<L>) -> Result<Population> {
    let mut map: BTreeMap<String, UserProfile> = BTreeMap::new();
    for row in io::reader(profiles).deserialize::<ProfileRow>() {
        let row = row?;
        let p = UserProfile::new(
            row.user_id.clone(),
            opt_country(&row.residence)?,
            opt_country(&row.nationality)?,
        );
        if !row.is_migrant.is_empty() {
            let flag = io::flag(&row.is_migrant).map_err(Error::Config)?;
            if p.is_migrant != Some(flag) {
                return Err(Error::Config(format!(
                    "profile {} has is_migrant={flag} inconsistent with its labels",
                    row.user_id
                )));
            }
        }
        map.insert(row.user_id, p);
    }
    if let Some(langs) = langs {
        let mut per_user: HashMap<String, BTreeMap<String, f64>> = HashMap::new();
        for row in io::reader(langs).deserialize::<LangRow>() {
            let row = row?;
            per_user.entry(row.user_id).or_default().insert(row.lang, row.fraction);
        }
        for (u, fr) in per_user {
            if let Some(p) = map.get_mut(&u) {
                p.lang_fractions = fr;
            }
        }
    }
    Ok(Population::from_profiles(map.into_values()))
}
