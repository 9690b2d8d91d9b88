//! Country and country-pair covariates, and their correlation with HA and DA.
//!
//! Scores are joined to the covariates of their (nationality, residence) pair.
//! Individual-level tables correlate every joined migrant; grouped tables
//! average HA per nationality and DA per residence before correlating.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::attachment::AttachmentScore;
use crate::country::CountryCode;
use crate::error::{Error, Result};
use crate::io;
use crate::stats::{pearson, significance_stars, spearman, Method, TestResult};

pub const DEFAULT_MIN_GROUP_SIZE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Power,
    Individualism,
    Masculinity,
    Uncertainty,
    Orientation,
    Indulgence,
}

impl Dimension {
    pub const ALL: [Dimension; 6] = [
        Dimension::Power,
        Dimension::Individualism,
        Dimension::Masculinity,
        Dimension::Uncertainty,
        Dimension::Orientation,
        Dimension::Indulgence,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::Power => "power",
            Dimension::Individualism => "individualism",
            Dimension::Masculinity => "masculinity",
            Dimension::Uncertainty => "uncertainty",
            Dimension::Orientation => "orientation",
            Dimension::Indulgence => "indulgence",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountryScores {
    pub country: CountryCode,
    pub values: BTreeMap<Dimension, f64>,
}

impl CountryScores {
    pub fn get(&self, d: Dimension) -> Option<f64> {
        self.values.get(&d).copied()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// |origin - destination|
    #[default]
    Absolute,
    /// origin - destination
    Signed,
}

/// Per-dimension score difference; dimensions missing on either side are omitted.
pub fn hofstede_delta(a: &CountryScores, b: &CountryScores, mode: DeltaMode) -> BTreeMap<Dimension, f64> {
    Dimension::ALL
        .iter()
        .filter_map(|d| {
            let diff = a.get(*d)? - b.get(*d)?;
            Some((
                *d,
                match mode {
                    DeltaMode::Absolute => diff.abs(),
                    DeltaMode::Signed => diff,
                },
            ))
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HofstedeTable(pub BTreeMap<CountryCode, CountryScores>);

const BUILTIN_HOFSTEDE: &str = include_str!("../data/hofstede.csv");

impl HofstedeTable {
    /// Published scores for a few dozen countries.
    pub fn builtin() -> Self {
        HofstedeTable::read(BUILTIN_HOFSTEDE.as_bytes()).expect("builtin Hofstede table parses")
    }

    /// CSV `country,power,individualism,masculinity,uncertainty,orientation,indulgence`.
    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut rdr = io::reader(r);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("Hofstede table lacks column {name:?}")))
        };
        let country_col = col("country")?;
        let dims: Vec<(Dimension, usize)> = Dimension::ALL
            .iter()
            .map(|d| col(d.as_str()).map(|i| (*d, i)))
            .collect::<Result<_>>()?;
        let mut out = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let country = CountryCode::parse(rec.get(country_col).unwrap_or(""))?;
            let mut values = BTreeMap::new();
            for (d, i) in &dims {
                if let Some(v) = io::opt_f64(rec.get(*i).unwrap_or("")).map_err(Error::Config)? {
                    if !(0.0..=120.0).contains(&v) {
                        return Err(Error::Config(format!("{country} {d} = {v} outside [0, 120]")));
                    }
                    values.insert(*d, v);
                }
            }
            out.insert(country, CountryScores { country, values });
        }
        Ok(HofstedeTable(out))
    }

    pub fn get(&self, c: CountryCode) -> Option<&CountryScores> {
        self.0.get(&c)
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut w = io::writer(w);
        let mut header = vec!["country"];
        header.extend(Dimension::ALL.iter().map(Dimension::as_str));
        w.write_record(&header)?;
        for s in self.0.values() {
            let mut rec = vec![s.country.to_string()];
            rec.extend(Dimension::ALL.iter().map(|d| io::fmt_opt(s.get(*d))));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCovariates {
    pub origin: CountryCode,
    pub destination: CountryCode,
    pub distcap: f64,
    pub contig: bool,
    pub comlang_off: bool,
    pub csl: f64,
    pub cnl: f64,
}

impl PairCovariates {
    pub const COLUMNS: [&'static str; 5] = ["distcap", "contig", "comlang_off", "csl", "cnl"];

    fn values(&self) -> [f64; 5] {
        [
            self.distcap,
            self.contig as u8 as f64,
            self.comlang_off as u8 as f64,
            self.csl,
            self.cnl,
        ]
    }

    fn validate(&self) -> Result<()> {
        if !(self.distcap >= 0.0) {
            return Err(Error::Config(format!(
                "{}-{} distcap {} must be >= 0",
                self.origin, self.destination, self.distcap
            )));
        }
        for (name, v) in [("csl", self.csl), ("cnl", self.cnl)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!(
                    "{}-{} {name} {v} outside [0, 1]",
                    self.origin, self.destination
                )));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct PairRow {
    origin: CountryCode,
    destination: CountryCode,
    distcap: f64,
    contig: String,
    comlang_off: String,
    csl: f64,
    cnl: f64,
}

/// Symmetric pair lookup: a row for (a, b) also answers (b, a).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairTable(pub BTreeMap<(CountryCode, CountryCode), PairCovariates>);

impl PairTable {
    pub fn from_rows(rows: impl IntoIterator<Item = PairCovariates>) -> Result<Self> {
        let mut m = BTreeMap::new();
        for r in rows {
            r.validate()?;
            m.insert((r.origin, r.destination), r);
        }
        Ok(PairTable(m))
    }

    /// CSV `origin,destination,distcap,contig,comlang_off,csl,cnl`.
    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for row in io::reader(r).deserialize::<PairRow>() {
            let row = row?;
            rows.push(PairCovariates {
                origin: row.origin,
                destination: row.destination,
                distcap: row.distcap,
                contig: io::flag(&row.contig).map_err(Error::Config)?,
                comlang_off: io::flag(&row.comlang_off).map_err(Error::Config)?,
                csl: row.csl,
                cnl: row.cnl,
            });
        }
        PairTable::from_rows(rows)
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut w = io::writer(w);
        w.write_record(["origin", "destination", "distcap", "contig", "comlang_off", "csl", "cnl"])?;
        for p in self.0.values() {
            w.write_record([
                p.origin.to_string(),
                p.destination.to_string(),
                p.distcap.to_string(),
                (p.contig as u8).to_string(),
                (p.comlang_off as u8).to_string(),
                p.csl.to_string(),
                p.cnl.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn get(&self, a: CountryCode, b: CountryCode) -> Option<&PairCovariates> {
        self.0.get(&(a, b)).or_else(|| self.0.get(&(b, a)))
    }
}

/// Any numeric CSV keyed by `country` or by `origin,destination`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExtraTable {
    pub columns: Vec<String>,
    pub by_country: BTreeMap<CountryCode, Vec<Option<f64>>>,
    pub by_pair: BTreeMap<(CountryCode, CountryCode), Vec<Option<f64>>>,
}

impl ExtraTable {
    /// Country-keyed columns are attached twice, suffixed `_home` and `_dest`.
    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut rdr = io::reader(r);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let pair = headers.iter().any(|h| h == "origin") && headers.iter().any(|h| h == "destination");
        let keys: Vec<&str> = if pair { vec!["origin", "destination"] } else { vec!["country"] };
        let key_idx: Vec<usize> = keys
            .iter()
            .map(|k| {
                headers
                    .iter()
                    .position(|h| h == k)
                    .ok_or_else(|| Error::Config(format!("covariate table lacks key column {k:?}")))
            })
            .collect::<Result<_>>()?;
        let value_idx: Vec<usize> = (0..headers.len()).filter(|i| !key_idx.contains(i)).collect();
        let mut t = ExtraTable {
            columns: value_idx.iter().map(|i| headers[*i].clone()).collect(),
            ..Default::default()
        };
        for rec in rdr.records() {
            let rec = rec?;
            let values = value_idx
                .iter()
                .map(|i| io::opt_f64(rec.get(*i).unwrap_or("")).map_err(Error::Config))
                .collect::<Result<Vec<_>>>()?;
            if pair {
                let a = CountryCode::parse(&rec[key_idx[0]])?;
                let b = CountryCode::parse(&rec[key_idx[1]])?;
                t.by_pair.insert((a, b), values);
            } else {
                t.by_country.insert(CountryCode::parse(&rec[key_idx[0]])?, values);
            }
        }
        Ok(t)
    }

    fn is_pair(&self) -> bool {
        !self.by_pair.is_empty()
    }

    fn column_names(&self) -> Vec<String> {
        if self.is_pair() {
            self.columns.clone()
        } else {
            self.columns
                .iter()
                .flat_map(|c| [format!("{c}_home"), format!("{c}_dest")])
                .collect()
        }
    }

    fn lookup(&self, home: CountryCode, dest: CountryCode) -> Option<Vec<Option<f64>>> {
        if self.is_pair() {
            self.by_pair
                .get(&(home, dest))
                .or_else(|| self.by_pair.get(&(dest, home)))
                .cloned()
        } else {
            let h = self.by_country.get(&home)?;
            let d = self.by_country.get(&dest)?;
            Some(h.iter().zip(d).flat_map(|(a, b)| [*a, *b]).collect())
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct CovariateSources {
    pub hofstede: Option<HofstedeTable>,
    pub pairs: Option<PairTable>,
    pub extras: Vec<ExtraTable>,
    pub delta_mode: DeltaMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JoinedRow {
    pub score: AttachmentScore,
    /// Aligned with [`Joined::columns`]; `None` where a source has no value.
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Joined {
    pub columns: Vec<String>,
    pub rows: Vec<JoinedRow>,
    pub dropped: usize,
}

/// Joins each score to the covariates of its (nationality, residence) pair.
/// Users whose pair is missing from any supplied source are dropped and counted.
pub fn join_covariates<'a>(scores: impl IntoIterator<Item = &'a AttachmentScore>, src: &CovariateSources) -> Joined {
    let mut columns: Vec<String> = Vec::new();
    if src.hofstede.is_some() {
        columns.extend(Dimension::ALL.iter().map(|d| d.as_str().to_string()));
    }
    if src.pairs.is_some() {
        columns.extend(PairCovariates::COLUMNS.iter().map(|c| c.to_string()));
    }
    for e in &src.extras {
        columns.extend(e.column_names());
    }
    let mut out = Joined {
        columns,
        ..Default::default()
    };
    'users: for s in scores {
        let (home, dest) = (s.nationality, s.residence);
        let mut values = Vec::with_capacity(out.columns.len());
        if let Some(h) = &src.hofstede {
            let (Some(a), Some(b)) = (h.get(home), h.get(dest)) else {
                out.dropped += 1;
                continue 'users;
            };
            let delta = hofstede_delta(a, b, src.delta_mode);
            values.extend(Dimension::ALL.iter().map(|d| delta.get(d).copied()));
        }
        if let Some(p) = &src.pairs {
            let Some(row) = p.get(home, dest) else {
                out.dropped += 1;
                continue 'users;
            };
            values.extend(row.values().map(Some));
        }
        for e in &src.extras {
            let Some(v) = e.lookup(home, dest) else {
                out.dropped += 1;
                continue 'users;
            };
            values.extend(v);
        }
        out.rows.push(JoinedRow {
            score: s.clone(),
            values,
        });
    }
    out
}

impl Joined {
    /// Removes columns with fewer than two distinct present values and returns
    /// their names.
    pub fn drop_constant_columns(&mut self) -> Vec<String> {
        let keep: Vec<bool> = (0..self.columns.len())
            .map(|ci| {
                let mut present = self.rows.iter().filter_map(|r| r.values[ci]);
                match present.next() {
                    Some(first) => present.any(|v| v != first),
                    None => false,
                }
            })
            .collect();
        let dropped = self
            .columns
            .iter()
            .zip(&keep)
            .filter(|(_, k)| !**k)
            .map(|(c, _)| c.clone())
            .collect();
        fn retain<T>(v: &mut Vec<T>, keep: &[bool]) {
            let mut it = keep.iter();
            v.retain(|_| *it.next().unwrap());
        }
        retain(&mut self.columns, &keep);
        for r in &mut self.rows {
            retain(&mut r.values, &keep);
        }
        dropped
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Target {
    #[serde(rename = "HA")]
    Ha,
    #[serde(rename = "DA")]
    Da,
}

impl Target {
    pub fn as_str(&self) -> &'static str {
        match self {
            Target::Ha => "HA",
            Target::Da => "DA",
        }
    }

    fn of(&self, s: &AttachmentScore) -> f64 {
        match self {
            Target::Ha => s.ha,
            Target::Da => s.da,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationRow {
    pub target: Target,
    pub covariate: String,
    pub result: TestResult,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorrelationTable {
    pub rows: Vec<CorrelationRow>,
    /// Migrants entering the table (individual) or groups per side (grouped).
    pub n_users: usize,
    pub dropped: usize,
}

impl CorrelationTable {
    pub fn find(&self, target: Target, covariate: &str, method: Method) -> Option<&CorrelationRow> {
        self.rows
            .iter()
            .find(|r| r.target == target && r.covariate == covariate && r.result.method == method)
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut w = io::writer(w);
        w.write_record(["target", "covariate", "method", "r", "p", "n", "stars"])?;
        for row in &self.rows {
            w.write_record([
                row.target.as_str(),
                row.covariate.as_str(),
                row.result.method.as_str(),
                &row.result.statistic.to_string(),
                &format!("{:?}", row.result.p_value),
                &row.result.n1.to_string(),
                significance_stars(row.result.p_value),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Covariates down, HA and DA across, `r` with stars, for one method.
    pub fn render(&self, method: Method) -> String {
        let mut covs: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !covs.contains(&r.covariate.as_str()) {
                covs.push(&r.covariate);
            }
        }
        let cell = |t: Target, c: &str| {
            self.find(t, c, method)
                .map(|r| format!("{:.3}{}", r.result.statistic, significance_stars(r.result.p_value)))
                .unwrap_or_default()
        };
        let mut out = format!("{:<16}{:>12}{:>12}\n", "", "HA", "DA");
        for c in covs {
            out.push_str(&format!("{:<16}{:>12}{:>12}\n", c, cell(Target::Ha, c), cell(Target::Da, c)));
        }
        out
    }
}

const METHODS: [fn(&[f64], &[f64]) -> Result<TestResult>; 2] = [pearson, spearman];

fn correlate_columns(
    target: Target,
    target_values: &[f64],
    columns: &[String],
    column_values: &[Vec<Option<f64>>],
    skip_constant: bool,
    rows: &mut Vec<CorrelationRow>,
) -> Result<()> {
    for (ci, name) in columns.iter().enumerate() {
        let (t, v): (Vec<f64>, Vec<f64>) = target_values
            .iter()
            .zip(column_values)
            .filter_map(|(t, vals)| vals[ci].map(|v| (*t, v)))
            .unzip();
        if skip_constant && v.iter().all(|x| *x == v[0]) {
            log::warn!("{name} is constant across {} groups; skipped", target.as_str());
            continue;
        }
        for f in METHODS {
            let result = f(&v, &t).map_err(|e| match e {
                Error::ZeroVariance(which) => Error::ZeroVariance(format!(
                    "{} ({}) against {name}",
                    target.as_str(),
                    if which == "x" { name.as_str() } else { "target" }
                )),
                other => other,
            })?;
            rows.push(CorrelationRow {
                target,
                covariate: name.clone(),
                result,
            });
        }
    }
    Ok(())
}

/// Pearson and Spearman correlations of HA and DA against every joined column,
/// plus HA against DA.
pub fn individual_correlations(joined: &Joined) -> Result<CorrelationTable> {
    let n = joined.rows.len();
    if n < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: n });
    }
    let values: Vec<Vec<Option<f64>>> = joined.rows.iter().map(|r| r.values.clone()).collect();
    let mut rows = Vec::new();
    for target in [Target::Ha, Target::Da] {
        let t: Vec<f64> = joined.rows.iter().map(|r| target.of(&r.score)).collect();
        correlate_columns(target, &t, &joined.columns, &values, false, &mut rows)?;
    }
    let ha: Vec<f64> = joined.rows.iter().map(|r| r.score.ha).collect();
    let da: Vec<f64> = joined.rows.iter().map(|r| r.score.da).collect();
    for f in METHODS {
        rows.push(CorrelationRow {
            target: Target::Ha,
            covariate: "DA".into(),
            result: f(&da, &ha)?,
        });
    }
    Ok(CorrelationTable {
        rows,
        n_users: n,
        dropped: joined.dropped,
    })
}

/// Group means of the target and of every column, for groups with at least
/// `min_group` members.
fn group_means(
    joined: &Joined,
    target: Target,
    key: impl Fn(&AttachmentScore) -> CountryCode,
    min_group: usize,
) -> (Vec<f64>, Vec<Vec<Option<f64>>>) {
    let mut groups: BTreeMap<CountryCode, Vec<&JoinedRow>> = BTreeMap::new();
    for r in &joined.rows {
        groups.entry(key(&r.score)).or_default().push(r);
    }
    let mut t = Vec::new();
    let mut cols = Vec::new();
    for members in groups.values().filter(|m| m.len() >= min_group.max(1)) {
        t.push(members.iter().map(|r| target.of(&r.score)).sum::<f64>() / members.len() as f64);
        let means = (0..joined.columns.len())
            .map(|ci| {
                let present: Vec<f64> = members.iter().filter_map(|r| r.values[ci]).collect();
                (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
            })
            .collect();
        cols.push(means);
    }
    (t, cols)
}

/// Mean HA per nationality and mean DA per residence, each correlated with the
/// group means of every column. Columns whose group means are all equal on a
/// side are left out of that side.
pub fn grouped_correlations(joined: &Joined, min_group: usize) -> Result<CorrelationTable> {
    let mut rows = Vec::new();
    let mut n_groups = 0;
    for (target, side) in [(Target::Ha, "nationality"), (Target::Da, "residence")] {
        let (t, cols) = match target {
            Target::Ha => group_means(joined, target, |s| s.nationality, min_group),
            Target::Da => group_means(joined, target, |s| s.residence, min_group),
        };
        if t.len() < 3 {
            return Err(Error::InsufficientGroups {
                side: side.into(),
                needed: 3,
                got: t.len(),
            });
        }
        n_groups = n_groups.max(t.len());
        correlate_columns(target, &t, &joined.columns, &cols, true, &mut rows)?;
    }
    Ok(CorrelationTable {
        rows,
        n_users: n_groups,
        dropped: joined.dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attachment::AccClass;
    use crate::country::cc;

    fn scores(c: &str, vals: [Option<f64>; 6]) -> CountryScores {
        CountryScores {
            country: cc(c),
            values: Dimension::ALL
                .iter()
                .zip(vals)
                .filter_map(|(d, v)| v.map(|v| (*d, v)))
                .collect(),
        }
    }

    fn score(user: &str, nat: &str, res: &str, ha: f64, da: f64) -> AttachmentScore {
        AttachmentScore {
            user_id: user.into(),
            nationality: cc(nat),
            residence: cc(res),
            ha,
            da,
            n_hashtags: 10,
            n_home: 0,
            n_dest: 0,
            acc_class: AccClass::Marginalisation,
            speaks_dest_lang: None,
        }
    }

    #[test]
    fn delta_axioms() {
        let t = HofstedeTable::builtin();
        let us = t.get(cc("US")).unwrap();
        let it = t.get(cc("IT")).unwrap();
        assert!(hofstede_delta(us, us, DeltaMode::Absolute).values().all(|v| *v == 0.0));
        let d = hofstede_delta(us, it, DeltaMode::Absolute);
        assert_eq!(us.get(Dimension::Individualism), Some(91.0));
        assert_eq!(it.get(Dimension::Individualism), Some(76.0));
        assert_eq!(d[&Dimension::Individualism], 15.0);
        assert_eq!(d, hofstede_delta(it, us, DeltaMode::Absolute));
        let s = hofstede_delta(it, us, DeltaMode::Signed);
        assert_eq!(s[&Dimension::Individualism], -15.0);
    }

    #[test]
    fn missing_dimension_is_absent() {
        let a = scores("IT", [Some(50.0), Some(76.0), None, Some(75.0), Some(61.0), Some(30.0)]);
        let b = scores("FR", [Some(68.0), Some(71.0), Some(43.0), Some(86.0), Some(63.0), Some(48.0)]);
        let d = hofstede_delta(&a, &b, DeltaMode::Absolute);
        assert!(!d.contains_key(&Dimension::Masculinity));
        assert_eq!(d.len(), 5);
    }

    #[test]
    fn hofstede_csv() {
        let t = HofstedeTable::read("country,power,individualism,masculinity,uncertainty,orientation,indulgence\nGR,60,35,57,112,45,\n".as_bytes()).unwrap();
        let gr = t.get(cc("GR")).unwrap();
        assert_eq!(gr.get(Dimension::Uncertainty), Some(112.0));
        assert_eq!(gr.get(Dimension::Indulgence), None);
        assert!(HofstedeTable::read("country,power,individualism,masculinity,uncertainty,orientation,indulgence\nGR,160,,,,,\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(HofstedeTable::read(&buf[..]).unwrap(), t);
    }

    #[test]
    fn pair_table_validation_and_symmetry() {
        let csv = "origin,destination,distcap,contig,comlang_off,csl,cnl\nIT,FR,1105.8,1,0,0.3,0.1\n";
        let t = PairTable::read(csv.as_bytes()).unwrap();
        assert!(t.get(cc("FR"), cc("IT")).unwrap().contig);
        let bad = "origin,destination,distcap,contig,comlang_off,csl,cnl\nIT,FR,10,1,0,1.3,0.1\n";
        assert!(PairTable::read(bad.as_bytes()).is_err());
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(PairTable::read(&buf[..]).unwrap(), t);
    }

    #[test]
    fn join_counts_drops() {
        let src = CovariateSources {
            hofstede: Some(HofstedeTable::builtin()),
            ..Default::default()
        };
        let s = vec![score("a", "IT", "US", 0.1, 0.2), score("b", "IT", "AQ", 0.1, 0.2)];
        let j = join_covariates(&s, &src);
        assert_eq!(j.rows.len() + j.dropped, s.len());
        assert_eq!(j.dropped, 1);
        assert_eq!(j.rows[0].values[1], Some(15.0));
    }

    #[test]
    fn extra_tables() {
        let by_country = ExtraTable::read("country,assim\nIT,0.3\nUS,0.5\n".as_bytes()).unwrap();
        let by_pair = ExtraTable::read("origin,destination,flow\nIT,US,12\n".as_bytes()).unwrap();
        let src = CovariateSources {
            extras: vec![by_country, by_pair],
            ..Default::default()
        };
        let s = vec![score("a", "IT", "US", 0.1, 0.2), score("b", "FR", "US", 0.1, 0.2)];
        let j = join_covariates(&s, &src);
        assert_eq!(j.columns, ["assim_home", "assim_dest", "flow"]);
        assert_eq!(j.rows[0].values, [Some(0.3), Some(0.5), Some(12.0)]);
        assert_eq!(j.dropped, 1);
    }

    #[test]
    fn planted_linear_da() {
        // DA rises with the individualism gap
        let t = HofstedeTable::builtin();
        let dests = ["US", "GB", "FR", "DE", "ES", "BR", "JP", "KR", "CN", "MX", "SE", "PT"];
        let it = t.get(cc("IT")).unwrap();
        let mut s = Vec::new();
        for (i, d) in dests.iter().enumerate() {
            let gap = (t.get(cc(d)).unwrap().get(Dimension::Individualism).unwrap() - it.get(Dimension::Individualism).unwrap()).abs();
            for k in 0..5 {
                let noise = ((i * 5 + k) % 7) as f64 * 0.002;
                s.push(score(&format!("u{i}_{k}"), "IT", d, 0.05 + noise, 0.01 + gap / 200.0 + noise));
            }
        }
        let src = CovariateSources {
            hofstede: Some(t),
            ..Default::default()
        };
        let table = individual_correlations(&join_covariates(&s, &src)).unwrap();
        let row = table.find(Target::Da, "individualism", Method::Pearson).unwrap();
        assert!(row.result.statistic > 0.9);
        assert!(row.result.p_value < 0.01);
        assert!(table.render(Method::Pearson).contains("individualism"));
    }

    #[test]
    fn constant_covariate_errors() {
        let src = CovariateSources {
            pairs: Some(
                PairTable::from_rows(["FR", "DE", "ES"].iter().map(|d| PairCovariates {
                    origin: cc("IT"),
                    destination: cc(d),
                    distcap: 1000.0,
                    contig: false,
                    comlang_off: false,
                    csl: 0.1,
                    cnl: 0.1,
                }))
                .unwrap(),
            ),
            ..Default::default()
        };
        let s = vec![
            score("a", "IT", "FR", 0.1, 0.2),
            score("b", "IT", "DE", 0.2, 0.1),
            score("c", "IT", "ES", 0.3, 0.4),
        ];
        let j = join_covariates(&s, &src);
        assert!(matches!(individual_correlations(&j), Err(Error::ZeroVariance(_))));
        let two = join_covariates(&s[..2], &src);
        assert!(matches!(individual_correlations(&two), Err(Error::TooFewObservations { .. })));
    }

    #[test]
    fn grouped_needs_three_groups() {
        let src = CovariateSources {
            hofstede: Some(HofstedeTable::builtin()),
            ..Default::default()
        };
        let s: Vec<_> = (0..30)
            .map(|i| score(&format!("u{i}"), "IT", ["US", "FR", "DE"][i % 3], 0.1, i as f64 / 100.0))
            .collect();
        let err = grouped_correlations(&join_covariates(&s, &src), 10).unwrap_err();
        assert!(matches!(err, Error::InsufficientGroups { ref side, got: 1, .. } if side == "nationality"));
    }
}
