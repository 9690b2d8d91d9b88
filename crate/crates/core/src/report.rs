//! Plot-ready tables: migration chord edges, entropy histogram, real vs null
//! attachment values, the HA/DA scatter and per-group box-plot quartiles.

use std::collections::BTreeMap;
use std::io::Write;

use crate::atlas::{entropy_histogram, Atlas, HistogramBin};
use crate::attachment::{AttachmentScore, ScoreTable};
use crate::country::CountryCode;
use crate::error::Result;
use crate::geo::Population;
use crate::io;

pub const DEFAULT_MIN_FLOW: usize = 10;
pub const DEFAULT_MIN_GROUP: usize = 10;
pub const DEFAULT_HISTOGRAM_BINS: usize = 20;

/// File names of the bundle, in the order they are written.
pub const BUNDLE_FILES: [&str; 5] = [
    "chord_edges.csv",
    "entropy_histogram.csv",
    "attachment_vs_null.csv",
    "ha_da_scatter.csv",
    "group_quartiles.csv",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChordEdge {
    pub origin: CountryCode,
    pub destination: CountryCode,
    pub count: usize,
}

/// Migrant counts per (nationality, residence), keeping flows of at least `min_count`.
pub fn chord_edges(pop: &Population, min_count: usize) -> Vec<ChordEdge> {
    let mut flows: BTreeMap<(CountryCode, CountryCode), usize> = BTreeMap::new();
    for p in pop.migrants() {
        if let (Some(n), Some(r)) = (p.nationality, p.residence) {
            *flows.entry((n, r)).or_default() += 1;
        }
    }
    flows
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .map(|((origin, destination), count)| ChordEdge {
            origin,
            destination,
            count,
        })
        .collect()
}

pub fn write_chord_edges<W: Write>(w: W, edges: &[ChordEdge]) -> Result<()> {
    let mut w = io::writer(w);
    w.write_record(["origin", "destination", "count"])?;
    for e in edges {
        w.write_record([e.origin.as_str(), e.destination.as_str(), &e.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram<W: Write>(w: W, bins: &[HistogramBin]) -> Result<()> {
    let mut w = io::writer(w);
    w.write_record(["lo", "hi", "count"])?;
    for b in bins {
        w.write_record([b.lo.to_string(), b.hi.to_string(), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: `series` is `real` or `null`; `replicate` is empty for real rows.
pub fn write_vs_null<W: Write>(w: W, real: &ScoreTable, null: &[(usize, AttachmentScore)]) -> Result<()> {
    let mut w = io::writer(w);
    w.write_record(["series", "replicate", "user_id", "ha", "da"])?;
    for s in &real.scores {
        w.write_record(["real", "", &s.user_id, &s.ha.to_string(), &s.da.to_string()])?;
    }
    for (r, s) in null {
        w.write_record(["null", &r.to_string(), &s.user_id, &s.ha.to_string(), &s.da.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scatter<W: Write>(w: W, real: &ScoreTable) -> Result<()> {
    let mut w = io::writer(w);
    w.write_record(["user_id", "nationality", "residence", "ha", "da", "acc_class"])?;
    for s in &real.scores {
        w.write_record([
            s.user_id.as_str(),
            s.nationality.as_str(),
            s.residence.as_str(),
            &s.ha.to_string(),
            &s.da.to_string(),
            s.acc_class.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Five-number summary plus mean; quartiles interpolate linearly between
/// order statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quartiles {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Quartiles {
        n: v.len(),
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroupBy {
    Residence,
    Nationality,
}

impl GroupBy {
    pub fn as_str(&self) -> &'static str {
        match self {
            GroupBy::Residence => "residence",
            GroupBy::Nationality => "nationality",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupQuartiles {
    pub group_by: GroupBy,
    pub group: CountryCode,
    pub ha: Quartiles,
    pub da: Quartiles,
}

/// Quartiles of HA and DA for every residence and nationality group with at
/// least `min_group` scored migrants.
pub fn group_quartiles(scores: &[AttachmentScore], min_group: usize) -> Vec<GroupQuartiles> {
    let mut out = Vec::new();
    for by in [GroupBy::Residence, GroupBy::Nationality] {
        let mut groups: BTreeMap<CountryCode, Vec<&AttachmentScore>> = BTreeMap::new();
        for s in scores {
            let key = match by {
                GroupBy::Residence => s.residence,
                GroupBy::Nationality => s.nationality,
            };
            groups.entry(key).or_default().push(s);
        }
        for (group, members) in groups {
            if members.len() < min_group.max(1) {
                continue;
            }
            let ha: Vec<f64> = members.iter().map(|s| s.ha).collect();
            let da: Vec<f64> = members.iter().map(|s| s.da).collect();
            out.push(GroupQuartiles {
                group_by: by,
                group,
                ha: quartiles(&ha).expect("non-empty group"),
                da: quartiles(&da).expect("non-empty group"),
            });
        }
    }
    out
}

pub fn write_group_quartiles<W: Write>(w: W, groups: &[GroupQuartiles]) -> Result<()> {
    let mut w = io::writer(w);
    w.write_record(["group_by", "group", "index", "n", "min", "q1", "median", "q3", "max", "mean"])?;
    for g in groups {
        for (index, q) in [("HA", g.ha), ("DA", g.da)] {
            w.write_record([
                g.group_by.as_str(),
                g.group.as_str(),
                index,
                &q.n.to_string(),
                &q.min.to_string(),
                &q.q1.to_string(),
                &q.median.to_string(),
                &q.q3.to_string(),
                &q.max.to_string(),
                &q.mean.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inputs for the whole bundle.
pub struct ReportInputs<'a> {
    pub population: &'a Population,
    pub atlas: &'a Atlas,
    pub scores: &'a ScoreTable,
    pub null: &'a [(usize, AttachmentScore)],
    pub min_flow: usize,
    pub min_group: usize,
    pub bins: usize,
}

/// Renders each bundle file into memory, keyed by file name.
pub fn render_bundle(inputs: &ReportInputs) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let mut files = Vec::with_capacity(BUNDLE_FILES.len());
    let mut buf = Vec::new();
    write_chord_edges(&mut buf, &chord_edges(inputs.population, inputs.min_flow))?;
    files.push((BUNDLE_FILES[0], std::mem::take(&mut buf)));
    write_histogram(&mut buf, &entropy_histogram(inputs.atlas.records.values(), inputs.bins))?;
    files.push((BUNDLE_FILES[1], std::mem::take(&mut buf)));
    write_vs_null(&mut buf, inputs.scores, inputs.null)?;
    files.push((BUNDLE_FILES[2], std::mem::take(&mut buf)));
    write_scatter(&mut buf, inputs.scores)?;
    files.push((BUNDLE_FILES[3], std::mem::take(&mut buf)));
    write_group_quartiles(&mut buf, &group_quartiles(&inputs.scores.scores, inputs.min_group))?;
    files.push((BUNDLE_FILES[4], buf));
    Ok(files)
}
