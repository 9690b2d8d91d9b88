//! Nonparametric two-sample tests and correlation coefficients.
//!
//! Tail probabilities are evaluated in log space where they can get tiny, so
//! p-values around 1e-50 come out as themselves rather than as zero.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::io::Write;

use serde::Serialize;
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::io;

/// Combined sizes up to this use exact enumeration when there are no ties.
pub const EXACT_RANK_SUM_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    WilcoxonRankSum,
    WilcoxonSignedRank,
    KsTwoSample,
    Pearson,
    Spearman,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::WilcoxonRankSum => "wilcoxon_rank_sum",
            Method::WilcoxonSignedRank => "wilcoxon_signed_rank",
            Method::KsTwoSample => "ks_two_sample",
            Method::Pearson => "pearson",
            Method::Spearman => "spearman",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    pub method: Method,
}

impl TestResult {
    pub fn stars(&self) -> &'static str {
        significance_stars(self.p_value)
    }
}

/// `***` below 0.01, `**` below 0.05, `*` below 0.1.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// 1-based ranks with ties sharing their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Sizes of groups of equal values.
fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        out.push(j - i);
        i = j;
    }
    out
}

/// ln P(Z > z) for a standard normal.
pub fn ln_normal_sf(z: f64) -> f64 {
    if z < 25.0 {
        (0.5 * erfc(z / std::f64::consts::SQRT_2)).ln()
    } else {
        // Mills-ratio asymptotic series
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        -0.5 * z2 - z.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

/// Two-sided normal p-value for |z|, computed through its logarithm.
fn two_sided_normal_p(z: f64) -> f64 {
    (LN_2 + ln_normal_sf(z.abs())).exp().min(1.0)
}

/// Number of size-`k` subsets of {1..n} for each rank sum.
fn rank_sum_counts(n: usize, k: usize) -> Vec<u128> {
    let max_sum = n * (n + 1) / 2;
    // ways[j][s]: subsets of size j with sum s using ranks seen so far
    let mut ways = vec![vec![0u128; max_sum + 1]; k + 1];
    ways[0][0] = 1;
    for r in 1..=n {
        for j in (1..=k.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                ways[j][s] += ways[j - 1][s - r];
            }
        }
    }
    ways.swap_remove(k)
}

fn check_sample(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        Err(Error::EmptySample)
    } else {
        Ok(())
    }
}

/// Two-sided Mann-Whitney / Wilcoxon rank-sum test. The statistic is U for `x`.
///
/// Tie-free samples with at most [`EXACT_RANK_SUM_LIMIT`] observations in total
/// get the exact null distribution; everything else uses the normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64]) -> Result<TestResult> {
    check_sample(x)?;
    check_sample(y)?;
    let (n1, n2) = (x.len(), y.len());
    let n = n1 + n2;
    let all: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&all);
    let rank_sum_x: f64 = ranks[..n1].iter().sum();
    let u = rank_sum_x - (n1 * (n1 + 1)) as f64 / 2.0;
    let ties = tie_groups(&all);
    let has_ties = ties.iter().any(|t| *t > 1);

    let p_value = if !has_ties && n <= EXACT_RANK_SUM_LIMIT {
        let counts = rank_sum_counts(n, n1);
        let offset = n1 * (n1 + 1) / 2;
        let u_obs = u.round() as usize;
        let total: u128 = counts.iter().sum();
        let lower: u128 = counts[offset..=offset + u_obs].iter().sum();
        let upper: u128 = counts[offset + u_obs..].iter().sum();
        ((2 * lower.min(upper)) as f64 / total as f64).min(1.0)
    } else {
        let (fn1, fn2, fnn) = (n1 as f64, n2 as f64, n as f64);
        let mu = fn1 * fn2 / 2.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (fnn * (fnn - 1.0));
        let var = fn1 * fn2 / 12.0 * ((fnn + 1.0) - tie_term);
        if var <= 0.0 {
            1.0
        } else {
            let dev = ((u - mu).abs() - 0.5).max(0.0);
            two_sided_normal_p(dev / var.sqrt())
        }
    };
    Ok(TestResult {
        statistic: u,
        p_value,
        n1,
        n2,
        method: Method::WilcoxonRankSum,
    })
}

/// Paired Wilcoxon signed-rank test on `x[i] - y[i]`; zero differences are dropped.
/// The statistic is W+, the rank sum of positive differences.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    check_sample(x)?;
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            n1: x.len(),
            n2: y.len(),
            method: Method::WilcoxonSignedRank,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let ties = tie_groups(&abs);
    let has_ties = ties.iter().any(|t| *t > 1);
    let fnn = n as f64;
    let p_value = if !has_ties && n <= EXACT_RANK_SUM_LIMIT {
        // every sign pattern equally likely: count subsets of {1..n} by sum
        let max_sum = n * (n + 1) / 2;
        let mut ways = vec![0u128; max_sum + 1];
        ways[0] = 1;
        for r in 1..=n {
            for s in (r..=max_sum).rev() {
                ways[s] += ways[s - r];
            }
        }
        let w = w_plus.round() as usize;
        let total: u128 = ways.iter().sum();
        let lower: u128 = ways[..=w].iter().sum();
        let upper: u128 = ways[w..].iter().sum();
        ((2 * lower.min(upper)) as f64 / total as f64).min(1.0)
    } else {
        let mu = fnn * (fnn + 1.0) / 4.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = fnn * (fnn + 1.0) * (2.0 * fnn + 1.0) / 24.0 - tie_term;
        let dev = ((w_plus - mu).abs() - 0.5).max(0.0);
        two_sided_normal_p(dev / var.sqrt())
    };
    Ok(TestResult {
        statistic: w_plus,
        p_value,
        n1: x.len(),
        n2: y.len(),
        method: Method::WilcoxonSignedRank,
    })
}

/// Largest absolute gap between the two empirical CDFs.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    d
}

/// Survival function of the Kolmogorov distribution, P(K > lambda).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small lambda
        let c = -PI * PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            cdf += (c * m * m).exp();
        }
        cdf *= (2.0 * PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        // 2 * sum (-1)^(k-1) exp(-2 k^2 lambda^2), factored around the leading term
        let l2 = lambda * lambda;
        let mut tail = 1.0;
        for k in 2..=100i32 {
            let term = (-2.0 * ((k * k - 1) as f64) * l2).exp();
            if term == 0.0 {
                break;
            }
            tail += if k % 2 == 0 { -term } else { term };
        }
        (LN_2 - 2.0 * l2 + tail.ln()).exp().min(1.0)
    }
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value at
/// effective size n1*n2/(n1+n2).
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<TestResult> {
    check_sample(x)?;
    check_sample(y)?;
    let d = ks_statistic(x, y);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let en = n1 * n2 / (n1 + n2);
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(en.sqrt() * d),
        n1: x.len(),
        n2: y.len(),
        method: Method::KsTwoSample,
    })
}

fn correlation(x: &[f64], y: &[f64], method: Method) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: n });
    }
    let fnn = n as f64;
    let mx = x.iter().sum::<f64>() / fnn;
    let my = y.iter().sum::<f64>() / fnn;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || x.iter().all(|v| *v == x[0]) {
        return Err(Error::ZeroVariance("x".into()));
    }
    if syy == 0.0 || y.iter().all(|v| *v == y[0]) {
        return Err(Error::ZeroVariance("y".into()));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    // t = r sqrt(df / (1 - r^2)); the two-sided tail is I_{1-r^2}(df/2, 1/2)
    let df = fnn - 2.0;
    let one_minus = (1.0 - r * r).max(0.0);
    let p_value = if one_minus == 0.0 {
        0.0
    } else {
        beta_reg(df / 2.0, 0.5, one_minus).clamp(0.0, 1.0)
    };
    Ok(TestResult {
        statistic: r,
        p_value,
        n1: n,
        n2: n,
        method,
    })
}

/// Pearson's r with a two-sided t-test p-value (n-2 degrees of freedom).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<TestResult> {
    correlation(x, y, Method::Pearson)
}

/// Pearson's r on midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    correlation(&midranks(x), &midranks(y), Method::Spearman)
}

/// Writes `test,method,statistic,p,n1,n2,stars` rows; `test` labels what was compared.
pub fn write_results<W: Write>(w: W, rows: &[(String, TestResult)]) -> Result<()> {
    let mut w = io::writer(w);
    w.write_record(["test", "method", "statistic", "p", "n1", "n2", "stars"])?;
    for (label, r) in rows {
        w.write_record([
            label.as_str(),
            r.method.as_str(),
            &r.statistic.to_string(),
            &format!("{:?}", r.p_value),
            &r.n1.to_string(),
            &r.n2.to_string(),
            r.stars(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
