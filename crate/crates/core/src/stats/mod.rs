//! Significance testing: standardized residuals for observed impact, and
//! rank-based tests for differences between citation distributions.

pub mod dist;

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

pub use dist::{chi_square_sf, normal_cdf, normal_quantile, normal_two_sided_p, t_two_sided_p};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("need at least {0} groups")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {0} observations")]
    TooFewObservations(usize),
    #[error("input has zero variance")]
    ZeroVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    PlusPlus,
    Plus,
    None,
    Minus,
    MinusMinus,
    /// Expected value below five.
    Unreliable,
}

impl Mark {
    pub fn symbol(self) -> &'static str {
        match self {
            Mark::PlusPlus => "++",
            Mark::Plus => "+",
            Mark::None => "",
            Mark::Minus => "-",
            Mark::MinusMinus => "--",
            Mark::Unreliable => "n/r",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZTestOutcome {
    pub observed: f64,
    pub expected: f64,
    /// Absent when the expectation is too small to test.
    pub z: Option<f64>,
    pub mark: Mark,
}

/// Expected counts below this are not tested.
pub const MIN_EXPECTED: f64 = 5.0;

/// Two-sided critical z for a significance level.
pub fn critical_z(alpha: f64) -> Result<f64, StatsError> {
    normal_quantile(1.0 - alpha / 2.0)
}

/// Standardized chi-square residual `(observed - expected) / sqrt(expected)`,
/// marked at the two levels in `alphas` (`(0.05, 0.01)` by default).
pub fn z_residual(
    observed: f64,
    expected: f64,
    alphas: (f64, f64),
) -> Result<ZTestOutcome, StatsError> {
    if expected.is_nan() || expected < 0.0 || !observed.is_finite() {
        return Err(StatsError::Domain(format!(
            "observed {observed}, expected {expected}"
        )));
    }
    if expected < MIN_EXPECTED {
        return Ok(ZTestOutcome { observed, expected, z: None, mark: Mark::Unreliable });
    }
    let z = (observed - expected) / expected.sqrt();
    let (z05, z01) = (critical_z(alphas.0)?, critical_z(alphas.1)?);
    let mark = if z >= z01 {
        Mark::PlusPlus
    } else if z >= z05 {
        Mark::Plus
    } else if z <= -z01 {
        Mark::MinusMinus
    } else if z <= -z05 {
        Mark::Minus
    } else {
        Mark::None
    };
    Ok(ZTestOutcome { observed, expected, z: Some(z), mark })
}

/// Mid-ranks (ties averaged, 1-based) and the tie term `Σ(t³ - t)`.
pub fn mid_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

struct Pooled {
    n: f64,
    ties: f64,
    rank_sums: Vec<f64>,
    sizes: Vec<f64>,
}

fn pool<S: AsRef<[f64]>>(groups: &[S], min_groups: usize) -> Result<Pooled, StatsError> {
    if groups.len() < min_groups {
        return Err(StatsError::TooFewGroups(min_groups));
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().is_empty()) {
        return Err(StatsError::EmptyGroup(i));
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    let (ranks, ties) = mid_ranks(&all);
    let mut rank_sums = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for g in groups {
        let len = g.as_ref().len();
        rank_sums.push(ranks[offset..offset + len].iter().sum());
        offset += len;
    }
    Ok(Pooled {
        n: all.len() as f64,
        ties,
        rank_sums,
        sizes: groups.iter().map(|g| g.as_ref().len() as f64).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub df: usize,
    pub p: f64,
}

/// Kruskal-Wallis H with tie correction; p from chi-square with k-1 df.
pub fn kruskal_wallis<S: AsRef<[f64]>>(groups: &[S]) -> Result<KruskalWallis, StatsError> {
    let pooled = pool(groups, 2)?;
    let n = pooled.n;
    let df = groups.len() - 1;
    let correction = 1.0 - pooled.ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(KruskalWallis { h: 0.0, df, p: 1.0 });
    }
    let sum: f64 = pooled
        .rank_sums
        .iter()
        .zip(&pooled.sizes)
        .map(|(r, m)| r * r / m)
        .sum();
    let h = ((12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction).max(0.0);
    Ok(KruskalWallis { h, df, p: chi_square_sf(h, df as f64)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseMethod {
    Dunn,
    MannWhitney,
}

/// Family-wise alpha split over the `k(k-1)/2` pairwise comparisons.
pub fn per_comparison_alpha(k: usize, family_alpha: f64) -> f64 {
    let comparisons = k * k.saturating_sub(1) / 2;
    if comparisons == 0 {
        family_alpha
    } else {
        family_alpha / comparisons as f64
    }
}

/// Outcome of all pairwise comparisons among `k` groups. `z[i][j]` is
/// positive when group `i` ranks above group `j`; `p` and `significant`
/// are symmetric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseMatrix {
    pub labels: Vec<String>,
    pub z: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
    pub family_alpha: f64,
    pub per_comparison_alpha: f64,
    pub method: PairwiseMethod,
}

impl PairwiseMatrix {
    fn build(
        labels: Vec<String>,
        family_alpha: f64,
        method: PairwiseMethod,
        mut compare: impl FnMut(usize, usize) -> Result<(f64, f64), StatsError>,
    ) -> Result<Self, StatsError> {
        let k = labels.len();
        let alpha = per_comparison_alpha(k, family_alpha);
        let mut z = vec![vec![0.0; k]; k];
        let mut p = vec![vec![1.0; k]; k];
        let mut significant = vec![vec![false; k]; k];
        for i in 0..k {
            for j in i + 1..k {
                let (zij, pij) = compare(i, j)?;
                z[i][j] = zij + 0.0;
                z[j][i] = 0.0 - zij;
                p[i][j] = pij;
                p[j][i] = pij;
                significant[i][j] = pij < alpha;
                significant[j][i] = pij < alpha;
            }
        }
        Ok(PairwiseMatrix {
            labels,
            z,
            p,
            significant,
            family_alpha,
            per_comparison_alpha: alpha,
            method,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Full matrix of p-values (4 significant digits), labels as the first
    /// row and column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for l in &self.labels {
            out.push(',');
            out.push_str(&crate::tables::csv_field(l));
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(&crate::tables::csv_field(l));
            for j in 0..self.len() {
                let _ = write!(out, ",{}", format_sig(self.p[i][j], 4));
            }
            out.push('\n');
        }
        out
    }

    /// Pairs whose difference is not significant, one `a,b,z,p` row each.
    pub fn similar_pairs_csv(&self) -> String {
        let mut out = String::from("source,target,z,p\n");
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if !self.significant[i][j] {
                    let _ = writeln!(
                        out,
                        "{},{},{:.4},{}",
                        crate::tables::csv_field(&self.labels[i]),
                        crate::tables::csv_field(&self.labels[j]),
                        self.z[i][j],
                        format_sig(self.p[i][j], 4)
                    );
                }
            }
        }
        out
    }
}

/// Formats with `digits` significant digits.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        return format!("{:.*e}", digits - 1, v);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Dunn's multiple comparisons on ranks pooled over all groups.
pub fn dunn_pairwise<S: AsRef<[f64]>>(
    labels: &[String],
    groups: &[S],
    family_alpha: f64,
) -> Result<PairwiseMatrix, StatsError> {
    if labels.len() != groups.len() {
        return Err(StatsError::LengthMismatch(labels.len(), groups.len()));
    }
    let pooled = pool(groups, 1)?;
    let n = pooled.n;
    let variance = if n > 1.0 {
        n * (n + 1.0) / 12.0 - pooled.ties / (12.0 * (n - 1.0))
    } else {
        0.0
    };
    let means: Vec<f64> = pooled
        .rank_sums
        .iter()
        .zip(&pooled.sizes)
        .map(|(r, m)| r / m)
        .collect();
    PairwiseMatrix::build(labels.to_vec(), family_alpha, PairwiseMethod::Dunn, |i, j| {
        let se = (variance * (1.0 / pooled.sizes[i] + 1.0 / pooled.sizes[j])).sqrt();
        if se.is_nan() || se <= 0.0 {
            return Ok((0.0, 1.0));
        }
        let z = (means[i] - means[j]) / se;
        Ok((z, normal_two_sided_p(z)))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitney {
    /// `min(U_a, U_b)`.
    pub u: f64,
    pub u_a: f64,
    pub u_b: f64,
    /// Normal approximation of the smaller U, so never positive.
    pub z: f64,
    pub p: f64,
    pub significant: bool,
}

/// Mann-Whitney U with tie-corrected normal approximation, no continuity
/// correction.
pub fn mann_whitney(a: &[f64], b: &[f64], alpha: f64) -> Result<MannWhitney, StatsError> {
    mann_whitney_with(a, b, alpha, false)
}

pub fn mann_whitney_with(
    a: &[f64],
    b: &[f64],
    alpha: f64,
    continuity: bool,
) -> Result<MannWhitney, StatsError> {
    let pooled = pool(&[a, b], 2)?;
    let (na, nb) = (pooled.sizes[0], pooled.sizes[1]);
    let n = na + nb;
    let u_a = pooled.rank_sums[0] - na * (na + 1.0) / 2.0;
    let u_b = na * nb - u_a;
    let u = u_a.min(u_b);
    let mean = na * nb / 2.0;
    let variance = na * nb / 12.0 * ((n + 1.0) - pooled.ties / (n * (n - 1.0)));
    let (z, p) = if variance > 0.0 {
        let mut diff = u - mean;
        if continuity {
            diff = (diff + 0.5).min(0.0);
        }
        let z = diff / variance.sqrt();
        (z, normal_two_sided_p(z))
    } else {
        (0.0, 1.0)
    };
    Ok(MannWhitney { u, u_a, u_b, z, p, significant: p < alpha })
}

/// Mann-Whitney on every pair, Bonferroni-corrected.
pub fn mann_whitney_pairwise<S: AsRef<[f64]>>(
    labels: &[String],
    groups: &[S],
    family_alpha: f64,
) -> Result<PairwiseMatrix, StatsError> {
    if labels.len() != groups.len() {
        return Err(StatsError::LengthMismatch(labels.len(), groups.len()));
    }
    PairwiseMatrix::build(labels.to_vec(), family_alpha, PairwiseMethod::MannWhitney, |i, j| {
        let mw = mann_whitney(groups[i].as_ref(), groups[j].as_ref(), 1.0)?;
        // orient the sign: positive when group i ranks higher
        let z = if mw.u_a >= mw.u_b { -mw.z } else { mw.z };
        Ok((z, mw.p))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
    /// Two-sided, via t with n-2 df.
    pub p: f64,
}

fn correlation_p(r: f64, n: usize) -> Result<f64, StatsError> {
    if r.abs() >= 1.0 {
        return Ok(0.0);
    }
    let df = (n - 2) as f64;
    t_two_sided_p(r * (df / (1.0 - r * r)).sqrt(), df)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations(3));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation { r, n, p: correlation_p(r, n)? })
}

/// Pearson correlation of the mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    pearson(&mid_ranks(x).0, &mid_ranks(y).0)
}

/// First-order partial correlation of x and y controlling for z.
pub fn partial_correlation(r_xy: f64, r_xz: f64, r_yz: f64) -> Result<f64, StatsError> {
    if !(r_xz.abs() < 1.0 && r_yz.abs() < 1.0) {
        return Err(StatsError::Domain(format!(
            "control correlations must be inside (-1, 1): {r_xz}, {r_yz}"
        )));
    }
    Ok((r_xy - r_xz * r_yz) / ((1.0 - r_xz * r_xz) * (1.0 - r_yz * r_yz)).sqrt())
}
