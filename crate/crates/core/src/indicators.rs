//! Integrated impact (I3), its classed variant, per-group summaries and
//! expectation ratios.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::{big, big_int, frac_to_f64, sum, to_f64, Fraction};
use crate::percentiles::{rank_class_of, PercentileAssignment, RankClassScheme};
use crate::stats::{z_residual, StatsError, ZTestOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndicatorError {
    #[error("weight {weight} for `{id}` outside [0, 1]")]
    WeightOutOfRange { id: String, weight: Fraction },
    #[error("set total must be positive")]
    NonPositiveTotal,
    #[error("group value outside [0, set total]")]
    ValueOutOfRange,
    #[error("group has a zero share of publications")]
    ZeroPublicationShare,
    #[error("regression needs at least 2 points")]
    TooFewPoints,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("x values are constant")]
    ConstantX,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn weight_of(
    a: &PercentileAssignment,
    weights: Option<&HashMap<String, Fraction>>,
) -> Result<Fraction, IndicatorError> {
    let w = weights
        .and_then(|m| m.get(&a.paper_id).copied())
        .unwrap_or_else(Fraction::one);
    if w < Fraction::zero() || w > Fraction::one() {
        return Err(IndicatorError::WeightOutOfRange { id: a.paper_id.clone(), weight: w });
    }
    Ok(w)
}

/// Sum of (optionally weighted) percentiles. Papers missing from `weights`
/// count fully.
pub fn i3(
    assignments: &[PercentileAssignment],
    weights: Option<&HashMap<String, Fraction>>,
) -> Result<BigRational, IndicatorError> {
    let terms = assignments
        .iter()
        .map(|a| Ok(weight_of(a, weights)? * a.percentile))
        .collect::<Result<Vec<Fraction>, IndicatorError>>()?;
    Ok(sum(&terms))
}

/// Sum of (optionally weighted) rank-class weights under `scheme`.
pub fn i3_classed(
    assignments: &[PercentileAssignment],
    scheme: &RankClassScheme,
    weights: Option<&HashMap<String, Fraction>>,
) -> Result<BigRational, IndicatorError> {
    let terms = assignments
        .iter()
        .map(|a| {
            let class = Fraction::from_integer(i64::from(rank_class_of(a.percentile, scheme)));
            Ok(weight_of(a, weights)? * class)
        })
        .collect::<Result<Vec<Fraction>, IndicatorError>>()?;
    Ok(sum(&terms))
}

/// One paper's contribution to a group.
#[derive(Debug, Clone, Copy)]
pub struct GroupMember<'a> {
    pub assignment: &'a PercentileAssignment,
    /// 1 for journals; the country fraction for countries.
    pub weight: Fraction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub group: String,
    pub n_papers: BigRational,
    pub i3: BigRational,
    pub i3_classed: BigRational,
    pub mean_percentile: BigRational,
    pub sem_percentile: f64,
    pub median_percentile: Fraction,
    pub mean_class: BigRational,
    pub sem_class: f64,
    pub median_class: Fraction,
    pub total_citations: BigRational,
    pub citations_per_paper: BigRational,
    pub share_pubs_percent: BigRational,
    pub share_i3_percent: BigRational,
    pub share_classed_percent: BigRational,
    pub expected_i3: Option<BigRational>,
    pub ratio_i3: Option<BigRational>,
    pub ratio_classed: Option<BigRational>,
    pub z_i3: Option<ZTestOutcome>,
    pub z_classed: Option<ZTestOutcome>,
    /// Aggregate rows overlap their member rows and are kept out of totals.
    pub overlapping: bool,
}

/// Weighted lower median: the smallest value at which the cumulative weight
/// reaches half of the total.
fn weighted_median(values: &mut [(Fraction, Fraction)]) -> Fraction {
    values.sort_by_key(|a| a.0);
    let total = sum(values.iter().map(|(_, w)| w));
    let half = total / big_int(2);
    let mut cum = BigRational::zero();
    for (v, w) in values.iter() {
        cum += big(w);
        if !w.is_zero() && cum >= half {
            return *v;
        }
    }
    values.last().map_or_else(Fraction::zero, |(v, _)| *v)
}

/// Frequency-weighted standard error of the mean, `n - 1` in the variance.
fn weighted_sem(values: &[(f64, f64)], mean: f64) -> f64 {
    let w: f64 = values.iter().map(|(_, w)| w).sum();
    if w <= 1.0 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|(x, wt)| wt * (x - mean).powi(2)).sum();
    (ss / (w - 1.0) / w).sqrt()
}

/// Fills everything except shares, ratios and significance.
pub fn summarize_group(group: &str, members: &[GroupMember<'_>]) -> GroupSummary {
    let weights: Vec<Fraction> = members.iter().map(|m| m.weight).collect();
    let n = sum(&weights);
    let pct: Vec<Fraction> = members.iter().map(|m| m.weight * m.assignment.percentile).collect();
    let cls: Vec<Fraction> = members
        .iter()
        .map(|m| m.weight * i64::from(m.assignment.class_weight))
        .collect();
    let cit: Vec<Fraction> = members
        .iter()
        .map(|m| m.weight * m.assignment.citations as i64)
        .collect();
    let i3 = sum(&pct);
    let i3_classed = sum(&cls);
    let total_citations = sum(&cit);
    let per_n = |v: &BigRational| if n.is_zero() { BigRational::zero() } else { v / &n };
    let mean_percentile = per_n(&i3);
    let mean_class = per_n(&i3_classed);
    let citations_per_paper = per_n(&total_citations);

    let fw: Vec<f64> = weights.iter().map(frac_to_f64).collect();
    let sem_percentile = weighted_sem(
        &members
            .iter()
            .zip(&fw)
            .map(|(m, &w)| (frac_to_f64(&m.assignment.percentile), w))
            .collect::<Vec<_>>(),
        to_f64(&mean_percentile),
    );
    let sem_class = weighted_sem(
        &members
            .iter()
            .zip(&fw)
            .map(|(m, &w)| (f64::from(m.assignment.class_weight), w))
            .collect::<Vec<_>>(),
        to_f64(&mean_class),
    );
    let median_percentile = weighted_median(
        &mut members.iter().map(|m| (m.assignment.percentile, m.weight)).collect::<Vec<_>>(),
    );
    let median_class = weighted_median(
        &mut members
            .iter()
            .map(|m| (Fraction::from_integer(i64::from(m.assignment.class_weight)), m.weight))
            .collect::<Vec<_>>(),
    );
    GroupSummary {
        group: group.to_string(),
        n_papers: n,
        i3,
        i3_classed,
        mean_percentile,
        sem_percentile,
        median_percentile,
        mean_class,
        sem_class,
        median_class,
        total_citations,
        citations_per_paper,
        share_pubs_percent: BigRational::zero(),
        share_i3_percent: BigRational::zero(),
        share_classed_percent: BigRational::zero(),
        expected_i3: None,
        ratio_i3: None,
        ratio_classed: None,
        z_i3: None,
        z_classed: None,
        overlapping: false,
    }
}

/// `100 * group_value / set_total`.
pub fn share_of_total(
    group_value: &BigRational,
    set_total: &BigRational,
) -> Result<BigRational, IndicatorError> {
    if !set_total.is_positive() {
        return Err(IndicatorError::NonPositiveTotal);
    }
    if group_value.is_negative() || group_value > set_total {
        return Err(IndicatorError::ValueOutOfRange);
    }
    Ok(group_value * big_int(100) / set_total)
}

/// Whole-set sums against which groups are compared.
#[derive(Debug, Clone, PartialEq)]
pub struct SetTotals {
    pub pubs: BigRational,
    pub i3: BigRational,
    pub i3_classed: BigRational,
}

impl SetTotals {
    pub fn of(summary: &GroupSummary) -> Self {
        SetTotals {
            pubs: summary.n_papers.clone(),
            i3: summary.i3.clone(),
            i3_classed: summary.i3_classed.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Percentile,
    Classed,
}

/// Impact expected from the group's share of publications, and the ratio
/// of observed to expected (equivalently, impact share over publication
/// share).
pub fn observed_vs_expected(
    group: &GroupSummary,
    totals: &SetTotals,
    measure: Measure,
) -> Result<(BigRational, BigRational), IndicatorError> {
    if !totals.pubs.is_positive() {
        return Err(IndicatorError::NonPositiveTotal);
    }
    if !group.n_papers.is_positive() {
        return Err(IndicatorError::ZeroPublicationShare);
    }
    let (observed, set_value) = match measure {
        Measure::Percentile => (&group.i3, &totals.i3),
        Measure::Classed => (&group.i3_classed, &totals.i3_classed),
    };
    if !set_value.is_positive() {
        return Err(IndicatorError::NonPositiveTotal);
    }
    let expected = set_value * &group.n_papers / &totals.pubs;
    let ratio = observed / &expected;
    Ok((expected, ratio))
}

/// Fills shares, ratios and z-tests of a summary against set totals. The
/// z-test runs on raw sums.
pub fn attach_expectations(
    summary: &mut GroupSummary,
    totals: &SetTotals,
    alphas: (f64, f64),
) -> Result<(), IndicatorError> {
    summary.share_pubs_percent = share_of_total(&summary.n_papers, &totals.pubs)?;
    summary.share_i3_percent = share_of_total(&summary.i3, &totals.i3)?;
    summary.share_classed_percent = share_of_total(&summary.i3_classed, &totals.i3_classed)?;
    if summary.n_papers.is_positive() {
        let (exp_i3, ratio_i3) = observed_vs_expected(summary, totals, Measure::Percentile)?;
        let (exp_cl, ratio_cl) = observed_vs_expected(summary, totals, Measure::Classed)?;
        summary.z_i3 = Some(z_residual(to_f64(&summary.i3), to_f64(&exp_i3), alphas)?);
        summary.z_classed = Some(z_residual(to_f64(&summary.i3_classed), to_f64(&exp_cl), alphas)?);
        summary.expected_i3 = Some(exp_i3);
        summary.ratio_i3 = Some(ratio_i3);
        summary.ratio_classed = Some(ratio_cl);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<Regression, IndicatorError> {
    if x.len() != y.len() {
        return Err(IndicatorError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(IndicatorError::TooFewPoints);
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(IndicatorError::ConstantX);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(Regression { slope, intercept, r_squared })
}
