//! Percentile and rank-class attribution at the paper level.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Ratio;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{partition_reference_sets, Corpus, GroupingConfig, PaperRecord, ReferenceSet, ReferenceSetKey};
use crate::exact::{round_frac_half_up, Fraction};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PercentileError {
    #[error("reference set is empty")]
    EmptyReferenceSet,
    #[error("citation count {0} is not a member of the reference set")]
    NotAMember(u64),
}

/// How an item is ranked against items with the same citation count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Count every other item with at most as many citations: ties share the
    /// top rank of their group.
    #[default]
    Highest,
    /// Count only items with strictly fewer citations.
    StrictLower,
}

/// Descending percentile thresholds with integer weights, plus the weight
/// for everything below the last threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankClassScheme {
    classes: Vec<(Fraction, u32)>,
    catch_all: u32,
}

impl RankClassScheme {
    pub fn new(classes: Vec<(Fraction, u32)>, catch_all: u32) -> Result<Self, String> {
        let hundred = Fraction::from_integer(100);
        for (t, _) in &classes {
            if *t <= Fraction::zero() || *t >= hundred {
                return Err(format!("threshold {t} outside (0, 100)"));
            }
        }
        for pair in classes.windows(2) {
            if pair[0].0 <= pair[1].0 {
                return Err("thresholds must be strictly descending".into());
            }
            if pair[0].1 <= pair[1].1 {
                return Err("weights must be strictly descending".into());
            }
        }
        if catch_all == 0 {
            return Err("catch-all weight must be at least 1".into());
        }
        if let Some((_, w)) = classes.last() {
            if *w <= catch_all {
                return Err("catch-all weight must be the minimum".into());
            }
        }
        Ok(RankClassScheme { classes, catch_all })
    }

    /// Top-1%, 5%, 10%, 25%, 50% and bottom-50%, weighted 6 down to 1.
    pub fn nsf_six() -> Self {
        let classes = [(99, 6), (95, 5), (90, 4), (75, 3), (50, 2)]
            .into_iter()
            .map(|(t, w)| (Ratio::from_integer(t), w))
            .collect();
        RankClassScheme { classes, catch_all: 1 }
    }

    pub fn classes(&self) -> &[(Fraction, u32)] {
        &self.classes
    }

    pub fn catch_all_weight(&self) -> u32 {
        self.catch_all
    }

    pub fn max_weight(&self) -> u32 {
        self.classes.first().map_or(self.catch_all, |c| c.1)
    }
}

impl Default for RankClassScheme {
    fn default() -> Self {
        Self::nsf_six()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PercentileAssignment {
    pub paper_id: String,
    /// Exact value on the 100-point scale.
    #[serde(serialize_with = "ser_fraction")]
    pub percentile: Fraction,
    pub class_weight: u32,
    pub refset: ReferenceSetKey,
    pub citations: u64,
}

fn ser_fraction<S: serde::Serializer>(v: &Fraction, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(crate::exact::frac_to_f64(v))
}

/// `100 * (q + adjustment) / N`, where `q` counts the items the paper
/// outranks under `policy`.
pub fn percentile_of(
    citations: u64,
    refset: &ReferenceSet,
    policy: TiePolicy,
    adjustment: Fraction,
) -> Result<Fraction, PercentileError> {
    let n = refset.len();
    if n == 0 {
        return Err(PercentileError::EmptyReferenceSet);
    }
    if !refset.contains(citations) {
        return Err(PercentileError::NotAMember(citations));
    }
    let q = match policy {
        TiePolicy::Highest => refset.count_at_most(citations) - 1,
        TiePolicy::StrictLower => refset.count_below(citations),
    };
    Ok((Fraction::from_integer(q as i64) + adjustment) * 100 / n as i64)
}

/// Weight of the first class whose threshold is at or below `percentile`.
pub fn rank_class_of(percentile: Fraction, scheme: &RankClassScheme) -> u32 {
    scheme
        .classes
        .iter()
        .find(|(t, _)| percentile >= *t)
        .map_or(scheme.catch_all, |(_, w)| *w)
}

/// Scores every citable record against its own reference set. Output is
/// sorted by paper id.
pub fn assign_all(
    corpus: &Corpus,
    config: &GroupingConfig,
) -> Result<Vec<PercentileAssignment>, PercentileError> {
    let sets = partition_reference_sets(corpus);
    let mut by_key: BTreeMap<ReferenceSetKey, Vec<&PaperRecord>> = BTreeMap::new();
    for r in corpus.citable() {
        by_key.entry(r.reference_key()).or_default().push(r);
    }
    let groups: Vec<(&ReferenceSet, Vec<&PaperRecord>)> = by_key
        .into_iter()
        .map(|(k, recs)| (&sets[&k], recs))
        .collect();
    let scored: Result<Vec<Vec<PercentileAssignment>>, PercentileError> = groups
        .par_iter()
        .map(|(set, recs)| {
            let mut cache: BTreeMap<u64, (Fraction, u32)> = BTreeMap::new();
            recs.iter()
                .map(|r| {
                    let (percentile, class_weight) = match cache.get(&r.citations) {
                        Some(v) => *v,
                        None => {
                            let p = percentile_of(r.citations, set, config.tie_policy, config.adjustment)?;
                            let v = (p, rank_class_of(p, &config.scheme));
                            cache.insert(r.citations, v);
                            v
                        }
                    };
                    Ok(PercentileAssignment {
                        paper_id: r.id.clone(),
                        percentile,
                        class_weight,
                        refset: set.key,
                        citations: r.citations,
                    })
                })
                .collect()
        })
        .collect();
    let mut out: Vec<PercentileAssignment> = scored?.into_iter().flatten().collect();
    out.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    Ok(out)
}

pub const ASSIGNMENTS_HEADER: &str = "paper_id,refset_doc_type,refset_year,percentile,class_weight";

/// CSV export; percentiles printed with one decimal, halves rounded up.
pub fn assignments_csv(assignments: &[PercentileAssignment]) -> String {
    let mut out = String::with_capacity(assignments.len() * 40);
    out.push_str(ASSIGNMENTS_HEADER);
    out.push('\n');
    for a in assignments {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            crate::tables::csv_field(&a.paper_id),
            a.refset.doc_type,
            a.refset.year,
            round_frac_half_up(&a.percentile, 1),
            a.class_weight
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocType, PaperRecord};

    fn set(counts: &[u64]) -> ReferenceSet {
        ReferenceSet::new(
            ReferenceSetKey { doc_type: DocType::Article, year: 2007 },
            counts.to_vec(),
        )
    }

    fn adj() -> Fraction {
        Ratio::new(9, 10)
    }

    fn p(n: i64) -> Fraction {
        Ratio::from_integer(n)
    }

    #[test]
    fn ten_reviews_top_item() {
        let s = set(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 20]);
        let v = percentile_of(20, &s, TiePolicy::Highest, adj()).unwrap();
        assert_eq!(v, p(99));
        assert_eq!(rank_class_of(v, &RankClassScheme::nsf_six()), 6);
        // Without the adjustment the best review is stuck at the 90th.
        assert_eq!(percentile_of(20, &s, TiePolicy::Highest, Fraction::zero()).unwrap(), p(90));
    }

    #[test]
    fn fixture_f1() {
        let s = set(&[0, 1, 1, 5, 10]);
        let got: Vec<Fraction> = [0, 1, 1, 5, 10]
            .iter()
            .map(|&c| percentile_of(c, &s, TiePolicy::Highest, adj()).unwrap())
            .collect();
        assert_eq!(got, vec![p(18), p(58), p(58), p(78), p(98)]);
        let weights: Vec<u32> = got.iter().map(|&v| rank_class_of(v, &RankClassScheme::nsf_six())).collect();
        assert_eq!(weights, vec![1, 2, 2, 3, 5]);
        // strictly-lower counting puts the tied pair at the bottom of its group
        assert_eq!(percentile_of(1, &s, TiePolicy::StrictLower, adj()).unwrap(), p(38));
    }

    #[test]
    fn singleton_and_errors() {
        assert_eq!(percentile_of(42, &set(&[42]), TiePolicy::Highest, adj()).unwrap(), p(90));
        assert_eq!(
            percentile_of(1, &set(&[]), TiePolicy::Highest, adj()),
            Err(PercentileError::EmptyReferenceSet)
        );
        assert_eq!(
            percentile_of(3, &set(&[1, 2]), TiePolicy::Highest, adj()),
            Err(PercentileError::NotAMember(3))
        );
    }

    #[test]
    fn all_tied() {
        let s = set(&[4; 7]);
        let v = percentile_of(4, &s, TiePolicy::Highest, adj()).unwrap();
        assert_eq!(v, (p(6) + adj()) * 100 / 7);
    }

    #[test]
    fn class_boundaries() {
        let scheme = RankClassScheme::nsf_six();
        assert_eq!(rank_class_of(Ratio::new(499, 10), &scheme), 1);
        assert_eq!(rank_class_of(p(50), &scheme), 2);
        assert_eq!(rank_class_of(p(99), &scheme), 6);
        assert_eq!(rank_class_of(Ratio::new(9899, 100), &scheme), 5);
    }

    #[test]
    fn scheme_validation() {
        let r = |t: i64, w| (Ratio::from_integer(t), w);
        assert!(RankClassScheme::new(vec![r(50, 2), r(90, 3)], 1).is_err());
        assert!(RankClassScheme::new(vec![r(90, 2), r(50, 3)], 1).is_err());
        assert!(RankClassScheme::new(vec![r(90, 3), r(50, 2)], 2).is_err());
        assert!(RankClassScheme::new(vec![r(100, 3)], 1).is_err());
        assert!(RankClassScheme::new(vec![r(90, 3)], 0).is_err());
        assert!(RankClassScheme::new(vec![r(90, 3), r(50, 2)], 1).is_ok());
        assert!(RankClassScheme::new(vec![], 1).is_ok());
    }

    fn record(id: &str, year: i32, citations: u64) -> PaperRecord {
        PaperRecord {
            id: id.into(),
            journal: "J".into(),
            year,
            doc_type: DocType::Article,
            citations,
            countries: vec![],
        }
    }

    #[test]
    fn assign_all_is_sorted_and_partitioned() {
        let recs = vec![
            record("e", 2007, 10),
            record("a", 2007, 0),
            record("c", 2007, 1),
            record("b", 2007, 1),
            record("d", 2007, 5),
            record("z", 2008, 100),
        ];
        let corpus = Corpus::from_records(recs.clone()).unwrap();
        let out = assign_all(&corpus, &GroupingConfig::default()).unwrap();
        let ids: Vec<&str> = out.iter().map(|a| a.paper_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c", "d", "e", "z"]);
        let vals: Vec<Fraction> = out.iter().map(|a| a.percentile).collect();
        assert_eq!(vals, vec![p(18), p(58), p(58), p(78), p(98), p(90)]);

        // Changing the other set does not move these percentiles.
        let mut more = recs;
        more.push(record("y", 2008, 0));
        let corpus = Corpus::from_records(more).unwrap();
        let out2 = assign_all(&corpus, &GroupingConfig::default()).unwrap();
        assert_eq!(&out2[..5], &out[..5]);
    }

    #[test]
    fn csv_export() {
        let corpus = Corpus::from_records(vec![record("a", 2007, 0), record("b", 2007, 3), record("c", 2007, 4)]).unwrap();
        let out = assign_all(&corpus, &GroupingConfig::default()).unwrap();
        assert_eq!(
            assignments_csv(&out),
            "paper_id,refset_doc_type,refset_year,percentile,class_weight\n\
             a,article,2007,30.0,1\nb,article,2007,63.3,2\nc,article,2007,96.7,5\n"
        );
    }
}
