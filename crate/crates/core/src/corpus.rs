//! Paper-level records: parsing, validation, reference sets and country
//! fractions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{parse_decimal, Fraction};
use crate::percentiles::{RankClassScheme, TiePolicy};

pub const CSV_HEADER: [&str; 6] = ["id", "journal", "year", "doc_type", "citations", "countries"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: input is not valid UTF-8")]
    InvalidUtf8 { line: usize },
    #[error("missing or unexpected header: expected `{}`, found `{found}`", CSV_HEADER.join(","))]
    BadHeader { found: String },
    #[error("line {line}: field `{field}`: {message}")]
    Malformed {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: negative citation count {value} for `{id}`")]
    NegativeCitations { line: usize, id: String, value: i64 },
    #[error("line {line}: unparseable year `{value}`")]
    UnparseableYear { line: usize, value: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("aggregate `{0}` collides with a country token")]
    AggregateCollision(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocType {
    Article,
    ProceedingsPaper,
    Review,
    Letter,
    Other,
}

impl DocType {
    pub fn as_str(self) -> &'static str {
        match self {
            DocType::Article => "article",
            DocType::ProceedingsPaper => "proceedings_paper",
            DocType::Review => "review",
            DocType::Letter => "letter",
            DocType::Other => "other",
        }
    }

    /// Articles, proceedings papers, reviews and letters count as citable.
    pub fn is_citable(self) -> bool {
        self != DocType::Other
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "article" => Ok(DocType::Article),
            "proceedings_paper" => Ok(DocType::ProceedingsPaper),
            "review" => Ok(DocType::Review),
            "letter" => Ok(DocType::Letter),
            "other" => Ok(DocType::Other),
            _ => Err(format!("unknown document type `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PaperRecord {
    pub id: String,
    pub journal: String,
    pub year: i32,
    pub doc_type: DocType,
    pub citations: u64,
    pub countries: Vec<String>,
}

impl PaperRecord {
    pub fn reference_key(&self) -> ReferenceSetKey {
        ReferenceSetKey {
            doc_type: self.doc_type,
            year: self.year,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ReferenceSetKey {
    pub doc_type: DocType,
    pub year: i32,
}

/// Citation counts of every citable item sharing one key, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceSet {
    pub key: ReferenceSetKey,
    counts: Vec<u64>,
}

impl ReferenceSet {
    pub fn new(key: ReferenceSetKey, mut counts: Vec<u64>) -> Self {
        counts.sort_unstable();
        ReferenceSet { key, counts }
    }

    pub fn citation_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Number of members with fewer than `c` citations.
    pub fn count_below(&self, c: u64) -> usize {
        self.counts.partition_point(|&x| x < c)
    }

    /// Number of members with at most `c` citations.
    pub fn count_at_most(&self, c: u64) -> usize {
        self.counts.partition_point(|&x| x <= c)
    }

    pub fn contains(&self, c: u64) -> bool {
        self.counts.binary_search(&c).is_ok()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub total_records: usize,
    pub citable_records: usize,
    pub excluded_other: usize,
    /// Citable records without any country token.
    pub without_address: usize,
    pub by_key: BTreeMap<String, usize>,
}

impl ValidationReport {
    /// Percentage of citable records carrying at least one country token.
    pub fn address_coverage_percent(&self) -> Option<f64> {
        (self.citable_records > 0).then(|| {
            100.0 * (self.citable_records - self.without_address) as f64
                / self.citable_records as f64
        })
    }
}

/// An immutable, validated record set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<PaperRecord>,
    report: ValidationReport,
}

impl Corpus {
    pub fn from_records(records: Vec<PaperRecord>) -> Result<Self, CorpusError> {
        let mut seen = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if seen.insert(r.id.as_str(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    line: i + 1,
                    id: r.id.clone(),
                });
            }
        }
        let report = build_report(&records);
        Ok(Corpus { records, report })
    }

    pub fn records(&self) -> &[PaperRecord] {
        &self.records
    }

    pub fn citable(&self) -> impl Iterator<Item = &PaperRecord> {
        self.records.iter().filter(|r| r.doc_type.is_citable())
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn build_report(records: &[PaperRecord]) -> ValidationReport {
    let mut report = ValidationReport {
        total_records: records.len(),
        ..Default::default()
    };
    for r in records {
        *report
            .by_key
            .entry(format!("{}/{}", r.doc_type, r.year))
            .or_insert(0) += 1;
        if r.doc_type.is_citable() {
            report.citable_records += 1;
            if r.countries.is_empty() {
                report.without_address += 1;
            }
        } else {
            report.excluded_other += 1;
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(InputFormat::Csv),
            "jsonl" => Ok(InputFormat::Jsonl),
            _ => Err(format!("unknown input format `{s}`")),
        }
    }
}

/// Parses and validates a record stream.
pub fn load_corpus(source: &[u8], format: InputFormat) -> Result<Corpus, CorpusError> {
    let text = std::str::from_utf8(source).map_err(|e| CorpusError::InvalidUtf8 {
        line: 1 + source[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let records = match format {
        InputFormat::Csv => parse_csv(text)?,
        InputFormat::Jsonl => parse_jsonl(text)?,
    };
    let mut seen: HashMap<&str, ()> = HashMap::with_capacity(records.len());
    for (line, r) in &records {
        if seen.insert(r.id.as_str(), ()).is_some() {
            return Err(CorpusError::DuplicateId {
                line: *line,
                id: r.id.clone(),
            });
        }
    }
    let records: Vec<PaperRecord> = records.into_iter().map(|(_, r)| r).collect();
    let report = build_report(&records);
    Ok(Corpus { records, report })
}

struct RawFields<'a> {
    line: usize,
    id: &'a str,
    journal: &'a str,
    doc_type: &'a str,
}

impl RawFields<'_> {
    fn finish(
        &self,
        year: i32,
        citations: i64,
        countries: Vec<String>,
    ) -> Result<(usize, PaperRecord), CorpusError> {
        if self.id.is_empty() {
            return Err(CorpusError::Malformed {
                line: self.line,
                field: "id",
                message: "empty id".into(),
            });
        }
        let doc_type = self
            .doc_type
            .parse::<DocType>()
            .map_err(|message| CorpusError::Malformed {
                line: self.line,
                field: "doc_type",
                message,
            })?;
        if citations < 0 {
            return Err(CorpusError::NegativeCitations {
                line: self.line,
                id: self.id.to_string(),
                value: citations,
            });
        }
        Ok((
            self.line,
            PaperRecord {
                id: self.id.to_string(),
                journal: self.journal.to_string(),
                year,
                doc_type,
                citations: citations as u64,
                countries,
            },
        ))
    }
}

fn split_countries(field: &str) -> Vec<String> {
    field
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_csv(text: &str) -> Result<Vec<(usize, PaperRecord)>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CorpusError::BadHeader {
            found: e.to_string(),
        })?
        .clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(CorpusError::BadHeader {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CorpusError::Malformed {
            line: e.position().map_or(0, |p| p.line() as usize),
            field: "row",
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        if row.len() != CSV_HEADER.len() {
            return Err(CorpusError::Malformed {
                line,
                field: "row",
                message: format!("expected 6 fields, found {}", row.len()),
            });
        }
        let raw = RawFields {
            line,
            id: &row[0],
            journal: &row[1],
            doc_type: &row[3],
        };
        let year = row[2]
            .parse::<i32>()
            .map_err(|_| CorpusError::UnparseableYear {
                line,
                value: row[2].to_string(),
            })?;
        let citations = row[4]
            .parse::<i64>()
            .map_err(|e| CorpusError::Malformed {
                line,
                field: "citations",
                message: format!("`{}`: {e}", &row[4]),
            })?;
        out.push(raw.finish(year, citations, split_countries(&row[5]))?);
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    id: String,
    journal: String,
    year: serde_json::Value,
    doc_type: String,
    citations: serde_json::Value,
    #[serde(default)]
    countries: Vec<String>,
}

fn parse_jsonl(text: &str) -> Result<Vec<(usize, PaperRecord)>, CorpusError> {
    let mut out = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord =
            serde_json::from_str(raw_line).map_err(|e| CorpusError::Malformed {
                line,
                field: "record",
                message: e.to_string(),
            })?;
        let year = rec
            .year
            .as_i64()
            .and_then(|y| i32::try_from(y).ok())
            .ok_or_else(|| CorpusError::UnparseableYear {
                line,
                value: rec.year.to_string(),
            })?;
        let citations = rec.citations.as_i64().ok_or_else(|| CorpusError::Malformed {
            line,
            field: "citations",
            message: format!("`{}` is not an integer", rec.citations),
        })?;
        let countries = rec
            .countries
            .iter()
            .map(|c| c.trim())
            .filter(|c| !c.is_empty())
            .map(str::to_string)
            .collect();
        let raw = RawFields {
            line,
            id: rec.id.trim(),
            journal: rec.journal.trim(),
            doc_type: rec.doc_type.trim(),
        };
        out.push(raw.finish(year, citations, countries)?);
    }
    Ok(out)
}

/// Splits the citable records by (document type, publication year).
pub fn partition_reference_sets(corpus: &Corpus) -> BTreeMap<ReferenceSetKey, ReferenceSet> {
    let mut grouped: BTreeMap<ReferenceSetKey, Vec<u64>> = BTreeMap::new();
    for r in corpus.citable() {
        grouped.entry(r.reference_key()).or_default().push(r.citations);
    }
    grouped
        .into_iter()
        .map(|(key, counts)| (key, ReferenceSet::new(key, counts)))
        .collect()
}

/// How repeated country tokens on one byline are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountryCounting {
    /// Every address token counts once.
    #[default]
    EveryToken,
    /// Repeated tokens collapse to one.
    Distinct,
}

/// Splits one paper's credit over its country tokens, proportionally to
/// the number of addresses. Empty for address-less records.
pub fn fractionate_countries(record: &PaperRecord) -> BTreeMap<String, Fraction> {
    fractionate_countries_with(record, CountryCounting::EveryToken)
}

pub fn fractionate_countries_with(
    record: &PaperRecord,
    counting: CountryCounting,
) -> BTreeMap<String, Fraction> {
    let tokens: Vec<&str> = match counting {
        CountryCounting::EveryToken => record.countries.iter().map(String::as_str).collect(),
        CountryCounting::Distinct => record
            .countries
            .iter()
            .map(String::as_str)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };
    let total = tokens.len() as i64;
    let mut counts: BTreeMap<String, i64> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.to_string()).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(c, n)| (c, Ratio::new(n, total)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Member,
    /// Sum over member rows; never added into totals together with them.
    Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedRow<V> {
    pub name: String,
    pub value: V,
    pub kind: RowKind,
}

/// Adds one row per configured aggregate, holding the exact sum of its
/// members' values, next to the untouched member rows.
pub fn resolve_aggregates<V>(
    config: &GroupingConfig,
    per_country: &BTreeMap<String, V>,
) -> Result<Vec<ResolvedRow<V>>, CorpusError>
where
    V: Clone + Zero + for<'a> std::ops::AddAssign<&'a V>,
{
    let mut rows: Vec<ResolvedRow<V>> = per_country
        .iter()
        .map(|(name, value)| ResolvedRow {
            name: name.clone(),
            value: value.clone(),
            kind: RowKind::Member,
        })
        .collect();
    for (name, members) in &config.aggregates {
        if per_country.contains_key(name) {
            return Err(CorpusError::AggregateCollision(name.clone()));
        }
        let mut total = V::zero();
        for m in members {
            if let Some(v) = per_country.get(m) {
                total += v;
            }
        }
        rows.push(ResolvedRow {
            name: name.clone(),
            value: total,
            kind: RowKind::Aggregate,
        });
    }
    Ok(rows)
}

/// Run-wide grouping and scoring options.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupingConfig {
    pub aggregates: BTreeMap<String, Vec<String>>,
    pub tie_policy: TiePolicy,
    pub adjustment: Fraction,
    pub scheme: RankClassScheme,
    /// (5% level, 1% level) by default.
    pub alpha_levels: (f64, f64),
    pub min_share_percent: Fraction,
    pub country_counting: CountryCounting,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            aggregates: BTreeMap::new(),
            tie_policy: TiePolicy::Highest,
            adjustment: Ratio::new(9, 10),
            scheme: RankClassScheme::nsf_six(),
            alpha_levels: (0.05, 0.01),
            min_share_percent: Ratio::from_integer(1),
            country_counting: CountryCounting::EveryToken,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    aggregates: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    tie_policy: Option<TiePolicy>,
    #[serde(default)]
    adjustment: Option<serde_json::Number>,
    #[serde(default)]
    scheme: Option<RawScheme>,
    #[serde(default)]
    alpha_levels: Option<(f64, f64)>,
    #[serde(default)]
    min_share_percent: Option<serde_json::Number>,
    #[serde(default)]
    country_counting: Option<CountryCounting>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    classes: Vec<RawClass>,
    catch_all_weight: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClass {
    threshold: serde_json::Number,
    weight: u32,
}

fn exact_number(n: &serde_json::Number, what: &str) -> Result<Fraction, CorpusError> {
    parse_decimal(&n.to_string())
        .ok_or_else(|| CorpusError::Config(format!("{what}: cannot represent `{n}` exactly")))
}

impl GroupingConfig {
    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let raw: RawConfig =
            serde_json::from_str(text).map_err(|e| CorpusError::Config(e.to_string()))?;
        let defaults = GroupingConfig::default();
        let scheme = match raw.scheme {
            Some(s) => {
                let mut classes = Vec::with_capacity(s.classes.len());
                for c in &s.classes {
                    classes.push((exact_number(&c.threshold, "scheme threshold")?, c.weight));
                }
                RankClassScheme::new(classes, s.catch_all_weight)
                    .map_err(CorpusError::Config)?
            }
            None => defaults.scheme,
        };
        let config = GroupingConfig {
            aggregates: raw.aggregates,
            tie_policy: raw.tie_policy.unwrap_or(defaults.tie_policy),
            adjustment: match raw.adjustment {
                Some(n) => exact_number(&n, "adjustment")?,
                None => defaults.adjustment,
            },
            scheme,
            alpha_levels: raw.alpha_levels.unwrap_or(defaults.alpha_levels),
            min_share_percent: match raw.min_share_percent {
                Some(n) => exact_number(&n, "min_share_percent")?,
                None => defaults.min_share_percent,
            },
            country_counting: raw.country_counting.unwrap_or(defaults.country_counting),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let err = |m: String| Err(CorpusError::Config(m));
        for (name, members) in &self.aggregates {
            if members.is_empty() {
                return err(format!("aggregate `{name}` has no members"));
            }
            if let Some(m) = members.iter().find(|m| self.aggregates.contains_key(*m)) {
                return err(format!("aggregate `{name}` lists aggregate `{m}` as a member"));
            }
        }
        if self.adjustment < Fraction::zero() || self.adjustment >= Fraction::from_integer(1) {
            return err(format!("adjustment {} outside [0, 1)", self.adjustment));
        }
        let (a5, a1) = self.alpha_levels;
        if !(0.0 < a1 && a1 < a5 && a5 < 1.0) {
            return err(format!(
                "alpha levels ({a5}, {a1}) must satisfy 0 < second < first < 1"
            ));
        }
        if self.min_share_percent < Fraction::zero() {
            return err("min_share_percent must be non-negative".into());
        }
        Ok(())
    }

    /// Rejects aggregates named like a country that occurs in the data.
    pub fn check_against(&self, corpus: &Corpus) -> Result<(), CorpusError> {
        for r in corpus.records() {
            for c in &r.countries {
                if self.aggregates.contains_key(c) {
                    return Err(CorpusError::AggregateCollision(c.clone()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id,journal,year,doc_type,citations,countries\n";

    fn csv(body: &str) -> Result<Corpus, CorpusError> {
        load_corpus(format!("{HEADER}{body}").as_bytes(), InputFormat::Csv)
    }

    fn rec(id: &str, doc_type: DocType, year: i32, citations: u64) -> PaperRecord {
        PaperRecord {
            id: id.into(),
            journal: "J".into(),
            year,
            doc_type,
            citations,
            countries: vec![],
        }
    }

    #[test]
    fn csv_row_maps_fields() {
        let c = csv("p1,JASIST,2007,article,12,\"USA;USA;NLD\"\n").unwrap();
        let r = &c.records()[0];
        assert_eq!(r.id, "p1");
        assert_eq!(r.journal, "JASIST");
        assert_eq!(r.year, 2007);
        assert_eq!(r.doc_type, DocType::Article);
        assert_eq!(r.citations, 12);
        assert_eq!(r.countries, vec!["USA", "USA", "NLD"]);
        assert_eq!(c.report().without_address, 0);
    }

    #[test]
    fn empty_countries_are_tallied() {
        let c = csv("p1,J,2007,article,3,\np2,J,2007,review,0,USA\r\n").unwrap();
        assert!(c.records()[0].countries.is_empty());
        assert_eq!(c.report().without_address, 1);
        assert_eq!(c.report().address_coverage_percent(), Some(50.0));
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let err = csv("p1,J,2007,article,1,\np1,J,2008,article,2,\n").unwrap_err();
        match err {
            CorpusError::DuplicateId { id, line } => {
                assert_eq!(id, "p1");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_values_report_line_and_field() {
        assert!(matches!(
            csv("p1,J,2007,article,-3,\n").unwrap_err(),
            CorpusError::NegativeCitations { line: 2, value: -3, .. }
        ));
        assert!(matches!(
            csv("p1,J,20x7,article,3,\n").unwrap_err(),
            CorpusError::UnparseableYear { line: 2, .. }
        ));
        assert!(matches!(
            csv("p1,J,2007,article,3,\np2,J,2007,poem,1,\n").unwrap_err(),
            CorpusError::Malformed { line: 3, field: "doc_type", .. }
        ));
        assert!(matches!(
            csv("p1,J,2007,article\n").unwrap_err(),
            CorpusError::Malformed { line: 2, field: "row", .. }
        ));
        assert!(matches!(
            csv("p1,J,2007,article,1.5,\n").unwrap_err(),
            CorpusError::Malformed { field: "citations", .. }
        ));
    }

    #[test]
    fn header_is_required() {
        let err = load_corpus(b"p1,J,2007,article,1,\n", InputFormat::Csv).unwrap_err();
        assert!(matches!(err, CorpusError::BadHeader { .. }));
    }

    #[test]
    fn invalid_utf8_reports_line() {
        let mut bytes = format!("{HEADER}p1,J,2007,article,1,\n").into_bytes();
        bytes.extend_from_slice(b"p2,\xff,2007,article,1,\n");
        assert!(matches!(
            load_corpus(&bytes, InputFormat::Csv).unwrap_err(),
            CorpusError::InvalidUtf8 { line: 3 }
        ));
    }

    #[test]
    fn jsonl_matches_csv() {
        let jsonl = concat!(
            r#"{"id":"p1","journal":"JASIST","year":2007,"doc_type":"article","citations":12,"countries":["USA","USA","NLD"]}"#,
            "\n\n",
            r#"{"id":"p2","journal":"JASIST","year":2008,"doc_type":"letter","citations":0,"countries":[]}"#,
            "\n"
        );
        let a = load_corpus(jsonl.as_bytes(), InputFormat::Jsonl).unwrap();
        let b = csv("p1,JASIST,2007,article,12,USA;USA;NLD\np2,JASIST,2008,letter,0,\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn jsonl_errors() {
        let bad_year = r#"{"id":"p1","journal":"J","year":"2007a","doc_type":"article","citations":1,"countries":[]}"#;
        assert!(matches!(
            load_corpus(bad_year.as_bytes(), InputFormat::Jsonl).unwrap_err(),
            CorpusError::UnparseableYear { line: 1, .. }
        ));
        let extra = r#"{"id":"p1","journal":"J","year":2007,"doc_type":"article","citations":1,"countries":[],"x":1}"#;
        assert!(matches!(
            load_corpus(extra.as_bytes(), InputFormat::Jsonl).unwrap_err(),
            CorpusError::Malformed { .. }
        ));
    }

    #[test]
    fn reference_sets_partition_citable_records() {
        let mut records = Vec::new();
        for i in 0..3 {
            records.push(rec(&format!("a{i}"), DocType::Article, 2007, i));
        }
        records.push(rec("r0", DocType::Review, 2007, 4));
        records.push(rec("b0", DocType::Article, 2008, 1));
        records.push(rec("b1", DocType::Article, 2008, 0));
        records.push(rec("o0", DocType::Other, 2008, 9));
        let corpus = Corpus::from_records(records).unwrap();
        let sets = partition_reference_sets(&corpus);
        let sizes: Vec<usize> = sets.values().map(ReferenceSet::len).collect();
        assert_eq!(sizes, vec![3, 2, 1]);
        assert_eq!(sets.values().map(ReferenceSet::len).sum::<usize>(), 6);
        let a2008 = &sets[&ReferenceSetKey { doc_type: DocType::Article, year: 2008 }];
        assert_eq!(a2008.citation_counts(), &[0, 1]);
        assert_eq!(corpus.report().excluded_other, 1);
    }

    #[test]
    fn singleton_and_empty_corpus() {
        let one = Corpus::from_records(vec![rec("x", DocType::Letter, 2010, 5)]).unwrap();
        let sets = partition_reference_sets(&one);
        assert_eq!(sets.len(), 1);
        assert_eq!(sets.values().next().unwrap().len(), 1);
        let empty = Corpus::from_records(vec![]).unwrap();
        assert!(partition_reference_sets(&empty).is_empty());
    }

    #[test]
    fn twelve_record_fixture_matches_hand_tally() {
        let spec = [
            (DocType::Article, 2007, 4),
            (DocType::Review, 2007, 2),
            (DocType::Article, 2008, 5),
            (DocType::Letter, 2008, 1),
        ];
        let mut records = Vec::new();
        let mut n = 0;
        for (dt, year, count) in spec {
            for _ in 0..count {
                records.push(rec(&format!("p{n}"), dt, year, n as u64 % 3));
                n += 1;
            }
        }
        assert_eq!(records.len(), 12);
        // Brute-force tally: compare every pair of records by key.
        let corpus = Corpus::from_records(records.clone()).unwrap();
        let sets = partition_reference_sets(&corpus);
        for r in &records {
            let tally = records
                .iter()
                .filter(|o| o.doc_type == r.doc_type && o.year == r.year)
                .count();
            assert_eq!(sets[&r.reference_key()].len(), tally);
        }
    }

    #[test]
    fn fractions() {
        let mut r = rec("x", DocType::Article, 2007, 1);
        r.countries = vec!["A".into(), "A".into(), "B".into()];
        let f = fractionate_countries(&r);
        assert_eq!(f["A"], Ratio::new(2, 3));
        assert_eq!(f["B"], Ratio::new(1, 3));
        let d = fractionate_countries_with(&r, CountryCounting::Distinct);
        assert_eq!(d["A"], Ratio::new(1, 2));
        r.countries = vec!["A".into()];
        assert_eq!(fractionate_countries(&r)["A"], Ratio::from_integer(1));
        r.countries.clear();
        assert!(fractionate_countries(&r).is_empty());
    }

    fn uk_config() -> GroupingConfig {
        let mut config = GroupingConfig::default();
        config.aggregates.insert(
            "UK".into(),
            vec!["England".into(), "Scotland".into(), "Wales".into(), "North Ireland".into()],
        );
        config
    }

    #[test]
    fn aggregates_sum_members() {
        let mut config = uk_config();
        config.aggregates.insert("EU27".into(), vec!["DEU".into(), "FRA".into()]);
        let values: BTreeMap<String, Fraction> = [
            ("England".to_string(), Ratio::from_integer(3)),
            ("Scotland".to_string(), Ratio::from_integer(1)),
            ("USA".to_string(), Ratio::from_integer(7)),
        ]
        .into_iter()
        .collect();
        let rows = resolve_aggregates(&config, &values).unwrap();
        let get = |n: &str| rows.iter().find(|r| r.name == n).unwrap();
        assert_eq!(get("UK").value, Ratio::from_integer(4));
        assert_eq!(get("UK").kind, RowKind::Aggregate);
        assert_eq!(get("EU27").value, Ratio::from_integer(0));
        assert_eq!(get("England").kind, RowKind::Member);
        assert_eq!(rows.len(), 5);
    }

    #[test]
    fn aggregate_over_five_countries() {
        let mut config = GroupingConfig::default();
        let members = ["NLD", "BEL", "DEU", "FRA", "ITA"];
        config
            .aggregates
            .insert("EU".into(), members.iter().map(|s| s.to_string()).collect());
        let values: BTreeMap<String, Fraction> = [
            ("NLD", Ratio::new(7, 3)),
            ("BEL", Ratio::new(1, 2)),
            ("DEU", Ratio::new(5, 6)),
            ("FRA", Ratio::new(11, 4)),
            ("ITA", Ratio::from_integer(2)),
            ("USA", Ratio::from_integer(40)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let rows = resolve_aggregates(&config, &values).unwrap();
        let eu = rows.iter().find(|r| r.name == "EU").unwrap();
        // 28/12 + 6/12 + 10/12 + 33/12 + 24/12 = 101/12
        assert_eq!(eu.value, Ratio::new(101, 12));
    }

    #[test]
    fn aggregate_collision() {
        let config = uk_config();
        let values: BTreeMap<String, Fraction> =
            [("UK".to_string(), Ratio::from_integer(1))].into_iter().collect();
        assert!(matches!(
            resolve_aggregates(&config, &values),
            Err(CorpusError::AggregateCollision(n)) if n == "UK"
        ));
    }

    #[test]
    fn config_json() {
        let c = GroupingConfig::from_json(
            r#"{"aggregates":{"UK":["England","Scotland"]},"adjustment":0.5,
                "tie_policy":"strict_lower","min_share_percent":2,
                "scheme":{"classes":[{"threshold":90,"weight":3},{"threshold":50,"weight":2}],"catch_all_weight":1}}"#,
        )
        .unwrap();
        assert_eq!(c.adjustment, Ratio::new(1, 2));
        assert_eq!(c.tie_policy, TiePolicy::StrictLower);
        assert_eq!(c.min_share_percent, Ratio::from_integer(2));
        assert_eq!(c.scheme.max_weight(), 3);
        assert_eq!(GroupingConfig::from_json("{}").unwrap(), GroupingConfig::default());
        assert!(GroupingConfig::from_json(r#"{"bogus":1}"#).is_err());
        assert!(GroupingConfig::from_json(r#"{"adjustment":1.0}"#).is_err());
        assert!(GroupingConfig::from_json(r#"{"aggregates":{"UK":[]}}"#).is_err());
        assert!(GroupingConfig::from_json(r#"{"alpha_levels":[0.01,0.05]}"#).is_err());
        assert!(GroupingConfig::from_json(
            r#"{"aggregates":{"UK":["England"],"EU":["UK"]}}"#
        )
        .is_err());
    }

    #[test]
    fn reload_is_deterministic() {
        let body = "p1,J,2007,article,12,USA;NLD\np2,K,2008,review,3,\n";
        assert_eq!(csv(body).unwrap(), csv(body).unwrap());
    }
}
