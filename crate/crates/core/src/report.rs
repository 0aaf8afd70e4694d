//! End-to-end pipeline behind the `validate`, `report` and `compare`
//! subcommands.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{
    fractionate_countries_with, load_corpus, resolve_aggregates, Corpus, CorpusError,
    GroupingConfig, InputFormat, PaperRecord, RowKind, ValidationReport,
};
use crate::exact::{big, round_half_up, to_f64, Fraction};
use crate::indicators::{
    attach_expectations, linear_regression, summarize_group, GroupMember, GroupSummary,
    IndicatorError, Regression, SetTotals,
};
use crate::percentiles::{assign_all, assignments_csv, PercentileAssignment, PercentileError};
use crate::simgraph::{
    build_graph, export_dot, export_pajek, kamada_kawai_layout, layout_csv, HomogeneityGraph,
    Layout,
};
use crate::stats::{
    dunn_pairwise, format_sig, kruskal_wallis, mann_whitney_pairwise, KruskalWallis,
    PairwiseMatrix, StatsError,
};
use crate::tables::{self, RowRole};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Percentile(#[from] PercentileError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("no citable records in input")]
    EmptyCitableSet,
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("need at least 2 units to compare, got {0}")]
    TooFewUnits(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

impl ReportError {
    /// 2 for input and validation problems, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ReportError::Corpus(_)
            | ReportError::EmptyCitableSet
            | ReportError::UnknownUnit(_)
            | ReportError::TooFewUnits(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Journal,
    Country,
    Both,
}

impl GroupBy {
    fn as_str(self) -> &'static str {
        match self {
            GroupBy::Journal => "journal",
            GroupBy::Country => "country",
            GroupBy::Both => "both",
        }
    }

    fn journals(self) -> bool {
        self != GroupBy::Country
    }

    fn countries(self) -> bool {
        self != GroupBy::Journal
    }
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "journal" => Ok(GroupBy::Journal),
            "country" => Ok(GroupBy::Country),
            "both" => Ok(GroupBy::Both),
            _ => Err(format!("unknown grouping `{s}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub group_by: GroupBy,
    pub seed: u64,
    pub threads: usize,
    pub stamp: bool,
    pub layout_iterations: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            group_by: GroupBy::Both,
            seed: 0,
            threads: 1,
            stamp: false,
            layout_iterations: 300,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub input_sha256: String,
    pub config_sha256: String,
    pub version: &'static str,
    pub seed: u64,
    pub group_by: GroupBy,
    /// Seconds since the epoch; only with `--stamp`.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub metadata: RunMetadata,
    pub validation: ValidationReport,
    pub assignments: Vec<PercentileAssignment>,
    pub set_summary: GroupSummary,
    pub journal_table: Vec<GroupSummary>,
    pub country_table: Vec<(GroupSummary, RowRole)>,
    pub country_footer: Option<GroupSummary>,
    pub kruskal_wallis: Option<KruskalWallis>,
    pub pairwise: PairwiseMatrix,
    pub graph: HomogeneityGraph,
    pub core_numbers: Vec<usize>,
    pub layout: Layout,
    pub regression: Option<Regression>,
    pub warnings: Vec<String>,
}

/// Descending I3, ties by label.
fn canonical_order(a: &GroupSummary, b: &GroupSummary) -> std::cmp::Ordering {
    b.i3.cmp(&a.i3).then_with(|| a.group.cmp(&b.group))
}

fn coverage_warning(report: &ValidationReport) -> Option<String> {
    let pct = report.address_coverage_percent()?;
    (report.without_address > 0).then(|| {
        format!(
            "address coverage {pct:.2}% ({} of {} citable records carry country tokens)",
            report.citable_records - report.without_address,
            report.citable_records
        )
    })
}

/// Citation counts per journal, journals sorted by name.
pub fn journal_citations(corpus: &Corpus) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in corpus.citable() {
        out.entry(r.journal.clone()).or_default().push(r.citations as f64);
    }
    out
}

fn summarize_all(
    groups: &BTreeMap<String, Vec<GroupMember<'_>>>,
    totals: &SetTotals,
    alphas: (f64, f64),
) -> Result<Vec<GroupSummary>, ReportError> {
    let entries: Vec<(&String, &Vec<GroupMember<'_>>)> = groups.iter().collect();
    entries
        .par_iter()
        .map(|(label, members)| {
            let mut s = summarize_group(label, members);
            attach_expectations(&mut s, totals, alphas)?;
            Ok(s)
        })
        .collect()
}

/// Runs the full pipeline on a parsed corpus.
pub fn build_report(
    corpus: &Corpus,
    config: &GroupingConfig,
    input_bytes: &[u8],
    config_bytes: &[u8],
    options: &ReportOptions,
) -> Result<ReportBundle, ReportError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads.max(1))
        .build()
        .map_err(|e| ReportError::ThreadPool(e.to_string()))?;
    pool.install(|| build_report_inner(corpus, config, input_bytes, config_bytes, options))
}

fn build_report_inner(
    corpus: &Corpus,
    config: &GroupingConfig,
    input_bytes: &[u8],
    config_bytes: &[u8],
    options: &ReportOptions,
) -> Result<ReportBundle, ReportError> {
    config.validate()?;
    if corpus.citable().next().is_none() {
        return Err(ReportError::EmptyCitableSet);
    }
    if options.group_by.countries() {
        config.check_against(corpus)?;
    }
    let alphas = config.alpha_levels;
    let mut warnings = Vec::new();
    if let Some(w) = coverage_warning(corpus.report()) {
        warnings.push(w);
    }
    if corpus.report().excluded_other > 0 {
        warnings.push(format!(
            "{} records of type `other` excluded from all indicators",
            corpus.report().excluded_other
        ));
    }

    let assignments = assign_all(corpus, config)?;
    let records: HashMap<&str, &PaperRecord> =
        corpus.records().iter().map(|r| (r.id.as_str(), r)).collect();

    let everything: Vec<GroupMember<'_>> = assignments
        .iter()
        .map(|a| GroupMember { assignment: a, weight: Fraction::one() })
        .collect();
    let mut set_summary = summarize_group("all", &everything);
    let totals = SetTotals::of(&set_summary);
    attach_expectations(&mut set_summary, &totals, alphas)?;

    let mut by_journal: BTreeMap<String, Vec<GroupMember<'_>>> = BTreeMap::new();
    for a in &assignments {
        by_journal
            .entry(records[a.paper_id.as_str()].journal.clone())
            .or_default()
            .push(GroupMember { assignment: a, weight: Fraction::one() });
    }
    let mut journal_table = Vec::new();
    if options.group_by.journals() {
        journal_table = summarize_all(&by_journal, &totals, alphas)?;
        journal_table.sort_by(canonical_order);
    }

    let mut country_table = Vec::new();
    let mut country_footer = None;
    if options.group_by.countries() {
        let (table, footer) =
            country_rows(&assignments, &records, config, &totals, alphas)?;
        country_table = table;
        country_footer = Some(footer);
    }

    let citations = journal_citations(corpus);
    let labels: Vec<String> = citations.keys().cloned().collect();
    let groups: Vec<Vec<f64>> = citations.into_values().collect();
    let kruskal_wallis = if groups.len() >= 2 {
        Some(kruskal_wallis(&groups)?)
    } else {
        None
    };
    let pairwise = dunn_pairwise(&labels, &groups, alphas.0)?;
    let graph = build_graph(&pairwise);
    let core_numbers = graph.core_numbers();
    let layout = kamada_kawai_layout(&graph, options.layout_iterations, options.seed);

    let pubs: Vec<f64> = by_journal.values().map(|m| m.len() as f64).collect();
    let impact: Vec<f64> = by_journal
        .values()
        .map(|m| to_f64(&crate::exact::sum(m.iter().map(|g| &g.assignment.percentile))))
        .collect();
    let regression = match linear_regression(&pubs, &impact) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("I3-vs-publications regression skipped: {e}"));
            None
        }
    };

    let timestamp = options.stamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    Ok(ReportBundle {
        metadata: RunMetadata {
            input_sha256: sha256_hex(input_bytes),
            config_sha256: sha256_hex(config_bytes),
            version: crate::VERSION,
            seed: options.seed,
            group_by: options.group_by,
            timestamp,
        },
        validation: corpus.report().clone(),
        assignments,
        set_summary,
        journal_table,
        country_table,
        country_footer,
        kruskal_wallis,
        pairwise,
        graph,
        core_numbers,
        layout,
        regression,
        warnings,
    })
}

type CountryRows = (Vec<(GroupSummary, RowRole)>, GroupSummary);

fn country_rows(
    assignments: &[PercentileAssignment],
    records: &HashMap<&str, &PaperRecord>,
    config: &GroupingConfig,
    totals: &SetTotals,
    alphas: (f64, f64),
) -> Result<CountryRows, ReportError> {
    let mut by_country: BTreeMap<String, Vec<GroupMember<'_>>> = BTreeMap::new();
    let mut by_aggregate: BTreeMap<String, Vec<GroupMember<'_>>> = BTreeMap::new();
    let mut addressed = Vec::new();
    for a in assignments {
        let fractions = fractionate_countries_with(records[a.paper_id.as_str()], config.country_counting);
        if fractions.is_empty() {
            continue;
        }
        addressed.push(GroupMember { assignment: a, weight: Fraction::one() });
        for (name, members) in &config.aggregates {
            let weight: Fraction = members
                .iter()
                .filter_map(|m| fractions.get(m))
                .fold(Fraction::zero(), |acc, f| acc + f);
            if !weight.is_zero() {
                by_aggregate
                    .entry(name.clone())
                    .or_default()
                    .push(GroupMember { assignment: a, weight });
            }
        }
        for (country, weight) in fractions {
            by_country
                .entry(country)
                .or_default()
                .push(GroupMember { assignment: a, weight });
        }
    }
    for name in config.aggregates.keys() {
        by_aggregate.entry(name.clone()).or_default();
    }

    let members = summarize_all(&by_country, totals, alphas)?;
    let mut aggregates = summarize_all(&by_aggregate, totals, alphas)?;

    // Aggregate rows must equal the exact sum of their member rows.
    let per_country: BTreeMap<String, BigRational> =
        members.iter().map(|s| (s.group.clone(), s.i3.clone())).collect();
    for row in resolve_aggregates(config, &per_country)? {
        if row.kind != RowKind::Aggregate {
            continue;
        }
        let agg = aggregates.iter_mut().find(|s| s.group == row.name);
        match agg {
            Some(s) if s.i3 == row.value => s.overlapping = true,
            _ => return Err(ReportError::Consistency(format!("aggregate `{}`", row.name))),
        }
    }

    let mut footer = summarize_group("% accounted", &addressed);
    if !addressed.is_empty() {
        attach_expectations(&mut footer, totals, alphas)?;
    }
    footer.overlapping = true;

    let min_share = big(&config.min_share_percent);
    let mut rows: Vec<(GroupSummary, RowRole)> = members
        .into_iter()
        .map(|s| (s, RowRole::Member))
        .chain(aggregates.into_iter().map(|s| (s, RowRole::Aggregate)))
        .filter(|(s, _)| s.share_i3_percent >= min_share)
        .collect();
    rows.sort_by(|a, b| canonical_order(&a.0, &b.0));
    Ok((rows, footer))
}

impl ReportBundle {
    fn journal_rows(&self) -> Vec<Vec<String>> {
        self.journal_table
            .iter()
            .map(|s| tables::render_row(s, RowRole::Member))
            .collect()
    }

    fn country_rows(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .country_table
            .iter()
            .map(|(s, role)| tables::render_row(s, *role))
            .collect();
        if let Some(f) = &self.country_footer {
            rows.push(tables::render_row(f, RowRole::Footer));
        }
        rows
    }

    fn summary_json(&self) -> serde_json::Value {
        let num = |text: String| {
            text.parse::<serde_json::Number>()
                .map_or(serde_json::Value::String(text), serde_json::Value::Number)
        };
        let n = &self.set_summary.n_papers;
        let max_i3 = n * BigRational::from_integer(100.into());
        let mut meta = json!({
            "tool": "i3kit",
            "version": self.metadata.version,
            "input_sha256": self.metadata.input_sha256,
            "config_sha256": self.metadata.config_sha256,
            "seed": self.metadata.seed,
            "group_by": self.metadata.group_by.as_str(),
        });
        if let Some(ts) = self.metadata.timestamp {
            meta["timestamp"] = json!(ts);
        }
        let similar = self.graph.edge_count();
        let k = self.pairwise.len();
        json!({
            "run": meta,
            "records": self.validation,
            "set": {
                "n_papers": num(round_half_up(n, 0)),
                "i3": num(round_half_up(&self.set_summary.i3, 1)),
                "i3_classed": num(round_half_up(&self.set_summary.i3_classed, 1)),
                "max_i3": num(round_half_up(&max_i3, 0)),
                "i3_percent_of_max": num(round_half_up(&(&self.set_summary.i3 * BigRational::from_integer(100.into()) / &max_i3), 2)),
            },
            "kruskal_wallis": self.kruskal_wallis.map(|kw| json!({
                "h": num(format_sig(kw.h, 6)),
                "df": kw.df,
                "p": num(format_sig(kw.p, 4)),
            })),
            "pairwise": {
                "method": self.pairwise.method,
                "groups": k,
                "comparisons": k * k.saturating_sub(1) / 2,
                "family_alpha": self.pairwise.family_alpha,
                "per_comparison_alpha": num(format_sig(self.pairwise.per_comparison_alpha, 4)),
                "not_significant_pairs": similar,
            },
            "graph": {
                "nodes": self.graph.nodes().len(),
                "edges": similar,
                "max_core": self.core_numbers.iter().copied().max().unwrap_or(0),
            },
            "regression": self.regression.map(|r| json!({
                "slope": num(format_sig(r.slope, 6)),
                "intercept": num(format_sig(r.intercept, 6)),
                "r_squared": num(format_sig(r.r_squared, 4)),
            })),
            "warnings": self.warnings,
        })
    }

    /// Every output artifact as (file name, contents).
    pub fn files(&self) -> BTreeMap<String, String> {
        let mut files = BTreeMap::new();
        let mut summary = serde_json::to_string_pretty(&self.summary_json()).unwrap_or_default();
        summary.push('\n');
        files.insert("summary.json".into(), summary);
        files.insert("assignments.csv".into(), assignments_csv(&self.assignments));
        if self.metadata.group_by.journals() {
            let rows = self.journal_rows();
            files.insert("journals.csv".into(), tables::to_csv(&rows));
            files.insert("journals.json".into(), tables::to_json(&rows));
            files.insert("journals.md".into(), tables::to_markdown("Journals", &rows));
        }
        if self.metadata.group_by.countries() {
            let rows = self.country_rows();
            files.insert("countries.csv".into(), tables::to_csv(&rows));
            files.insert("countries.json".into(), tables::to_json(&rows));
            files.insert("countries.md".into(), tables::to_markdown("Countries", &rows));
        }
        files.insert("pairwise.csv".into(), self.pairwise.to_csv());
        files.insert("similar_pairs.csv".into(), self.pairwise.similar_pairs_csv());
        files.insert("homogeneity.net".into(), export_pajek(&self.graph));
        files.insert("homogeneity.dot".into(), export_dot(&self.graph));
        files.insert("layout.csv".into(), layout_csv(&self.layout));
        let mut cores = String::from("label,core\n");
        for (label, core) in self.graph.nodes().iter().zip(&self.core_numbers) {
            let _ = writeln!(cores, "{},{core}", tables::csv_field(label));
        }
        files.insert("cores.csv".into(), cores);
        files
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
        std::fs::create_dir_all(dir).map_err(|source| ReportError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        for (name, contents) in self.files() {
            let path = dir.join(name);
            std::fs::write(&path, contents).map_err(|source| ReportError::Io {
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Outcome of `validate`: never fails on warnings.
#[derive(Debug, Clone, Default)]
pub struct Validation {
    pub report: Option<ValidationReport>,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Validation {
    pub fn exit_code(&self) -> i32 {
        if self.errors.is_empty() {
            0
        } else {
            2
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(r) = &self.report {
            let _ = writeln!(
                out,
                "records: {} (citable {}, other {})",
                r.total_records, r.citable_records, r.excluded_other
            );
            for (key, n) in &r.by_key {
                let _ = writeln!(out, "  {key}: {n}");
            }
        }
        for e in &self.errors {
            let _ = writeln!(out, "error: {e}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let n = self.errors.len();
        let _ = writeln!(out, "{n} error{}", if n == 1 { "" } else { "s" });
        out
    }
}

/// Parses input and config and reports every problem found.
pub fn validate(input: &[u8], format: InputFormat, config_text: Option<&str>) -> Validation {
    let mut outcome = Validation::default();
    let config = match config_text.map(GroupingConfig::from_json) {
        Some(Err(e)) => {
            outcome.errors.push(e.to_string());
            None
        }
        Some(Ok(c)) => Some(c),
        None => Some(GroupingConfig::default()),
    };
    match load_corpus(input, format) {
        Ok(corpus) => {
            if let Some(Err(e)) = config.as_ref().map(|c| c.check_against(&corpus)) {
                outcome.errors.push(e.to_string());
            }
            if corpus.report().citable_records == 0 {
                outcome.warnings.push("no citable records".into());
            }
            outcome.warnings.extend(coverage_warning(corpus.report()));
            outcome.report = Some(corpus.report().clone());
        }
        Err(e) => outcome.errors.push(e.to_string()),
    }
    outcome
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub kruskal_wallis: KruskalWallis,
    pub matrix: PairwiseMatrix,
}

impl Comparison {
    pub fn render(&self) -> String {
        let m = &self.matrix;
        let k = m.len();
        let mut out = String::new();
        let kw = &self.kruskal_wallis;
        let _ = writeln!(
            out,
            "Kruskal-Wallis: H = {:.4}, df = {}, p = {}",
            kw.h,
            kw.df,
            format_sig(kw.p, 4)
        );
        let method = match m.method {
            crate::stats::PairwiseMethod::Dunn => "Dunn",
            crate::stats::PairwiseMethod::MannWhitney => "Mann-Whitney U",
        };
        let comparisons = k * (k - 1) / 2;
        let _ = writeln!(
            out,
            "{method}: {comparisons} comparison{}, per-comparison alpha {:.6} ({} / {comparisons})",
            if comparisons == 1 { "" } else { "s" },
            m.per_comparison_alpha,
            m.family_alpha
        );
        for i in 0..k {
            for j in i + 1..k {
                let _ = writeln!(
                    out,
                    "{} vs {}: z = {:.3}, p = {}, {}",
                    m.labels[i],
                    m.labels[j],
                    m.z[i][j],
                    format_sig(m.p[i][j], 4),
                    if m.significant[i][j] { "significant" } else { "not significant" }
                );
            }
        }
        out
    }
}

/// Compares the citation distributions of the named journals (all
/// journals when `units` is empty).
pub fn compare(
    corpus: &Corpus,
    config: &GroupingConfig,
    units: &[String],
) -> Result<Comparison, ReportError> {
    let citations = journal_citations(corpus);
    let mut labels: Vec<String> = Vec::new();
    if units.is_empty() {
        labels.extend(citations.keys().cloned());
    } else {
        for u in units {
            if !citations.contains_key(u) {
                return Err(ReportError::UnknownUnit(u.clone()));
            }
            if !labels.contains(u) {
                labels.push(u.clone());
            }
        }
    }
    if labels.len() < 2 {
        return Err(ReportError::TooFewUnits(labels.len()));
    }
    let groups: Vec<&[f64]> = labels.iter().map(|l| citations[l].as_slice()).collect();
    let kw = kruskal_wallis(&groups)?;
    let family = config.alpha_levels.0;
    let matrix = if labels.len() == 2 {
        mann_whitney_pairwise(&labels, &groups, family)?
    } else {
        dunn_pairwise(&labels, &groups, family)?
    };
    Ok(Comparison { kruskal_wallis: kw, matrix })
}
