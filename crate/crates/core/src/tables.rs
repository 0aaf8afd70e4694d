//! Ranking tables rendered as CSV, JSON and Markdown. All three formats
//! are produced from the same rounded cells, so they agree after parsing.

use num_rational::BigRational;
use serde_json::{Map, Number, Value};

use crate::exact::{big, round_half_up};
use crate::indicators::GroupSummary;

/// Column contract of every ranking table.
pub const COLUMNS: [&str; 23] = [
    "group",
    "kind",
    "n_papers",
    "i3",
    "i3_classed",
    "mean_percentile",
    "sem_percentile",
    "median_percentile",
    "mean_class",
    "sem_class",
    "median_class",
    "total_citations",
    "citations_per_paper",
    "share_pubs_percent",
    "share_i3_percent",
    "share_classed_percent",
    "ratio_i3",
    "z_i3",
    "mark_i3",
    "ratio_classed",
    "z_classed",
    "mark_classed",
    "expected_i3",
];

/// Columns holding text rather than numbers.
const TEXT_COLUMNS: [usize; 4] = [0, 1, 18, 21];

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn count(v: &BigRational) -> String {
    if v.is_integer() {
        v.to_integer().to_string()
    } else {
        round_half_up(v, 2)
    }
}

fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// A table row: one of the member/aggregate groups, or the footer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowRole {
    Member,
    Aggregate,
    Footer,
}

impl RowRole {
    fn as_str(self) -> &'static str {
        match self {
            RowRole::Member => "member",
            RowRole::Aggregate => "aggregate",
            RowRole::Footer => "accounted",
        }
    }
}

/// Rounded cells in [`COLUMNS`] order; empty string means "not available".
pub fn render_row(s: &GroupSummary, role: RowRole) -> Vec<String> {
    let opt = |v: &Option<BigRational>| v.as_ref().map(|r| round_half_up(r, 2)).unwrap_or_default();
    let z = |o: &Option<crate::stats::ZTestOutcome>| {
        o.and_then(|t| t.z).map(|v| fixed(v, 2)).unwrap_or_default()
    };
    let mark = |o: &Option<crate::stats::ZTestOutcome>| {
        o.map(|t| t.mark.symbol().to_string()).unwrap_or_default()
    };
    vec![
        s.group.clone(),
        role.as_str().to_string(),
        count(&s.n_papers),
        round_half_up(&s.i3, 1),
        round_half_up(&s.i3_classed, 1),
        round_half_up(&s.mean_percentile, 2),
        fixed(s.sem_percentile, 2),
        round_half_up(&big(&s.median_percentile), 2),
        round_half_up(&s.mean_class, 2),
        fixed(s.sem_class, 2),
        round_half_up(&big(&s.median_class), 2),
        count(&s.total_citations),
        round_half_up(&s.citations_per_paper, 2),
        round_half_up(&s.share_pubs_percent, 2),
        round_half_up(&s.share_i3_percent, 2),
        round_half_up(&s.share_classed_percent, 2),
        opt(&s.ratio_i3),
        z(&s.z_i3),
        mark(&s.z_i3),
        opt(&s.ratio_classed),
        z(&s.z_classed),
        mark(&s.z_classed),
        s.expected_i3.as_ref().map(|r| round_half_up(r, 1)).unwrap_or_default(),
    ]
}

pub fn to_csv(rows: &[Vec<String>]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

pub fn to_json(rows: &[Vec<String>]) -> String {
    let records: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (i, (col, cell)) in COLUMNS.iter().zip(row).enumerate() {
                let value = if TEXT_COLUMNS.contains(&i) {
                    Value::String(cell.clone())
                } else if cell.is_empty() {
                    Value::Null
                } else {
                    cell.parse::<Number>().map(Value::Number).unwrap_or(Value::Null)
                };
                obj.insert((*col).to_string(), value);
            }
            Value::Object(obj)
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&Value::Array(records)).unwrap_or_default();
    text.push('\n');
    text
}

pub fn to_markdown(title: &str, rows: &[Vec<String>]) -> String {
    let escape = |s: &str| s.replace('|', "\\|");
    let mut out = format!("## {title}\n\n| {} |\n|", COLUMNS.join(" | "));
    for i in 0..COLUMNS.len() {
        out.push_str(if TEXT_COLUMNS.contains(&i) { "---|" } else { "---:|" });
    }
    out.push('\n');
    for row in rows {
        out.push_str("| ");
        out.push_str(&row.iter().map(|c| escape(c)).collect::<Vec<_>>().join(" | "));
        out.push_str(" |\n");
    }
    out
}
