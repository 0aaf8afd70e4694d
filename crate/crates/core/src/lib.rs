//! Percentile-based citation impact.
//!
//! Every citable paper is scored against the papers of the same document
//! type and publication year. The scores are summed (not averaged) into the
//! Integrated Impact Indicator, which decomposes cleanly over journals,
//! countries, or any other partition of the record set. The [`stats`] module
//! tests observed impact against expectation and citation distributions
//! against each other, and [`simgraph`] turns the pairwise outcomes into a
//! homogeneity graph.

pub mod corpus;
pub mod exact;
pub mod indicators;
pub mod percentiles;
pub mod report;
pub mod simgraph;
pub mod stats;
pub mod tables;

pub use corpus::{
    fractionate_countries, load_corpus, partition_reference_sets, resolve_aggregates, Corpus,
    CorpusError, DocType, GroupingConfig, InputFormat, PaperRecord, ReferenceSet, ReferenceSetKey,
};
pub use indicators::{
    i3, i3_classed, linear_regression, observed_vs_expected, share_of_total, summarize_group,
    GroupSummary,
};
pub use percentiles::{
    assign_all, percentile_of, rank_class_of, PercentileAssignment, RankClassScheme, TiePolicy,
};

/// Tool version recorded in report metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
