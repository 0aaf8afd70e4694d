//! C ABI over `i3kit`.
//!
//! Every function returns an [`I3kitStatus`] and writes results through out
//! pointers. On failure the message is available from
//! [`i3kit_last_error_message`] on the same thread. Handles are opaque and
//! must be released with their matching `_free` function; strings returned
//! as `char *` are released with [`i3kit_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use i3kit::corpus::{load_corpus, Corpus, DocType, GroupingConfig, InputFormat, ReferenceSet, ReferenceSetKey};
use i3kit::exact::{to_f64, Fraction};
use i3kit::indicators::{i3, share_of_total};
use i3kit::percentiles::{assign_all, assignments_csv, percentile_of, PercentileAssignment, TiePolicy};
use i3kit::report::{build_report, GroupBy, ReportError, ReportOptions};
use i3kit::stats;
use num_rational::BigRational;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum I3kitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    InvalidConfig = 4,
    Domain = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum I3kitFormat {
    Csv = 0,
    Jsonl = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum I3kitTiePolicy {
    Highest = 0,
    StrictLower = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum I3kitGroupBy {
    Journal = 0,
    Country = 1,
    Both = 2,
}

/// Parsed, validated corpus.
pub struct I3kitCorpus(Corpus);

/// Grouping and test configuration.
pub struct I3kitConfig(GroupingConfig);

/// Percentile assignments of every citable paper, sorted by id.
pub struct I3kitAssignments(Vec<PercentileAssignment>);

/// One assignment. The percentile is exact as `percentile_num / percentile_den`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct I3kitAssignment {
    pub percentile_num: i64,
    pub percentile_den: i64,
    pub percentile: f64,
    pub class_weight: u32,
    pub citations: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct I3kitKruskalWallis {
    pub h: f64,
    pub df: usize,
    pub p: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct I3kitMannWhitney {
    pub u: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub z: f64,
    pub p: f64,
    pub significant: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(I3kitStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(I3kitStatus::NullPointer, format!("`{what}` is null"))
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let status = match &e {
            ReportError::Corpus(i3kit::corpus::CorpusError::Config(_))
            | ReportError::Corpus(i3kit::corpus::CorpusError::AggregateCollision(_)) => {
                I3kitStatus::InvalidConfig
            }
            ReportError::Io { .. } => I3kitStatus::Io,
            _ if e.exit_code() == 2 => I3kitStatus::InvalidInput,
            _ => I3kitStatus::Domain,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: Option<String>) {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = message.map(|m| CString::new(m.replace('\0', " ")).unwrap_or_default());
    });
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> I3kitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            I3kitStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(Some(message));
            status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            I3kitStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(Failure::null(what))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(I3kitStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure(I3kitStatus::Domain, e.to_string())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn i3kit_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a
/// successful call. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn i3kit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn i3kit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `len` bytes of CSV or JSONL records.
#[no_mangle]
pub unsafe extern "C" fn i3kit_corpus_load(
    data: *const u8,
    len: usize,
    format: I3kitFormat,
    out_corpus: *mut *mut I3kitCorpus,
) -> I3kitStatus {
    guard(|| {
        let out_corpus = out(out_corpus, "out_corpus")?;
        let bytes = slice(data, len, "data")?;
        let format = match format {
            I3kitFormat::Csv => InputFormat::Csv,
            I3kitFormat::Jsonl => InputFormat::Jsonl,
        };
        let corpus = load_corpus(bytes, format)
            .map_err(|e| Failure(I3kitStatus::InvalidInput, e.to_string()))?;
        *out_corpus = Box::into_raw(Box::new(I3kitCorpus(corpus)));
        Ok(())
    })
}

/// Number of records, citable or not.
#[no_mangle]
pub unsafe extern "C" fn i3kit_corpus_len(corpus: *const I3kitCorpus, out_len: *mut usize) -> I3kitStatus {
    guard(|| {
        *out(out_len, "out_len")? = handle(corpus, "corpus")?.0.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn i3kit_corpus_free(corpus: *mut I3kitCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

#[no_mangle]
pub unsafe extern "C" fn i3kit_config_default(out_config: *mut *mut I3kitConfig) -> I3kitStatus {
    guard(|| {
        *out(out_config, "out_config")? = Box::into_raw(Box::new(I3kitConfig(GroupingConfig::default())));
        Ok(())
    })
}

/// Parses a JSON grouping configuration.
#[no_mangle]
pub unsafe extern "C" fn i3kit_config_from_json(
    json: *const c_char,
    out_config: *mut *mut I3kitConfig,
) -> I3kitStatus {
    guard(|| {
        let out_config = out(out_config, "out_config")?;
        let config = GroupingConfig::from_json(text(json, "json")?)
            .map_err(|e| Failure(I3kitStatus::InvalidConfig, e.to_string()))?;
        *out_config = Box::into_raw(Box::new(I3kitConfig(config)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn i3kit_config_free(config: *mut I3kitConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Assigns a percentile and rank class to every citable paper.
#[no_mangle]
pub unsafe extern "C" fn i3kit_assign(
    corpus: *const I3kitCorpus,
    config: *const I3kitConfig,
    out_assignments: *mut *mut I3kitAssignments,
) -> I3kitStatus {
    guard(|| {
        let out_assignments = out(out_assignments, "out_assignments")?;
        let corpus = handle(corpus, "corpus")?;
        let config = handle(config, "config")?;
        let assignments = assign_all(&corpus.0, &config.0).map_err(domain)?;
        *out_assignments = Box::into_raw(Box::new(I3kitAssignments(assignments)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn i3kit_assignments_len(
    assignments: *const I3kitAssignments,
    out_len: *mut usize,
) -> I3kitStatus {
    guard(|| {
        *out(out_len, "out_len")? = handle(assignments, "assignments")?.0.len();
        Ok(())
    })
}

fn lookup(assignments: &I3kitAssignments, index: usize) -> Result<&PercentileAssignment, Failure> {
    assignments.0.get(index).ok_or_else(|| {
        Failure(
            I3kitStatus::OutOfRange,
            format!("index {index} out of range for {} assignments", assignments.0.len()),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn i3kit_assignments_get(
    assignments: *const I3kitAssignments,
    index: usize,
    out_assignment: *mut I3kitAssignment,
) -> I3kitStatus {
    guard(|| {
        let out_assignment = out(out_assignment, "out_assignment")?;
        let a = lookup(handle(assignments, "assignments")?, index)?;
        *out_assignment = I3kitAssignment {
            percentile_num: *a.percentile.numer(),
            percentile_den: *a.percentile.denom(),
            percentile: i3kit::exact::frac_to_f64(&a.percentile),
            class_weight: a.class_weight,
            citations: a.citations,
        };
        Ok(())
    })
}

/// Paper id of one assignment; free with [`i3kit_string_free`].
#[no_mangle]
pub unsafe extern "C" fn i3kit_assignments_paper_id(
    assignments: *const I3kitAssignments,
    index: usize,
    out_id: *mut *mut c_char,
) -> I3kitStatus {
    guard(|| {
        let out_id = out(out_id, "out_id")?;
        let a = lookup(handle(assignments, "assignments")?, index)?;
        *out_id = owned_string(a.paper_id.clone());
        Ok(())
    })
}

/// Sum of all percentiles: `out_value` approximates it, `out_exact`
/// (optional) receives it as `"num/den"` or `"num"`.
#[no_mangle]
pub unsafe extern "C" fn i3kit_assignments_i3(
    assignments: *const I3kitAssignments,
    out_value: *mut f64,
    out_exact: *mut *mut c_char,
) -> I3kitStatus {
    guard(|| {
        let out_value = out(out_value, "out_value")?;
        let total = i3(&handle(assignments, "assignments")?.0, None).map_err(domain)?;
        *out_value = to_f64(&total);
        if let Some(exact) = out_exact.as_mut() {
            *exact = owned_string(total.to_string());
        }
        Ok(())
    })
}

/// Assignments as CSV; free with [`i3kit_string_free`].
#[no_mangle]
pub unsafe extern "C" fn i3kit_assignments_csv(
    assignments: *const I3kitAssignments,
    out_csv: *mut *mut c_char,
) -> I3kitStatus {
    guard(|| {
        let out_csv = out(out_csv, "out_csv")?;
        *out_csv = owned_string(assignments_csv(&handle(assignments, "assignments")?.0));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn i3kit_assignments_free(assignments: *mut I3kitAssignments) {
    if !assignments.is_null() {
        drop(Box::from_raw(assignments));
    }
}

/// Percentile of `citations` within `refset` (which must contain it), with
/// adjustment `adj_num / adj_den`. The result is `*out_num / *out_den`.
#[no_mangle]
pub unsafe extern "C" fn i3kit_percentile_of(
    citations: u64,
    refset: *const u64,
    refset_len: usize,
    policy: I3kitTiePolicy,
    adj_num: i64,
    adj_den: i64,
    out_num: *mut i64,
    out_den: *mut i64,
) -> I3kitStatus {
    guard(|| {
        let out_num = out(out_num, "out_num")?;
        let out_den = out(out_den, "out_den")?;
        if adj_den <= 0 || adj_num < 0 || adj_num >= adj_den {
            return Err(domain(format!("adjustment {adj_num}/{adj_den} outside [0, 1)")));
        }
        let key = ReferenceSetKey { doc_type: DocType::Article, year: 0 };
        let set = ReferenceSet::new(key, slice(refset, refset_len, "refset")?.to_vec());
        let policy = match policy {
            I3kitTiePolicy::Highest => TiePolicy::Highest,
            I3kitTiePolicy::StrictLower => TiePolicy::StrictLower,
        };
        let p = percentile_of(citations, &set, policy, Fraction::new(adj_num, adj_den)).map_err(domain)?;
        *out_num = *p.numer();
        *out_den = *p.denom();
        Ok(())
    })
}

/// `100 * value / total` for finite non-negative inputs.
#[no_mangle]
pub unsafe extern "C" fn i3kit_share_of_total(value: f64, total: f64, out_percent: *mut f64) -> I3kitStatus {
    guard(|| {
        let out_percent = out(out_percent, "out_percent")?;
        let exact = |v: f64| BigRational::from_float(v).ok_or_else(|| domain(format!("{v} is not finite")));
        *out_percent = to_f64(&share_of_total(&exact(value)?, &exact(total)?).map_err(domain)?);
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn i3kit_normal_cdf(z: f64) -> f64 {
    stats::normal_cdf(z)
}

#[no_mangle]
pub unsafe extern "C" fn i3kit_normal_quantile(p: f64, out_z: *mut f64) -> I3kitStatus {
    guard(|| {
        *out(out_z, "out_z")? = stats::normal_quantile(p).map_err(domain)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn i3kit_t_two_sided_p(t: f64, df: f64, out_p: *mut f64) -> I3kitStatus {
    guard(|| {
        *out(out_p, "out_p")? = stats::t_two_sided_p(t, df).map_err(domain)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn i3kit_chi_square_sf(x: f64, df: f64, out_p: *mut f64) -> I3kitStatus {
    guard(|| {
        *out(out_p, "out_p")? = stats::chi_square_sf(x, df).map_err(domain)?;
        Ok(())
    })
}

/// Kruskal-Wallis over `group_count` groups stored back to back in
/// `values`; `group_sizes[i]` is the length of group `i`.
#[no_mangle]
pub unsafe extern "C" fn i3kit_kruskal_wallis(
    values: *const f64,
    group_sizes: *const usize,
    group_count: usize,
    out_result: *mut I3kitKruskalWallis,
) -> I3kitStatus {
    guard(|| {
        let out_result = out(out_result, "out_result")?;
        let sizes = slice(group_sizes, group_count, "group_sizes")?;
        let total = sizes
            .iter()
            .try_fold(0usize, |acc, &n| acc.checked_add(n))
            .ok_or_else(|| domain("group sizes overflow"))?;
        let values = slice(values, total, "values")?;
        let mut groups = Vec::with_capacity(sizes.len());
        let mut offset = 0;
        for &n in sizes {
            groups.push(&values[offset..offset + n]);
            offset += n;
        }
        let kw = stats::kruskal_wallis(&groups).map_err(domain)?;
        *out_result = I3kitKruskalWallis { h: kw.h, df: kw.df, p: kw.p };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn i3kit_mann_whitney(
    a: *const f64,
    a_len: usize,
    b: *const f64,
    b_len: usize,
    alpha: f64,
    out_result: *mut I3kitMannWhitney,
) -> I3kitStatus {
    guard(|| {
        let out_result = out(out_result, "out_result")?;
        let mw = stats::mann_whitney(slice(a, a_len, "a")?, slice(b, b_len, "b")?, alpha).map_err(domain)?;
        *out_result = I3kitMannWhitney {
            u: mw.u,
            u_a: mw.u_a,
            u_b: mw.u_b,
            z: mw.z,
            p: mw.p,
            significant: mw.significant,
        };
        Ok(())
    })
}

/// Runs the full report pipeline and writes every artifact into `out_dir`.
/// `config` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn i3kit_report_run(
    corpus: *const I3kitCorpus,
    config: *const I3kitConfig,
    group_by: I3kitGroupBy,
    seed: u64,
    threads: usize,
    out_dir: *const c_char,
) -> I3kitStatus {
    guard(|| {
        let corpus = handle(corpus, "corpus")?;
        let default = GroupingConfig::default();
        let config = config.as_ref().map_or(&default, |c| &c.0);
        let dir = PathBuf::from(text(out_dir, "out_dir")?);
        let options = ReportOptions {
            group_by: match group_by {
                I3kitGroupBy::Journal => GroupBy::Journal,
                I3kitGroupBy::Country => GroupBy::Country,
                I3kitGroupBy::Both => GroupBy::Both,
            },
            seed,
            threads,
            ..ReportOptions::default()
        };
        let bundle = build_report(&corpus.0, config, b"", b"", &options)?;
        bundle.write_to(&dir)?;
        Ok(())
    })
}
