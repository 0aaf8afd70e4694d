#![allow(dead_code)]

use std::fmt::Write as _;

use i3kit::{Corpus, DocType, PaperRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HEADER: &str = "id,journal,year,doc_type,citations,countries";

pub struct Shape {
    pub records: usize,
    pub journals: usize,
    pub countries: usize,
    /// Share of citable records without any country token.
    pub addressless: f64,
}

pub fn record(id: &str, journal: &str, year: i32, doc_type: DocType, citations: u64, countries: &[&str]) -> PaperRecord {
    PaperRecord {
        id: id.into(),
        journal: journal.into(),
        year,
        doc_type,
        citations,
        countries: countries.iter().map(|c| c.to_string()).collect(),
    }
}

/// Skewed citation counts with a journal-dependent scale, a few document
/// types over two years, and 0..=3 country tokens per paper.
pub fn synthetic(shape: &Shape, seed: u64) -> Vec<PaperRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = [DocType::Article, DocType::Article, DocType::Article, DocType::Review, DocType::Letter, DocType::ProceedingsPaper, DocType::Other];
    (0..shape.records)
        .map(|i| {
            let j = rng.gen_range(0..shape.journals);
            let scale = 1.0 + 8.0 * (j as f64 + 1.0) / shape.journals as f64;
            let u: f64 = rng.gen_range(1e-9..1.0);
            let citations = (-u.ln() * scale).floor() as u64;
            let tokens = if rng.gen_bool(shape.addressless) {
                0
            } else {
                rng.gen_range(1..=3)
            };
            let countries = (0..tokens)
                .map(|_| format!("C{:02}", rng.gen_range(0..shape.countries)))
                .collect();
            PaperRecord {
                id: format!("p{i:06}"),
                journal: format!("Journal {j:02}"),
                year: 2007 + rng.gen_range(0..2),
                doc_type: types[rng.gen_range(0..types.len())],
                citations,
                countries,
            }
        })
        .collect()
}

pub fn to_csv(records: &[PaperRecord]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.id,
            r.journal,
            r.year,
            r.doc_type,
            r.citations,
            r.countries.join(";")
        );
    }
    out
}

pub fn corpus(records: Vec<PaperRecord>) -> Corpus {
    Corpus::from_records(records).expect("unique ids")
}

/// Journal A: 66 highly cited papers. Journal B: 375 papers, mostly in the
/// middle of the distribution. B has the lower mean but the higher sum.
pub fn inversion_corpus(seed: u64) -> Vec<PaperRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..66 {
        out.push(record(&format!("a{i:03}"), "A", 2007, DocType::Article, rng.gen_range(8..30), &[]));
    }
    for i in 0..375 {
        let c = if rng.gen_bool(0.7) { rng.gen_range(1..8) } else { rng.gen_range(0..3) };
        out.push(record(&format!("b{i:03}"), "B", 2007, DocType::Article, c, &[]));
    }
    out
}
