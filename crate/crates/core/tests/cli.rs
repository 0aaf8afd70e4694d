mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use i3kit::DocType;

fn i3kit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_i3kit"))
        .args(args)
        .env_remove("I3KIT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn sample() -> String {
    common::to_csv(&common::synthetic(
        &common::Shape { records: 600, journals: 6, countries: 5, addressless: 0.15 },
        11,
    ))
}

#[test]
fn validate_clean_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &sample());
    let o = i3kit(&["validate", "--input", &input]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("0 errors\n"), "{}", stdout(&o));
}

#[test]
fn validate_duplicate_id() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{}\nx1,J,2007,article,1,\nx1,J,2008,review,2,\n", common::HEADER);
    let input = write(dir.path(), "dup.csv", &text);
    let o = i3kit(&["validate", "--input", &input]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert!(out.contains("duplicate id `x1`"), "{out}");
    assert!(out.ends_with("1 error\n"));
}

#[test]
fn validate_reports_address_coverage() {
    // 5,090 of 5,737 citable records carry an address.
    let records: Vec<_> = (0..5737)
        .map(|i| {
            let countries: &[&str] = if i < 5090 { &["NLD"] } else { &[] };
            common::record(&format!("r{i}"), "J", 2007, DocType::Article, (i % 13) as u64, countries)
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &common::to_csv(&records));
    let o = i3kit(&["validate", "--input", &input]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("warning: address coverage 88.72% (5090 of 5737"), "{}", stdout(&o));
}

#[test]
fn report_ranks_by_sum_not_mean() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &common::to_csv(&common::inversion_corpus(3)));
    let out = dir.path().join("out");
    let o = i3kit(&["report", "--input", &input, "--group-by", "journal", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("journals.csv")).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][0], "B");
    assert_eq!(rows[1][0], "A");
    let mean = |r: &Vec<&str>| r[5].parse::<f64>().unwrap();
    assert!(mean(&rows[1]) > mean(&rows[0]));
    assert!(!out.join("countries.csv").exists());
}

#[test]
fn report_single_journal() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{}\na,J,2007,article,0,USA\nb,J,2007,article,4,\nc,J,2008,review,1,GBR\n", common::HEADER);
    let input = write(dir.path(), "in.csv", &text);
    let out = dir.path().join("out");
    let o = i3kit(&["report", "--input", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let journals = std::fs::read_to_string(out.join("journals.csv")).unwrap();
    let row: Vec<&str> = journals.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[13], row[14], row[15]), ("100.00", "100.00", "100.00"));
    assert_eq!(std::fs::read_to_string(out.join("pairwise.csv")).unwrap().lines().count(), 2);
    assert_eq!(std::fs::read_to_string(out.join("similar_pairs.csv")).unwrap(), "source,target,z,p\n");
    assert_eq!(std::fs::read_to_string(out.join("homogeneity.net")).unwrap(), "*Vertices 1\n1 \"J\"\n*Edges\n");
}

#[test]
fn report_is_deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &sample());
    let config = write(dir.path(), "cfg.json", r#"{"aggregates": {"EU": ["C01", "C02"]}, "min_share_percent": 5}"#);
    let run = |name: &str, threads: &str, via_env: bool| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_i3kit"));
        cmd.args(["report", "--input", &input, "--config", &config, "--seed", "9", "--out", out.to_str().unwrap()]);
        if via_env {
            cmd.env("I3KIT_THREADS", threads);
        } else {
            cmd.env_remove("I3KIT_THREADS").args(["--threads", threads]);
        }
        assert!(cmd.status().unwrap().success());
        read_dir(&out)
    };
    let a = run("a", "1", false);
    let b = run("b", "1", false);
    let c = run("c", "8", false);
    let d = run("d", "4", true);
    assert_eq!(a.len(), 14);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a, d);
    for bytes in a.values() {
        assert!(!bytes.contains(&b'\r'));
    }
    let summary = String::from_utf8(a["summary.json"].clone()).unwrap();
    assert!(!summary.contains("timestamp"));
    assert!(summary.contains(&i3kit::report::sha256_hex(sample().as_bytes())));
}

#[test]
fn stamp_adds_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &sample());
    let out = dir.path().join("out");
    let o = i3kit(&["report", "--input", &input, "--stamp", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(out.join("summary.json")).unwrap().contains("\"timestamp\""));
}

#[test]
fn table_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &sample());
    let out = dir.path().join("out");
    assert!(i3kit(&["report", "--input", &input, "--out", out.to_str().unwrap()]).status.success());
    for stem in ["journals", "countries"] {
        let csv = std::fs::read_to_string(out.join(format!("{stem}.csv"))).unwrap();
        let md = std::fs::read_to_string(out.join(format!("{stem}.md"))).unwrap();
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join(format!("{stem}.json"))).unwrap()).unwrap();
        let mut reader = csv::Reader::from_reader(csv.as_bytes());
        let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
        let csv_rows: Vec<Vec<String>> =
            reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
        let md_rows: Vec<Vec<String>> = md
            .lines()
            .skip(4)
            .map(|l| l.trim_matches('|').split(" | ").map(|c| c.trim().to_string()).collect())
            .collect();
        let rows = json.as_array().unwrap();
        assert_eq!(csv_rows.len(), rows.len());
        assert_eq!(csv_rows, md_rows);
        for (csv_row, json_row) in csv_rows.iter().zip(rows) {
            for (col, cell) in header.iter().zip(csv_row) {
                let v = &json_row[col];
                match cell.parse::<f64>() {
                    Ok(x) => assert_eq!(v.as_f64(), Some(x), "{stem}.{col}"),
                    Err(_) if cell.is_empty() && v.is_null() => {}
                    Err(_) => assert_eq!(v.as_str(), Some(cell.as_str()), "{stem}.{col}"),
                }
            }
        }
    }
}

#[test]
fn country_table_has_footer_and_filter() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &sample());
    let out = dir.path().join("out");
    let o = i3kit(&["report", "--input", &input, "--group-by", "country", "--min-share", "19.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let table = std::fs::read_to_string(out.join("countries.csv")).unwrap();
    let last = table.lines().last().unwrap();
    assert!(last.starts_with("% accounted,accounted,"), "{table}");
    for line in table.lines().skip(1) {
        let share: f64 = line.split(',').nth(14).unwrap().parse().unwrap();
        assert!(line.starts_with("% accounted") || share >= 19.5);
    }
    assert!(!out.join("journals.csv").exists());
}

#[test]
fn jsonl_input_matches_csv() {
    let records = common::synthetic(&common::Shape { records: 80, journals: 3, countries: 3, addressless: 0.1 }, 2);
    let jsonl: String = records
        .iter()
        .map(|r| {
            serde_json::json!({
                "id": r.id, "journal": r.journal, "year": r.year, "doc_type": r.doc_type.as_str(),
                "citations": r.citations, "countries": r.countries,
            })
            .to_string()
                + "\n"
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "in.csv", &common::to_csv(&records));
    let b = write(dir.path(), "in.jsonl", &jsonl);
    let (oa, ob) = (dir.path().join("a"), dir.path().join("b"));
    assert!(i3kit(&["report", "--input", &a, "--out", oa.to_str().unwrap()]).status.success());
    let o = i3kit(&["report", "--input", &b, "--format", "jsonl", "--out", ob.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (ra, rb) = (read_dir(&oa), read_dir(&ob));
    for (name, bytes) in &ra {
        if name != "summary.json" {
            assert_eq!(bytes, &rb[name], "{name}");
        }
    }
}

#[test]
fn report_errors_have_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let only_other = write(dir.path(), "other.csv", &format!("{}\na,J,2007,other,3,\n", common::HEADER));
    let o = i3kit(&["report", "--input", &only_other, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no citable records"));

    let input = write(dir.path(), "in.csv", &sample());
    let blocker = write(dir.path(), "file", "");
    let o = i3kit(&["report", "--input", &input, "--out", &format!("{blocker}/sub")]);
    assert_eq!(o.status.code(), Some(1));

    let o = i3kit(&["report", "--input", dir.path().join("missing.csv").to_str().unwrap(), "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));

    let bad = write(dir.path(), "bad.json", r#"{"aggregates": {"EU": []}}"#);
    let o = i3kit(&["report", "--input", &input, "--config", &bad, "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

fn compare_fixture(groups: &[(&str, &[u64])]) -> String {
    let mut records = Vec::new();
    for (name, counts) in groups {
        for (i, &c) in counts.iter().enumerate() {
            records.push(common::record(&format!("{name}{i}"), name, 2007, DocType::Article, c, &[]));
        }
    }
    common::to_csv(&records)
}

#[test]
fn compare_fifty_units_prints_alpha() {
    let names: Vec<String> = (0..50).map(|i| format!("J{i:02}")).collect();
    let counts: Vec<Vec<u64>> = (0..50).map(|i| vec![i, i + 1, i + 2]).collect();
    let groups: Vec<(&str, &[u64])> = names.iter().zip(&counts).map(|(n, c)| (n.as_str(), c.as_slice())).collect();
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &compare_fixture(&groups));
    let o = i3kit(&["compare", "--input", &input]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("1225 comparisons, per-comparison alpha 0.000041"), "{out}");
    assert_eq!(out.lines().count(), 2 + 1225);
}

#[test]
fn compare_identical_pair() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &compare_fixture(&[("A", &[1, 2, 3]), ("B", &[1, 2, 3])]));
    let o = i3kit(&["compare", "--input", &input, "--unit", "A", "--unit", "B"]);
    let out = stdout(&o);
    assert!(out.contains("Mann-Whitney U"));
    assert!(out.contains("A vs B: z = 0.000, p = 1.000, not significant"), "{out}");
}

#[test]
fn compare_three_groups_matches_library() {
    let groups: [(&str, &[u64]); 3] = [("A", &[1, 2, 3, 4]), ("B", &[5, 6, 7, 8]), ("C", &[9, 10, 11, 12])];
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &compare_fixture(&groups));
    let o = i3kit(&["compare", "--input", &input, "--unit", "A,B,C"]);
    let out = stdout(&o);
    let labels: Vec<String> = groups.iter().map(|g| g.0.to_string()).collect();
    let data: Vec<Vec<f64>> = groups.iter().map(|g| g.1.iter().map(|&c| c as f64).collect()).collect();
    let m = i3kit::stats::dunn_pairwise(&labels, &data, 0.05).unwrap();
    for i in 0..3 {
        for j in i + 1..3 {
            let verdict = if m.significant[i][j] { "significant" } else { "not significant" };
            let line = out.lines().find(|l| l.starts_with(&format!("{} vs {}:", labels[i], labels[j]))).unwrap();
            assert!(line.ends_with(&format!(", {verdict}")), "{line}");
        }
    }
    assert!(out.contains("A vs C: z = -3.138"), "{out}");
}

#[test]
fn compare_unknown_unit() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", &compare_fixture(&[("A", &[1]), ("B", &[2])]));
    let o = i3kit(&["compare", "--input", &input, "--unit", "A,Z"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown unit `Z`"));
}
