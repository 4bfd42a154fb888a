//! End-to-end checks on the `implink` binary. Prints one PASS/FAIL line per
//! criterion and exits non-zero on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/golden")
        .join(name)
}

fn implink(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_implink"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn fixture_args() -> Vec<String> {
    let p = |n: &str| golden(n).to_string_lossy().into_owned();
    vec![
        "--edges".into(),
        p("edges.txt"),
        "--posts".into(),
        p("posts.tsv"),
        "--reposts".into(),
        p("reposts.tsv"),
        "--dataset".into(),
        "golden".into(),
        "--min-events".into(),
        "1".into(),
        "--no-mutual-filter".into(),
        "--n-boot".into(),
        "50".into(),
    ]
}

fn run_fixture(command: &str, extra: &[&str], out: &Path) -> Result<BTreeMap<String, String>, String> {
    let args = fixture_args();
    let mut all: Vec<&str> = vec![command];
    all.extend(args.iter().map(String::as_str));
    all.extend(extra);
    let o = implink(&all, out);
    if !o.status.success() {
        return Err(format!("{command} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
    }
    let mut tables = BTreeMap::new();
    for entry in fs::read_dir(out).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        tables.insert(name, fs::read_to_string(&path).map_err(|e| e.to_string())?);
    }
    Ok(tables)
}

fn body(text: &str) -> &str {
    text.split_once('\n').map_or("", |(_, rest)| rest)
}

fn golden_tables() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let tables = run_fixture("report-all", &[], dir.path())?;
    let mut checked = 0;
    for entry in fs::read_dir(golden("expected")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let want = fs::read_to_string(&path).unwrap();
        let got = tables.get(&name).ok_or(format!("missing {name}.csv"))?;
        if body(got) != want {
            return Err(format!("{name}.csv differs from expected"));
        }
        checked += 1;
    }
    Ok(format!("{checked} tables match, {} written", tables.len()))
}

fn provenance_header() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let tables = run_fixture("summary", &["--seed", "7"], dir.path())?;
    let text = tables.get("summary").ok_or("missing summary.csv")?;
    let line = text.lines().next().unwrap_or_default();
    let json: serde_json::Value = line
        .strip_prefix("# ")
        .and_then(|j| serde_json::from_str(j).ok())
        .ok_or(format!("bad header line `{line}`"))?;
    let hash = json["config_hash"].as_str().unwrap_or_default();
    if json["seed"] != 7 || json["dataset"] != "golden" || hash.len() != 16 {
        return Err(format!("header {json}"));
    }
    Ok(format!("config hash {hash}"))
}

fn selection() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_fixture("summary", &[], dir.path())?;
    if summary.keys().collect::<Vec<_>>() != ["summary"] {
        return Err(format!("summary wrote {:?}", summary.keys()));
    }
    let dir = tempfile::tempdir().unwrap();
    let picked = run_fixture("report-all", &["--analyses", "classify,distance"], dir.path())?;
    let names: Vec<&str> = picked.keys().map(String::as_str).collect();
    if names != ["distance_profile", "post_links"] {
        return Err(format!("--analyses wrote {names:?}"));
    }
    Ok("subcommand and --analyses limit output".into())
}

fn worker_invariance() -> Result<String, String> {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let one = run_fixture("report-all", &["--workers", "1"], a.path())?;
    let four = run_fixture("report-all", &["--workers", "4"], b.path())?;
    if one != four {
        let diff: Vec<&String> = one.keys().filter(|k| one.get(*k) != four.get(*k)).collect();
        return Err(format!("tables differ: {diff:?}"));
    }
    Ok(format!("{} tables byte-identical for 1 and 4 workers", one.len()))
}

fn exit_codes() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("edges.txt"), "2 1\n").unwrap();
    fs::write(d.join("bad.txt"), "2 x\n").unwrap();
    fs::write(d.join("posts.txt"), "1 1 0\n").unwrap();
    fs::write(d.join("reposts.txt"), "1 2 5\n").unwrap();
    let f = |n: &str| d.join(n).to_string_lossy().into_owned();
    let out = d.join("out");
    let cases: [(&str, Vec<String>, i32); 4] = [
        ("missing --edges", vec!["summary".into(), "--posts".into(), f("posts.txt"), "--reposts".into(), f("reposts.txt")], 2),
        (
            "zero n-boot",
            vec!["nullmodel".into(), "--edges".into(), f("edges.txt"), "--posts".into(), f("posts.txt"), "--reposts".into(), f("reposts.txt"), "--n-boot".into(), "0".into()],
            2,
        ),
        ("malformed edges", vec!["summary".into(), "--edges".into(), f("bad.txt"), "--posts".into(), f("posts.txt"), "--reposts".into(), f("reposts.txt")], 3),
        ("too few rows", vec!["regress".into(), "--edges".into(), f("edges.txt"), "--posts".into(), f("posts.txt"), "--reposts".into(), f("reposts.txt")], 4),
    ];
    for (what, args, want) in &cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let got = implink(&args, &out).status.code();
        if got != Some(*want) {
            return Err(format!("{what}: exit {got:?}, want {want}"));
        }
    }
    Ok("config 2, input format 3, precondition 4".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<String, String>); 5] = [
        ("golden tables via binary", golden_tables),
        ("provenance header", provenance_header),
        ("analysis selection", selection),
        ("worker-count invariance", worker_invariance),
        ("exit codes", exit_codes),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(d) => println!("PASS {} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
