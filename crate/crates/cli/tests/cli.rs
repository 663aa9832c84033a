use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn vulnmatch(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vulnmatch"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn demo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo")
}

fn session_file(dir: &Path, n: usize, mode: &str, stockpiles: &[&str]) -> PathBuf {
    let mut s = format!("sigma = 16\nseed = 5\nvariant = {{ kind = \"at-least-two\" }}\nmode = {mode}\n");
    for (i, pile) in stockpiles.iter().enumerate().take(n) {
        let file = format!("p{i}.txt");
        fs::write(dir.join(&file), pile).unwrap();
        s.push_str(&format!("\n[[party]]\nid = {i}\nstockpile = \"{file}\"\n"));
    }
    let path = dir.join(format!("session-{}.toml", mode.len()));
    fs::write(&path, s).unwrap();
    path
}

#[test]
fn idgen_hashes_dedupes_and_rejects() {
    let tmp = TempDir::new().unwrap();
    let ids = fs::read_to_string(demo().join("identifiers.jsonl")).unwrap();
    let first = ids.lines().next().unwrap();
    fs::write(tmp.path().join("ids.jsonl"), format!("{ids}{first}\n")).unwrap();
    let o = vulnmatch(&["idgen", "--in", "ids.jsonl", "--sigma", "256", "--out", "h.txt"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: line 5 duplicates line 1"));
    let hashes = fs::read_to_string(tmp.path().join("h.txt")).unwrap();
    assert_eq!(hashes.lines().count(), 4);
    assert_eq!(
        hashes.lines().next().unwrap(),
        "ffa2b853604314a9579bc4cf058d092cb8b373c87d758c4220f82d7a179fe8b3"
    );

    fs::write(
        tmp.path().join("bad.jsonl"),
        format!("{first}\n{{\"cpe\":\"cpe:2.3:x:v:p\",\"cwe\":1,\"function\":\"f\"}}\n"),
    )
    .unwrap();
    let o = vulnmatch(&["idgen", "--in", "bad.jsonl"], tmp.path());
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.starts_with("error[identifier]: line 2"), "{err}");
}

#[test]
fn compile_writes_circuit_and_manifest_within_bounds() {
    let tmp = TempDir::new().unwrap();
    let o = vulnmatch(
        &["compile", "--parties", "2", "--u", "4", "--sigma", "16", "--variant", "at-least-two", "--out", "c.txt", "--report", "m.json"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let circuit = fs::read_to_string(tmp.path().join("c.txt")).unwrap();
    assert!(circuit.lines().any(|l| l.starts_with("AND ")));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("m.json")).unwrap()).unwrap();
    let stages = m["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 4);
    for s in stages {
        assert!(s["and_bound"].as_f64().unwrap() >= s["and_count"].as_f64().unwrap());
    }

    let o = vulnmatch(
        &["compile", "--parties", "2", "--u", "2", "--variant", "at-least-m", "--m", "5", "--report", "x.json", "--count-only"],
        tmp.path(),
    );
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[config]"));
}

#[test]
fn simulate_matches_oracle_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = demo().join("two-party/session.toml");
    let cfg = cfg.to_str().unwrap();
    let o = vulnmatch(&["simulate", "--config", cfg, "--out", "a"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("party 0: 2 shared of 4"));
    let o = vulnmatch(&["oracle", "--config", cfg, "--out", "expected"], tmp.path());
    assert!(o.status.success());
    for p in ["party-0.txt", "party-1.txt"] {
        assert_eq!(
            fs::read_to_string(tmp.path().join("a").join(p)).unwrap(),
            fs::read_to_string(tmp.path().join("expected").join(p)).unwrap()
        );
    }
    let o = vulnmatch(&["simulate", "--config", cfg, "--out", "b"], tmp.path());
    assert!(o.status.success());
    assert_eq!(
        fs::read(tmp.path().join("a/transcript.json")).unwrap(),
        fs::read(tmp.path().join("b/transcript.json")).unwrap()
    );
}

#[test]
fn simulate_reports_unsorted_input() {
    let tmp = TempDir::new().unwrap();
    let cfg = demo().join("two-party/session.toml");
    let o = vulnmatch(
        &["simulate", "--config", cfg.to_str().unwrap(), "--out", "r", "--inject-unsorted", "1"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(
        stderr(&o).trim(),
        "error[abort-unsorted]: protocol aborted: unsorted input from parties [1]"
    );
}

#[test]
fn outsourced_mode_gives_direct_reports() {
    let tmp = TempDir::new().unwrap();
    let piles = [
        "0001\n0002\n0003\n",
        "0002\n0004\n",
        "0003\n0004\n0005\n",
        "0006\n",
        "0001\n0007\n",
        "0008\n0009\n",
        "0009\n",
        "000a\n0005\n",
    ];
    let direct = session_file(tmp.path(), 8, "{ kind = \"direct\" }", &piles);
    let outsourced = session_file(tmp.path(), 8, "{ kind = \"outsourced\", servers = 3 }", &piles);
    for (cfg, out) in [(&direct, "d"), (&outsourced, "o")] {
        let o = vulnmatch(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for p in 0..8 {
        let f = format!("party-{p}.txt");
        assert_eq!(
            fs::read_to_string(tmp.path().join("d").join(&f)).unwrap(),
            fs::read_to_string(tmp.path().join("o").join(&f)).unwrap()
        );
    }
    let t: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("o/transcript.json")).unwrap()).unwrap();
    assert_eq!(t["nodes"].as_array().unwrap().len(), 11);
}

#[test]
fn ledger_round_trip_tamper_and_attack() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let ok = |args: &[&str]| {
        let o = vulnmatch(args, dir);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        stdout(&o)
    };
    ok(&["ledger", "init", "--ledger", "l.bin", "--writers", "a,b", "--readers", "r", "--role-split"]);
    let ids = demo().join("identifiers.jsonl");
    ok(&["ledger", "submit", "--ledger", "l.bin", "--writer", "a", "--identifiers", ids.to_str().unwrap()]);
    let first = fs::read_to_string(&ids).unwrap().lines().next().unwrap().to_string();
    fs::write(dir.join("one.jsonl"), first).unwrap();
    ok(&["ledger", "submit", "--ledger", "l.bin", "--writer", "b", "--identifiers", "one.jsonl"]);
    let out = ok(&["ledger", "check", "--ledger", "l.bin", "--reader", "r"]);
    assert!(out.contains("match ffa2b853"), "{out}");
    assert!(out.contains("blocks 1,5"), "{out}");
    let o = vulnmatch(&["ledger", "check", "--ledger", "l.bin", "--reader", "a"], dir);
    assert!(stderr(&o).starts_with("error[ledger]"));
    assert!(ok(&["ledger", "verify", "--ledger", "l.bin"]).starts_with("ok: 7 blocks"));

    let mut bytes = fs::read(dir.join("l.bin")).unwrap();
    let n = bytes.len();
    bytes[n - 40] ^= 0x10;
    fs::write(dir.join("t.bin"), bytes).unwrap();
    let o = vulnmatch(&["ledger", "verify", "--ledger", "t.bin"], dir);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error[tampered]"), "{}", stderr(&o));

    ok(&["ledger", "init", "--ledger", "toy.bin", "--writers", "w1,w2,w3"]);
    ok(&["ledger", "populate", "--ledger", "toy.bin", "--count", "50", "--cpe-bits", "3", "--cwe-bits", "3", "--fn-bits", "4", "--seed", "3"]);
    let report = ok(&["ledger", "attack", "--ledger", "toy.bin", "--cpe-bits", "3", "--cwe-bits", "3", "--fn-bits", "4"]);
    assert!(report.contains("recovered 50\n"), "{report}");
    assert!(report.contains("recovery_rate 1.0000"));
    let counted: usize = report
        .lines()
        .filter(|l| l.starts_with("writer "))
        .map(|l| l.split_whitespace().nth(3).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(counted, 50);
}

#[test]
fn bench_grid_rows_and_counts() {
    let tmp = TempDir::new().unwrap();
    let o = vulnmatch(
        &["bench", "--parties-list", "2,3", "--u-list", "2,4", "--sigma", "16", "--seed", "1"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<Vec<String>> = out
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim_start().starts_with('N'))
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    let bytes: Vec<u64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(bytes[0] < bytes[1] && bytes[0] < bytes[2] && bytes[2] < bytes[3] && bytes[1] < bytes[3]);

    let o = vulnmatch(
        &["compile", "--parties", "3", "--u", "4", "--sigma", "16", "--report", "m.json", "--count-only"],
        tmp.path(),
    );
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(m["total"]["and_count"].as_u64().unwrap().to_string(), rows[3][2]);
}
