use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tabdyn::HeightState;

fn tabdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabdyn")).args(args).output().expect("binary runs")
}

fn tabdyn_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabdyn")).args(args).env(key, value).output().expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<(String, f64)> {
    let mut rd = csv::Reader::from_path(path).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["diagram", "probability"]);
    rd.records().map(|r| {
        let r = r.unwrap();
        (r[0].to_string(), r[1].parse().unwrap())
    })
    .collect()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn simulate_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = tabdyn(&["simulate", "--replicas", "200", "--time", "2", "--log-events", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["manifest.json", "finals.json", "shapes.csv", "report.json", "events-0.jsonl", "events-199.jsonl"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let finals: Vec<HeightState> = serde_json::from_str(&fs::read_to_string(out.join("finals.json")).unwrap()).unwrap();
    assert_eq!(finals.len(), 200);
    let total: f64 = csv_rows(&out.join("shapes.csv")).iter().map(|r| r.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["args"]["replicas"], 200);
    assert!(manifest["summary"]["mean_events"].as_f64().unwrap() > 0.0);
    for line in fs::read_to_string(out.join("events-0.jsonl")).unwrap().lines() {
        let ev: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["t", "i", "j", "kind", "from", "to"] {
            assert!(ev.get(key).is_some());
        }
    }
}

#[test]
fn zero_time_is_point_mass() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tabdyn(&["simulate", "--replicas", "50", "--time", "0", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(csv_rows(&tmp.path().join("shapes.csv")), vec![("[]".to_string(), 1.0)]);
}

#[test]
fn manifest_replay_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    let args = ["simulate", "--replicas", "300", "--r", "1.5", "--seed", "9", "--log-events", "--out"];
    let o = tabdyn(&[&args[..], &[a.to_str().unwrap()]].concat());
    assert!(o.status.success());
    let manifest = a.join("manifest.json");
    let o = tabdyn_env(&["simulate", "--from-manifest", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()], "TABDYN_WORKERS", "1");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = tabdyn_env(&[&args[..], &[c.to_str().unwrap()]].concat(), "TABDYN_WORKERS", "3");
    assert!(o.status.success());
    let da = dir_bytes(&a);
    assert_eq!(da.len(), 304);
    assert_eq!(da, dir_bytes(&b));
    assert_eq!(da, dir_bytes(&c));
}

#[test]
fn bad_worker_count_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tabdyn_env(&["simulate", "--replicas", "1", "--out", tmp.path().to_str().unwrap()], "TABDYN_WORKERS", "zero");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plancherel_without_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tabdyn(&["simulate", "--mode", "plancherel", "--replicas", "100", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["args"]["mode"], "plancherel");
}

#[test]
fn inadmissible_parameters_report_witness() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tabdyn(&["simulate", "--z", "1.5", "--z-prime", "0.5", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("witness k = -1"), "{err}");
    let o = tabdyn(&["simulate", "--z", "0.5+1i", "--z-prime", "0.5+1i", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn complex_parameters_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tabdyn(&["simulate", "--z", "1+2i", "--z-prime", "1-2i", "--replicas", "20", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn event_cap_sets_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tabdyn(&["simulate", "--replicas", "200", "--time", "5", "--event-cap", "2", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert!(!report["exploded"].as_array().unwrap().is_empty());
}

#[test]
fn subdiagram_confines_support() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tabdyn(&["simulate", "--subdiagram", "row:2", "--time", "5", "--replicas", "300", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let shapes: Vec<String> = csv_rows(&tmp.path().join("shapes.csv")).into_iter().map(|r| r.0).collect();
    assert!(shapes.iter().all(|s| ["[]", "[1]", "[2]"].contains(&s.as_str())), "{shapes:?}");
    let o = tabdyn(&["simulate", "--subdiagram", "[2,3]", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn chain_point_masses() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("s");
    assert!(tabdyn(&["chain", "stationary", "--max-size", "0", "--out", d.to_str().unwrap()]).status.success());
    assert_eq!(csv_rows(&d.join("shapes.csv")), vec![("[]".to_string(), 1.0)]);
    let d = tmp.path().join("t");
    assert!(tabdyn(&["chain", "transient", "--time", "0", "--start", "[2,1]", "--out", d.to_str().unwrap()]).status.success());
    assert_eq!(csv_rows(&d.join("shapes.csv")), vec![("[2,1]".to_string(), 1.0)]);
}

#[test]
fn chain_gillespie_matches_transient() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("g");
    let t = tmp.path().join("t");
    assert!(tabdyn(&["chain", "gillespie", "--time", "1", "--replicas", "20000", "--out", g.to_str().unwrap()]).status.success());
    assert!(tabdyn(&["chain", "transient", "--time", "1", "--max-size", "14", "--out", t.to_str().unwrap()]).status.success());
    let exact: std::collections::BTreeMap<String, f64> = csv_rows(&t.join("shapes.csv")).into_iter().collect();
    let emp: std::collections::BTreeMap<String, f64> = csv_rows(&g.join("shapes.csv")).into_iter().collect();
    let keys: std::collections::BTreeSet<&String> = exact.keys().chain(emp.keys()).collect();
    let tv: f64 = keys.iter().map(|k| (exact.get(*k).unwrap_or(&0.0) - emp.get(*k).unwrap_or(&0.0)).abs()).sum::<f64>() / 2.0;
    let relevant = exact.values().filter(|&&p| p > 1e-4).count();
    assert!(tv < 2.0 * (relevant as f64 / 20000.0).sqrt(), "tv {tv}");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(t.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["summary"]["overflow_mass"].as_f64().unwrap() < 1e-6);
}

#[test]
fn chain_rejects_large_truncation() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tabdyn(&["chain", "stationary", "--max-size", "40", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_exact_checks_pass() {
    let o = tabdyn(&["verify", "rowsums", "--max-size", "8"]);
    assert!(o.status.success());
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["verdict"], "pass");
    let tmp = tempfile::tempdir().unwrap();
    let o = tabdyn(&["verify", "identity", "--trials", "200", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["passed"], 200);
}

#[test]
fn verify_statistical_checks_run() {
    let o = tabdyn(&["verify", "single-particle", "--samples", "5000"]);
    assert!(o.status.success());
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["samples"], 5000);
    let o = tabdyn(&["verify", "claim4a", "--replicas", "5000", "--source", "gillespie"]);
    assert!(o.status.success());
    let o = tabdyn(&["verify", "claim5a", "--replicas", "5000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let o = tabdyn(&["verify", "stationarity", "--replicas", "300", "--initial", "stationary"]);
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rep["tv_at_burn_in"].as_f64().unwrap() < 0.1);
}

#[test]
fn gibbs_sample_shape_and_file() {
    let o = tabdyn(&["gibbs-sample", "--shape", "[2,1]", "-n", "10"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let states: Vec<HeightState> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(states.len(), 10);
    for s in &states {
        s.validate().unwrap();
        assert_eq!(s.shape().rows(), &[2, 1]);
    }

    let tmp = tempfile::tempdir().unwrap();
    let dist = tmp.path().join("d.csv");
    fs::write(&dist, "diagram,probability\n[],0.5\n\"[1,1]\",0.5\n").unwrap();
    let o = tabdyn(&["gibbs-sample", "--dist", dist.to_str().unwrap(), "-n", "200", "--r", "2"]);
    assert!(o.status.success());
    let sizes: Vec<usize> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<HeightState>(l).unwrap().size())
        .collect();
    assert!(sizes.iter().all(|&n| n == 0 || n == 2));
    assert!(sizes.contains(&0) && sizes.contains(&2));

    fs::write(&dist, "diagram,probability\n[],0.4\n").unwrap();
    assert_eq!(tabdyn(&["gibbs-sample", "--dist", dist.to_str().unwrap()]).status.code(), Some(2));
    assert!(tabdyn(&["gibbs-sample", "--dist", dist.to_str().unwrap(), "--renormalize"]).status.success());
    assert_eq!(tabdyn(&["gibbs-sample", "--shape", "[1,2]"]).status.code(), Some(2));
}
