use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn aaa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aaa")).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn scenarios() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios"))
}

#[test]
fn calibrate_prints_utility_parameters() {
    let o = aaa(&["calibrate", "--pT", "0.3", "--q1", "0.45", "--q2", "0.85", "--U", "0.3"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    for (k, want) in [("eta0", 0.396), ("eta1", 0.385), ("eta2", 1.280), ("eta3", -0.385)] {
        assert!((v[k].as_f64().unwrap() - want).abs() < 1e-3, "{k}: {}", v[k]);
    }
    let bad = aaa(&["calibrate", "--pT", "1.5", "--q1", "0.45", "--q2", "0.85", "--U", "0.3"]);
    assert!(!bad.status.success());
}

#[test]
fn replay_rejects_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.jsonl");
    fs::write(&p, "").unwrap();
    let o = aaa(&["replay", "--log", p.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
}

#[test]
fn simulated_trial_replays_and_tampering_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let design = dir.path().join("design.json");
    let mut d: Value = serde_json::from_str(&fs::read_to_string(scenarios().join("design.json")).unwrap()).unwrap();
    d["N"] = Value::from(15);
    fs::write(&design, d.to_string()).unwrap();
    let (out, records) = (dir.path().join("oc.json"), dir.path().join("recs.jsonl"));
    let o = aaa(&[
        "sim",
        "--scenario",
        scenarios().join("s6_linear.json").to_str().unwrap(),
        "--design",
        design.to_str().unwrap(),
        "--reps",
        "2",
        "--seed",
        "3",
        "--threads",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--records",
        records.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Selection"));
    let oc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(oc["replicates"], 2);

    let rec: Value = serde_json::from_str(fs::read_to_string(&records).unwrap().lines().nth(1).unwrap()).unwrap();
    let log = dir.path().join("trial.jsonl");
    let o = aaa(&["replay", "--log", records.to_str().unwrap(), "--record", "1", "--export", log.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    assert_eq!(report["mismatches"].as_array().unwrap().len(), 0);
    assert_eq!(report["state"]["selection"], rec["selection"]);
    assert_eq!(report["state"]["terminatedEarly"], rec["earlyTermination"]);

    // the exported event log replays the same way
    let o = aaa(&["replay", "--log", log.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout_json(&o)["state"], report["state"]);

    let text = fs::read_to_string(&log).unwrap();
    let tampered: Vec<String> = text
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            if v["type"] == "decisionIssued" && v["seq"].as_u64().unwrap() < 12 {
                v["seed"] = Value::from(v["seed"].as_u64().unwrap() ^ 1);
            }
            v.to_string()
        })
        .collect();
    fs::write(&log, tampered.join("\n")).unwrap();
    let o = aaa(&["replay", "--log", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stdout_json(&o)["mismatches"].as_array().unwrap().is_empty());

    let gap: Vec<&str> = text.lines().enumerate().filter(|(i, _)| *i != 2).map(|(_, l)| l).collect();
    fs::write(&log, gap.join("\n")).unwrap();
    let o = aaa(&["replay", "--log", log.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seq"));
}
