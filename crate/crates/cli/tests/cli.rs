use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn quotsing(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quotsing"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let o = quotsing(args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn dims(v: &Value) -> Vec<u64> {
    v["components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["dimension"].as_u64().unwrap())
        .collect()
}

#[test]
fn expand() {
    let v = json(&["expand", "18/5", "--json"]);
    assert_eq!(v["chain"], serde_json::json!([4, 3, 2]));
    assert_eq!(v["type"], "T(2,3,1)");
    let v = json(&["expand", "[2,2]", "--json"]);
    assert_eq!(v["fraction"], "3/2");
    assert_eq!(v["type"], "A_2");
    let v = json(&["expand", "12/7", "--json"]);
    assert_eq!(v["chain"], serde_json::json!([2, 4, 2]));
    assert!(stdout(&["expand", "18/5"]).contains("T(2,3,1)"));
}

#[test]
fn components() {
    assert_eq!(dims(&json(&["components", "* - 4 - *", "--json"])), [1, 2]);
    assert_eq!(dims(&json(&["components", "[4]", "--json"])), [1, 3]);
    assert_eq!(
        dims(&json(&["components", "4", "--ksb-pair", "--json"])),
        [1, 2]
    );
    assert_eq!(
        dims(&json(&["components", "[2,2; 3, 4, *]", "--json"])),
        [1, 2]
    );
    let v = json(&["components", "* - 4 - 3", "--d", "0..1", "--json"]);
    assert_eq!(v["components"][0]["d"], "3/5");
}

#[test]
fn other_commands() {
    assert_eq!(stdout(&["classify", "[2,2; 3, 4]"]).trim(), "Dih(11/4)");
    assert_eq!(stdout(&["cover", "--inverse", "12/7"]).trim(), "5/2");
    let v = json(&["cover", "5/2", "--json"]);
    assert_eq!((v["N"].as_str(), v["Q"].as_str()), (Some("12"), Some("7")));
    let v = json(&["pmods", "3 - 4", "--json"]);
    assert_eq!(v["pmods"].as_array().unwrap().len(), 2);
    let v = json(&["ksba", "* - 4 - 3", "--json"]);
    assert_eq!(v["components"][0]["d"], "3/5");
    assert!(stdout(&["verify", "* - 3 - 4 - *", "--d", "1/3"]).contains("ok"));
}

#[test]
fn exit_codes() {
    assert_eq!(quotsing(&["expand", "4/2"]).status.code(), Some(1));
    assert_eq!(quotsing(&["expand", "4x2"]).status.code(), Some(2));
    assert_eq!(
        quotsing(&["components", "* - 1 - *"]).status.code(),
        Some(2)
    );
    assert_eq!(quotsing(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        quotsing(&["cover", "--inverse", "8/3"]).status.code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("a.jsonl");
    let o = quotsing(&[
        "atlas",
        "--nmax",
        "5",
        "--mode",
        "def",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn deterministic() {
    let a = stdout(&["components", "[2,2; 3, 4, *]", "--json"]);
    assert_eq!(a, stdout(&["components", "[2,2; 3, 4, *]", "--json"]));
}

#[test]
fn atlas_rows_and_empty_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("def.jsonl");
    stdout(&[
        "atlas",
        "--nmax",
        "12",
        "--mode",
        "def",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let keys = [
        "component_index",
        "d",
        "dimension",
        "generic_fiber",
        "graph",
        "mode",
        "n",
        "q",
        "singularities",
    ];
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let mut k: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        k.sort();
        assert_eq!(k, keys);
    }
    let four: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| v["n"] == 4 && v["q"] == 1)
        .collect();
    assert_eq!(four.len(), 2);

    let empty = dir.path().join("empty.jsonl");
    stdout(&[
        "atlas",
        "--nmax",
        "1",
        "--mode",
        "def",
        "--out",
        empty.to_str().unwrap(),
    ]);
    assert_eq!(fs::read_to_string(&empty).unwrap(), "");
}

#[test]
fn atlas_ksba_b_finds_four_c() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.jsonl");
    stdout(&[
        "atlas",
        "--nmax",
        "23",
        "--mode",
        "ksba-b",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    for c in 2..=6i64 {
        // [4, c] = (4c - 1)/c
        let (n, q) = (4 * c - 1, c);
        let d = format!("{}/{}", 2 * c - 3, 2 * c - 1);
        let hit = text.lines().any(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            v["n"] == n && v["q"] == q && v["d"] == d.as_str()
        });
        assert!(hit, "[4,{c}]");
    }
}

#[test]
fn atlas_resume_matches_fresh_run() {
    let dir = tempfile::tempdir().unwrap();
    let fresh = dir.path().join("fresh.jsonl");
    let args = |p: &std::path::Path| {
        vec![
            "atlas".to_string(),
            "--nmax".into(),
            "25".into(),
            "--mode".into(),
            "ksb-pair-cyclic".into(),
            "--out".into(),
            p.to_str().unwrap().into(),
        ]
    };
    let run = |a: Vec<String>| stdout(&a.iter().map(String::as_str).collect::<Vec<_>>());
    run(args(&fresh));
    let full = fs::read_to_string(&fresh).unwrap();

    // Simulate a run interrupted after the rows of 13/5, with a partial row
    // written past the checkpoint.
    let resumed = dir.path().join("resumed.jsonl");
    let cut = full
        .lines()
        .map(|l| (l, serde_json::from_str::<Value>(l).unwrap()))
        .take_while(|(_, v)| (v["n"].as_u64().unwrap(), v["q"].as_u64().unwrap()) <= (13, 5))
        .map(|(l, _)| l.len() + 1)
        .sum::<usize>();
    let rows = full[..cut].lines().count();
    fs::write(&resumed, format!("{}{{\"graph\":", &full[..cut])).unwrap();
    let cp =
        serde_json::json!({"mode": "ksb-pair-cyclic", "n": 13, "q": 5, "rows": rows, "bytes": cut});
    fs::write(dir.path().join("resumed.jsonl.checkpoint"), cp.to_string()).unwrap();
    let mut a = args(&resumed);
    a.push("--resume".into());
    run(a);
    assert_eq!(fs::read_to_string(&resumed).unwrap(), full);
}

#[test]
fn atlas_def_respects_catalan_bound() {
    use quotsing::hjcf::{catalan_bound, hj_expand, multiplicity};
    use quotsing::Fraction;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("def.jsonl");
    stdout(&[
        "atlas",
        "--nmax",
        "20",
        "--mode",
        "def",
        "--out",
        out.to_str().unwrap(),
    ]);
    let mut counts = std::collections::BTreeMap::new();
    for l in fs::read_to_string(&out).unwrap().lines() {
        let v: Value = serde_json::from_str(l).unwrap();
        *counts
            .entry((v["n"].as_u64().unwrap(), v["q"].as_u64().unwrap()))
            .or_insert(0u64) += 1;
    }
    assert_eq!(counts.len(), 127);
    for ((n, q), k) in counts {
        let m = multiplicity(&hj_expand(&Fraction::new(n, q).unwrap()).unwrap());
        assert!(catalan_bound(m).unwrap() >= k.into(), "{n}/{q}");
    }
}
