use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

use permspread::gen::{random_t_intersecting, FamilyShape};
use permspread::peeling::{check_simplified, peel};
use permspread::{Family, FamilyFile, PartialPermutation};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permspread"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn scratch(name: &str, text: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn ak_size_exact_value() {
    let out = run(&["ak-size", "4", "1", "1", "--exact"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["value"], "4");
}

#[test]
fn max_family_t1_n3() {
    let out = run(&["max-family", "3", "1"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["max_size"], "2");
    assert_eq!(v["equal"], true);
    assert_eq!(v["optimal"], true);
}

#[test]
fn simplify_drops_the_superset() {
    let a = PartialPermutation::from_pairs(2, &[(1, 1)]).unwrap();
    let ab = PartialPermutation::from_pairs(2, &[(1, 1), (2, 2)]).unwrap();
    let f = Family::new(2, vec![a, ab]).unwrap();
    let path = scratch("superset.json", &f.to_json(Some(1)));
    let out = run(&["simplify", "--in", &path]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["sets"], serde_json::json!([[[1, 1]]]));
    assert_eq!(v["edits"].as_array().unwrap().len(), 1);
}

#[test]
fn peel_layers_round_trip() {
    let shape = FamilyShape {
        n: 6,
        t: 2,
        extra: 3,
        bases: 3,
        members: 12,
        attempts: 400,
    };
    let f = random_t_intersecting(shape, 3);
    let path = scratch("peel.json", &f.to_json(Some(2)));
    let out = run(&["peel", "--in", &path, "--q", "5"]);
    assert!(out.status.success());
    let v = json(&out);
    for layer in v["layers"].as_array().unwrap() {
        let file: FamilyFile = serde_json::from_value(layer["t_layer"].clone()).unwrap();
        let (t_layer, t) = file.into_family().unwrap();
        let t = t.unwrap();
        if t_layer.is_empty() {
            continue;
        }
        assert_eq!(check_simplified(&t_layer, t), None);
        let k = layer["k"].as_u64().unwrap() as usize;
        let again = peel(&t_layer, t, t + k).unwrap();
        assert!(again.t_layer(again.top()).same_set(&t_layer));
    }
}

#[test]
fn bounds_report_csv_has_one_row_per_k() {
    let out = run(&["bounds-report", "9", "3", "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
    assert!(text.starts_with("k,ak_exact"));
}

#[test]
fn validation_errors_exit_3() {
    let bad = scratch("bad.json", r#"{"n": 3, "t": 1, "sets": [[[1,1]], [[1,2],[2,2]]]}"#);
    let out = run(&["simplify", "--in", &bad]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains('1'));

    let out = run(&["ak-size", "4", "3", "2"]);
    assert_eq!(out.status.code(), Some(3));

    let missing = run(&["peel", "--in", "/nonexistent/family.json"]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn budget_exhaustion_exits_2() {
    let out = run(&["max-family", "6", "1", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["optimal"], false);
}

#[test]
fn timing_is_opt_in() {
    let plain = json(&run(&["ak-size", "5", "1", "1"]));
    assert!(plain.get("seconds").is_none());
    let timed = json(&run(&["ak-size", "5", "1", "1", "--timing"]));
    assert!(timed["seconds"].is_number());
}
