use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ultragh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ultragh")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["-o", path.to_str().unwrap()]);
    let o = ultragh(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generated_ring_validates() {
    let dir = TempDir::new().unwrap();
    let z4 = gen(dir.path(), "Z4.ums", &["zp", "--p", "2", "--depth", "2"]);
    let o = ultragh(&["validate", s(&z4)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("points: 4"));
}

#[test]
fn spectra_of_z4() {
    let dir = TempDir::new().unwrap();
    let z4 = gen(dir.path(), "Z4.ums", &["zp", "--p", "2", "--depth", "2"]);
    assert_eq!(stdout(&ultragh(&["spectra", s(&z4)])).trim(), "1/2 1");
    let json: serde_json::Value = serde_json::from_str(&stdout(&ultragh(&["--json", "spectra", s(&z4)]))).unwrap();
    assert_eq!(json, serde_json::json!(["1/2", "1/1"]));
}

#[test]
fn dhat_report_for_three_points_against_extra_point_space() {
    let dir = TempDir::new().unwrap();
    let x3 = gen(dir.path(), "X3.ums", &["zp", "--p", "3", "--depth", "1"]);
    let yd = gen(dir.path(), "YDelta.ums", &["zqdelta", "--p", "3", "--q", "2", "--depth", "1"]);
    let o = ultragh(&["dhat", s(&x3), s(&yd), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["dhat"], "3/2");
    assert_eq!(r["ratio"], "6/1");
    assert_eq!(r["classical_dgh"], "1/4");
    assert_eq!(r["agreement"], true);
    for key in [
        "dhat_attained",
        "methods",
        "classical_bounds",
        "isometric",
        "spectra_lower_bound",
        "spectra_gap",
        "diameter_upper_bound",
        "witnesses",
        "inexact",
    ] {
        assert!(r.get(key).is_some(), "missing {key}");
    }

    let human = stdout(&ultragh(&["dhat", s(&x3), s(&yd)]));
    assert!(human.contains("dhat: 3/2\n"));
    assert!(human.contains("ratio: 6\n"));
}

#[test]
fn every_method_agrees_when_forced() {
    let dir = TempDir::new().unwrap();
    let a = gen(dir.path(), "a.ums", &["zp", "--p", "2", "--depth", "1"]);
    let b = gen(dir.path(), "b.ums", &["zp", "--p", "2", "--depth", "2"]);
    for method in ["corr", "iso", "approx", "all"] {
        let o = ultragh(&["dhat", s(&a), s(&b), "--method", method]);
        assert_eq!(o.status.code(), Some(0), "{method}");
        assert!(stdout(&o).starts_with("dhat: 1/2\n"), "{method}: {}", stdout(&o));
    }
}

#[test]
fn dgh_ratio_and_bounds() {
    let dir = TempDir::new().unwrap();
    let x2 = gen(dir.path(), "X2.ums", &["zp", "--p", "2", "--depth", "1"]);
    let x3 = gen(dir.path(), "X3.ums", &["zp", "--p", "3", "--depth", "1"]);
    assert!(stdout(&ultragh(&["dgh", s(&x2), s(&x3)])).starts_with("classical_dgh: 1/2\n"));
    // equal diameters: both distances are 1 and 1/2
    assert!(stdout(&ultragh(&["ratio", s(&x2), s(&x3)])).starts_with("ratio: 2\n"));
    let o = stdout(&ultragh(&["ratio", s(&x3), s(&x3)]));
    assert!(o.contains("ratio: none") && o.contains("isometric: true"));
    let lb = stdout(&ultragh(&["lowerbound", s(&x2), s(&x3)]));
    assert!(lb.contains("spectra_lower_bound: 0\n") && lb.contains("diameter_upper_bound: 1\n"));
}

#[test]
fn net_split_and_chi() {
    let dir = TempDir::new().unwrap();
    let z4 = gen(dir.path(), "Z4.ums", &["zp", "--p", "2", "--depth", "2"]);
    let z8 = gen(dir.path(), "Z8.ums", &["zp", "--p", "2", "--depth", "3"]);
    let x2 = gen(dir.path(), "X2.ums", &["zp", "--p", "2", "--depth", "1"]);
    assert!(stdout(&ultragh(&["net", s(&z4), "--eps", "1"])).starts_with("size: 2\n"));

    let split = stdout(&ultragh(&["split", s(&z8), s(&x2), "--eps", "3/4"]));
    assert!(split.starts_with("found: true\n"), "{split}");
    assert!(split.contains("class 0: 0 2 4 6\n") && split.contains("class 1: 1 3 5 7\n"));

    let pairs = dir.path().join("pairs.txt");
    std::fs::write(&pairs, "0 0\n1 1\n2 0\n3 1\n").unwrap();
    let chi = stdout(&ultragh(&["chi", s(&z4), s(&x2), "--pairs", s(&pairs)]));
    assert!(chi.starts_with("strong: true\ndistortion: 1/2\n"), "{chi}");
    assert!(chi.contains("inf: 1\nsup: 1\n"), "{chi}");
}

#[test]
fn manifests_drive_converge_and_sutb() {
    let dir = TempDir::new().unwrap();
    gen(dir.path(), "X2.ums", &["zp", "--p", "2", "--depth", "1"]);
    for d in 2..=4 {
        gen(dir.path(), &format!("Z{d}.ums"), &["zp", "--p", "2", "--depth", &d.to_string()]);
    }
    let manifest = dir.path().join("seq.txt");
    std::fs::write(&manifest, "target X2.ums\n# growing rings\nZ2.ums\nZ3.ums\nZ4.ums\n").unwrap();
    let o = stdout(&ultragh(&["converge", s(&manifest), "--eps", "3/4"]));
    assert!(o.contains("dhat_to_target: 1/2 1/2 1/2\n"), "{o}");
    assert!(o.contains("split_found: true true true\n"), "{o}");

    let o = ultragh(&["sutb", s(&manifest), "--eps", "1", "--max-net", "2", "--pool", "1/8,1/4,1/2,1"]);
    assert!(stdout(&o).starts_with("holds: true\n"), "{}", stdout(&o));
    let o = ultragh(&["sutb", s(&manifest), "--eps", "1/2", "--max-net", "2", "--pool", "1/8,1/4,1/2,1"]);
    assert!(stdout(&o).starts_with("holds: false\n"), "{}", stdout(&o));
}

#[test]
fn random_generation_is_seeded() {
    let a = stdout(&ultragh(&["gen", "random", "--n", "7", "--seed", "11", "--pool", "1/4,1/2,1,2"]));
    let b = stdout(&ultragh(&["gen", "random", "--n", "7", "--seed", "11", "--pool", "1/4,1/2,1,2"]));
    assert_eq!(a, b);
    assert!(a.starts_with("ums 1\npoints 7\n"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.ums");
    std::fs::write(&bad, "ums 1\npoints 3\nlabels a b c\nd 0 1 1/1\nd 0 2 1/2\nd 1 2 1/4\n").unwrap();
    let o = ultragh(&["validate", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));

    assert_eq!(ultragh(&["gen", "zp", "--p", "4"]).status.code(), Some(2));
    assert_eq!(ultragh(&["validate", s(&dir.path().join("missing.ums"))]).status.code(), Some(1));

    let z8 = gen(dir.path(), "Z8.ums", &["zp", "--p", "2", "--depth", "3"]);
    let o = ultragh(&["dhat", s(&z8), s(&z8), "--budget", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[0, 1]"));
}
