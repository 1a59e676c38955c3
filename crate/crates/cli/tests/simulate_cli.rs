mod common;

use common::*;

#[test]
fn default_invocation_writes_expected_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    assert_ok(&run(&["simulate", "--out", s(&out)]));
    let rep = out.join("rep_001");
    let train = std::fs::read_to_string(rep.join("train.csv")).unwrap();
    let test = std::fs::read_to_string(rep.join("test.csv")).unwrap();
    assert_eq!(train.lines().count(), 101);
    assert_eq!(test.lines().count(), 51);
    let header: Vec<&str> = train.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 101);
    assert_eq!(header[0], "y");
    assert_eq!(header[100], "x100");
    assert!(!train.contains('\r'));
    for line in train.lines().skip(1) {
        assert!(line.starts_with("0,") || line.starts_with("1,"));
    }
    let truth = read_json(&rep.join("truth.json"));
    assert_schema("truth.schema.json", &truth);
    assert_eq!(truth["support"], serde_json::json!([1, 2, 3]));
    assert_eq!(truth["p"], 100);
    assert!(!out.join("rep_002").exists());
}

#[test]
fn larger_design_and_replicates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let args = ["simulate", "--p", "300", "--signal", "moderate", "--replicates", "2", "--out", s(&out)];
    assert_ok(&run(&args));
    for rep in ["rep_001", "rep_002"] {
        let truth = read_json(&out.join(rep).join("truth.json"));
        assert_eq!(truth["p"], 300);
        assert_eq!(truth["coefficients"][0], 2.0);
        assert_eq!(truth["coefficients"][3], 0.0);
    }
    let a = std::fs::read(out.join("rep_001/train.csv")).unwrap();
    let b = std::fs::read(out.join("rep_002/train.csv")).unwrap();
    assert_ne!(a, b, "replicates must use distinct seeds");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let base = ["simulate", "--p", "20", "--covariance", "ar", "--rho", "0.5", "--replicates", "3", "--seed", "9"];
    let with_out = |o: &std::path::Path| {
        let mut v: Vec<&str> = base.to_vec();
        v.extend(["--out", s(o)].iter().copied());
        v.into_iter().map(String::from).collect::<Vec<_>>()
    };
    let args_a = with_out(&a);
    let args_b = with_out(&b);
    assert_ok(&run(&args_a.iter().map(String::as_str).collect::<Vec<_>>()));
    let mut args_b: Vec<&str> = args_b.iter().map(String::as_str).collect();
    args_b.extend(["--threads", "3"]);
    assert_ok(&run(&args_b));
    for rep in ["rep_001", "rep_002", "rep_003"] {
        for f in ["train.csv", "test.csv", "truth.json"] {
            let x = std::fs::read(a.join(rep).join(f)).unwrap();
            let y = std::fs::read(b.join(rep).join(f)).unwrap();
            assert_eq!(x, y, "{rep}/{f}");
        }
    }
    assert_ok(&run(&["simulate", "--p", "20", "--seed", "10", "--out", s(&c)]));
    assert_ne!(
        std::fs::read(a.join("rep_001/train.csv")).unwrap(),
        std::fs::read(c.join("rep_001/train.csv")).unwrap()
    );
}

#[test]
fn unwritable_output_reports_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = write(dir.path(), "file", "not a directory");
    let target = blocker.join("sub");
    let out = run(&["simulate", "--p", "5", "--out", s(&target)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains(s(&target)), "{}", stderr(&out));
}

#[test]
fn invalid_designs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    for args in [
        vec!["simulate", "--p", "2", "--out", s(&out)],
        vec!["simulate", "--signal", "strong", "--out", s(&out)],
        vec!["simulate", "--covariance", "ar", "--rho", "1.5", "--out", s(&out)],
        vec!["simulate", "--support", "0", "--out", s(&out)],
        vec!["simulate", "--n", "1", "--out", s(&out)],
        vec!["simulate", "--p", "5"],
    ] {
        let o = run(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn null_support_is_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("null");
    assert_ok(&run(&["simulate", "--p", "4", "--support", "", "--out", s(&out)]));
    let truth = read_json(&out.join("rep_001/truth.json"));
    assert_eq!(truth["support"], serde_json::json!([]));
}
