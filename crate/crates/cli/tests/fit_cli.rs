mod common;

use common::*;

#[test]
fn fit_selects_the_planted_support() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &logistic_csv(100, 20, &[2.0, 2.0, 2.0], 1));
    let sel = dir.path().join("sel.json");
    assert_ok(&run(&["fit", "--data", s(&data), "--out", s(&sel), "--iterations", "30"]));
    let v = read_json(&sel);
    assert_schema("selection.schema.json", &v);
    assert_eq!(v["selected_indices"], serde_json::json!([1, 2, 3]));
    assert_eq!(v["converged"], true);
    assert_eq!(v["p"], 20);
    assert_eq!(v["trace"]["states_visited"], 30);
    assert!(v["trace"].get("visited").is_none());
    assert!(has_null_number(&v, &["intercept"]).is_none());
}

#[test]
fn full_trace_lists_every_state() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &logistic_csv(60, 8, &[2.0, -2.0], 2));
    let out = run(&["fit", "--data", s(&data), "--iterations", "7", "--full-trace", "--algorithm", "sss"]);
    assert_ok(&out);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_schema("selection.schema.json", &v);
    let visited = v["trace"]["visited"].as_array().unwrap();
    assert_eq!(visited.len(), 7);
    assert_eq!(visited.last().unwrap()["model"], v["trace"]["final_model"]);
    let best = v["log_posterior"].as_f64().unwrap();
    assert!(visited.iter().all(|s| s["log_posterior"].as_f64().unwrap() <= best));
}

#[test]
fn split_inputs_match_combined_input() {
    let dir = tempfile::tempdir().unwrap();
    let csv = logistic_csv(50, 6, &[2.0, 0.0, 2.0], 3);
    let combined = write(dir.path(), "d.csv", &csv);
    let mut design = String::new();
    let mut response = String::from("y\n");
    for (i, line) in csv.lines().enumerate() {
        let (y, rest) = line.split_once(',').unwrap();
        design.push_str(rest);
        design.push('\n');
        if i > 0 {
            response.push_str(y);
            response.push('\n');
        }
    }
    let design = write(dir.path(), "x.csv", &design);
    let response = write(dir.path(), "y.csv", &response);
    let a = run(&["fit", "--data", s(&combined), "--iterations", "10"]);
    let b = run(&["fit", "--design", s(&design), "--response", s(&response), "--iterations", "10"]);
    assert_ok(&a);
    assert_ok(&b);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn malformed_inputs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad_cell.csv", "y,x1,x2\n1,0.5,1\n0,0.1,oops\n", vec!["row 2", "column x2"]),
        ("non_binary.csv", "y,x1\n1,0.5\n0.5,1\n0,2\n", vec!["row 2", "column y"]),
        ("ragged.csv", "y,x1\n1,0.5\n0,1,3\n", vec!["row 2"]),
        ("no_y.csv", "x1,x2\n1,2\n3,4\n", vec!["missing column y"]),
        ("gap.csv", "y,x1,x3\n1,1,2\n0,2,1\n", vec!["missing column x2"]),
        ("constant.csv", "y,x1\n1,1\n0,1\n1,1\n", vec!["x1"]),
        ("nan.csv", "y,x1\n1,NaN\n0,1\n", vec!["row 1", "column x1"]),
    ];
    for (name, body, needles) in cases {
        let path = write(dir.path(), name, body);
        let out = run(&["fit", "--data", s(&path)]);
        assert_eq!(code(&out), 2, "{name}: {}", stderr(&out));
        for needle in needles {
            assert!(stderr(&out).contains(needle), "{name}: {}", stderr(&out));
        }
        assert!(out.stdout.is_empty());
    }
    let missing = dir.path().join("nope.csv");
    let out = run(&["fit", "--data", s(&missing)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nope.csv"));
    assert_eq!(code(&run(&["fit"])), 2);
}

#[test]
fn mismatched_design_and_response_rows() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "x1\n1\n2\n3\n");
    let y = write(dir.path(), "y.csv", "y\n1\n0\n");
    let out = run(&["fit", "--design", s(&x), "--response", s(&y)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("rows"));
}

#[test]
fn invalid_settings_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &logistic_csv(40, 5, &[1.0], 4));
    for extra in [
        vec!["--lambda2", "-1"],
        vec!["--max-model-size", "9"],
        vec!["--algorithm", "mcmc"],
        vec!["--initial", "7"],
        vec!["--iterations", "0"],
        vec!["--max-iter", "0"],
        vec!["--r", "0"],
        vec!["--threads", "many"],
    ] {
        let mut args = vec!["fit", "--data", s(&data)];
        args.extend(&extra);
        let out = run(&args);
        assert_eq!(code(&out), 2, "{extra:?}: {}", stderr(&out));
    }
}

#[test]
fn fixed_and_empty_initial_models() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &logistic_csv(60, 5, &[0.0], 5));
    for init in ["empty", "2,4"] {
        let out = run(&["fit", "--data", s(&data), "--initial", init, "--iterations", "5", "--full-trace"]);
        assert_ok(&out);
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        let first = &v["trace"]["visited"][0]["model"];
        let want = if init == "empty" { serde_json::json!([]) } else { serde_json::json!([2, 4]) };
        assert_eq!(*first, want);
    }
}

#[test]
fn config_file_precedence_and_print_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &logistic_csv(64, 8, &[1.0], 6));
    let cfg = write(
        dir.path(),
        "c.toml",
        "[fit]\niterations = 4\nseed = 11\nlambda2 = 7.5\nalgorithm = \"sss\"\n",
    );
    let out = run(&["--config", s(&cfg), "--print-config", "fit", "--data", s(&data), "--seed", "3"]);
    assert_ok(&out);
    let text = stdout(&out);
    let parsed: toml::Table = toml::from_str(&text).unwrap();
    let fit = parsed["fit"].as_table().unwrap();
    assert_eq!(fit["iterations"].as_integer(), Some(4)); // file
    assert_eq!(fit["seed"].as_integer(), Some(3)); // flag over file
    assert_eq!(fit["lambda2"].as_float(), Some(7.5));
    assert_eq!(fit["k1"].as_integer(), Some(10)); // default
    // Data-dependent default: min(p, 4⌈√(n/ln p)⌉) = min(8, 4·⌈√(64/ln 8)⌉) = 8.
    assert_eq!(fit["max-model-size"].as_integer(), Some(8));
    assert!(!fit.contains_key("threads"));

    // The printed configuration reproduces the run.
    let resolved = write(dir.path(), "resolved.toml", &text);
    let a = run(&["--config", s(&cfg), "fit", "--data", s(&data), "--seed", "3"]);
    let b = run(&["--config", s(&resolved), "fit"]);
    assert_ok(&a);
    assert_ok(&b);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["config"]["iterations"], 4);
    assert_eq!(v["config"]["seed"], 3);
    assert_eq!(v["config"]["algorithm"], "sss");

    let bad = write(dir.path(), "bad.toml", "[fit]\nlamda2 = 1.0\n");
    let out = run(&["--config", s(&bad), "fit", "--data", s(&data)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("lamda2"), "{}", stderr(&out));
}

#[test]
fn default_lambda2_follows_the_data_shape() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &logistic_csv(100, 12, &[1.0], 7));
    let out = run(&["--print-config", "fit", "--data", s(&data)]);
    assert_ok(&out);
    let parsed: toml::Table = toml::from_str(&stdout(&out)).unwrap();
    let got = parsed["fit"]["lambda2"].as_float().unwrap();
    let want = 100.0 * 100f64.powf(-1.0 / 3.0) * 12f64.powf(2.001 * 2.0 / 3.0);
    assert!((got - want).abs() < 1e-9 * want);
}

#[test]
fn thread_environment_variable_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &logistic_csv(50, 10, &[2.0, 2.0], 8));
    let args = ["fit", "--data", s(&data), "--iterations", "10", "--algorithm", "sss"];
    let base = run(&args);
    assert_ok(&base);
    let env = run_env(&args, &[("NLP_SELECT_THREADS", "2")]);
    assert_ok(&env);
    assert_eq!(base.stdout, env.stdout);
    let bad = run_env(&args, &[("NLP_SELECT_THREADS", "x")]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn intercept_is_reported_when_requested() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", &logistic_csv(80, 4, &[2.0], 9));
    let out = run(&["fit", "--data", s(&data), "--intercept", "--iterations", "5"]);
    assert_ok(&out);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["intercept"].is_number());
    assert_schema("selection.schema.json", &v);
}
