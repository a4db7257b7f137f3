use std::process::{Command, Output};

fn kirchhoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kirchhoff"))
        .args(args)
        .output()
        .expect("run kirchhoff")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn solve_reports_unique_solution() {
    let out = kirchhoff(&["solve", "--p", "3", "--q", "3", "--n", "1", "--lambda", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["variant"], "unique");
    let t = v["amplitude"].as_f64().unwrap();
    let m = v["m"]["value"].as_f64().unwrap();
    assert!((t * m - 1.0).abs() < 1e-13);
    let order = v["residual"]["observed_order"].as_f64().unwrap();
    assert!((order - 2.0).abs() < 0.1, "{order}");
}

#[test]
fn solve_degenerate_cases_exit_zero() {
    let m = {
        let out = kirchhoff(&["constants", "--p", "3", "--index", "M:1:2"]);
        stdout(&out)
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(3)
            .unwrap()
            .to_owned()
    };
    let family = kirchhoff(&["solve", "--p", "3", "--q", "2", "--n", "1", "--lambda", &m]);
    assert_eq!(family.status.code(), Some(0));
    assert_eq!(json(&family)["variant"], "family");

    let none = kirchhoff(&[
        "solve", "--p", "3", "--q", "2", "--n", "1", "--lambda", "999",
    ]);
    assert_eq!(none.status.code(), Some(0));
    assert_eq!(json(&none)["variant"], "infeasible");
}

#[test]
fn invalid_input_exits_two() {
    for args in [
        &["solve", "--p", "1", "--q", "3", "--n", "1", "--lambda", "1"][..],
        &["solve", "--p", "3", "--q", "3", "--n", "0", "--lambda", "1"],
        &[
            "solve", "--p", "3", "--q", "3", "--n", "1", "--lambda", "-1",
        ],
        &[
            "curve",
            "--p",
            "3",
            "--q",
            "2",
            "--n",
            "1",
            "--alpha-range",
            "0.1:10:5",
        ],
        &[
            "curve",
            "--p",
            "3",
            "--q",
            "3",
            "--n",
            "1",
            "--alpha-range",
            "0:10:5",
        ],
        &["profile", "--p", "3", "--mesh", "1"],
        &["constants", "--index", "S:1:0"],
        &["constants", "--p", "3", "--index", "X:1:0"],
        &["verify", "--mesh", "8"],
        &["frobnicate"],
    ] {
        let out = kirchhoff(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn curve_has_constant_ratio_for_linear_exponent() {
    let out = kirchhoff(&[
        "curve",
        "--p",
        "3",
        "--q",
        "3",
        "--n",
        "1",
        "--alpha-range",
        "0.1:10:5",
    ]);
    let text = stdout(&out);
    assert!(text.starts_with("alpha,lambda\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0], 0.1);
    assert_eq!(rows[4][0], 10.0);
    for r in rows {
        assert!(r[1] > 0.0);
        assert!((r[1] / r[0] - 2.622057).abs() < 1e-6);
    }
}

#[test]
fn profile_of_ground_state() {
    let out = kirchhoff(&["profile", "--p", "3", "--mesh", "4"]);
    let text = stdout(&out);
    assert!(text.starts_with("x,u\n"));
    let rows = csv_rows(&text);
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(x, [0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(rows[0][1], 0.0);
    assert_eq!(rows[4][1], 0.0);
    assert!((rows[2][1] - 3.7081493546027438).abs() < 1e-12);
    assert_eq!(rows[1][1], rows[3][1]);
}

#[test]
fn solution_profile_is_scaled_ground_state() {
    let w = csv_rows(&stdout(&kirchhoff(&[
        "profile", "--p", "2", "--mesh", "16",
    ])));
    let u_out = kirchhoff(&[
        "profile", "--p", "2", "--q", "4", "--n", "2", "--lambda", "3", "--mesh", "16",
    ]);
    let u = csv_rows(&stdout(&u_out));
    let t = json(&kirchhoff(&[
        "solve", "--p", "2", "--q", "4", "--n", "2", "--lambda", "3",
    ]))["amplitude"]
        .as_f64()
        .unwrap();
    assert_eq!(u.len(), 17);
    for (a, b) in w.iter().zip(&u) {
        assert!((t * a[1] - b[1]).abs() <= 1e-14 * b[1].abs().max(1.0));
    }
}

#[test]
fn infeasible_profile_is_header_only() {
    let out = kirchhoff(&[
        "profile", "--p", "3", "--q", "2", "--n", "1", "--lambda", "999", "--mesh", "8",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "x,u\n");
    assert!(!out.stderr.is_empty());
}

#[test]
fn constants_table() {
    let out = kirchhoff(&[
        "constants",
        "--p",
        "3",
        "--index",
        "S:1:0",
        "--index",
        "L:3:3",
        "--index",
        "M:2:4",
    ]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("kind,k,d,value,method,delta"));
    let s10: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(s10[..3], ["S", "1", "0"]);
    assert_eq!(s10[3].parse::<f64>().unwrap(), 0.125);
    assert_eq!(s10[4], "closed_form");
    let l33: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!((l33[3].parse::<f64>().unwrap() - 0.5).abs() < 1e-10);
    let m24: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(m24[5].parse::<f64>().unwrap() <= 1e-8);
}

#[test]
fn json_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.json");
    let out = kirchhoff(&[
        "curve",
        "--p",
        "2",
        "--q",
        "4",
        "--n",
        "2",
        "--alpha-range",
        "1:4:3",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["exponent"], 3.0);
    assert_eq!(v["formula"], "general");
    assert_eq!(v["samples"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_report_structure() {
    let out = kirchhoff(&["verify"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["passed"], true);
    let checks = v["checks"].as_array().unwrap();
    let adjudication: Vec<_> = checks
        .iter()
        .filter(|c| c["name"] == "eq_1_21_vs_4_20")
        .collect();
    assert_eq!(adjudication.len(), 3);
    for c in adjudication {
        assert!(c["verdict"].is_string());
        assert!(c["values"]["delta_l_p2_form"].as_f64().unwrap() <= 1e-8);
        assert!(c["values"]["delta_l_p1_form"].as_f64().unwrap() > 1e-3);
    }
    for c in checks.iter().filter(|c| c["name"] == "n1_dual_formula") {
        assert!(c["delta"].as_f64().unwrap() <= 1e-10);
    }
    for c in checks {
        for key in ["name", "anchor", "values", "tolerance", "passed"] {
            assert!(!c[key].is_null(), "{key} missing in {c}");
        }
    }
}
