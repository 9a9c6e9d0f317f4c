use std::process::Command;

fn orbitkit(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_orbitkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &std::process::Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn coords_reference_points() {
    let doc = stdout_json(&orbitkit(&["coords", "0.25", "0.25", "0.25", "0.25"]));
    assert_eq!(doc["x"].as_f64().unwrap(), 0.0);
    assert_eq!(doc["z"].as_f64().unwrap(), 0.0);
    assert_eq!(doc["chamber_ok"], true);
    assert_eq!(doc["manifest"]["command"], "coords");

    let doc = stdout_json(&orbitkit(&["coords", "1", "0", "0", "0"]));
    assert!((doc["x"].as_f64().unwrap() - 0.8164966).abs() < 1e-7);
    assert!((doc["y"].as_f64().unwrap() - 0.4714045).abs() < 1e-7);
    assert!((doc["z"].as_f64().unwrap() - 0.3333333).abs() < 1e-7);

    let doc = stdout_json(&orbitkit(&["coords", "0.5", "0.5", "0", "0"]));
    assert!(doc["x"].as_f64().unwrap().abs() < 1e-12);
    assert!((doc["y"].as_f64().unwrap() - 0.4714045).abs() < 1e-7);
}

#[test]
fn coords_rejects_bad_spectrum() {
    let out = orbitkit(&["coords", "0.9", "0.9", "0", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn product_test_examples() {
    let doc = stdout_json(&orbitkit(&[
        "product-test", "0.42", "0.28", "0.18", "0.12", "--dims", "2,2",
    ]));
    assert_eq!(doc["factorable"], true);
    let m = doc["marginals"].as_array().unwrap();
    assert!((m[0][0].as_f64().unwrap() - 0.7).abs() < 1e-9);
    assert!((m[1][0].as_f64().unwrap() - 0.6).abs() < 1e-9);

    let doc = stdout_json(&orbitkit(&[
        "product-test", "0.4", "0.3", "0.2", "0.1", "--dims", "2,2",
    ]));
    assert_eq!(doc["factorable"], false);

    let doc = stdout_json(&orbitkit(&[
        "product-test", "1", "0", "0", "0", "--dims", "2,2",
    ]));
    assert_eq!(doc["factorable"], true);
}

#[test]
fn product_test_capacity_exit_code() {
    let mut args = vec!["product-test".to_string()];
    for _ in 0..16 {
        args.push("0.0625".to_string());
    }
    args.push("--dims".into());
    args.push("4,4".into());
    let refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let out = orbitkit(&refs);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn surface_product_deterministic_and_verifiable() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("s1.csv");
    let p2 = dir.path().join("s2.csv");
    for p in [&p1, &p2] {
        let out = orbitkit(&[
            "surface", "--kind", "product", "--grid", "21,21", "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let b1 = std::fs::read(&p1).unwrap();
    let b2 = std::fs::read(&p2).unwrap();
    assert_eq!(b1, b2, "re-runs must be byte-identical");

    let text = String::from_utf8(b1).unwrap();
    assert!(text.starts_with("# {"));
    assert!(text.lines().nth(1).unwrap().starts_with("x,y,z,present"));
    assert_eq!(text.lines().count(), 2 + 21 * 21);
    // Grid contains the origin with z = 0.
    assert!(text.lines().any(|l| l.starts_with("0,0,0,1")));

    let doc = stdout_json(&orbitkit(&[
        "verify-surface", "--in", p1.to_str().unwrap(),
    ]));
    assert_eq!(doc["ok"], true);
    assert!(doc["max_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn surface_unwritable_path_exit_code() {
    let out = orbitkit(&[
        "surface", "--kind", "product", "--grid", "5,5", "--out",
        "/nonexistent-dir/surface.csv",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn classicalize_bell_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bell.json");
    std::fs::write(
        &path,
        r#"{"dims":[2,2],
            "re":[[0.5,0,0,0.5],[0,0,0,0],[0,0,0,0],[0.5,0,0,0.5]],
            "im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#,
    )
    .unwrap();
    let doc = stdout_json(&orbitkit(&["classicalize", "--state", path.to_str().unwrap()]));
    // Spectrum (1,0,0,0) forces rho_cl = |00><00|.
    let re = doc["rho_cl"]["re"].as_array().unwrap();
    assert!((re[0][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(re[1][1].as_f64().unwrap().abs() < 1e-9);
    assert!(doc["spectrum_check"].as_f64().unwrap() < 1e-9);
    assert!((doc["weights"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn classicalize_random_deterministic() {
    let out1 = orbitkit(&["classicalize", "--random", "2,3", "--seed", "7", "--rotate-local"]);
    let out2 = orbitkit(&["classicalize", "--random", "2,3", "--seed", "7", "--rotate-local"]);
    assert_eq!(out1.stdout, out2.stdout);
    let doc = stdout_json(&out1);
    assert!(doc["spectrum_check"].as_f64().unwrap() < 1e-9);
}

#[test]
fn classicalize_malformed_state_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"dims\":[2,2]}").unwrap();
    let out = orbitkit(&["classicalize", "--state", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn max_negativity_reference_spectra() {
    let doc = stdout_json(&orbitkit(&[
        "max-negativity", "0.25", "0.25", "0.25", "0.25", "--restarts", "2",
    ]));
    assert_eq!(doc["best_negativity"].as_f64().unwrap(), 0.0);

    let doc = stdout_json(&orbitkit(&[
        "max-negativity", "1", "0", "0", "0", "--restarts", "8", "--seed", "3",
    ]));
    assert!((doc["best_negativity"].as_f64().unwrap() - 0.5).abs() < 1e-4);
}

#[test]
fn dims_reports() {
    let doc = stdout_json(&orbitkit(&["dims", "--dims", "2,3"]));
    assert_eq!(doc["product_orbit_dim"], 3);
    assert_eq!(doc["ambient_dim"], 5);
    assert!(doc.get("estimated_rank").is_none());

    let doc = stdout_json(&orbitkit(&["dims", "--dims", "2,2,2", "--estimate"]));
    assert_eq!(doc["product_orbit_dim"], 3);
    assert_eq!(doc["ambient_dim"], 7);
    assert_eq!(doc["estimated_rank"], 3);
}
