//! End-to-end tests of the `crnapprox` binary: exit codes, emitted CSV
//! structure, and experiment determinism.

use std::io::BufReader;
use std::path::PathBuf;
use std::process::Command;

use crnapprox::trajectory::Trajectory;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crnapprox"))
}

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name)
}

#[test]
fn exit_codes() {
    // 0: success
    let out = bin().args(["analyze"]).arg(model("metabolism.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("deficiency: 0"));

    // 1: usage errors
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["simulate"])
        .arg(model("bistable.json"))
        .args(["--method", "nope", "--x0", "2,0.5", "--volume", "10", "--tmax", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["experiment", "metabolism", "reps=2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "unknown override is a usage error");

    // 2: model errors
    let out = bin().args(["analyze", "/nonexistent/model.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name":"x","species":["A"],"reactions":[{"reactants":{"B":1},"products":{},"rate_constant":1.0}]}"#).unwrap();
    let out = bin().arg("analyze").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "unknown species is a model error");

    // 3: runtime errors
    let out = bin()
        .args(["simulate"])
        .arg(model("bistable.json"))
        .args(["--method", "em", "--x0", "-1,0.5", "--volume", "10", "--tmax", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "negative state is a runtime error");
}

#[test]
fn emitted_csv_reparses_with_invariants() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["ssa", "ode", "em"] {
        let path = dir.path().join(format!("{method}.csv"));
        let out = bin()
            .args(["simulate"])
            .arg(model("bistable.json"))
            .args(["--method", method, "--x0", "2,0.5", "--volume", "50"])
            .args(["--tmax", "1", "--seed", "9", "--out"])
            .arg(&path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{method}: {:?}", out);
        let file = std::fs::File::open(&path).unwrap();
        let traj = Trajectory::from_csv(BufReader::new(file)).unwrap();
        traj.check_invariants().unwrap();
        assert_eq!(traj.species, vec!["X".to_string(), "Y".to_string()]);
        assert_eq!(traj.seed, 9);
        assert_eq!(traj.volume, 50.0);
        assert_eq!(traj.state(0), &[2.0, 0.5]);
    }
    // coupled CSV: shared grid, doubled columns
    let path = dir.path().join("coupled.csv");
    let out = bin()
        .args(["simulate"])
        .arg(model("bistable.json"))
        .args(["--method", "coupled", "--x0", "2,0.5", "--volume", "50"])
        .args(["--tmax", "0.5", "--seed", "9", "--delta", "0.01", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,X_ctmc,Y_ctmc,X_diff,Y_diff");
}

#[test]
fn experiments_are_deterministic_excluding_timings() {
    let run = |dir: &std::path::Path| {
        let out = bin()
            .args(["experiment", "metabolism", "tmax=0.5", "--out-dir"])
            .arg(dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{out:?}");
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(a.path());
    run(b.path());
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"metabolism_m0_ssa.csv".to_string()));
    for name in names {
        if name == "timings.csv" {
            continue;
        }
        let left = std::fs::read(a.path().join(&name)).unwrap();
        let right = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }

    // kmt-demo is deterministic including every file (no timing output)
    let c = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["experiment", "kmt-demo", "--out-dir"])
        .arg(c.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let u = std::fs::read_to_string(c.path().join("u_matrix.csv")).unwrap();
    assert!(u.lines().nth(1).unwrap().starts_with("0,-1,-1,-1,-1,-1,-1,2,2,0,-1,1,2,0,-1,-1"));
}
