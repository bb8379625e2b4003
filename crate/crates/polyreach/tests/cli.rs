//! End-to-end tests of the command-line interface: exit codes, file
//! outputs, golden behaviors of the bundled example model, and the
//! serialization round trip.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use polyreach::jsonio;
use polyreach::model::load_model;

fn run(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(common::bin_path());
    cmd.current_dir(dir).args(args).env_remove("NNREACH_PIECE_CAP");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn polyreach")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn model_arg() -> String {
    common::model_path().display().to_string()
}

#[test]
fn reach_horizon_5_hull_writes_six_steps_of_one_polytope() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "reach",
            &model_arg(),
            "--horizon",
            "5",
            "--mode",
            "hull",
            "--out",
            "result.json",
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = jsonio::result_from_json(
        &std::fs::read_to_string(dir.path().join("result.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(doc.per_step.len(), 6);
    for step in &doc.per_step {
        assert_eq!(step.num_parts(), 1);
    }
    assert_eq!(doc.piece_counts, vec![1; 6]);
    assert_eq!(doc.sigma0, 1);
}

#[test]
fn reach_horizon_zero_returns_initial_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "reach",
            &model_arg(),
            "--horizon",
            "0",
            "--mode",
            "exact",
            "--out",
            "r0.json",
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    let doc =
        jsonio::result_from_json(&std::fs::read_to_string(dir.path().join("r0.json")).unwrap())
            .unwrap();
    assert_eq!(doc.per_step.len(), 1);
    let part = &doc.per_step[0].parts()[0];
    assert!(part.contains_point(&[1.0, 1.0], 1e-9));
    assert!(!part.contains_point(&[1.1, 0.0], 1e-9));
}

#[test]
fn exact_reach_with_tiny_piece_cap_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "reach",
            &model_arg(),
            "--horizon",
            "10",
            "--mode",
            "exact",
            "--out",
            "r.json",
        ],
        &[("NNREACH_PIECE_CAP", "10")],
    );
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("hull mode"), "{stderr}");
}

#[test]
fn verify_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let safe = run(
        dir.path(),
        &[
            "verify",
            &model_arg(),
            "--horizon",
            "5",
            "--out",
            "v5.json",
        ],
        &[],
    );
    assert_eq!(code(&safe), 0, "{}", String::from_utf8_lossy(&safe.stderr));
    let uncertain = run(
        dir.path(),
        &[
            "verify",
            &model_arg(),
            "--horizon",
            "10",
            "--semantics",
            "decoupled",
            "--out",
            "v10.json",
        ],
        &[],
    );
    assert_eq!(code(&uncertain), 1);
    let verdict =
        jsonio::verdict_from_json(&std::fs::read_to_string(dir.path().join("v10.json")).unwrap())
            .unwrap();
    assert!(verdict.first_violation_step.is_some());
    assert!(verdict.witness.is_some());
}

#[test]
fn verify_without_unsafe_set_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(common::model_path()).unwrap()).unwrap();
    model.as_object_mut().unwrap().remove("unsafe");
    let path = dir.path().join("no_unsafe.json");
    std::fs::write(&path, model.to_string()).unwrap();
    let out = run(
        dir.path(),
        &[
            "verify",
            path.to_str().unwrap(),
            "--horizon",
            "3",
            "--out",
            "v.json",
        ],
        &[],
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsafe"));
}

#[test]
fn malformed_models_name_the_offending_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(common::model_path()).unwrap()).unwrap();
    model["system"]["modes"][0]["B"] =
        serde_json::json!([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
    let path = dir.path().join("bad_b.json");
    std::fs::write(&path, model.to_string()).unwrap();
    let out = run(
        dir.path(),
        &["reach", path.to_str().unwrap(), "--horizon", "1", "--out", "r.json"],
        &[],
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("modes[0].B"));

    let mut model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(common::model_path()).unwrap()).unwrap();
    model["system"]["modes"] = serde_json::json!([]);
    let path = dir.path().join("no_modes.json");
    std::fs::write(&path, model.to_string()).unwrap();
    let out = run(
        dir.path(),
        &["reach", path.to_str().unwrap(), "--horizon", "1", "--out", "r.json"],
        &[],
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("N >= 1 required"));
}

#[test]
fn simulate_writes_csv_and_reports_containment() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "simulate",
            &model_arg(),
            "--horizon",
            "4",
            "--grid",
            "0.25",
            "--out",
            "traj.csv",
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("0 misses"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    assert!(csv.starts_with("traj_id,step,x1,x2\n"));
    let trajs = jsonio::trajectories_from_csv(&csv).unwrap();
    assert_eq!(trajs.len(), 81, "9x9 inclusive grid at 0.25");
    assert!(trajs.iter().all(|t| t.states.len() == 5));
}

#[test]
fn simulate_centered_grid_gives_cell_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "simulate",
            &model_arg(),
            "--horizon",
            "0",
            "--grid",
            "0.1",
            "--grid-style",
            "centered",
            "--out",
            "t.csv",
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    let trajs = jsonio::trajectories_from_csv(
        &std::fs::read_to_string(dir.path().join("t.csv")).unwrap(),
    )
    .unwrap();
    assert_eq!(trajs.len(), 400, "20x20 cell-centered grid");
}

#[test]
fn plot_renders_svg_and_rejects_non_2d() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "verify",
            &model_arg(),
            "--horizon",
            "5",
            "--out",
            "v.json",
            "--result-out",
            "r.json",
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    let out = run(
        dir.path(),
        &[
            "simulate",
            &model_arg(),
            "--horizon",
            "5",
            "--grid",
            "0.5",
            "--out",
            "t.csv",
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    let out = run(
        dir.path(),
        &["plot", "r.json", "--traj", "t.csv", "--svg", "fig.svg"],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("fig.svg")).unwrap();
    assert!(svg.contains("<svg"));
    assert!(svg.contains("fill=\"green\""));
    assert!(svg.contains("fill=\"red\""));
    assert!(svg.contains("fill=\"blue\""));

    // A 3D model cannot be plotted.
    let model = serde_json::json!({
        "metadata": {"name": "threed"},
        "system": {"modes": [{
            "A": [[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]],
            "B": [[1.0],[0.0],[0.0]]
        }]},
        "switching": {"kind": "periodic", "order": [1]},
        "network": {"layers": [{"W": [[1.0, 0.0, 0.0]], "theta": [0.0], "kind": "linear"}]},
        "initial_set": {"box": {"center": [0.0, 0.0, 0.0], "radius": 0.5}}
    });
    let path = dir.path().join("threed.json");
    std::fs::write(&path, model.to_string()).unwrap();
    let out = run(
        dir.path(),
        &["reach", path.to_str().unwrap(), "--horizon", "1", "--out", "r3.json"],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(dir.path(), &["plot", "r3.json", "--svg", "f3.svg"], &[]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("2D plotting only"));
}

#[test]
fn result_json_reload_reserializes_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "reach",
            &model_arg(),
            "--horizon",
            "6",
            "--mode",
            "hull",
            "--semantics",
            "decoupled",
            "--out",
            "result.json",
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("result.json")).unwrap();
    let doc = jsonio::result_from_json(&text).unwrap();
    let again = jsonio::result_to_json(&doc).unwrap();
    assert_eq!(text, again, "round trip must be byte-identical");
}

#[test]
fn bundled_model_matches_desk_computed_weight_sums() {
    let model = load_model(common::model_path()).unwrap();
    assert_eq!(model.system.state_dim(), 2);
    assert_eq!(model.system.input_dim(), 2);
    let widths: Vec<usize> = model
        .network
        .layers()
        .iter()
        .map(|l| l.output_dim())
        .collect();
    assert_eq!(widths, vec![4, 2]);

    let sum = |m: &polyreach::Matrix| -> f64 {
        (0..m.rows()).map(|i| m.row(i).iter().sum::<f64>()).sum()
    };
    let modes = model.system.modes();
    assert!((sum(&modes[0].a) - -2.0832).abs() < 1e-9);
    assert!((sum(&modes[0].b) - 2.5148).abs() < 1e-9);
    assert!((sum(&modes[1].a) - 1.0577).abs() < 1e-9);
    assert!((sum(&modes[1].b) - 1.9161).abs() < 1e-9);
    let layers = model.network.layers();
    assert!((sum(&layers[0].weights) - -3.2793).abs() < 1e-9);
    assert!((layers[0].bias.iter().sum::<f64>() - 0.8991).abs() < 1e-9);
    assert!((sum(&layers[1].weights) - 0.6438).abs() < 1e-9);
    assert!((layers[1].bias.iter().sum::<f64>() - -0.3201).abs() < 1e-9);
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--help"], &[]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("reach"));
}

#[test]
fn unknown_flag_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["reach", "--bogus"], &[]);
    assert_eq!(code(&out), 3);
}
