use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use qmor_core::manifold::load_manifold;
use qmor_core::rom::read_qoi_csv;
use qmor_core::snapshots::{load_snapshots, save_snapshots};
use qmor_core::{ManifoldKind, SnapshotSet};
use tempfile::TempDir;

const SMALL: &str = "\
cells = 64
t_final = 2
dt = 0.05
probes = 30, 65
training_stride = 2
";

fn qmor(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmor"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("qmor runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn workspace(extra: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), format!("{SMALL}{extra}")).unwrap();
    dir
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = qmor(dir, args);
    assert_eq!(code(&out), 0, "qmor {args:?} failed: {}", stderr(&out));
    stdout(&out)
}

#[test]
fn hdm_run_writes_one_snapshot_per_stride() {
    let dir = workspace("snapshot_stride = 2\n");
    let text = ok(dir.path(), &["--config", "run.cfg", "hdm-run"]);
    assert!(text.contains("wall clock"));
    // t_final / (dt·stride) + 1
    let snaps = load_snapshots(dir.path().join("snapshots.qsnap")).unwrap();
    assert_eq!(snaps.len(), 21);
    assert_eq!(snaps.dimension(), 64);
    let qoi = read_qoi_csv(&fs::read_to_string(dir.path().join("hdm_qoi.csv")).unwrap()).unwrap();
    assert_eq!(qoi.len(), 21);
    assert_eq!(qoi.names(), vec!["probe_19", "probe_41", "integral_qoi"]);
}

#[test]
fn zero_final_time_keeps_the_initial_state() {
    let dir = workspace("");
    fs::write(
        dir.path().join("zero.cfg"),
        SMALL.replace("t_final = 2", "t_final = 0"),
    )
    .unwrap();
    ok(
        dir.path(),
        &["--config", "zero.cfg", "hdm-run", "--out", "s0.qsnap"],
    );
    let snaps = load_snapshots(dir.path().join("s0.qsnap")).unwrap();
    assert_eq!(snaps.len(), 1);
    assert_eq!(snaps.times(), &[0.0]);
}

#[test]
fn bad_config_key_is_a_user_error() {
    let dir = workspace("epsilon_s = 1e-4\n");
    let out = qmor(dir.path(), &["--config", "run.cfg", "hdm-run"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("'epsilon_s'"), "{}", stderr(&out));
}

#[test]
fn bad_arguments_are_user_errors() {
    let dir = workspace("");
    assert_eq!(code(&qmor(dir.path(), &["simulate"])), 1);
    assert_eq!(
        code(&qmor(dir.path(), &["build-quadratic", "--alpha-star", "x"])),
        1
    );
    assert_eq!(
        code(&qmor(dir.path(), &["--config", "missing.cfg", "hdm-run"])),
        1
    );
    assert_eq!(code(&qmor(dir.path(), &["--help"])), 0);
}

#[test]
fn rank_one_snapshots_give_a_one_dimensional_affine_manifold() {
    let dir = workspace("");
    let u_ref = DVector::from_fn(64, |i, _| 1.0 + 0.01 * i as f64);
    let v = DVector::from_fn(64, |i, _| (i as f64 * 0.1).sin());
    let cols: Vec<_> = (0..6).map(|l| &u_ref + &v * (l as f64 * 0.5)).collect();
    let snaps = SnapshotSet::new(
        DMatrix::from_columns(&cols),
        (0..6).map(f64::from).collect(),
        u_ref,
    )
    .unwrap();
    save_snapshots(&snaps, dir.path().join("snapshots.qsnap")).unwrap();
    let text = ok(dir.path(), &["--config", "run.cfg", "build-affine"]);
    assert!(text.contains("n = 1 "), "{text}");
    let m = load_manifold(dir.path().join("manifold.qman")).unwrap();
    assert_eq!(m.kind(), ManifoldKind::Affine);
    assert_eq!(m.dimension(), 1);
}

#[test]
fn quadratic_build_reports_the_chain_and_records_an_override() {
    let dir = workspace("");
    ok(dir.path(), &["--config", "run.cfg", "hdm-run"]);
    let text = ok(
        dir.path(),
        &[
            "--config",
            "run.cfg",
            "build-quadratic",
            "--alpha-star",
            "10",
        ],
    );
    assert!(text.contains("n_tra = "), "{text}");
    assert!(text.contains("n_qua' = "), "{text}");
    assert!(text.contains("(override)"), "{text}");
    let m = load_manifold(dir.path().join("manifold.qman")).unwrap();
    let record = m.build_record().unwrap();
    assert!(record.alpha_overridden);
    assert_eq!(record.alpha_star, 10.0);
    assert_eq!(record.omega, None);
    assert_eq!(record.zeta, Some(0.15));
}

#[test]
fn missing_manifold_is_a_user_error() {
    let dir = workspace("");
    ok(dir.path(), &["--config", "run.cfg", "hdm-run"]);
    let out = qmor(
        dir.path(),
        &["--config", "run.cfg", "ecsw-train", "nowhere.qman"],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("not found"));
    assert_eq!(
        code(&qmor(
            dir.path(),
            &["--config", "run.cfg", "rom-run", "nowhere.qman"]
        )),
        1
    );
}

#[test]
fn loose_tolerance_warns() {
    let dir = workspace("");
    ok(dir.path(), &["--config", "run.cfg", "hdm-run"]);
    ok(dir.path(), &["--config", "run.cfg", "build-affine"]);
    let text = ok(
        dir.path(),
        &["--config", "run.cfg", "ecsw-train", "--tau", "0.999"],
    );
    assert!(text.contains("warning:"), "{text}");
}

#[test]
fn affine_and_quadratic_pipelines_run_end_to_end() {
    let dir = workspace("");
    let d = dir.path();
    ok(d, &["--config", "run.cfg", "hdm-run"]);
    ok(
        d,
        &[
            "--config",
            "run.cfg",
            "build-affine",
            "--out",
            "affine.qman",
        ],
    );
    ok(
        d,
        &[
            "--config",
            "run.cfg",
            "build-quadratic",
            "--out",
            "quad.qman",
            "--alpha-star",
            "0.1",
        ],
    );
    for kind in ["affine", "quad"] {
        let man = format!("{kind}.qman");
        let mesh = format!("{kind}.qmesh");
        let text = ok(
            d,
            &["--config", "run.cfg", "ecsw-train", &man, "--out", &mesh],
        );
        assert!(text.contains("n_e = "), "{text}");
        assert!(!text.contains("warning"), "{text}");
        let traj = format!("{kind}.csv");
        let text = ok(
            d,
            &[
                "--config", "run.cfg", "rom-run", &man, "--mesh", &mesh, "--out", &traj,
            ],
        );
        assert!(text.contains("speed-up"), "{text}");
    }
    let hdm = read_qoi_csv(&fs::read_to_string(d.join("hdm_qoi.csv")).unwrap()).unwrap();
    let rom = read_qoi_csv(&fs::read_to_string(d.join("quad.csv")).unwrap()).unwrap();
    assert_eq!(rom.len(), hdm.len());

    ok(
        d,
        &[
            "--config",
            "run.cfg",
            "compare",
            "hdm_qoi.csv",
            "affine.csv",
            "quad.csv",
            "--out",
            "table.csv",
        ],
    );
    let report = fs::read_to_string(d.join("table.csv")).unwrap();
    // header + 3 QoIs × 2 inputs
    assert_eq!(report.lines().count(), 1 + 3 * 2);
    assert!(d.join("table_histories.csv").exists());
}

#[test]
fn exact_rank_affine_run_reproduces_the_hdm_probes() {
    let dir = workspace("eps_s = 1e-15\n");
    let d = dir.path();
    ok(d, &["--config", "run.cfg", "hdm-run"]);
    ok(d, &["--config", "run.cfg", "build-affine"]);
    let text = ok(d, &["--config", "run.cfg", "rom-run", "--dump-coords"]);
    assert!(text.contains("state relative error"), "{text}");
    let coords = load_snapshots(d.join("rom_qoi.csv.coords")).unwrap();
    assert_eq!(coords.len(), 41);

    ok(
        d,
        &[
            "--config",
            "run.cfg",
            "compare",
            "hdm_qoi.csv",
            "rom_qoi.csv",
        ],
    );
    let report = fs::read_to_string(d.join("report.csv")).unwrap();
    for line in report.lines().skip(1) {
        let err: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err < 1e-6, "{line}");
    }
}

#[test]
fn self_comparison_is_exact() {
    let dir = workspace("");
    let d = dir.path();
    ok(d, &["--config", "run.cfg", "hdm-run"]);
    ok(d, &["compare", "hdm_qoi.csv", "hdm_qoi.csv"]);
    let report = fs::read_to_string(d.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 4);
    assert!(
        report.lines().skip(1).all(|l| l.ends_with(",0e0")),
        "{report}"
    );
}

#[test]
fn misaligned_histories_are_user_errors() {
    let dir = workspace("");
    let d = dir.path();
    fs::write(
        d.join("a.csv"),
        "time,probe_1,integral_qoi\n0,1,1\n0.05,1,1\n",
    )
    .unwrap();
    fs::write(
        d.join("b.csv"),
        "time,probe_1,integral_qoi\n0,1,1\n0.1,1,1\n",
    )
    .unwrap();
    let out = qmor(d, &["compare", "a.csv", "b.csv"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("misaligned"));
}

#[test]
fn mesh_for_another_dimension_is_refused() {
    let dir = workspace("");
    let d = dir.path();
    ok(d, &["--config", "run.cfg", "hdm-run"]);
    ok(
        d,
        &["--config", "run.cfg", "build-affine", "--out", "a.qman"],
    );
    ok(
        d,
        &[
            "--config",
            "run.cfg",
            "ecsw-train",
            "a.qman",
            "--out",
            "a.qmesh",
        ],
    );
    ok(
        d,
        &[
            "--config",
            "run.cfg",
            "build-quadratic",
            "--out",
            "q.qman",
            "--alpha-star",
            "1",
        ],
    );
    let na = load_manifold(d.join("a.qman")).unwrap().dimension();
    let nq = load_manifold(d.join("q.qman")).unwrap().dimension();
    assert_ne!(na, nq);
    let out = qmor(
        d,
        &[
            "--config", "run.cfg", "rom-run", "q.qman", "--mesh", "a.qmesh",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("mesh/manifold mismatch"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn failed_step_flushes_the_partial_trajectory() {
    let dir = workspace("gn_max_iters = 1\ngn_tol_rel = 1e-15\ngn_tol_abs = 1e-300\n");
    let d = dir.path();
    ok(d, &["--config", "run.cfg", "hdm-run"]);
    ok(d, &["--config", "run.cfg", "build-affine"]);
    let out = qmor(d, &["--config", "run.cfg", "rom-run"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("partial trajectory"));
    let partial = read_qoi_csv(&fs::read_to_string(d.join("rom_qoi.csv")).unwrap()).unwrap();
    assert!(!partial.is_empty());
    assert!(partial.len() < 41);
}
