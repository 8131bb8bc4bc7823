use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use qmor_core::ecsw::{
    build_training_system, load_mesh, save_mesh, train_reduced_mesh, training_samples,
};
use qmor_core::hdm::hdm_simulate;
use qmor_core::manifold::{
    build_quadratic_manifold, load_manifold, save_manifold, QuadraticSettings, Regularization,
};
use qmor_core::rom::{
    run_rom_partial, state_relative_error, write_qoi_csv, QoiHistory, RunSettings,
};
use qmor_core::snapshots::{load_snapshots, pod_basis, save_snapshots};
use qmor_core::{Error, Manifold, Result, SnapshotSet, TimeDiscretization};

use crate::config::PipelineConfig;

fn timing_path(trajectory: &Path) -> PathBuf {
    let mut os = trajectory.as_os_str().to_owned();
    os.push(".seconds");
    os.into()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

fn read_manifold_file(path: &Path) -> Result<Manifold> {
    if !path.exists() {
        return Err(Error::InvalidArgument(format!(
            "manifold file {} not found",
            path.display()
        )));
    }
    load_manifold(path)
}

fn read_snapshot_file(path: &Path) -> Result<SnapshotSet> {
    if !path.exists() {
        return Err(Error::InvalidArgument(format!(
            "snapshot file {} not found",
            path.display()
        )));
    }
    load_snapshots(path)
}

pub fn hdm_run(cfg: &PipelineConfig, out: Option<PathBuf>) -> Result<()> {
    let model = cfg.model()?;
    let td = TimeDiscretization::new(cfg.scheme, cfg.dt)?;
    let start = Instant::now();
    let run = hdm_simulate(&model, &td, cfg.t_final, cfg.snapshot_stride, &cfg.newton)?;
    let seconds = start.elapsed().as_secs_f64();

    let snaps = &run.snapshots;
    let path = out.unwrap_or_else(|| cfg.snapshots.clone());
    save_snapshots(snaps, &path)?;
    let qoi = QoiHistory::from_states(
        snaps.states(),
        snaps.times(),
        model.mass(),
        &cfg.probe_cells(&model),
    )?;
    write_text(&cfg.hdm_trajectory, &write_qoi_csv(&qoi))?;
    write_text(&timing_path(&cfg.hdm_trajectory), &format!("{seconds}\n"))?;

    let newton: usize = run.newton_iterations.iter().sum();
    println!(
        "N = {}, N_s = {}, steps = {}",
        model.dimension(),
        snaps.len(),
        run.newton_iterations.len()
    );
    println!("Newton iterations: {newton} total");
    println!("snapshots -> {}", path.display());
    println!("HDM QoIs -> {}", cfg.hdm_trajectory.display());
    println!("hdm-run wall clock: {seconds:.3} s");
    Ok(())
}

pub fn build_affine(cfg: &PipelineConfig, out: Option<PathBuf>) -> Result<()> {
    let snaps = read_snapshot_file(&cfg.snapshots)?;
    let start = Instant::now();
    let basis = pod_basis(&snaps, cfg.eps_s)?;
    let manifold = Manifold::affine(basis, snaps.u_ref().clone())?;
    let seconds = start.elapsed().as_secs_f64();
    let path = out.unwrap_or_else(|| cfg.manifold.clone());
    save_manifold(&manifold, &path)?;
    println!(
        "affine manifold: N = {}, n = {} (eps_s = {:e}, discarded energy {:.3e})",
        manifold.state_dimension(),
        manifold.dimension(),
        cfg.eps_s,
        manifold.basis().discarded_energy()
    );
    println!("manifold -> {}", path.display());
    println!("build-affine wall clock: {seconds:.3} s");
    Ok(())
}

pub fn build_quadratic(
    cfg: &PipelineConfig,
    out: Option<PathBuf>,
    alpha_star: Option<f64>,
) -> Result<()> {
    let snaps = read_snapshot_file(&cfg.snapshots)?;
    let regularization = match alpha_star.or(cfg.alpha_star) {
        Some(a) => Regularization::Fixed(a),
        None => Regularization::Gcv { omega: cfg.omega },
    };
    let settings = QuadraticSettings {
        eps_s: cfg.eps_s,
        zeta: cfg.zeta,
        regularization,
    };
    let start = Instant::now();
    let (manifold, chain) = build_quadratic_manifold(&snaps, &settings)?;
    let seconds = start.elapsed().as_secs_f64();
    let path = out.unwrap_or_else(|| cfg.manifold.clone());
    save_manifold(&manifold, &path)?;

    println!("{chain}");
    if let Some(r) = manifold.build_record() {
        let how = if r.alpha_overridden {
            "override"
        } else {
            "GCV"
        };
        println!(
            "alpha* = {:.6e} ({how}), sigma_1 = {:.6e}, alpha*/sigma_1 = {:.6e}",
            r.alpha_star,
            r.sigma_max,
            r.alpha_star / r.sigma_max
        );
    }
    println!("manifold -> {}", path.display());
    println!("build-quadratic wall clock: {seconds:.3} s");
    Ok(())
}

pub fn ecsw_train(
    cfg: &PipelineConfig,
    manifold: Option<PathBuf>,
    out: Option<PathBuf>,
    tau: Option<f64>,
) -> Result<()> {
    let tau = tau.unwrap_or(cfg.tau);
    let manifold = read_manifold_file(&manifold.unwrap_or_else(|| cfg.manifold.clone()))?;
    let snaps = read_snapshot_file(&cfg.snapshots)?;
    let model = cfg.model()?;

    let start = Instant::now();
    let samples = training_samples(&manifold, &snaps, cfg.training_stride, cfg.scheme, cfg.dt)?;
    let system = build_training_system(&manifold, &model, &samples)?;
    let assembly = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let mesh = train_reduced_mesh(&system, &model, tau)?.bind_to(&manifold);
    let nnls = start.elapsed().as_secs_f64();

    let path = out.unwrap_or_else(|| cfg.mesh.clone());
    save_mesh(&mesh, &path)?;
    let (ne, total) = (mesh.len(), mesh.entity_count());
    println!(
        "training system: {} x {} from {} snapshots (assembly defect {:.1e})",
        system.c.nrows(),
        system.c.ncols(),
        system.snapshots.len(),
        system.assembly_defect
    );
    println!(
        "n_e = {ne} of N_e = {total} ({:.2}%), |Cxi - d|/|d| = {:.3e} (tau = {tau:e})",
        100.0 * ne as f64 / total as f64,
        mesh.achieved_ratio()
    );
    if ne < manifold.dimension() {
        println!(
            "warning: n_e = {ne} is below n = {}; the hyperreduced normal equations will be singular",
            manifold.dimension()
        );
    } else if tau > 0.1 {
        println!(
            "warning: tau = {tau} is loose; the reduced mesh will be too coarse for accurate runs"
        );
    }
    println!("mesh -> {}", path.display());
    println!("assembly {assembly:.3} s, NNLS {nnls:.3} s");
    Ok(())
}

pub struct RomRunArgs {
    pub manifold: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub dump_coords: bool,
}

pub fn rom_run(cfg: &PipelineConfig, args: RomRunArgs) -> Result<()> {
    let manifold = read_manifold_file(&args.manifold.unwrap_or_else(|| cfg.manifold.clone()))?;
    let model = cfg.model()?;
    let mesh = match &args.mesh {
        Some(p) if !p.exists() => {
            return Err(Error::InvalidArgument(format!(
                "mesh file {} not found",
                p.display()
            )));
        }
        Some(p) => Some(load_mesh(p, &model)?),
        None => None,
    };
    let settings = RunSettings {
        t_final: cfg.t_final,
        record_stride: cfg.snapshot_stride,
        probes: cfg.probe_cells(&model),
    };
    let start = Instant::now();
    let (traj, failure) = run_rom_partial(&manifold, &model, mesh.as_ref(), &settings, &cfg.lspg());
    let seconds = start.elapsed().as_secs_f64();

    let path = args.out.unwrap_or_else(|| cfg.trajectory.clone());
    if !traj.qoi.is_empty() {
        write_text(&path, &write_qoi_csv(&traj.qoi))?;
        if args.dump_coords {
            let mut coords = path.as_os_str().to_owned();
            coords.push(".coords");
            let set = SnapshotSet::new(
                traj.coordinates.clone(),
                traj.times().to_vec(),
                DVector::zeros(manifold.dimension()),
            )?;
            save_snapshots(&set, PathBuf::from(coords))?;
        }
    }
    if let Some(e) = failure {
        if !traj.qoi.is_empty() {
            eprintln!(
                "partial trajectory ({} samples) -> {}",
                traj.qoi.len(),
                path.display()
            );
        }
        return Err(e);
    }

    let hyper = match &mesh {
        Some(m) => format!(
            "hyperreduced on {} of {} entities",
            m.len(),
            m.entity_count()
        ),
        None => "no hyperreduction".to_string(),
    };
    let gn: usize = traj.iterations.iter().sum();
    println!(
        "{} manifold, n = {}, {hyper}",
        manifold.kind().as_str(),
        manifold.dimension()
    );
    println!(
        "{} steps, {gn} Gauss-Newton iterations",
        traj.iterations.len()
    );
    println!("trajectory -> {}", path.display());
    if cfg.snapshots.exists() {
        if let Ok(snaps) = load_snapshots(&cfg.snapshots) {
            if snaps.len() == traj.qoi.len() && snaps.dimension() == manifold.state_dimension() {
                let err = state_relative_error(&traj.reconstruct(&manifold)?, snaps.states())?;
                println!("space-time state relative error vs HDM snapshots: {err:.6e}");
            }
        }
    }
    println!("rom-run wall clock: {seconds:.3} s");
    let recorded = fs::read_to_string(timing_path(&cfg.hdm_trajectory))
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok());
    if let Some(hdm) = recorded {
        println!(
            "speed-up vs recorded HDM run ({hdm:.3} s): {:.2}x",
            hdm / seconds
        );
    }
    Ok(())
}
