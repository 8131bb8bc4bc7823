//! Pipeline configuration: one `key = value` per line, `#` starts a comment.
//! Relative paths are taken relative to the working directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qmor_core::hdm::{BurgersParams, NewtonConfig, SemiDiscreteModel};
use qmor_core::{BdfScheme, Error, LspgConfig, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub benchmark: BurgersParams,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: BdfScheme,
    pub snapshot_stride: usize,
    pub newton: NewtonConfig,
    pub eps_s: f64,
    pub zeta: f64,
    pub omega: f64,
    pub alpha_star: Option<f64>,
    pub tau: f64,
    pub training_stride: usize,
    pub gn_tol_rel: f64,
    pub gn_tol_abs: f64,
    pub gn_max_iters: usize,
    /// Probe positions in domain coordinates.
    pub probes: Vec<f64>,
    pub snapshots: PathBuf,
    pub hdm_trajectory: PathBuf,
    pub manifold: PathBuf,
    pub mesh: PathBuf,
    pub trajectory: PathBuf,
    pub report: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let lspg = LspgConfig::default();
        Self {
            benchmark: BurgersParams::default(),
            dt: 0.05,
            t_final: 25.0,
            scheme: BdfScheme::Bdf2,
            snapshot_stride: 1,
            newton: NewtonConfig::default(),
            eps_s: 1e-4,
            zeta: 0.15,
            omega: 0.1,
            alpha_star: None,
            tau: 1e-2,
            training_stride: 4,
            gn_tol_rel: lspg.gn_tol_rel,
            gn_tol_abs: lspg.gn_tol_abs,
            gn_max_iters: lspg.gn_max_iters,
            probes: vec![30.0, 65.0],
            snapshots: "snapshots.qsnap".into(),
            hdm_trajectory: "hdm_qoi.csv".into(),
            manifold: "manifold.qman".into(),
            mesh: "mesh.qmesh".into(),
            trajectory: "rom_qoi.csv".into(),
            report: "report.csv".into(),
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("bad value '{raw}' for key '{key}'")))
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, raw)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected 'key = value'",
                    lineno + 1
                )));
            };
            let (key, raw) = (key.trim(), raw.trim());
            if seen.contains(&key) {
                return Err(Error::Config(format!("key '{key}' given twice")));
            }
            cfg.set(key, raw)?;
            seen.push(key);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let b = &mut self.benchmark;
        match key {
            "cells" => b.cells = value(key, raw)?,
            "length" => b.length = value(key, raw)?,
            "inflow" => b.inflow = value(key, raw)?,
            "initial_value" => b.initial_value = value(key, raw)?,
            "source_a" => b.source_a = value(key, raw)?,
            "source_b" => b.source_b = value(key, raw)?,
            "dt" => self.dt = value(key, raw)?,
            "t_final" => self.t_final = value(key, raw)?,
            "scheme" => self.scheme = raw.parse()?,
            "snapshot_stride" => self.snapshot_stride = value(key, raw)?,
            "newton_tol" => self.newton.tol_rel = value(key, raw)?,
            "newton_tol_abs" => self.newton.tol_abs = value(key, raw)?,
            "newton_max_iters" => self.newton.max_iters = value(key, raw)?,
            "eps_s" => self.eps_s = value(key, raw)?,
            "zeta" => self.zeta = value(key, raw)?,
            "omega" => self.omega = value(key, raw)?,
            "alpha_star" => {
                self.alpha_star = match raw {
                    "gcv" | "" => None,
                    _ => Some(value(key, raw)?),
                }
            }
            "tau" => self.tau = value(key, raw)?,
            "training_stride" => self.training_stride = value(key, raw)?,
            "gn_tol_rel" => self.gn_tol_rel = value(key, raw)?,
            "gn_tol_abs" => self.gn_tol_abs = value(key, raw)?,
            "gn_max_iters" => self.gn_max_iters = value(key, raw)?,
            "probes" => {
                self.probes = raw
                    .split(',')
                    .map(|p| value(key, p.trim()))
                    .collect::<Result<_>>()?
            }
            "snapshots" => self.snapshots = raw.into(),
            "hdm_trajectory" => self.hdm_trajectory = raw.into(),
            "manifold" => self.manifold = raw.into(),
            "mesh" => self.mesh = raw.into(),
            "trajectory" => self.trajectory = raw.into(),
            "report" => self.report = raw.into(),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if self.benchmark.cells < 2 {
            return bad("cells must be at least 2");
        }
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return bad("dt must be positive and t_final nonnegative");
        }
        if self.snapshot_stride == 0 || self.training_stride == 0 {
            return bad("strides must be at least 1");
        }
        if !(self.eps_s > 0.0 && self.eps_s < 1.0) {
            return bad("eps_s must lie in (0, 1)");
        }
        if !(self.zeta >= 0.0) {
            return bad("zeta must be nonnegative");
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return bad("omega must lie in (0, 1]");
        }
        if let Some(a) = self.alpha_star {
            if !(a >= 0.0) {
                return bad("alpha_star must be nonnegative");
            }
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0, 1)");
        }
        if self.probes.iter().any(|p| !p.is_finite()) {
            return bad("probe positions must be finite");
        }
        self.lspg()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn lspg(&self) -> LspgConfig {
        LspgConfig {
            gn_tol_rel: self.gn_tol_rel,
            gn_tol_abs: self.gn_tol_abs,
            gn_max_iters: self.gn_max_iters,
            scheme: self.scheme,
            dt: self.dt,
        }
    }

    pub fn model(&self) -> Result<SemiDiscreteModel> {
        SemiDiscreteModel::burgers(&self.benchmark)
    }

    /// Probe cells, deduplicated in order.
    pub fn probe_cells(&self, model: &SemiDiscreteModel) -> Vec<usize> {
        let mut cells = Vec::new();
        for &x in &self.probes {
            let c = model.cell_at(x);
            if !cells.contains(&c) {
                cells.push(c);
            }
        }
        cells
    }
}
