//! Quantities of interest: point probes and the domain integral of `u`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::manifold::{unique_kron, Manifold};

/// Time histories of the probe values and the integral `Σ_i m_i·u_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct QoiHistory {
    pub probe_cells: Vec<usize>,
    pub times: Vec<f64>,
    /// One series per probe cell.
    pub probes: Vec<Vec<f64>>,
    pub integral: Vec<f64>,
}

impl QoiHistory {
    pub fn new(probe_cells: Vec<usize>) -> Self {
        let probes = vec![Vec::new(); probe_cells.len()];
        Self {
            probe_cells,
            times: Vec::new(),
            probes,
            integral: Vec::new(),
        }
    }

    /// `values` holds the probes in order, then the integral.
    pub fn push(&mut self, t: f64, values: &[f64]) {
        debug_assert_eq!(values.len(), self.probes.len() + 1);
        self.times.push(t);
        for (series, &v) in self.probes.iter_mut().zip(values) {
            series.push(v);
        }
        self.integral.push(values[self.probes.len()]);
    }

    /// QoIs of full states, one column per time.
    pub fn from_states(
        states: &DMatrix<f64>,
        times: &[f64],
        mass: &DVector<f64>,
        probe_cells: &[usize],
    ) -> Result<Self> {
        if states.ncols() != times.len() || states.nrows() != mass.len() {
            return Err(Error::DimensionMismatch(
                "states, times and mass disagree".into(),
            ));
        }
        if let Some(&p) = probe_cells.iter().find(|&&p| p >= states.nrows()) {
            return Err(Error::InvalidArgument(format!(
                "probe cell {p} is outside the mesh"
            )));
        }
        let mut h = Self::new(probe_cells.to_vec());
        for (j, col) in states.column_iter().enumerate() {
            let mut values: Vec<f64> = probe_cells.iter().map(|&p| col[p]).collect();
            values.push(mass.dot(&col));
            h.push(times[j], &values);
        }
        Ok(h)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Column names after `time`.
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .probe_cells
            .iter()
            .map(|c| format!("probe_{c}"))
            .collect();
        names.push("integral_qoi".into());
        names
    }

    /// Series in the order of [`Self::names`].
    pub fn series(&self) -> Vec<&[f64]> {
        let mut s: Vec<&[f64]> = self.probes.iter().map(Vec::as_slice).collect();
        s.push(&self.integral);
        s
    }
}

/// Precomputed linear and quadratic functionals that give the QoIs directly
/// from reduced coordinates.
#[derive(Debug, Clone)]
pub struct QoiFunctionals<'a> {
    manifold: &'a Manifold,
    probes: Vec<usize>,
    integral_const: f64,
    integral_linear: DVector<f64>,
    integral_quadratic: Option<DVector<f64>>,
}

impl<'a> QoiFunctionals<'a> {
    pub fn new(manifold: &'a Manifold, mass: &DVector<f64>, probes: &[usize]) -> Self {
        Self {
            manifold,
            probes: probes.to_vec(),
            integral_const: mass.dot(manifold.u_ref()),
            integral_linear: manifold.basis().matrix().tr_mul(mass),
            integral_quadratic: manifold.h_bar_transposed().map(|ht| ht * mass),
        }
    }

    /// Probe values followed by the integral.
    pub fn eval(&self, q: &DVector<f64>) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .manifold
            .evaluate_rows(q, &self.probes)
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default();
        let mut integral = self.integral_const + self.integral_linear.dot(q);
        if let Some(quad) = &self.integral_quadratic {
            integral += quad.dot(&unique_kron(q));
        }
        out.push(integral);
        out
    }
}

/// `√Σ(Q̃ − Q)² / √ΣQ²` over aligned series.
pub fn relative_error(rom: &[f64], reference: &[f64]) -> Result<f64> {
    if rom.len() != reference.len() {
        return Err(Error::DimensionMismatch(format!(
            "series have {} and {} samples",
            rom.len(),
            reference.len()
        )));
    }
    let num: f64 = rom
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let den: f64 = reference.iter().map(|b| b * b).sum();
    if den == 0.0 {
        return Err(Error::ZeroReferenceQoi);
    }
    Ok((num / den).sqrt())
}

/// CSV with header `time,probe_<cell>,...,integral_qoi`.
pub fn write_qoi_csv(h: &QoiHistory) -> String {
    let mut out = String::from("time");
    for name in h.names() {
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    let series = h.series();
    for (j, t) in h.times.iter().enumerate() {
        write!(out, "{t}").unwrap();
        for s in &series {
            write!(out, ",{}", s[j]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_qoi_csv(text: &str) -> Result<QoiHistory> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty QoI file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[0] != "time" || cols[cols.len() - 1] != "integral_qoi" {
        return Err(Error::Format(format!("unexpected QoI header '{header}'")));
    }
    let probe_cells = cols[1..cols.len() - 1]
        .iter()
        .map(|c| {
            c.strip_prefix("probe_")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Format(format!("unexpected QoI column '{c}'")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut h = QoiHistory::new(probe_cells);
    for (k, line) in lines.enumerate() {
        let values = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Format(format!("bad number on data line {}", k + 1)))?;
        if values.len() != cols.len() {
            return Err(Error::Format(format!(
                "data line {} has {} fields, expected {}",
                k + 1,
                values.len(),
                cols.len()
            )));
        }
        h.push(values[0], &values[1..]);
    }
    Ok(h)
}
