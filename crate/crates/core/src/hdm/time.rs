use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdfScheme {
    Bdf1,
    Bdf2,
}

impl BdfScheme {
    pub fn history_len(self) -> usize {
        match self {
            BdfScheme::Bdf1 => 1,
            BdfScheme::Bdf2 => 2,
        }
    }
}

impl fmt::Display for BdfScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BdfScheme::Bdf1 => "bdf1",
            BdfScheme::Bdf2 => "bdf2",
        })
    }
}

impl FromStr for BdfScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bdf1" | "euler" => Ok(BdfScheme::Bdf1),
            "bdf2" => Ok(BdfScheme::Bdf2),
            other => Err(Error::Config(format!("unknown time scheme '{other}'"))),
        }
    }
}

/// Backward-difference weights: the rate at the new level is
/// `(lead·u_new + Σ_k history[k]·u_{m-k}) / dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdfWeights {
    pub lead: f64,
    pub history: [f64; 2],
    pub levels: usize,
}

/// Implicit multistep time discretization with its state history.
///
/// BDF2 falls back to BDF1 until two history states are available.
#[derive(Debug, Clone)]
pub struct TimeDiscretization {
    pub scheme: BdfScheme,
    pub dt: f64,
    /// Most recent first; at most `scheme.history_len()` entries.
    history: Vec<DVector<f64>>,
}

impl TimeDiscretization {
    pub fn new(scheme: BdfScheme, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "time step must be positive, got {dt}"
            )));
        }
        Ok(Self {
            scheme,
            dt,
            history: Vec::with_capacity(2),
        })
    }

    pub fn with_history(scheme: BdfScheme, dt: f64, history: Vec<DVector<f64>>) -> Result<Self> {
        let mut td = Self::new(scheme, dt)?;
        for u in history.into_iter().rev() {
            td.push(u);
        }
        Ok(td)
    }

    /// Records a newly accepted state.
    pub fn push(&mut self, u: DVector<f64>) {
        self.history.insert(0, u);
        self.history.truncate(self.scheme.history_len());
    }

    pub fn history(&self) -> &[DVector<f64>] {
        &self.history
    }

    pub fn weights(&self) -> Result<BdfWeights> {
        match (self.scheme, self.history.len()) {
            (_, 0) => Err(Error::InvalidArgument("time history is empty".into())),
            (BdfScheme::Bdf2, n) if n >= 2 => Ok(BdfWeights {
                lead: 1.5,
                history: [-2.0, 0.5],
                levels: 2,
            }),
            _ => Ok(BdfWeights {
                lead: 1.0,
                history: [-1.0, 0.0],
                levels: 1,
            }),
        }
    }

    /// Weighted history sum `Σ_k w_k·u_{m-k}` at one dof.
    pub(crate) fn history_term(&self, w: &BdfWeights, dof: usize) -> f64 {
        (0..w.levels)
            .map(|k| w.history[k] * self.history[k][dof])
            .sum()
    }
}
