use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::sparse::CsrMatrix;
use super::time::TimeDiscretization;
use crate::error::{Error, Result};

/// Physical flux of a scalar 1D conservation law with nonnegative wave speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxLaw {
    /// `F(u) = u²/2`
    Burgers,
    /// `F(u) = c·u`, `c ≥ 0`
    LinearAdvection { speed: f64 },
}

impl FluxLaw {
    pub fn flux(&self, u: f64) -> f64 {
        match *self {
            FluxLaw::Burgers => 0.5 * u * u,
            FluxLaw::LinearAdvection { speed } => speed * u,
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            FluxLaw::Burgers => u,
            FluxLaw::LinearAdvection { speed } => speed,
        }
    }
}

/// Volumetric source density `s(x, t)`.
#[derive(Clone)]
pub enum SourceTerm {
    Zero,
    /// `a·exp(b·x)`
    Exponential {
        a: f64,
        b: f64,
    },
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl SourceTerm {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            SourceTerm::Zero => 0.0,
            SourceTerm::Exponential { a, b } => a * (b * x).exp(),
            SourceTerm::Custom(f) => f(x, t),
        }
    }
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::Zero => f.write_str("Zero"),
            SourceTerm::Exponential { a, b } => f
                .debug_struct("Exponential")
                .field("a", a)
                .field("b", b)
                .finish(),
            SourceTerm::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A mesh entity: the dofs it owns and the dofs its residual reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshEntity {
    pub id: usize,
    /// `L_e`
    pub owned: Vec<usize>,
    /// `L_{e+}`, strictly increasing, contains `owned`.
    pub stencil: Vec<usize>,
}

/// Parameters of the inviscid Burgers benchmark
/// `u_t + (u²/2)_x = a·exp(b·x)` on `[0, length]` with fixed inflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersParams {
    pub cells: usize,
    pub length: f64,
    pub inflow: f64,
    pub initial_value: f64,
    pub source_a: f64,
    pub source_b: f64,
}

impl Default for BurgersParams {
    fn default() -> Self {
        Self {
            cells: 512,
            length: 100.0,
            inflow: 4.3,
            initial_value: 1.0,
            source_a: 0.02,
            source_b: 0.02,
        }
    }
}

/// First-order upwind finite-volume semi-discretization
/// `M·du/dt + f(u) − g(t) = 0` of a 1D scalar conservation law.
///
/// Each cell is one mesh entity owning one dof; its residual reads the cell
/// and its upwind neighbour, with the inflow state standing in for the
/// neighbour of the first cell.
#[derive(Debug, Clone)]
pub struct SemiDiscreteModel {
    centers: Vec<f64>,
    mass: DVector<f64>,
    flux: FluxLaw,
    source: SourceTerm,
    inflow: f64,
    initial: DVector<f64>,
    entities: Vec<MeshEntity>,
}

impl SemiDiscreteModel {
    pub fn upwind_1d(
        cells: usize,
        length: f64,
        flux: FluxLaw,
        source: SourceTerm,
        inflow: f64,
        initial: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidArgument(
                "model needs at least one cell".into(),
            ));
        }
        if !(length > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if let FluxLaw::LinearAdvection { speed } = flux {
            if speed < 0.0 {
                return Err(Error::InvalidArgument(
                    "upwinding assumes a nonnegative speed".into(),
                ));
            }
        }
        let dx = length / cells as f64;
        let centers: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * dx).collect();
        let initial = DVector::from_iterator(cells, centers.iter().map(|&x| initial(x)));
        if initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        let entities = (0..cells)
            .map(|i| MeshEntity {
                id: i,
                owned: vec![i],
                stencil: if i == 0 { vec![0] } else { vec![i - 1, i] },
            })
            .collect();
        Ok(Self {
            centers,
            mass: DVector::from_element(cells, dx),
            flux,
            source,
            inflow,
            initial,
            entities,
        })
    }

    pub fn burgers(params: &BurgersParams) -> Result<Self> {
        let u0 = params.initial_value;
        Self::upwind_1d(
            params.cells,
            params.length,
            FluxLaw::Burgers,
            SourceTerm::Exponential {
                a: params.source_a,
                b: params.source_b,
            },
            params.inflow,
            move |_| u0,
        )
    }

    pub fn dimension(&self) -> usize {
        self.mass.len()
    }

    pub fn entities(&self) -> &[MeshEntity] {
        &self.entities
    }

    pub fn mass(&self) -> &DVector<f64> {
        &self.mass
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.initial
    }

    pub fn flux_law(&self) -> FluxLaw {
        self.flux
    }

    pub fn inflow(&self) -> f64 {
        self.inflow
    }

    /// Cell containing coordinate `x` (clamped to the domain).
    pub fn cell_at(&self, x: f64) -> usize {
        let dx = self.mass[0];
        ((x / dx).floor().max(0.0) as usize).min(self.dimension() - 1)
    }

    pub fn gather(&self, entity: usize, u: &DVector<f64>) -> Vec<f64> {
        self.entities[entity]
            .stencil
            .iter()
            .map(|&i| u[i])
            .collect()
    }

    /// Semi-discrete flux vector `f(u)`.
    pub fn flux_vector(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dimension(), |i, _| {
            let upstream = if i == 0 { self.inflow } else { u[i - 1] };
            self.flux.flux(u[i]) - self.flux.flux(upstream)
        })
    }

    /// Source vector `g(t)`.
    pub fn source_vector(&self, t: f64) -> DVector<f64> {
        DVector::from_fn(self.dimension(), |i, _| {
            self.mass[i] * self.source.eval(self.centers[i], t)
        })
    }

    fn check_stencil(&self, entity: usize, u_stencil: &[f64]) -> Result<()> {
        let e = self
            .entities
            .get(entity)
            .ok_or_else(|| Error::InvalidArgument(format!("no entity {entity}")))?;
        if u_stencil.len() != e.stencil.len() {
            return Err(Error::DimensionMismatch(format!(
                "entity {entity} stencil has {} dofs, got {}",
                e.stencil.len(),
                u_stencil.len()
            )));
        }
        if u_stencil.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        Ok(())
    }

    fn upstream_state(&self, entity: usize, u_stencil: &[f64]) -> f64 {
        if entity == 0 {
            self.inflow
        } else {
            u_stencil[0]
        }
    }

    /// Owned-dof rows of the time-discrete residual for one entity.
    pub fn entity_residual(
        &self,
        entity: usize,
        u_stencil: &[f64],
        t: f64,
        td: &TimeDiscretization,
    ) -> Result<DVector<f64>> {
        self.check_stencil(entity, u_stencil)?;
        let w = td.weights()?;
        let own = *u_stencil.last().unwrap();
        let rate = (w.lead * own + td.history_term(&w, entity)) / td.dt;
        let up = self.upstream_state(entity, u_stencil);
        let m = self.mass[entity];
        let r = m * rate + self.flux.flux(own)
            - self.flux.flux(up)
            - m * self.source.eval(self.centers[entity], t);
        Ok(DVector::from_element(1, r))
    }

    /// Derivative of [`Self::entity_residual`] with respect to the stencil
    /// state, `d_e × d_{e+}`.
    pub fn entity_jacobian(
        &self,
        entity: usize,
        u_stencil: &[f64],
        _t: f64,
        td: &TimeDiscretization,
    ) -> Result<DMatrix<f64>> {
        self.check_stencil(entity, u_stencil)?;
        let w = td.weights()?;
        let own = *u_stencil.last().unwrap();
        let k = u_stencil.len();
        let mut jac = DMatrix::zeros(1, k);
        jac[(0, k - 1)] = self.mass[entity] * w.lead / td.dt + self.flux.derivative(own);
        if entity > 0 {
            jac[(0, 0)] = -self.flux.derivative(u_stencil[0]);
        }
        Ok(jac)
    }

    fn check_state(&self, u: &DVector<f64>, td: &TimeDiscretization) -> Result<()> {
        if u.len() != self.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "state has length {}, model has {} dofs",
                u.len(),
                self.dimension()
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        for h in td.history() {
            if h.len() != self.dimension() {
                return Err(Error::DimensionMismatch(
                    "history state has wrong length".into(),
                ));
            }
        }
        Ok(())
    }

    /// `M·(BDF rate) + f(u_new) − g(t_new)`.
    pub fn discrete_residual(
        &self,
        u_new: &DVector<f64>,
        t_new: f64,
        td: &TimeDiscretization,
    ) -> Result<DVector<f64>> {
        self.check_state(u_new, td)?;
        let w = td.weights()?;
        let f = self.flux_vector(u_new);
        let g = self.source_vector(t_new);
        Ok(DVector::from_fn(self.dimension(), |i, _| {
            let rate = (w.lead * u_new[i] + td.history_term(&w, i)) / td.dt;
            self.mass[i] * rate + f[i] - g[i]
        }))
    }

    /// Global Jacobian assembled from the entity Jacobians.
    pub fn jacobian(&self, u: &DVector<f64>, t: f64, td: &TimeDiscretization) -> Result<CsrMatrix> {
        self.check_state(u, td)?;
        let mut trip = Vec::with_capacity(2 * self.dimension());
        for e in &self.entities {
            let local = self.entity_jacobian(e.id, &self.gather(e.id, u), t, td)?;
            for (a, &row) in e.owned.iter().enumerate() {
                for (b, &col) in e.stencil.iter().enumerate() {
                    trip.push((row, col, local[(a, b)]));
                }
            }
        }
        Ok(CsrMatrix::from_triplets(self.dimension(), trip))
    }
}
