//! The high-dimensional model: a first-order upwind finite-volume
//! discretization of a 1D scalar conservation law, integrated with BDF1/BDF2
//! and Newton's method, decomposed cell by cell for hyperreduction.

mod model;
mod simulate;
mod sparse;
mod time;

pub use model::{BurgersParams, FluxLaw, MeshEntity, SemiDiscreteModel, SourceTerm};
pub use simulate::{hdm_simulate, newton_solve, step_count, HdmRun, NewtonConfig};
pub use sparse::CsrMatrix;
pub use time::{BdfScheme, BdfWeights, TimeDiscretization};
