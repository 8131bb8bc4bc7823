//! Affine and quadratic approximation manifolds for least-squares
//! Petrov–Galerkin reduced-order models, with ECSW hyperreduction, on a
//! one-dimensional Burgers benchmark.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod binio;
pub mod ecsw;
pub mod error;
pub mod hdm;
pub mod manifold;
pub mod numerics;
pub mod rom;
pub mod snapshots;

pub use ecsw::{ReducedMesh, TrainingSystem};
pub use error::{Error, Result};
pub use hdm::{BdfScheme, SemiDiscreteModel, TimeDiscretization};
pub use manifold::{Manifold, ManifoldKind};
pub use rom::{LspgConfig, RomTrajectory};
pub use snapshots::{ReducedBasis, SnapshotSet};
