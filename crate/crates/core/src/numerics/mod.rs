//! Dense kernels shared by the rest of the crate.

mod nnls;
mod svd;
mod tikhonov;

pub use nnls::{nnls_early_stop, nnls_early_stop_with, NnlsSolution};
pub use svd::{thin_svd, ThinSvd};
pub use tikhonov::{gcv_score, tikhonov_row_solve, SpectralRhs};
