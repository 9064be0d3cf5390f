//! Space-time Wiener-Hopf factorization of lattice random walks and
//! reconstruction of a step law from its convolution powers restricted to
//! the nonnegative half-line.

pub mod data;
pub mod error;
pub mod factor;
pub mod families;
pub mod lattice;
pub mod lsq;
pub mod montecarlo;
pub mod pencil;
pub mod reconstruct;

pub use data::TruncatedData;
pub use error::{Error, Result};
pub use factor::{chi_eval, ladder_law, spitzer_chi, verify_factorization, Drift, LadderLaw, Side};
pub use lattice::{convolution_power, convolve, eval_transform, restrict_nonneg, LatticeDist, TransformKind};
