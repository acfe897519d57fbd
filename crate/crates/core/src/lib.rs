//! Minimum-volume nonnegative matrix factorization under bounded column noise,
//! together with the geometry and certification machinery of the expanded
//! sufficiently scattered condition (level `p`).
//!
//! The crate is organised bottom-up:
//!
//! - [`norms`]: column norms, SVD quantities, Gram volume, pseudoinverse.
//! - [`geometry`]: the cones `C_p`/`S_p`, the ball `Q_p`, the matrix `H_p`
//!   and an exact support oracle over `Q_p ∩ Δ^r`.
//! - [`certify`]: separability detection, the `H_p` necessary condition,
//!   exact certification for `r ≤ 3` and sampled falsification.
//! - [`instance`]: synthetic `(X, W♯, H♯, N♯)` generators.
//! - [`io`]: matrix CSV files and the on-disk instance bundle.
//! - [`solver`]: simplex-constrained least squares, SPA and the min-vol solver.
//! - [`eval`]: permutation matching, bound envelopes and scaling fits.
//! - [`experiment`]: the `gen`/`certify`/`solve`/`sweep`/`report` drivers
//!   behind the `minvol` binary.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod certify;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod geometry;
pub mod instance;
pub mod io;
pub mod norms;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use norms::{Mat, Vector};
