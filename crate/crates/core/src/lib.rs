//! Multifractal entropy and dimension spectra of observable sequences on
//! full shifts and subshifts of finite type, computed through the
//! large-deviations route: finite-depth pressure and log-moment generating
//! functions, discrete Legendre–Fenchel conjugation and spectrum assembly.
//!
//! Every numerical route has an independent cross-check in the crate:
//! closed forms for the coin-tossing case, transfer-operator pressure for
//! window-2 potentials, direct cylinder counts for level sets and tilted
//! Monte Carlo for level-set probabilities.

// `!(x <= y)` is used on purpose so NaN falls to the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convex;
pub mod error;
pub mod exec;
pub mod grid;
pub mod io;
pub mod ldp;
pub mod numeric;
pub mod observables;
pub mod pressure;
pub mod spectra;
pub mod symbolic;

pub use error::{Error, Result};
pub use exec::ExecOptions;
pub use grid::Grid;
