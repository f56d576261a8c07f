//! Numerical laboratory for bulk universality of Wigner matrices.
//!
//! The crate is organised around three analytic routes to the local
//! statistics of Hermitian Wigner spectra, plus the Monte Carlo machinery
//! that is compared against them:
//!
//! - [`kernels`]: semicircle density, the Dyson sine kernel and its
//!   determinantal correlations, the finite-n GUE (Gaudin-Mehta) kernel.
//! - [`fredholm`]: Nyström discretization of the sine-kernel operator on
//!   `[0, K]`, its eigenvalues `p_j`, `det(1 - T)` and the Poisson-binomial
//!   law of the eigenvalue count.
//! - [`gapode`]: the Jimbo-Miwa-Mori-Sato ODE whose solution gives the gap
//!   probability.
//! - [`ensembles`] and [`spectra`]: atom distributions, Wigner sampling,
//!   eigensolver and persistent spectrum batches.
//! - [`stats`]: estimators of correlation and counting statistics with
//!   bootstrap uncertainties.

// Range checks are written as `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensembles;
pub mod error;
pub mod fredholm;
pub mod gapode;
pub mod kernels;
pub mod quadrature;
pub mod spectra;
pub mod stats;

pub use ensembles::{AtomDistribution, EnsembleSpec, MomentMatchTolerance, WignerSample};
pub use error::{Error, Result};
pub use fredholm::{OperatorSpectrum, PoissonBinomial, SineOperator};
pub use gapode::GapSolution;
pub use kernels::{BulkEnergy, TestFunction};
pub use spectra::{Spectrum, SpectrumBatch};
pub use stats::{ComparisonReport, CorrelationEstimate, CountingHistogram};
