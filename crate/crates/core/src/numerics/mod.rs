//! Numerical kernels used by the controllability analysis: the matrix
//! exponential, fixed-step Runge–Kutta propagation, SVD-based rank, central
//! finite differences, composite Simpson quadrature and piecewise-cubic
//! interpolation on uniform grids.

mod diff;
mod expm;
mod interp;
mod ode;
mod quad;
mod rank;

pub use diff::{finite_diff, DiffOrder};
pub use expm::expm;
pub use interp::UniformCubic;
pub use ode::{propagate_ltv, rk4_step, Trajectory};
pub use quad::{gramian_quadrature, simpson, simpson_weights};
pub use rank::{svd_rank, RankResult, DEFAULT_RANK_TOL};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("matrix exponential overflowed (norm {0:e})")]
    Overflow(f64),
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("integration interval must satisfy tf > t0, got [{t0}, {tf}]")]
    EmptyInterval { t0: f64, tf: f64 },
    #[error("Simpson quadrature needs an odd node count >= 3, got {0}")]
    InvalidNodeCount(usize),
    #[error("state became non-finite at t = {0}")]
    DivergedState(f64),
}
