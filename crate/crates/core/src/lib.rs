//! Interior-point continuation for constrained optimal control.
//!
//! A problem is described by an [`OcpSpec`] (dynamics, costs, pure-state and
//! mixed constraints, boundary map, all with first derivatives). It is turned
//! into an index-1 boundary value DAE either in primal form (log-barrier
//! penalized stationarity system) or in primal-dual form (multipliers kept as
//! unknowns and tied to the constraints by a smoothed Fischer-Burmeister
//! equation). The [`bvpdae`] collocation solver then solves a sequence of these
//! systems while the barrier parameter is driven to zero by the
//! [`continuation`] drivers.
//!
//! The numerical kernels that do not depend on user callbacks ([`barrier`] and
//! [`linalg`]) are generic over the scalar type through [`Real`]; the solver
//! stack above them works in `f64`.

pub mod barrier;
pub mod bvpdae;
pub mod continuation;
pub mod diagnostics;
pub mod linalg;
pub mod ocp;
pub mod problems;
pub mod transcription;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating point scalar accepted by the generic kernels.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self;
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
}

pub use barrier::{fb_eval, fb_value, psi_eval, BarrierError, FbEval};
pub use bvpdae::{DaeDims, DaeProblem, DaeSolution, Mesh, SolverOptions};
pub use continuation::{ContinuationConfig, ContinuationOutcome, Method, OcpGuess, OcpTrajectory, RunReport};
pub use diagnostics::KktReport;
pub use linalg::{AbdLayout, DMat, LinalgError};
pub use ocp::{Horizon, OcpDims, OcpFunctions, OcpSpec};
pub use transcription::{DaeSystem, Formulation};

/// Barrier evaluation in double precision.
pub type BarrierEval64 = barrier::BarrierEval<f64>;
/// Barrier evaluation in single precision.
pub type BarrierEval32 = barrier::BarrierEval<f32>;
/// Double precision dense matrix, the type used by all problem callbacks.
pub type Matrix = DMat<f64>;
/// Double precision almost-block-diagonal Newton matrix.
pub type AbdMatrix64 = linalg::AbdMatrix<f64>;
/// Single precision almost-block-diagonal Newton matrix.
pub type AbdMatrix32 = linalg::AbdMatrix<f32>;
/// Double precision ABD factorization.
pub type AbdLu64 = linalg::AbdLu<f64>;
