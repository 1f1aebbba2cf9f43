//! Constrained Van der Pol oscillator on `[0, 4]`.

use std::sync::Arc;

use super::{BenchmarkBundle, ReferenceStats};
use crate::bvpdae::Mesh;
use crate::continuation::{ContinuationConfig, Method, OcpGuess};
use crate::linalg::DMat;
use crate::ocp::{Horizon, OcpDims, OcpFunctions, OcpSpec};
use crate::Matrix;

pub const HORIZON: f64 = 4.0;

#[derive(Debug, Clone, Copy, Default)]
pub struct VanDerPol;

impl OcpFunctions for VanDerPol {
    fn dims(&self) -> OcpDims {
        OcpDims { n: 2, m: 1, n_g: 1, n_c: 2, n_h: 3 }
    }

    fn dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        vec![x[1], -x[0] + x[1] * (1.0 - x[0] * x[0]) + u[0]]
    }

    fn dynamics_jacobian(&self, x: &[f64], _u: &[f64]) -> (Matrix, Matrix) {
        let fx = DMat::from_rows(&[&[0.0, 1.0], &[-1.0 - 2.0 * x[0] * x[1], 1.0 - x[0] * x[0]]]);
        (fx, DMat::from_rows(&[&[0.0], &[1.0]]))
    }

    fn running_cost(&self, x: &[f64], u: &[f64]) -> f64 {
        x[0] * x[0] + x[1] * x[1] + u[0] * u[0]
    }

    fn running_cost_gradient(&self, x: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (vec![2.0 * x[0], 2.0 * x[1]], vec![2.0 * u[0]])
    }

    fn state_constraints(&self, x: &[f64]) -> Vec<f64> {
        vec![-0.4 - x[1]]
    }

    fn state_constraints_jacobian(&self, _x: &[f64]) -> Matrix {
        DMat::from_rows(&[&[0.0, -1.0]])
    }

    fn mixed_constraints(&self, _x: &[f64], u: &[f64]) -> Vec<f64> {
        vec![u[0] - 1.0, -1.0 - u[0]]
    }

    fn mixed_constraints_jacobian(&self, _x: &[f64], _u: &[f64]) -> (Matrix, Matrix) {
        (DMat::zeros(2, 2), DMat::from_rows(&[&[1.0], &[-1.0]]))
    }

    fn boundary(&self, x0: &[f64], xt: &[f64]) -> Vec<f64> {
        vec![x0[0] - 1.0, x0[1] - 1.0, xt[0] * xt[0] + xt[1] * xt[1] - 0.04]
    }

    fn boundary_jacobian(&self, _x0: &[f64], xt: &[f64]) -> (Matrix, Matrix) {
        let h0 = DMat::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        let ht = DMat::from_rows(&[&[0.0, 0.0], &[0.0, 0.0], &[2.0 * xt[0], 2.0 * xt[1]]]);
        (h0, ht)
    }
}

pub fn spec() -> OcpSpec {
    OcpSpec::new("vdp", Horizon::Fixed(HORIZON), Arc::new(VanDerPol)).expect("valid dimensions")
}

/// 41 uniform nodes, `x = 1`, `p = u = 0`, all multipliers zero.
pub fn initial_guess() -> OcpGuess {
    let mesh = Mesh::uniform(HORIZON, 41).expect("valid mesh");
    OcpGuess::constant(mesh, &[1.0, 1.0], &[0.0, 0.0], &[0.0], 3)
}

pub fn bundle() -> BenchmarkBundle {
    let guess = initial_guess();
    BenchmarkBundle {
        name: "vdp",
        spec: spec(),
        original: spec(),
        guess_primal: guess.clone(),
        guess_primal_dual: guess,
        config_primal: ContinuationConfig { eps0: 1.0, alpha: 0.35, tol: super::DEFAULT_TOL },
        config_primal_dual: ContinuationConfig { eps0: 1.0, alpha: 1e-7, tol: super::DEFAULT_TOL },
        reference: vec![
            ReferenceStats { method: Method::Primal, alpha: 0.35, iterations: 17, mesh_len: 812, exec_time: 2.55 },
            ReferenceStats { method: Method::PrimalDual, alpha: 1e-7, iterations: 2, mesh_len: 797, exec_time: 1.92 },
        ],
        corrections: vec![
            "state constraint is g = -0.4 - x2, so the barrier term enters the x2 adjoint as +eps/(0.4 + x2)",
            "control bounds are u in [-1, 1], matching the two barrier terms eps/(1 - u) and eps/(1 + u)",
        ],
    }
}
