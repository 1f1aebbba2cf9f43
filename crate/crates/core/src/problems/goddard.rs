//! Goddard rocket ascent with a dynamic-pressure limit.

use std::sync::Arc;

use super::{BenchmarkBundle, ReferenceStats};
use crate::bvpdae::Mesh;
use crate::continuation::{ContinuationConfig, Method, OcpGuess};
use crate::linalg::DMat;
use crate::ocp::{to_fixed_time, Horizon, OcpDims, OcpFunctions, OcpSpec};
use crate::Matrix;

pub const U_MAX: f64 = 3.5;

/// Drag `d(h, v) = 310 v^2 exp(500 (1 - h))`.
pub fn drag(h: f64, v: f64) -> f64 {
    310.0 * v * v * (500.0 * (1.0 - h)).exp()
}

/// `(d_h, d_v)`.
pub fn drag_gradient(h: f64, v: f64) -> [f64; 2] {
    let e = (500.0 * (1.0 - h)).exp();
    [-500.0 * 310.0 * v * v * e, 620.0 * v * e]
}

/// Dynamic-pressure constraint `q = 20 d(h, v) - 10`.
pub fn pressure(h: f64, v: f64) -> f64 {
    20.0 * drag(h, v) - 10.0
}

/// States `(h, v, m)`, control thrust `u`, free final time.
#[derive(Debug, Clone, Copy, Default)]
pub struct Goddard;

impl OcpFunctions for Goddard {
    fn dims(&self) -> OcpDims {
        OcpDims { n: 3, m: 1, n_g: 1, n_c: 2, n_h: 4 }
    }

    fn dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let (h, v, m) = (x[0], x[1], x[2]);
        vec![v, (u[0] - drag(h, v)) / m - 1.0 / (h * h), -2.0 * u[0]]
    }

    fn dynamics_jacobian(&self, x: &[f64], u: &[f64]) -> (Matrix, Matrix) {
        let (h, v, m) = (x[0], x[1], x[2]);
        let [dh, dv] = drag_gradient(h, v);
        let fx = DMat::from_rows(&[
            &[0.0, 1.0, 0.0],
            &[-dh / m + 2.0 / (h * h * h), -dv / m, -(u[0] - drag(h, v)) / (m * m)],
            &[0.0, 0.0, 0.0],
        ]);
        (fx, DMat::from_rows(&[&[0.0], &[1.0 / m], &[-2.0]]))
    }

    fn running_cost(&self, x: &[f64], _u: &[f64]) -> f64 {
        -x[1]
    }

    fn running_cost_gradient(&self, _x: &[f64], _u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0, -1.0, 0.0], vec![0.0])
    }

    fn state_constraints(&self, x: &[f64]) -> Vec<f64> {
        vec![pressure(x[0], x[1])]
    }

    fn state_constraints_jacobian(&self, x: &[f64]) -> Matrix {
        let [dh, dv] = drag_gradient(x[0], x[1]);
        DMat::from_rows(&[&[20.0 * dh, 20.0 * dv, 0.0]])
    }

    fn mixed_constraints(&self, _x: &[f64], u: &[f64]) -> Vec<f64> {
        vec![u[0] - U_MAX, -u[0]]
    }

    fn mixed_constraints_jacobian(&self, _x: &[f64], _u: &[f64]) -> (Matrix, Matrix) {
        (DMat::zeros(2, 3), DMat::from_rows(&[&[1.0], &[-1.0]]))
    }

    fn boundary(&self, x0: &[f64], xt: &[f64]) -> Vec<f64> {
        vec![x0[0] - 1.0, x0[1], x0[2] - 1.0, xt[2] - 0.6]
    }

    fn boundary_jacobian(&self, _x0: &[f64], _xt: &[f64]) -> (Matrix, Matrix) {
        let mut h0 = DMat::zeros(4, 3);
        for i in 0..3 {
            h0[(i, i)] = 1.0;
        }
        let mut ht = DMat::zeros(4, 3);
        ht[(3, 2)] = 1.0;
        (h0, ht)
    }
}

pub fn free_time_spec() -> OcpSpec {
    OcpSpec::new("goddard", Horizon::Free, Arc::new(Goddard)).expect("valid dimensions")
}

/// Unit-horizon form with states `(h, v, m, T)`.
pub fn spec() -> OcpSpec {
    to_fixed_time(&free_time_spec())
}

/// 101 uniform nodes, `h = 1.2`, `v = 0.05`, `m = 1`, `T = 0.3`, `p_v = 1`,
/// other adjoints zero, thrust at mid-range.
pub fn initial_guess() -> OcpGuess {
    let mesh = Mesh::uniform(1.0, 101).expect("valid mesh");
    OcpGuess::constant(mesh, &[1.2, 0.05, 1.0, 0.3], &[0.0, 1.0, 0.0, 0.0], &[0.5 * U_MAX], 4)
}

pub fn bundle() -> BenchmarkBundle {
    let guess = initial_guess();
    BenchmarkBundle {
        name: "goddard",
        spec: spec(),
        original: free_time_spec(),
        guess_primal: guess.clone(),
        guess_primal_dual: guess,
        config_primal: ContinuationConfig { eps0: 0.1, alpha: 0.6, tol: super::DEFAULT_TOL },
        config_primal_dual: ContinuationConfig { eps0: 0.1, alpha: 0.25, tol: super::DEFAULT_TOL },
        reference: vec![
            ReferenceStats { method: Method::Primal, alpha: 0.6, iterations: 29, mesh_len: 722, exec_time: 16.14 },
            ReferenceStats { method: Method::PrimalDual, alpha: 0.25, iterations: 11, mesh_len: 501, exec_time: 4.11 },
        ],
        corrections: vec![
            "dynamic pressure is q = 20 d(h, v) - 10 with drag evaluated at (h, v)",
            "thrust is initialised at u = 1.75, the middle of [0, 3.5]",
        ],
    }
}
