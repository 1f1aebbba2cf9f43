//! Zermelo navigation around an elliptic obstacle, minimum time.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use super::{BenchmarkBundle, ReferenceStats};
use crate::bvpdae::Mesh;
use crate::continuation::{ContinuationConfig, Method, OcpGuess};
use crate::linalg::DMat;
use crate::ocp::{to_fixed_time, Horizon, OcpDims, OcpFunctions, OcpSpec};
use crate::Matrix;

/// Current drift along `x1`.
pub fn drift(x2: f64) -> f64 {
    3.0 + x2 * (1.0 - x2) / 5.0
}

pub fn drift_derivative(x2: f64) -> f64 {
    (1.0 - 2.0 * x2) / 5.0
}

/// Obstacle function, negative outside the ellipse.
pub fn obstacle(x1: f64, x2: f64) -> f64 {
    -(x1 - 10.0).powi(2) / 4.0 - (x2 - 0.4).powi(2) / 1e-2 + 4.0
}

pub fn obstacle_gradient(x1: f64, x2: f64) -> [f64; 2] {
    [-(x1 - 10.0) / 2.0, -2.0 * (x2 - 0.4) / 1e-2]
}

/// Free-final-time formulation with running cost 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zermelo;

impl OcpFunctions for Zermelo {
    fn dims(&self) -> OcpDims {
        OcpDims { n: 2, m: 2, n_g: 1, n_c: 4, n_h: 4 }
    }

    fn dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        vec![u[1] * u[0].cos() + drift(x[1]), u[1] * u[0].sin()]
    }

    fn dynamics_jacobian(&self, x: &[f64], u: &[f64]) -> (Matrix, Matrix) {
        let (s, c) = u[0].sin_cos();
        let fx = DMat::from_rows(&[&[0.0, drift_derivative(x[1])], &[0.0, 0.0]]);
        let fu = DMat::from_rows(&[&[-u[1] * s, c], &[u[1] * c, s]]);
        (fx, fu)
    }

    fn running_cost(&self, _x: &[f64], _u: &[f64]) -> f64 {
        1.0
    }

    fn running_cost_gradient(&self, _x: &[f64], _u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; 2], vec![0.0; 2])
    }

    fn state_constraints(&self, x: &[f64]) -> Vec<f64> {
        vec![obstacle(x[0], x[1])]
    }

    fn state_constraints_jacobian(&self, x: &[f64]) -> Matrix {
        let g = obstacle_gradient(x[0], x[1]);
        DMat::from_rows(&[&g[..]])
    }

    fn mixed_constraints(&self, _x: &[f64], u: &[f64]) -> Vec<f64> {
        vec![u[0] - 2.0 * PI, -u[0], u[1] - 1.0, -u[1]]
    }

    fn mixed_constraints_jacobian(&self, _x: &[f64], _u: &[f64]) -> (Matrix, Matrix) {
        let cu = DMat::from_rows(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]]);
        (DMat::zeros(4, 2), cu)
    }

    fn boundary(&self, x0: &[f64], xt: &[f64]) -> Vec<f64> {
        vec![x0[0], x0[1], xt[0] - 20.0, xt[1] - 1.0]
    }

    fn boundary_jacobian(&self, _x0: &[f64], _xt: &[f64]) -> (Matrix, Matrix) {
        let h0 = DMat::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]]);
        let ht = DMat::from_rows(&[&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        (h0, ht)
    }
}

pub fn free_time_spec() -> OcpSpec {
    OcpSpec::new("zermelo", Horizon::Free, Arc::new(Zermelo)).expect("valid dimensions")
}

/// Unit-horizon form with `x3 = T`.
pub fn spec() -> OcpSpec {
    to_fixed_time(&free_time_spec())
}

/// Path above the obstacle through (6, 0.7) and (14, 0.7), reached at
/// `tau = 0.3` and `tau = 0.7`.
pub fn detour(tau: f64) -> [f64; 2] {
    let pts = [(0.0, [0.0, 0.0]), (0.3, [6.0, 0.7]), (0.7, [14.0, 0.7]), (1.0, [20.0, 1.0])];
    let k = pts.iter().rposition(|(s, _)| *s <= tau).unwrap_or(0).min(2);
    let (s0, a) = pts[k];
    let (s1, b) = pts[k + 1];
    let w = (tau - s0) / (s1 - s0);
    [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
}

fn guess_with(path: impl Fn(f64) -> [f64; 2]) -> OcpGuess {
    let mesh = Mesh::uniform(1.0, 101).expect("valid mesh");
    let mut g = OcpGuess::constant(mesh, &[0.0, 0.0, 20.0], &[0.0, 0.0, 1.0], &[FRAC_PI_2, 0.5], 4);
    for (x, &t) in g.x.iter_mut().zip(g.mesh.nodes()) {
        let [a, b] = path(t);
        x[0] = a;
        x[1] = b;
    }
    g
}

/// Interior start for the primal method.
pub fn primal_guess() -> OcpGuess {
    guess_with(detour)
}

/// Straight line from (0, 0) to (20, 1); crosses the obstacle.
pub fn straight_guess() -> OcpGuess {
    guess_with(|t| [20.0 * t, t])
}

pub fn bundle() -> BenchmarkBundle {
    BenchmarkBundle {
        name: "zermelo",
        spec: spec(),
        original: free_time_spec(),
        guess_primal: primal_guess(),
        guess_primal_dual: straight_guess(),
        config_primal: ContinuationConfig { eps0: 0.1, alpha: 0.9, tol: super::DEFAULT_TOL },
        config_primal_dual: ContinuationConfig { eps0: 0.1, alpha: 0.5, tol: super::DEFAULT_TOL },
        reference: vec![
            ReferenceStats { method: Method::Primal, alpha: 0.9, iterations: 82, mesh_len: 496, exec_time: 34.83 },
            ReferenceStats { method: Method::PrimalDual, alpha: 0.5, iterations: 21, mesh_len: 132, exec_time: 4.99 },
        ],
        corrections: vec![
            "the u2 stationarity row uses x3 (the final time) as the factor of p1 cos(u1)",
            "minimum time is posed as running cost 1 on the free horizon, so the p3 adjoint carries -1 and p3(0) = p3(1) = 0",
            "primal start follows a piecewise-linear path above the obstacle through (6, 0.7) and (14, 0.7)",
        ],
    }
}
