//! Turns an optimal control problem into a boundary value DAE for a fixed
//! barrier parameter `eps`.
//!
//! Both formulations use `y = [x, p]` (state and costate) and carry the
//! boundary multipliers `lambda` as unknown parameters, with boundary rows
//!
//! ```text
//! h(x(0), x(T)) = 0,   p(0) + h_{x(0)}^T lambda = 0,   p(T) - phi'(x(T)) - h_{x(T)}^T lambda = 0.
//! ```
//!
//! * Primal: `z = u`, the inequality multipliers are eliminated as
//!   `eps psi'(g) = -eps / g`, and every evaluation requires strict interiority.
//! * Primal-dual: `z = [u, lambda_g, lambda_c]` and complementarity is imposed by
//!   `FB(lambda_i, g_i, eps) = 0`, which holds exactly when `lambda_i >= 0`,
//!   `g_i <= 0` and `lambda_i g_i = -eps`.

use thiserror::Error;

use crate::barrier::{fb_eval, psi_eval, BarrierEval};
use crate::bvpdae::{fd_columns, DaeDims, DaeProblem, DaeSolution, EvalError, PointJacobian};
use crate::ocp::{OcpDims, OcpSpec};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    Primal,
    PrimalDual,
}

impl Formulation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Formulation::Primal => "primal",
            Formulation::PrimalDual => "primal-dual",
        }
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranscriptionError {
    #[error("problem '{0}' has a free final time; apply to_fixed_time first")]
    FreeHorizon(String),
    #[error("barrier parameter must be positive and finite, got {0}")]
    InvalidEps(f64),
    #[error("{kind} constraint {index} is not strictly satisfied at node {node} (value {value:e})")]
    NotInterior { node: usize, kind: &'static str, index: usize, value: f64 },
    #[error("solution does not match the system dimensions")]
    Shape,
}

/// The DAE obtained from an [`OcpSpec`] at barrier parameter `eps`.
#[derive(Debug, Clone)]
pub struct DaeSystem {
    spec: OcpSpec,
    formulation: Formulation,
    eps: f64,
    horizon: f64,
    d: OcpDims,
}

/// Inequality multipliers at the mesh nodes, one row per node.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Multipliers {
    pub state: Vec<Vec<f64>>,
    pub mixed: Vec<Vec<f64>>,
}

/// Barrier weights `eps psi'(v)` and `eps psi''(v)` of a constraint vector.
fn barrier_weights(values: &[f64], eps: f64) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let mut w1 = Vec::with_capacity(values.len());
    let mut w2 = Vec::with_capacity(values.len());
    for &v in values {
        match psi_eval(v).map_err(|_| EvalError::Domain)? {
            BarrierEval::Finite { first, second, .. } => {
                w1.push(eps * first);
                w2.push(eps * second);
            }
            BarrierEval::Infinite => return Err(EvalError::Domain),
        }
    }
    Ok((w1, w2))
}

fn finite(v: &[f64]) -> Result<(), EvalError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(EvalError::Domain)
    }
}

impl DaeSystem {
    pub fn new(spec: &OcpSpec, formulation: Formulation, eps: f64) -> Result<Self, TranscriptionError> {
        let horizon = spec.fixed_horizon().ok_or_else(|| TranscriptionError::FreeHorizon(spec.name.clone()))?;
        if !(eps.is_finite() && eps > 0.0) {
            return Err(TranscriptionError::InvalidEps(eps));
        }
        let d = spec.dims();
        let sys = DaeSystem { spec: spec.clone(), formulation, eps, horizon, d };
        let dims = sys.dims();
        debug_assert_eq!(dims.n_y + dims.n_p, 2 * d.n + d.n_h);
        Ok(sys)
    }

    pub fn primal(spec: &OcpSpec, eps: f64) -> Result<Self, TranscriptionError> {
        DaeSystem::new(spec, Formulation::Primal, eps)
    }

    pub fn primal_dual(spec: &OcpSpec, eps: f64) -> Result<Self, TranscriptionError> {
        DaeSystem::new(spec, Formulation::PrimalDual, eps)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn set_eps(&mut self, eps: f64) -> Result<(), TranscriptionError> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(TranscriptionError::InvalidEps(eps));
        }
        self.eps = eps;
        Ok(())
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn spec(&self) -> &OcpSpec {
        &self.spec
    }

    pub fn ocp_dims(&self) -> OcpDims {
        self.d
    }

    /// `(x, p)` views of a differential vector.
    pub fn split_y<'a>(&self, y: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        y.split_at(self.d.n)
    }

    /// `(u, lambda_g, lambda_c)` views of an algebraic vector; the multiplier
    /// slices are empty in the primal formulation.
    pub fn split_z<'a>(&self, z: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let (u, rest) = z.split_at(self.d.m);
        if rest.is_empty() {
            return (u, rest, rest);
        }
        let (lg, lc) = rest.split_at(self.d.n_g);
        (u, lg, lc)
    }

    /// `l_x + f_x^T p + g_x^T w + c_x^T v` and `l_u + f_u^T p + c_u^T v` with
    /// the weights `w`, `v` held fixed.
    fn weighted_gradients(&self, x: &[f64], u: &[f64], p: &[f64], w: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let fun = self.spec.functions();
        let (fx, fu) = fun.dynamics_jacobian(x, u);
        let (mut sx, mut su) = fun.running_cost_gradient(x, u);
        add(&mut sx, &fx.tr_mul_vec(p));
        add(&mut su, &fu.tr_mul_vec(p));
        if self.d.n_g > 0 {
            add(&mut sx, &fun.state_constraints_jacobian(x).tr_mul_vec(w));
        }
        if self.d.n_c > 0 {
            let (cx, cu) = fun.mixed_constraints_jacobian(x, u);
            add(&mut sx, &cx.tr_mul_vec(v));
            add(&mut su, &cu.tr_mul_vec(v));
        }
        (sx, su)
    }

    /// Partial derivatives of [`Self::weighted_gradients`] in `x` and `u`, by
    /// central differences of the first-derivative callbacks.
    fn frozen_hessians(&self, x: &[f64], u: &[f64], p: &[f64], w: &[f64], v: &[f64]) -> (Matrix, Matrix, Matrix, Matrix) {
        let (n, m) = (self.d.n, self.d.m);
        let mut sxx = Matrix::zeros(n, n);
        let mut sxu = Matrix::zeros(n, m);
        let mut sux = Matrix::zeros(m, n);
        let mut suu = Matrix::zeros(m, m);
        let both = n + m;
        let mut gx = Matrix::zeros(both, n);
        let mut gu = Matrix::zeros(both, m);
        let stack = |a: Vec<f64>, b: Vec<f64>, out: &mut [f64]| {
            out[..n].copy_from_slice(&a);
            out[n..].copy_from_slice(&b);
        };
        fd_columns(x, both, &mut gx, 0, |xx, out| {
            let (a, b) = self.weighted_gradients(xx, u, p, w, v);
            stack(a, b, out);
            Ok(())
        })
        .expect("frozen gradients are total");
        fd_columns(u, both, &mut gu, 0, |uu, out| {
            let (a, b) = self.weighted_gradients(x, uu, p, w, v);
            stack(a, b, out);
            Ok(())
        })
        .expect("frozen gradients are total");
        for i in 0..n {
            for j in 0..n {
                sxx[(i, j)] = gx[(i, j)];
            }
            for j in 0..m {
                sxu[(i, j)] = gu[(i, j)];
            }
        }
        for i in 0..m {
            for j in 0..n {
                sux[(i, j)] = gx[(n + i, j)];
            }
            for j in 0..m {
                suu[(i, j)] = gu[(n + i, j)];
            }
        }
        (sxx, sxu, sux, suu)
    }

    /// Inequality multipliers at every node of a solution: read from the
    /// algebraic unknowns in primal-dual form, or `-eps / g` in primal form.
    pub fn multipliers(&self, sol: &DaeSolution) -> Result<Multipliers, TranscriptionError> {
        if sol.dims != self.dims() {
            return Err(TranscriptionError::Shape);
        }
        match self.formulation {
            Formulation::PrimalDual => {
                let mut out = Multipliers { state: Vec::new(), mixed: Vec::new() };
                for i in 0..sol.n_nodes() {
                    let (_, lg, lc) = self.split_z(sol.z_at(i));
                    out.state.push(lg.to_vec());
                    out.mixed.push(lc.to_vec());
                }
                Ok(out)
            }
            Formulation::Primal => recover_multipliers(&self.spec, sol, self.eps),
        }
    }
}

fn add(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Eliminated multipliers `lambda = -eps / g` of a primal solution. Fails,
/// naming the node and constraint, if any constraint is not strictly negative.
pub fn recover_multipliers(spec: &OcpSpec, sol: &DaeSolution, eps: f64) -> Result<Multipliers, TranscriptionError> {
    let d = spec.dims();
    if sol.dims.n_y != 2 * d.n || sol.dims.n_z < d.m {
        return Err(TranscriptionError::Shape);
    }
    let fun = spec.functions();
    let mut out = Multipliers { state: Vec::new(), mixed: Vec::new() };
    for i in 0..sol.n_nodes() {
        let x = &sol.y_at(i)[..d.n];
        let u = &sol.z_at(i)[..d.m];
        let mut row = Vec::with_capacity(d.n_g);
        for (k, g) in fun.state_constraints(x).into_iter().enumerate() {
            if !(g < 0.0) {
                return Err(TranscriptionError::NotInterior { node: i, kind: "state", index: k, value: g });
            }
            row.push(-eps / g);
        }
        out.state.push(row);
        let mut row = Vec::with_capacity(d.n_c);
        for (k, c) in fun.mixed_constraints(x, u).into_iter().enumerate() {
            if !(c < 0.0) {
                return Err(TranscriptionError::NotInterior { node: i, kind: "mixed", index: k, value: c });
            }
            row.push(-eps / c);
        }
        out.mixed.push(row);
    }
    Ok(out)
}

impl DaeProblem for DaeSystem {
    fn dims(&self) -> DaeDims {
        let d = self.d;
        let n_z = match self.formulation {
            Formulation::Primal => d.m,
            Formulation::PrimalDual => d.m + d.n_g + d.n_c,
        };
        DaeDims { n_y: 2 * d.n, n_z, n_p: d.n_h }
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn rhs(&self, _t: f64, y: &[f64], z: &[f64], _lam: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let n = self.d.n;
        let fun = self.spec.functions();
        let (x, p) = self.split_y(y);
        let (u, lg, lc) = self.split_z(z);
        let f = fun.dynamics(x, u);
        finite(&f)?;
        out[..n].copy_from_slice(&f);
        let (w, v) = match self.formulation {
            Formulation::Primal => {
                let g = fun.state_constraints(x);
                let c = fun.mixed_constraints(x, u);
                (barrier_weights(&g, self.eps)?.0, barrier_weights(&c, self.eps)?.0)
            }
            Formulation::PrimalDual => (lg.to_vec(), lc.to_vec()),
        };
        let (sx, _) = self.weighted_gradients(x, u, p, &w, &v);
        finite(&sx)?;
        for k in 0..n {
            out[n + k] = -sx[k];
        }
        Ok(())
    }

    fn alg(&self, _t: f64, y: &[f64], z: &[f64], _lam: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let m = self.d.m;
        let fun = self.spec.functions();
        let (x, p) = self.split_y(y);
        let (u, lg, lc) = self.split_z(z);
        match self.formulation {
            Formulation::Primal => {
                let g = fun.state_constraints(x);
                let c = fun.mixed_constraints(x, u);
                barrier_weights(&g, self.eps)?;
                let v = barrier_weights(&c, self.eps)?.0;
                let (_, su) = self.weighted_gradients(x, u, p, &vec![0.0; self.d.n_g], &v);
                out[..m].copy_from_slice(&su);
            }
            Formulation::PrimalDual => {
                let (_, su) = self.weighted_gradients(x, u, p, lg, lc);
                out[..m].copy_from_slice(&su);
                let g = fun.state_constraints(x);
                let c = fun.mixed_constraints(x, u);
                for (k, (&l, &gv)) in lg.iter().zip(&g).enumerate() {
                    out[m + k] = fb_eval(l, gv, self.eps).map_err(|_| EvalError::Singular)?.value;
                }
                let off = m + self.d.n_g;
                for (k, (&l, &cv)) in lc.iter().zip(&c).enumerate() {
                    out[off + k] = fb_eval(l, cv, self.eps).map_err(|_| EvalError::Singular)?.value;
                }
            }
        }
        finite(out)
    }

    fn bc(&self, ya: &[f64], yb: &[f64], lam: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        let d = self.d;
        let fun = self.spec.functions();
        let (x0, p0) = self.split_y(ya);
        let (xt, pt) = self.split_y(yb);
        let h = fun.boundary(x0, xt);
        let (h0, ht) = fun.boundary_jacobian(x0, xt);
        let dphi = fun.terminal_cost_gradient(xt);
        let a = h0.tr_mul_vec(lam);
        let b = ht.tr_mul_vec(lam);
        out[..d.n_h].copy_from_slice(&h);
        for k in 0..d.n {
            out[d.n_h + k] = p0[k] + a[k];
            out[d.n_h + d.n + k] = pt[k] - dphi[k] - b[k];
        }
        finite(out)
    }

    fn point_jacobian(
        &self,
        _t: f64,
        y: &[f64],
        z: &[f64],
        _lam: &[f64],
        jac: &mut PointJacobian,
    ) -> Result<(), EvalError> {
        let OcpDims { n, m, n_g, n_c, .. } = self.d;
        let fun = self.spec.functions();
        let (x, p) = self.split_y(y);
        let (u, lg, lc) = self.split_z(z);
        let (fx, fu) = fun.dynamics_jacobian(x, u);
        let gx = fun.state_constraints_jacobian(x);
        let (cx, cu) = fun.mixed_constraints_jacobian(x, u);
        let g = fun.state_constraints(x);
        let c = fun.mixed_constraints(x, u);

        let (w, v, w2, v2) = match self.formulation {
            Formulation::Primal => {
                let (w, w2) = barrier_weights(&g, self.eps)?;
                let (v, v2) = barrier_weights(&c, self.eps)?;
                (w, v, w2, v2)
            }
            Formulation::PrimalDual => (lg.to_vec(), lc.to_vec(), vec![0.0; n_g], vec![0.0; n_c]),
        };
        let (mut sxx, mut sxu, mut sux, mut suu) = self.frozen_hessians(x, u, p, &w, &v);
        if self.formulation == Formulation::Primal {
            // derivatives of the barrier weights themselves
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for k in 0..n_g {
                        s += gx[(k, i)] * w2[k] * gx[(k, j)];
                    }
                    for k in 0..n_c {
                        s += cx[(k, i)] * v2[k] * cx[(k, j)];
                    }
                    sxx[(i, j)] += s;
                }
                for j in 0..m {
                    let s: f64 = (0..n_c).map(|k| cx[(k, i)] * v2[k] * cu[(k, j)]).sum();
                    sxu[(i, j)] += s;
                    sux[(j, i)] += s;
                }
            }
            for i in 0..m {
                for j in 0..m {
                    suu[(i, j)] += (0..n_c).map(|k| cu[(k, i)] * v2[k] * cu[(k, j)]).sum::<f64>();
                }
            }
        }

        jac.fy.fill(0.0);
        jac.fz.fill(0.0);
        jac.fp.fill(0.0);
        jac.gy.fill(0.0);
        jac.gz.fill(0.0);
        jac.gp.fill(0.0);
        for i in 0..n {
            for j in 0..n {
                jac.fy[(i, j)] = fx[(i, j)];
                jac.fy[(n + i, j)] = -sxx[(i, j)];
                jac.fy[(n + i, n + j)] = -fx[(j, i)];
            }
            for j in 0..m {
                jac.fz[(i, j)] = fu[(i, j)];
                jac.fz[(n + i, j)] = -sxu[(i, j)];
            }
        }
        for i in 0..m {
            for j in 0..n {
                jac.gy[(i, j)] = sux[(i, j)];
                jac.gy[(i, n + j)] = fu[(j, i)];
            }
            for j in 0..m {
                jac.gz[(i, j)] = suu[(i, j)];
            }
        }
        if self.formulation == Formulation::PrimalDual {
            let (og, oc) = (m, m + n_g);
            for k in 0..n_g {
                for i in 0..n {
                    jac.fz[(n + i, og + k)] = -gx[(k, i)];
                }
                let e = fb_eval(lg[k], g[k], self.eps).map_err(|_| EvalError::Singular)?;
                jac.gz[(og + k, og + k)] = e.dx;
                for j in 0..n {
                    jac.gy[(og + k, j)] = e.dy * gx[(k, j)];
                }
            }
            for k in 0..n_c {
                for i in 0..n {
                    jac.fz[(n + i, oc + k)] = -cx[(k, i)];
                }
                for i in 0..m {
                    jac.gz[(i, oc + k)] = cu[(k, i)];
                }
                let e = fb_eval(lc[k], c[k], self.eps).map_err(|_| EvalError::Singular)?;
                jac.gz[(oc + k, oc + k)] = e.dx;
                for j in 0..n {
                    jac.gy[(oc + k, j)] = e.dy * cx[(k, j)];
                }
                for j in 0..m {
                    jac.gz[(oc + k, j)] = e.dy * cu[(k, j)];
                }
            }
        }
        let all = [&jac.fy, &jac.fz, &jac.gy, &jac.gz];
        if all.iter().all(|mtx| mtx.is_finite()) {
            Ok(())
        } else {
            Err(EvalError::Domain)
        }
    }
}
