//! Checks of a computed trajectory against the first-order optimality system
//! of the original constrained problem.

use crate::barrier::fb_value;
use crate::continuation::OcpTrajectory;
use crate::ocp::OcpSpec;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Trapezoidal integral of samples `f` on the nodes `t`.
pub fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2).zip(f.windows(2)).map(|(s, v)| 0.5 * (s[1] - s[0]) * (v[0] + v[1])).sum()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KktReport {
    pub eps: f64,
    pub horizon: f64,
    /// `max_t |H_u + c_u^T lambda_c|`.
    pub stationarity_res: f64,
    /// Largest interval defect of the adjoint equation with `lambda_g` as the
    /// measure density (trapezoidal rule).
    pub adjoint_res: f64,
    /// `[|h|, |p(0) + h_0^T lambda|, |p(T) - phi' - h_T^T lambda|]`.
    pub bc_res: [f64; 3],
    /// `max_i |int g_i lambda_g_i dt|`.
    pub comp_state: f64,
    /// `max_i |int g_i lambda_g_i dt + eps T|`.
    pub comp_state_gap: f64,
    /// `max_i |int c_i lambda_c_i dt|`.
    pub comp_mixed: f64,
    /// `max_i |int c_i lambda_c_i dt + eps T|`.
    pub comp_mixed_gap: f64,
    /// Per constraint `int g_i lambda_g_i dt`.
    pub comp_state_each: Vec<f64>,
    pub comp_mixed_each: Vec<f64>,
    /// Magnitude of the most negative multiplier value, zero if none.
    pub nonneg_viol: f64,
    /// `max |FB(lambda, constraint, eps)|` over nodes and constraints.
    pub fb_res: f64,
    /// `max |lambda g + eps|` over nodes and constraints, both kinds.
    pub pointwise_comp: f64,
    pub interiority_margin_g: Vec<f64>,
    pub interiority_margin_c: Vec<f64>,
    pub multiplier_l1_g: Vec<f64>,
    pub multiplier_l1_c: Vec<f64>,
}

/// Largest node value of every constraint.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interiority {
    pub margin_g: Vec<f64>,
    pub margin_c: Vec<f64>,
}

impl Interiority {
    pub fn strictly_interior(&self) -> bool {
        self.margin_g.iter().chain(&self.margin_c).all(|m| *m < 0.0)
    }
}

pub fn interiority_check(spec: &OcpSpec, traj: &OcpTrajectory) -> Interiority {
    let fun = spec.functions();
    let d = spec.dims();
    let mut margin_g = vec![f64::NEG_INFINITY; d.n_g];
    let mut margin_c = vec![f64::NEG_INFINITY; d.n_c];
    for (x, u) in traj.x.iter().zip(&traj.u) {
        for (m, g) in margin_g.iter_mut().zip(fun.state_constraints(x)) {
            *m = m.max(g);
        }
        for (m, c) in margin_c.iter_mut().zip(fun.mixed_constraints(x, u)) {
            *m = m.max(c);
        }
    }
    Interiority { margin_g, margin_c }
}

/// `mu(t) = -int_t^T lambda_g_i ds` at every node, so `mu(T) = 0`.
pub fn cumulative_measure(traj: &OcpTrajectory, i: usize) -> Vec<f64> {
    let n = traj.len();
    let mut mu = vec![0.0; n];
    for k in (0..n - 1).rev() {
        let h = traj.t[k + 1] - traj.t[k];
        mu[k] = mu[k + 1] - 0.5 * h * (traj.lambda_g[k][i] + traj.lambda_g[k + 1][i]);
    }
    mu
}

/// Terminal cost plus trapezoidal integral of the running cost.
pub fn objective(spec: &OcpSpec, traj: &OcpTrajectory) -> f64 {
    let fun = spec.functions();
    let l: Vec<f64> = traj.x.iter().zip(&traj.u).map(|(x, u)| fun.running_cost(x, u)).collect();
    trapezoid(&traj.t, &l) + fun.terminal_cost(&traj.x[traj.len() - 1])
}

/// `-(l_x + f_x^T p + g_x^T lambda_g + c_x^T lambda_c)` at node `k`.
fn adjoint_rhs(spec: &OcpSpec, traj: &OcpTrajectory, k: usize) -> Vec<f64> {
    let fun = spec.functions();
    let (x, u, p) = (&traj.x[k], &traj.u[k], &traj.p[k]);
    let (lx, _) = fun.running_cost_gradient(x, u);
    let (fx, _) = fun.dynamics_jacobian(x, u);
    let gx = fun.state_constraints_jacobian(x);
    let (cx, _) = fun.mixed_constraints_jacobian(x, u);
    let a = fx.tr_mul_vec(p);
    let b = gx.tr_mul_vec(&traj.lambda_g[k]);
    let c = cx.tr_mul_vec(&traj.lambda_c[k]);
    (0..x.len()).map(|i| -(lx[i] + a[i] + b[i] + c[i])).collect()
}

/// Evaluates the optimality system on a trajectory at barrier value `eps`.
pub fn kkt_report(spec: &OcpSpec, traj: &OcpTrajectory, eps: f64) -> KktReport {
    let fun = spec.functions();
    let d = spec.dims();
    let n = traj.len();
    let horizon = traj.t[n - 1] - traj.t[0];

    let mut stationarity_res = 0.0f64;
    let mut g_vals = Vec::with_capacity(n);
    let mut c_vals = Vec::with_capacity(n);
    for k in 0..n {
        let (x, u, p) = (&traj.x[k], &traj.u[k], &traj.p[k]);
        let (_, lu) = fun.running_cost_gradient(x, u);
        let (_, fu) = fun.dynamics_jacobian(x, u);
        let (_, cu) = fun.mixed_constraints_jacobian(x, u);
        let a = fu.tr_mul_vec(p);
        let b = cu.tr_mul_vec(&traj.lambda_c[k]);
        let r: Vec<f64> = (0..d.m).map(|j| lu[j] + a[j] + b[j]).collect();
        stationarity_res = stationarity_res.max(inf_norm(&r));
        g_vals.push(fun.state_constraints(x));
        c_vals.push(fun.mixed_constraints(x, u));
    }

    let mut adjoint_res = 0.0f64;
    let mut prev = adjoint_rhs(spec, traj, 0);
    for k in 0..n - 1 {
        let next = adjoint_rhs(spec, traj, k + 1);
        let h = traj.t[k + 1] - traj.t[k];
        for i in 0..d.n {
            let defect = (traj.p[k + 1][i] - traj.p[k][i]) / h - 0.5 * (prev[i] + next[i]);
            adjoint_res = adjoint_res.max(defect.abs());
        }
        prev = next;
    }

    let (x0, xt) = (&traj.x[0], &traj.x[n - 1]);
    let (h0, ht) = fun.boundary_jacobian(x0, xt);
    let a = h0.tr_mul_vec(&traj.lambda);
    let b = ht.tr_mul_vec(&traj.lambda);
    let dphi = fun.terminal_cost_gradient(xt);
    let start: Vec<f64> = (0..d.n).map(|i| traj.p[0][i] + a[i]).collect();
    let end: Vec<f64> = (0..d.n).map(|i| traj.p[n - 1][i] - dphi[i] - b[i]).collect();
    let bc_res = [inf_norm(&fun.boundary(x0, xt)), inf_norm(&start), inf_norm(&end)];

    let integral = |vals: &[Vec<f64>], lam: &[Vec<f64>], i: usize| {
        let f: Vec<f64> = (0..n).map(|k| vals[k][i] * lam[k][i]).collect();
        trapezoid(&traj.t, &f)
    };
    let l1 = |lam: &[Vec<f64>], i: usize| {
        let f: Vec<f64> = lam.iter().map(|l| l[i].abs()).collect();
        trapezoid(&traj.t, &f)
    };
    let comp_state_each: Vec<f64> = (0..d.n_g).map(|i| integral(&g_vals, &traj.lambda_g, i)).collect();
    let comp_mixed_each: Vec<f64> = (0..d.n_c).map(|i| integral(&c_vals, &traj.lambda_c, i)).collect();
    let max_abs = |v: &[f64], shift: f64| v.iter().fold(0.0f64, |m, c| m.max((c + shift).abs()));

    let mut nonneg_viol = 0.0f64;
    let mut fb_res = 0.0f64;
    let mut pointwise_comp = 0.0f64;
    for k in 0..n {
        let pairs = traj.lambda_g[k].iter().zip(&g_vals[k]).chain(traj.lambda_c[k].iter().zip(&c_vals[k]));
        for (&lam, &g) in pairs {
            nonneg_viol = nonneg_viol.max(-lam);
            pointwise_comp = pointwise_comp.max((lam * g + eps).abs());
            let fb = fb_value(lam, g, eps).unwrap_or(f64::INFINITY);
            fb_res = fb_res.max(fb.abs());
        }
    }

    let margins = interiority_check(spec, traj);
    KktReport {
        eps,
        horizon,
        stationarity_res,
        adjoint_res,
        bc_res,
        comp_state: max_abs(&comp_state_each, 0.0),
        comp_state_gap: max_abs(&comp_state_each, eps * horizon),
        comp_mixed: max_abs(&comp_mixed_each, 0.0),
        comp_mixed_gap: max_abs(&comp_mixed_each, eps * horizon),
        comp_state_each,
        comp_mixed_each,
        nonneg_viol,
        fb_res,
        pointwise_comp,
        interiority_margin_g: margins.margin_g,
        interiority_margin_c: margins.margin_c,
        multiplier_l1_g: (0..d.n_g).map(|i| l1(&traj.lambda_g, i)).collect(),
        multiplier_l1_c: (0..d.n_c).map(|i| l1(&traj.lambda_c, i)).collect(),
    }
}
