//! Collocation solver for two-point boundary value problems on semi-explicit
//! index-1 DAEs with unknown parameters:
//!
//! ```text
//! y' = F(t, y, z, p),   0 = G(t, y, z, p),   0 = R(y(0), y(T), p)
//! ```
//!
//! The differential part uses 3-stage Lobatto IIIA collocation (the
//! Hermite-Simpson scheme) and algebraic unknowns live at mesh nodes and
//! interval midpoints, with `G` enforced at both. Newton steps are damped by a
//! halving line search that treats evaluation failures (points outside a
//! barrier domain) as infinite merit. After each Newton solve the defect of the
//! C1 cubic interpolant is estimated per interval and the mesh is adapted.

mod collocation;
mod mesh;
mod newton;

use thiserror::Error;

use crate::linalg::{DMat, LinalgError};
use crate::Matrix;

pub use mesh::{estimate_residual, interpolate, refine_mesh, Mesh, MeshError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DaeDims {
    pub n_y: usize,
    pub n_z: usize,
    pub n_p: usize,
}

/// Why a DAE function could not be evaluated at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    /// The point lies outside the function's domain (e.g. a barrier argument
    /// is not strictly negative).
    #[error("point outside the domain")]
    Domain,
    #[error("singular derivative")]
    Singular,
}

/// Pointwise Jacobians of `F` and `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointJacobian {
    pub fy: Matrix,
    pub fz: Matrix,
    pub fp: Matrix,
    pub gy: Matrix,
    pub gz: Matrix,
    pub gp: Matrix,
}

impl PointJacobian {
    pub fn zeros(d: DaeDims) -> Self {
        PointJacobian {
            fy: DMat::zeros(d.n_y, d.n_y),
            fz: DMat::zeros(d.n_y, d.n_z),
            fp: DMat::zeros(d.n_y, d.n_p),
            gy: DMat::zeros(d.n_z, d.n_y),
            gz: DMat::zeros(d.n_z, d.n_z),
            gp: DMat::zeros(d.n_z, d.n_p),
        }
    }
}

/// Jacobian of the boundary map with respect to `y(0)`, `y(T)` and `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BcJacobian {
    pub ya: Matrix,
    pub yb: Matrix,
    pub p: Matrix,
}

impl BcJacobian {
    pub fn zeros(d: DaeDims) -> Self {
        let nb = d.n_y + d.n_p;
        BcJacobian { ya: DMat::zeros(nb, d.n_y), yb: DMat::zeros(nb, d.n_y), p: DMat::zeros(nb, d.n_p) }
    }
}

/// A semi-explicit index-1 boundary value DAE on `[0, horizon]`.
///
/// Jacobians default to central differences with step
/// `cbrt(machine eps) * (1 + |v|)`; implementors with better derivative
/// information override them.
pub trait DaeProblem {
    fn dims(&self) -> DaeDims;
    fn horizon(&self) -> f64;

    fn rhs(&self, t: f64, y: &[f64], z: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), EvalError>;
    fn alg(&self, t: f64, y: &[f64], z: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), EvalError>;
    /// Boundary residual of length `n_y + n_p`.
    fn bc(&self, ya: &[f64], yb: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), EvalError>;

    fn point_jacobian(
        &self,
        t: f64,
        y: &[f64],
        z: &[f64],
        p: &[f64],
        jac: &mut PointJacobian,
    ) -> Result<(), EvalError> {
        fd_point_jacobian(self, t, y, z, p, jac)
    }

    fn bc_jacobian(&self, ya: &[f64], yb: &[f64], p: &[f64], jac: &mut BcJacobian) -> Result<(), EvalError> {
        fd_bc_jacobian(self, ya, yb, p, jac)
    }
}

/// Central difference of `eval` in every coordinate of `v`, written into
/// column `col0 + j` of `out`. Falls back to a one-sided quotient when one
/// of the two probes leaves the domain.
pub fn fd_columns(
    v: &[f64],
    rows: usize,
    out: &mut Matrix,
    col0: usize,
    mut eval: impl FnMut(&[f64], &mut [f64]) -> Result<(), EvalError>,
) -> Result<(), EvalError> {
    let sqrt_eps = f64::EPSILON.sqrt();
    let cbrt_eps = f64::EPSILON.cbrt();
    let mut w = v.to_vec();
    let mut base = vec![0.0; rows];
    let mut have_base = false;
    let mut fp = vec![0.0; rows];
    let mut fm = vec![0.0; rows];
    for j in 0..v.len() {
        let h = cbrt_eps * (1.0 + v[j].abs());
        w[j] = v[j] + h;
        let up = eval(&w, &mut fp);
        w[j] = v[j] - h;
        let down = eval(&w, &mut fm);
        let (hi, lo, span): (&[f64], &[f64], f64) = match (up, down) {
            (Ok(()), Ok(())) => (&fp, &fm, 2.0 * h),
            (Err(e), Err(_)) => return Err(e),
            _ => {
                if !have_base {
                    w[j] = v[j];
                    eval(&w, &mut base)?;
                    have_base = true;
                }
                let h = sqrt_eps * (1.0 + v[j].abs());
                w[j] = v[j] + h;
                if eval(&w, &mut fp).is_ok() {
                    (&fp, &base, h)
                } else {
                    w[j] = v[j] - h;
                    eval(&w, &mut fm)?;
                    (&base, &fm, h)
                }
            }
        };
        w[j] = v[j];
        for i in 0..rows {
            out[(i, col0 + j)] = (hi[i] - lo[i]) / span;
        }
    }
    Ok(())
}

pub fn fd_point_jacobian<P: DaeProblem + ?Sized>(
    problem: &P,
    t: f64,
    y: &[f64],
    z: &[f64],
    p: &[f64],
    jac: &mut PointJacobian,
) -> Result<(), EvalError> {
    let d = problem.dims();
    fd_columns(y, d.n_y, &mut jac.fy, 0, |w, o| problem.rhs(t, w, z, p, o))?;
    fd_columns(z, d.n_y, &mut jac.fz, 0, |w, o| problem.rhs(t, y, w, p, o))?;
    fd_columns(p, d.n_y, &mut jac.fp, 0, |w, o| problem.rhs(t, y, z, w, o))?;
    fd_columns(y, d.n_z, &mut jac.gy, 0, |w, o| problem.alg(t, w, z, p, o))?;
    fd_columns(z, d.n_z, &mut jac.gz, 0, |w, o| problem.alg(t, y, w, p, o))?;
    fd_columns(p, d.n_z, &mut jac.gp, 0, |w, o| problem.alg(t, y, z, w, o))?;
    Ok(())
}

pub fn fd_bc_jacobian<P: DaeProblem + ?Sized>(
    problem: &P,
    ya: &[f64],
    yb: &[f64],
    p: &[f64],
    jac: &mut BcJacobian,
) -> Result<(), EvalError> {
    let d = problem.dims();
    let nb = d.n_y + d.n_p;
    fd_columns(ya, nb, &mut jac.ya, 0, |w, o| problem.bc(w, yb, p, o))?;
    fd_columns(yb, nb, &mut jac.yb, 0, |w, o| problem.bc(ya, w, p, o))?;
    fd_columns(p, nb, &mut jac.p, 0, |w, o| problem.bc(ya, yb, w, o))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverOptions {
    /// Infinity norm bound on the scaled collocation/algebraic/boundary residual.
    pub newton_tol: f64,
    /// Bound on the per-interval defect estimate.
    pub mesh_tol: f64,
    /// Newton iterations allowed on one mesh.
    pub max_newton: usize,
    pub max_mesh_points: usize,
    /// Smallest damping factor tried by the halving line search.
    pub min_damping: f64,
    /// Solve/refine rounds before giving up.
    pub max_mesh_rounds: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            newton_tol: 1e-8,
            mesh_tol: 1e-6,
            max_newton: 50,
            max_mesh_points: 10_000,
            min_damping: 1e-10,
            max_mesh_rounds: 30,
        }
    }
}

impl SolverOptions {
    pub fn check(&self) -> Result<(), BvpError> {
        let ok = self.newton_tol > 0.0
            && self.newton_tol < 1.0
            && self.mesh_tol > 0.0
            && self.max_newton > 0
            && self.max_mesh_points > 2
            && self.min_damping > 0.0
            && self.min_damping <= 1.0
            && self.max_mesh_rounds > 0;
        if ok {
            Ok(())
        } else {
            Err(BvpError::InvalidInput(format!("invalid solver options {self:?}")))
        }
    }
}

/// Discrete solution (or initial guess) of a boundary value DAE.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DaeSolution {
    pub dims: DaeDims,
    pub mesh: Mesh,
    /// Differential values at nodes, row-major `(N+1) x n_y`.
    pub y: Vec<f64>,
    /// Algebraic values at nodes, `(N+1) x n_z`.
    pub z: Vec<f64>,
    /// Algebraic values at interval midpoints, `N x n_z`.
    pub z_mid: Vec<f64>,
    pub params: Vec<f64>,
    /// `F` at the nodes, needed by the C1 interpolant. Empty on raw guesses.
    pub yp: Vec<f64>,
    pub interval_residuals: Vec<f64>,
    /// Newton iterations summed over all mesh rounds of the last solve.
    pub newton_iters: usize,
    /// Residual infinity norms of the final Newton run, one per iterate.
    pub residual_history: Vec<f64>,
    pub mesh_rounds: usize,
    pub converged: bool,
}

impl DaeSolution {
    /// Builds a guess from node values; midpoint algebraic values are the
    /// averages of the neighbouring nodes.
    pub fn guess(dims: DaeDims, mesh: Mesh, y: &[Vec<f64>], z: &[Vec<f64>], params: &[f64]) -> Result<Self, BvpError> {
        let nn = mesh.len();
        if y.len() != nn || z.len() != nn || params.len() != dims.n_p {
            return Err(BvpError::InvalidInput("guess arrays do not match the mesh".into()));
        }
        if y.iter().any(|r| r.len() != dims.n_y) || z.iter().any(|r| r.len() != dims.n_z) {
            return Err(BvpError::InvalidInput("guess row lengths do not match the dimensions".into()));
        }
        let flat_y: Vec<f64> = y.iter().flatten().copied().collect();
        let flat_z: Vec<f64> = z.iter().flatten().copied().collect();
        let mut z_mid = Vec::with_capacity((nn - 1) * dims.n_z);
        for i in 0..nn - 1 {
            z_mid.extend(z[i].iter().zip(&z[i + 1]).map(|(a, b)| 0.5 * (a + b)));
        }
        Ok(DaeSolution {
            dims,
            mesh,
            y: flat_y,
            z: flat_z,
            z_mid,
            params: params.to_vec(),
            yp: Vec::new(),
            interval_residuals: Vec::new(),
            newton_iters: 0,
            residual_history: Vec::new(),
            mesh_rounds: 0,
            converged: false,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.len()
    }

    pub fn n_intervals(&self) -> usize {
        self.mesh.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        self.mesh.nodes()
    }

    pub fn y_at(&self, i: usize) -> &[f64] {
        &self.y[i * self.dims.n_y..(i + 1) * self.dims.n_y]
    }

    pub fn z_at(&self, i: usize) -> &[f64] {
        &self.z[i * self.dims.n_z..(i + 1) * self.dims.n_z]
    }

    pub fn z_mid_at(&self, i: usize) -> &[f64] {
        &self.z_mid[i * self.dims.n_z..(i + 1) * self.dims.n_z]
    }

    pub fn yp_at(&self, i: usize) -> Option<&[f64]> {
        if self.yp.is_empty() {
            None
        } else {
            Some(&self.yp[i * self.dims.n_y..(i + 1) * self.dims.n_y])
        }
    }

    /// Component `k` of `y` at every node.
    pub fn y_component(&self, k: usize) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.y_at(i)[k]).collect()
    }

    pub fn z_component(&self, k: usize) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.z_at(i)[k]).collect()
    }

    fn check_shape(&self, dims: DaeDims) -> Result<(), BvpError> {
        let nn = self.mesh.len();
        let ok = self.dims == dims
            && self.y.len() == nn * dims.n_y
            && self.z.len() == nn * dims.n_z
            && self.z_mid.len() == (nn - 1) * dims.n_z
            && self.params.len() == dims.n_p;
        if !ok {
            return Err(BvpError::InvalidInput(format!(
                "guess shape does not match problem dimensions {dims:?}"
            )));
        }
        let finite = self.y.iter().chain(&self.z).chain(&self.z_mid).chain(&self.params).all(|v| v.is_finite());
        if !finite {
            return Err(BvpError::InvalidInput("guess contains non-finite values".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error)]
pub enum BvpError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The initial guess (or every damped Newton trial) lies outside the
    /// problem's domain.
    #[error("infeasible start: {0}")]
    InfeasibleStart(String),
    #[error("Newton iteration did not converge: {reason}")]
    NoConvergence { reason: String, best: Box<DaeSolution> },
    #[error("mesh would exceed {limit} points")]
    MeshLimit { limit: usize, best: Box<DaeSolution> },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl BvpError {
    /// Best iterate carried by the error, if any.
    pub fn best(&self) -> Option<&DaeSolution> {
        match self {
            BvpError::NoConvergence { best, .. } | BvpError::MeshLimit { best, .. } => Some(best),
            _ => None,
        }
    }
}

impl From<LinalgError> for EvalError {
    fn from(_: LinalgError) -> Self {
        EvalError::Singular
    }
}

/// Largest relative deviation `|J - J_fd| / (1 + |J_fd|)` between the
/// assembled Newton matrix at `sol` and central differences of the
/// collocation residual with step `1e-6 (1 + |x_j|)`.
pub fn jacobian_deviation<P: DaeProblem + ?Sized>(problem: &P, sol: &DaeSolution) -> Result<f64, BvpError> {
    sol.check_shape(problem.dims())?;
    let eval_err = |e: EvalError| BvpError::InvalidInput(format!("evaluation failed: {e}"));
    let scale = collocation::row_scale(problem, sol).map_err(eval_err)?;
    let col = collocation::Collocation::new(problem, sol.mesh.nodes(), &scale);
    let x = col.pack(sol);
    let ev = col.residual(&x).map_err(eval_err)?;
    let exact = col.jacobian(&x, &ev).map_err(eval_err)?.to_dense();
    let mut worst = 0.0f64;
    for j in 0..x.len() {
        let h = 1e-6 * (1.0 + x[j].abs());
        let mut xp = x.clone();
        xp[j] += h;
        let mut xm = x.clone();
        xm[j] -= h;
        let rp = col.residual(&xp).map_err(eval_err)?.res;
        let rm = col.residual(&xm).map_err(eval_err)?.res;
        for i in 0..x.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * h);
            worst = worst.max((fd - exact[(i, j)]).abs() / (1.0 + fd.abs()));
        }
    }
    Ok(worst)
}

/// Solves the boundary value DAE starting from `guess`.
///
/// Each round runs damped Newton on the current mesh, estimates the
/// per-interval defect and, unless every interval is within `mesh_tol`,
/// refines and repeats.
pub fn solve<P: DaeProblem + ?Sized>(problem: &P, guess: &DaeSolution, options: &SolverOptions) -> Result<DaeSolution, BvpError> {
    options.check()?;
    let dims = problem.dims();
    guess.check_shape(dims)?;
    if (guess.mesh.horizon() - problem.horizon()).abs() > 1e-12 * problem.horizon() {
        return Err(BvpError::InvalidInput(format!(
            "guess mesh ends at {} but the problem horizon is {}",
            guess.mesh.horizon(),
            problem.horizon()
        )));
    }

    let scale = collocation::row_scale(problem, guess)
        .map_err(|e| BvpError::InfeasibleStart(format!("initial guess: {e}")))?;
    let mut sol = guess.clone();
    sol.converged = false;
    let mut total_newton = 0usize;

    for round in 0..options.max_mesh_rounds {
        let nodes = sol.mesh.nodes().to_vec();
        let col = collocation::Collocation::new(problem, &nodes, &scale);
        let out = match newton::newton(&col, col.pack(&sol), options) {
            Ok(out) => out,
            Err(fail) => {
                total_newton += fail.iters;
                let start_infeasible = fail.kind == newton::FailureKind::Infeasible && fail.iters == 0;
                col.unpack(&fail.best, &mut sol);
                sol.newton_iters = total_newton;
                sol.residual_history = fail.history;
                sol.mesh_rounds = round + 1;
                return Err(if start_infeasible && round == 0 {
                    BvpError::InfeasibleStart(fail.reason)
                } else {
                    BvpError::NoConvergence { reason: fail.reason, best: Box::new(sol) }
                });
            }
        };
        total_newton += out.iters;
        col.unpack(&out.x, &mut sol);
        sol.yp = out.eval.f_nodes.clone();
        sol.newton_iters = total_newton;
        sol.residual_history = out.history;
        sol.mesh_rounds = round + 1;

        let residuals = col.interval_residuals(&out.x, &out.eval);
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        sol.interval_residuals = residuals;
        log::debug!(
            "mesh round {round}: {} nodes, {} newton iters, max defect {worst:.3e}",
            sol.n_nodes(),
            out.iters
        );
        if worst <= options.mesh_tol {
            sol.converged = true;
            return Ok(sol);
        }
        let refined = match refine_mesh(&sol, &sol.interval_residuals, options.mesh_tol, options.max_mesh_points) {
            Ok(r) => r,
            Err(MeshError::Limit { limit }) => return Err(BvpError::MeshLimit { limit, best: Box::new(sol) }),
            Err(e) => return Err(e.into()),
        };
        sol = if collocation::is_feasible(problem, &refined) {
            refined
        } else {
            let linear = mesh::refine_mesh_linear(&sol, &sol.interval_residuals, options.mesh_tol, options.max_mesh_points)?;
            if !collocation::is_feasible(problem, &linear) {
                return Err(BvpError::NoConvergence {
                    reason: "refined guess leaves the domain".into(),
                    best: Box::new(sol),
                });
            }
            linear
        };
    }
    Err(BvpError::NoConvergence {
        reason: format!("defect above mesh tolerance after {} rounds", options.max_mesh_rounds),
        best: Box::new(sol),
    })
}
