//! Barrier-parameter homotopy: solve at `eps0`, then repeatedly shrink `eps`
//! by the factor `alpha` and re-solve from the previous solution until
//! `eps <= tol`.

use std::time::Instant;

use thiserror::Error;

use crate::bvpdae::{self, BvpError, DaeProblem, DaeSolution, Mesh, SolverOptions};
use crate::ocp::{to_fixed_time, OcpSpec};
use crate::transcription::{DaeSystem, Multipliers, TranscriptionError};

pub use crate::transcription::Formulation as Method;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ContinuationConfig {
    pub eps0: f64,
    pub alpha: f64,
    pub tol: f64,
}

impl ContinuationConfig {
    /// Fails unless `eps0 > 0`, `0 < alpha < 1` and `tol > 0`. A `tol` at or
    /// above `eps0` is accepted and yields a single solve.
    pub fn new(eps0: f64, alpha: f64, tol: f64) -> Result<Self, ContinuationError> {
        let c = ContinuationConfig { eps0, alpha, tol };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<(), ContinuationError> {
        let ok = self.eps0.is_finite()
            && self.eps0 > 0.0
            && self.alpha > 0.0
            && self.alpha < 1.0
            && self.tol.is_finite()
            && self.tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ContinuationError::InvalidConfig(*self))
        }
    }

    /// `eps_k = eps0 * alpha^k`.
    pub fn eps_at(&self, k: usize) -> f64 {
        self.eps0 * self.alpha.powi(k as i32)
    }

    /// Every barrier value solved for, `eps0` first and the first value
    /// `<= tol` last.
    pub fn schedule(&self) -> Vec<f64> {
        let mut out = vec![self.eps0];
        let mut k = 0;
        while self.eps_at(k) > self.tol {
            k += 1;
            out.push(self.eps_at(k));
        }
        out
    }
}

/// Node-wise initial data in problem variables.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OcpGuess {
    pub mesh: Mesh,
    pub x: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    /// State-constraint multipliers; zeros when absent.
    pub lambda_g: Option<Vec<Vec<f64>>>,
    /// Mixed-constraint multipliers; zeros when absent.
    pub lambda_c: Option<Vec<Vec<f64>>>,
    /// Boundary multipliers.
    pub lambda: Vec<f64>,
}

impl OcpGuess {
    /// Constant values on every node.
    pub fn constant(mesh: Mesh, x: &[f64], p: &[f64], u: &[f64], n_h: usize) -> Self {
        let n = mesh.len();
        OcpGuess {
            x: vec![x.to_vec(); n],
            p: vec![p.to_vec(); n],
            u: vec![u.to_vec(); n],
            lambda_g: None,
            lambda_c: None,
            lambda: vec![0.0; n_h],
            mesh,
        }
    }

    /// Packs the guess into the unknowns of `system`.
    pub fn to_dae(&self, system: &DaeSystem) -> Result<DaeSolution, ContinuationError> {
        let d = system.ocp_dims();
        let nn = self.mesh.len();
        let bad = |what: &str| ContinuationError::InvalidGuess(what.to_string());
        if self.x.len() != nn || self.p.len() != nn || self.u.len() != nn {
            return Err(bad("trajectory lengths differ from the mesh length"));
        }
        if self.lambda.len() != d.n_h {
            return Err(bad("boundary multiplier count differs from n_h"));
        }
        let zeros_g = vec![vec![0.0; d.n_g]; nn];
        let zeros_c = vec![vec![0.0; d.n_c]; nn];
        let lg = self.lambda_g.as_ref().unwrap_or(&zeros_g);
        let lc = self.lambda_c.as_ref().unwrap_or(&zeros_c);
        if lg.len() != nn || lc.len() != nn {
            return Err(bad("multiplier lengths differ from the mesh length"));
        }
        let mut y = Vec::with_capacity(nn);
        let mut z = Vec::with_capacity(nn);
        for i in 0..nn {
            if self.x[i].len() != d.n || self.p[i].len() != d.n || self.u[i].len() != d.m {
                return Err(bad("row width differs from the problem dimensions"));
            }
            if lg[i].len() != d.n_g || lc[i].len() != d.n_c {
                return Err(bad("multiplier width differs from the constraint count"));
            }
            let mut yi = self.x[i].clone();
            yi.extend_from_slice(&self.p[i]);
            y.push(yi);
            let mut zi = self.u[i].clone();
            if system.formulation() == Method::PrimalDual {
                zi.extend_from_slice(&lg[i]);
                zi.extend_from_slice(&lc[i]);
            }
            z.push(zi);
        }
        DaeSolution::guess(system.dims(), self.mesh.clone(), &y, &z, &self.lambda)
            .map_err(|e| ContinuationError::InvalidGuess(e.to_string()))
    }
}

/// Solution in problem variables on its mesh nodes.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OcpTrajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub lambda_g: Vec<Vec<f64>>,
    pub lambda_c: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
}

impl OcpTrajectory {
    pub fn from_solution(system: &DaeSystem, sol: &DaeSolution) -> Result<Self, TranscriptionError> {
        let mult = system.multipliers(sol)?;
        let mut out = OcpTrajectory {
            t: sol.times().to_vec(),
            x: Vec::new(),
            p: Vec::new(),
            u: Vec::new(),
            lambda_g: mult.state,
            lambda_c: mult.mixed,
            lambda: sol.params.clone(),
        };
        for i in 0..sol.n_nodes() {
            let (x, p) = system.split_y(sol.y_at(i));
            out.x.push(x.to_vec());
            out.p.push(p.to_vec());
            out.u.push(system.split_z(sol.z_at(i)).0.to_vec());
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Warm start for another formulation, keeping the mesh.
    pub fn to_guess(&self) -> Result<OcpGuess, ContinuationError> {
        Ok(OcpGuess {
            mesh: Mesh::new(self.t.clone()).map_err(|e| ContinuationError::InvalidGuess(e.to_string()))?,
            x: self.x.clone(),
            p: self.p.clone(),
            u: self.u.clone(),
            lambda_g: Some(self.lambda_g.clone()),
            lambda_c: Some(self.lambda_c.clone()),
            lambda: self.lambda.clone(),
        })
    }
}

/// Per-solve record passed to observers and kept in the report.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepInfo {
    pub index: usize,
    pub eps: f64,
    pub newton_iters: usize,
    pub mesh_len: usize,
    pub mesh_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub method: Method,
    pub eps0: f64,
    pub alpha: f64,
    pub tol: f64,
    pub newton_tol: f64,
    pub mesh_tol: f64,
    pub eps_iterations: usize,
    pub eps_schedule: Vec<f64>,
    pub newton_iters_per_eps: Vec<usize>,
    pub mesh_len_per_eps: Vec<usize>,
    pub final_mesh_len: usize,
    pub final_eps: f64,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct ContinuationOutcome {
    pub solution: DaeSolution,
    /// System at the final barrier value.
    pub system: DaeSystem,
    pub trajectory: OcpTrajectory,
    pub multipliers: Multipliers,
    pub report: RunReport,
}

#[derive(Debug, Error)]
pub enum ContinuationError {
    #[error("invalid continuation parameters {0:?}: need eps0 > 0, 0 < alpha < 1, tol > 0")]
    InvalidConfig(ContinuationConfig),
    #[error("invalid initial guess: {0}")]
    InvalidGuess(String),
    #[error("initial guess is not strictly interior: {0}")]
    InfeasibleStart(String),
    #[error(transparent)]
    Transcription(#[from] TranscriptionError),
    /// An inner solve failed. `last_good` holds the most recent converged
    /// barrier value and solution, if any, for a restart.
    #[error("solve at eps = {eps:e} failed: {source}")]
    Solver {
        eps: f64,
        #[source]
        source: BvpError,
        last_good: Option<Box<(f64, DaeSolution)>>,
        steps: Vec<StepInfo>,
    },
}

/// Checks `g(x) < 0` and `c(x, u) < 0` at every node of a guess.
pub fn check_interior(spec: &OcpSpec, guess: &OcpGuess) -> Result<(), ContinuationError> {
    let fun = spec.functions();
    for (i, (x, u)) in guess.x.iter().zip(&guess.u).enumerate() {
        for (k, g) in fun.state_constraints(x).into_iter().enumerate() {
            if !(g < 0.0) {
                return Err(ContinuationError::InfeasibleStart(format!(
                    "state constraint {k} equals {g:e} at node {i} (t = {})",
                    guess.mesh.nodes()[i]
                )));
            }
        }
        for (k, c) in fun.mixed_constraints(x, u).into_iter().enumerate() {
            if !(c < 0.0) {
                return Err(ContinuationError::InfeasibleStart(format!(
                    "mixed constraint {k} equals {c:e} at node {i} (t = {})",
                    guess.mesh.nodes()[i]
                )));
            }
        }
    }
    Ok(())
}

/// Primal continuation. The guess must be strictly interior.
pub fn run_primal(
    spec: &OcpSpec,
    guess: &OcpGuess,
    config: &ContinuationConfig,
    options: &SolverOptions,
) -> Result<ContinuationOutcome, ContinuationError> {
    run_observed(spec, Method::Primal, guess, config, options, |_, _| {})
}

/// Primal-dual continuation. The guess only needs to be finite.
pub fn run_primal_dual(
    spec: &OcpSpec,
    guess: &OcpGuess,
    config: &ContinuationConfig,
    options: &SolverOptions,
) -> Result<ContinuationOutcome, ContinuationError> {
    run_observed(spec, Method::PrimalDual, guess, config, options, |_, _| {})
}

/// Runs either method and calls `observer` after every converged solve.
pub fn run_observed(
    spec: &OcpSpec,
    method: Method,
    guess: &OcpGuess,
    config: &ContinuationConfig,
    options: &SolverOptions,
    mut observer: impl FnMut(&StepInfo, &DaeSolution),
) -> Result<ContinuationOutcome, ContinuationError> {
    config.check()?;
    let start = Instant::now();
    let spec = to_fixed_time(spec);
    if method == Method::Primal {
        check_interior(&spec, guess)?;
    }
    let mut system = DaeSystem::new(&spec, method, config.eps0)?;
    let mut current = guess.to_dae(&system)?;
    let mut last_good: Option<(f64, DaeSolution)> = None;
    let mut steps: Vec<StepInfo> = Vec::new();

    for (k, eps) in config.schedule().into_iter().enumerate() {
        system.set_eps(eps)?;
        let sol = match bvpdae::solve(&system, &current, options) {
            Ok(sol) => sol,
            Err(BvpError::InfeasibleStart(msg)) if k == 0 => return Err(ContinuationError::InfeasibleStart(msg)),
            Err(source) => {
                return Err(ContinuationError::Solver { eps, source, last_good: last_good.map(Box::new), steps })
            }
        };
        let info = StepInfo {
            index: k,
            eps,
            newton_iters: sol.newton_iters,
            mesh_len: sol.n_nodes(),
            mesh_rounds: sol.mesh_rounds,
        };
        log::info!(
            "{} {}: eps {eps:.3e}, {} newton iterations, {} mesh points",
            spec.name,
            method,
            info.newton_iters,
            info.mesh_len
        );
        observer(&info, &sol);
        steps.push(info);
        current = sol.clone();
        last_good = Some((eps, sol));
    }

    let (final_eps, solution) = last_good.expect("schedule is never empty");
    let trajectory = OcpTrajectory::from_solution(&system, &solution)?;
    let multipliers = system.multipliers(&solution)?;
    let report = RunReport {
        problem: spec.name.clone(),
        method,
        eps0: config.eps0,
        alpha: config.alpha,
        tol: config.tol,
        newton_tol: options.newton_tol,
        mesh_tol: options.mesh_tol,
        eps_iterations: steps.len(),
        eps_schedule: steps.iter().map(|s| s.eps).collect(),
        newton_iters_per_eps: steps.iter().map(|s| s.newton_iters).collect(),
        mesh_len_per_eps: steps.iter().map(|s| s.mesh_len).collect(),
        final_mesh_len: solution.n_nodes(),
        final_eps,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(ContinuationOutcome { solution, system, trajectory, multipliers, report })
}
