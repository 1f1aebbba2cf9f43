//! Damped Newton iteration on the collocation equations.

use super::collocation::{Collocation, Evaluation};
use super::{DaeProblem, SolverOptions};

pub(crate) struct NewtonOutput {
    pub x: Vec<f64>,
    pub eval: Evaluation,
    pub iters: usize,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FailureKind {
    Infeasible,
    Singular,
    LineSearch,
    MaxIterations,
}

pub(crate) struct NewtonFailure {
    pub kind: FailureKind,
    pub reason: String,
    pub best: Vec<f64>,
    pub iters: usize,
    pub history: Vec<f64>,
}

/// Relative size of a Newton correction that only moves the iterate by
/// rounding error.
const STEP_TOL: f64 = 1e-10;

/// Largest multiple of `newton_tol` accepted when the iteration has stalled at
/// rounding level.
const FLOOR_FACTOR: f64 = 1e6;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton's method with a halving line search.
///
/// The iteration stops when the residual is below `newton_tol`, or when the
/// full correction is below `STEP_TOL` relative to the iterate while the
/// residual is within `FLOOR_FACTOR * newton_tol`. The second test covers
/// barrier terms whose sensitivity turns rounding error in the unknowns into
/// residuals above the tolerance.
///
/// The first pass accepts a trial step of length `lambda` when the simplified
/// Newton correction at the trial point shrinks, `|J^-1 r(x + lambda dx)| <=
/// (1 - lambda/4) |dx|`, or when the residual norm decreases by a sufficient
/// amount. If that pass fails, the iteration restarts from `x0` accepting
/// only sufficient decrease. Trial points where the residual cannot be
/// evaluated are rejected.
pub(crate) fn newton<P: DaeProblem + ?Sized>(
    col: &Collocation<'_, P>,
    x0: Vec<f64>,
    opts: &SolverOptions,
) -> Result<NewtonOutput, NewtonFailure> {
    match iterate(col, x0.clone(), opts, Acceptance::Either) {
        Ok(out) => Ok(out),
        Err(f) if f.kind == FailureKind::Infeasible && f.iters == 0 => Err(f),
        Err(first) => {
            log::debug!("newton restart with the residual decrease test: {}", first.reason);
            iterate(col, x0, opts, Acceptance::Decrease).map_err(|mut f| {
                f.iters += first.iters;
                f
            }).map(|mut out| {
                out.iters += first.iters;
                out
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Acceptance {
    Decrease,
    Either,
}

fn iterate<P: DaeProblem + ?Sized>(
    col: &Collocation<'_, P>,
    x0: Vec<f64>,
    opts: &SolverOptions,
    acceptance: Acceptance,
) -> Result<NewtonOutput, NewtonFailure> {
    let mut x = x0;
    let mut history = Vec::new();
    let fail = |kind, reason: String, best: Vec<f64>, iters, history| {
        Err(NewtonFailure { kind, reason, best, iters, history })
    };
    let mut ev = match col.residual(&x) {
        Ok(ev) => ev,
        Err(e) => return fail(FailureKind::Infeasible, format!("residual at the starting point: {e}"), x, 0, history),
    };
    let mut rn = inf_norm(&ev.res);
    history.push(rn);
    let mut iters = 0;
    loop {
        if rn <= opts.newton_tol {
            return Ok(NewtonOutput { x, eval: ev, iters, history });
        }
        if iters >= opts.max_newton {
            let reason = format!("{iters} iterations, residual {rn:.3e}");
            return fail(FailureKind::MaxIterations, reason, x, iters, history);
        }
        let jac = match col.jacobian(&x, &ev) {
            Ok(j) => j,
            Err(e) => return fail(FailureKind::Infeasible, format!("Jacobian: {e}"), x, iters, history),
        };
        let lu = match jac.factorize() {
            Ok(lu) => lu,
            Err(e) => return fail(FailureKind::Singular, format!("Newton matrix: {e}"), x, iters, history),
        };
        let mut dx = lu.solve(&ev.res).expect("layout matches");
        dx.iter_mut().for_each(|v| *v = -*v);
        let dxn = two_norm(&dx);
        if inf_norm(&dx) <= STEP_TOL * (1.0 + inf_norm(&x)) && rn <= FLOOR_FACTOR * opts.newton_tol {
            log::debug!("newton stopped at roundoff: residual {rn:.3e}, correction {:.3e}", inf_norm(&dx));
            return Ok(NewtonOutput { x, eval: ev, iters, history });
        }
        let r2 = two_norm(&ev.res);

        let mut lambda = 1.0f64;
        let accepted = loop {
            if lambda < opts.min_damping {
                break None;
            }
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            if let Ok(evt) = col.residual(&xt) {
                let decrease = two_norm(&evt.res) <= (1.0 - 1e-4 * lambda) * r2;
                let natural = || {
                    let simplified = lu.solve(&evt.res).expect("layout matches");
                    two_norm(&simplified) <= (1.0 - 0.25 * lambda) * dxn
                };
                if decrease || (acceptance == Acceptance::Either && natural()) {
                    break Some((xt, evt));
                }
            }
            lambda *= 0.5;
        };
        match accepted {
            Some((xt, evt)) => {
                x = xt;
                ev = evt;
                rn = inf_norm(&ev.res);
                history.push(rn);
                iters += 1;
                log::trace!("newton {iters}: lambda {lambda:.3e}, residual {rn:.3e}");
            }
            None => {
                let reason = format!("line search failed after {iters} iterations, residual {rn:.3e}");
                return fail(FailureKind::LineSearch, reason, x, iters, history);
            }
        }
    }
}
