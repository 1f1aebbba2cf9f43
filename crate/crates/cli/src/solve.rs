use std::collections::BTreeMap;
use std::time::Instant;

use ipocp::continuation::{run_observed, ContinuationError, StepInfo};
use ipocp::diagnostics::{kkt_report, objective};
use ipocp::problems::{bundle, BenchmarkBundle};
use ipocp::{ContinuationConfig, DaeSystem, Method, OcpTrajectory, RunReport, SolverOptions};

use crate::error::CliError;
use crate::output::{trajectory_csv, write_atomic};
use crate::report::{Report, Source, Status};
use crate::SolveArgs;

/// Run settings after applying flags over bundle and built-in defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    pub method: Method,
    pub config: ContinuationConfig,
    pub options: SolverOptions,
    pub source: BTreeMap<String, Source>,
}

fn pick<T: Copy>(flag: Option<T>, fallback: T, fallback_source: Source) -> (T, Source) {
    match flag {
        Some(v) => (v, Source::Flag),
        None => (fallback, fallback_source),
    }
}

pub fn resolve(args: &SolveArgs, b: &BenchmarkBundle) -> Result<Settings, CliError> {
    let method: Method = args.method.into();
    let base = b.config(method);
    let defaults = SolverOptions::default();
    let mut source = BTreeMap::new();
    let mut take = |name: &str, flag, fallback, src| {
        let (v, s) = pick(flag, fallback, src);
        source.insert(name.to_string(), s);
        v
    };
    let eps0 = take("eps0", args.eps0, base.eps0, Source::Bundle);
    let alpha = take("alpha", args.alpha, base.alpha, Source::Bundle);
    let tol = take("tol", args.tol, base.tol, Source::Bundle);
    let newton_tol = take("newton_tol", args.newton_tol, defaults.newton_tol, Source::Default);
    let mesh_tol = take("mesh_tol", args.mesh_tol, defaults.mesh_tol, Source::Default);
    let config = ContinuationConfig::new(eps0, alpha, tol).map_err(|e| CliError::Usage(e.to_string()))?;
    let options = SolverOptions { newton_tol, mesh_tol, ..defaults };
    options.check().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Settings { method, config, options, source })
}

fn partial_run(problem: &str, settings: &Settings, steps: &[StepInfo], wall_time: f64) -> RunReport {
    RunReport {
        problem: problem.to_string(),
        method: settings.method,
        eps0: settings.config.eps0,
        alpha: settings.config.alpha,
        tol: settings.config.tol,
        newton_tol: settings.options.newton_tol,
        mesh_tol: settings.options.mesh_tol,
        eps_iterations: steps.len(),
        eps_schedule: steps.iter().map(|s| s.eps).collect(),
        newton_iters_per_eps: steps.iter().map(|s| s.newton_iters).collect(),
        mesh_len_per_eps: steps.iter().map(|s| s.mesh_len).collect(),
        final_mesh_len: steps.last().map_or(0, |s| s.mesh_len),
        final_eps: steps.last().map_or(f64::NAN, |s| s.eps),
        wall_time,
    }
}

fn write_outputs(args: &SolveArgs, traj: Option<&OcpTrajectory>, report: &Report) -> Result<(), CliError> {
    if let (Some(path), Some(traj)) = (&args.out, traj) {
        write_atomic(path, trajectory_csv(traj).as_bytes())?;
    }
    if let Some(path) = &args.report {
        let mut text = serde_json::to_string_pretty(report).expect("report serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let b = bundle(&args.problem).ok_or_else(|| CliError::UnknownProblem { name: args.problem.clone() })?;
    let settings = resolve(args, &b)?;
    let corrections: Vec<String> = b.corrections.iter().map(|c| c.to_string()).collect();
    let start = Instant::now();
    let result = run_observed(
        &b.spec,
        settings.method,
        b.guess(settings.method),
        &settings.config,
        &settings.options,
        |_, _| {},
    );
    match result {
        Ok(outcome) => {
            let spec = outcome.system.spec();
            let traj = &outcome.trajectory;
            let report = Report {
                status: Status::Converged,
                error: None,
                run: outcome.report.clone(),
                settings_source: settings.source,
                objective: Some(objective(spec, traj)),
                kkt: Some(kkt_report(spec, traj, outcome.report.final_eps)),
                corrections,
            };
            write_outputs(args, Some(traj), &report)?;
            println!(
                "{} {}: {} eps iterations, final mesh {}, {:.2} s",
                report.run.problem, report.run.method, report.run.eps_iterations, report.run.final_mesh_len, report.run.wall_time
            );
            Ok(())
        }
        Err(ContinuationError::InvalidConfig(c)) => Err(CliError::Usage(ContinuationError::InvalidConfig(c).to_string())),
        Err(err) => {
            let wall_time = start.elapsed().as_secs_f64();
            let (steps, last_good) = match &err {
                ContinuationError::Solver { steps, last_good, .. } => (steps.as_slice(), last_good.as_deref()),
                _ => (&[][..], None),
            };
            let mut report = Report {
                status: Status::Failed,
                error: Some(err.to_string()),
                run: partial_run(b.name, &settings, steps, wall_time),
                settings_source: settings.source.clone(),
                objective: None,
                kkt: None,
                corrections,
            };
            let mut traj = None;
            if let Some((eps, sol)) = last_good {
                if let Ok(system) = DaeSystem::new(&b.spec, settings.method, *eps) {
                    if let Ok(t) = OcpTrajectory::from_solution(&system, sol) {
                        report.objective = Some(objective(&b.spec, &t));
                        report.kkt = Some(kkt_report(&b.spec, &t, *eps));
                        traj = Some(t);
                    }
                }
            }
            write_outputs(args, traj.as_ref(), &report)?;
            Err(CliError::Solver(err.to_string()))
        }
    }
}
