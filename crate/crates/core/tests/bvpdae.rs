use ipocp::bvpdae::{self, BvpError, DaeDims, DaeProblem, DaeSolution, EvalError, Mesh, SolverOptions};

/// y' = y, y(0) = 1 on [0, 1].
struct Growth;

impl DaeProblem for Growth {
    fn dims(&self) -> DaeDims {
        DaeDims { n_y: 1, n_z: 0, n_p: 0 }
    }
    fn horizon(&self) -> f64 {
        1.0
    }
    fn rhs(&self, _t: f64, y: &[f64], _z: &[f64], _p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out[0] = y[0];
        Ok(())
    }
    fn alg(&self, _: f64, _: &[f64], _: &[f64], _: &[f64], _: &mut [f64]) -> Result<(), EvalError> {
        Ok(())
    }
    fn bc(&self, ya: &[f64], _yb: &[f64], _p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out[0] = ya[0] - 1.0;
        Ok(())
    }
}

/// Harmonic oscillator written as a DAE with an unknown frequency:
/// y1' = z, y2' = -p y1, 0 = z - p y2,
/// y1(0) = 0, y2(0) = 1, y2(pi/2) = 0.
struct Oscillator;

impl DaeProblem for Oscillator {
    fn dims(&self) -> DaeDims {
        DaeDims { n_y: 2, n_z: 1, n_p: 1 }
    }
    fn horizon(&self) -> f64 {
        std::f64::consts::FRAC_PI_2
    }
    fn rhs(&self, _t: f64, y: &[f64], z: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out[0] = z[0];
        out[1] = -p[0] * y[0];
        Ok(())
    }
    fn alg(&self, _t: f64, y: &[f64], z: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out[0] = z[0] - p[0] * y[1];
        Ok(())
    }
    fn bc(&self, ya: &[f64], yb: &[f64], _p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out[0] = ya[0];
        out[1] = ya[1] - 1.0;
        out[2] = yb[1];
        Ok(())
    }
}

fn oscillator_guess(points: usize) -> DaeSolution {
    let mesh = Mesh::uniform(Oscillator.horizon(), points).unwrap();
    let n = mesh.len();
    let t = mesh.nodes().to_vec();
    let y: Vec<Vec<f64>> = t.iter().map(|&s| vec![s / t[n - 1], 1.0]).collect();
    let z: Vec<Vec<f64>> = vec![vec![0.5]; n];
    DaeSolution::guess(Oscillator.dims(), mesh, &y, &z, &[0.8]).unwrap()
}

#[test]
fn exponential_growth_reaches_e() {
    let mesh = Mesh::uniform(1.0, 3).unwrap();
    let guess = DaeSolution::guess(Growth.dims(), mesh, &[vec![1.0], vec![1.0], vec![1.0]], &[vec![], vec![], vec![]], &[])
        .unwrap();
    let sol = bvpdae::solve(&Growth, &guess, &SolverOptions::default()).unwrap();
    assert!(sol.converged);
    let end = sol.y_at(sol.n_nodes() - 1)[0];
    assert!((end - std::f64::consts::E).abs() < 1e-5, "y(1) = {end}");
    assert!(sol.interval_residuals.iter().all(|r| *r <= 1e-6));
}

#[test]
fn oscillator_recovers_frequency() {
    let sol = bvpdae::solve(&Oscillator, &oscillator_guess(6), &SolverOptions::default()).unwrap();
    assert!((sol.params[0] - 1.0).abs() < 1e-6, "p = {}", sol.params[0]);
    for (i, &t) in sol.times().iter().enumerate() {
        assert!((sol.y_at(i)[0] - t.sin()).abs() < 1e-5);
        assert!((sol.z_at(i)[0] - t.cos()).abs() < 1e-5);
    }
    let (y, z) = bvpdae::interpolate(&sol, 0.7).unwrap();
    assert!((y[0] - 0.7f64.sin()).abs() < 1e-5);
    assert!((z[0] - 0.7f64.cos()).abs() < 1e-4);
    assert!(bvpdae::interpolate(&sol, 2.0).is_err());
}

/// y' = z, 0 = z - y cos t, y(0) = 1 on [0, 3]; exact y = exp(sin t).
struct Wave;

impl DaeProblem for Wave {
    fn dims(&self) -> DaeDims {
        DaeDims { n_y: 1, n_z: 1, n_p: 0 }
    }
    fn horizon(&self) -> f64 {
        3.0
    }
    fn rhs(&self, _t: f64, _y: &[f64], z: &[f64], _p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out[0] = z[0];
        Ok(())
    }
    fn alg(&self, t: f64, y: &[f64], z: &[f64], _p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out[0] = z[0] - y[0] * t.cos();
        Ok(())
    }
    fn bc(&self, ya: &[f64], _yb: &[f64], _p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out[0] = ya[0] - 1.0;
        Ok(())
    }
}

#[test]
fn fixed_mesh_error_is_fourth_order() {
    let opts = SolverOptions { mesh_tol: 1e3, newton_tol: 1e-13, ..SolverOptions::default() };
    let err = |points| {
        let mesh = Mesh::uniform(3.0, points).unwrap();
        let guess = DaeSolution::guess(Wave.dims(), mesh, &vec![vec![1.0]; points], &vec![vec![0.0]; points], &[])
            .unwrap();
        let sol = bvpdae::solve(&Wave, &guess, &opts).unwrap();
        assert_eq!(sol.n_nodes(), points);
        (0..points).map(|i| (sol.y_at(i)[0] - sol.times()[i].sin().exp()).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(11), err(21));
    let order = (e1 / e2).log2();
    assert!(order >= 3.7, "observed order {order} ({e1:e} -> {e2:e})");
}

#[test]
fn residual_estimate_scales_with_fourth_power() {
    let opts = SolverOptions { mesh_tol: 1e3, ..SolverOptions::default() };
    let worst = |points| {
        let sol = bvpdae::solve(&Oscillator, &oscillator_guess(points), &opts).unwrap();
        let r = bvpdae::estimate_residual(&Oscillator, &sol).unwrap();
        r.into_iter().fold(0.0, f64::max)
    };
    let ratio = worst(9) / worst(17);
    assert!(ratio > 12.0, "ratio {ratio}");
}

/// Domain restricted problem: y' = -1/y style evaluation fails for y <= 0.
struct Positive;

impl DaeProblem for Positive {
    fn dims(&self) -> DaeDims {
        DaeDims { n_y: 1, n_z: 0, n_p: 0 }
    }
    fn horizon(&self) -> f64 {
        1.0
    }
    fn rhs(&self, _t: f64, y: &[f64], _z: &[f64], _p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        if y[0] <= 0.0 {
            return Err(EvalError::Domain);
        }
        out[0] = 1.0 / y[0];
        Ok(())
    }
    fn alg(&self, _: f64, _: &[f64], _: &[f64], _: &[f64], _: &mut [f64]) -> Result<(), EvalError> {
        Ok(())
    }
    fn bc(&self, ya: &[f64], _yb: &[f64], _p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        out[0] = ya[0] - 1.0;
        Ok(())
    }
}

#[test]
fn infeasible_start_is_reported() {
    let mesh = Mesh::uniform(1.0, 4).unwrap();
    let y = vec![vec![1.0], vec![-1.0], vec![1.0], vec![1.0]];
    let guess = DaeSolution::guess(Positive.dims(), mesh, &y, &vec![vec![]; 4], &[]).unwrap();
    let err = bvpdae::solve(&Positive, &guess, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, BvpError::InfeasibleStart(_)), "{err}");
}

#[test]
fn domain_restricted_problem_solves() {
    // y y' = 1, y(0) = 1  =>  y = sqrt(1 + 2t)
    let mesh = Mesh::uniform(1.0, 5).unwrap();
    let guess = DaeSolution::guess(Positive.dims(), mesh, &vec![vec![1.0]; 5], &vec![vec![]; 5], &[]).unwrap();
    let sol = bvpdae::solve(&Positive, &guess, &SolverOptions::default()).unwrap();
    for (i, &t) in sol.times().iter().enumerate() {
        assert!((sol.y_at(i)[0] - (1.0 + 2.0 * t).sqrt()).abs() < 1e-6);
    }
}

#[test]
fn mesh_limit_is_reported() {
    let opts = SolverOptions { mesh_tol: 1e-14, max_mesh_points: 20, ..SolverOptions::default() };
    let err = bvpdae::solve(&Oscillator, &oscillator_guess(6), &opts).unwrap_err();
    assert!(matches!(err, BvpError::MeshLimit { limit: 20, .. }), "{err}");
    assert!(err.best().is_some());
}

#[test]
fn mismatched_guess_is_rejected() {
    let mesh = Mesh::uniform(2.0, 3).unwrap();
    let guess =
        DaeSolution::guess(Growth.dims(), mesh, &vec![vec![1.0]; 3], &vec![vec![]; 3], &[]).unwrap();
    assert!(matches!(
        bvpdae::solve(&Growth, &guess, &SolverOptions::default()),
        Err(BvpError::InvalidInput(_))
    ));
}

