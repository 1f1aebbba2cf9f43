//! User-facing optimal control problem description.
//!
//! Problems have the form
//!
//! ```text
//! min  phi(x(T)) + int_0^T l(x, u) dt
//! s.t. x' = f(x, u),  h(x(0), x(T)) = 0,  g(x) <= 0,  c(x, u) <= 0
//! ```
//!
//! and are supplied through [`OcpFunctions`] together with first derivatives.
//! Second derivatives are never requested from the user.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::DMat;
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OcpDims {
    /// State dimension.
    pub n: usize,
    /// Control dimension.
    pub m: usize,
    /// Number of pure state constraints.
    pub n_g: usize,
    /// Number of mixed state-control constraints.
    pub n_c: usize,
    /// Number of boundary conditions.
    pub n_h: usize,
}

impl OcpDims {
    pub fn check(&self) -> Result<(), OcpError> {
        if self.n == 0 || self.m == 0 || self.n_h == 0 {
            return Err(OcpError::InvalidDims(*self));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Horizon {
    Fixed(f64),
    /// Free final time; convert with [`to_fixed_time`] before transcription.
    Free,
}

/// Smooth problem data. Implementations must be deterministic and reentrant.
///
/// Jacobians follow the `rows = outputs, cols = inputs` convention, e.g.
/// `dynamics_jacobian` returns `(f_x: n x n, f_u: n x m)`.
pub trait OcpFunctions: Send + Sync {
    fn dims(&self) -> OcpDims;

    fn dynamics(&self, x: &[f64], u: &[f64]) -> Vec<f64>;
    fn dynamics_jacobian(&self, x: &[f64], u: &[f64]) -> (Matrix, Matrix);

    fn running_cost(&self, x: &[f64], u: &[f64]) -> f64;
    /// `(l_x, l_u)`
    fn running_cost_gradient(&self, x: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>);

    fn terminal_cost(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn terminal_cost_gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn state_constraints(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    fn state_constraints_jacobian(&self, x: &[f64]) -> Matrix {
        DMat::zeros(0, x.len())
    }

    fn mixed_constraints(&self, _x: &[f64], _u: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    /// `(c_x, c_u)`
    fn mixed_constraints_jacobian(&self, x: &[f64], u: &[f64]) -> (Matrix, Matrix) {
        (DMat::zeros(0, x.len()), DMat::zeros(0, u.len()))
    }

    fn boundary(&self, x0: &[f64], xt: &[f64]) -> Vec<f64>;
    /// `(h_{x(0)}, h_{x(T)})`
    fn boundary_jacobian(&self, x0: &[f64], xt: &[f64]) -> (Matrix, Matrix);
}

/// A problem together with its horizon. Cheap to clone.
#[derive(Clone)]
pub struct OcpSpec {
    pub name: String,
    pub horizon: Horizon,
    functions: Arc<dyn OcpFunctions>,
}

impl fmt::Debug for OcpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OcpSpec")
            .field("name", &self.name)
            .field("horizon", &self.horizon)
            .field("dims", &self.dims())
            .finish()
    }
}

impl OcpSpec {
    pub fn new(name: impl Into<String>, horizon: Horizon, functions: Arc<dyn OcpFunctions>) -> Result<Self, OcpError> {
        functions.dims().check()?;
        if let Horizon::Fixed(t) = horizon {
            if !(t.is_finite() && t > 0.0) {
                return Err(OcpError::InvalidHorizon(t));
            }
        }
        Ok(OcpSpec { name: name.into(), horizon, functions })
    }

    pub fn dims(&self) -> OcpDims {
        self.functions.dims()
    }

    pub fn functions(&self) -> &dyn OcpFunctions {
        self.functions.as_ref()
    }

    /// Horizon length, `None` while the final time is free.
    pub fn fixed_horizon(&self) -> Option<f64> {
        match self.horizon {
            Horizon::Fixed(t) => Some(t),
            Horizon::Free => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OcpError {
    #[error("invalid dimensions {0:?}: need n >= 1, m >= 1, n_h >= 1")]
    InvalidDims(OcpDims),
    #[error("horizon must be finite and positive, got {0}")]
    InvalidHorizon(f64),
    #[error("{callback}: expected shape {expected:?}, got {found:?}")]
    Dimension {
        callback: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{callback}: analytic derivative disagrees with finite differences (max deviation {max_deviation:.3e})")]
    GradientCheck { callback: &'static str, max_deviation: f64 },
    #[error("probe point has wrong size: state {state}, control {control}")]
    Probe { state: usize, control: usize },
}

/// One derivative callback compared against central differences.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DerivativeCheck {
    pub callback: &'static str,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub checks: Vec<DerivativeCheck>,
}

impl ValidationReport {
    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_deviation).fold(0.0, f64::max)
    }
}

const GRADIENT_CHECK_TOL: f64 = 1e-4;

fn expect_len(callback: &'static str, v: &[f64], n: usize) -> Result<(), OcpError> {
    if v.len() != n {
        return Err(OcpError::Dimension { callback, expected: (n, 1), found: (v.len(), 1) });
    }
    Ok(())
}

fn expect_shape(callback: &'static str, m: &Matrix, rows: usize, cols: usize) -> Result<(), OcpError> {
    if m.shape() != (rows, cols) {
        return Err(OcpError::Dimension { callback, expected: (rows, cols), found: m.shape() });
    }
    Ok(())
}

/// Central-difference Jacobian of `f` at `v`, step `1e-6 (1 + |v_j|)`.
fn fd_jacobian(v: &[f64], rows: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Matrix {
    let mut jac = DMat::zeros(rows, v.len());
    let mut w = v.to_vec();
    for j in 0..v.len() {
        let h = 1e-6 * (1.0 + v[j].abs());
        w[j] = v[j] + h;
        let fp = f(&w);
        w[j] = v[j] - h;
        let fm = f(&w);
        w[j] = v[j];
        for i in 0..rows {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

fn compare(callback: &'static str, analytic: &Matrix, fd: &Matrix) -> Result<DerivativeCheck, OcpError> {
    let mut worst = 0.0f64;
    let mut failed = false;
    for i in 0..fd.nrows() {
        for j in 0..fd.ncols() {
            let a = analytic[(i, j)];
            let d = fd[(i, j)];
            let dev = (a - d).abs();
            worst = worst.max(dev);
            if !(dev <= GRADIENT_CHECK_TOL * d.abs().max(1.0)) {
                failed = true;
            }
        }
    }
    if failed {
        return Err(OcpError::GradientCheck { callback, max_deviation: worst });
    }
    Ok(DerivativeCheck { callback, max_deviation: worst })
}

fn row_matrix(v: &[f64]) -> Matrix {
    DMat::from_rows(&[v])
}

/// Checks every callback's output shape and every analytic derivative against
/// central finite differences at the probe `(x, u)`. Boundary callbacks are
/// probed at `(x, x)`.
pub fn validate(spec: &OcpSpec, x: &[f64], u: &[f64]) -> Result<ValidationReport, OcpError> {
    let d = spec.dims();
    if x.len() != d.n || u.len() != d.m {
        return Err(OcpError::Probe { state: x.len(), control: u.len() });
    }
    let fun = spec.functions();
    let mut checks = Vec::new();

    let f = fun.dynamics(x, u);
    expect_len("f", &f, d.n)?;
    let (fx, fu) = fun.dynamics_jacobian(x, u);
    expect_shape("f_x", &fx, d.n, d.n)?;
    expect_shape("f_u", &fu, d.n, d.m)?;
    checks.push(compare("f_x", &fx, &fd_jacobian(x, d.n, |xx| fun.dynamics(xx, u)))?);
    checks.push(compare("f_u", &fu, &fd_jacobian(u, d.n, |uu| fun.dynamics(x, uu)))?);

    let (lx, lu) = fun.running_cost_gradient(x, u);
    expect_len("l_x", &lx, d.n)?;
    expect_len("l_u", &lu, d.m)?;
    checks.push(compare("l_x", &row_matrix(&lx), &fd_jacobian(x, 1, |xx| vec![fun.running_cost(xx, u)]))?);
    checks.push(compare("l_u", &row_matrix(&lu), &fd_jacobian(u, 1, |uu| vec![fun.running_cost(x, uu)]))?);

    let phix = fun.terminal_cost_gradient(x);
    expect_len("phi'", &phix, d.n)?;
    checks.push(compare("phi'", &row_matrix(&phix), &fd_jacobian(x, 1, |xx| vec![fun.terminal_cost(xx)]))?);

    let g = fun.state_constraints(x);
    expect_len("g", &g, d.n_g)?;
    let gx = fun.state_constraints_jacobian(x);
    expect_shape("g'", &gx, d.n_g, d.n)?;
    checks.push(compare("g'", &gx, &fd_jacobian(x, d.n_g, |xx| fun.state_constraints(xx)))?);

    let c = fun.mixed_constraints(x, u);
    expect_len("c", &c, d.n_c)?;
    let (cx, cu) = fun.mixed_constraints_jacobian(x, u);
    expect_shape("c_x", &cx, d.n_c, d.n)?;
    expect_shape("c_u", &cu, d.n_c, d.m)?;
    checks.push(compare("c_x", &cx, &fd_jacobian(x, d.n_c, |xx| fun.mixed_constraints(xx, u)))?);
    checks.push(compare("c_u", &cu, &fd_jacobian(u, d.n_c, |uu| fun.mixed_constraints(x, uu)))?);

    let h = fun.boundary(x, x);
    expect_len("h", &h, d.n_h)?;
    let (h0, ht) = fun.boundary_jacobian(x, x);
    expect_shape("h_x(0)", &h0, d.n_h, d.n)?;
    expect_shape("h_x(T)", &ht, d.n_h, d.n)?;
    checks.push(compare("h_x(0)", &h0, &fd_jacobian(x, d.n_h, |xx| fun.boundary(xx, x)))?);
    checks.push(compare("h_x(T)", &ht, &fd_jacobian(x, d.n_h, |xx| fun.boundary(x, xx)))?);

    Ok(ValidationReport { checks })
}

/// Free-final-time problem rewritten on `tau = t / T in [0, 1]` with `T`
/// appended to the state: `(x, T)' = (T f(x, u), 0)`, running cost `T l`.
struct FreeTimeAugmented {
    inner: Arc<dyn OcpFunctions>,
}

impl FreeTimeAugmented {
    fn split<'a>(&self, xa: &'a [f64]) -> (&'a [f64], f64) {
        let n = xa.len() - 1;
        (&xa[..n], xa[n])
    }

    /// Appends a zero column for the time state.
    fn widen(m: &Matrix) -> Matrix {
        DMat::from_fn(m.nrows(), m.ncols() + 1, |i, j| if j < m.ncols() { m[(i, j)] } else { 0.0 })
    }
}

impl OcpFunctions for FreeTimeAugmented {
    fn dims(&self) -> OcpDims {
        let d = self.inner.dims();
        OcpDims { n: d.n + 1, ..d }
    }

    fn dynamics(&self, xa: &[f64], u: &[f64]) -> Vec<f64> {
        let (x, t) = self.split(xa);
        let mut f: Vec<f64> = self.inner.dynamics(x, u).into_iter().map(|v| t * v).collect();
        f.push(0.0);
        f
    }

    fn dynamics_jacobian(&self, xa: &[f64], u: &[f64]) -> (Matrix, Matrix) {
        let (x, t) = self.split(xa);
        let n = x.len();
        let f = self.inner.dynamics(x, u);
        let (fx, fu) = self.inner.dynamics_jacobian(x, u);
        let ax = DMat::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
            (true, true) => t * fx[(i, j)],
            (true, false) => f[i],
            _ => 0.0,
        });
        let au = DMat::from_fn(n + 1, u.len(), |i, j| if i < n { t * fu[(i, j)] } else { 0.0 });
        (ax, au)
    }

    fn running_cost(&self, xa: &[f64], u: &[f64]) -> f64 {
        let (x, t) = self.split(xa);
        t * self.inner.running_cost(x, u)
    }

    fn running_cost_gradient(&self, xa: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (x, t) = self.split(xa);
        let (lx, lu) = self.inner.running_cost_gradient(x, u);
        let mut gx: Vec<f64> = lx.into_iter().map(|v| t * v).collect();
        gx.push(self.inner.running_cost(x, u));
        (gx, lu.into_iter().map(|v| t * v).collect())
    }

    fn terminal_cost(&self, xa: &[f64]) -> f64 {
        self.inner.terminal_cost(self.split(xa).0)
    }

    fn terminal_cost_gradient(&self, xa: &[f64]) -> Vec<f64> {
        let mut g = self.inner.terminal_cost_gradient(self.split(xa).0);
        g.push(0.0);
        g
    }

    fn state_constraints(&self, xa: &[f64]) -> Vec<f64> {
        self.inner.state_constraints(self.split(xa).0)
    }

    fn state_constraints_jacobian(&self, xa: &[f64]) -> Matrix {
        Self::widen(&self.inner.state_constraints_jacobian(self.split(xa).0))
    }

    fn mixed_constraints(&self, xa: &[f64], u: &[f64]) -> Vec<f64> {
        self.inner.mixed_constraints(self.split(xa).0, u)
    }

    fn mixed_constraints_jacobian(&self, xa: &[f64], u: &[f64]) -> (Matrix, Matrix) {
        let (cx, cu) = self.inner.mixed_constraints_jacobian(self.split(xa).0, u);
        (Self::widen(&cx), cu)
    }

    fn boundary(&self, x0: &[f64], xt: &[f64]) -> Vec<f64> {
        self.inner.boundary(self.split(x0).0, self.split(xt).0)
    }

    fn boundary_jacobian(&self, x0: &[f64], xt: &[f64]) -> (Matrix, Matrix) {
        let (h0, ht) = self.inner.boundary_jacobian(self.split(x0).0, self.split(xt).0);
        (Self::widen(&h0), Self::widen(&ht))
    }
}

/// Rewrites a free-final-time problem on the unit horizon with the final time
/// as an extra constant state (last component). Fixed-horizon specs are
/// returned unchanged.
pub fn to_fixed_time(spec: &OcpSpec) -> OcpSpec {
    match spec.horizon {
        Horizon::Fixed(_) => spec.clone(),
        Horizon::Free => OcpSpec {
            name: spec.name.clone(),
            horizon: Horizon::Fixed(1.0),
            functions: Arc::new(FreeTimeAugmented { inner: spec.functions.clone() }),
        },
    }
}

#[cfg(test)]
pub(crate) mod test_problems {
    use super::*;

    /// `x' = 1`, cost `int u^2`, `x(0) = 0`, `x(T) = 5`.
    pub struct Drift;

    impl OcpFunctions for Drift {
        fn dims(&self) -> OcpDims {
            OcpDims { n: 1, m: 1, n_g: 0, n_c: 0, n_h: 2 }
        }
        fn dynamics(&self, _x: &[f64], _u: &[f64]) -> Vec<f64> {
            vec![1.0]
        }
        fn dynamics_jacobian(&self, _x: &[f64], _u: &[f64]) -> (Matrix, Matrix) {
            (DMat::zeros(1, 1), DMat::zeros(1, 1))
        }
        fn running_cost(&self, _x: &[f64], u: &[f64]) -> f64 {
            u[0] * u[0]
        }
        fn running_cost_gradient(&self, _x: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
            (vec![0.0], vec![2.0 * u[0]])
        }
        fn boundary(&self, x0: &[f64], xt: &[f64]) -> Vec<f64> {
            vec![x0[0], xt[0] - 5.0]
        }
        fn boundary_jacobian(&self, _x0: &[f64], _xt: &[f64]) -> (Matrix, Matrix) {
            (DMat::from_rows(&[&[1.0], &[0.0]]), DMat::from_rows(&[&[0.0], &[1.0]]))
        }
    }
}
