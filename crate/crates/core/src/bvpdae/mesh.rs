//! Meshes, interpolation of discrete solutions, and adaptive refinement.

use thiserror::Error;

use super::{DaeProblem, DaeSolution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("mesh must start at 0, starts at {0}")]
    BadStart(f64),
    #[error("mesh nodes must be finite and strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("mesh interval {index} has length {length:e}, below the minimum")]
    Degenerate { index: usize, length: f64 },
    #[error("time {t} outside [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("refined mesh would exceed {limit} points")]
    Limit { limit: usize },
    #[error("solution carries no node derivatives; solve it first")]
    MissingDerivatives,
}

/// Strictly increasing time grid `0 = t_0 < ... < t_N` with `N >= 2`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn new(nodes: Vec<f64>) -> Result<Self, MeshError> {
        if nodes.len() < 3 {
            return Err(MeshError::TooFewNodes(nodes.len()));
        }
        if nodes[0] != 0.0 {
            return Err(MeshError::BadStart(nodes[0]));
        }
        for i in 1..nodes.len() {
            if !nodes[i].is_finite() || nodes[i] <= nodes[i - 1] {
                return Err(MeshError::NotIncreasing(i));
            }
        }
        let horizon = nodes[nodes.len() - 1];
        for i in 1..nodes.len() {
            let length = nodes[i] - nodes[i - 1];
            if length <= 1e-12 * horizon {
                return Err(MeshError::Degenerate { index: i - 1, length });
            }
        }
        Ok(Mesh { nodes })
    }

    /// `n_points` equally spaced nodes on `[0, horizon]`.
    pub fn uniform(horizon: f64, n_points: usize) -> Result<Self, MeshError> {
        if n_points < 3 {
            return Err(MeshError::TooFewNodes(n_points));
        }
        let n = (n_points - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_points).map(|i| horizon * i as f64 / n).collect();
        nodes[n_points - 1] = horizon;
        Mesh::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index `i` of the interval `[t_i, t_{i+1}]` containing `t`.
    pub fn locate(&self, t: f64) -> Result<usize, MeshError> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(MeshError::OutOfRange { t, horizon });
        }
        let k = self.nodes.partition_point(|&s| s <= t);
        Ok(k.saturating_sub(1).min(self.nodes.len() - 2))
    }
}

impl TryFrom<Vec<f64>> for Mesh {
    type Error = MeshError;
    fn try_from(v: Vec<f64>) -> Result<Self, MeshError> {
        Mesh::new(v)
    }
}

impl From<Mesh> for Vec<f64> {
    fn from(m: Mesh) -> Self {
        m.nodes
    }
}

/// Cubic Hermite interpolant on one interval at local coordinate `s` in
/// `[0, 1]`, writing the value and its time derivative.
pub(crate) fn hermite(s: f64, h: f64, ya: &[f64], fa: &[f64], yb: &[f64], fb: &[f64], y: &mut [f64], dy: &mut [f64]) {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let d00 = 6.0 * s2 - 6.0 * s;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d11 = 3.0 * s2 - 2.0 * s;
    for k in 0..y.len() {
        y[k] = h00 * ya[k] + h * (h10 * fa[k] + h11 * fb[k]) + h01 * yb[k];
        dy[k] = (d00 * (ya[k] - yb[k])) / h + d10 * fa[k] + d11 * fb[k];
    }
}

/// Quadratic through `(0, za)`, `(1/2, zm)`, `(1, zb)`.
pub(crate) fn quadratic(s: f64, za: &[f64], zm: &[f64], zb: &[f64], z: &mut [f64]) {
    let l0 = 2.0 * (s - 0.5) * (s - 1.0);
    let lm = -4.0 * s * (s - 1.0);
    let l1 = 2.0 * s * (s - 0.5);
    for k in 0..z.len() {
        z[k] = l0 * za[k] + lm * zm[k] + l1 * zb[k];
    }
}

/// Piecewise linear through `(0, za)`, `(1/2, zm)`, `(1, zb)`.
fn broken_line(s: f64, za: &[f64], zm: &[f64], zb: &[f64], z: &mut [f64]) {
    for k in 0..z.len() {
        z[k] = if s <= 0.5 { za[k] + 2.0 * s * (zm[k] - za[k]) } else { zm[k] + (2.0 * s - 1.0) * (zb[k] - zm[k]) };
    }
}

/// Evaluates a solved solution at `t`: `y` from the C1 cubic interpolant and
/// `z` from the quadratic through node, midpoint and node values.
pub fn interpolate(sol: &DaeSolution, t: f64) -> Result<(Vec<f64>, Vec<f64>), MeshError> {
    if sol.yp.is_empty() {
        return Err(MeshError::MissingDerivatives);
    }
    let i = sol.mesh.locate(t)?;
    let tn = sol.mesh.nodes();
    let h = tn[i + 1] - tn[i];
    let s = (t - tn[i]) / h;
    let (ny, nz) = (sol.dims.n_y, sol.dims.n_z);
    let mut y = vec![0.0; ny];
    let mut dy = vec![0.0; ny];
    let mut z = vec![0.0; nz];
    if t == tn[i] {
        y.copy_from_slice(sol.y_at(i));
        z.copy_from_slice(sol.z_at(i));
    } else if t == tn[i + 1] {
        y.copy_from_slice(sol.y_at(i + 1));
        z.copy_from_slice(sol.z_at(i + 1));
    } else {
        let (fa, fb) = (sol.yp_at(i).unwrap(), sol.yp_at(i + 1).unwrap());
        hermite(s, h, sol.y_at(i), fa, sol.y_at(i + 1), fb, &mut y, &mut dy);
        quadratic(s, sol.z_at(i), sol.z_mid_at(i), sol.z_at(i + 1), &mut z);
    }
    Ok((y, z))
}

/// Per-interval defect `h_i max |S'(t) - F(t, S(t), Z(t), p)| / (1 + |F|)`
/// over the two Gauss points of each interval, where `S` is the C1 cubic and
/// `Z` the quadratic interpolant.
pub fn estimate_residual<P: DaeProblem + ?Sized>(problem: &P, sol: &DaeSolution) -> Result<Vec<f64>, MeshError> {
    let ny = sol.dims.n_y;
    let mut yp = vec![0.0; sol.n_nodes() * ny];
    let mut zv = vec![0.0; sol.dims.n_z];
    for (i, &t) in sol.times().iter().enumerate() {
        let out = &mut yp[i * ny..(i + 1) * ny];
        if problem.rhs(t, sol.y_at(i), sol.z_at(i), &sol.params, out).is_err() {
            out.fill(f64::NAN);
        }
    }
    let g = 0.5 / 3f64.sqrt();
    let tn = sol.times();
    let mut y = vec![0.0; ny];
    let mut dy = vec![0.0; ny];
    let mut f = vec![0.0; ny];
    let mut res = Vec::with_capacity(sol.n_intervals());
    for i in 0..sol.n_intervals() {
        let h = tn[i + 1] - tn[i];
        let (fa, fb) = (&yp[i * ny..(i + 1) * ny], &yp[(i + 1) * ny..(i + 2) * ny]);
        let mut worst = 0.0f64;
        for s in [0.5 - g, 0.5 + g] {
            hermite(s, h, sol.y_at(i), fa, sol.y_at(i + 1), fb, &mut y, &mut dy);
            quadratic(s, sol.z_at(i), sol.z_mid_at(i), sol.z_at(i + 1), &mut zv);
            let r = match problem.rhs(tn[i] + s * h, &y, &zv, &sol.params, &mut f) {
                Ok(()) => (0..ny).map(|k| (dy[k] - f[k]).abs() / (1.0 + f[k].abs())).fold(0.0, f64::max),
                Err(_) => f64::INFINITY,
            };
            worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
        }
        res.push(h * worst);
    }
    Ok(res)
}

#[derive(Clone, Copy)]
enum YInterp {
    Hermite,
    Linear,
}

/// Adapts the mesh to the per-interval residuals: intervals above `tol` are
/// halved (split in three above `100 tol`) and adjacent pairs both below
/// `tol / 100` are merged. Returns the interpolated guess on the new mesh.
pub fn refine_mesh(sol: &DaeSolution, residuals: &[f64], tol: f64, max_points: usize) -> Result<DaeSolution, MeshError> {
    refine_with(sol, residuals, tol, max_points, YInterp::Hermite)
}

/// Like [`refine_mesh`] but interpolates `y` piecewise linearly through the
/// node and midpoint values, which keeps convex feasible sets feasible.
pub(crate) fn refine_mesh_linear(
    sol: &DaeSolution,
    residuals: &[f64],
    tol: f64,
    max_points: usize,
) -> Result<DaeSolution, MeshError> {
    refine_with(sol, residuals, tol, max_points, YInterp::Linear)
}

fn refine_with(
    sol: &DaeSolution,
    residuals: &[f64],
    tol: f64,
    max_points: usize,
    kind: YInterp,
) -> Result<DaeSolution, MeshError> {
    let n = sol.n_intervals();
    assert_eq!(residuals.len(), n, "one residual per interval");
    if sol.yp.is_empty() {
        return Err(MeshError::MissingDerivatives);
    }
    let tn = sol.times();
    let mut nodes = vec![0.0];
    let mut i = 0;
    while i < n {
        let (a, b) = (tn[i], tn[i + 1]);
        let r = residuals[i];
        let pieces = if r > 100.0 * tol {
            3
        } else if r > tol {
            2
        } else {
            1
        };
        let mergeable = pieces == 1
            && i + 1 < n
            && r < tol / 100.0
            && residuals[i + 1] < tol / 100.0
            && n >= 3;
        if mergeable {
            nodes.push(tn[i + 2]);
            i += 2;
            continue;
        }
        for k in 1..pieces {
            nodes.push(a + (b - a) * k as f64 / pieces as f64);
        }
        nodes.push(b);
        i += 1;
    }
    if nodes.len() > max_points {
        return Err(MeshError::Limit { limit: max_points });
    }
    if nodes.len() < 3 {
        nodes = vec![0.0, 0.5 * tn[n], tn[n]];
    }
    let mesh = Mesh::new(nodes)?;
    let (ny, nz) = (sol.dims.n_y, sol.dims.n_z);
    let nn = mesh.len();
    let mut y = vec![0.0; nn * ny];
    let mut z = vec![0.0; nn * nz];
    let mut z_mid = vec![0.0; (nn - 1) * nz];
    for (j, &t) in mesh.nodes().iter().enumerate() {
        eval_old(sol, t, kind, &mut y[j * ny..(j + 1) * ny], &mut z[j * nz..(j + 1) * nz]);
    }
    let mut scratch = vec![0.0; ny];
    for j in 0..nn - 1 {
        let t = 0.5 * (mesh.nodes()[j] + mesh.nodes()[j + 1]);
        eval_old(sol, t, kind, &mut scratch, &mut z_mid[j * nz..(j + 1) * nz]);
    }
    Ok(DaeSolution {
        dims: sol.dims,
        mesh,
        y,
        z,
        z_mid,
        params: sol.params.clone(),
        yp: Vec::new(),
        interval_residuals: Vec::new(),
        newton_iters: sol.newton_iters,
        residual_history: Vec::new(),
        mesh_rounds: sol.mesh_rounds,
        converged: false,
    })
}

/// Old solution at `t` for transfer onto a new mesh. Node values are copied
/// exactly; algebraic values use the broken line through node, midpoint and
/// node so that sign constraints on them are preserved.
fn eval_old(sol: &DaeSolution, t: f64, kind: YInterp, y: &mut [f64], z: &mut [f64]) {
    let tn = sol.times();
    let i = sol.mesh.locate(t).expect("time inside the old mesh");
    let h = tn[i + 1] - tn[i];
    let s = ((t - tn[i]) / h).clamp(0.0, 1.0);
    if s == 0.0 || s == 1.0 {
        let k = if s == 0.0 { i } else { i + 1 };
        y.copy_from_slice(sol.y_at(k));
        z.copy_from_slice(sol.z_at(k));
        return;
    }
    let (ya, yb) = (sol.y_at(i), sol.y_at(i + 1));
    let (fa, fb) = (sol.yp_at(i).unwrap(), sol.yp_at(i + 1).unwrap());
    match kind {
        YInterp::Hermite => {
            let mut dy = vec![0.0; y.len()];
            hermite(s, h, ya, fa, yb, fb, y, &mut dy);
        }
        YInterp::Linear => {
            let ym: Vec<f64> =
                (0..y.len()).map(|k| 0.5 * (ya[k] + yb[k]) - h / 8.0 * (fb[k] - fa[k])).collect();
            broken_line(s, ya, &ym, yb, y);
        }
    }
    broken_line(s, sol.z_at(i), sol.z_mid_at(i), sol.z_at(i + 1), z);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_validation() {
        assert!(Mesh::new(vec![0.0, 1.0]).is_err());
        assert!(matches!(Mesh::new(vec![0.0, 1.0, 1.0]), Err(MeshError::NotIncreasing(2))));
        assert!(matches!(Mesh::new(vec![0.1, 1.0, 2.0]), Err(MeshError::BadStart(_))));
        assert!(matches!(Mesh::new(vec![0.0, 1e-14, 1.0]), Err(MeshError::Degenerate { index: 0, .. })));
        let m = Mesh::uniform(4.0, 41).unwrap();
        assert_eq!(m.len(), 41);
        assert_eq!(m.horizon(), 4.0);
    }

    #[test]
    fn locate_intervals() {
        let m = Mesh::new(vec![0.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(m.locate(0.0).unwrap(), 0);
        assert_eq!(m.locate(1.0).unwrap(), 1);
        assert_eq!(m.locate(3.0).unwrap(), 2);
        assert_eq!(m.locate(4.0).unwrap(), 2);
        assert!(m.locate(4.5).is_err());
        assert!(m.locate(-0.1).is_err());
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // y = t^3 on [1, 3]
        let (a, b) = (1.0, 3.0);
        let h = b - a;
        for s in [0.0, 0.2, 0.5, 0.77, 1.0] {
            let mut y = [0.0];
            let mut dy = [0.0];
            hermite(s, h, &[a * a * a], &[3.0 * a * a], &[b * b * b], &[3.0 * b * b], &mut y, &mut dy);
            let t: f64 = a + s * h;
            assert!((y[0] - t.powi(3)).abs() < 1e-12);
            assert!((dy[0] - 3.0 * t * t).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_passes_through_points() {
        let mut z = [0.0];
        for (s, e) in [(0.0, 1.0), (0.5, 5.0), (1.0, -2.0)] {
            quadratic(s, &[1.0], &[5.0], &[-2.0], &mut z);
            assert!((z[0] - e).abs() < 1e-15);
        }
    }

    #[test]
    fn mesh_serde_validates() {
        let m: Result<Mesh, _> = serde_json::from_str("[0.0, 2.0, 1.0]");
        assert!(m.is_err());
    }
}
