//! Residual and Jacobian of the Lobatto IIIA (Hermite-Simpson) discretization.

use super::{BcJacobian, DaeDims, DaeProblem, DaeSolution, EvalError, PointJacobian};
use crate::linalg::{AbdLayout, AbdMatrix, DMat};
use crate::Matrix;

/// Per-component collocation row scale `1 + max_i |F_k(t_i)|` taken from a guess.
pub(crate) fn row_scale<P: DaeProblem + ?Sized>(problem: &P, guess: &DaeSolution) -> Result<Vec<f64>, EvalError> {
    let d = problem.dims();
    let mut scale = vec![1.0f64; d.n_y];
    let mut f = vec![0.0; d.n_y];
    let mut g = vec![0.0; d.n_z];
    for (i, &t) in guess.times().iter().enumerate() {
        problem.rhs(t, guess.y_at(i), guess.z_at(i), &guess.params, &mut f)?;
        problem.alg(t, guess.y_at(i), guess.z_at(i), &guess.params, &mut g)?;
        for (s, v) in scale.iter_mut().zip(&f) {
            if !v.is_finite() {
                return Err(EvalError::Domain);
            }
            *s = (*s).max(1.0 + v.abs());
        }
    }
    Ok(scale)
}

/// True when the discretized residual can be evaluated at the solution's
/// nodes and midpoints.
pub(crate) fn is_feasible<P: DaeProblem + ?Sized>(problem: &P, sol: &DaeSolution) -> bool {
    let scale = vec![1.0; problem.dims().n_y];
    let col = Collocation::new(problem, sol.mesh.nodes(), &scale);
    col.residual(&col.pack(sol)).is_ok()
}

pub(crate) struct Collocation<'a, P: ?Sized> {
    problem: &'a P,
    dims: DaeDims,
    t: &'a [f64],
    scale: &'a [f64],
    pub layout: AbdLayout,
}

/// Residual at a point together with the intermediate quantities the
/// Jacobian and the defect estimate reuse.
pub(crate) struct Evaluation {
    /// Scaled residual in the natural row ordering.
    pub res: Vec<f64>,
    pub f_nodes: Vec<f64>,
    pub y_mid: Vec<f64>,
}

impl<'a, P: DaeProblem + ?Sized> Collocation<'a, P> {
    pub fn new(problem: &'a P, t: &'a [f64], scale: &'a [f64]) -> Self {
        let dims = problem.dims();
        let layout = AbdLayout::new(t.len() - 1, dims.n_y, dims.n_z, dims.n_p);
        Collocation { problem, dims, t, scale, layout }
    }

    fn n_int(&self) -> usize {
        self.t.len() - 1
    }

    pub fn pack(&self, sol: &DaeSolution) -> Vec<f64> {
        let l = &self.layout;
        let (ny, nz) = (self.dims.n_y, self.dims.n_z);
        let mut x = vec![0.0; l.dim()];
        for i in 0..=self.n_int() {
            x[l.y_offset(i)..l.y_offset(i) + ny].copy_from_slice(sol.y_at(i));
            x[l.z_offset(i)..l.z_offset(i) + nz].copy_from_slice(sol.z_at(i));
            if i < self.n_int() {
                x[l.zm_offset(i)..l.zm_offset(i) + nz].copy_from_slice(sol.z_mid_at(i));
            }
        }
        x[l.p_offset()..].copy_from_slice(&sol.params);
        x
    }

    pub fn unpack(&self, x: &[f64], sol: &mut DaeSolution) {
        let (ny, nz) = (self.dims.n_y, self.dims.n_z);
        let nn = self.t.len();
        sol.y.resize(nn * ny, 0.0);
        sol.z.resize(nn * nz, 0.0);
        sol.z_mid.resize((nn - 1) * nz, 0.0);
        for i in 0..nn {
            sol.y[i * ny..(i + 1) * ny].copy_from_slice(self.y(x, i));
            sol.z[i * nz..(i + 1) * nz].copy_from_slice(self.z(x, i));
            if i + 1 < nn {
                sol.z_mid[i * nz..(i + 1) * nz].copy_from_slice(self.zm(x, i));
            }
        }
        sol.params.copy_from_slice(self.p(x));
        if sol.yp.len() != nn * ny {
            sol.yp.clear();
        }
    }

    #[inline]
    fn y<'x>(&self, x: &'x [f64], i: usize) -> &'x [f64] {
        let o = self.layout.y_offset(i);
        &x[o..o + self.dims.n_y]
    }

    #[inline]
    fn z<'x>(&self, x: &'x [f64], i: usize) -> &'x [f64] {
        let o = self.layout.z_offset(i);
        &x[o..o + self.dims.n_z]
    }

    #[inline]
    fn zm<'x>(&self, x: &'x [f64], i: usize) -> &'x [f64] {
        let o = self.layout.zm_offset(i);
        &x[o..o + self.dims.n_z]
    }

    #[inline]
    fn p<'x>(&self, x: &'x [f64]) -> &'x [f64] {
        &x[self.layout.p_offset()..]
    }

    pub fn residual(&self, x: &[f64]) -> Result<Evaluation, EvalError> {
        let (ny, nz) = (self.dims.n_y, self.dims.n_z);
        let l = &self.layout;
        let n = self.n_int();
        let p = self.p(x);
        let mut res = vec![0.0; l.dim()];
        let mut f_nodes = vec![0.0; (n + 1) * ny];
        for i in 0..=n {
            let (yi, zi) = (self.y(x, i), self.z(x, i));
            self.problem.rhs(self.t[i], yi, zi, p, &mut f_nodes[i * ny..(i + 1) * ny])?;
            let r0 = l.node_row(i);
            self.problem.alg(self.t[i], yi, zi, p, &mut res[r0..r0 + nz])?;
        }
        let mut y_mid = vec![0.0; n * ny];
        let mut f_mid = vec![0.0; ny];
        for i in 0..n {
            let h = self.t[i + 1] - self.t[i];
            let tm = self.t[i] + 0.5 * h;
            let (ya, yb) = (self.y(x, i), self.y(x, i + 1));
            let (fa, fb) = (&f_nodes[i * ny..(i + 1) * ny], &f_nodes[(i + 1) * ny..(i + 2) * ny]);
            let ym = &mut y_mid[i * ny..(i + 1) * ny];
            for k in 0..ny {
                ym[k] = 0.5 * (ya[k] + yb[k]) - h / 8.0 * (fb[k] - fa[k]);
            }
            let zm = self.zm(x, i);
            self.problem.rhs(tm, ym, zm, p, &mut f_mid)?;
            let r0 = l.interval_row(i);
            for k in 0..ny {
                let c = yb[k] - ya[k] - h / 6.0 * (fa[k] + 4.0 * f_mid[k] + fb[k]);
                res[r0 + k] = c / (h * self.scale[k]);
            }
            self.problem.alg(tm, ym, zm, p, &mut res[r0 + ny..r0 + ny + nz])?;
        }
        let r0 = l.bc_row();
        self.problem.bc(self.y(x, 0), self.y(x, n), p, &mut res[r0..r0 + l.n_bc()])?;
        if res.iter().any(|v| !v.is_finite()) || f_nodes.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::Domain);
        }
        Ok(Evaluation { res, f_nodes, y_mid })
    }

    pub fn jacobian(&self, x: &[f64], ev: &Evaluation) -> Result<AbdMatrix<f64>, EvalError> {
        let DaeDims { n_y: ny, n_z: nz, n_p: np } = self.dims;
        let n = self.n_int();
        let p = self.p(x);
        let mut a = AbdMatrix::zeros(self.layout);

        let mut node_jac = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut j = PointJacobian::zeros(self.dims);
            self.problem.point_jacobian(self.t[i], self.y(x, i), self.z(x, i), p, &mut j)?;
            let b = &mut a.nodes[i];
            for r in 0..nz {
                for c in 0..ny {
                    b.local[(r, c)] = j.gy[(r, c)];
                }
                for c in 0..nz {
                    b.local[(r, ny + c)] = j.gz[(r, c)];
                }
                for c in 0..np {
                    b.params[(r, c)] = j.gp[(r, c)];
                }
            }
            node_jac.push(j);
        }

        let eye = DMat::<f64>::identity(ny);
        for i in 0..n {
            let h = self.t[i + 1] - self.t[i];
            let tm = self.t[i] + 0.5 * h;
            let (ja, jb) = (&node_jac[i], &node_jac[i + 1]);
            let mut jm = PointJacobian::zeros(self.dims);
            self.problem.point_jacobian(tm, &ev.y_mid[i * ny..(i + 1) * ny], self.zm(x, i), p, &mut jm)?;

            // derivatives of the midpoint state
            let dym_dya = eye.scaled(0.5).plus(h / 8.0, &ja.fy);
            let dym_dza = ja.fz.scaled(h / 8.0);
            let dym_dyb = eye.scaled(0.5).plus(-h / 8.0, &jb.fy);
            let dym_dzb = jb.fz.scaled(-h / 8.0);
            let dym_dp = ja.fp.plus(-1.0, &jb.fp).scaled(h / 8.0);

            let c = h / 6.0;
            let fm4 = jm.fy.scaled(4.0);
            let dc_dya = eye.scaled(-1.0).plus(-c, &ja.fy.plus(1.0, &fm4.matmul(&dym_dya)));
            let dc_dza = ja.fz.plus(1.0, &fm4.matmul(&dym_dza)).scaled(-c);
            let dc_dzm = jm.fz.scaled(-4.0 * c);
            let dc_dyb = eye.plus(-c, &jb.fy.plus(1.0, &fm4.matmul(&dym_dyb)));
            let dc_dzb = jb.fz.plus(1.0, &fm4.matmul(&dym_dzb)).scaled(-c);
            let dc_dp = ja.fp.plus(1.0, &jb.fp).plus(1.0, &fm4.matmul(&dym_dp)).plus(4.0, &jm.fp).scaled(-c);

            let dg_dya = jm.gy.matmul(&dym_dya);
            let dg_dza = jm.gy.matmul(&dym_dza);
            let dg_dyb = jm.gy.matmul(&dym_dyb);
            let dg_dzb = jm.gy.matmul(&dym_dzb);
            let dg_dp = jm.gy.matmul(&dym_dp).plus(1.0, &jm.gp);

            let b = &mut a.intervals[i];
            let (cy0, cz0, czm, cy1, cz1) = (0, ny, ny + nz, ny + 2 * nz, 2 * ny + 2 * nz);
            for r in 0..ny {
                let s = 1.0 / (h * self.scale[r]);
                put_row(&mut b.local, r, cy0, &dc_dya, r, s);
                put_row(&mut b.local, r, cz0, &dc_dza, r, s);
                put_row(&mut b.local, r, czm, &dc_dzm, r, s);
                put_row(&mut b.local, r, cy1, &dc_dyb, r, s);
                put_row(&mut b.local, r, cz1, &dc_dzb, r, s);
                put_row(&mut b.params, r, 0, &dc_dp, r, s);
            }
            for r in 0..nz {
                let rr = ny + r;
                put_row(&mut b.local, rr, cy0, &dg_dya, r, 1.0);
                put_row(&mut b.local, rr, cz0, &dg_dza, r, 1.0);
                put_row(&mut b.local, rr, czm, &jm.gz, r, 1.0);
                put_row(&mut b.local, rr, cy1, &dg_dyb, r, 1.0);
                put_row(&mut b.local, rr, cz1, &dg_dzb, r, 1.0);
                put_row(&mut b.params, rr, 0, &dg_dp, r, 1.0);
            }
        }

        let mut bj = BcJacobian::zeros(self.dims);
        self.problem.bc_jacobian(self.y(x, 0), self.y(x, n), p, &mut bj)?;
        a.bc.ya = bj.ya;
        a.bc.yb = bj.yb;
        a.bc.params = bj.p;
        Ok(a)
    }

    /// Defect of the C1 cubic interpolant at the two Gauss points of each
    /// interval, relative to `1 + |F|` and weighted by the interval length.
    pub fn interval_residuals(&self, x: &[f64], ev: &Evaluation) -> Vec<f64> {
        let ny = self.dims.n_y;
        let p = self.p(x);
        let n = self.n_int();
        let g = 0.5 / 3f64.sqrt();
        let mut out = Vec::with_capacity(n);
        let mut yv = vec![0.0; ny];
        let mut dy = vec![0.0; ny];
        let mut zv = vec![0.0; self.dims.n_z];
        let mut f = vec![0.0; ny];
        for i in 0..n {
            let h = self.t[i + 1] - self.t[i];
            let (ya, yb) = (self.y(x, i), self.y(x, i + 1));
            let (fa, fb) = (&ev.f_nodes[i * ny..(i + 1) * ny], &ev.f_nodes[(i + 1) * ny..(i + 2) * ny]);
            let (za, zm, zb) = (self.z(x, i), self.zm(x, i), self.z(x, i + 1));
            let mut worst = 0.0f64;
            for s in [0.5 - g, 0.5 + g] {
                super::mesh::hermite(s, h, ya, fa, yb, fb, &mut yv, &mut dy);
                super::mesh::quadratic(s, za, zm, zb, &mut zv);
                let r = match self.problem.rhs(self.t[i] + s * h, &yv, &zv, p, &mut f) {
                    Ok(()) => (0..ny).map(|k| (dy[k] - f[k]).abs() / (1.0 + f[k].abs())).fold(0.0, f64::max),
                    Err(_) => f64::INFINITY,
                };
                worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
            }
            out.push(h * worst);
        }
        out
    }
}

fn put_row(dst: &mut Matrix, dst_row: usize, col0: usize, src: &Matrix, src_row: usize, s: f64) {
    for (c, v) in src.row(src_row).iter().enumerate() {
        dst[(dst_row, col0 + c)] = s * v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvpdae::Mesh;

    /// y1' = y2 z + p, y2' = -sin(y1) + t z^2, 0 = z^3 + z - y1 y2 - p,
    /// bc: y1(0) - p^2, y2(T) y1(0) - 1, p + y1(T) - 2.
    struct Knot;

    impl DaeProblem for Knot {
        fn dims(&self) -> DaeDims {
            DaeDims { n_y: 2, n_z: 1, n_p: 1 }
        }
        fn horizon(&self) -> f64 {
            1.5
        }
        fn rhs(&self, t: f64, y: &[f64], z: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
            out[0] = y[1] * z[0] + p[0];
            out[1] = -y[0].sin() + t * z[0] * z[0];
            Ok(())
        }
        fn alg(&self, _t: f64, y: &[f64], z: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
            out[0] = z[0].powi(3) + z[0] - y[0] * y[1] - p[0];
            Ok(())
        }
        fn bc(&self, ya: &[f64], yb: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
            out[0] = ya[0] - p[0] * p[0];
            out[1] = yb[1] * ya[0] - 1.0;
            out[2] = p[0] + yb[0] - 2.0;
            Ok(())
        }
        fn point_jacobian(
            &self,
            t: f64,
            y: &[f64],
            z: &[f64],
            _p: &[f64],
            j: &mut PointJacobian,
        ) -> Result<(), EvalError> {
            j.fy = DMat::from_rows(&[&[0.0, z[0]], &[-y[0].cos(), 0.0]]);
            j.fz = DMat::from_rows(&[&[y[1]], &[2.0 * t * z[0]]]);
            j.fp = DMat::from_rows(&[&[1.0], &[0.0]]);
            j.gy = DMat::from_rows(&[&[-y[1], -y[0]]]);
            j.gz = DMat::from_rows(&[&[3.0 * z[0] * z[0] + 1.0]]);
            j.gp = DMat::from_rows(&[&[-1.0]]);
            Ok(())
        }
    }

    #[test]
    fn assembled_jacobian_matches_differences() {
        let mesh = Mesh::new(vec![0.0, 0.3, 0.7, 1.2, 1.5]).unwrap();
        let y: Vec<Vec<f64>> = mesh.nodes().iter().map(|t| vec![0.5 + t, 1.0 - 0.3 * t]).collect();
        let z: Vec<Vec<f64>> = mesh.nodes().iter().map(|t| vec![0.2 + 0.1 * t]).collect();
        let guess = DaeSolution::guess(Knot.dims(), mesh.clone(), &y, &z, &[0.7]).unwrap();
        let scale = row_scale(&Knot, &guess).unwrap();
        let col = Collocation::new(&Knot, mesh.nodes(), &scale);
        let mut x = col.pack(&guess);
        // break the symmetry of the midpoint guesses
        for (k, v) in x.iter_mut().enumerate() {
            *v += 0.01 * (k as f64).sin();
        }
        let ev = col.residual(&x).unwrap();
        let exact = col.jacobian(&x, &ev).unwrap().to_dense();
        let n = x.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let rp = col.residual(&xp).unwrap().res;
            let rm = col.residual(&xm).unwrap().res;
            for i in 0..n {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                worst = worst.max((fd - exact[(i, j)]).abs() / (1.0 + fd.abs()));
            }
        }
        assert!(worst < 1e-5, "max relative deviation {worst:e}");
    }
}
