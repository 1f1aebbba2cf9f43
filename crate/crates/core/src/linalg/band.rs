//! Banded LU with row partial pivoting, LAPACK `gbtrf` layout.
//!
//! Pivot candidates for column `j` are rows `j..=j+kl`, which is every row that
//! can hold a nonzero there, so this is ordinary partial pivoting restricted to
//! the band. Row interchanges widen the upper band to `kl + ku`.

use crate::Real;

#[derive(Debug, Clone)]
pub(crate) struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, ldab, ab: vec![T::zero(); ldab * n] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.kl + self.ku >= j && i <= j + self.kl, "({i},{j}) outside band");
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(i <= j + self.kl && j <= i + self.ku, "({i},{j}) outside band");
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    /// Factorizes in place. On failure returns the column whose pivot fell
    /// below `rel_tol` times the original norm of the candidate row.
    pub fn factorize(mut self, rel_tol: T) -> Result<BandLu<T>, usize> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut rownorm = vec![T::zero(); n];
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n.saturating_sub(1));
            for i in lo..=hi {
                let v = self.ab[self.idx(i, j)].abs();
                if v > rownorm[i] {
                    rownorm[i] = v;
                }
            }
        }
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.ab[self.idx(j, j)].abs();
            for i in j + 1..=last {
                let v = self.ab[self.idx(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() || !best.is_finite() || best < rel_tol * rownorm[p] {
                return Err(j);
            }
            ipiv[j] = p;
            let cmax = (j + kl + ku).min(n - 1);
            if p != j {
                for c in j..=cmax {
                    let a = self.idx(j, c);
                    let b = self.idx(p, c);
                    self.ab.swap(a, b);
                }
                rownorm.swap(j, p);
            }
            let piv = self.ab[self.idx(j, j)];
            for i in j + 1..=last {
                let li = self.idx(i, j);
                let l = self.ab[li] / piv;
                self.ab[li] = l;
                if l == T::zero() {
                    continue;
                }
                for c in j + 1..=cmax {
                    let u = self.ab[self.idx(j, c)];
                    if u != T::zero() {
                        let k = self.idx(i, c);
                        self.ab[k] -= l * u;
                    }
                }
            }
        }
        Ok(BandLu { m: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandLu<T> {
    m: BandMatrix<T>,
    ipiv: Vec<usize>,
}

impl<T: Real> BandLu<T> {
    pub fn solve_in_place(&self, b: &mut [T]) {
        let m = &self.m;
        let n = m.n;
        assert_eq!(b.len(), n);
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj == T::zero() {
                continue;
            }
            let last = (j + m.kl).min(n - 1);
            for i in j + 1..=last {
                b[i] -= m.ab[m.idx(i, j)] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= m.ab[m.idx(j, j)];
            let bj = b[j];
            if bj == T::zero() {
                continue;
            }
            let first = j.saturating_sub(m.kl + m.ku);
            for i in first..j {
                b[i] -= m.ab[m.idx(i, j)] * bj;
            }
        }
    }
}
