//! Almost-block-diagonal Newton matrices of the collocation scheme.
//!
//! Unknowns are ordered node by node, `[Y_0, Z_0, Zm_0, Y_1, Z_1, Zm_1, ...,
//! Y_N, Z_N, P]`, and residual rows as `[node_0, interval_0, node_1, ...,
//! interval_{N-1}, node_N, bc]` where a node block holds the algebraic
//! equations at a mesh node and an interval block holds the collocation rows
//! followed by the algebraic equations at the interval midpoint.
//!
//! The factorization replicates the parameter vector at every node
//! (`P_{i+1} - P_i = 0`) so that parameter columns stay inside the band. Each
//! boundary row is attached to the left end when it does not touch `Y_N`, to
//! the right end otherwise; rows coupling both ends read `Y_0` through a
//! replicated copy carried to the right end. The result is a banded system
//! solved by band-restricted partial pivoting, with the same stability as
//! dense partial pivoting on the full matrix.

use super::band::{BandLu, BandMatrix};
use super::{DMat, LinalgError};
use crate::Real;

/// Block dimensions of a collocation Newton matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbdLayout {
    pub n_intervals: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub n_p: usize,
}

impl AbdLayout {
    pub fn new(n_intervals: usize, n_y: usize, n_z: usize, n_p: usize) -> Self {
        assert!(n_intervals >= 1, "at least one interval");
        AbdLayout { n_intervals, n_y, n_z, n_p }
    }

    #[inline]
    fn node_stride(&self) -> usize {
        self.n_y + 2 * self.n_z
    }

    /// `(N+1)(n_y+n_z) + N n_z + n_p`
    pub fn dim(&self) -> usize {
        self.n_intervals * self.node_stride() + self.n_y + self.n_z + self.n_p
    }

    #[inline]
    pub fn y_offset(&self, node: usize) -> usize {
        node * self.node_stride()
    }

    #[inline]
    pub fn z_offset(&self, node: usize) -> usize {
        node * self.node_stride() + self.n_y
    }

    #[inline]
    pub fn zm_offset(&self, interval: usize) -> usize {
        interval * self.node_stride() + self.n_y + self.n_z
    }

    #[inline]
    pub fn p_offset(&self) -> usize {
        self.n_intervals * self.node_stride() + self.n_y + self.n_z
    }

    /// First residual row of the algebraic block at a node.
    #[inline]
    pub fn node_row(&self, node: usize) -> usize {
        node * self.node_stride()
    }

    /// First residual row of an interval block (collocation, then midpoint).
    #[inline]
    pub fn interval_row(&self, interval: usize) -> usize {
        interval * self.node_stride() + self.n_z
    }

    #[inline]
    pub fn bc_row(&self) -> usize {
        self.n_intervals * self.node_stride() + self.n_z
    }

    pub fn n_bc(&self) -> usize {
        self.n_y + self.n_p
    }

    /// Width of an interval block's local columns
    /// `[Y_i, Z_i, Zm_i, Y_{i+1}, Z_{i+1}]`.
    pub fn interval_width(&self) -> usize {
        2 * self.n_y + 3 * self.n_z
    }
}

/// Algebraic rows at a node: columns `[Y_i, Z_i]` plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBlock<T> {
    pub local: DMat<T>,
    pub params: DMat<T>,
}

/// Collocation and midpoint rows of an interval: columns
/// `[Y_i, Z_i, Zm_i, Y_{i+1}, Z_{i+1}]` plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBlock<T> {
    pub local: DMat<T>,
    pub params: DMat<T>,
}

/// Boundary rows: columns `Y_0`, `Y_N` and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BcBlock<T> {
    pub ya: DMat<T>,
    pub yb: DMat<T>,
    pub params: DMat<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbdMatrix<T> {
    pub layout: AbdLayout,
    pub nodes: Vec<NodeBlock<T>>,
    pub intervals: Vec<IntervalBlock<T>>,
    pub bc: BcBlock<T>,
}

impl<T: Real> AbdMatrix<T> {
    pub fn zeros(layout: AbdLayout) -> Self {
        let AbdLayout { n_intervals, n_y, n_z, n_p } = layout;
        let nodes = (0..=n_intervals)
            .map(|_| NodeBlock { local: DMat::zeros(n_z, n_y + n_z), params: DMat::zeros(n_z, n_p) })
            .collect();
        let intervals = (0..n_intervals)
            .map(|_| IntervalBlock {
                local: DMat::zeros(n_y + n_z, layout.interval_width()),
                params: DMat::zeros(n_y + n_z, n_p),
            })
            .collect();
        let nb = layout.n_bc();
        AbdMatrix {
            layout,
            nodes,
            intervals,
            bc: BcBlock { ya: DMat::zeros(nb, n_y), yb: DMat::zeros(nb, n_y), params: DMat::zeros(nb, n_p) },
        }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Calls `f(row, col, value)` for every stored entry (including zeros).
    fn for_each_entry(&self, mut f: impl FnMut(usize, usize, T)) {
        let l = &self.layout;
        let (ny, nz) = (l.n_y, l.n_z);
        let p0 = l.p_offset();
        for (i, b) in self.nodes.iter().enumerate() {
            let r0 = l.node_row(i);
            for r in 0..nz {
                for c in 0..ny + nz {
                    f(r0 + r, l.y_offset(i) + c, b.local[(r, c)]);
                }
                for c in 0..l.n_p {
                    f(r0 + r, p0 + c, b.params[(r, c)]);
                }
            }
        }
        for (i, b) in self.intervals.iter().enumerate() {
            let r0 = l.interval_row(i);
            for r in 0..ny + nz {
                // [Y_i, Z_i, Zm_i] is contiguous, and so is [Y_{i+1}, Z_{i+1}]
                for c in 0..ny + 2 * nz {
                    f(r0 + r, l.y_offset(i) + c, b.local[(r, c)]);
                }
                for c in 0..ny + nz {
                    f(r0 + r, l.y_offset(i + 1) + c, b.local[(r, ny + 2 * nz + c)]);
                }
                for c in 0..l.n_p {
                    f(r0 + r, p0 + c, b.params[(r, c)]);
                }
            }
        }
        let r0 = l.bc_row();
        let yn = l.y_offset(l.n_intervals);
        for r in 0..l.n_bc() {
            for c in 0..ny {
                f(r0 + r, c, self.bc.ya[(r, c)]);
            }
            for c in 0..ny {
                f(r0 + r, yn + c, self.bc.yb[(r, c)]);
            }
            for c in 0..l.n_p {
                f(r0 + r, p0 + c, self.bc.params[(r, c)]);
            }
        }
    }

    /// Expands to a dense matrix in natural ordering.
    pub fn to_dense(&self) -> DMat<T> {
        let n = self.dim();
        let mut d = DMat::zeros(n, n);
        self.for_each_entry(|r, c, v| d[(r, c)] += v);
        d
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.dim());
        let mut out = vec![T::zero(); self.dim()];
        self.for_each_entry(|r, c, v| out[r] += v * x[c]);
        out
    }

    /// Structured LU factorization.
    pub fn factorize(&self) -> Result<AbdLu<T>, LinalgError> {
        let l = self.layout;
        let (ny, nz, np) = (l.n_y, l.n_z, l.n_p);
        let n_int = l.n_intervals;
        let nb = l.n_bc();

        let row_nonzero = |m: &DMat<T>, r: usize| m.row(r).iter().any(|v| *v != T::zero());
        let mut side = Vec::with_capacity(nb);
        let mut coupled = false;
        for r in 0..nb {
            let a = row_nonzero(&self.bc.ya, r);
            let b = row_nonzero(&self.bc.yb, r);
            let s = match (a, b) {
                (_, false) => BcSide::Left,
                (false, true) => BcSide::Right,
                (true, true) => {
                    coupled = true;
                    BcSide::Coupled
                }
            };
            side.push(s);
        }
        let nw = if coupled { ny } else { 0 };
        let n_left = side.iter().filter(|s| **s == BcSide::Left).count() + nw;
        let map = ExpandedMap { layout: l, nw, n_left, side };
        let n = map.dim();
        debug_assert_eq!(n, l.dim() + n_int * (np + nw) + nw);

        let mut trip: Vec<(usize, usize, T)> = Vec::with_capacity(n * (2 * map.block() + 4));
        let one = T::one();
        // replicated-column definitions
        for k in 0..nw {
            let r = map.w_def_row(k);
            trip.push((r, map.col_w(0, k), one));
            trip.push((r, map.col_y(0, k), -one));
        }
        for i in 0..n_int {
            for k in 0..np {
                let r = map.row_pcont(i, k);
                trip.push((r, map.col_p(i + 1, k), one));
                trip.push((r, map.col_p(i, k), -one));
            }
            for k in 0..nw {
                let r = map.row_wcont(i, k);
                trip.push((r, map.col_w(i + 1, k), one));
                trip.push((r, map.col_w(i, k), -one));
            }
        }
        for (i, b) in self.nodes.iter().enumerate() {
            for r in 0..nz {
                let er = map.row_node(i) + r;
                for c in 0..ny {
                    trip.push((er, map.col_y(i, c), b.local[(r, c)]));
                }
                for c in 0..nz {
                    trip.push((er, map.col_z(i, c), b.local[(r, ny + c)]));
                }
                for c in 0..np {
                    trip.push((er, map.col_p(i, c), b.params[(r, c)]));
                }
            }
        }
        for (i, b) in self.intervals.iter().enumerate() {
            for r in 0..ny + nz {
                let er = map.row_interval(i, r);
                for c in 0..ny {
                    trip.push((er, map.col_y(i, c), b.local[(r, c)]));
                    trip.push((er, map.col_y(i + 1, c), b.local[(r, ny + 2 * nz + c)]));
                }
                for c in 0..nz {
                    trip.push((er, map.col_z(i, c), b.local[(r, ny + c)]));
                    trip.push((er, map.col_zm(i, c), b.local[(r, ny + nz + c)]));
                    trip.push((er, map.col_z(i + 1, c), b.local[(r, 2 * ny + 2 * nz + c)]));
                }
                for c in 0..np {
                    trip.push((er, map.col_p(i, c), b.params[(r, c)]));
                }
            }
        }
        for r in 0..nb {
            let er = map.row_bc(r);
            let at_right = map.side[r] != BcSide::Left;
            let pnode = if at_right { n_int } else { 0 };
            for c in 0..ny {
                let ya = self.bc.ya[(r, c)];
                let col = if map.side[r] == BcSide::Coupled { map.col_w(n_int, c) } else { map.col_y(0, c) };
                trip.push((er, col, ya));
                trip.push((er, map.col_y(n_int, c), self.bc.yb[(r, c)]));
            }
            for c in 0..np {
                trip.push((er, map.col_p(pnode, c), self.bc.params[(r, c)]));
            }
        }

        let mut kl = 0usize;
        let mut ku = 0usize;
        for &(r, c, _) in &trip {
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
        let mut band = BandMatrix::zeros(n, kl, ku);
        for (r, c, v) in trip {
            if v != T::zero() {
                band.add(r, c, v);
            }
        }
        if !self.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let lu = band
            .factorize(T::lit(1e-14))
            .map_err(|col| LinalgError::Singular { block: map.block_of_col(col) })?;
        Ok(AbdLu { map, lu })
    }

    fn is_finite(&self) -> bool {
        self.nodes.iter().all(|b| b.local.is_finite() && b.params.is_finite())
            && self.intervals.iter().all(|b| b.local.is_finite() && b.params.is_finite())
            && self.bc.ya.is_finite()
            && self.bc.yb.is_finite()
            && self.bc.params.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BcSide {
    Left,
    Right,
    Coupled,
}

/// Index map between the natural ordering and the expanded band ordering.
#[derive(Debug, Clone)]
struct ExpandedMap {
    layout: AbdLayout,
    nw: usize,
    n_left: usize,
    side: Vec<BcSide>,
}

impl ExpandedMap {
    /// Per-node replicated state width `n_y + n_p + n_w`.
    #[inline]
    fn q(&self) -> usize {
        self.layout.n_y + self.layout.n_p + self.nw
    }

    #[inline]
    fn block(&self) -> usize {
        self.q() + 2 * self.layout.n_z
    }

    fn dim(&self) -> usize {
        self.layout.n_intervals * self.block() + self.q() + self.layout.n_z
    }

    #[inline]
    fn col_y(&self, i: usize, k: usize) -> usize {
        i * self.block() + k
    }

    #[inline]
    fn col_p(&self, i: usize, k: usize) -> usize {
        i * self.block() + self.layout.n_y + k
    }

    #[inline]
    fn col_w(&self, i: usize, k: usize) -> usize {
        i * self.block() + self.layout.n_y + self.layout.n_p + k
    }

    #[inline]
    fn col_z(&self, i: usize, k: usize) -> usize {
        i * self.block() + self.q() + k
    }

    #[inline]
    fn col_zm(&self, i: usize, k: usize) -> usize {
        i * self.block() + self.q() + self.layout.n_z + k
    }

    fn block_of_col(&self, col: usize) -> usize {
        (col / self.block()).min(self.layout.n_intervals)
    }

    #[inline]
    fn row_node(&self, i: usize) -> usize {
        self.n_left + i * self.block()
    }

    /// Row `r` of interval block `i`: collocation rows first, then midpoint.
    #[inline]
    fn row_interval(&self, i: usize, r: usize) -> usize {
        let l = &self.layout;
        let base = self.n_left + i * self.block() + l.n_z;
        if r < l.n_y {
            base + r
        } else {
            base + self.q() + (r - l.n_y)
        }
    }

    #[inline]
    fn row_pcont(&self, i: usize, k: usize) -> usize {
        self.n_left + i * self.block() + self.layout.n_z + self.layout.n_y + k
    }

    #[inline]
    fn row_wcont(&self, i: usize, k: usize) -> usize {
        self.n_left + i * self.block() + self.layout.n_z + self.layout.n_y + self.layout.n_p + k
    }

    #[inline]
    fn w_def_row(&self, k: usize) -> usize {
        k
    }

    fn row_bc(&self, r: usize) -> usize {
        let before = |s: BcSide| self.side[..r].iter().filter(|x| (**x == BcSide::Left) == (s == BcSide::Left)).count();
        if self.side[r] == BcSide::Left {
            self.nw + before(BcSide::Left)
        } else {
            let right0 = self.row_node(self.layout.n_intervals) + self.layout.n_z;
            right0 + before(BcSide::Right)
        }
    }
}

/// Factorization handle; immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct AbdLu<T> {
    map: ExpandedMap,
    lu: BandLu<T>,
}

impl<T: Real> AbdLu<T> {
    pub fn layout(&self) -> AbdLayout {
        self.map.layout
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>, LinalgError> {
        let l = self.map.layout;
        if rhs.len() != l.dim() {
            return Err(LinalgError::DimensionMismatch { expected: l.dim(), found: rhs.len() });
        }
        let (ny, nz, np) = (l.n_y, l.n_z, l.n_p);
        let m = &self.map;
        let mut b = vec![T::zero(); m.dim()];
        for i in 0..=l.n_intervals {
            for r in 0..nz {
                b[m.row_node(i) + r] = rhs[l.node_row(i) + r];
            }
        }
        for i in 0..l.n_intervals {
            for r in 0..ny + nz {
                b[m.row_interval(i, r)] = rhs[l.interval_row(i) + r];
            }
        }
        for r in 0..l.n_bc() {
            b[m.row_bc(r)] = rhs[l.bc_row() + r];
        }
        self.lu.solve_in_place(&mut b);
        let mut x = vec![T::zero(); l.dim()];
        for i in 0..=l.n_intervals {
            for k in 0..ny {
                x[l.y_offset(i) + k] = b[m.col_y(i, k)];
            }
            for k in 0..nz {
                x[l.z_offset(i) + k] = b[m.col_z(i, k)];
            }
            if i < l.n_intervals {
                for k in 0..nz {
                    x[l.zm_offset(i) + k] = b[m.col_zm(i, k)];
                }
            }
        }
        for k in 0..np {
            x[l.p_offset() + k] = b[m.col_p(0, k)];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_no_algebraic(n_int: usize, ny: usize, np: usize) -> AbdMatrix<f64> {
        let l = AbdLayout::new(n_int, ny, 0, np);
        let mut a = AbdMatrix::zeros(l);
        for b in a.intervals.iter_mut() {
            for r in 0..ny {
                b.local[(r, r)] = 1.0;
            }
        }
        for r in 0..ny {
            a.bc.yb[(r, r)] = 1.0;
        }
        for r in 0..np {
            a.bc.params[(ny + r, r)] = 1.0;
        }
        a
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = identity_no_algebraic(5, 3, 2);
        assert_eq!(a.to_dense(), DMat::identity(a.dim()));
        let rhs: Vec<f64> = (0..a.dim()).map(|i| i as f64 - 3.5).collect();
        let x = a.factorize().unwrap().solve(&rhs).unwrap();
        assert_eq!(x, rhs);
    }

    #[test]
    fn dimension_mismatch() {
        let a = identity_no_algebraic(2, 1, 0);
        let lu = a.factorize().unwrap();
        assert!(matches!(lu.solve(&[1.0]), Err(LinalgError::DimensionMismatch { .. })));
    }

    #[test]
    fn row_bc_mapping_is_a_bijection() {
        let l = AbdLayout::new(3, 2, 1, 1);
        let map = ExpandedMap {
            layout: l,
            nw: 2,
            n_left: 3,
            side: vec![BcSide::Left, BcSide::Coupled, BcSide::Right],
        };
        let mut rows: Vec<usize> = (0..3).map(|r| map.row_bc(r)).collect();
        rows.extend((0..2).map(|k| map.w_def_row(k)));
        rows.sort_unstable();
        rows.dedup();
        assert_eq!(rows.len(), 5);
        assert_eq!(map.row_bc(0), 2);
    }
}
