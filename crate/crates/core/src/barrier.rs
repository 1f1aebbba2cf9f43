//! Log-barrier and smoothed Fischer-Burmeister primitives.

use thiserror::Error;

use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum BarrierError {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    /// Partials of the FB function requested at `(0, 0, 0)`.
    #[error("Fischer-Burmeister partials are undefined at the origin with eps = 0")]
    Singular,
}

/// Value and derivatives of `psi(x) = -log(-x)`.
///
/// `psi` is `+inf` on `x >= 0`; that branch is a value, not an error, so that
/// merit comparisons in line searches stay branch-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierEval<T> {
    Finite { value: T, first: T, second: T },
    Infinite,
}

impl<T: Real> BarrierEval<T> {
    pub fn value(&self) -> T {
        match *self {
            BarrierEval::Finite { value, .. } => value,
            BarrierEval::Infinite => T::infinity(),
        }
    }

    pub fn first(&self) -> Option<T> {
        match *self {
            BarrierEval::Finite { first, .. } => Some(first),
            BarrierEval::Infinite => None,
        }
    }

    pub fn second(&self) -> Option<T> {
        match *self {
            BarrierEval::Finite { second, .. } => Some(second),
            BarrierEval::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, BarrierEval::Finite { .. })
    }
}

/// Evaluates the log-barrier at `x`.
pub fn psi_eval<T: Real>(x: T) -> Result<BarrierEval<T>, BarrierError> {
    if !x.is_finite() {
        return Err(BarrierError::InvalidArgument("barrier argument must be finite"));
    }
    if x < T::zero() {
        let inv = x.recip();
        Ok(BarrierEval::Finite {
            value: -(-x).ln(),
            first: -inv,
            second: inv * inv,
        })
    } else {
        Ok(BarrierEval::Infinite)
    }
}

/// Smoothed Fischer-Burmeister value with its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbEval<T> {
    pub value: T,
    pub dx: T,
    pub dy: T,
}

fn fb_parts<T: Real>(x: T, y: T, eps: T) -> Result<(T, T), BarrierError> {
    if !(x.is_finite() && y.is_finite() && eps.is_finite()) {
        return Err(BarrierError::InvalidArgument("FB arguments must be finite"));
    }
    if eps < T::zero() {
        return Err(BarrierError::InvalidArgument("FB smoothing eps must be >= 0"));
    }
    let two = T::lit(2.0);
    let root = x.hypot(y).hypot((two * eps).sqrt());
    let d = x - y;
    // x - y - root loses all digits when x - y ~ root, i.e. on the
    // complementarity branch; the conjugate form is exact there.
    let value = if d > T::zero() {
        -two * (x * y + eps) / (d + root)
    } else {
        d - root
    };
    Ok((value, root))
}

/// `FB(x, y, eps) = x - y - sqrt(x^2 + y^2 + 2 eps)`.
///
/// Its root set is `{x >= 0, y <= 0, x y = -eps}`.
pub fn fb_value<T: Real>(x: T, y: T, eps: T) -> Result<T, BarrierError> {
    fb_parts(x, y, eps).map(|(v, _)| v)
}

/// FB value together with `d/dx` and `d/dy`.
pub fn fb_eval<T: Real>(x: T, y: T, eps: T) -> Result<FbEval<T>, BarrierError> {
    let (value, root) = fb_parts(x, y, eps)?;
    if root == T::zero() {
        return Err(BarrierError::Singular);
    }
    Ok(FbEval {
        value,
        dx: T::one() - x / root,
        dy: -T::one() - y / root,
    })
}
