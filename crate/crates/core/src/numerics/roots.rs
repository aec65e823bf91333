//! Bracketed scalar root finding.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Iteration cap for [`brent_root`].
pub const ROOT_ITERATION_CAP: usize = 200;

/// Default absolute tolerance on the spectral parameter κ.
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

/// An interval on which a function changes sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket<T> {
    lo: T,
    hi: T,
    f_lo: T,
    f_hi: T,
}

impl<T: Real> Bracket<T> {
    /// Evaluates `f` at both ends and checks for a sign change.
    pub fn new(f: &mut impl FnMut(T) -> Result<T>, lo: T, hi: T) -> Result<Self> {
        let f_lo = f(lo)?;
        let f_hi = f(hi)?;
        Self::from_values(lo, hi, f_lo, f_hi)
    }

    /// Uses already known function values at the ends.
    pub fn from_values(lo: T, hi: T, f_lo: T, f_hi: T) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Bracket(format!("empty interval [{lo}, {hi}]")));
        }
        if !(f_lo.is_finite() && f_hi.is_finite()) {
            return Err(Error::NonFinite("bracket endpoint value".into()));
        }
        if f_lo * f_hi > T::zero() {
            return Err(Error::NoSignChange { lo: lo.to_f64_lossy(), hi: hi.to_f64_lossy() });
        }
        Ok(Self { lo, hi, f_lo, f_hi })
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn f_lo(&self) -> T {
        self.f_lo
    }

    pub fn f_hi(&self) -> T {
        self.f_hi
    }
}

/// Brent's method. Returns a point inside the bracket whose enclosing
/// sub-interval is narrower than `tol`, or an exact zero.
pub fn brent_root<T: Real>(mut f: impl FnMut(T) -> Result<T>, b: Bracket<T>, tol: T) -> Result<T> {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let eps = T::epsilon();
    let (mut a, mut bx) = (b.lo, b.hi);
    let (mut fa, mut fb) = (b.f_lo, b.f_hi);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(bx);
    }
    let mut c = bx;
    let mut fc = fb;
    let mut d = bx - a;
    let mut e = d;
    for _ in 0..ROOT_ITERATION_CAP {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = bx - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = bx;
            bx = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * eps * bx.abs() + half * tol;
        let xm = half * (c - bx);
        if xm.abs() <= tol1 || fb == T::zero() {
            return Ok(bx);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qq * (qq - r) - (bx - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = T::lit(3.0) * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = bx;
        fa = fb;
        bx += if d.abs() > tol1 { d } else if xm > T::zero() { tol1 } else { -tol1 };
        fb = f(bx)?;
        if !fb.is_finite() {
            return Err(Error::NonFinite("root-finder objective".into()));
        }
    }
    Err(Error::IterationCap { what: "brent_root".into(), cap: ROOT_ITERATION_CAP })
}

/// Expands `hi` geometrically by `factor` until `f(hi)` has the opposite
/// sign of `f(lo)`; gives up after `max_expansions`.
pub fn expand_upward<T: Real>(
    f: &mut impl FnMut(T) -> Result<T>,
    lo: T,
    f_lo: T,
    first_hi: T,
    factor: T,
    max_expansions: usize,
) -> Result<Bracket<T>> {
    let mut hi = first_hi;
    for _ in 0..=max_expansions {
        let f_hi = f(hi)?;
        if f_hi * f_lo <= T::zero() {
            return Bracket::from_values(lo, hi, f_lo, f_hi);
        }
        hi *= factor;
    }
    Err(Error::Bracket(format!("no sign change up to {hi} after {max_expansions} expansions")))
}
