//! Symmetric tridiagonal eigenproblems via Sturm bisection and inverse iteration.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric tridiagonal matrix; `off[i]` couples `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Real> SymTridiagonal<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InvalidSpec(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: T) -> usize {
        let tiny = T::min_positive_value();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q < T::zero() {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let denom = if q.abs() < tiny { tiny } else { q };
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / denom;
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (T, T) {
        let n = self.order();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { T::zero() }
                + if i + 1 < n { self.off[i].abs() } else { T::zero() };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> Result<T> {
        let n = self.order();
        if k >= n {
            return Err(Error::InvalidSpec(format!("eigenvalue index {k} out of range for order {n}")));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(T::one());
        for _ in 0..400 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi || hi - lo <= T::lit(4.0) * T::epsilon() * scale {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((lo + hi) * T::lit(0.5))
    }

    /// Unit eigenvector for a converged eigenvalue `lambda` by inverse iteration.
    pub fn eigenvector(&self, lambda: T) -> Result<Vec<T>> {
        let n = self.order();
        let (lo, hi) = self.gershgorin();
        let shift = lambda - T::lit(8.0) * T::epsilon() * lo.abs().max(hi.abs()).max(T::one());
        let mut x = vec![T::one(); n];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += T::lit(1e-3) * T::from_usize_lossy(i % 7);
        }
        normalize(&mut x);
        for _ in 0..8 {
            let mut y = self.solve_shifted(shift, &x)?;
            normalize(&mut y);
            let change: T = y.iter().zip(&x).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max);
            x = y;
            if change < T::lit(1e3) * T::epsilon() {
                break;
            }
        }
        Ok(x)
    }

    /// Solves `(T − s·I) y = b` by Gaussian elimination without pivoting;
    /// adequate for the diagonally dominant shifted Laplacians used here.
    fn solve_shifted(&self, s: T, b: &[T]) -> Result<Vec<T>> {
        let n = self.order();
        let tiny = T::epsilon() * T::epsilon();
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let mut piv = self.diag[0] - s;
        if piv.abs() < tiny {
            piv = tiny;
        }
        d[0] = b[0] / piv;
        for i in 1..n {
            c[i - 1] = self.off[i - 1] / piv;
            piv = self.diag[i] - s - self.off[i - 1] * c[i - 1];
            if piv.abs() < tiny {
                piv = tiny;
            }
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            let next = d[i + 1];
            d[i] -= c[i] * next;
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("inverse iteration".into()));
        }
        Ok(d)
    }
}

fn normalize<T: Real>(x: &mut [T]) {
    let norm = x.iter().map(|v| *v * *v).sum::<T>().sqrt();
    let sign = if x.iter().copied().sum::<T>() < T::zero() { -T::one() } else { T::one() };
    for v in x.iter_mut() {
        *v = *v * sign / norm;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = SymTridiagonal::new(vec![2.0_f64; n], vec![-1.0; n - 1]).unwrap();
        for k in [0, 3, 49] {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((t.eigenvalue(k).unwrap() - exact).abs() < 1e-12);
        }
        let lam = t.eigenvalue(0).unwrap();
        let v = t.eigenvector(lam).unwrap();
        for i in 0..n {
            let exact = (std::f64::consts::PI * (i + 1) as f64 / (n + 1) as f64).sin();
            assert!((v[i] - exact * v[0] / (std::f64::consts::PI / 51.0).sin()).abs() < 1e-8);
        }
    }
}
