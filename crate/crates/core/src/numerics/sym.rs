//! Packed symmetric matrices and a dense Householder + implicit-QL eigensolver.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Maximum QL iterations spent on a single eigenvalue.
pub const EIGEN_SWEEP_CAP: usize = 64;

/// Real symmetric matrix holding only its lower triangle, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
    label: String,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(n: usize, label: impl Into<String>) -> Self {
        Self { n, data: vec![T::zero(); n * (n + 1) / 2], label: label.into() }
    }

    /// Builds the matrix from `f(i, j)` evaluated for `j ≤ i` only.
    pub fn from_lower_fn(n: usize, label: impl Into<String>, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { n, data, label: label.into() }
    }

    /// Wraps an already packed lower triangle.
    pub fn from_packed(n: usize, label: impl Into<String>, data: Vec<T>) -> Result<Self> {
        if data.len() != n * (n + 1) / 2 {
            return Err(Error::InvalidSpec(format!(
                "packed storage of length {} does not match order {n}",
                data.len()
            )));
        }
        Ok(Self { n, data, label: label.into() })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[packed(i, j)] = v;
    }

    /// Lower triangle, row-major.
    pub fn packed_lower(&self) -> &[T] {
        &self.data
    }

    pub fn row_lower(&self, i: usize) -> &[T] {
        let start = i * (i + 1) / 2;
        &self.data[start..=start + i]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.n {
            for (j, &v) in self.row_lower(i).iter().enumerate() {
                acc += if i == j { v * v } else { (v + v) * v };
            }
        }
        acc.sqrt()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let row = self.row_lower(i);
            let mut acc = T::zero();
            for j in 0..i {
                acc += row[j] * x[j];
                y[j] += row[j] * x[i];
            }
            y[i] += acc + row[i] * x[i];
        }
        y
    }

    pub fn to_dense(&self) -> Vec<T> {
        let n = self.n;
        let mut a = vec![T::zero(); n * n];
        for i in 0..n {
            for (j, &v) in self.row_lower(i).iter().enumerate() {
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }

    /// All eigenvalues in non-increasing order.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        sym_eigvals(self)
    }

    /// Largest eigenvalue.
    pub fn top_eigenvalue(&self) -> Result<T> {
        Ok(sym_eigvals(self)?.first().copied().unwrap_or_else(T::zero))
    }
}

/// Eigenpair with unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub value: T,
    pub vector: Vec<T>,
}

/// Eigenvalues of `m`, largest first.
pub fn sym_eigvals<T: Real>(m: &SymMatrix<T>) -> Result<Vec<T>> {
    let n = m.order();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e) = tridiagonalize(m.to_dense(), n);
    ql_values(&mut d, &mut e, m.label())?;
    d.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    Ok(d)
}

/// The `k` largest eigenpairs of `m`, largest first.
pub fn sym_eig_top<T: Real>(m: &SymMatrix<T>, k: usize) -> Result<Vec<EigenPair<T>>> {
    let n = m.order();
    if k == 0 || k > n {
        return Err(Error::InvalidSpec(format!("requested {k} eigenpairs of an order-{n} matrix")));
    }
    let mut v = m.to_dense();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e, n);
    tql2(&mut v, &mut d, &mut e, n, m.label())?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite eigenvalues"));
    Ok(order
        .into_iter()
        .take(k)
        .map(|c| EigenPair { value: d[c], vector: (0..n).map(|r| v[r * n + c]).collect() })
        .collect())
}

/// Householder reduction of a dense symmetric matrix (row-major, full storage)
/// to tridiagonal form. Returns the diagonal and the sub-diagonal, where
/// `e[i]` couples rows `i` and `i + 1`.
fn tridiagonalize<T: Real>(mut a: Vec<T>, n: usize) -> (Vec<T>, Vec<T>) {
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    for k in 0..n.saturating_sub(2) {
        d[k] = a[k * n + k];
        let m = n - k - 1;
        let x = &a[k * n + k + 1..k * n + n];
        let alpha = x[0];
        let sigma: T = x[1..].iter().map(|&t| t * t).sum();
        if sigma == T::zero() {
            e[k] = alpha;
            continue;
        }
        let mu = (alpha * alpha + sigma).sqrt();
        let beta = if alpha <= T::zero() { mu } else { -mu };
        let tau = (beta - alpha) / beta;
        let scale = T::one() / (alpha - beta);
        let v = &mut v[..m];
        v[0] = T::one();
        for i in 1..m {
            v[i] = x[i] * scale;
        }
        e[k] = beta;

        let p = &mut p[..m];
        let off = k + 1;
        let mut pv = T::zero();
        for i in 0..m {
            let row = &a[(off + i) * n + off..(off + i) * n + n];
            let mut acc = T::zero();
            for j in 0..m {
                acc += row[j] * v[j];
            }
            p[i] = tau * acc;
            pv += p[i] * v[i];
        }
        let kk = -T::lit(0.5) * tau * pv;
        for i in 0..m {
            p[i] += kk * v[i];
        }
        for i in 0..m {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[(off + i) * n + off..(off + i) * n + n];
            for j in 0..m {
                row[j] -= vi * p[j] + wi * v[j];
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 2) * n + n - 1];
    }
    d[n - 1] = a[n * n - 1];
    e[n - 1] = T::zero();
    (d, e)
}

/// Implicit QL on a symmetric tridiagonal matrix, eigenvalues only.
/// `e[i]` couples `i` and `i + 1`; `e[n-1]` is ignored.
pub(crate) fn ql_values<T: Real>(d: &mut [T], e: &mut [T], label: &str) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > EIGEN_SWEEP_CAP {
                    return Err(Error::EigenConvergence { label: label.to_string() });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (e[l] + e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Householder tridiagonalization with accumulated transformations
/// (EISPACK `tred2` ordering). On exit `v` holds the orthogonal factor,
/// `d` the diagonal and `e[1..]` the sub-diagonal.
fn tred2<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
                v[at(j, i)] = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = T::zero();
    }
    v[at(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

/// Implicit QL with eigenvector accumulation (EISPACK `tql2` ordering).
fn tql2<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize, label: &str) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > EIGEN_SWEEP_CAP {
                    return Err(Error::EigenConvergence { label: label.to_string() });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (e[l] + e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let row = k * n;
                        let hk = v[row + i + 1];
                        v[row + i + 1] = s * v[row + i] + c * hk;
                        v[row + i] = c * v[row + i] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}
