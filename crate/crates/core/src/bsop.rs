//! Nyström discretizations of the Birman–Schwinger operators.
//!
//! Three families are assembled on uniform midpoint grids:
//!
//! * the full-line kernel `(α/2π)K₀(κ|Γ(x) − Γ(x′)|)` truncated to `[−W, W]`;
//! * the Floquet fiber kernel over one period cell, a quasi-periodic lattice sum;
//! * the exponential kernel `(1/2κ)√V e^{−κ|x−x′|} √V` of a 1D well array.
//!
//! Every matrix is symmetrized with square-root weights so that a real
//! symmetric (or Hermitian) eigensolver applies directly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CurveSpec;
use crate::numerics::{log_diag_entry, sym_eig_top, sym_eigvals, EigenPair, SymMatrix};
use crate::oned::WellArray1D;
use crate::scalar::Real;
use crate::specfun::{bessel_k0, k0_unchecked};

/// Largest admissible `κ·h`.
pub const MAX_KAPPA_H: f64 = 0.5;
/// Minimum number of grid points per period for line matrices.
pub const MIN_POINTS_PER_PERIOD: usize = 16;
/// Periods of straight-through curve required on each side of the deformation.
pub const GUARD_PERIODS: f64 = 8.0;
/// Default truncation tolerance for the fiber lattice sum.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Measure used to symmetrize the line kernel.
///
/// `Reference` weights every node with the arc-length density of the
/// undeformed curve Γ₀, so the deformed and undeformed matrices differ only
/// through the kernel argument. `ArcLength` uses the density of the deformed
/// curve itself, which is the operator on `L²(Γ_τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    Reference,
    ArcLength,
}

/// Which operator a matrix discretizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixKind<T> {
    Line,
    Fiber { theta: T },
    OneD,
}

impl<T: Real> MatrixKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixKind::Line => "line",
            MatrixKind::Fiber { .. } => "fiber",
            MatrixKind::OneD => "oned",
        }
    }
}

/// Matrix entries: real symmetric, or Hermitian split into a symmetric real
/// part and the strictly lower triangle of the antisymmetric imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload<T> {
    Real(SymMatrix<T>),
    Hermitian { re: SymMatrix<T>, im: SymMatrix<T> },
}

/// Lattice-sum truncation for a fiber matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real"))]
pub struct FiberConfig<T> {
    pub theta: T,
    /// Images `|m| ≤ n_images`; chosen from `tail_tol` when absent.
    #[serde(default)]
    pub n_images: Option<usize>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: T,
}

fn default_tail_tol<T: Real>() -> T {
    T::lit(DEFAULT_TAIL_TOL)
}

impl<T: Real> FiberConfig<T> {
    pub fn new(theta: T) -> Self {
        Self { theta, n_images: None, tail_tol: T::lit(DEFAULT_TAIL_TOL) }
    }

    pub fn with_images(mut self, n_images: usize) -> Self {
        self.n_images = Some(n_images);
        self
    }
}

/// A discretized Birman–Schwinger operator with its assembly metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct BSMatrix<T> {
    pub payload: Payload<T>,
    /// Grid abscissae (curve parameter for line and fiber, position for 1D).
    pub grid: Vec<T>,
    /// Symmetrization weights `w_i`; the density carried by node `i` is `w_i²`.
    pub weights: Vec<T>,
    pub step: T,
    /// Half-width of the window (half the period for fibers).
    pub window: T,
    pub kind: MatrixKind<T>,
    pub kappa: T,
    pub alpha: T,
    /// Lattice-sum truncation and its a-priori tail bound (fibers only).
    pub n_images: Option<usize>,
    pub tail_bound: Option<T>,
}

impl<T: Real> BSMatrix<T> {
    pub fn order(&self) -> usize {
        self.grid.len()
    }

    /// Real symmetric matrix with the same spectrum; Hermitian payloads are
    /// embedded as `[[A, −B], [B, A]]`, doubling every eigenvalue.
    pub fn real_form(&self) -> SymMatrix<T> {
        match &self.payload {
            Payload::Real(m) => m.clone(),
            Payload::Hermitian { re, im } => {
                let n = re.order();
                SymMatrix::from_lower_fn(2 * n, re.label().to_string(), |i, j| {
                    match (i < n, j < n) {
                        (true, true) => re.get(i, j),
                        (false, false) => re.get(i - n, j - n),
                        // lower-left block B, with B_ij = −B_ji
                        _ => {
                            let (r, c) = (i - n, j);
                            if r == c {
                                T::zero()
                            } else if r > c {
                                im.get(r, c)
                            } else {
                                -im.get(c, r)
                            }
                        }
                    }
                })
            }
        }
    }

    /// Eigenvalues, largest first (each Hermitian eigenvalue listed once).
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let vals = sym_eigvals(&self.real_form())?;
        Ok(match self.payload {
            Payload::Real(_) => vals,
            Payload::Hermitian { .. } => vals.into_iter().step_by(2).collect(),
        })
    }

    /// Largest eigenvalue `μ_max`.
    pub fn mu_max(&self) -> Result<T> {
        Ok(self.eigenvalues()?[0])
    }

    /// Top eigenpair of a real payload, with the eigenvector signed to have positive sum.
    pub fn top_pair(&self) -> Result<EigenPair<T>> {
        let Payload::Real(m) = &self.payload else {
            return Err(Error::InvalidSpec("eigenvectors are only provided for real payloads".into()));
        };
        let mut pair = sym_eig_top(m, 1)?.remove(0);
        if pair.vector.iter().copied().sum::<T>() < T::zero() {
            pair.vector.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(pair)
    }

    /// Real part of entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> T {
        match &self.payload {
            Payload::Real(m) => m.get(i, j),
            Payload::Hermitian { re, .. } => re.get(i, j),
        }
    }

    /// Textual dump: a header line followed by the lower triangle, one row per line.
    /// Hermitian entries are written as `re,im`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "bsmatrix kind={} n={} kappa={:.16e} alpha={:.16e}",
            self.kind.name(),
            self.order(),
            self.kappa,
            self.alpha
        );
        if let MatrixKind::Fiber { theta } = self.kind {
            let _ = write!(out, " theta={theta:.16e}");
        }
        out.push('\n');
        for i in 0..self.order() {
            for j in 0..=i {
                if j > 0 {
                    out.push(' ');
                }
                match &self.payload {
                    Payload::Real(m) => {
                        let _ = write!(out, "{:.16e}", m.get(i, j));
                    }
                    Payload::Hermitian { re, im } => {
                        let _ = write!(out, "{:.16e},{:.16e}", re.get(i, j), im.get(i, j));
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Parsed form of [`BSMatrix::dump`].
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixDump {
    pub kind: String,
    pub n: usize,
    pub kappa: f64,
    pub alpha: f64,
    /// Lower-triangle rows; each entry is `(re, im)`.
    pub rows: Vec<Vec<(f64, f64)>>,
}

/// Reads a matrix dump back.
pub fn parse_dump(text: &str) -> Result<MatrixDump> {
    let bad = |m: &str| Error::InvalidSpec(format!("malformed matrix dump: {m}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("bsmatrix") {
        return Err(bad("missing header"));
    }
    let (mut kind, mut n, mut kappa, mut alpha) = (None, None, None, None);
    for f in fields {
        let (k, v) = f.split_once('=').ok_or_else(|| bad(f))?;
        match k {
            "kind" => kind = Some(v.to_string()),
            "n" => n = v.parse().ok(),
            "kappa" => kappa = v.parse().ok(),
            "alpha" => alpha = v.parse().ok(),
            _ => {}
        }
    }
    let n = n.ok_or_else(|| bad("n"))?;
    let mut rows = Vec::with_capacity(n);
    for (i, line) in lines.enumerate().take(n) {
        let row: Vec<(f64, f64)> = line
            .split_whitespace()
            .map(|tok| {
                let (re, im) = tok.split_once(',').unwrap_or((tok, "0"));
                Ok((re.parse().map_err(|_| bad(tok))?, im.parse().map_err(|_| bad(tok))?))
            })
            .collect::<Result<_>>()?;
        if row.len() != i + 1 {
            return Err(bad("row length"));
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(bad("row count"));
    }
    Ok(MatrixDump {
        kind: kind.ok_or_else(|| bad("kind"))?,
        n,
        kappa: kappa.ok_or_else(|| bad("kappa"))?,
        alpha: alpha.ok_or_else(|| bad("alpha"))?,
        rows,
    })
}

fn check_positive<T: Real>(name: &str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")))
    }
}

fn check_resolution<T: Real>(kappa: T, h: T) -> Result<()> {
    if kappa * h > T::lit(MAX_KAPPA_H) {
        return Err(Error::Resolution(format!(
            "kappa*h = {} exceeds {MAX_KAPPA_H}",
            kappa * h
        )));
    }
    Ok(())
}

/// Checks that `[−W, W]` with `n` points can host the deformation of `spec`.
pub fn check_line_grid<T: Real>(spec: &CurveSpec<T>, window: T, n: usize) -> Result<()> {
    check_positive("window_W", window)?;
    let a = spec.period_a;
    let h = (window + window) / T::from_usize_lossy(n.max(1));
    if n == 0 || h * T::from_usize_lossy(MIN_POINTS_PER_PERIOD) > a * (T::one() + T::lit(1e-12)) {
        return Err(Error::Resolution(format!(
            "{n} points on [-{window}, {window}] give fewer than {MIN_POINTS_PER_PERIOD} per period"
        )));
    }
    if spec.has_deformation() {
        if let Some((lo, hi)) = spec.tau.support() {
            let guard = a * T::lit(GUARD_PERIODS);
            if !(lo > -window + guard && hi < window - guard) {
                return Err(Error::WindowTooSmall(format!(
                    "support [{lo}, {hi}] of tau' must lie inside (-W+8a, W-8a) with W = {window}"
                )));
            }
        }
    }
    Ok(())
}

/// Windowed Nyström matrix of the full-line kernel on `Γ_τ`.
pub fn build_line_bs<T: Real>(
    spec: &CurveSpec<T>,
    alpha: T,
    kappa: T,
    window: T,
    n: usize,
    measure: Measure,
) -> Result<BSMatrix<T>> {
    check_positive("alpha", alpha)?;
    check_positive("kappa", kappa)?;
    check_line_grid(spec, window, n)?;
    let h = (window + window) / T::from_usize_lossy(n);
    check_resolution(kappa, h)?;
    let grid: Vec<T> = (0..n).map(|i| -window + h * (T::from_usize_lossy(i) + T::lit(0.5))).collect();
    let weights: Vec<T> = grid
        .iter()
        .map(|&x| match measure {
            Measure::Reference => spec.reference_arc_element(x).sqrt(),
            Measure::ArcLength => spec.metric_weight(x),
        })
        .collect();
    let local: Vec<T> = grid.iter().map(|&x| spec.arc_element(x) * h).collect();
    let points: Vec<[T; 2]> = grid.iter().map(|&x| spec.point(x)).collect();
    let c = alpha / T::TAU();
    let m = SymMatrix::from_lower_fn(n, format!("line kappa={kappa}"), |i, j| {
        if i == j {
            log_diag_entry(local[i], weights[i] * weights[i] * h, kappa, alpha)
        } else {
            let d = (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]);
            c * k0_unchecked(kappa * d) * weights[i] * weights[j] * h
        }
    });
    finish(BSMatrix {
        payload: Payload::Real(m),
        grid,
        weights,
        step: h,
        window,
        kind: MatrixKind::Line,
        kappa,
        alpha,
        n_images: None,
        tail_bound: None,
    })
}

fn finish<T: Real>(m: BSMatrix<T>) -> Result<BSMatrix<T>> {
    let ok = match &m.payload {
        Payload::Real(s) => s.is_finite(),
        Payload::Hermitian { re, im } => re.is_finite() && im.is_finite(),
    };
    if ok {
        Ok(m)
    } else {
        Err(Error::NonFinite(format!("{} matrix assembly", m.kind.name())))
    }
}

/// A-priori tail bound `(α/2π)K₀(κ(N·a − a))` for `N` images.
pub fn fiber_tail_bound<T: Real>(alpha: T, kappa: T, a: T, n_images: usize) -> T {
    if n_images <= 1 {
        return T::infinity();
    }
    let arg = kappa * a * T::from_usize_lossy(n_images - 1);
    alpha / T::TAU() * bessel_k0(arg).unwrap_or_else(|_| T::infinity())
}

/// Smallest image count whose tail bound is below `tail_tol`.
pub fn auto_images<T: Real>(alpha: T, kappa: T, a: T, tail_tol: T) -> usize {
    let mut n = 2;
    while fiber_tail_bound(alpha, kappa, a, n) >= tail_tol && n < 1_000_000 {
        n += 1;
    }
    n
}

/// Floquet fiber matrix over the cell `[−a/2, a/2]` of the periodic curve.
pub fn build_fiber_bs<T: Real>(
    spec: &CurveSpec<T>,
    alpha: T,
    kappa: T,
    fc: &FiberConfig<T>,
    n_cell: usize,
) -> Result<BSMatrix<T>> {
    check_positive("alpha", alpha)?;
    check_positive("kappa", kappa)?;
    check_positive("tail_tol", fc.tail_tol)?;
    if spec.has_deformation() {
        return Err(Error::InvalidSpec("fiber operators need a periodic curve (tau = zero)".into()));
    }
    if n_cell == 0 {
        return Err(Error::Resolution("n_cell must be positive".into()));
    }
    let a = spec.period_a;
    let h = a / T::from_usize_lossy(n_cell);
    check_resolution(kappa, h)?;
    let n_images = fc.n_images.unwrap_or_else(|| auto_images(alpha, kappa, a, fc.tail_tol));
    let tail = fiber_tail_bound(alpha, kappa, a, n_images);
    if !(tail <= fc.tail_tol) {
        return Err(Error::Truncation { bound: tail.to_f64_lossy(), tol: fc.tail_tol.to_f64_lossy() });
    }
    let half = a * T::lit(0.5);
    let grid: Vec<T> = (0..n_cell).map(|i| -half + h * (T::from_usize_lossy(i) + T::lit(0.5))).collect();
    let weights: Vec<T> = grid.iter().map(|&x| spec.metric_weight(x)).collect();
    let points: Vec<[T; 2]> = grid.iter().map(|&x| spec.point(x)).collect();
    let c = alpha / T::TAU();
    let ni = n_images as i64;
    let phases: Vec<(T, T)> = (-ni..=ni)
        .map(|m| {
            let (s, co) = (T::from_i64(m).unwrap() * fc.theta * a).sin_cos();
            (co, s)
        })
        .collect();
    let real = fc.theta == T::zero();
    let mut re = SymMatrix::zeros(n_cell, format!("fiber theta={} kappa={kappa}", fc.theta));
    let mut im = SymMatrix::zeros(n_cell, "fiber imaginary part");
    for i in 0..n_cell {
        for j in 0..=i {
            let dx = points[i][0] - points[j][0];
            let dy = points[i][1] - points[j][1];
            let (mut sr, mut si) = (T::zero(), T::zero());
            for (k, m) in (-ni..=ni).enumerate() {
                if i == j && m == 0 {
                    continue;
                }
                let shift = T::from_i64(m).unwrap() * a;
                let k0 = k0_unchecked(kappa * (dx - shift).hypot(dy));
                sr += phases[k].0 * k0;
                si += phases[k].1 * k0;
            }
            let scale = weights[i] * weights[j] * h;
            let mut v = c * sr * scale;
            if i == j {
                v += log_diag_entry(spec.arc_element(grid[i]) * h, weights[i] * weights[i] * h, kappa, alpha);
            }
            re.set(i, j, v);
            if !real && i != j {
                im.set(i, j, c * si * scale);
            }
        }
    }
    let payload = if real { Payload::Real(re) } else { Payload::Hermitian { re, im } };
    finish(BSMatrix {
        payload,
        grid,
        weights,
        step: h,
        window: half,
        kind: MatrixKind::Fiber { theta: fc.theta },
        kappa,
        alpha,
        n_images: Some(n_images),
        tail_bound: Some(tail),
    })
}

/// Nyström matrix of the 1D kernel `(1/2κ)√V e^{−κ|x−x′|} √V` on the supports
/// of all wells centred in `[−W, W]`, `n` cells per well.
pub fn build_1d_bs<T: Real>(arr: &WellArray1D<T>, kappa: T, window: T, n: usize) -> Result<BSMatrix<T>> {
    check_positive("kappa", kappa)?;
    check_positive("window_W", window)?;
    arr.validate()?;
    if n == 0 {
        return Err(Error::Resolution("need at least one cell per well".into()));
    }
    let width = arr.profile.width();
    let h = width / T::from_usize_lossy(n);
    let mut grid = Vec::new();
    for idx in arr.wells_in(window) {
        let centre = arr.centre(idx);
        for k in 0..n {
            grid.push(centre - width * T::lit(0.5) + h * (T::from_usize_lossy(k) + T::lit(0.5)));
        }
    }
    if grid.is_empty() {
        return Err(Error::WindowTooSmall(format!("no well centre inside [-{window}, {window}]")));
    }
    let roots: Vec<T> = grid.iter().map(|&x| arr.potential(x).max(T::zero()).sqrt()).collect();
    let c = T::one() / (kappa + kappa);
    let diag_cell = (T::one() - (-kappa * h * T::lit(0.5)).exp()) / (kappa * kappa);
    let m = SymMatrix::from_lower_fn(grid.len(), format!("oned kappa={kappa}"), |i, j| {
        if i == j {
            roots[i] * roots[i] * diag_cell
        } else {
            c * roots[i] * roots[j] * (-kappa * (grid[i] - grid[j]).abs()).exp() * h
        }
    });
    let weights = vec![T::one(); grid.len()];
    finish(BSMatrix {
        payload: Payload::Real(m),
        grid,
        weights,
        step: h,
        window,
        kind: MatrixKind::OneD,
        kappa,
        alpha: T::one(),
        n_images: None,
        tail_bound: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Deformation, Profile};
    use std::f64::consts::TAU;

    #[test]
    fn line_rejects_coarse_grids_and_small_windows() {
        let flat = CurveSpec::flat(TAU);
        assert!(matches!(build_line_bs(&flat, 1.0, 5.0, 10.0, 40, Measure::Reference), Err(Error::Resolution(_))));
        let c = CurveSpec::new(TAU, Profile::Sine { amplitude: 0.5 }, Deformation::SmoothContraction { depth: 0.4, half_width: 2.0 * TAU });
        let err = build_line_bs(&c, 2.0, 1.0, 8.0 * TAU, 400, Measure::Reference).unwrap_err();
        assert!(matches!(err, Error::WindowTooSmall(_)));
    }

    #[test]
    fn fiber_rejects_deformed_curves_and_short_sums() {
        let c = CurveSpec::flat(TAU).with_tau(Deformation::SmoothContraction { depth: 0.1, half_width: 1.0 });
        assert!(build_fiber_bs(&c, 1.0, 0.5, &FiberConfig::new(0.0), 32).is_err());
        let flat = CurveSpec::flat(TAU);
        let short = FiberConfig::new(0.0).with_images(2);
        assert!(matches!(build_fiber_bs(&flat, 1.0, 0.1, &short, 32), Err(Error::Truncation { .. })));
    }

    #[test]
    fn hermitian_embedding_halves_spectrum() {
        let flat = CurveSpec::new(TAU, Profile::Sine { amplitude: 0.3 }, Deformation::Zero);
        let m = build_fiber_bs(&flat, 1.0, 0.6, &FiberConfig::new(0.2), 24).unwrap();
        assert!(matches!(m.payload, Payload::Hermitian { .. }));
        let vals = m.eigenvalues().unwrap();
        assert_eq!(vals.len(), 24);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn dump_round_trip() {
        let flat = CurveSpec::flat(TAU);
        let m = build_fiber_bs(&flat, 1.0, 0.6, &FiberConfig::new(0.3), 16).unwrap();
        let d = parse_dump(&m.dump()).unwrap();
        assert_eq!(d.kind, "fiber");
        assert_eq!(d.n, 16);
        assert_eq!(d.rows[5][2].0, m.entry(5, 2));
        assert!(parse_dump("nonsense").is_err());
    }
}
