//! Threshold, band structure, bound states and eigenfunction reconstruction.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bsop::{build_fiber_bs, build_line_bs, check_line_grid, FiberConfig, Measure, MAX_KAPPA_H};
use crate::error::{Error, Result};
use crate::geometry::CurveSpec;
use crate::numerics::{brent_root, expand_upward, log_diag_entry, Bracket, SymMatrix};
use crate::scalar::Real;
use crate::specfun::k0_unchecked;

/// Outcome class of a one-sided bound-state test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Margin positive and stable under refinement; crossing located.
    Found,
    /// Margin within tolerance or negative: the sufficient condition does not apply.
    Inconclusive,
    /// Margin changes sign under window or grid refinement.
    Unresolved,
}

/// Resolution of the θ = 0 fiber problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real"))]
pub struct ThresholdConfig<T> {
    /// Cell points; chosen from `kh_target` when absent.
    #[serde(default)]
    pub n_cell: Option<usize>,
    #[serde(default = "defaults::kh_target")]
    pub kh_target: T,
    #[serde(default = "defaults::min_cell")]
    pub min_cell: usize,
    /// Lattice images; chosen from `tail_tol` when absent.
    #[serde(default)]
    pub n_images: Option<usize>,
    #[serde(default = "defaults::tail_tol")]
    pub tail_tol: T,
    #[serde(default = "defaults::kappa_tol")]
    pub kappa_tol: T,
}

mod defaults {
    use crate::scalar::Real;

    pub fn kh_target<T: Real>() -> T {
        T::lit(0.05)
    }
    pub fn min_cell() -> usize {
        32
    }
    pub fn tail_tol<T: Real>() -> T {
        T::lit(crate::bsop::DEFAULT_TAIL_TOL)
    }
    pub fn kappa_tol<T: Real>() -> T {
        T::lit(crate::numerics::DEFAULT_ROOT_TOL)
    }
    pub fn margin_tol<T: Real>() -> T {
        T::lit(1e-6)
    }
    pub fn points_per_period() -> usize {
        16
    }
    pub fn yes() -> bool {
        true
    }
}

impl<T: Real> Default for ThresholdConfig<T> {
    fn default() -> Self {
        Self {
            n_cell: None,
            kh_target: defaults::kh_target(),
            min_cell: defaults::min_cell(),
            n_images: None,
            tail_tol: defaults::tail_tol(),
            kappa_tol: defaults::kappa_tol(),
        }
    }
}

impl<T: Real> ThresholdConfig<T> {
    /// Cell resolution for rate `kappa` on period `a`.
    pub fn cells_for(&self, a: T, kappa: T) -> usize {
        if let Some(n) = self.n_cell {
            return n;
        }
        let n = (a * kappa / self.kh_target).ceil().to_usize().unwrap_or(self.min_cell).max(self.min_cell);
        n + n % 2
    }

    fn fiber(&self, theta: T) -> FiberConfig<T> {
        FiberConfig { theta, n_images: self.n_images, tail_tol: self.tail_tol }
    }
}

/// Bottom `ε₀ = −κ₀²` of the essential spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold<T> {
    pub kappa0: T,
    pub eps0: T,
    pub n_cell: usize,
    pub n_images: usize,
    pub tail_bound: T,
    /// `μ_max(κ₀) − 1`.
    pub residual: T,
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha.is_finite() && alpha > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("alpha must be positive, got {alpha}")))
    }
}

fn require_periodic<T: Real>(spec: &CurveSpec<T>) -> Result<()> {
    spec.validate()?;
    if spec.has_deformation() {
        return Err(Error::InvalidSpec("this computation needs the periodic curve (tau = zero)".into()));
    }
    Ok(())
}

/// Solves `μ_max(fiber θ=0, κ) = 1`.
pub fn find_threshold<T: Real>(spec: &CurveSpec<T>, alpha: T, cfg: &ThresholdConfig<T>) -> Result<Threshold<T>> {
    check_alpha(alpha)?;
    require_periodic(spec)?;
    let a = spec.period_a;
    let fc = cfg.fiber(T::zero());
    let lo = alpha * T::lit(0.5) * T::lit(0.95);
    let mut n_cell = cfg.cells_for(a, alpha * T::lit(0.5));
    for _ in 0..4 {
        let mut f = |k: T| Ok(build_fiber_bs(spec, alpha, k, &fc, n_cell)?.mu_max()? - T::one());
        let f_lo = f(lo)?;
        if !(f_lo > T::zero()) {
            return Err(Error::Bracket(format!("mu_max at kappa = {lo} is not above one")));
        }
        let bracket = expand_upward(&mut f, lo, f_lo, alpha, T::lit(1.5), 20)
            .map_err(|e| Error::Bracket(format!("threshold bracket: {e}")))?;
        let kappa0 = brent_root(&mut f, bracket, cfg.kappa_tol)?;
        let needed = cfg.cells_for(a, kappa0);
        if cfg.n_cell.is_some() || needed <= n_cell {
            let m = build_fiber_bs(spec, alpha, kappa0, &fc, n_cell)?;
            return Ok(Threshold {
                kappa0,
                eps0: -kappa0 * kappa0,
                n_cell,
                n_images: m.n_images.unwrap_or(0),
                tail_bound: m.tail_bound.unwrap_or_else(T::zero),
                residual: m.mu_max()? - T::one(),
            });
        }
        n_cell = needed;
    }
    Err(Error::Resolution("threshold cell resolution did not settle".into()))
}

/// Threshold at standard resolution and after doubling both the cell grid and the image count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdReport<T> {
    pub base: Threshold<T>,
    pub refined: Threshold<T>,
}

pub fn find_threshold_refined<T: Real>(spec: &CurveSpec<T>, alpha: T, cfg: &ThresholdConfig<T>) -> Result<ThresholdReport<T>> {
    let base = find_threshold(spec, alpha, cfg)?;
    let fine = ThresholdConfig { n_cell: Some(2 * base.n_cell), n_images: Some(2 * base.n_images), ..*cfg };
    let refined = find_threshold(spec, alpha, &fine)?;
    Ok(ThresholdReport { base, refined })
}

/// Energies of one quasimomentum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandPoint<T> {
    pub theta: T,
    /// `ε_j(θ)`, lowest band first.
    pub energies: Vec<T>,
    /// Solver failure for this θ, if any.
    pub error: Option<String>,
}

/// Dispersion curves over the Brillouin zone `[−π/a, π/a]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandStructure<T> {
    pub alpha: T,
    pub period_a: T,
    pub n_cell: usize,
    pub threshold: Threshold<T>,
    /// Smallest rate searched; bands above `−kappa_min²` are not resolved.
    pub kappa_min: T,
    pub points: Vec<BandPoint<T>>,
}

impl<T: Real> BandStructure<T> {
    pub fn theta_grid(&self) -> Vec<T> {
        self.points.iter().map(|p| p.theta).collect()
    }

    /// Band `j` across the zone (`None` where not found).
    pub fn band(&self, j: usize) -> Vec<Option<T>> {
        self.points.iter().map(|p| p.energies.get(j).copied()).collect()
    }

    /// CSV with header `theta,band,energy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,band,energy\n");
        for p in &self.points {
            for (j, e) in p.energies.iter().enumerate() {
                let _ = writeln!(out, "{},{j},{}", fmt17(p.theta), fmt17(*e));
            }
        }
        out
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

/// Fraction of κ₀ below which band crossings are not searched.
const BAND_KAPPA_FLOOR: f64 = 0.05;

/// Finds up to `bands` crossings `μ_j(κ) = 1` for each of `n_theta` quasimomenta.
pub fn band_structure<T: Real>(
    spec: &CurveSpec<T>,
    alpha: T,
    n_theta: usize,
    bands: usize,
    cfg: &ThresholdConfig<T>,
) -> Result<BandStructure<T>> {
    if n_theta < 9 || n_theta % 2 == 0 {
        return Err(Error::InvalidSpec(format!("n_theta must be odd and at least 9, got {n_theta}")));
    }
    if bands == 0 {
        return Err(Error::InvalidSpec("bands must be positive".into()));
    }
    let threshold = find_threshold(spec, alpha, cfg)?;
    let a = spec.period_a;
    let n_cell = threshold.n_cell;
    let k0 = threshold.kappa0;
    let kappa_min = k0 * T::lit(BAND_KAPPA_FLOOR);
    let kappa_max = k0 * T::lit(1.05);
    let zone = T::PI() / a;
    let thetas: Vec<T> = (0..n_theta)
        .map(|k| -zone + (zone + zone) * T::from_usize_lossy(k) / T::from_usize_lossy(n_theta - 1))
        .collect();
    let points = thetas
        .par_iter()
        .map(|&theta| {
            let fc = cfg.fiber(theta);
            let eig = |k: T| build_fiber_bs(spec, alpha, k, &fc, n_cell)?.eigenvalues();
            let run = || -> Result<Vec<T>> {
                let at_lo = eig(kappa_min)?;
                let at_hi = eig(kappa_max)?;
                let mut energies = Vec::new();
                for j in 0..bands.min(at_lo.len()) {
                    if !(at_lo[j] > T::one()) || !(at_hi[j] < T::one()) {
                        break;
                    }
                    let mut f = |k: T| Ok(eig(k)?[j] - T::one());
                    let b = Bracket::from_values(kappa_min, kappa_max, at_lo[j] - T::one(), at_hi[j] - T::one())?;
                    let kj = brent_root(&mut f, b, cfg.kappa_tol)?;
                    energies.push(-kj * kj);
                }
                Ok(energies)
            };
            match run() {
                Ok(energies) => BandPoint { theta, energies, error: None },
                Err(e) => BandPoint { theta, energies: Vec::new(), error: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(BandStructure { alpha, period_a: a, n_cell, threshold, kappa_min, points })
}

/// Grid and tolerances of the bound-state search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real"))]
pub struct BoundStateConfig<T> {
    /// Half-width `W`; defaults to the deformation support plus 8.5 periods.
    #[serde(default)]
    pub window: Option<T>,
    /// Grid points on `[−W, W]`; defaults to `points_per_period` per period.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "defaults::points_per_period")]
    pub points_per_period: usize,
    #[serde(default)]
    pub measure: Measure,
    #[serde(default = "defaults::margin_tol")]
    pub margin_tol: T,
    #[serde(default = "defaults::kappa_tol")]
    pub kappa_tol: T,
    /// Re-evaluate the margin after doubling the window and, separately, the grid.
    #[serde(default = "defaults::yes")]
    pub check_refinement: bool,
}

impl<T: Real> Default for BoundStateConfig<T> {
    fn default() -> Self {
        Self {
            window: None,
            n: None,
            points_per_period: defaults::points_per_period(),
            measure: Measure::default(),
            margin_tol: defaults::margin_tol(),
            kappa_tol: defaults::kappa_tol(),
            check_refinement: true,
        }
    }
}

impl<T: Real> BoundStateConfig<T> {
    /// Resolves `(W, n)` for `spec`.
    pub fn grid(&self, spec: &CurveSpec<T>) -> (T, usize) {
        let a = spec.period_a;
        let window = self.window.unwrap_or_else(|| {
            let reach = spec.tau.support().map(|(lo, hi)| lo.abs().max(hi.abs())).unwrap_or_else(T::zero);
            reach + a * T::lit(8.5)
        });
        let n = self.n.unwrap_or_else(|| {
            ((window + window) / a * T::from_usize_lossy(self.points_per_period)).ceil().to_usize().unwrap_or(0)
        });
        (window, n)
    }
}

/// Largest order of the refinement matrices when the grid is refined to resolve a crossing.
const MAX_ROOT_REFINED_ORDER: usize = 3000;

/// Margin at one discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginSample<T> {
    pub window: T,
    pub n: usize,
    pub mu_perturbed: T,
    pub mu_unperturbed: T,
    pub margin: T,
}

/// A located bound state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateResult<T> {
    pub kappa_star: T,
    pub energy: T,
    pub kappa0: T,
    pub eps0: T,
    /// `|ε₀ + κ*²|`.
    pub depth: T,
    pub margin: T,
    /// Eigenvalue level solved for: one, or `μ⁰(κ₀)` when the deformed matrix starts below one.
    pub target_level: T,
    /// Crossing of the level `μ⁰(κ₀)` of the windowed undeformed matrix; equal to
    /// `kappa_star` when that is the target. Crossings of a common level are what
    /// kernel domination orders.
    pub kappa_star_calibrated: T,
    /// `μ_max(κ*)` of the deformed matrix.
    pub mu_at_root: T,
    pub window: T,
    pub n: usize,
    pub step: T,
    pub measure: Measure,
    pub grid: Vec<T>,
    pub weights: Vec<T>,
    /// Unit top eigenvector of the symmetrized matrix at `κ*`.
    pub eigenvector: Vec<T>,
}

/// Full record of a bound-state search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateSearch<T> {
    pub verdict: Verdict,
    pub margin: T,
    pub base: MarginSample<T>,
    pub refinement: Vec<MarginSample<T>>,
    pub result: Option<BoundStateResult<T>>,
}

fn margin_sample<T: Real>(spec: &CurveSpec<T>, reference: &CurveSpec<T>, alpha: T, kappa: T, window: T, n: usize, measure: Measure) -> Result<MarginSample<T>> {
    let mu_perturbed = build_line_bs(spec, alpha, kappa, window, n, measure)?.mu_max()?;
    let mu_unperturbed = if spec.has_deformation() {
        build_line_bs(reference, alpha, kappa, window, n, measure)?.mu_max()?
    } else {
        mu_perturbed
    };
    Ok(MarginSample { window, n, mu_perturbed, mu_unperturbed, margin: mu_perturbed - mu_unperturbed })
}

/// Largest κ admissible on a grid whose longest cell is `h`.
fn kappa_ceiling<T: Real>(h: T) -> T {
    T::lit(MAX_KAPPA_H) / h * (T::one() - T::lit(1e-9))
}

/// Compares the windowed deformed and undeformed matrices at `κ₀` and, when the
/// deformed one is larger, solves for the crossing `κ* > κ₀`.
pub fn find_bound_state<T: Real>(spec: &CurveSpec<T>, alpha: T, kappa0: T, cfg: &BoundStateConfig<T>) -> Result<BoundStateSearch<T>> {
    check_alpha(alpha)?;
    spec.validate()?;
    if !(kappa0.is_finite() && kappa0 > T::zero()) {
        return Err(Error::InvalidSpec(format!("kappa0 must be positive, got {kappa0}")));
    }
    let reference = spec.reference();
    let (window, n) = cfg.grid(spec);
    check_line_grid(spec, window, n)?;
    let base = margin_sample(spec, &reference, alpha, kappa0, window, n, cfg.measure)?;
    let tol = cfg.margin_tol;
    let mut out = BoundStateSearch { verdict: Verdict::Inconclusive, margin: base.margin, base, refinement: Vec::new(), result: None };
    if !(base.margin > tol) {
        return Ok(out);
    }
    if cfg.check_refinement {
        for (w, m) in [(window + window, 2 * n), (window, 2 * n)] {
            out.refinement.push(margin_sample(spec, &reference, alpha, kappa0, w, m, cfg.measure)?);
        }
        if out.refinement.iter().any(|s| s.margin < -tol) {
            out.verdict = Verdict::Unresolved;
            return Ok(out);
        }
        if out.refinement.iter().any(|s| !(s.margin > tol)) {
            return Ok(out);
        }
    }
    let calibrated = base.mu_unperturbed;
    let target = if base.mu_perturbed > T::one() { T::one() } else { calibrated };
    let h = (window + window) / T::from_usize_lossy(n);
    let j_max = (0..n)
        .map(|i| spec.arc_element(-window + h * (T::from_usize_lossy(i) + T::lit(0.5))))
        .fold(T::one(), T::max);
    let ceiling = kappa_ceiling(h * j_max);
    // None: no sign change below the resolution ceiling of this grid
    let crossing = |level: T| -> Result<Option<T>> {
        let mut f = |k: T| -> Result<T> { Ok(build_line_bs(spec, alpha, k, window, n, cfg.measure)?.mu_max()? - level) };
        let mut step = kappa0 * T::lit(0.02);
        for _ in 0..=20 {
            let hi = (kappa0 + step).min(ceiling);
            if !(hi > kappa0) {
                return Ok(None);
            }
            let f_hi = f(hi)?;
            if f_hi < T::zero() {
                let bracket = Bracket::from_values(kappa0, hi, base.mu_perturbed - level, f_hi)?;
                return brent_root(&mut f, bracket, cfg.kappa_tol).map(Some);
            }
            if hi >= ceiling {
                return Ok(None);
            }
            step *= T::lit(1.5);
        }
        Err(Error::Bracket(format!("no crossing of level {level} after 20 expansions from kappa0 = {kappa0}")))
    };
    let located = match crossing(target)? {
        Some(k) if target == calibrated => Some((k, k)),
        Some(k) => crossing(calibrated)?.map(|c| (k, c)),
        None => None,
    };
    let Some((kappa_star, kappa_star_calibrated)) = located else {
        // the crossing lies beyond what this grid resolves; retry on a finer one
        if 4 * n <= MAX_ROOT_REFINED_ORDER {
            let finer = BoundStateConfig { window: Some(window), n: Some(2 * n), ..*cfg };
            return find_bound_state(spec, alpha, kappa0, &finer);
        }
        return Ok(out);
    };
    let m = build_line_bs(spec, alpha, kappa_star, window, n, cfg.measure)?;
    let pair = m.top_pair()?;
    let eps0 = -kappa0 * kappa0;
    let energy = -kappa_star * kappa_star;
    out.verdict = Verdict::Found;
    out.result = Some(BoundStateResult {
        kappa_star,
        energy,
        kappa0,
        eps0,
        depth: (eps0 - energy).abs(),
        margin: base.margin,
        target_level: target,
        kappa_star_calibrated,
        mu_at_root: pair.value,
        window,
        n,
        step: m.step,
        measure: cfg.measure,
        grid: m.grid.clone(),
        weights: m.weights.clone(),
        eigenvector: pair.vector,
    });
    Ok(out)
}

/// `μ_max` of the line matrix along a κ grid.
pub fn mu_scan<T: Real>(spec: &CurveSpec<T>, alpha: T, kappas: &[T], window: T, n: usize, measure: Measure) -> Result<Vec<T>> {
    kappas.par_iter().map(|&k| build_line_bs(spec, alpha, k, window, n, measure)?.mu_max()).collect()
}

/// Quadratic form of the kernel difference against mollified periodic trial functions.
///
/// The trial function is `g_n(x₁)·φ̃₀(x₁)` with `g_n = n²/(n² + x₁²)` and `φ̃₀`
/// the top eigenvector of the θ = 0 fiber, periodically continued and scaled
/// to unit sup-norm. Both kernels use the undeformed curve's measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialGap<T> {
    grid: Vec<T>,
    phi: Vec<T>,
    delta: SymMatrix<T>,
    step: T,
}

impl<T: Real> TrialGap<T> {
    pub fn new(spec_tau: &CurveSpec<T>, spec_0: &CurveSpec<T>, alpha: T, kappa0: T, window: T, n: usize, n_cell: usize) -> Result<Self> {
        check_alpha(alpha)?;
        check_line_grid(spec_tau, window, n)?;
        let a = spec_0.period_a;
        let fiber = build_fiber_bs(spec_0, alpha, kappa0, &FiberConfig::new(T::zero()), n_cell)?;
        let cell = fiber.top_pair()?.vector;
        let peak = cell.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let cell: Vec<T> = cell.iter().map(|v| *v / peak).collect();
        let hc = fiber.step;
        let interp = |x: T| -> T {
            // cell nodes sit at −a/2 + (k + ½)h
            let u = (x + a * T::lit(0.5)) / hc - T::lit(0.5);
            let fl = u.floor();
            let t = u - fl;
            let m = n_cell as i64;
            let k = fl.to_i64().unwrap_or(0).rem_euclid(m) as usize;
            let k1 = (k + 1) % n_cell;
            cell[k] * (T::one() - t) + cell[k1] * t
        };
        let h = (window + window) / T::from_usize_lossy(n);
        let grid: Vec<T> = (0..n).map(|i| -window + h * (T::from_usize_lossy(i) + T::lit(0.5))).collect();
        let phi: Vec<T> = grid.iter().map(|&x| interp(x)).collect();
        let w: Vec<T> = grid.iter().map(|&x| spec_0.reference_arc_element(x).sqrt()).collect();
        let jt: Vec<T> = grid.iter().map(|&x| spec_tau.arc_element(x) * h).collect();
        let j0: Vec<T> = grid.iter().map(|&x| spec_0.arc_element(x) * h).collect();
        let pt: Vec<[T; 2]> = grid.iter().map(|&x| spec_tau.point(x)).collect();
        let p0: Vec<[T; 2]> = grid.iter().map(|&x| spec_0.point(x)).collect();
        let c = alpha / T::TAU();
        let delta = SymMatrix::from_lower_fn(n, "trial kernel difference", |i, j| {
            if i == j {
                let mass = w[i] * w[i] * h;
                log_diag_entry(jt[i], mass, kappa0, alpha) - log_diag_entry(j0[i], mass, kappa0, alpha)
            } else {
                let dt = (pt[i][0] - pt[j][0]).hypot(pt[i][1] - pt[j][1]);
                let d0 = (p0[i][0] - p0[j][0]).hypot(p0[i][1] - p0[j][1]);
                c * (k0_unchecked(kappa0 * dt) - k0_unchecked(kappa0 * d0)) * w[i] * w[j] * h
            }
        });
        Ok(Self { grid, phi, delta, step: h })
    }

    /// Gap for mollifier index `n_moll`.
    pub fn gap(&self, n_moll: usize) -> T {
        let nn = T::from_usize_lossy(n_moll);
        let v: Vec<T> = self.grid.iter().zip(&self.phi).map(|(&x, &p)| nn * nn / (nn * nn + x * x) * p).collect();
        let mv = self.delta.mul_vec(&v);
        self.step * v.iter().zip(&mv).map(|(a, b)| *a * *b).sum::<T>()
    }
}

/// One-shot form of [`TrialGap`].
#[allow(clippy::too_many_arguments)]
pub fn trial_function_gap<T: Real>(
    spec_tau: &CurveSpec<T>,
    spec_0: &CurveSpec<T>,
    alpha: T,
    kappa0: T,
    n_moll: usize,
    window: T,
    n: usize,
    n_cell: usize,
) -> Result<T> {
    Ok(TrialGap::new(spec_tau, spec_0, alpha, kappa0, window, n, n_cell)?.gap(n_moll))
}

/// Mollifier error `|gap(n) − gap(2n)|` over a list of `n` and its power-law fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MollifierScan<T> {
    pub n: Vec<usize>,
    pub gap: Vec<T>,
    pub gap_doubled: Vec<T>,
    pub error: Vec<T>,
    /// Least-squares slope of `ln error` against `ln n`; `None` if an error vanishes.
    pub exponent: Option<T>,
}

impl<T: Real> TrialGap<T> {
    pub fn mollifier_scan(&self, ns: &[usize]) -> MollifierScan<T> {
        let gap: Vec<T> = ns.iter().map(|&m| self.gap(m)).collect();
        let gap_doubled: Vec<T> = ns.iter().map(|&m| self.gap(2 * m)).collect();
        let error: Vec<T> = gap.iter().zip(&gap_doubled).map(|(a, b)| (*a - *b).abs()).collect();
        let exponent = decay_exponent(ns, &error);
        MollifierScan { n: ns.to_vec(), gap, gap_doubled, error, exponent }
    }
}

/// Least-squares slope of `ln errors` against `ln ns`.
pub fn decay_exponent<T: Real>(ns: &[usize], errors: &[T]) -> Option<T> {
    if ns.len() != errors.len() || ns.len() < 2 {
        return None;
    }
    let pts: Vec<(T, T)> = ns.iter().zip(errors).map(|(&n, &e)| (T::from_usize_lossy(n).ln(), e.ln())).collect();
    if pts.iter().any(|p| !p.1.is_finite()) {
        return None;
    }
    let m = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / m;
    let my = pts.iter().map(|p| p.1).sum::<T>() / m;
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Upsampling factor for eigenfunction reconstruction.
const RECON_UPSAMPLE: usize = 8;

/// Evaluates `ψ(p) = (α/2π)∫K₀(κ*|p − Γ(x)|)φ(x) dm(x)` from the BS eigenvector.
pub fn reconstruct_eigenfunction<T: Real>(result: &BoundStateResult<T>, spec: &CurveSpec<T>, alpha: T, points: &[[T; 2]]) -> Result<Vec<T>> {
    let n = result.grid.len();
    let h = result.step;
    let nodes: Vec<[T; 2]> = result.grid.iter().map(|&x| spec.point(x)).collect();
    let limit = h * T::lit(0.5) * (T::one() - T::lit(1e-9));
    for p in points {
        for q in &nodes {
            if (p[0] - q[0]).hypot(p[1] - q[1]) < limit {
                return Err(Error::SingularPoint(format!("probe ({}, {}) is within h/2 of a grid node", p[0], p[1])));
            }
        }
    }
    let density: Vec<T> = result.eigenvector.iter().zip(&result.weights).map(|(v, w)| *v / *w).collect();
    let hf = h / T::from_usize_lossy(RECON_UPSAMPLE);
    let fine: Vec<(T, [T; 2], T)> = (0..n * RECON_UPSAMPLE)
        .map(|f| {
            let x = -result.window + hf * (T::from_usize_lossy(f) + T::lit(0.5));
            let u = (x + result.window) / h - T::lit(0.5);
            let k = u.floor().to_i64().unwrap_or(0).clamp(0, n as i64 - 1) as usize;
            let t = (u - T::from_usize_lossy(k)).max(T::zero()).min(T::one());
            let k1 = (k + 1).min(n - 1);
            let phi = density[k] * (T::one() - t) + density[k1] * t;
            let w2 = match result.measure {
                Measure::Reference => spec.reference_arc_element(x),
                Measure::ArcLength => spec.arc_element(x),
            };
            (phi * w2 * hf, spec.point(x), x)
        })
        .collect();
    let c = alpha / T::TAU();
    Ok(points
        .par_iter()
        .map(|p| {
            c * fine
                .iter()
                .map(|(m, q, _)| {
                    let d = (p[0] - q[0]).hypot(p[1] - q[1]);
                    if d > T::zero() {
                        *m * k0_unchecked(result.kappa_star * d)
                    } else {
                        T::zero()
                    }
                })
                .sum::<T>()
        })
        .collect())
}

/// The BS eigenvector expressed as a density on the curve, `φᵢ = vᵢ/wᵢ`.
pub fn curve_density<T: Real>(result: &BoundStateResult<T>) -> Vec<T> {
    result.eigenvector.iter().zip(&result.weights).map(|(v, w)| *v / *w).collect()
}

/// Convexity margins sampled across the deformation support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityScan<T> {
    pub kappa: T,
    pub points: usize,
    /// Samples where `z` or `z′` vanishes.
    pub skipped: usize,
    pub min_margin: T,
    pub min_geometric: T,
    pub min_surrogate_verbatim: Option<T>,
    pub min_surrogate_consistent: Option<T>,
}

impl<T: Real> ConvexityScan<T> {
    pub fn positive(&self) -> bool {
        self.min_margin > T::zero()
    }
}

/// Evaluates [`CurveSpec::convexity_margin`] at `points` midpoints of the τ-support.
pub fn convexity_scan<T: Real>(spec: &CurveSpec<T>, kappa: T, points: usize) -> Result<ConvexityScan<T>> {
    let (lo, hi) = spec
        .tau
        .support()
        .ok_or_else(|| Error::InvalidSpec("convexity scan needs a deformation with compact support".into()))?;
    if points == 0 {
        return Err(Error::InvalidSpec("convexity scan needs at least one point".into()));
    }
    let step = (hi - lo) / T::from_usize_lossy(points);
    let fold = |acc: Option<T>, v: Option<T>| match (acc, v) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, None) => a,
        (None, b) => b,
    };
    let mut out = ConvexityScan {
        kappa,
        points,
        skipped: 0,
        min_margin: T::infinity(),
        min_geometric: T::infinity(),
        min_surrogate_verbatim: None,
        min_surrogate_consistent: None,
    };
    for k in 0..points {
        let x = lo + step * (T::from_usize_lossy(k) + T::lit(0.5));
        match spec.convexity_margin(x, kappa) {
            Ok(c) => {
                out.min_margin = out.min_margin.min(c.margin);
                out.min_geometric = out.min_geometric.min(c.geometric);
                out.min_surrogate_verbatim = fold(out.min_surrogate_verbatim, c.surrogate_verbatim);
                out.min_surrogate_consistent = fold(out.min_surrogate_consistent, c.surrogate_consistent);
            }
            Err(Error::SingularPoint(_)) => out.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Deformation, Profile};
    use std::f64::consts::TAU;

    #[test]
    fn decay_of_inverse_square() {
        let ns = [8, 16, 32, 64];
        let e: Vec<f64> = ns.iter().map(|&n| 3.0 / (n * n) as f64).collect();
        let p = decay_exponent(&ns, &e).unwrap();
        assert!((p + 2.0).abs() < 1e-10);
    }

    #[test]
    fn zero_deformation_has_zero_margin() {
        let s = CurveSpec::new(TAU, Profile::Sine { amplitude: 0.5 }, Deformation::Zero);
        let cfg = BoundStateConfig { window: Some(4.0 * TAU), ..Default::default() };
        let r = find_bound_state(&s, 2.0, 1.0, &cfg).unwrap();
        assert_eq!(r.margin, 0.0);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.result.is_none());
    }

    #[test]
    fn band_structure_validates_grid() {
        let s = CurveSpec::flat(TAU);
        assert!(band_structure(&s, 1.0, 8, 1, &ThresholdConfig::default()).is_err());
    }

    #[test]
    fn fmt17_has_seventeen_digits() {
        assert_eq!(fmt17(0.1_f64), "1.0000000000000001e-1");
        assert_eq!(fmt17(-2.0_f64), "-2.0000000000000000e0");
    }
}
