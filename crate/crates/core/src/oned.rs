//! One-dimensional companion models: shifted arrays of potential wells and
//! the strong-coupling effective operator `−d²/ds² − α²/4 − k(s)²/4`.
//!
//! Potentials are stored as nonnegative well depths `V`, the Hamiltonian is
//! `−d²/dx² − V`. Band edges come from the monodromy matrix, bound states
//! from finite differences and, independently, from the Birman–Schwinger
//! kernel assembled in [`crate::bsop::build_1d_bs`].

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bsop::build_1d_bs;
use crate::error::{Error, Result};
use crate::geometry::CurveSpec;
use crate::numerics::{brent_root, expand_upward, gauss_fixed, gauss_legendre, Bracket, SymTridiagonal};
use crate::scalar::Real;
use crate::spectral::{find_threshold, ThresholdConfig, Verdict};

/// Fixed RK4 step length for the monodromy matrix.
pub const RK4_STEP: f64 = 1.0 / 512.0;
/// Cumulative-quadrature nodes per period for the arc-length table.
pub const ARC_TABLE_POINTS: usize = 512;
/// Unshifted wells required on each side of the shifted ones in FD windows.
pub const FD_GUARD_WELLS: i64 = 10;
/// Energy scan resolution used to bracket the first band edge.
const EDGE_SCAN_POINTS: usize = 400;

/// Shape of a single well, centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum WellProfile<T> {
    /// `V = depth` on `|x| < width/2`.
    Square { depth: T, width: T },
    /// `V = depth·(1 − (2x/width)²)⁴` on `|x| < width/2`.
    Bump { depth: T, width: T },
}

impl<T: Real> WellProfile<T> {
    pub fn width(&self) -> T {
        match *self {
            WellProfile::Square { width, .. } | WellProfile::Bump { width, .. } => width,
        }
    }

    pub fn depth(&self) -> T {
        match *self {
            WellProfile::Square { depth, .. } | WellProfile::Bump { depth, .. } => depth,
        }
    }

    pub fn value(&self, xi: T) -> T {
        let half = self.width() * T::lit(0.5);
        if xi.abs() >= half {
            return T::zero();
        }
        match *self {
            WellProfile::Square { depth, .. } => depth,
            WellProfile::Bump { depth, .. } => {
                let t = xi / half;
                let q = T::one() - t * t;
                depth * q * q * q * q
            }
        }
    }

    /// Exact integral of `V` over `[lo, hi]` (relative coordinates).
    pub fn integral(&self, lo: T, hi: T) -> T {
        let half = self.width() * T::lit(0.5);
        let (l, r) = (lo.max(-half), hi.min(half));
        if r <= l {
            return T::zero();
        }
        match *self {
            WellProfile::Square { depth, .. } => depth * (r - l),
            WellProfile::Bump { .. } => {
                let (x, w) = gauss_legendre::<T>(12);
                gauss_fixed(&mut |u| self.value(u), l, r, &x, &w)
            }
        }
    }
}

/// Periodic well array with finitely many displaced wells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellArray1D<T> {
    pub spacing: T,
    /// Width `b` of the interval each well is confined to; `width ≤ b < spacing`.
    pub support_b: T,
    pub profile: WellProfile<T>,
    /// Displacements `δₙ` of well `n`; absent entries are zero.
    #[serde(default)]
    pub shifts: BTreeMap<i64, T>,
}

impl<T: Real> WellArray1D<T> {
    pub fn new(spacing: T, support_b: T, profile: WellProfile<T>) -> Self {
        Self { spacing, support_b, profile, shifts: BTreeMap::new() }
    }

    pub fn with_shifts(&self, shifts: impl IntoIterator<Item = (i64, T)>) -> Self {
        let mut out = self.clone();
        out.shifts = shifts.into_iter().filter(|(_, d)| *d != T::zero()).collect();
        out
    }

    pub fn unshifted(&self) -> Self {
        self.with_shifts(std::iter::empty())
    }

    pub fn is_periodic(&self) -> bool {
        self.shifts.values().all(|d| *d == T::zero())
    }

    pub fn shift(&self, n: i64) -> T {
        self.shifts.get(&n).copied().unwrap_or_else(T::zero)
    }

    pub fn centre(&self, n: i64) -> T {
        T::from_i64(n).unwrap() * self.spacing + self.shift(n)
    }

    /// Indices whose unshifted position lies in `[−W, W]`.
    pub fn wells_in(&self, window: T) -> Vec<i64> {
        let k = (window / self.spacing).floor().to_i64().unwrap_or(0);
        (-k..=k).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, w, l) = (self.spacing, self.support_b, self.profile.width(), self.profile.depth());
        if !(a.is_finite() && a > T::zero()) {
            return Err(Error::InvalidSpec(format!("spacing must be positive, got {a}")));
        }
        if !(w > T::zero() && w <= b && b < a) {
            return Err(Error::InvalidSpec(format!("need 0 < width <= support_b < spacing, got {w}, {b}, {a}")));
        }
        if !(l.is_finite() && l >= T::zero()) {
            return Err(Error::InvalidSpec(format!("well depth must be nonnegative, got {l}")));
        }
        if self.shifts.values().any(|d| !d.is_finite()) {
            return Err(Error::InvalidSpec("shifts must be finite".into()));
        }
        let mut touched: Vec<i64> = self.shifts.keys().flat_map(|&n| [n - 1, n]).collect();
        touched.sort_unstable();
        touched.dedup();
        for n in touched {
            let gap = self.centre(n + 1) - self.centre(n);
            if !(gap > a - b) {
                return Err(Error::Overlap(format!(
                    "wells {n} and {} are {gap} apart, need more than a - b = {}",
                    n + 1,
                    a - b
                )));
            }
            if !(gap >= w) {
                return Err(Error::Overlap(format!("supports of wells {n} and {} intersect", n + 1)));
            }
        }
        Ok(())
    }

    /// `V_δ(x) = Σₙ V(x − xₙ)`.
    pub fn potential(&self, x: T) -> T {
        let n0 = (x / self.spacing).round().to_i64().unwrap_or(0);
        (n0 - 2..=n0 + 2).map(|n| self.profile.value(x - self.centre(n))).sum()
    }

    /// Mean of `V_δ` over `[lo, hi]`.
    pub fn cell_average(&self, lo: T, hi: T) -> T {
        let mid = (lo + hi) * T::lit(0.5);
        let n0 = (mid / self.spacing).round().to_i64().unwrap_or(0);
        let total: T = (n0 - 2..=n0 + 2)
            .map(|n| {
                let c = self.centre(n);
                self.profile.integral(lo - c, hi - c)
            })
            .sum();
        total / (hi - lo)
    }
}

/// An `L`-periodic nonnegative well potential described on one cell `[−L/2, L/2]`.
pub trait PeriodicPotential<T: Real>: Sync {
    fn period(&self) -> T;
    /// `V` at a point of the cell.
    fn value(&self, x: T) -> T;
    /// Points of the open cell where `V` or its low derivatives jump, sorted.
    fn breakpoints(&self) -> Vec<T>;
    fn max_depth(&self) -> T;
}

impl<T: Real> PeriodicPotential<T> for WellArray1D<T> {
    fn period(&self) -> T {
        self.spacing
    }

    fn value(&self, x: T) -> T {
        self.profile.value(x)
    }

    fn breakpoints(&self) -> Vec<T> {
        let h = self.profile.width() * T::lit(0.5);
        vec![-h, h]
    }

    fn max_depth(&self) -> T {
        self.profile.depth()
    }
}

/// Transfer matrix of `ψ″ = −(V + E)ψ` across one period, columns are the
/// solutions with initial data `(1, 0)` and `(0, 1)`.
pub fn monodromy<T: Real>(pot: &impl PeriodicPotential<T>, energy: T) -> [[T; 2]; 2] {
    let l = pot.period();
    let half = l * T::lit(0.5);
    let mut knots = vec![-half];
    knots.extend(pot.breakpoints().into_iter().filter(|b| *b > -half && *b < half));
    knots.push(half);
    let mut u = [T::one(), T::zero()];
    let mut v = [T::zero(), T::one()];
    for seg in knots.windows(2) {
        let len = seg[1] - seg[0];
        // V may jump at the knots; sample it from inside the segment
        let (lo_in, hi_in) = (seg[0] + len * T::lit(1e-12), seg[1] - len * T::lit(1e-12));
        let rhs = |x: T, y: [T; 2]| [y[1], -(pot.value(x.max(lo_in).min(hi_in)) + energy) * y[0]];
        let steps = (len / T::lit(RK4_STEP)).ceil().to_usize().unwrap_or(1).max(1);
        let h = len / T::from_usize_lossy(steps);
        for k in 0..steps {
            let x = seg[0] + h * T::from_usize_lossy(k);
            for y in [&mut u, &mut v] {
                let k1 = rhs(x, *y);
                let hh = h * T::lit(0.5);
                let k2 = rhs(x + hh, [y[0] + hh * k1[0], y[1] + hh * k1[1]]);
                let k3 = rhs(x + hh, [y[0] + hh * k2[0], y[1] + hh * k2[1]]);
                let k4 = rhs(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
                let s = h / T::lit(6.0);
                for c in 0..2 {
                    y[c] += s * (k1[c] + T::lit(2.0) * (k2[c] + k3[c]) + k4[c]);
                }
            }
        }
    }
    [[u[0], v[0]], [u[1], v[1]]]
}

/// `(E, tr M(E))` on a uniform energy grid.
pub fn discriminant_scan<T: Real>(pot: &impl PeriodicPotential<T>, e_lo: T, e_hi: T, n: usize) -> Vec<(T, T)> {
    (0..n)
        .map(|k| {
            let e = if n == 1 { e_lo } else { e_lo + (e_hi - e_lo) * T::from_usize_lossy(k) / T::from_usize_lossy(n - 1) };
            let m = monodromy(pot, e);
            (e, m[0][0] + m[1][1])
        })
        .collect()
}

/// Bottom of the lowest band of a periodic potential: the smallest `E` with `tr M(E) = 2`.
pub fn band_bottom_periodic<T: Real>(pot: &impl PeriodicPotential<T>) -> Result<T> {
    let depth = pot.max_depth();
    if depth == T::zero() {
        return Ok(T::zero());
    }
    let mut f = |e: T| -> Result<T> {
        let m = monodromy(pot, e);
        Ok(m[0][0] + m[1][1] - T::lit(2.0))
    };
    let lo = -depth;
    let mut prev = (lo, f(lo)?);
    if prev.1 <= T::zero() {
        return Err(Error::Bracket(format!("tr M - 2 is not positive at E = {lo}")));
    }
    let steps = EDGE_SCAN_POINTS;
    for k in 1..=steps {
        let e = lo - lo * T::from_usize_lossy(k) / T::from_usize_lossy(steps);
        let fe = f(e)?;
        if fe <= T::zero() {
            let bracket = Bracket::from_values(prev.0, e, prev.1, fe)?;
            let tol = T::lit(1e-13).max(T::epsilon() * T::lit(16.0)) * depth.max(T::one());
            let edge = brent_root(&mut f, bracket, tol)?;
            check_edge_positive(pot, edge)?;
            return Ok(edge);
        }
        prev = (e, fe);
    }
    Err(Error::Bracket(format!("no band edge in [{lo}, 0)")))
}

/// The periodic solution at the band bottom must not change sign.
fn check_edge_positive<T: Real>(pot: &impl PeriodicPotential<T>, edge: T) -> Result<()> {
    let m = monodromy(pot, edge);
    // (M − I)·(p, q) = 0
    let (p, q) = if (m[0][1]).abs() + (T::one() - m[0][0]).abs() > (m[1][0]).abs() + (T::one() - m[1][1]).abs() {
        (m[0][1], T::one() - m[0][0])
    } else {
        (T::one() - m[1][1], m[1][0])
    };
    let l = pot.period();
    let n = (l / T::lit(RK4_STEP)).ceil().to_usize().unwrap_or(1).max(1);
    let h = l / T::from_usize_lossy(n);
    let mut y = [p, q];
    let mut sign = None;
    for k in 0..n {
        let x = -l * T::lit(0.5) + h * T::from_usize_lossy(k);
        if y[0] != T::zero() {
            let s = y[0] > T::zero();
            if *sign.get_or_insert(s) != s {
                return Err(Error::Bracket(format!("band edge {edge} is not the ground band")));
            }
        }
        let r = |x: T, y: [T; 2]| [y[1], -(pot.value(x) + edge) * y[0]];
        let hh = h * T::lit(0.5);
        let k1 = r(x, y);
        let k2 = r(x + hh, [y[0] + hh * k1[0], y[1] + hh * k1[1]]);
        let k3 = r(x + hh, [y[0] + hh * k2[0], y[1] + hh * k2[1]]);
        let k4 = r(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for c in 0..2 {
            y[c] += h / T::lit(6.0) * (k1[c] + T::lit(2.0) * (k2[c] + k3[c]) + k4[c]);
        }
    }
    Ok(())
}

/// Bottom of the first band of an unshifted well array.
pub fn band_bottom_1d<T: Real>(arr: &WellArray1D<T>) -> Result<T> {
    arr.validate()?;
    if !arr.is_periodic() {
        return Err(Error::InvalidSpec("band bottom needs an unshifted array".into()));
    }
    band_bottom_periodic(arr)
}

/// Lowest eigenvalue of a finite-difference Dirichlet problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundState1D<T> {
    pub energy: T,
    /// Same window at half the resolution.
    pub energy_coarse: T,
    /// `(4E_h − E_{2h})/3`.
    pub richardson: T,
    pub window_wells: usize,
    pub n_per_a: usize,
    #[serde(skip)]
    pub grid: Vec<T>,
    #[serde(skip)]
    pub eigenvector: Vec<T>,
}

fn fd_operator<T: Real>(arr: &WellArray1D<T>, half_len: T, h: T, intervals: usize) -> Result<(Vec<T>, SymTridiagonal<T>)> {
    let inv = T::one() / (h * h);
    let grid: Vec<T> = (1..intervals).map(|k| -half_len + h * T::from_usize_lossy(k)).collect();
    let half = h * T::lit(0.5);
    let diag: Vec<T> = grid.iter().map(|&x| inv + inv - arr.cell_average(x - half, x + half)).collect();
    let off = vec![-inv; grid.len().saturating_sub(1)];
    Ok((grid, SymTridiagonal::new(diag, off)?))
}

/// Lowest Dirichlet eigenvalue of `−d² − V_δ` on a window of `window_wells`
/// wells centred at the origin, `n_per_a` grid intervals per spacing.
pub fn ground_state_1d<T: Real>(arr: &WellArray1D<T>, window_wells: usize, n_per_a: usize) -> Result<GroundState1D<T>> {
    arr.validate()?;
    if window_wells % 2 == 0 || window_wells == 0 {
        return Err(Error::InvalidSpec(format!("window_wells must be odd, got {window_wells}")));
    }
    if n_per_a < 8 || n_per_a % 2 == 1 {
        return Err(Error::Resolution(format!("n_per_a must be even and at least 8, got {n_per_a}")));
    }
    let k = (window_wells as i64 - 1) / 2;
    for (&n, d) in &arr.shifts {
        if *d != T::zero() && n.abs() > k - FD_GUARD_WELLS {
            return Err(Error::WindowTooSmall(format!(
                "shifted well {n} needs {FD_GUARD_WELLS} unshifted wells on each side inside the window"
            )));
        }
    }
    let half_len = arr.spacing * T::from_usize_lossy(window_wells) * T::lit(0.5);
    let solve = |per: usize| -> Result<(T, Vec<T>, SymTridiagonal<T>)> {
        let intervals = per * window_wells;
        let h = arr.spacing / T::from_usize_lossy(per);
        let (grid, op) = fd_operator(arr, half_len, h, intervals)?;
        Ok((op.eigenvalue(0)?, grid, op))
    };
    let (energy, grid, op) = solve(n_per_a)?;
    let (energy_coarse, _, _) = solve(n_per_a / 2)?;
    let eigenvector = op.eigenvector(energy)?;
    Ok(GroundState1D {
        energy,
        energy_coarse,
        richardson: (T::lit(4.0) * energy - energy_coarse) / T::lit(3.0),
        window_wells,
        n_per_a,
        grid,
        eigenvector,
    })
}

/// Outcome of the Birman–Schwinger bound-state test for a shifted array.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneDBoundState<T> {
    pub kappa0: T,
    pub eps0: T,
    pub mu_perturbed: T,
    pub mu_unperturbed: T,
    pub margin: T,
    pub verdict: Verdict,
    /// Eigenvalue of the BS matrix the crossing is solved for.
    pub target_level: Option<T>,
    pub kappa_star: Option<T>,
    pub energy: Option<T>,
    pub window: T,
    pub n: usize,
}

/// Compares the BS matrices of the shifted and unshifted arrays at the band
/// bottom and, when the shifted one is larger, solves for the crossing `κ* > κ₀`.
pub fn bound_below_band_bs<T: Real>(arr: &WellArray1D<T>, window: T, n: usize, margin_tol: T) -> Result<OneDBoundState<T>> {
    let base = arr.unshifted();
    let eps0 = band_bottom_1d(&base)?;
    if !(eps0 < T::zero()) {
        return Err(Error::Bracket("band bottom is not negative".into()));
    }
    let kappa0 = (-eps0).sqrt();
    let mu = |a: &WellArray1D<T>, k: T| build_1d_bs(a, k, window, n)?.mu_max();
    let mu_perturbed = mu(arr, kappa0)?;
    let mu_unperturbed = mu(&base, kappa0)?;
    let margin = mu_perturbed - mu_unperturbed;
    let mut out = OneDBoundState {
        kappa0,
        eps0,
        mu_perturbed,
        mu_unperturbed,
        margin,
        verdict: Verdict::Inconclusive,
        target_level: None,
        kappa_star: None,
        energy: None,
        window,
        n,
    };
    if margin <= margin_tol {
        return Ok(out);
    }
    let target = if mu_perturbed > T::one() { T::one() } else { mu_unperturbed };
    let mut f = |k: T| Ok(mu(arr, k)? - target);
    let bracket = expand_upward(&mut f, kappa0, mu_perturbed - target, kappa0 * T::lit(1.5), T::lit(1.5), 20)?;
    let ks = brent_root(&mut f, bracket, T::lit(crate::numerics::DEFAULT_ROOT_TOL))?;
    out.verdict = Verdict::Found;
    out.target_level = Some(target);
    out.kappa_star = Some(ks);
    out.energy = Some(-ks * ks);
    Ok(out)
}

/// `Σ_{i,j} [R_κ(xᵢ − xⱼ + ξ − ξ′) − R_κ((i − j)a + ξ − ξ′)]` over wells
/// `|i|, |j| ≤ half`, with `R_κ(z) = e^{−κ|z|}/2κ`.
pub fn convexity_witness<T: Real>(arr: &WellArray1D<T>, kappa: T, xi: T, xi_p: T, half: i64) -> T {
    let r = |z: T| (-kappa * z.abs()).exp() / (kappa + kappa);
    let c = xi - xi_p;
    let mut acc = T::zero();
    for i in -half..=half {
        for j in -half..=half {
            let unshifted = T::from_i64(i - j).unwrap() * arr.spacing;
            acc += r(arr.centre(i) - arr.centre(j) + c) - r(unshifted + c);
        }
    }
    acc
}

/// Parameters for random admissible shift sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSampler<T> {
    /// At most this many wells are displaced.
    pub max_shifted: usize,
    /// Shifted indices are drawn from `[−span, span]`.
    pub span: i64,
    pub min_magnitude: T,
    pub max_magnitude: T,
}

/// Draws `count` admissible shift sets from a seeded ChaCha stream.
pub fn sample_shift_sets<T: Real>(base: &WellArray1D<T>, sampler: &ShiftSampler<T>, count: usize, seed: u64) -> Result<Vec<WellArray1D<T>>> {
    if sampler.max_shifted == 0 || sampler.span < 0 || !(sampler.min_magnitude > T::zero()) || sampler.max_magnitude < sampler.min_magnitude {
        return Err(Error::InvalidSpec("invalid shift sampler".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 10_000 * count.max(1) {
            return Err(Error::InvalidSpec("could not draw admissible shift sets".into()));
        }
        let k = rng.gen_range(1..=sampler.max_shifted);
        let mut shifts = BTreeMap::new();
        while shifts.len() < k {
            let idx = rng.gen_range(-sampler.span..=sampler.span);
            let lo = sampler.min_magnitude.to_f64_lossy();
            let hi = sampler.max_magnitude.to_f64_lossy();
            let mag = if hi > lo { rng.gen_range(lo..hi) } else { lo };
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            shifts.insert(idx, T::lit(sign * mag));
        }
        let cand = base.with_shifts(shifts);
        if cand.validate().is_ok() {
            out.push(cand);
        }
    }
    Ok(out)
}

/// One randomized array checked by both solvers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCase<T> {
    pub shifts: BTreeMap<i64, T>,
    pub ground_fd: T,
    pub band_bottom: T,
    pub below_band: bool,
    pub bs: OneDBoundState<T>,
    /// `|E_BS − E_FD| / |E_FD|` when the BS crossing exists.
    pub relative_gap: Option<T>,
}

/// Runs FD and BS on every array; all arrays must share the unshifted part.
pub fn shift_sweep<T: Real>(
    arrays: &[WellArray1D<T>],
    window_wells: usize,
    n_per_a: usize,
    bs_window: T,
    bs_n: usize,
    solver_tol: T,
) -> Result<Vec<SweepCase<T>>> {
    let Some(first) = arrays.first() else { return Ok(Vec::new()) };
    let band_bottom = band_bottom_1d(&first.unshifted())?;
    arrays
        .par_iter()
        .map(|arr| {
            let fd = ground_state_1d(arr, window_wells, n_per_a)?;
            let bs = bound_below_band_bs(arr, bs_window, bs_n, T::lit(1e-6))?;
            let relative_gap = bs.energy.map(|e| ((e - fd.energy) / fd.energy).abs());
            Ok(SweepCase {
                shifts: arr.shifts.clone(),
                ground_fd: fd.energy,
                band_bottom,
                below_band: fd.energy < band_bottom - solver_tol,
                bs,
                relative_gap,
            })
        })
        .collect()
}

/// Curvature wells `k²/4` of a periodic curve, reparametrized by arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureWells<T> {
    spec: CurveSpec<T>,
    /// Arc length of one period.
    pub cell_length: T,
    /// `(σ, x₁)` table over one cell with `σ(0) = 0`.
    sigma: Vec<T>,
    x: Vec<T>,
    depth: T,
}

impl<T: Real> CurvatureWells<T> {
    pub fn new(spec: &CurveSpec<T>) -> Result<Self> {
        spec.validate()?;
        if !spec.gamma.is_c2() {
            return Err(Error::NotSmooth("effective operator needs a C² profile".into()));
        }
        let reference = spec.reference();
        let a = spec.period_a;
        let m = ARC_TABLE_POINTS;
        let dx = a / T::from_usize_lossy(m);
        let x: Vec<T> = (0..=m).map(|k| -a * T::lit(0.5) + dx * T::from_usize_lossy(k)).collect();
        let mut s = vec![T::zero(); m + 1];
        for k in 0..m {
            s[k + 1] = s[k] + reference.arc_element(x[k] + dx * T::lit(0.5)) * dx;
        }
        let centre = s[m / 2];
        let sigma: Vec<T> = s.iter().map(|v| *v - centre).collect();
        let mut depth = T::zero();
        for &xi in &x {
            depth = depth.max(-reference.curvature_potential(xi)?);
        }
        Ok(Self { spec: reference, cell_length: s[m], sigma, x, depth })
    }

    /// Curve parameter of arc length `σ` (within one cell).
    pub fn x_of_sigma(&self, sg: T) -> T {
        let n = self.sigma.len();
        let k = match self.sigma.binary_search_by(|v| v.partial_cmp(&sg).expect("finite")) {
            Ok(k) => return self.x[k],
            Err(k) => k.clamp(1, n - 1),
        };
        let t = (sg - self.sigma[k - 1]) / (self.sigma[k] - self.sigma[k - 1]);
        self.x[k - 1] + t * (self.x[k] - self.x[k - 1])
    }

    /// `k²/4` at arc length `σ` from the cell centre, zero outside the cell.
    pub fn local(&self, sg: T) -> T {
        let half = self.cell_length * T::lit(0.5);
        if sg.abs() > half {
            return T::zero();
        }
        -self.spec.curvature_potential(self.x_of_sigma(sg)).unwrap_or_else(|_| T::zero())
    }
}

impl<T: Real> PeriodicPotential<T> for CurvatureWells<T> {
    fn period(&self) -> T {
        self.cell_length
    }

    fn value(&self, x: T) -> T {
        self.local(x)
    }

    fn breakpoints(&self) -> Vec<T> {
        Vec::new()
    }

    fn max_depth(&self) -> T {
        self.depth
    }
}

/// Sampled effective potential `−α²/4 − k²/4` on an arc-length grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveOperator1D<T> {
    pub grid: Vec<T>,
    pub potential: Vec<T>,
    pub alpha: T,
}

/// Effective spectrum below `−α²/4`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveSpectrum<T> {
    pub operator: EffectiveOperator1D<T>,
    /// Eigenvalues below `−α²/4`, ascending.
    pub energies: Vec<T>,
    /// Band bottom of the unshifted effective operator.
    pub band_bottom: T,
}

/// Arc-length positions of the bump centres near the window, shifted by the
/// deformation evaluated at the bump centres.
fn bump_positions<T: Real>(spec: &CurveSpec<T>, wells: &CurvatureWells<T>, s_half: T) -> Result<Vec<T>> {
    let a = spec.period_a;
    let l = wells.cell_length;
    let count = (s_half / l).ceil().to_i64().unwrap_or(0) + 2;
    let eps = spec.eps();
    let reach = match spec.gamma {
        crate::geometry::Profile::BumpTrain { half_width, .. } => Some(half_width),
        _ => None,
    };
    if spec.has_deformation() {
        let Some(w) = reach else {
            return Err(Error::InvalidSpec("shifted segments need a bump_train profile with straight parts".into()));
        };
        if !matches!(spec.tau, crate::geometry::Deformation::StepShifts { .. }) {
            return Err(Error::InvalidSpec("effective operator accepts step_shifts deformations only".into()));
        }
        for n in -count..=count {
            let c = T::from_i64(n).unwrap() * a;
            for k in 0..=64 {
                let x = c - w + (w + w) * T::from_usize_lossy(k) / T::lit(64.0);
                if spec.tau_at(x).1.abs() > T::lit(1e-10) {
                    return Err(Error::InvalidSpec(format!(
                        "deformation bends the curved segment at x1 = {x}"
                    )));
                }
            }
        }
    }
    Ok((-count..=count)
        .map(|n| T::from_i64(n).unwrap() * l + eps * spec.tau_at(T::from_i64(n).unwrap() * a).0)
        .collect())
}

/// Builds the effective operator on `[−S, S]` with `n` interior points and returns
/// its finite-difference eigenvalues below `−α²/4`.
pub fn effective_spectrum<T: Real>(spec: &CurveSpec<T>, alpha: T, s_half: T, n: usize) -> Result<EffectiveSpectrum<T>> {
    if !(alpha > T::zero() && s_half > T::zero()) || n < 3 {
        return Err(Error::InvalidSpec("effective spectrum needs alpha > 0, S > 0 and n >= 3".into()));
    }
    let base = -alpha * alpha / T::lit(4.0);
    let wells = CurvatureWells::new(spec)?;
    let band_bottom = base + band_bottom_periodic(&wells)?;
    let centres = bump_positions(spec, &wells, s_half)?;
    let h = (s_half + s_half) / T::from_usize_lossy(n + 1);
    let grid: Vec<T> = (1..=n).map(|k| -s_half + h * T::from_usize_lossy(k)).collect();
    let depth: Vec<T> = grid.iter().map(|&s| centres.iter().map(|&c| wells.local(s - c)).sum()).collect();
    let inv = T::one() / (h * h);
    let op = SymTridiagonal::new(depth.iter().map(|v| inv + inv - *v).collect(), vec![-inv; n - 1])?;
    let count = op.count_below(T::zero());
    let energies = (0..count).map(|k| Ok(base + op.eigenvalue(k)?)).collect::<Result<Vec<T>>>()?;
    Ok(EffectiveSpectrum {
        operator: EffectiveOperator1D { grid, potential: depth.iter().map(|v| base - *v).collect(), alpha },
        energies,
        band_bottom,
    })
}

/// Band bottom `−α²/4 + E₀` of the periodic effective operator.
pub fn effective_band_bottom<T: Real>(spec: &CurveSpec<T>, alpha: T) -> Result<T> {
    let wells = CurvatureWells::new(spec)?;
    Ok(-alpha * alpha / T::lit(4.0) + band_bottom_periodic(&wells)?)
}

/// One row of the strong-coupling comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongCouplingRow<T> {
    pub alpha: T,
    pub eps2d: T,
    pub epseff: T,
    pub delta: T,
    /// `Δ·α/ln α`.
    pub ratio: T,
    pub n_cell: usize,
    /// Lowest effective eigenvalue of the shifted curve and whether it lies below the band.
    pub shifted_lowest: Option<T>,
    pub shifted_below_band: Option<bool>,
}

/// Compares the 2D threshold with the effective-operator band bottom for each α.
pub fn strong_coupling_compare<T: Real>(
    spec: &CurveSpec<T>,
    shifted: Option<&CurveSpec<T>>,
    alpha_list: &[T],
    cfg: &ThresholdConfig<T>,
    s_half: T,
    n_fd: usize,
) -> Result<Vec<StrongCouplingRow<T>>> {
    if alpha_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidSpec("alpha_list must be increasing".into()));
    }
    let a = spec.period_a;
    for &al in alpha_list {
        if !(al > T::one() && al * a * T::lit(0.5) > T::lit(3.0)) {
            return Err(Error::InvalidSpec(format!("alpha = {al} is too small: need kappa0*a > 3 and alpha > 1")));
        }
    }
    alpha_list
        .par_iter()
        .map(|&al| {
            let th = find_threshold(spec, al, cfg)?;
            let epseff = effective_band_bottom(spec, al)?;
            let quarter = al * al / T::lit(4.0);
            let delta = ((th.eps0 + quarter) - (epseff + quarter)).abs();
            let (shifted_lowest, shifted_below_band) = match shifted {
                Some(sh) => {
                    let es = effective_spectrum(sh, al, s_half, n_fd)?;
                    let low = es.energies.first().copied();
                    (low, Some(low.is_some_and(|e| e < es.band_bottom)))
                }
                None => (None, None),
            };
            Ok(StrongCouplingRow {
                alpha: al,
                eps2d: th.eps0,
                epseff,
                delta,
                ratio: delta * al / al.ln(),
                n_cell: th.n_cell,
                shifted_lowest,
                shifted_below_band,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(a: f64) -> WellArray1D<f64> {
        WellArray1D::new(a, 0.9 * a, WellProfile::Square { depth: 4.0, width: 0.5 })
    }

    #[test]
    fn free_band_bottom_is_zero() {
        let arr = WellArray1D::new(4.0, 1.0, WellProfile::Square { depth: 0.0, width: 0.5 });
        assert_eq!(band_bottom_1d(&arr).unwrap(), 0.0);
    }

    #[test]
    fn free_monodromy_is_exact() {
        let arr = WellArray1D::new(3.0, 1.0, WellProfile::Square { depth: 0.0, width: 0.5 });
        let m = monodromy(&arr, -0.25);
        assert!((m[0][0] + m[1][1] - 2.0 * (1.5_f64).cosh()).abs() < 1e-9);
    }

    #[test]
    fn shifts_respect_ordering() {
        let arr = square(4.0);
        assert!(arr.with_shifts([(0, 1.2)]).validate().is_ok());
        let bad = arr.with_shifts([(0, 3.7)]);
        assert!(matches!(bad.validate(), Err(Error::Overlap(_))));
        assert!(ground_state_1d(&arr.with_shifts([(0, 0.5)]), 11, 40).is_err());
    }

    #[test]
    fn potential_tracks_shifts() {
        let arr = square(4.0).with_shifts([(1, 1.0)]);
        assert_eq!(arr.potential(5.0), 4.0);
        assert_eq!(arr.potential(4.0), 0.0);
        assert!((arr.cell_average(4.9, 5.3) - 4.0 * 0.35 / 0.4).abs() < 1e-12);
    }

    #[test]
    fn witness_positive_for_single_shift() {
        let arr = square(4.0).with_shifts([(0, 0.8)]);
        for &(a, b) in &[(0.0, 0.0), (0.2, -0.1), (-0.2, 0.2)] {
            assert!(convexity_witness(&arr, 0.9, a, b, 3) > 0.0);
        }
    }
}
