//! Periodic curves, their compactly supported deformations, and the
//! geometric quantities consumed by the kernels.
//!
//! A curve is the graph `x₁ ↦ (x₁ + ε·τ(x₁), ε·γ(x₁))` where `γ` is
//! `a`-periodic and `τ′` has compact support. Without an `epsilon_scale`
//! the factor `ε` is one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::integrate_adaptive;
use crate::scalar::Real;
use crate::specfun::k_ratio;

const ORDER_SAMPLES: usize = 4096;

/// Periodic profile `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile<T> {
    Flat,
    /// `A·sin(2πx₁/a)`.
    Sine { amplitude: T },
    /// One bump per period centred at `x₁ = n·a`: `A·(1 − t²)^(order+1)` with
    /// `t = (x₁ − n·a)/half_width`, zero elsewhere. Smoothness class `C^order`.
    BumpTrain {
        amplitude: T,
        half_width: T,
        #[serde(default = "default_bump_order")]
        order: u32,
    },
}

fn default_bump_order() -> u32 {
    6
}

/// One shifted straight segment of a [`Deformation::StepShifts`] profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepShift<T> {
    pub lo: T,
    pub hi: T,
    pub shift: T,
}

/// Deformation `τ` with compactly supported derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields, bound(deserialize = "T: Real"))]
pub enum Deformation<T> {
    Zero,
    /// Decreases smoothly from 0 to `−depth` across `[−L, L]` (septic smoothstep, C³).
    SmoothContraction { depth: T, half_width: T },
    /// `m·sin³(πx₁/L)` on `|x₁| < L`; odd, C², and `∫τ′ = 0`.
    ZeroMeanWiggle { amplitude: T, half_width: T },
    /// Plateaus of height `shift` on `[lo, hi]` joined by smoothstep ramps of width `ramp`.
    StepShifts {
        steps: Vec<StepShift<T>>,
        #[serde(default = "default_ramp")]
        ramp: T,
    },
    /// Pointwise sum of the parts.
    Composite { parts: Vec<Deformation<T>> },
}

fn default_ramp<T: Real>() -> T {
    T::lit(0.5)
}

/// Periodic curve plus deformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real"))]
pub struct CurveSpec<T> {
    pub period_a: T,
    pub gamma: Profile<T>,
    #[serde(default = "zero_deformation")]
    pub tau: Deformation<T>,
    #[serde(default)]
    pub epsilon_scale: Option<T>,
}

fn zero_deformation<T>() -> Deformation<T> {
    Deformation::Zero
}

/// Result of [`CurveSpec::convexity_margin`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityMargin<T> {
    /// `1/z + κ·K₀(κz)/K₁(κz) − z″/z′²`.
    pub margin: T,
    /// The same expression without the Bessel ratio; positive iff `z·z″ < z′²`.
    pub geometric: T,
    /// `x₁² + 2ε(τ + τ′)`, present when `epsilon_scale` is set.
    pub surrogate_verbatim: Option<T>,
    /// `1 + 2ετ′ − εx₁τ″`, the first-order expansion of `z·z″ < z′²`.
    pub surrogate_consistent: Option<T>,
}

/// Septic smoothstep on [0, 1] and its first two derivatives.
fn smoothstep<T: Real>(u: T) -> (T, T, T) {
    if u <= T::zero() {
        return (T::zero(), T::zero(), T::zero());
    }
    if u >= T::one() {
        return (T::one(), T::zero(), T::zero());
    }
    let u2 = u * u;
    let v = T::one() - u;
    let s = u2 * u2 * (T::lit(35.0) - T::lit(84.0) * u + T::lit(70.0) * u2 - T::lit(20.0) * u2 * u);
    let s1 = T::lit(140.0) * u2 * u * v * v * v;
    let s2 = T::lit(420.0) * u2 * v * v * (T::one() - u - u);
    (s, s1, s2)
}

impl<T: Real> Profile<T> {
    /// `(γ, γ′, γ″)` at `x` for period `a`.
    pub fn eval(&self, x: T, a: T) -> (T, T, T) {
        match *self {
            Profile::Flat => (T::zero(), T::zero(), T::zero()),
            Profile::Sine { amplitude } => {
                let k = T::TAU() / a;
                let (s, c) = (k * x).sin_cos();
                (amplitude * s, amplitude * k * c, -amplitude * k * k * s)
            }
            Profile::BumpTrain { amplitude, half_width, order } => {
                let local = x - a * (x / a).round();
                let t = local / half_width;
                if t.abs() >= T::one() {
                    return (T::zero(), T::zero(), T::zero());
                }
                let p = order as i32;
                let q = T::one() - t * t;
                let pf = T::from_usize_lossy(order as usize);
                let g = amplitude * q.powi(p + 1);
                let g1 = -amplitude * (pf + T::one()) * q.powi(p) * (t + t) / half_width;
                let g2 = if order == 0 {
                    -amplitude * T::lit(2.0) / (half_width * half_width)
                } else {
                    amplitude * (pf + T::one()) / (half_width * half_width)
                        * (T::lit(4.0) * pf * t * t * q.powi(p - 1) - T::lit(2.0) * q.powi(p))
                };
                (g, g1, g2)
            }
        }
    }

    /// Whether `γ″` exists and is continuous.
    pub fn is_c2(&self) -> bool {
        match self {
            Profile::BumpTrain { order, .. } => *order >= 2,
            _ => true,
        }
    }

    pub fn is_flat(&self) -> bool {
        match *self {
            Profile::Flat => true,
            Profile::Sine { amplitude } | Profile::BumpTrain { amplitude, .. } => amplitude == T::zero(),
        }
    }
}

impl<T: Real> Deformation<T> {
    /// `(τ, τ′, τ″)` at `x`.
    pub fn eval(&self, x: T) -> (T, T, T) {
        match self {
            Deformation::Zero => (T::zero(), T::zero(), T::zero()),
            Deformation::SmoothContraction { depth, half_width } => {
                let l2 = *half_width + *half_width;
                let (s, s1, s2) = smoothstep((x + *half_width) / l2);
                (-*depth * s, -*depth * s1 / l2, -*depth * s2 / (l2 * l2))
            }
            Deformation::ZeroMeanWiggle { amplitude, half_width } => {
                if x.abs() >= *half_width {
                    return (T::zero(), T::zero(), T::zero());
                }
                let k = T::PI() / *half_width;
                let (s, c) = (k * x).sin_cos();
                let m = *amplitude;
                (
                    m * s * s * s,
                    T::lit(3.0) * m * k * s * s * c,
                    m * k * k * (T::lit(6.0) * s * c * c - T::lit(3.0) * s * s * s),
                )
            }
            Deformation::StepShifts { steps, ramp } => {
                let half = T::lit(0.5);
                let mut acc = (T::zero(), T::zero(), T::zero());
                for st in steps {
                    let (a0, a1, a2) = smoothstep((x - st.lo) / *ramp + half);
                    let (b0, b1, b2) = smoothstep((x - st.hi) / *ramp + half);
                    acc.0 += st.shift * (a0 - b0);
                    acc.1 += st.shift * (a1 - b1) / *ramp;
                    acc.2 += st.shift * (a2 - b2) / (*ramp * *ramp);
                }
                acc
            }
            Deformation::Composite { parts } => parts.iter().fold((T::zero(), T::zero(), T::zero()), |acc, p| {
                let v = p.eval(x);
                (acc.0 + v.0, acc.1 + v.1, acc.2 + v.2)
            }),
        }
    }

    /// Closed interval outside which `τ′` vanishes, or `None` when `τ′ ≡ 0`.
    pub fn support(&self) -> Option<(T, T)> {
        match self {
            Deformation::Zero => None,
            Deformation::SmoothContraction { half_width, .. } | Deformation::ZeroMeanWiggle { half_width, .. } => {
                Some((-*half_width, *half_width))
            }
            Deformation::StepShifts { steps, ramp } => {
                let h = *ramp * T::lit(0.5);
                steps.iter().fold(None, |acc, st| hull(acc, Some((st.lo - h, st.hi + h))))
            }
            Deformation::Composite { parts } => parts.iter().fold(None, |acc, p| hull(acc, p.support())),
        }
    }

    /// `∫τ′ = τ(+∞) − τ(−∞)` from the closed form.
    pub fn prime_integral(&self) -> T {
        match self {
            Deformation::SmoothContraction { depth, .. } => -*depth,
            Deformation::Composite { parts } => parts.iter().map(|p| p.prime_integral()).sum(),
            _ => T::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Deformation::Zero => true,
            Deformation::SmoothContraction { depth, .. } => *depth == T::zero(),
            Deformation::ZeroMeanWiggle { amplitude, .. } => *amplitude == T::zero(),
            Deformation::StepShifts { steps, .. } => steps.iter().all(|s| s.shift == T::zero()),
            Deformation::Composite { parts } => parts.iter().all(|p| p.is_zero()),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            Deformation::Zero => Ok(()),
            Deformation::SmoothContraction { depth, half_width } => {
                if !(depth.is_finite() && *depth > T::zero()) {
                    return bad(format!("contraction depth must be positive, got {depth}"));
                }
                if !(half_width.is_finite() && *half_width > T::zero()) {
                    return bad(format!("contraction half-width must be positive, got {half_width}"));
                }
                Ok(())
            }
            Deformation::ZeroMeanWiggle { amplitude, half_width } => {
                if !amplitude.is_finite() {
                    return bad("wiggle amplitude must be finite".into());
                }
                if !(half_width.is_finite() && *half_width > T::zero()) {
                    return bad(format!("wiggle half-width must be positive, got {half_width}"));
                }
                Ok(())
            }
            Deformation::StepShifts { steps, ramp } => {
                if !(ramp.is_finite() && *ramp > T::zero()) {
                    return bad(format!("step ramp must be positive, got {ramp}"));
                }
                for st in steps {
                    if !(st.lo.is_finite() && st.hi.is_finite() && st.shift.is_finite() && st.lo < st.hi) {
                        return bad(format!("invalid step [{}, {}] with shift {}", st.lo, st.hi, st.shift));
                    }
                }
                Ok(())
            }
            Deformation::Composite { parts } => parts.iter().try_for_each(|p| p.validate()),
        }
    }
}

fn hull<T: Real>(a: Option<(T, T)>, b: Option<(T, T)>) -> Option<(T, T)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some((a0, a1)), Some((b0, b1))) => Some((a0.min(b0), a1.max(b1))),
    }
}

impl<T: Real> CurveSpec<T> {
    pub fn new(period_a: T, gamma: Profile<T>, tau: Deformation<T>) -> Self {
        Self { period_a, gamma, tau, epsilon_scale: None }
    }

    pub fn flat(period_a: T) -> Self {
        Self::new(period_a, Profile::Flat, Deformation::Zero)
    }

    pub fn with_tau(&self, tau: Deformation<T>) -> Self {
        Self { tau, ..self.clone() }
    }

    pub fn with_epsilon(&self, eps: T) -> Self {
        Self { epsilon_scale: Some(eps), ..self.clone() }
    }

    /// The undeformed periodic curve Γ₀ (same profile and scale, `τ = 0`).
    pub fn reference(&self) -> Self {
        self.with_tau(Deformation::Zero)
    }

    pub fn eps(&self) -> T {
        self.epsilon_scale.unwrap_or_else(T::one)
    }

    pub fn has_deformation(&self) -> bool {
        !self.tau.is_zero() && self.eps() != T::zero()
    }

    /// Straight line: flat profile or vanishing scale.
    pub fn is_flat(&self) -> bool {
        self.gamma.is_flat() || self.eps() == T::zero()
    }

    /// Checks parameters and the structural invariants of the families.
    pub fn validate(&self) -> Result<()> {
        let a = self.period_a;
        if !(a.is_finite() && a > T::zero()) {
            return Err(Error::InvalidSpec(format!("period_a must be positive, got {a}")));
        }
        if let Some(e) = self.epsilon_scale {
            if !(e.is_finite() && e >= T::zero()) {
                return Err(Error::InvalidSpec(format!("epsilon_scale must be nonnegative, got {e}")));
            }
        }
        match self.gamma {
            Profile::Flat => {}
            Profile::Sine { amplitude } => {
                if !amplitude.is_finite() {
                    return Err(Error::InvalidSpec("sine amplitude must be finite".into()));
                }
            }
            Profile::BumpTrain { amplitude, half_width, .. } => {
                if !amplitude.is_finite() {
                    return Err(Error::InvalidSpec("bump amplitude must be finite".into()));
                }
                if !(half_width > T::zero() && half_width < a * T::lit(0.5)) {
                    return Err(Error::InvalidSpec(format!(
                        "bump half-width must lie in (0, a/2), got {half_width}"
                    )));
                }
            }
        }
        self.tau.validate()?;
        if let Some((lo, hi)) = self.tau.support() {
            let eps = self.eps();
            let step = (hi - lo) / T::from_usize_lossy(ORDER_SAMPLES);
            for i in 0..=ORDER_SAMPLES {
                let x = lo + step * T::from_usize_lossy(i);
                if T::one() + eps * self.tau.eval(x).1 <= T::zero() {
                    return Err(Error::InvalidSpec(format!(
                        "deformation reverses the order of points near x1 = {x}"
                    )));
                }
            }
            if self.contains_wiggle() {
                let tau = &self.tau;
                let total = integrate_adaptive(|x| tau.eval(x).1, lo, hi, T::lit(1e-12))?;
                let expected = self.tau.prime_integral();
                if (total - expected).abs() > T::lit(1e-8).max(T::epsilon().sqrt()) {
                    return Err(Error::InvalidSpec(format!(
                        "integral of tau' is {total}, expected {expected}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn contains_wiggle(&self) -> bool {
        fn walk<T>(d: &Deformation<T>) -> bool {
            match d {
                Deformation::ZeroMeanWiggle { .. } => true,
                Deformation::Composite { parts } => parts.iter().any(walk),
                _ => false,
            }
        }
        walk(&self.tau)
    }

    #[inline]
    pub fn gamma_at(&self, x: T) -> (T, T, T) {
        self.gamma.eval(x, self.period_a)
    }

    #[inline]
    pub fn tau_at(&self, x: T) -> (T, T, T) {
        self.tau.eval(x)
    }

    /// `(x₁ + ετ(x₁), εγ(x₁))`.
    #[inline]
    pub fn point(&self, x: T) -> [T; 2] {
        let e = self.eps();
        [x + e * self.tau_at(x).0, e * self.gamma_at(x).0]
    }

    pub fn euclid_dist(&self, x: T, y: T) -> T {
        let p = self.point(x);
        let q = self.point(y);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }

    /// Arc-length density `√((1 + ετ′)² + (εγ′)²)`.
    #[inline]
    pub fn arc_element(&self, x: T) -> T {
        let e = self.eps();
        (T::one() + e * self.tau_at(x).1).hypot(e * self.gamma_at(x).1)
    }

    /// Arc-length density of the undeformed curve, `√(1 + (εγ′)²)`.
    #[inline]
    pub fn reference_arc_element(&self, x: T) -> T {
        T::one().hypot(self.eps() * self.gamma_at(x).1)
    }

    /// Square root of [`Self::arc_element`].
    #[inline]
    pub fn metric_weight(&self, x: T) -> T {
        self.arc_element(x).sqrt()
    }

    /// `−k²/4 = −γ″²/(4(1 + γ′²)³)` of the scaled profile.
    pub fn curvature_potential(&self, x: T) -> Result<T> {
        if !self.gamma.is_c2() {
            return Err(Error::NotSmooth("curvature needs a C² profile (bump order ≥ 2)".into()));
        }
        let e = self.eps();
        let (_, g1, g2) = self.gamma_at(x);
        let (g1, g2) = (e * g1, e * g2);
        let q = T::one() + g1 * g1;
        Ok(-g2 * g2 / (T::lit(4.0) * q * q * q))
    }

    /// `∫τ′` of the unscaled deformation.
    pub fn tau_prime_integral(&self) -> T {
        self.tau.prime_integral()
    }

    /// Distance from the origin of the curve point at `x₁` and its derivative.
    fn radial(&self, x: T) -> (T, T) {
        let e = self.eps();
        let (t, t1, _) = self.tau_at(x);
        let (g, g1, _) = self.gamma_at(x);
        let u = x + e * t;
        let v = e * g;
        let z = u.hypot(v);
        (z, (u * (T::one() + e * t1) + v * e * g1) / z)
    }

    /// Local convexity of `R_κ(z) = K₀(κz)` along the curve at `x₁`.
    pub fn convexity_margin(&self, x: T, kappa: T) -> Result<ConvexityMargin<T>> {
        let (z, z1) = self.radial(x);
        if !(z > T::epsilon()) {
            return Err(Error::SingularPoint(format!("z vanishes at x1 = {x}")));
        }
        if z1.abs() <= T::epsilon() {
            return Err(Error::SingularPoint(format!("z' vanishes at x1 = {x}")));
        }
        let h = T::lit(1e-4) * x.abs().max(T::one());
        let z2 = (self.radial(x + h).1 - self.radial(x - h).1) / (h + h);
        let geometric = T::one() / z - z2 / (z1 * z1);
        let margin = geometric + kappa * k_ratio(kappa * z)?;
        let (surrogate_verbatim, surrogate_consistent) = match self.epsilon_scale {
            Some(e) => {
                let (t, t1, t2) = self.tau_at(x);
                let two = T::lit(2.0);
                (Some(x * x + two * e * (t + t1)), Some(T::one() + two * e * t1 - e * x * t2))
            }
            None => (None, None),
        };
        Ok(ConvexityMargin { margin, geometric, surrogate_verbatim, surrogate_consistent })
    }
}
