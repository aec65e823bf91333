//! Macdonald functions K₀ and K₁.
//!
//! Below `x = 2` both functions come from their ascending series with the
//! logarithmic term. Above it, Steed's continued fraction (Temme's CF2 for
//! order zero) yields the exponentially scaled values `eˣK₀` and `eˣK₁`
//! directly, which keeps [`k_ratio`] free of underflow.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Euler–Mascheroni constant to 20 significant digits.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const SWITCH: f64 = 2.0;
const MAX_TERMS: usize = 10_000;

fn check<T: Real>(x: T) -> Result<()> {
    if x.is_finite() && x > T::zero() {
        Ok(())
    } else {
        Err(Error::Domain(format!("Macdonald function needs x > 0, got {x}")))
    }
}

/// K₀(x) for finite `x > 0`. Returns 0 once the value underflows.
pub fn bessel_k0<T: Real>(x: T) -> Result<T> {
    check(x)?;
    if x <= T::lit(SWITCH) {
        Ok(series(x).0)
    } else {
        Ok(steed(x).0 * (-x).exp())
    }
}

/// K₁(x) for finite `x > 0`.
pub fn bessel_k1<T: Real>(x: T) -> Result<T> {
    check(x)?;
    if x <= T::lit(SWITCH) {
        Ok(series(x).1)
    } else {
        Ok(steed(x).1 * (-x).exp())
    }
}

/// Exponentially scaled `eˣ·K₀(x)`.
pub fn bessel_k0e<T: Real>(x: T) -> Result<T> {
    check(x)?;
    if x <= T::lit(SWITCH) {
        Ok(series(x).0 * x.exp())
    } else {
        Ok(steed(x).0)
    }
}

/// Exponentially scaled `eˣ·K₁(x)`.
pub fn bessel_k1e<T: Real>(x: T) -> Result<T> {
    check(x)?;
    if x <= T::lit(SWITCH) {
        Ok(series(x).1 * x.exp())
    } else {
        Ok(steed(x).1)
    }
}

/// K₀(x)/K₁(x), which lies in (0, 1) and tends to 1 as x grows.
pub fn k_ratio<T: Real>(x: T) -> Result<T> {
    check(x)?;
    let (k0, k1) = if x <= T::lit(SWITCH) { series(x) } else { steed(x) };
    Ok(k0 / k1)
}

/// Unchecked K₀ for hot loops where the caller guarantees `x > 0`.
#[inline]
pub(crate) fn k0_unchecked<T: Real>(x: T) -> T {
    if x <= T::lit(SWITCH) {
        series_k0(x)
    } else {
        steed(x).0 * (-x).exp()
    }
}

fn series_k0<T: Real>(x: T) -> T {
    let eps = T::epsilon();
    let half = x / T::lit(2.0);
    let y = half * half;
    let mut term = T::one();
    let mut i0 = T::one();
    let mut harmonic = T::zero();
    let mut s = T::zero();
    for k in 1..MAX_TERMS {
        let kf = T::from_usize_lossy(k);
        term *= y / (kf * kf);
        harmonic += T::one() / kf;
        i0 += term;
        s += term * harmonic;
        if term * harmonic <= eps * s {
            break;
        }
    }
    -(half.ln() + T::lit(EULER_GAMMA)) * i0 + s
}

/// Ascending series for (K₀, K₁).
fn series<T: Real>(x: T) -> (T, T) {
    let eps = T::epsilon();
    let gamma = T::lit(EULER_GAMMA);
    let half = x / T::lit(2.0);
    let y = half * half;
    let log_term = half.ln();

    // K₁ = 1/x + ln(x/2)·I₁ − (x/4)·Σ t_k (H_k + H_{k+1} − 2γ),
    // with t_k = y^k / (k!(k+1)!) and I₁ = (x/2)·Σ t_k.
    let mut t = T::one();
    let mut h_k = T::zero();
    let mut h_k1 = T::one();
    let mut sum_t = T::one();
    let mut sum_psi = h_k + h_k1 - gamma - gamma;
    for k in 1..MAX_TERMS {
        let kf = T::from_usize_lossy(k);
        t *= y / (kf * (kf + T::one()));
        h_k = h_k1;
        h_k1 += T::one() / (kf + T::one());
        sum_t += t;
        let inc = t * (h_k + h_k1 - gamma - gamma);
        sum_psi += inc;
        if t <= eps * sum_t && inc.abs() <= eps * sum_psi.abs() {
            break;
        }
    }
    let k1 = T::one() / x + log_term * half * sum_t - x / T::lit(4.0) * sum_psi;
    (series_k0(x), k1)
}

/// Steed's continued fraction: returns (eˣK₀(x), eˣK₁(x)) for moderate to large x.
fn steed<T: Real>(x: T) -> (T, T) {
    let one = T::one();
    let two = T::lit(2.0);
    let a1 = T::lit(0.25);
    let eps = T::epsilon();

    let mut b = two * (one + x);
    let mut d = one / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = T::zero();
    let mut q2 = one;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    for i in 2..MAX_TERMS {
        let fi = T::from_usize_lossy(i);
        a -= two * (fi - one);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += two;
        d = one / (b + a * d);
        delh = (b * d - one) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < eps {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (T::PI() / (two * x)).sqrt() / s;
    let k1 = k0 * (x + T::lit(0.5) - h) / x;
    (k0, k1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((bessel_k0(1.0_f64).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-15);
        assert!((bessel_k1(1.0_f64).unwrap() - 0.601_907_230_197_234_6).abs() < 1e-15);
        assert!((k_ratio(1.0_f64).unwrap() - 0.699_483_935_593_772_2).abs() < 1e-14);
    }

    #[test]
    fn both_branches_agree_at_switch() {
        let below = series(2.0_f64);
        let above = steed(2.0_f64);
        let e = (-2.0_f64).exp();
        assert!((below.0 - above.0 * e).abs() < 1e-14);
        assert!((below.1 - above.1 * e).abs() < 1e-14);
    }

    #[test]
    fn small_argument_limits() {
        for &x in &[1e-8_f64, 1e-6, 1e-4] {
            let k0 = bessel_k0(x).unwrap();
            assert!((k0 + (x / 2.0).ln() + EULER_GAMMA).abs() < 1e-6);
            assert!((x * bessel_k1(x).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_k0(0.0_f64).is_err());
        assert!(bessel_k1(-1.0_f64).is_err());
        assert!(k_ratio(f64::NAN).is_err());
        assert!(bessel_k0(f64::INFINITY).is_err());
    }

    #[test]
    fn large_arguments() {
        assert_eq!(bessel_k0(800.0_f64).unwrap(), 0.0);
        let r = k_ratio(500.0_f64).unwrap();
        assert!(r > 0.995 && r < 1.0);
        let r = k_ratio(700.0_f64).unwrap();
        assert!(r.is_finite() && r < 1.0);
    }

    #[test]
    fn single_precision() {
        let k0 = bessel_k0(1.0_f32).unwrap();
        assert!((k0 - 0.421_024_43).abs() < 1e-6);
        let k1 = bessel_k1(5.0_f32).unwrap();
        assert!((k1 / 4.044_613_4e-3 - 1.0).abs() < 1e-5);
    }
}
