//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run a subset with `cargo test --test acceptance -- ac4 ac7`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use leaky_spectra::bsop::{build_1d_bs, build_fiber_bs, build_line_bs, FiberConfig, Measure};
use leaky_spectra::geometry::{Deformation, Profile, StepShift};
use leaky_spectra::oned::{band_bottom_1d, sample_shift_sets, shift_sweep, strong_coupling_compare, ShiftSampler, WellProfile};
use leaky_spectra::specfun::{bessel_k0, bessel_k0e, bessel_k1, bessel_k1e};
use leaky_spectra::spectral::{
    convexity_scan, find_bound_state, find_threshold, find_threshold_refined, BoundStateConfig,
    ThresholdConfig, TrialGap, Verdict,
};
use leaky_spectra::{CurveSpec, WellArray1D};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sine() -> CurveSpec {
    CurveSpec::new(TAU, Profile::Sine { amplitude: 0.5 }, Deformation::Zero)
}

fn contraction() -> Deformation<f64> {
    Deformation::SmoothContraction { depth: 0.4, half_width: 2.0 * TAU }
}

fn wiggle() -> Deformation<f64> {
    Deformation::ZeroMeanWiggle { amplitude: 1.0, half_width: 2.0 * TAU }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn ac1() -> Outcome {
    // tolerances: 1% standard, 0.1% after doubling cells and images
    let mut worst = (0.0_f64, 0.0_f64);
    for alpha in [0.5, 1.0, 2.0] {
        let rep = find_threshold_refined(&CurveSpec::flat(TAU), alpha, &ThresholdConfig::default()).map_err(|e| e.to_string())?;
        let exact = -alpha * alpha / 4.0;
        worst.0 = worst.0.max(((rep.base.eps0 - exact) / exact).abs());
        worst.1 = worst.1.max(((rep.refined.eps0 - exact) / exact).abs());
    }
    check(worst.0 < 1e-2 && worst.1 < 1e-3, format!("max rel err {:.2e} (tol 1e-2), refined {:.2e} (tol 1e-3)", worst.0, worst.1))
}

fn ac2() -> Outcome {
    // W = 60/κ, κh = 0.2, tolerance 2%
    let mut worst = 0.0_f64;
    for alpha in [2.0_f64, 4.0] {
        for f in [0.8, 1.0, 1.25] {
            let kappa = alpha / 2.0 * f;
            let w = 60.0 / kappa;
            let n = (2.0 * w * kappa / 0.2).round() as usize;
            let mu = build_line_bs(&CurveSpec::flat(TAU), alpha, kappa, w, n, Measure::Reference)
                .and_then(|m| m.mu_max())
                .map_err(|e| e.to_string())?;
            worst = worst.max((mu / (alpha / (2.0 * kappa)) - 1.0).abs());
        }
    }
    check(worst < 0.02, format!("max rel dev from alpha/2kappa {worst:.3e} (tol 2e-2)"))
}

fn ac3() -> Outcome {
    let grid = |lo: f64, hi: f64| -> Vec<f64> { (0..10).map(|k| lo + (hi - lo) * k as f64 / 9.0).collect() };
    let mut notes = Vec::new();
    let mut ok = true;
    let mut record = |name: &str, mus: Vec<f64>| {
        let dec = strictly_decreasing(&mus);
        ok &= dec;
        notes.push(format!("{name}:{}", if dec { "dec" } else { "NOT-dec" }));
    };
    let err = |e: leaky_spectra::error::Error| e.to_string();

    let flat = CurveSpec::flat(TAU);
    let ks = grid(0.5, 2.0);
    record("line-flat", ks.iter().map(|&k| build_line_bs(&flat, 2.0, k, 40.0, 400, Measure::Reference).and_then(|m| m.mu_max())).collect::<Result<_, _>>().map_err(err)?);
    let c = sine().with_tau(contraction());
    let ks = grid(0.3, 1.1);
    for (name, measure) in [("line-contraction-ref", Measure::Reference), ("line-contraction-arc", Measure::ArcLength)] {
        record(name, ks.iter().map(|&k| build_line_bs(&c, 2.0, k, 10.5 * TAU, 336, measure).and_then(|m| m.mu_max())).collect::<Result<_, _>>().map_err(err)?);
    }
    let ks = grid(0.3, 3.0);
    for theta in [0.0, 0.3] {
        let fc = FiberConfig::new(theta);
        let mus = ks.iter().map(|&k| build_fiber_bs(&sine(), 2.0, k, &fc, 64).and_then(|m| m.mu_max())).collect::<Result<_, _>>().map_err(err)?;
        record(&format!("fiber-theta{theta}"), mus);
    }
    let arr = WellArray1D::new(4.0, 3.6, WellProfile::Square { depth: 4.0, width: 0.5 }).with_shifts([(0, 1.0)]);
    let ks = grid(0.2, 4.0);
    record("oned", ks.iter().map(|&k| build_1d_bs(&arr, k, 48.0, 24).and_then(|m| m.mu_max())).collect::<Result<_, _>>().map_err(err)?);

    // decay at 50κ₀: fiber with cells refined to κh ≤ 0.5, and the 1D kernel
    let th = find_threshold(&sine(), 2.0, &ThresholdConfig::default()).map_err(err)?;
    let coarse = ThresholdConfig { kh_target: 0.5, ..ThresholdConfig::default() };
    let n_hi = coarse.cells_for(TAU, 50.0 * th.kappa0);
    let fc = FiberConfig::new(0.0);
    let mu0 = build_fiber_bs(&sine(), 2.0, th.kappa0, &fc, n_hi).and_then(|m| m.mu_max()).map_err(err)?;
    let mu50 = build_fiber_bs(&sine(), 2.0, 50.0 * th.kappa0, &fc, n_hi).and_then(|m| m.mu_max()).map_err(err)?;
    let fiber_ratio = mu50 / mu0;
    let k1 = (-band_bottom_1d(&arr.unshifted()).map_err(err)?).sqrt();
    let oned_ratio = build_1d_bs(&arr, 50.0 * k1, 48.0, 24).and_then(|m| m.mu_max()).map_err(err)?
        / build_1d_bs(&arr, k1, 48.0, 24).and_then(|m| m.mu_max()).map_err(err)?;
    ok &= fiber_ratio < 0.05 && oned_ratio < 0.05;
    check(ok, format!("{}; mu(50k0)/mu(k0): fiber {fiber_ratio:.3e}, oned {oned_ratio:.3e} (tol 5e-2)", notes.join(" ")))
}

fn ac4() -> Outcome {
    let err = |e: leaky_spectra::error::Error| e.to_string();
    let spec = sine().with_tau(contraction());
    let th = find_threshold(&sine(), 2.0, &ThresholdConfig::default()).map_err(err)?;
    let cfg = BoundStateConfig::default();
    let s = find_bound_state(&spec, 2.0, th.kappa0, &cfg).map_err(err)?;
    let Some(r) = s.result.as_ref() else {
        return Err(format!("verdict {:?}, margin {:.3e}", s.verdict, s.margin));
    };
    let refined_min = s.refinement.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min);
    let residual = (r.mu_at_root - 1.0).abs();
    let (w, n) = cfg.grid(&spec);
    let tg = TrialGap::new(&spec, &sine(), 2.0, th.kappa0, w, n, th.n_cell).map_err(err)?;
    let scan = tg.mollifier_scan(&[8, 16, 32, 64]);
    let gaps = &scan.gap;
    let p = scan.exponent.unwrap_or(f64::NAN);
    let arc = find_bound_state(&spec, 2.0, th.kappa0, &BoundStateConfig { measure: Measure::ArcLength, ..cfg })
        .map(|s| format!("{:?} margin {:.2e}", s.verdict, s.margin))
        .unwrap_or_else(|e| e.to_string());
    check(
        s.verdict == Verdict::Found
            && refined_min > cfg.margin_tol
            && r.kappa_star > r.kappa0
            && r.target_level == 1.0
            && residual <= 1e-8
            && gaps.iter().all(|g| *g > 0.0)
            && p <= -1.5,
        format!(
            "margin {:.3e}, refined min {refined_min:.3e} (tol 1e-6), kappa* - kappa0 {:.3e}, |mu-1| {residual:.1e} (tol 1e-8), \
             gaps min {:.3e}, decay exponent {p:.2} (tol -1.5); arc-length measure: {arc}",
            s.margin,
            r.kappa_star - r.kappa0,
            gaps.iter().cloned().fold(f64::INFINITY, f64::min)
        ),
    )
}

fn gentle(eps: f64, tau: Deformation<f64>) -> (CurveSpec, CurveSpec) {
    let base = sine().with_epsilon(eps);
    (base.with_tau(tau), base)
}

fn ac5() -> Outcome {
    let err = |e: leaky_spectra::error::Error| e.to_string();
    let (spec, base) = gentle(0.05, wiggle());
    let th = find_threshold(&base, 2.0, &ThresholdConfig::default()).map_err(err)?;
    let s = find_bound_state(&spec, 2.0, th.kappa0, &BoundStateConfig::default()).map_err(err)?;
    let scan = convexity_scan(&spec, th.kappa0, 400).map_err(err)?;
    let (spec8, base8) = gentle(0.8, wiggle());
    let th8 = find_threshold(&base8, 2.0, &ThresholdConfig::default()).map_err(err)?;
    let s8 = find_bound_state(&spec8, 2.0, th8.kappa0, &BoundStateConfig::default()).map_err(err)?;
    let strong_ok = matches!(s8.verdict, Verdict::Found | Verdict::Inconclusive);
    check(
        s.verdict == Verdict::Found && scan.positive() && scan.skipped == 0 && strong_ok,
        format!(
            "eps=0.05: {:?} margin {:.3e}, convexity min {:.3e} over {} points; eps=0.8: {:?} margin {:.3e}",
            s.verdict, s.margin, scan.min_margin, scan.points, s8.verdict, s8.margin
        ),
    )
}

fn ac6() -> Outcome {
    let err = |e: leaky_spectra::error::Error| e.to_string();
    let (neg, base) = gentle(0.05, Deformation::Composite { parts: vec![wiggle(), contraction()] });
    let (zero, _) = gentle(0.05, wiggle());
    let th = find_threshold(&base, 2.0, &ThresholdConfig::default()).map_err(err)?;
    let cfg = BoundStateConfig::default();
    assert_eq!(cfg.grid(&neg), cfg.grid(&zero));
    let sn = find_bound_state(&neg, 2.0, th.kappa0, &cfg).map_err(err)?;
    let sz = find_bound_state(&zero, 2.0, th.kappa0, &cfg).map_err(err)?;
    match (&sn.result, &sz.result) {
        // compared at the common calibrated level; the unit-level crossings are informational
        (Some(n), Some(z)) => check(
            n.kappa_star_calibrated >= z.kappa_star_calibrated,
            format!(
                "calibrated kappa* negative-mean {:.10} >= zero-mean {:.10}; unit-level/target kappa* {:.10} vs {:.10}",
                n.kappa_star_calibrated, z.kappa_star_calibrated, n.kappa_star, z.kappa_star
            ),
        ),
        _ => Err(format!("verdicts {:?} / {:?}", sn.verdict, sz.verdict)),
    }
}

fn ac7() -> Outcome {
    let err = |e: leaky_spectra::error::Error| e.to_string();
    let base = WellArray1D::new(4.0, 3.6, WellProfile::Square { depth: 4.0, width: 0.5 });
    let sampler = ShiftSampler { max_shifted: 3, span: 3, min_magnitude: 0.6, max_magnitude: 1.2 };
    let arrays = sample_shift_sets(&base, &sampler, 12, 20_240_601).map_err(err)?;
    let cases = shift_sweep(&arrays, 41, 800, 40.0, 36, 1e-6).map_err(err)?;
    let below = cases.iter().filter(|c| c.below_band).count();
    let worst = cases.iter().map(|c| c.relative_gap.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let min_depth = cases.iter().map(|c| c.band_bottom - c.ground_fd).fold(f64::INFINITY, f64::min);
    check(
        below == 12 && worst <= 1e-4,
        format!("{below}/12 below band (min depth {min_depth:.3e}, tol 1e-6); max BS/FD rel gap {worst:.2e} (tol 1e-4)"),
    )
}

fn ac8() -> Outcome {
    let err = |e: leaky_spectra::error::Error| e.to_string();
    let bumps = CurveSpec::new(TAU, Profile::BumpTrain { amplitude: 0.5, half_width: 1.5, order: 6 }, Deformation::Zero);
    let shifted = bumps.with_tau(Deformation::StepShifts {
        steps: vec![StepShift { lo: TAU / 2.0, hi: 1.5 * TAU, shift: 0.8 }],
        ramp: 2.5,
    });
    let s_half = 20.0 * leaky_spectra::oned::CurvatureWells::new(&bumps).map_err(err)?.cell_length;
    let rows = strong_coupling_compare(&bumps, Some(&shifted), &[4.0, 8.0, 16.0], &ThresholdConfig::default(), s_half, 8000)
        .map_err(err)?;
    let d: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let q: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let below = rows.iter().all(|r| r.shifted_below_band == Some(true));
    check(
        d[2] < d[0] && q[2] <= q[1] && below,
        format!(
            "delta {:.4} {:.4} {:.4}; delta*alpha/ln(alpha) {:.4} {:.4} {:.4}; shifted eigenvalue below band: {below}",
            d[0], d[1], d[2], q[0], q[1], q[2]
        ),
    )
}

/// `∫₀^∞ e^{−x(cosh t − 1)} cosh(νt) dt`, i.e. `eˣ Kᵥ(x)`, by the trapezoidal rule,
/// which converges geometrically for this analytic, rapidly decaying integrand.
fn scaled_k_oracle(nu: f64, x: f64) -> f64 {
    let h = 1.0 / 64.0;
    let mut sum = 0.5;
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let term = (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    sum * h
}

fn ac9() -> Outcome {
    let mut worst = 0.0_f64;
    let mut worst_d = 0.0_f64;
    for k in 0..40 {
        let x = 0.01 * 10_000_f64.powf(k as f64 / 39.0);
        for (nu, val) in [(0.0, bessel_k0e(x)), (1.0, bessel_k1e(x))] {
            let v = val.map_err(|e| e.to_string())?;
            worst = worst.max((v / scaled_k_oracle(nu, x) - 1.0).abs());
        }
        let h = 1e-6 * x;
        let d = (bessel_k0(x + h).unwrap() - bessel_k0(x - h).unwrap()) / (2.0 * h);
        let k1 = bessel_k1(x).unwrap();
        worst_d = worst_d.max(((d + k1) / k1).abs());
    }
    check(worst < 1e-12 && worst_d < 1e-6, format!("max rel err {worst:.2e} (tol 1e-12); dK0/dx + K1 rel {worst_d:.2e} (tol 1e-6)"))
}

fn run_cli(sub: &str, config: &Path, out: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_leaky-spectra"))
        .args([sub, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{sub} exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
    }
    let mut files = BTreeMap::new();
    for e in std::fs::read_dir(out).map_err(|e| e.to_string())? {
        let e = e.map_err(|e| e.to_string())?;
        files.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sine_curve = r#"{"period_a": 6.283185307179586, "gamma": {"kind": "sine", "params": {"amplitude": 0.5}}}"#;
    let configs = [
        ("threshold", format!(r#"{{"alpha": 2.0, "curve": {sine_curve}}}"#)),
        ("bands", format!(r#"{{"alpha": 2.0, "curve": {sine_curve}, "bands": {{"n_theta": 9, "bands": 2}}}}"#)),
        ("bound-state", r#"{"alpha": 2.0, "scenario": "contraction"}"#.to_string()),
        (
            "oned",
            r#"{"seed": 7, "oned": {"shifts": {"0": 1.0}, "sweep": {"count": 2, "sampler": {"max_shifted": 2, "span": 3, "min_magnitude": 0.6, "max_magnitude": 1.2}}}}"#
                .to_string(),
        ),
    ];
    let mut compared = 0;
    for (sub, text) in &configs {
        let cfg = dir.path().join(format!("{sub}.json"));
        std::fs::write(&cfg, text).map_err(|e| e.to_string())?;
        let a = run_cli(sub, &cfg, &dir.path().join(format!("{sub}-1")))?;
        let b = run_cli(sub, &cfg, &dir.path().join(format!("{sub}-2")))?;
        if a != b || a.is_empty() {
            return Err(format!("{sub}: outputs differ between runs"));
        }
        compared += a.len();
    }
    check(true, format!("{compared} output files byte-identical across two runs"))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("ac1", "straight-line threshold", ac1),
        ("ac2", "Fourier-symbol oracle", ac2),
        ("ac3", "BS monotonicity", ac3),
        ("ac4", "contraction bound state", ac4),
        ("ac5", "zero-mean gentle deformation", ac5),
        ("ac6", "negative-mean domination", ac6),
        ("ac7", "randomized 1D shift sweep", ac7),
        ("ac8", "strong-coupling comparison", ac8),
        ("ac9", "special functions", ac9),
        ("ac10", "CLI determinism", ac10),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (key, name, f)) in criteria.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|x| x == key) {
            continue;
        }
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("AC{} PASS {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("AC{} FAIL {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
