use std::f64::consts::TAU;

use leaky_spectra::bsop::{auto_images, build_1d_bs, build_fiber_bs, build_line_bs, parse_dump, FiberConfig, Measure, Payload};
use leaky_spectra::geometry::{Deformation, Profile};
use leaky_spectra::oned::WellProfile;
use leaky_spectra::{CurveSpec, Error, WellArray1D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sine() -> CurveSpec {
    CurveSpec::new(TAU, Profile::Sine { amplitude: 0.5 }, Deformation::Zero)
}

fn contracted() -> CurveSpec {
    sine().with_tau(Deformation::SmoothContraction { depth: 0.4, half_width: 2.0 * TAU })
}

#[test]
fn flat_line_top_eigenvalue_is_alpha_over_two_kappa() {
    let m = build_line_bs(&CurveSpec::flat(TAU), 1.0, 0.5, 60.0, 1200, Measure::Reference).unwrap();
    let mu = m.mu_max().unwrap();
    assert!((mu - 1.0).abs() < 0.02, "{mu}");
}

#[test]
fn flat_line_rows_are_positive_and_decay() {
    let m = build_line_bs(&CurveSpec::flat(TAU), 1.0, 0.7, 30.0, 600, Measure::Reference).unwrap();
    let c = m.order() / 2;
    for j in c + 1..m.order() {
        assert!(m.entry(c, j) > 0.0);
        assert!(m.entry(c, j) < m.entry(c, j - 1));
    }
}

#[test]
fn contraction_raises_every_entry() {
    let (w, n) = (10.5 * TAU, 336);
    let reference = build_line_bs(&contracted().reference(), 2.0, 0.9, w, n, Measure::Reference).unwrap();
    let deformed = build_line_bs(&contracted(), 2.0, 0.9, w, n, Measure::Reference).unwrap();
    let mut strict = 0;
    for i in 0..n {
        for j in 0..=i {
            let (r, d) = (reference.entry(i, j), deformed.entry(i, j));
            assert!(d >= r - 1e-13 * r.abs(), "({i}, {j}): {d} < {r}");
            if d > r * (1.0 + 1e-12) {
                strict += 1;
            }
        }
    }
    assert!(strict > 0);
    assert!(deformed.mu_max().unwrap() > reference.mu_max().unwrap());
}

#[test]
fn line_matrix_is_positive_on_random_vectors() {
    let m = build_line_bs(&sine(), 1.0, 0.6, 40.0, 400, Measure::Reference).unwrap();
    let Payload::Real(s) = &m.payload else { panic!("line matrices are real") };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let v: Vec<f64> = (0..m.order()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q: f64 = s.mul_vec(&v).iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!(q > 0.0);
    }
}

#[test]
fn top_eigenvector_has_one_sign() {
    let m = build_line_bs(&contracted(), 2.0, 0.9, 10.5 * TAU, 336, Measure::Reference).unwrap();
    let v = m.top_pair().unwrap().vector;
    let s = v[v.len() / 2].signum();
    assert!(v.iter().all(|x| x * s > 0.0));
}

#[test]
fn line_top_eigenvalue_converges_under_refinement() {
    let mu = |n| build_line_bs(&sine(), 1.0, 0.6, 40.0, n, Measure::Reference).unwrap().mu_max().unwrap();
    let (a, b, c) = (mu(400), mu(800), mu(1600));
    assert!((c - b).abs() < (b - a).abs());
}

#[test]
fn measures_agree_without_deformation() {
    let r = build_line_bs(&sine(), 1.0, 0.6, 40.0, 400, Measure::Reference).unwrap().mu_max().unwrap();
    let l = build_line_bs(&sine(), 1.0, 0.6, 40.0, 400, Measure::ArcLength).unwrap().mu_max().unwrap();
    assert!((r - l).abs() < 1e-14);
}

#[test]
fn fiber_spectrum_is_even_in_theta() {
    for theta in [0.3, 1.1, 2.9] {
        let p = build_fiber_bs(&sine(), 1.0, 0.5, &FiberConfig::new(theta), 64).unwrap().eigenvalues().unwrap();
        let m = build_fiber_bs(&sine(), 1.0, 0.5, &FiberConfig::new(-theta), 64).unwrap().eigenvalues().unwrap();
        for (x, y) in p.iter().zip(&m) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn fiber_at_zero_quasimomentum_is_real() {
    let m = build_fiber_bs(&sine(), 1.0, 0.5, &FiberConfig::new(0.0), 64).unwrap();
    assert!(matches!(m.payload, Payload::Real(_)));
    let h = build_fiber_bs(&sine(), 1.0, 0.5, &FiberConfig::new(0.4), 64).unwrap();
    assert!(matches!(h.payload, Payload::Hermitian { .. }));
}

#[test]
fn extra_images_stay_below_tail_bound() {
    let fc = FiberConfig::new(0.7);
    let base = build_fiber_bs(&sine(), 1.0, 0.5, &fc, 48).unwrap();
    let n = base.n_images.unwrap();
    assert_eq!(n, auto_images(1.0, 0.5, TAU, fc.tail_tol));
    let more = build_fiber_bs(&sine(), 1.0, 0.5, &fc.with_images(n + 2), 48).unwrap();
    let d = (base.mu_max().unwrap() - more.mu_max().unwrap()).abs();
    assert!(d < fc.tail_tol.max(base.tail_bound.unwrap()) + 1e-14, "{d:e}");
}

#[test]
fn fiber_refuses_deformed_curve() {
    assert!(build_fiber_bs(&contracted(), 1.0, 0.5, &FiberConfig::new(0.0), 64).is_err());
}

#[test]
fn dump_round_trips() {
    let m = build_fiber_bs(&sine(), 1.0, 0.5, &FiberConfig::new(0.4), 16).unwrap();
    let d = parse_dump(&m.dump()).unwrap();
    assert_eq!(d.kind, "fiber");
    assert_eq!(d.n, 16);
    assert_eq!(d.kappa, 0.5);
    for (i, row) in d.rows.iter().enumerate() {
        assert_eq!(row.len(), i + 1);
        for (j, &(re, _)) in row.iter().enumerate() {
            assert_eq!(re, m.entry(i, j));
        }
    }
    assert!(parse_dump("nonsense").is_err());
}

fn even_square_well_kappa(depth: f64, width: f64) -> f64 {
    // k·tan(kw/2) = κ with k² + κ² = depth, by bisection
    let f = |kap: f64| {
        let k = (depth - kap * kap).sqrt();
        k * (k * width / 2.0).tan() - kap
    };
    let (mut lo, mut hi) = (1e-9, depth.sqrt() - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn single_square_well_matches_transcendental_equation() {
    let arr = WellArray1D::new(100.0, 3.6, WellProfile::Square { depth: 4.0, width: 0.5 });
    let kappa = even_square_well_kappa(4.0, 0.5);
    let mu = build_1d_bs(&arr, kappa, 1.0, 400).unwrap().mu_max().unwrap();
    assert!((mu - 1.0).abs() < 1e-5, "{mu}");
}

#[test]
fn zero_potential_gives_zero_matrix() {
    let arr = WellArray1D::new(4.0, 3.6, WellProfile::Square { depth: 0.0, width: 0.5 });
    let m = build_1d_bs(&arr, 0.5, 10.0, 20).unwrap();
    assert!((0..m.order()).all(|i| (0..=i).all(|j| m.entry(i, j) == 0.0)));
}

#[test]
fn inter_well_blocks_decay_exponentially() {
    let (a, kappa, n) = (4.0, 0.6, 10);
    let arr = WellArray1D::new(a, 3.6, WellProfile::Square { depth: 4.0, width: 0.5 });
    let m = build_1d_bs(&arr, kappa, 8.5, n).unwrap();
    assert_eq!(m.order(), 5 * n);
    let block = |bi: usize, bj: usize| -> f64 {
        (0..n).flat_map(|p| (0..n).map(move |q| (p, q))).map(|(p, q)| m.entry(bi * n + p, bj * n + q).powi(2)).sum::<f64>().sqrt()
    };
    for d in 1..4 {
        let ratio = block(4, 3 - d) / block(4, 4 - d);
        assert!((ratio - (-kappa * a).exp()).abs() < 1e-12 * ratio.max(1.0), "{ratio}");
    }
}

#[test]
fn resolution_and_window_errors_are_typed() {
    let flat = CurveSpec::flat(TAU);
    assert!(matches!(build_line_bs(&flat, 1.0, 0.5, 40.0, 10, Measure::Reference), Err(Error::Resolution(_))));
    assert!(matches!(build_line_bs(&contracted(), 1.0, 0.5, 60.0, 2000, Measure::Reference), Err(Error::WindowTooSmall(_))));
    let arr = WellArray1D::new(100.0, 3.6, WellProfile::Square { depth: 4.0, width: 0.5 });
    assert!(matches!(build_1d_bs(&arr, 0.5, 40.0, 0), Err(Error::Resolution(_))));
}
