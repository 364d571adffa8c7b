mod common;

use common::*;
use idprior_core::distributions::{
    compound_poisson_sample, submultiplicative_tail_check, GpqParams, JumpLaw, ScalarIdTriplet, Submultiplicative,
    TailVerdict,
};
use idprior_core::rng::RngState;
use num_complex::Complex64;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use statrs::distribution::{Continuous, Discrete, Poisson};

const GRID: [f64; 6] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0];

fn rng(stream: u64) -> idprior_core::rng::SimRng {
    RngState::new(2024, stream).rng()
}

#[test]
fn log_pdf_examples() {
    let g = GpqParams::new(2.0, 1.0).unwrap();
    let want = -0.5 * (2.0 * std::f64::consts::PI).ln();
    assert!((g.log_pdf(0.0).unwrap() - want).abs() < 1e-13);

    let g = GpqParams::new(1.0, 1.0).unwrap();
    let a = 0.5f64.sqrt();
    let want = (1.0 / (2.0 * a)).ln() - 1.0 / a;
    assert!((g.log_pdf(1.0).unwrap() - want).abs() < 1e-13);

    let g = GpqParams::new(0.5, 0.5).unwrap();
    let want = gpq_pdf(0.5, 0.5, 0.7).ln();
    assert!((g.log_pdf(0.7).unwrap() - want).abs() < 1e-11);
    let mass = 2.0 * half_line(|t| g.pdf(t));
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
}

#[test]
fn alpha_matches_definition() {
    for &p in &GRID {
        for &q in &GRID {
            let g = GpqParams::new(p, q).unwrap();
            assert!((g.alpha() / gpq_alpha(p, q) - 1.0).abs() < 1e-12, "p={p} q={q}");
        }
    }
}

#[test]
fn normalization_and_variance_by_quadrature() {
    for &p in &GRID {
        for &q in &GRID {
            let g = GpqParams::new(p, q).unwrap();
            let mass = 2.0 * half_line(|t| g.pdf(t));
            let var = 2.0 * half_line(|t| t * t * g.pdf(t));
            assert!((mass - 1.0).abs() < 1e-6, "p={p} q={q} mass={mass}");
            assert!((var - 1.0).abs() < 1e-6, "p={p} q={q} var={var}");
        }
    }
}

#[test]
fn density_matches_written_out_formula() {
    for &p in &GRID {
        for &q in &GRID {
            let g = GpqParams::new(p, q).unwrap();
            for &t in &[-3.0, -0.4, 0.01, 0.5, 2.0, 7.0] {
                let want = gpq_pdf(p, q, t);
                assert!((g.pdf(t) / want - 1.0).abs() < 1e-10, "p={p} q={q} t={t}");
            }
        }
    }
}

#[test]
fn moments_by_formula_and_quadrature() {
    for &p in &GRID {
        for &q in &GRID {
            let g = GpqParams::new(p, q).unwrap();
            assert!((g.moment(2) - 1.0).abs() < 1e-12);
            assert_eq!(g.moment(1), 0.0);
            assert_eq!(g.moment(3), 0.0);
            let m4 = 2.0 * half_line(|t| t.powi(4) * gpq_pdf(p, q, t));
            assert!((g.moment(4) / m4 - 1.0).abs() < 1e-6, "p={p} q={q}");
        }
    }
}

#[test]
fn fourth_moment_of_laplace_member_by_sampling() {
    let g = GpqParams::new(1.0, 1.0).unwrap();
    let x4: Vec<f64> = g.sample(1_000_000, &mut rng(1)).iter().map(|x| x.powi(4)).collect();
    let (m, se) = mean_se(&x4);
    assert!((m - g.moment(4)).abs() < 3.0 * se, "{m} ± {se} vs {}", g.moment(4));
}

#[test]
fn sample_moments_within_four_se() {
    for &p in GRID.iter().filter(|p| **p >= 0.5) {
        for &q in GRID.iter().filter(|q| **q >= 0.5) {
            let g = GpqParams::new(p, q).unwrap();
            let xs = g.sample(100_000, &mut rng(10));
            for s in [2, 4] {
                let v: Vec<f64> = xs.iter().map(|x| x.powi(s)).collect();
                let (m, se) = mean_se(&v);
                assert!((m - g.moment(s as u32)).abs() < 4.0 * se, "p={p} q={q} s={s}: {m} ± {se}");
            }
        }
    }
}

#[test]
fn sampler_matches_cdf_on_the_grid() {
    for (i, &p) in GRID.iter().enumerate() {
        for (j, &q) in GRID.iter().enumerate() {
            let g = GpqParams::new(p, q).unwrap();
            let xs = g.sample(100_000, &mut rng(100 + 6 * i as u64 + j as u64));
            let d = ks(&xs, |t| gpq_cdf(p, q, t));
            assert!(d < 0.01, "p={p} q={q} ks={d}");
        }
    }
}

#[test]
fn cdf_oracle_agrees_with_quadrature() {
    for &(p, q) in &[(0.5, 0.5), (0.25, 1.0), (1.5, 0.75)] {
        for &t in &[0.05, 0.3, 1.0, 2.5] {
            let tail = half_line(|x| gpq_pdf(p, q, t + x));
            let body = 0.5 - tail;
            let want = gpq_cdf(p, q, t) - 0.5;
            assert!((body - want).abs() < 1e-9, "p={p} q={q} t={t}: {body} vs {want}");
        }
    }
}

#[test]
fn gaussian_member_is_standard_normal_in_law() {
    let g = GpqParams::new(2.0, 1.0).unwrap();
    let xs = g.sample(100_000, &mut rng(2));
    assert!(ks(&xs, normal_cdf) < 0.01);
}

#[test]
fn unit_sample_variance() {
    // Laws whose sampling SE of the variance is below 0.0075 at this size.
    let mut rng = rng(3);
    for &(p, q) in &[(2.0, 1.0), (1.0, 1.0), (1.5, 1.5), (2.0, 2.0), (1.0, 2.0), (1.5, 1.0)] {
        let g = GpqParams::new(p, q).unwrap();
        let xs = g.sample(100_000, &mut rng);
        let v = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((v - 1.0).abs() < 0.03, "p={p} q={q} var={v}");
    }
    // Heavier members: the same check against four SE of the sample variance.
    for &(p, q) in &[(0.5, 0.5), (0.5, 1.0), (0.75, 0.75)] {
        let g = GpqParams::new(p, q).unwrap();
        let x2: Vec<f64> = g.sample(100_000, &mut rng).iter().map(|x| x * x).collect();
        let (m, se) = mean_se(&x2);
        assert!((m - 1.0).abs() < 4.0 * se, "p={p} q={q} var={m} ± {se}");
    }
}

#[test]
fn compound_poisson_point_mass_jumps_are_poisson() {
    let xs = compound_poisson_sample(3.0, &JumpLaw::PointMass(1.0), 100_000, &mut rng(4)).unwrap();
    assert!(xs.iter().all(|x| x.fract() == 0.0 && *x >= 0.0));
    let (m, se) = mean_se(&xs);
    assert!((m - 3.0).abs() < 3.0 * se);
    let pois = Poisson::new(3.0).unwrap();
    for k in 0..8u64 {
        let frac = xs.iter().filter(|x| **x == k as f64).count() as f64 / xs.len() as f64;
        let pk = pois.pmf(k);
        assert!((frac - pk).abs() < 4.0 * (pk * (1.0 - pk) / 1e5).sqrt(), "k={k}");
    }
}

#[test]
fn compound_poisson_variance() {
    let xs = compound_poisson_sample(2.0, &JumpLaw::standard_normal(), 100_000, &mut rng(5)).unwrap();
    let x2: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let (m, se) = mean_se(&x2);
    assert!((m - 2.0).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn compound_poisson_rejects_negative_rate() {
    assert!(compound_poisson_sample(-1.0, &JumpLaw::standard_normal(), 3, &mut rng(0)).is_err());
    assert!(compound_poisson_sample(0.0, &JumpLaw::standard_normal(), 50, &mut rng(0))
        .unwrap()
        .iter()
        .all(|x| *x == 0.0));
}

#[test]
fn id_sample_degenerate_and_gaussian() {
    let t = ScalarIdTriplet::new(5.0, 0.0, 0.0, JumpLaw::standard_normal()).unwrap();
    assert!(t.sample(1000, &mut rng(6)).iter().all(|x| *x == 5.0));
    let t = ScalarIdTriplet::new(0.0, 1.0, 0.0, JumpLaw::standard_normal()).unwrap();
    assert!(ks(&t.sample(100_000, &mut rng(7)), normal_cdf) < 0.01);
}

fn empirical_cf(xs: &[f64], s: f64) -> Complex64 {
    let (c, si) = xs.iter().fold((0.0, 0.0), |(c, si), x| (c + (s * x).cos(), si + (s * x).sin()));
    Complex64::new(c, si) / xs.len() as f64
}

#[test]
fn char_fn_closed_forms() {
    let t = ScalarIdTriplet::new(0.0, 0.25, 2.0, JumpLaw::standard_normal()).unwrap();
    assert_eq!(t.char_fn(0.0), Complex64::new(1.0, 0.0));
    for s in [-4.0f64, -1.0, 0.3, 2.0, 5.0] {
        let want = (-0.125 * s * s + 2.0 * ((-0.5 * s * s).exp() - 1.0)).exp();
        assert!((t.char_fn(s) - want).norm() < 1e-10, "s={s}");
    }
    let g = ScalarIdTriplet::new(0.0, 0.7, 0.0, JumpLaw::standard_normal()).unwrap();
    assert!((g.char_fn(1.0).re - (-0.35f64).exp()).abs() < 1e-15);
    let p = ScalarIdTriplet::new(0.0, 0.0, 1.0, JumpLaw::PointMass(1.0)).unwrap();
    assert!((p.char_fn(std::f64::consts::PI) - Complex64::new((-2.0f64).exp(), 0.0)).norm() < 1e-12);
    // Shifted, asymmetric jumps: Poisson char fn `exp(i m s + c (e^{i s a} − 1))`.
    let a = ScalarIdTriplet::new(0.4, 0.0, 1.5, JumpLaw::PointMass(0.8)).unwrap();
    let s = 1.7;
    let want = (Complex64::new(0.0, 0.4 * s) + (Complex64::new(0.0, 0.8 * s).exp() - 1.0) * 1.5).exp();
    assert!((a.char_fn(s) - want).norm() < 1e-12);
}

#[test]
fn empirical_char_fn_matches_levy_khintchine() {
    let laws = [
        ScalarIdTriplet::new(0.0, 0.25, 2.0, JumpLaw::standard_normal()).unwrap(),
        ScalarIdTriplet::new(0.3, 0.0, 1.0, JumpLaw::standard_laplace()).unwrap(),
        ScalarIdTriplet::new(-0.2, 0.1, 3.0, JumpLaw::Normal { mean: 0.5, std: 0.3 }).unwrap(),
    ];
    let n = 100_000;
    for (i, t) in laws.iter().enumerate() {
        let xs = t.sample(n, &mut rng(20 + i as u64));
        let worst = (0..64)
            .map(|k| -5.0 + 10.0 * k as f64 / 63.0)
            .map(|s| (empirical_cf(&xs, s) - t.char_fn(s)).norm())
            .fold(0.0, f64::max);
        assert!(worst < 4.0 / (n as f64).sqrt(), "law {i}: {worst}");
    }
}

#[test]
fn sum_of_roots_matches_law() {
    let t = ScalarIdTriplet::new(1.0, 0.5, 3.0, JumpLaw::Normal { mean: 0.5, std: 1.0 }).unwrap();
    let root = t.root(4);
    let n = 100_000;
    let mut r = rng(30);
    let sums: Vec<f64> = (0..n).map(|_| (0..4).map(|_| root.draw(&mut r)).sum()).collect();
    let direct = t.sample(n, &mut rng(31));
    let d = two_sample_ks(&sums, &direct);
    assert!(d < 0.02, "ks={d}");
}

#[test]
fn tail_verdicts() {
    let mut r = rng(40);
    let gauss: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut r)).collect();
    let rep = submultiplicative_tail_check(&gauss, Submultiplicative::StretchedExp(0.5)).unwrap();
    assert_eq!(rep.verdict, TailVerdict::Finite);

    let cauchy: Vec<f64> = Cauchy::new(0.0, 1.0).unwrap().sample_iter(&mut r).take(100_000).collect();
    let rep = submultiplicative_tail_check(&cauchy, Submultiplicative::Power(1.0)).unwrap();
    assert_eq!(rep.verdict, TailVerdict::Divergent);
}

/// `E max(1, X²)` for `X ~ CPois(c, N(0,1))`: given `k` jumps `X ~ N(0, k)`.
fn cp_normal_max1_sq(c: f64) -> f64 {
    let pois = Poisson::new(c).unwrap();
    let std = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    let mut total = pois.pmf(0);
    for k in 1..60u64 {
        let a = 1.0 / (k as f64).sqrt();
        let inside = 2.0 * normal_cdf(a) - 1.0;
        let outside_sq = 2.0 * (a * std.pdf(a) + 1.0 - normal_cdf(a));
        total += pois.pmf(k) * (inside + k as f64 * outside_sq);
    }
    total
}

#[test]
fn tail_check_of_compound_poisson_second_moment() {
    let xs = compound_poisson_sample(2.0, &JumpLaw::standard_normal(), 100_000, &mut rng(41)).unwrap();
    let rep = submultiplicative_tail_check(&xs, Submultiplicative::Power(2.0)).unwrap();
    assert_eq!(rep.verdict, TailVerdict::Finite);
    let h: Vec<f64> = xs.iter().map(|x| x.abs().max(1.0).powi(2)).collect();
    let (_, se) = mean_se(&h);
    let want = cp_normal_max1_sq(2.0);
    assert!((rep.mean - want).abs() < 4.0 * se, "{} vs {want} (se {se})", rep.mean);
}

#[test]
fn same_state_same_draws() {
    let g = GpqParams::new(0.5, 0.5).unwrap();
    assert_eq!(g.sample(100, &mut rng(50)), g.sample(100, &mut rng(50)));
    assert_ne!(g.sample(100, &mut rng(50)), g.sample(100, &mut rng(51)));
}
