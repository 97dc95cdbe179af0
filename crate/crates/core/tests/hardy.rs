use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zd_core::datum::Rational;
use zd_core::hardy::{self, HalfLineSpectrum, HardyOperator, Solver, Toeplitz, XiGrid};
use zd_core::par::Exec;
use zd_core::{rational, InitialDatum, C64};

fn lorentz() -> InitialDatum {
    InitialDatum::Rational(Rational::lorentzian(1.0))
}

fn gauss() -> InitialDatum {
    InitialDatum::gaussian(1.0, 7.0, 0.01)
}

/// Smooth random Hardy spectrum: a few damped complex exponentials.
fn random_spectrum(g: XiGrid, rng: &mut ChaCha8Rng) -> HalfLineSpectrum {
    let terms: Vec<(C64, f64, f64)> = (0..4)
        .map(|_| {
            (
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                rng.random_range(0.3..2.0),
                rng.random_range(-3.0..3.0),
            )
        })
        .collect();
    let v = g
        .nodes()
        .iter()
        .map(|&xi| terms.iter().map(|(c, a, b)| c * C64::new(-a * xi, b * xi).exp()).sum())
        .collect();
    HalfLineSpectrum::new(g, v).unwrap()
}

#[test]
fn zero_datum_transform_vanishes() {
    let g = XiGrid::new(64, 5.0).unwrap();
    let s = hardy::fourier_plus(&InitialDatum::zero(), &g).unwrap();
    assert!(s.values.iter().all(|v| *v == C64::new(0.0, 0.0)));
}

#[test]
fn plancherel() {
    for d in [lorentz(), gauss()] {
        let g = hardy::default_grid(&d, 2048).unwrap();
        let s = hardy::fourier_plus(&d, &g).unwrap();
        let lhs = s.norm_sq() / (2.0 * PI);
        let rhs = 0.5 * d.norms().l2.powi(2);
        assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
    }
}

#[test]
fn gaussian_transform() {
    let d = gauss();
    let g = hardy::default_grid(&d, 1024).unwrap();
    assert!(g.xi_max > 8.0 && g.xi_max < 16.0, "{}", g.xi_max);
    let s = hardy::fourier_plus(&d, &g).unwrap();
    for (xi, v) in g.nodes().iter().zip(&s.values) {
        let want = PI.sqrt() * (-xi * xi / 4.0).exp();
        assert!((v - C64::new(want, 0.0)).norm() < 1e-8, "{xi}: {v}");
    }
}

#[test]
fn step_is_rejected() {
    assert!(hardy::default_grid(&InitialDatum::unit_step(), 512).is_err());
    let m = InitialDatum::unit_step().mollify(0.1).unwrap();
    assert!(hardy::default_grid(&m, 512).is_err());
}

#[test]
fn resolvent_norm_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = XiGrid::new(2048, 40.0).unwrap();
    let x = C64::new(0.0, 0.5);
    for _ in 0..50 {
        let f = random_spectrum(g, &mut rng);
        let h = hardy::g_resolvent(&f, x).unwrap();
        assert!(h.norm_sq().sqrt() <= 2.0 * f.norm_sq().sqrt() * (1.0 + 1e-6));
    }
    let zero = HalfLineSpectrum::new(g, vec![C64::new(0.0, 0.0); 2048]).unwrap();
    assert!(hardy::g_resolvent(&zero, x)
        .unwrap()
        .values
        .iter()
        .all(|v| v.norm() == 0.0));
}

#[test]
fn toeplitz_norm_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for d in [lorentz(), gauss()] {
        let linf = d.norms().linf;
        let g = hardy::default_grid(&d, 2048).unwrap();
        let t = Toeplitz::from_datum(&d, g).unwrap();
        for _ in 0..50 {
            let f = random_spectrum(g, &mut rng);
            let tf = HalfLineSpectrum::new(g, t.apply(&f.values)).unwrap();
            assert!(tf.norm_sq().sqrt() <= linf * f.norm_sq().sqrt() * (1.0 + 1e-3));
        }
        let zero = hardy::toeplitz_apply(&InitialDatum::zero(), &random_spectrum(g, &mut rng)).unwrap();
        assert!(zero.values.iter().all(|v| v.norm() == 0.0));
    }
}

#[test]
fn toeplitz_rational_symbol() {
    // b = 1/(y - p), f = 1/(y + i): T_b f = (f - f(p))/(y - p) = -f/(p + i)
    let p = C64::new(0.3, 0.7);
    let i = C64::i();
    let g = XiGrid::new(2048, 30.0).unwrap();
    let t = Toeplitz::from_symbol(
        g,
        |xi| {
            if xi < 0.0 {
                2.0 * PI * i * (-i * xi * p).exp()
            } else {
                C64::new(0.0, 0.0)
            }
        },
        (C64::new(0.0, 0.0), 2.0 * PI * i),
    )
    .unwrap();
    let f: Vec<C64> = g.nodes().iter().map(|&xi| -2.0 * PI * i * (-xi).exp()).collect();
    let out = t.apply(&f);
    for (xi, v) in g.nodes().iter().zip(&out) {
        let want = 2.0 * PI * i * (-xi).exp() / (p + i);
        assert!((v - want).norm() < 1e-6, "{xi}: {v} vs {want}");
    }
}

#[test]
fn t_zero_is_plain_resolvent() {
    let d = lorentz();
    let op = HardyOperator::with_modes(&d, 1024).unwrap();
    let x = C64::new(0.4, 0.3);
    let s = op.solve(0.0, x, Solver::Auto).unwrap();
    let k = hardy::g_resolvent(&op.pi_u0(), x).unwrap();
    assert_eq!(s.spectrum.values, k.values);
}

#[test]
fn neumann_matches_dense() {
    let d = lorentz();
    let op = HardyOperator::with_modes(&d, 512).unwrap();
    let t = 0.25;
    let x = C64::new(0.3, 4.0 * t * op.linf());
    let a = op.solve(t, x, Solver::Neumann).unwrap();
    let b = op.solve(t, x, Solver::Dense).unwrap();
    let c = op.solve(t, x, Solver::Gmres).unwrap();
    let scale = b.spectrum.norm_sq().sqrt();
    for other in [&a, &c] {
        let diff: Vec<C64> = other
            .spectrum
            .values
            .iter()
            .zip(&b.spectrum.values)
            .map(|(p, q)| p - q)
            .collect();
        let rel = HalfLineSpectrum::new(*op.grid(), diff).unwrap().norm_sq().sqrt() / scale;
        assert!(rel <= 1e-6, "{rel}");
    }
}

#[test]
fn resolvent_identity_residual() {
    let op = HardyOperator::with_modes(&lorentz(), 2048).unwrap();
    for (t, x) in [
        (0.1, C64::new(0.5, 0.05)),
        (1.0, C64::new(-1.0, 0.2)),
        (2.0, C64::new(3.0, 0.5)),
    ] {
        let s = op.solve(t, x, Solver::Auto).unwrap();
        assert!(s.residual <= 1e-8, "{t} {x}: {}", s.residual);
    }
}

#[test]
fn pi_u_oracles() {
    let v = hardy::pi_u(&lorentz(), 0.0, C64::i()).unwrap();
    assert!((v - 0.25).norm() < 1e-10);
    let z = hardy::boundary_trace(&InitialDatum::zero(), 0.7, &[-1.0, 0.0, 1.0], 0.1, Exec::Sequential).unwrap();
    assert!(z.values.iter().all(|v| *v == 0.0));
}

#[test]
fn boundary_trace_matches_smoothed_rational() {
    let r = Rational::lorentzian(1.0);
    let d = InitialDatum::Rational(r.clone());
    let (t, sigma) = (0.1, 0.05);
    let xs = zd_core::io::linspace(-3.0, 3.0, 61);
    let trace = hardy::boundary_trace(&d, t, &xs, sigma, Exec::Parallel).unwrap();
    let mut worst = 0.0f64;
    for (x, v) in xs.iter().zip(&trace.values) {
        let want = hardy::poisson_smooth(|s| rational::zd_rational(&r, t, s).unwrap(), *x, sigma, 1e-10).unwrap();
        worst = worst.max((v - want).abs());
    }
    assert!(worst <= 3e-2, "{worst}");
}

#[test]
fn t_zero_trace_is_poisson_extension() {
    for d in [lorentz(), gauss()] {
        let xs = zd_core::io::linspace(-3.0, 3.0, 13);
        let trace = hardy::boundary_trace(&d, 0.0, &xs, 0.1, Exec::Parallel).unwrap();
        for (x, v) in xs.iter().zip(&trace.values) {
            let want = hardy::poisson_smooth(|s| d.eval(s).unwrap(), *x, 0.1, 1e-12).unwrap();
            assert!((v - want).abs() <= 1e-6, "{x}: {v} vs {want}");
        }
    }
}

#[test]
fn cauchy_riemann() {
    let op = HardyOperator::with_modes(&lorentz(), 1024).unwrap();
    let t = 0.5;
    let dlt = 1e-3;
    for z in [C64::new(0.2, 0.3), C64::new(-1.0, 0.5), C64::new(1.5, 0.2)] {
        let f = |w: C64| op.pi_u(t, w).unwrap();
        let fx = (f(z + dlt) - f(z - dlt)) / (2.0 * dlt);
        let fy = (f(z + C64::new(0.0, dlt)) - f(z - C64::new(0.0, dlt))) / (2.0 * dlt);
        let dbar = 0.5 * (fx + C64::i() * fy);
        assert!(dbar.norm() <= 1e-4 * (1.0 + fx.norm()), "{z}: {dbar}");
    }
}

#[test]
fn sigma_refinement_contracts() {
    let op = HardyOperator::with_modes(&lorentz(), 2048).unwrap();
    let xs = zd_core::io::linspace(-3.0, 3.0, 31);
    let traces: Vec<Vec<f64>> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&s| op.boundary_trace(0.1, &xs, s, Exec::Parallel).unwrap().values)
        .collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(dist(&traces[1], &traces[2]) < dist(&traces[0], &traces[1]));
}

#[test]
fn sigma_below_floor_is_rejected() {
    assert!(hardy::pi_u(&lorentz(), 0.1, C64::new(0.0, 1e-4)).is_err());
    assert!(hardy::boundary_trace(&lorentz(), 0.1, &[0.0], 1e-4, Exec::Sequential).is_err());
}
