use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zd_core::characteristics::{
    burgers_weak_residual, critical_values, pushforward_pairing, solve_fan, weak_pairing, zd_grid, zd_pointwise,
    Characteristics,
};
use zd_core::par::Exec;
use zd_core::suite::random_sampled;
use zd_core::{quadrature, InitialDatum, TestFunction};

fn gauss() -> InitialDatum {
    InitialDatum::gaussian(1.0, 7.0, 0.01)
}

#[test]
fn no_caustics_before_breaking() {
    let d = gauss();
    let set = critical_values(&d, 0.0).unwrap();
    assert!(set.values.is_empty());
    assert_eq!(set.components.len(), 1);
    assert_eq!(set.components[0].ell, 0);
    // breaking time 1 / (4 max y e^{-y²}) = 0.58289...
    assert!(critical_values(&d, 0.5).unwrap().values.is_empty());
    assert!(critical_values(&d, 0.58).unwrap().values.is_empty());
    assert_eq!(critical_values(&d, 0.59).unwrap().values.len(), 2);
}

#[test]
fn plateau_of_mollified_step() {
    let d = InitialDatum::unit_step().mollify(1e-3).unwrap();
    assert!((zd_pointwise(&d, 0.5, 0.5).unwrap() - 1.0).abs() <= 1e-2);
    assert_eq!(zd_pointwise(&d, 0.0, 0.3).unwrap(), 1.0);
}

#[test]
fn grid_has_one_three_branch_interval() {
    let d = gauss();
    let set = critical_values(&d, 2.0).unwrap();
    let xs = zd_core::io::linspace(-4.0, 8.0, 1201);
    let f = zd_grid(&d, 2.0, &xs, Exec::Parallel).unwrap();
    let mut runs = 0;
    for (i, &x) in xs.iter().enumerate() {
        let ell = f.ell[i].unwrap();
        if ell == 1 && (i == 0 || f.ell[i - 1] != Some(1)) {
            runs += 1;
        }
        if !f.caustic[i] {
            if let Some(want) = set.ell_at(x) {
                assert_eq!(ell, want, "x = {x}");
            }
        }
    }
    assert_eq!(runs, 1);
}

#[test]
fn pairing_examples() {
    let phi = TestFunction::bump(-1.0, 2.0, 1.5).unwrap();
    assert_eq!(weak_pairing(&InitialDatum::zero(), 1.0, &phi).unwrap(), 0.0);
    let integral = phi.integral().unwrap();
    assert!((pushforward_pairing(&InitialDatum::zero(), 1.0, &phi).unwrap() - integral).abs() < 1e-12);

    let d = gauss();
    assert!((pushforward_pairing(&d, 0.0, &phi).unwrap() - integral).abs() < 1e-10);
    let direct = quadrature::integrate(|y| phi.eval(y) * (-y * y).exp(), -1.0, 2.0, 1e-13).unwrap();
    assert!((weak_pairing(&d, 0.0, &phi).unwrap() - direct).abs() < 1e-8);

    // plateau value 1 on [0.2, 0.8] at t = 0.5
    let m = InitialDatum::unit_step().mollify(1e-3).unwrap();
    let phi = TestFunction::bump(0.2, 0.8, 1.0).unwrap();
    assert!((weak_pairing(&m, 0.5, &phi).unwrap() - phi.integral().unwrap()).abs() <= 1e-4);

    let phi = TestFunction::bump(-0.5, 0.5, 1.0).unwrap();
    let map = Characteristics::new(&m).at(0.5).unwrap();
    let lhs = -2.0 * 0.5 * map.integrate_against(|x| phi.deriv(x), -0.5, 0.5, 1e-11).unwrap();
    let rhs = phi.integral().unwrap() - pushforward_pairing(&m, 0.5, &phi).unwrap();
    assert!((lhs - rhs).abs() <= 1e-4, "{lhs} vs {rhs}");
}

#[test]
fn burgers_residual_examples() {
    assert_eq!(
        burgers_weak_residual(&InitialDatum::zero(), 2.0, (0.0, 1.0), 0.05).unwrap(),
        0.0
    );
    let d = gauss();
    let r0 = burgers_weak_residual(&d, 2.0, (-1.0, 0.4), 0.05).unwrap();
    let r1 = burgers_weak_residual(&d, 2.0, (2.3, 3.7), 0.05).unwrap();
    assert!(r0.abs() <= 1e-4, "{r0}");
    assert!(r1.abs() > 10.0 * r0.abs(), "{r1} vs {r0}");
    // a window straddling a caustic is refused
    assert!(burgers_weak_residual(&d, 2.0, (1.5, 2.5), 0.05)
        .unwrap_err()
        .is_caustic());
}

#[test]
fn sequential_and_parallel_grids_agree() {
    let d = gauss();
    let xs = zd_core::io::linspace(-3.0, 7.0, 257);
    let a = zd_grid(&d, 2.0, &xs, Exec::Sequential).unwrap();
    let b = zd_grid(&d, 2.0, &xs, Exec::Parallel).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.to_csv(), b.to_csv());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fans_are_odd_ordered_and_alternating(seed in any::<u64>(), t in -3.0f64..3.0, x in -10.0f64..10.0) {
        let d = random_sampled(&mut ChaCha8Rng::seed_from_u64(seed));
        match solve_fan(&d, t, x) {
            Ok(fan) => {
                prop_assert_eq!(fan.roots.len(), 2 * fan.ell + 1);
                prop_assert!(fan.roots.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(fan.signs_alternate());
                let u: Vec<f64> = fan.roots.iter().map(|&y| d.eval(y).unwrap()).collect();
                let ordered = u.windows(2).all(|w| if t > 0.0 { w[0] >= w[1] } else { w[0] <= w[1] });
                prop_assert!(ordered, "branch values {:?}", u);
                let (lo, hi) = d.extrema();
                let v = fan.alternating_sum(&d);
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
            }
            Err(e) => prop_assert!(e.is_caustic()),
        }
    }

    #[test]
    fn one_sided_lipschitz(seed in any::<u64>(), t in 0.2f64..3.0, x1 in -10.0f64..10.0, dx in 0.0f64..6.0) {
        let d = random_sampled(&mut ChaCha8Rng::seed_from_u64(seed));
        let map = Characteristics::new(&d).at(t).unwrap();
        let a = map.zd_or_limit(x1).unwrap().0;
        let b = map.zd_or_limit(x1 + dx).unwrap().0;
        prop_assert!(b - a <= dx / (2.0 * t) + 1e-6, "{} - {} > {}", b, a, dx / (2.0 * t));
    }

    #[test]
    fn even_data_are_symmetric(t in 0.1f64..3.0, x in -6.0f64..6.0) {
        let d = gauss();
        if let (Ok(a), Ok(b)) = (zd_pointwise(&d, t, x), zd_pointwise(&d, -t, -x)) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}
