use proptest::prelude::*;
use zd_core::datum::Rational;
use zd_core::{quadrature, InitialDatum, C64};

fn l2_to_step(delta: f64) -> f64 {
    let step = InitialDatum::unit_step();
    let m = step.mollify(delta).unwrap();
    let pts = quadrature::breakpoints(-2.0, 2.0, [-1.0 - delta, -1.0, 1.0, 1.0 + delta]);
    quadrature::integrate_with_breaks(|y| (m.eval(y).unwrap() - step.eval(y).unwrap()).powi(2), &pts, 1e-14)
        .unwrap()
        .sqrt()
}

#[test]
fn examples() {
    assert_eq!(InitialDatum::unit_step().eval(0.0).unwrap(), 1.0);
    let l = InitialDatum::Rational(Rational::lorentzian(1.0));
    assert!((l.eval(0.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((l.eval_deriv(1.0).unwrap() + 0.5).abs() < 1e-15);
    // √(π/2)
    assert!((l.norms().l2 - 1.253_314_137_315_500_3).abs() < 1e-8);
    let m = InitialDatum::unit_step().mollify(1e-2).unwrap();
    assert_eq!(m.eval(0.0).unwrap(), 1.0);
    assert_eq!(m.eval_deriv(0.0).unwrap(), 0.0);
    let z = InitialDatum::zero().mollify(0.3).unwrap();
    assert!(z.is_zero());
}

#[test]
fn ramp_is_strictly_increasing() {
    let m = InitialDatum::unit_step().mollify(0.1).unwrap();
    let v = m.eval(-1.05).unwrap();
    assert!(v > 0.0 && v < 1.0);
    let ys = zd_core::io::linspace(-1.1, -1.0, 101);
    let vals: Vec<f64> = ys.iter().map(|&y| m.eval(y).unwrap()).collect();
    assert_eq!(vals[0], 0.0);
    assert_eq!(vals[100], 1.0);
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn mollification_distance() {
    let d = l2_to_step(1e-3);
    assert!(d <= 0.05, "{d}");
    // O(δ^{1/2}): halving δ divides the distance by √2
    let ds: Vec<f64> = (1..=8).map(|k| l2_to_step(0.5f64.powi(k))).collect();
    for w in ds.windows(2) {
        assert!(w[1] < w[0]);
        assert!((w[0] / w[1] - 2f64.sqrt()).abs() < 1e-6, "{ds:?}");
    }
}

#[test]
fn json_roundtrip() {
    for d in [
        InitialDatum::zero(),
        InitialDatum::unit_step(),
        InitialDatum::Rational(Rational::lorentzian(3.0)),
        InitialDatum::gaussian(1.0, 7.0, 0.05),
        InitialDatum::unit_step().mollify(0.1).unwrap(),
    ] {
        assert_eq!(InitialDatum::from_json(&d.to_json()).unwrap(), d);
    }
    assert!(InitialDatum::from_json(r#"{"type":"mollified","base":{"type":"zero"},"delta":-1}"#).is_err());
}

proptest! {
    #[test]
    fn rational_data_are_real(
        poles in prop::collection::vec((-3.0f64..3.0, 0.2f64..2.0, -1.0f64..1.0, -1.0f64..1.0), 1..=4),
        y in -20.0f64..20.0,
    ) {
        let p: Vec<C64> = poles.iter().map(|t| C64::new(t.0, t.1)).collect();
        let c: Vec<C64> = poles.iter().map(|t| C64::new(t.2, t.3)).collect();
        if let Ok(r) = Rational::new(p, c) {
            prop_assert!(r.eval_complex(C64::new(y, 0.0)).im.abs() <= 1e-12);
        }
    }

    #[test]
    fn derivative_matches_differences(y in -5.0f64..5.0) {
        let h = 1e-5;
        for d in [InitialDatum::gaussian(1.0, 7.0, 0.01), InitialDatum::Rational(Rational::lorentzian(3.0))] {
            let fd = (d.eval(y + h).unwrap() - d.eval(y - h).unwrap()) / (2.0 * h);
            let exact = d.eval_deriv(y).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0));
        }
    }
}
