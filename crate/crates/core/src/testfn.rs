//! Compactly supported test functions for weak pairings.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, ZdError};
use crate::quadrature;

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A smooth function supported in `[lo, hi]`, together with its derivative.
#[derive(Clone)]
pub struct TestFunction {
    lo: f64,
    hi: f64,
    sup: f64,
    f: Callable,
    df: Callable,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("sup", &self.sup)
            .finish_non_exhaustive()
    }
}

impl TestFunction {
    /// `sup` is an upper bound for `|f|`; it scales pairing tolerances.
    pub fn new(
        lo: f64,
        hi: f64,
        sup: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ZdError::InvalidArgument(format!(
                "bad test-function support [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            lo,
            hi,
            sup,
            f: Arc::new(f),
            df: Arc::new(df),
        })
    }

    /// `amplitude · exp(-1/(1 - s²))` with `s` the affine image of `[a, b]`
    /// onto `[-1, 1]`.
    pub fn bump(a: f64, b: f64, amplitude: f64) -> Result<Self> {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let f = move |x: f64| {
            let s = (x - c) / r;
            if s.abs() >= 1.0 {
                0.0
            } else {
                amplitude * (-1.0 / (1.0 - s * s)).exp()
            }
        };
        let df = move |x: f64| {
            let s = (x - c) / r;
            if s.abs() >= 1.0 {
                0.0
            } else {
                let q = 1.0 - s * s;
                amplitude * (-1.0 / q).exp() * (-2.0 * s / (q * q)) / r
            }
        };
        Self::new(a, b, amplitude.abs() * (-1f64).exp(), f, df)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            (self.f)(x)
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            (self.df)(x)
        }
    }

    /// `∫ φ`.
    pub fn integral(&self) -> Result<f64> {
        quadrature::integrate(|x| self.eval(x), self.lo, self.hi, 1e-13)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivative_matches_differences() {
        let phi = TestFunction::bump(0.2, 0.8, 2.0).unwrap();
        assert!((phi.eval(0.5) - 2.0 * (-1f64).exp()).abs() < 1e-15);
        assert_eq!(phi.eval(0.1), 0.0);
        for x in [0.25, 0.4, 0.61, 0.77] {
            let h = 1e-6;
            let fd = (phi.eval(x + h) - phi.eval(x - h)) / (2.0 * h);
            assert!((fd - phi.deriv(x)).abs() < 1e-6 * (1.0 + fd.abs()));
        }
        // ∫ φ' = 0 for compact support
        let v = quadrature::integrate(|x| phi.deriv(x), 0.2, 0.8, 1e-12).unwrap();
        assert!(v.abs() < 1e-10);
    }
}
