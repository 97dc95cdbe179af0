//! Quadrature rules: adaptive Gauss–Kronrod (7/15), fixed Gauss–Legendre and
//! uniform-grid Gregory weights.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, ZdError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Absolute tolerance used by pairing integrals.
pub const DEFAULT_ABS_TOL: f64 = 1e-9;

const MAX_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let s = f(c - h * x) + f(c + h * x);
        kronrod += w * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * h,
        error: ((kronrod - gauss) * h).abs(),
    }
}

/// Globally adaptive G7/K15 integration of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_with_breaks(f, &[a, b], tol)
}

/// Like [`integrate`] but the initial partition is given by `points`, which
/// must be ascending. Put known kinks and jumps of the integrand there.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: f64) -> Result<f64> {
    if points.len() < 2 {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1]));
        }
    }
    let (lo, hi) = (points[0], points[points.len() - 1]);
    loop {
        let (total, err) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !total.is_finite() {
            return Err(ZdError::Quadrature {
                a: lo,
                b: hi,
                error: f64::INFINITY,
            });
        }
        if err <= tol {
            return Ok(total);
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(ZdError::Quadrature {
                a: lo,
                b: hi,
                error: err,
            });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution; accept its estimate
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
    }
}

/// Sorted, deduplicated breakpoints restricted to `[a, b]` with the ends
/// included.
pub fn breakpoints(a: f64, b: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts = vec![a, b];
    pts.extend(interior.into_iter().filter(|p| p.is_finite() && *p > a && *p < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * (1.0 + q.abs()));
    pts
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Unit-spacing weights for `n` equispaced samples (multiply by the spacing).
///
/// Fourth-order Gregory end corrections from eight points on (a third-order
/// variant for six and seven); Newton–Cotes rules below that.
pub fn gregory_weights(n: usize) -> Vec<f64> {
    match n {
        0 | 1 => vec![0.0; n],
        2 => vec![0.5, 0.5],
        3 => vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        4 => vec![3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0],
        5 => vec![14.0 / 45.0, 64.0 / 45.0, 24.0 / 45.0, 64.0 / 45.0, 14.0 / 45.0],
        6 | 7 => {
            let mut w = vec![1.0; n];
            for (k, &e) in [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0].iter().enumerate() {
                w[k] = e;
                w[n - 1 - k] = e;
            }
            w
        }
        _ => {
            let mut w = vec![1.0; n];
            for (k, &e) in [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0].iter().enumerate() {
                w[k] = e;
                w[n - 1 - k] = e;
            }
            w
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_integrates_smooth_and_kinked() {
        let v = integrate(|x| x.exp(), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        let v = integrate_with_breaks(|x: f64| x.abs(), &[-1.0, 0.0, 2.0], 1e-13).unwrap();
        assert!((v - 2.5).abs() < 1e-13);
        // sqrt endpoint singularity still converges adaptively
        let v = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gregory_is_fourth_order() {
        for n in 2..12 {
            let h = 1.0 / (n - 1) as f64;
            let w = gregory_weights(n);
            let s: f64 = w.iter().enumerate().map(|(i, w)| w * (i as f64 * h).powi(3)).sum();
            if n >= 4 {
                assert!((s * h - 0.25).abs() < 1e-13, "n = {n}");
            }
        }
        let n = 201;
        let h = 2.0 / (n - 1) as f64;
        let s: f64 = gregory_weights(n)
            .iter()
            .enumerate()
            .map(|(i, w)| w * (i as f64 * h).exp())
            .sum();
        assert!((s * h - (2f64.exp() - 1.0)).abs() < 1e-9);
    }
}
