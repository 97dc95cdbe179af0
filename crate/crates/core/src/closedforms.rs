//! Exact reference profiles: the step datum, piecewise-linear data, and the
//! failure of the semigroup property.

use crate::characteristics::{CharacteristicFan, ZdField};
use crate::datum::{PiecewiseLinear, Step};
use crate::error::{check_finite, Result, ZdError};

/// Limit for the indicator of `]-1, 1[`.
///
/// Interval conventions are half-open exactly as in the case table (values
/// at `x = -1, 2t-1, 1, 2t+1` belong to the piece on their left).
pub fn zd_step(t: f64, x: f64) -> f64 {
    if t < 0.0 {
        return zd_step(-t, -x);
    }
    if t == 0.0 {
        return if x > -1.0 && x < 1.0 { 1.0 } else { 0.0 };
    }
    if x <= -1.0 || x > 2.0 * t + 1.0 {
        return 0.0;
    }
    if t <= 1.0 {
        if x <= 2.0 * t - 1.0 {
            (x + 1.0) / (2.0 * t)
        } else if x <= 1.0 {
            1.0
        } else {
            1.0 - (x - 1.0) / (2.0 * t)
        }
    } else if x <= 1.0 {
        (x + 1.0) / (2.0 * t)
    } else if x <= 2.0 * t - 1.0 {
        1.0 / t
    } else {
        1.0 - (x - 1.0) / (2.0 * t)
    }
}

/// Kink abscissas of [`zd_step`] at time `t`.
pub fn step_kinks(t: f64) -> Vec<f64> {
    if t < 0.0 {
        let mut k: Vec<f64> = step_kinks(-t).into_iter().map(|x| -x).collect();
        k.reverse();
        return k;
    }
    if t == 0.0 {
        return vec![-1.0, 1.0];
    }
    let mut k = vec![-1.0, 2.0 * t - 1.0, 1.0, 2.0 * t + 1.0];
    k.sort_by(f64::total_cmp);
    k.dedup();
    k
}

/// Limit for a general step `height · 1_{]left, right[}` by rescaling the
/// unit case: `ZD = h · zd_step(t h / a, (x - c) / a)` with `c` the centre and
/// `a` the half-width.
pub fn zd_step_general(s: &Step, t: f64, x: f64) -> f64 {
    let a = 0.5 * (s.right - s.left);
    let c = 0.5 * (s.right + s.left);
    if s.height == 0.0 {
        return 0.0;
    }
    s.height * zd_step(t * s.height / a, (x - c) / a)
}

pub fn step_kinks_general(s: &Step, t: f64) -> Vec<f64> {
    let a = 0.5 * (s.right - s.left);
    let c = 0.5 * (s.right + s.left);
    step_kinks(t * s.height / a).into_iter().map(|k| c + a * k).collect()
}

pub fn zd_step_grid(s: &Step, t: f64, grid: &[f64]) -> ZdField {
    let values = grid.iter().map(|&x| zd_step_general(s, t, x)).collect();
    ZdField::new(t, grid.to_vec(), values, "closedform")
}

/// Exact characteristic fan of a piecewise-linear datum: `f_t` is linear on
/// each piece, so every piece contributes at most one root.
pub fn pl_fan(u: &PiecewiseLinear, t: f64, x: f64) -> Result<CharacteristicFan> {
    check_finite(t, "t")?;
    check_finite(x, "x")?;
    let pieces = u.pieces();
    let tol = 1e-12 * (1.0 + x.abs());
    let slope = |m: f64| 1.0 + 2.0 * t * m;
    // tails have zero slope and value, so never touch their infinite end
    let f = |y: f64, a: f64, va: f64, m: f64| y + 2.0 * t * if m == 0.0 { va } else { va + m * (y - a) };

    let mut caustic = false;
    for (i, &(a, b, va, m)) in pieces.iter().enumerate() {
        if slope(m) == 0.0 && (f(a, a, va, m) - x).abs() <= tol {
            caustic = true;
        }
        if let Some(&(_, _, _, m2)) = pieces.get(i + 1) {
            if slope(m) * slope(m2) < 0.0 && (f(b, a, va, m) - x).abs() <= tol {
                caustic = true;
            }
        }
    }
    if caustic {
        let xp = x + 1e-9 * (1.0 + x.abs());
        let mut fan = pl_fan(u, t, xp)?;
        fan.x = x;
        fan.limiting = true;
        let value = fan_sum(u, &fan);
        return Err(ZdError::CausticHit {
            t,
            x,
            fan: Some(Box::new(fan)),
            value: Some(value),
        });
    }

    let mut roots = Vec::new();
    let mut signs = Vec::new();
    for &(a, b, va, m) in &pieces {
        let s = slope(m);
        if s == 0.0 {
            continue;
        }
        // pieces are half-open [a, b)
        let r = if a.is_finite() { a } else { b };
        let y = r + (x - f(r, a, va, m)) / s;
        if y >= a && y < b {
            roots.push(y);
            signs.push(if s > 0.0 { 1 } else { -1 });
        }
    }
    Ok(CharacteristicFan {
        t,
        x,
        ell: roots.len() / 2,
        roots,
        deriv_signs: signs,
        limiting: false,
    })
}

fn fan_sum(u: &PiecewiseLinear, fan: &CharacteristicFan) -> f64 {
    let d = crate::datum::InitialDatum::PiecewiseLinear(u.clone());
    fan.alternating_sum(&d)
}

/// `Σ (-1)^k u(y_k)` with exactly inverted linear pieces.
pub fn zd_piecewise_linear(u: &PiecewiseLinear, t: f64, x: f64) -> Result<f64> {
    let fan = pl_fan(u, t, x)?;
    Ok(fan_sum(u, &fan))
}

/// `u1 = ZD[1_{]-1,1[}](1, ·)`: the tent with breakpoints `-1, 1, 3`.
pub fn tent() -> PiecewiseLinear {
    PiecewiseLinear::new(vec![-1.0, 1.0, 3.0], vec![0.0, 1.0, 0.0]).expect("valid tent")
}

/// `|ZD[u1](s, x) − ZD[u0](1 + s, x)|`.
pub fn semigroup_gap_at(s: f64, x: f64) -> Result<f64> {
    Ok((zd_piecewise_linear(&tent(), s, x)? - zd_step(1.0 + s, x)).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupGap {
    pub x_witness: f64,
    pub gap: f64,
}

/// Largest gap over a grid on `[-2, 2s + 4]` that contains every breakpoint of
/// both profiles (the difference is piecewise linear, so this is the exact
/// maximum).
pub fn semigroup_gap(s: f64) -> Result<SemigroupGap> {
    if !(s > 0.0 && s < 1.0) {
        return Err(ZdError::InvalidArgument(format!(
            "semigroup gap needs 0 < s < 1, got {s}"
        )));
    }
    let mut xs = crate::io::linspace(-2.0, 2.0 * s + 4.0, 4001);
    xs.extend([-1.0, 1.0, 2.0 * s + 1.0, 3.0, 2.0 * s + 3.0]);
    let mut best = SemigroupGap {
        x_witness: f64::NAN,
        gap: -1.0,
    };
    for x in xs {
        let g = semigroup_gap_at(s, x)?;
        if g > best.gap {
            best = SemigroupGap { x_witness: x, gap: g };
        }
    }
    Ok(best)
}
