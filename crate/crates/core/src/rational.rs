//! Closed form for rational data.
//!
//! With `u0 = P/Q`, `Q` monic of degree `2N`, the characteristic equation
//! `y + 2t u0(y) = x` is the polynomial equation `(y - x) Q(y) + 2t P(y) = 0`
//! of degree `2N + 1`. Its roots that move into the upper half-plane when `x`
//! does (real roots with `1 + 2t u0' > 0` and the roots with `Im > 0`) give the
//! Hardy-space coefficient
//!
//! ```text
//! λ(t, x) = (Σ_selected y − Σ_j p_j − x) / (2t),    ZD(t, x) = −2 Re λ.
//! ```

use nalgebra::{DMatrix, DVector};

use crate::characteristics::ZdField;
use crate::datum::{InitialDatum, Rational};
use crate::error::{check_finite, Result, ZdError};
use crate::par::{self, Exec};
use crate::C64;

/// Imaginary part below which a root counts as real, relative to `1 + |Re|`.
pub const REAL_TOL: f64 = 1e-9;
/// Roots closer than this are treated as repeated (caustic).
pub const REPEAT_TOL: f64 = 1e-8;
/// Imaginary shift used to cross-check the classification.
pub const SIGMA_SHIFT: f64 = 1e-6;

/// `(y − x) Q(y) + 2t P(y)` with ascending coefficients (`coeffs[k]`
/// multiplies `y^k`); monic of degree `2N + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    pub t: f64,
    pub x: C64,
    pub coeffs: Vec<C64>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Value and derivative by Horner's rule.
    pub fn eval_with_deriv(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.eval_with_deriv(z).0
    }

    fn newton(&self, mut z: C64, steps: usize) -> C64 {
        for _ in 0..steps {
            let (p, dp) = self.eval_with_deriv(z);
            if dp.norm() == 0.0 {
                break;
            }
            let dz = p / dp;
            if !dz.re.is_finite() || !dz.im.is_finite() {
                break;
            }
            z -= dz;
            if dz.norm() <= 1e-16 * (1.0 + z.norm()) {
                break;
            }
        }
        z
    }

    /// All roots: companion-matrix eigenvalues (Aberth iteration if the Schur
    /// decomposition does not converge), each polished by two Newton steps.
    pub fn roots(&self) -> Vec<C64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let raw = if self.coeffs.iter().all(|c| c.im == 0.0) {
            companion_roots(&self.coeffs).unwrap_or_else(|| aberth(self))
        } else {
            aberth(self)
        };
        raw.into_iter().map(|z| self.newton(z, 2)).collect()
    }
}

fn companion_roots(coeffs: &[C64]) -> Option<Vec<C64>> {
    let n = coeffs.len() - 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -coeffs[i].re;
    }
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Aberth–Ehrlich simultaneous iteration.
fn aberth(cp: &CharPoly) -> Vec<C64> {
    let n = cp.degree();
    let radius = 1.0 + cp.coeffs[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let (p, dp) = cp.eval_with_deriv(z[k]);
            let ratio = p / dp;
            let s: C64 = (0..n).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let w = ratio / (1.0 - ratio * s);
            if w.re.is_finite() && w.im.is_finite() {
                z[k] -= w;
                moved = moved.max(w.norm() / (1.0 + z[k].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

fn poly_mul_linear(p: &[C64], root: C64) -> Vec<C64> {
    // (y - root) * p(y), ascending coefficients
    let mut out = vec![C64::new(0.0, 0.0); p.len() + 1];
    for (k, &c) in p.iter().enumerate() {
        out[k + 1] += c;
        out[k] -= root * c;
    }
    out
}

/// `Q(y) = Π (y − p_j)(y − conj p_j)`, ascending.
pub fn q_poly(d: &Rational) -> Vec<C64> {
    let mut q = vec![C64::new(1.0, 0.0)];
    for p in d.poles() {
        q = poly_mul_linear(&q, *p);
        q = poly_mul_linear(&q, p.conj());
    }
    q
}

/// `P = u0 · Q`, ascending, degree at most `2N − 1`.
pub fn p_poly(d: &Rational) -> Vec<C64> {
    let n = d.degree();
    let mut p = vec![C64::new(0.0, 0.0); 2 * n.max(1)];
    let all: Vec<(C64, C64)> = d
        .poles()
        .iter()
        .zip(d.residues())
        .flat_map(|(p, c)| [(*p, *c), (p.conj(), c.conj())])
        .collect();
    for (i, &(_, c)) in all.iter().enumerate() {
        let mut term = vec![c];
        for (j, &(q, _)) in all.iter().enumerate() {
            if j != i {
                term = poly_mul_linear(&term, q);
            }
        }
        for (k, v) in term.into_iter().enumerate() {
            p[k] += v;
        }
    }
    p
}

pub fn char_poly(d: &Rational, t: f64, x: C64) -> CharPoly {
    let q = q_poly(d);
    let p = p_poly(d);
    let mut coeffs = poly_mul_linear(&q, x);
    for (k, v) in p.iter().enumerate() {
        coeffs[k] += 2.0 * t * v;
    }
    if x.im == 0.0 {
        // real data and real x: strip rounding noise
        for c in &mut coeffs {
            c.im = 0.0;
        }
    }
    CharPoly { t, x, coeffs }
}

/// Roots of the characteristic polynomial sorted by kind.
#[derive(Debug, Clone, PartialEq)]
pub struct RootClassification {
    pub real_roots: Vec<f64>,
    pub upper_roots: Vec<C64>,
    pub lower_roots: Vec<C64>,
    /// Real roots with `1 + 2t u0' > 0` together with `upper_roots`; `N + 1`
    /// of them.
    pub selected: Vec<C64>,
    /// Sum of all roots, for the root-sum relation.
    pub root_sum: C64,
}

impl RootClassification {
    pub fn ell(&self) -> usize {
        self.real_roots.len() / 2
    }
}

/// Computes and classifies all roots at real `x`. Each real root is followed
/// to `x + iσ` by Newton continuation and must move up exactly when it is
/// selected.
pub fn classify_roots(d: &Rational, t: f64, x: f64) -> Result<RootClassification> {
    check_finite(t, "t")?;
    check_finite(x, "x")?;
    let cp = char_poly(d, t, C64::new(x, 0.0));
    let roots = cp.roots();
    let root_sum: C64 = roots.iter().sum();
    let caustic = || ZdError::CausticHit {
        t,
        x,
        fan: None,
        value: None,
    };
    for (i, a) in roots.iter().enumerate() {
        for b in &roots[i + 1..] {
            if (a - b).norm() <= REPEAT_TOL * (1.0 + a.norm()) {
                return Err(caustic());
            }
        }
    }
    let real_poly = |y: f64| -> (f64, f64) {
        let (p, dp) = cp.eval_with_deriv(C64::new(y, 0.0));
        (p.re, dp.re)
    };
    let mut real_roots = Vec::new();
    let mut upper_roots = Vec::new();
    let mut lower_roots = Vec::new();
    for z in roots {
        if z.im.abs() <= REAL_TOL * (1.0 + z.re.abs()) {
            let mut y = z.re;
            for _ in 0..3 {
                let (p, dp) = real_poly(y);
                if dp == 0.0 {
                    break;
                }
                y -= p / dp;
            }
            real_roots.push(y);
        } else if z.im > 0.0 {
            upper_roots.push(z);
        } else {
            lower_roots.push(z);
        }
    }
    real_roots.sort_by(f64::total_cmp);
    if real_roots.len() % 2 == 0 || upper_roots.len() != lower_roots.len() {
        return Err(caustic());
    }
    let shifted = char_poly(d, t, C64::new(x, SIGMA_SHIFT));
    let mut selected = Vec::with_capacity(d.degree() + 1);
    for &y in &real_roots {
        let g = 1.0 + 2.0 * t * d.deriv_complex(C64::new(y, 0.0)).re;
        let moved = shifted.newton(C64::new(y, SIGMA_SHIFT / g), 4);
        if (g > 0.0) != (moved.im > 0.0) {
            return Err(caustic());
        }
        if g > 0.0 {
            selected.push(C64::new(y, 0.0));
        }
    }
    selected.extend(upper_roots.iter().copied());
    if selected.len() != d.degree() + 1 {
        return Err(caustic());
    }
    Ok(RootClassification {
        real_roots,
        upper_roots,
        lower_roots,
        selected,
        root_sum,
    })
}

/// `λ(t, x) = (Σ_selected y − Σ p_j − x) / (2t)`.
pub fn lambda_direct(d: &Rational, t: f64, x: f64) -> Result<C64> {
    if t == 0.0 {
        return Err(ZdError::InvalidArgument(
            "λ needs t ≠ 0; at t = 0 the limit is u0 itself".into(),
        ));
    }
    let cl = classify_roots(d, t, x)?;
    Ok(lambda_from(d, &cl, t, x))
}

fn lambda_from(d: &Rational, cl: &RootClassification, t: f64, x: f64) -> C64 {
    let s: C64 = cl.selected.iter().sum::<C64>() - d.poles().iter().sum::<C64>() - x;
    s / (2.0 * t)
}

/// Solution `(λ, μ_1..μ_N)` of
/// `λ + Σ_j μ_j / (z_k − p_j) = (z_k − x) / (2t)` over the selected roots.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSystem {
    pub lambda: C64,
    pub mu: Vec<C64>,
    pub nodes: Vec<C64>,
}

impl LambdaSystem {
    /// `max_k |u0(z_k) + λ + Σ μ_j/(z_k − p_j)|`: the numerator of the
    /// resolvent function must vanish at every selected root.
    pub fn numerator_residual(&self, d: &Rational) -> f64 {
        self.nodes
            .iter()
            .map(|&z| {
                let s: C64 = self.mu.iter().zip(d.poles()).map(|(m, p)| m / (z - p)).sum();
                (d.eval_complex(z) + self.lambda + s).norm()
            })
            .fold(0.0, f64::max)
    }
}

pub fn lambda_system(d: &Rational, t: f64, x: f64) -> Result<LambdaSystem> {
    if t == 0.0 {
        return Err(ZdError::InvalidArgument("the linear system needs t ≠ 0".into()));
    }
    let cl = classify_roots(d, t, x)?;
    let n = d.degree();
    let nodes = cl.selected;
    let m = DMatrix::<C64>::from_fn(n + 1, n + 1, |k, j| {
        if j == 0 {
            C64::new(1.0, 0.0)
        } else {
            1.0 / (nodes[k] - d.poles()[j - 1])
        }
    });
    let rhs = DVector::<C64>::from_iterator(n + 1, nodes.iter().map(|z| (z - x) / (2.0 * t)));
    let sol = m
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
        .ok_or(ZdError::CausticHit {
            t,
            x,
            fan: None,
            value: None,
        })?;
    Ok(LambdaSystem {
        lambda: sol[0],
        mu: sol.iter().skip(1).copied().collect(),
        nodes,
    })
}

/// Ratio of the determinants with first column `z_α` and first column `1`
/// (remaining columns `1/(z_α − p_j)`), which equals `Σ z_α − Σ p_j`.
pub fn cauchy_vandermonde_ratio(z: &[C64], p: &[C64]) -> Result<C64> {
    if z.len() != p.len() + 1 {
        return Err(ZdError::InvalidArgument(format!(
            "need M + 1 nodes for M poles, got {} and {}",
            z.len(),
            p.len()
        )));
    }
    let all: Vec<C64> = z.iter().chain(p).copied().collect();
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            if (a - b).norm() <= 1e-14 * (1.0 + a.norm()) {
                return Err(ZdError::InvalidArgument(format!("coincident nodes at {a}")));
            }
        }
    }
    Ok(z.iter().sum::<C64>() - p.iter().sum::<C64>())
}

/// `ZD(t, x) = −2 Re λ(t, x)`; `u0(x)` at `t = 0`.
pub fn zd_rational(d: &Rational, t: f64, x: f64) -> Result<f64> {
    check_finite(x, "x")?;
    if t == 0.0 {
        return InitialDatum::Rational(d.clone()).eval(x);
    }
    Ok(-2.0 * lambda_direct(d, t, x)?.re)
}

/// `Σ (−1)^k u0(y_k)` over the real roots of the polynomial.
pub fn zd_alternating(d: &Rational, t: f64, x: f64) -> Result<f64> {
    let cl = classify_roots(d, t, x)?;
    Ok(cl
        .real_roots
        .iter()
        .enumerate()
        .map(|(k, &y)| {
            let u = d.eval_complex(C64::new(y, 0.0)).re;
            if k % 2 == 0 {
                u
            } else {
                -u
            }
        })
        .sum())
}

/// Grid version; caustic points take the value at `x⁺` and are flagged.
pub fn zd_rational_grid(d: &Rational, t: f64, grid: &[f64], exec: Exec) -> Result<ZdField> {
    let out = par::map(exec, grid, |&x| -> Result<(f64, Option<usize>, bool)> {
        if t == 0.0 {
            return Ok((zd_rational(d, 0.0, x)?, Some(0), false));
        }
        match classify_roots(d, t, x) {
            Ok(cl) => Ok((-2.0 * lambda_from(d, &cl, t, x).re, Some(cl.ell()), false)),
            Err(e) if e.is_caustic() => {
                let mut xp = x;
                for _ in 0..8 {
                    xp += 4e-8 * (1.0 + x.abs());
                    if let Ok(cl) = classify_roots(d, t, xp) {
                        return Ok((-2.0 * lambda_from(d, &cl, t, xp).re, Some(cl.ell()), true));
                    }
                }
                Err(e)
            }
            Err(e) => Err(e),
        }
    });
    let mut field = ZdField::new(t, grid.to_vec(), Vec::with_capacity(grid.len()), "rational");
    for (i, r) in out.into_iter().enumerate() {
        let (v, ell, caustic) = r?;
        field.values.push(v);
        field.ell[i] = ell;
        field.caustic[i] = caustic;
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz(a: f64) -> Rational {
        Rational::lorentzian(a)
    }

    #[test]
    fn char_poly_of_lorentzian() {
        let (t, x) = (0.7, 1.3);
        let cp = char_poly(&lorentz(1.0), t, C64::new(x, 0.0));
        let want = [2.0 * t - x, 1.0, -x, 1.0];
        for (c, w) in cp.coeffs.iter().zip(want) {
            assert!((c - w).norm() < 1e-14, "{:?}", cp.coeffs);
        }
        let cp = char_poly(&lorentz(1.0), 0.0, C64::new(x, 0.0));
        assert!((cp.coeffs[0] + x).norm() < 1e-15);
    }

    #[test]
    fn cubic_oracle() {
        // y³ + y + 0.2 = 0 has the single real root -0.19282993096
        let d = lorentz(1.0);
        let cl = classify_roots(&d, 0.1, 0.0).unwrap();
        assert_eq!(cl.real_roots.len(), 1);
        assert!((cl.real_roots[0] + 0.192_829_930_96).abs() < 1e-10);
        assert_eq!(cl.selected.len(), 2);
        let z = zd_rational(&d, 0.1, 0.0).unwrap();
        assert!((z - 0.964_149_654_8).abs() < 1e-9, "{z}");
        assert!((z - zd_alternating(&d, 0.1, 0.0).unwrap()).abs() < 1e-12);
        let sys = lambda_system(&d, 0.1, 0.0).unwrap();
        assert!((sys.lambda - lambda_direct(&d, 0.1, 0.0).unwrap()).norm() < 1e-10);
        assert!(sys.numerator_residual(&d) < 1e-8);
        assert_eq!(zd_rational(&d, 0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn t_zero_roots_factor() {
        let d = lorentz(1.0);
        let cl = classify_roots(&d, 0.0, 0.4).unwrap();
        assert_eq!(cl.real_roots.len(), 1);
        assert!((cl.real_roots[0] - 0.4).abs() < 1e-14);
        assert!((cl.upper_roots[0] - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn three_real_roots_inside_fold() {
        // f_2(y) = y + 3/(1+y²) folds over roughly ]2.41, 3.09[
        let d = lorentz(0.75);
        let cl = classify_roots(&d, 2.0, 2.5).unwrap();
        assert_eq!(cl.real_roots.len(), 3);
        assert_eq!(cl.selected.len(), 2);
        // the selected real roots are the even-indexed ones
        assert!((cl.selected[0].re - cl.real_roots[0]).abs() < 1e-14);
        assert!((cl.selected[1].re - cl.real_roots[2]).abs() < 1e-14);
    }

    #[test]
    fn determinant_ratio_examples() {
        let c = |re: f64| C64::new(re, 0.0);
        assert_eq!(cauchy_vandermonde_ratio(&[c(0.0), c(1.0)], &[c(2.0)]).unwrap(), c(-1.0));
        assert_eq!(cauchy_vandermonde_ratio(&[c(1.0), c(2.0)], &[c(3.0)]).unwrap(), c(0.0));
        assert!(cauchy_vandermonde_ratio(&[c(1.0), c(2.0)], &[c(2.0)]).is_err());
    }

    #[test]
    fn far_field_decays() {
        let d = lorentz(1.0);
        assert!(zd_rational(&d, 0.5, 1e3).unwrap().abs() < 1e-5);
        let sys = lambda_system(&d, 0.5, 1e3).unwrap();
        let sys2 = lambda_system(&d, 0.5, 10.0).unwrap();
        assert!(sys.mu[0].norm() < sys2.mu[0].norm());
    }
}
