//! Verification checks shared by the test suite and `zd verify`.
//!
//! [`acceptance`] runs the eleven numbered acceptance criteria; [`invariants`]
//! runs the per-module property checks and the golden-fixture comparison.
//! Every check is seeded and returns a [`CheckResult`] rather than panicking,
//! so a report is always complete.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::characteristics::{self, critical_values, solve_fan, zd_grid, zd_pointwise, Characteristics};
use crate::closedforms::{self, step_kinks, zd_step};
use crate::datum::{Rational, Sampled};
use crate::error::Result;
use crate::io::{fmt_f64, linspace, CheckResult};
use crate::par::{self, Exec};
use crate::{bo_eps, hardy, quadrature, rational, InitialDatum, TestFunction, C64};

/// Times covered by the golden `zd_step` tables.
pub const FIXTURE_TIMES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 5.0];

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub fixtures: PathBuf,
    pub exec: Exec,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            fixtures: default_fixture_dir(),
            exec: Exec::Parallel,
        }
    }
}

/// `fixtures/` at the workspace root of this checkout.
pub fn default_fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// One numbered acceptance criterion and the checks it is made of.
#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<CheckResult>,
    pub elapsed_s: f64,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// One-line summary, `PASS A3 ...` / `FAIL A3 ...`.
    pub fn line(&self) -> String {
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                format!(
                    "{} {:.3e}/{:.0e}{}",
                    c.name,
                    c.value,
                    c.tolerance,
                    if c.passed { "" } else { " FAILED" }
                )
            })
            .collect();
        format!(
            "{} A{:<2} {:<42} [{:.1}s] {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed_s,
            parts.join("; ")
        )
    }
}

pub const TITLES: [&str; 11] = [
    "step profile reproduction",
    "rational vs characteristics",
    "Cauchy-Vandermonde determinant ratio",
    "linear system vs closed-form lambda",
    "maximum principle and one-sided bound",
    "weak and derivative pairing identities",
    "Hardy backend validation",
    "epsilon convergence trend",
    "semigroup violation",
    "non-weak-solution residual",
    "caustic self-consistency",
];

pub fn acceptance(opts: &SuiteOptions) -> Vec<Criterion> {
    (1..=11).map(|n| criterion(n, opts)).collect()
}

pub fn criterion(n: usize, opts: &SuiteOptions) -> Criterion {
    let start = Instant::now();
    let exec = opts.exec;
    let mut checks = match n {
        1 => a1_step(exec),
        2 => a2_rational(exec),
        3 => a3_cauchy_vandermonde(),
        4 => a4_lambda(exec),
        5 => a5_max_principle(exec),
        6 => a6_pairings(exec),
        7 => a7_hardy(exec),
        8 => a8_eps(exec),
        9 => a9_semigroup(),
        10 => a10_residual(),
        11 => a11_caustics(exec),
        _ => vec![fail(&format!("A{n}"), "no such criterion")],
    };
    let elapsed_s = start.elapsed().as_secs_f64();
    if let Some(budget) = runtime_budget(n) {
        checks.push(within(
            &format!("A{n} runtime_s"),
            elapsed_s,
            budget,
            "wall clock".into(),
        ));
    }
    Criterion {
        id: n,
        title: TITLES.get(n.wrapping_sub(1)).copied().unwrap_or("?"),
        checks,
        elapsed_s,
    }
}

fn runtime_budget(n: usize) -> Option<f64> {
    match n {
        1 => Some(10.0),
        2 => Some(5.0),
        7 => Some(60.0),
        8 => Some(300.0),
        _ => None,
    }
}

// ------------------------------------------------------------------ helpers

fn within(name: &str, value: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: value.is_finite() && value <= tolerance,
        value,
        tolerance,
        detail,
    }
}

fn fail(name: &str, detail: impl std::fmt::Display) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: false,
        value: f64::NAN,
        tolerance: f64::NAN,
        detail: detail.to_string(),
    }
}

/// Runs `f`, turning an error into a failed check named `name`.
fn guarded(name: &str, f: impl FnOnce() -> Result<Vec<CheckResult>>) -> Vec<CheckResult> {
    f().unwrap_or_else(|e| vec![fail(name, e)])
}

fn max_abs(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter()
        .fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) })
}

fn lorentz3() -> Rational {
    Rational::lorentzian(3.0)
}

fn unit_gaussian() -> InitialDatum {
    InitialDatum::gaussian(1.0, 7.0, 0.01)
}

/// A sum of three Gaussians with random signs, centres and widths, sampled on
/// `[-8, 8]`.
pub fn random_sampled(rng: &mut impl Rng) -> InitialDatum {
    let terms: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(0.4..1.0),
            )
        })
        .collect();
    let t2 = terms.clone();
    let s = Sampled::from_fn(
        move |y| terms.iter().map(|(a, c, w)| a * (-((y - c) / w).powi(2)).exp()).sum(),
        move |y| {
            t2.iter()
                .map(|(a, c, w)| -2.0 * a * (y - c) / (w * w) * (-((y - c) / w).powi(2)).exp())
                .sum()
        },
        -8.0,
        8.0,
        1601,
    )
    .expect("finite samples");
    InitialDatum::SampledC1(s)
}

/// Random smooth bump with support inside `[lo, hi]`.
pub fn random_bump(rng: &mut impl Rng, lo: f64, hi: f64) -> TestFunction {
    let w = rng.random_range(0.5..(0.5 * (hi - lo)).min(4.0));
    let a = rng.random_range(lo..hi - w);
    let amp = rng.random_range(0.5..3.0);
    TestFunction::bump(a, a + w, amp).expect("valid bump")
}

/// Test functions for the ε sweep on the mollified step.
pub fn sweep_bumps() -> Vec<TestFunction> {
    [(1.0, 2.2), (-1.5, 0.5), (-2.0, 3.0)]
        .iter()
        .map(|&(a, b)| TestFunction::bump(a, b, 1.0).expect("valid bump"))
        .collect()
}

/// Mollified unit step used by the ε sweep.
pub fn sweep_datum() -> InitialDatum {
    InitialDatum::unit_step().mollify(0.1).expect("positive delta")
}

/// Random `(t, x)` with `|t| ≤ 3`, `|x| ≤ 8`, at least `gap` away from every
/// caustic of `d` at time `t`.
fn off_caustic_samples(d: &InitialDatum, n: usize, gap: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let t: f64 = rng.random_range(-3.0..3.0);
        let x = rng.random_range(-8.0..8.0);
        if t.abs() < 1e-2 {
            continue;
        }
        if critical_values(d, t)?.distance(x) >= gap {
            out.push((t, x));
        }
    }
    Ok(out)
}

// --------------------------------------------------------------- acceptance

fn a1_step(exec: Exec) -> Vec<CheckResult> {
    guarded("A1", || {
        let delta = 1e-3;
        let d = InitialDatum::unit_step().mollify(delta)?;
        let mut out = Vec::new();
        for t in [0.5, 1.0, 2.0] {
            let grid = linspace(-2.0, 2.0 * t + 2.0, 400);
            let field = zd_grid(&d, t, &grid, exec)?;
            let kinks = step_kinks(t);
            let err = max_abs(
                grid.iter()
                    .zip(&field.values)
                    .filter(|(x, _)| kinks.iter().all(|k| (*x - k).abs() > 5.0 * delta))
                    .map(|(&x, v)| v - zd_step(t, x)),
            );
            out.push(within(
                &format!("t={t}"),
                err,
                1e-2,
                format!("sup |ZD - step table| on [-2, {}]", 2.0 * t + 2.0),
            ));
        }
        Ok(out)
    })
}

fn a2_rational(exec: Exec) -> Vec<CheckResult> {
    guarded("A2", || {
        let r = lorentz3();
        let d = InitialDatum::Rational(r.clone());
        let pts = off_caustic_samples(&d, 1000, 1e-3, 2)?;
        let errs = par::map(exec, &pts, |&(t, x)| -> Result<f64> {
            Ok(rational::zd_rational(&r, t, x)? - zd_pointwise(&d, t, x)?)
        });
        let err = max_abs(errs.into_iter().collect::<Result<Vec<_>>>()?);
        Ok(vec![within(
            "sup_diff",
            err,
            1e-8,
            "3/(1+y²), 1000 points, seed 2".into(),
        )])
    })
}

/// `det[z_α, 1/(z_α − p_j)] / det[1, 1/(z_α − p_j)]` by full-pivot LU.
pub fn determinant_ratio(z: &[C64], p: &[C64]) -> C64 {
    let n = z.len();
    let build = |first: &dyn Fn(C64) -> C64| {
        DMatrix::<C64>::from_fn(n, n, |a, j| if j == 0 { first(z[a]) } else { 1.0 / (z[a] - p[j - 1]) })
    };
    let num = build(&|za| za).full_piv_lu().determinant();
    let den = build(&|_| C64::new(1.0, 0.0)).full_piv_lu().determinant();
    num / den
}

fn a3_cauchy_vandermonde() -> Vec<CheckResult> {
    guarded("A3", || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst = 0.0f64;
        let mut count = 0;
        while count < 200 {
            let m = rng.random_range(1..=6);
            let mut draw = || C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let z: Vec<C64> = (0..=m).map(|_| draw()).collect();
            let p: Vec<C64> = (0..m).map(|_| draw()).collect();
            // well-separated nodes keep the oracle itself accurate
            let all: Vec<C64> = z.iter().chain(&p).copied().collect();
            let sep = all
                .iter()
                .enumerate()
                .flat_map(|(i, a)| all[i + 1..].iter().map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            if sep < 0.1 {
                continue;
            }
            let got = rational::cauchy_vandermonde_ratio(&z, &p)?;
            let want = determinant_ratio(&z, &p);
            worst = worst.max((got - want).norm() / want.norm().max(1e-300));
            count += 1;
        }
        Ok(vec![within(
            "rel_err",
            worst,
            1e-9,
            "200 instances, M ≤ 6, node separation ≥ 0.1, seed 3".into(),
        )])
    })
}

fn a4_lambda(exec: Exec) -> Vec<CheckResult> {
    guarded("A4", || {
        let r = lorentz3();
        let d = InitialDatum::Rational(r.clone());
        let pts = off_caustic_samples(&d, 1000, 1e-3, 2)?;
        let pole_sum: f64 = r.poles().iter().map(|p| 2.0 * p.re).sum();
        let rows = par::map(exec, &pts, |&(t, x)| -> Result<(f64, f64)> {
            let sys = rational::lambda_system(&r, t, x)?;
            let direct = rational::lambda_direct(&r, t, x)?;
            let cl = rational::classify_roots(&r, t, x)?;
            let root = (cl.root_sum - (x + pole_sum)).norm() / (1.0 + x.abs());
            Ok(((sys.lambda - direct).norm(), root))
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(vec![
            within(
                "lambda_diff",
                max_abs(rows.iter().map(|r| r.0)),
                1e-8,
                "criterion-2 sample".into(),
            ),
            within(
                "root_sum",
                max_abs(rows.iter().map(|r| r.1)),
                1e-9,
                "|Σy − x − Σ2Re p| / (1+|x|)".into(),
            ),
        ])
    })
}

fn a5_max_principle(exec: Exec) -> Vec<CheckResult> {
    guarded("A5", || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<InitialDatum> = (0..20).map(|_| random_sampled(&mut rng)).collect();
        let seeds: Vec<u64> = (0..20).map(|_| rng.random()).collect();
        let rows = par::map_range(exec, data.len(), |i| -> Result<(f64, f64)> {
            let d = &data[i];
            let (lo, hi) = d.extrema();
            let mut rng = ChaCha8Rng::seed_from_u64(seeds[i]);
            let mut range_violation = 0.0f64;
            let mut done = 0;
            while done < 1000 {
                let t = rng.random_range(-3.0..3.0);
                let x = rng.random_range(-12.0..12.0);
                let v = match zd_pointwise(d, t, x) {
                    Ok(v) => v,
                    Err(e) if e.is_caustic() => continue,
                    Err(e) => return Err(e),
                };
                range_violation = range_violation.max(lo - v).max(v - hi);
                done += 1;
            }
            let reach = 2.0 * 2.0 * lo.abs().max(hi.abs());
            let mut lip = f64::NEG_INFINITY;
            for t in [0.5, 1.0, 2.0] {
                let xs = linspace(-9.0 - reach, 9.0 + reach, 301);
                let f = Characteristics::new(d).at(t)?.grid(&xs, Exec::Sequential)?;
                for a in 0..xs.len() {
                    for b in a + 1..xs.len() {
                        lip = lip.max(f.values[b] - f.values[a] - (xs[b] - xs[a]) / (2.0 * t));
                    }
                }
            }
            Ok((range_violation, lip))
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let range = rows.iter().map(|r| r.0).fold(0.0, f64::max);
        let lip = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        Ok(vec![
            within("range_excess", range, 1e-9, "20 data × 1000 (t,x), seed 5".into()),
            within(
                "lipschitz_excess",
                lip,
                1e-6,
                "max ZD(x₂)−ZD(x₁)−(x₂−x₁)/2t over all grid pairs".into(),
            ),
        ])
    })
}

fn a6_pairings(exec: Exec) -> Vec<CheckResult> {
    guarded("A6", || {
        let d = unit_gaussian();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cases: Vec<(f64, TestFunction)> = (0..20)
            .map(|k| ([0.5, 2.0][k % 2], random_bump(&mut rng, -3.0, 6.0)))
            .collect();
        let rows = par::map(exec, &cases, |(t, phi)| -> Result<(f64, f64)> {
            let t = *t;
            let map = Characteristics::new(&d).at(t)?;
            let (a, b) = phi.support();
            let scale = 1.0 + phi.sup_norm();
            let lhs = map.integrate_against(|x| phi.eval(x), a, b, 1e-11)?;
            let weak = (lhs - characteristics::weak_pairing(&d, t, phi)?).abs() / scale;
            let dlhs = -2.0 * t * map.integrate_against(|x| phi.deriv(x), a, b, 1e-11)?;
            let drhs = phi.integral()? - characteristics::pushforward_pairing(&d, t, phi)?;
            Ok((weak, (dlhs - drhs).abs() / scale))
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(vec![
            within(
                "weak",
                max_abs(rows.iter().map(|r| r.0)),
                1e-4,
                "exp(-y²), t ∈ {0.5, 2}, 20 bumps, seed 6".into(),
            ),
            within(
                "derivative",
                max_abs(rows.iter().map(|r| r.1)),
                1e-4,
                "−2t∫ZDφ′ vs ∫φ − ∫φ(y+2tu₀)".into(),
            ),
        ])
    })
}

fn a7_hardy(exec: Exec) -> Vec<CheckResult> {
    guarded("A7", || {
        let mut t0 = 0.0f64;
        for d in [InitialDatum::Rational(Rational::lorentzian(1.0)), unit_gaussian()] {
            let xs = linspace(-3.0, 3.0, 13);
            let tr = hardy::boundary_trace(&d, 0.0, &xs, 0.1, exec)?;
            for (x, v) in xs.iter().zip(&tr.values) {
                t0 = t0.max((v - hardy::poisson_smooth(|s| d.eval_unchecked(s), *x, 0.1, 1e-12)?).abs());
            }
        }
        let r = Rational::lorentzian(1.0);
        let (t, sigma) = (0.1, 0.05);
        let xs = linspace(-3.0, 3.0, 61);
        let tr = hardy::boundary_trace(&InitialDatum::Rational(r.clone()), t, &xs, sigma, exec)?;
        let want = par::map(exec, &xs, |&x| {
            hardy::poisson_smooth(|s| rational::zd_rational(&r, t, s).unwrap_or(f64::NAN), x, sigma, 1e-10)
        });
        let mut err = 0.0f64;
        for (v, w) in tr.values.iter().zip(want) {
            err = err.max((v - w?).abs());
        }
        Ok(vec![
            within("t0_poisson", t0, 1e-6, "1/(1+y²) and exp(-y²), σ = 0.1".into()),
            within(
                "smoothed_rational",
                err,
                3e-2,
                format!("1/(1+y²), t = {t}, σ = {sigma}, M = {}", hardy::DEFAULT_MODES),
            ),
        ])
    })
}

fn a8_eps(exec: Exec) -> Vec<CheckResult> {
    guarded("A8", || {
        let base = bo_eps::EpsRunConfig::new(sweep_datum(), 0.2, vec![]);
        let eps = [0.2, 0.1, 0.05];
        let phis = sweep_bumps();
        let rows = bo_eps::eps_sweep(&base, 0.5, &eps, &phis, exec)?;
        let mut out = Vec::new();
        for (i, phi) in phis.iter().enumerate() {
            let g: Vec<f64> = eps
                .iter()
                .map(|e| {
                    rows.iter()
                        .find(|r| r.epsilon == *e && r.phi_id == i)
                        .map_or(f64::NAN, |r| r.gap)
                })
                .collect();
            let ratio = (g[1] / g[0]).max(g[2] / g[1]);
            let (a, b) = phi.support();
            out.push(CheckResult {
                name: format!("phi{i}_trend"),
                passed: ratio < 1.0,
                value: ratio,
                tolerance: 1.0,
                detail: format!(
                    "bump on [{a}, {b}]: gaps {} at ε = 0.2, 0.1, 0.05",
                    g.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
                ),
            });
        }
        let drift = rows.iter().map(|r| r.l2_drift).fold(0.0, f64::max);
        out.push(within(
            "l2_drift",
            drift,
            1e-6,
            "mollified step δ = 0.1, t = 0.5, 8192 modes".into(),
        ));
        Ok(out)
    })
}

fn a9_semigroup() -> Vec<CheckResult> {
    guarded("A9", || {
        let g = closedforms::semigroup_gap_at(0.5, 1.5)?;
        let gaps: Vec<f64> = (1..=6)
            .map(|k| closedforms::semigroup_gap(0.5f64.powi(k)).map(|g| g.gap))
            .collect::<Result<_>>()?;
        let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
        // gap(s) / s bounded forces gap → 0; on the tent the maximum is s/(1+s)
        let slope = (1..=6).zip(&gaps).map(|(k, g)| g / 0.5f64.powi(k)).fold(0.0, f64::max);
        Ok(vec![
            within("gap_s0.5_x1.5", (g - 1.0 / 6.0).abs(), 1e-9, format!("gap = {g:.5}")),
            CheckResult {
                name: "gap_to_zero".into(),
                passed: decreasing && slope <= 1.0,
                value: slope,
                tolerance: 1.0,
                detail: format!(
                    "max over x of gap at s = 2^-k, k = 1..6: {}",
                    gaps.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>().join(", ")
                ),
            },
        ])
    })
}

/// Windows used for the residual comparison: inside the three-branch
/// component and inside the single-branch one, same width.
pub const RESIDUAL_WINDOWS: [(f64, f64); 2] = [(2.3, 3.7), (-1.0, 0.4)];
pub const RESIDUAL_DT: f64 = 0.05;

fn a10_residual() -> Vec<CheckResult> {
    guarded("A10", || {
        let d = unit_gaussian();
        let r1 = characteristics::burgers_weak_residual(&d, 2.0, RESIDUAL_WINDOWS[0], RESIDUAL_DT)?.abs();
        let r0 = characteristics::burgers_weak_residual(&d, 2.0, RESIDUAL_WINDOWS[1], RESIDUAL_DT)?.abs();
        let ratio = r0 / r1;
        Ok(vec![CheckResult {
            name: "ratio_inverse".into(),
            passed: r1 > 10.0 * r0,
            value: ratio,
            tolerance: 0.1,
            detail: format!(
                "ℓ=1 window {:?}: {r1:.3e}; ℓ=0 window {:?}: {r0:.3e}",
                RESIDUAL_WINDOWS[0], RESIDUAL_WINDOWS[1]
            ),
        }])
    })
}

fn a11_caustics(exec: Exec) -> Vec<CheckResult> {
    guarded("A11", || {
        let d = unit_gaussian();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let probes: Vec<(f64, f64)> = (0..1000)
            .map(|_| (rng.random_range(-3.0..3.0), rng.random_range(-6.0..6.0)))
            .collect();
        let rows = par::map(exec, &probes, |&(t, x)| -> Result<Option<bool>> {
            let set = critical_values(&d, t)?;
            let Some(ell) = set.ell_at(x) else { return Ok(None) };
            let fan = solve_fan(&d, t, x)?;
            Ok(Some(fan.ell == ell && fan.roots.len() == 2 * ell + 1))
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let skipped = rows.iter().filter(|r| r.is_none()).count();
        let bad = rows.iter().filter(|r| **r == Some(false)).count();
        Ok(vec![within(
            "mismatches",
            bad as f64,
            0.0,
            format!("exp(-y²), 1000 probes, {skipped} on caustics, seed 11"),
        )])
    })
}

// --------------------------------------------------------------- invariants

/// Groups of [`invariants`], selectable by name.
pub const INVARIANT_GROUPS: [&str; 7] = [
    "datum",
    "characteristics",
    "rational",
    "hardy",
    "bo_eps",
    "closedforms",
    "fixtures",
];

pub fn invariants(opts: &SuiteOptions) -> Vec<CheckResult> {
    invariant_groups(opts, &INVARIANT_GROUPS)
}

/// Runs the named groups in the order given; unknown names yield a failed check.
pub fn invariant_groups(opts: &SuiteOptions, groups: &[&str]) -> Vec<CheckResult> {
    let exec = opts.exec;
    groups
        .iter()
        .flat_map(|g| match *g {
            "datum" => inv_datum(),
            "characteristics" => inv_characteristics(exec),
            "rational" => inv_rational(),
            "hardy" => inv_hardy(exec),
            "bo_eps" => inv_bo_eps(),
            "closedforms" => inv_closedforms(exec),
            "fixtures" => check_fixtures(&opts.fixtures),
            other => vec![fail(
                other,
                format!("unknown group; expected one of {INVARIANT_GROUPS:?}"),
            )],
        })
        .collect()
}

fn inv_datum() -> Vec<CheckResult> {
    guarded("datum", || {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut imag = 0.0f64;
        for _ in 0..10 {
            let n = rng.random_range(1..=4);
            let poles = (0..n)
                .map(|_| C64::new(rng.random_range(-3.0..3.0), rng.random_range(0.3..2.0)))
                .collect();
            let res = (0..n)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let r = Rational::new(poles, res)?;
            for _ in 0..100 {
                imag = imag.max(r.eval_complex(C64::new(rng.random_range(-10.0..10.0), 0.0)).im.abs());
            }
        }
        let mut fd = 0.0f64;
        for d in [
            unit_gaussian(),
            InitialDatum::Rational(lorentz3()),
            random_sampled(&mut rng),
        ] {
            for _ in 0..200 {
                let y = rng.random_range(-5.0..5.0);
                let h = 1e-5;
                let approx = (d.eval(y + h)? - d.eval(y - h)?) / (2.0 * h);
                let exact = d.eval_deriv(y)?;
                fd = fd.max((approx - exact).abs() / exact.abs().max(1.0));
            }
        }
        let step = InitialDatum::unit_step();
        let dist: Vec<f64> = (1..=8)
            .map(|k| {
                let delta = 0.5f64.powi(k);
                let m = step.mollify(delta)?;
                let pts = quadrature::breakpoints(-2.0, 2.0, [-1.0 - delta, -1.0, 1.0, 1.0 + delta]);
                Ok(quadrature::integrate_with_breaks(
                    |y| (m.eval_unchecked(y) - step.eval_unchecked(y)).powi(2),
                    &pts,
                    1e-14,
                )?
                .sqrt())
            })
            .collect::<Result<_>>()?;
        let worst_increase = if dist.iter().all(|d| *d > 0.0) {
            dist.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
        } else {
            f64::NAN
        };
        Ok(vec![
            within(
                "datum realness",
                imag,
                1e-12,
                "10 random rational data × 100 real y".into(),
            ),
            within(
                "datum derivative",
                fd,
                1e-6,
                "centered differences, h = 1e-5, relative to max(|u0'|, 1)".into(),
            ),
            within(
                "datum mollify monotone",
                worst_increase,
                0.0,
                format!(
                    "L² distance along δ = 2^-k: {}",
                    dist.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
                ),
            ),
        ])
    })
}

fn inv_characteristics(exec: Exec) -> Vec<CheckResult> {
    guarded("characteristics", || {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let data = [unit_gaussian(), random_sampled(&mut rng)];
        let probes: Vec<(usize, f64, f64)> = (0..1000)
            .map(|i| (i % 2, rng.random_range(-3.0..3.0), rng.random_range(-8.0..8.0)))
            .collect();
        let rows = par::map(exec, &probes, |&(k, t, x)| -> Result<Option<(bool, bool, f64)>> {
            let d = &data[k];
            let fan = match solve_fan(d, t, x) {
                Ok(f) => f,
                Err(e) if e.is_caustic() => return Ok(None),
                Err(e) => return Err(e),
            };
            let shape = fan.roots.len() % 2 == 1 && fan.roots.windows(2).all(|w| w[0] < w[1]) && fan.signs_alternate();
            let u: Vec<f64> = fan.roots.iter().map(|&y| d.eval_unchecked(y)).collect();
            let monotone = u.windows(2).all(|w| if t > 0.0 { w[0] >= w[1] } else { w[0] <= w[1] });
            let (lo, hi) = d.extrema();
            let v = fan.alternating_sum(d);
            Ok(Some((shape, monotone, (lo - v).max(v - hi))))
        });
        let rows: Vec<_> = rows
            .into_iter()
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let bad_shape = rows.iter().filter(|r| !r.0).count();
        let bad_mono = rows.iter().filter(|r| !r.1).count();
        let range = rows.iter().map(|r| r.2).fold(0.0, f64::max);
        let d = unit_gaussian();
        let mut sym = 0.0f64;
        for _ in 0..200 {
            let (t, x) = (rng.random_range(0.1..3.0), rng.random_range(-6.0..6.0));
            if let (Ok(a), Ok(b)) = (zd_pointwise(&d, t, x), zd_pointwise(&d, -t, -x)) {
                sym = sym.max((a - b).abs());
            }
        }
        Ok(vec![
            within(
                "characteristics fan shape",
                bad_shape as f64,
                0.0,
                format!("{} fans: odd, increasing, alternating", rows.len()),
            ),
            within(
                "characteristics branch order",
                bad_mono as f64,
                0.0,
                "u0 monotone along the fan".into(),
            ),
            within(
                "characteristics range",
                range,
                1e-9,
                "alternating sum within [min u0, max u0]".into(),
            ),
            within(
                "characteristics even symmetry",
                sym,
                1e-9,
                "ZD(−t,−x) = ZD(t,x) for exp(-y²)".into(),
            ),
        ])
    })
}

fn inv_rational() -> Vec<CheckResult> {
    guarded("rational", || {
        let r = Rational::new(
            vec![C64::new(-1.0, 0.5), C64::new(1.5, 0.8)],
            vec![C64::new(0.3, -0.6), C64::new(-0.2, -0.4)],
        )?;
        let d = InitialDatum::Rational(r.clone());
        let pts = off_caustic_samples(&d, 300, 1e-3, 23)?;
        let pole_sum: f64 = r.poles().iter().map(|p| 2.0 * p.re).sum();
        let (mut conj, mut root, mut lam) = (0.0f64, 0.0f64, 0.0f64);
        for &(t, x) in &pts {
            let cl = rational::classify_roots(&r, t, x)?;
            let mut lower: Vec<C64> = cl.lower_roots.clone();
            for u in &cl.upper_roots {
                let (i, dist) = lower
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (i, (l - u.conj()).norm()))
                    .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                conj = conj.max(dist);
                if i != usize::MAX {
                    lower.swap_remove(i);
                }
            }
            root = root.max((cl.root_sum - (x + pole_sum)).norm() / (1.0 + x.abs()));
            lam = lam.max((rational::lambda_system(&r, t, x)?.lambda - rational::lambda_direct(&r, t, x)?).norm());
        }
        Ok(vec![
            within(
                "rational conjugate pairs",
                conj,
                1e-9,
                "two-pole datum, 300 points".into(),
            ),
            within("rational root sum", root, 1e-9, "|Σy − x − Σ2Re p| / (1+|x|)".into()),
            within("rational lambda", lam, 1e-8, "system vs closed form".into()),
        ])
    })
}

fn inv_hardy(exec: Exec) -> Vec<CheckResult> {
    guarded("hardy", || {
        let d = InitialDatum::Rational(Rational::lorentzian(1.0));
        let op = hardy::HardyOperator::with_modes(&d, 1024)?;
        let t = 0.5;
        let h = 1e-3;
        let mut dbar = 0.0f64;
        for z in [C64::new(0.2, 0.3), C64::new(-1.0, 0.5), C64::new(1.5, 0.2)] {
            let f = |w: C64| op.pi_u(t, w);
            let fx = (f(z + h)? - f(z - h)?) / (2.0 * h);
            let fy = (f(z + C64::new(0.0, h))? - f(z - C64::new(0.0, h))?) / (2.0 * h);
            dbar = dbar.max((0.5 * (fx + C64::i() * fy)).norm() / (1.0 + fx.norm()));
        }
        let op = hardy::HardyOperator::with_modes(&d, 2048)?;
        let xs = linspace(-3.0, 3.0, 31);
        let tr: Vec<Vec<f64>> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&s| op.boundary_trace(0.1, &xs, s, exec).map(|f| f.values))
            .collect::<Result<_>>()?;
        let dist = |a: &[f64], b: &[f64]| max_abs(a.iter().zip(b).map(|(p, q)| p - q));
        let (d1, d2) = (dist(&tr[0], &tr[1]), dist(&tr[1], &tr[2]));
        Ok(vec![
            within(
                "hardy cauchy-riemann",
                dbar,
                1e-4,
                "|∂̄ pi_u| / (1 + |∂x pi_u|), 1/(1+y²), t = 0.5".into(),
            ),
            CheckResult {
                name: "hardy sigma refinement".into(),
                passed: d2 < d1,
                value: d2 / d1,
                tolerance: 1.0,
                detail: format!("sup distance σ 0.2→0.1: {d1:.3e}, 0.1→0.05: {d2:.3e}"),
            },
        ])
    })
}

fn inv_bo_eps() -> Vec<CheckResult> {
    guarded("bo_eps", || {
        let cfg = bo_eps::EpsRunConfig::new(sweep_datum(), 0.05, vec![0.25, 0.5]);
        let sol = bo_eps::run(&cfg)?;
        let m0 = sol.conserved[0].mean;
        let mean = max_abs(sol.conserved.iter().map(|c| c.mean - m0)) / m0.abs().max(1.0);

        let (eps, t) = (0.1, 0.2);
        let mut u = bo_eps::EpsRunConfig::new(sweep_datum(), eps, vec![t]);
        u.modes = 4096;
        let dt = u.cfl_dt();
        u.dt = Some(dt);
        let mut w = u.clone();
        w.epsilon = 1.0;
        w.datum_scale = 1.0 / eps;
        w.times = vec![eps * t];
        w.dt = Some(eps * dt);
        let (a, b) = (bo_eps::run(&u)?, bo_eps::run(&w)?);
        let scaling = max_abs(a.snapshots[0].iter().zip(&b.snapshots[0]).map(|(p, q)| p - eps * q));

        let mut coarse = bo_eps::EpsRunConfig::new(sweep_datum(), 0.1, vec![0.5]);
        coarse.modes = 4096;
        let mut fine = coarse.clone();
        fine.modes = 8192;
        let (c, f) = (bo_eps::run(&coarse)?, bo_eps::run(&fine)?);
        let doubling = max_abs(sweep_bumps().iter().map(|phi| c.pair(0, phi) - f.pair(0, phi)));
        Ok(vec![
            within("bo_eps l2 drift", sol.l2_drift(), 1e-6, "ε = 0.05, t ≤ 0.5".into()),
            within("bo_eps mean", mean, 1e-12, "relative change of ∫u".into()),
            within(
                "bo_eps scaling",
                scaling,
                1e-10,
                "u^ε(t) vs ε·w(εt), ε = 0.1, t = 0.2".into(),
            ),
            within(
                "bo_eps resolution doubling",
                doubling,
                1e-4,
                "4096 vs 8192 modes, ε = 0.1, t = 0.5".into(),
            ),
        ])
    })
}

fn inv_closedforms(exec: Exec) -> Vec<CheckResult> {
    guarded("closedforms", || {
        let xs = fixture_grid();
        let mut range = 0.0f64;
        let mut mass = 0.0f64;
        for t in FIXTURE_TIMES {
            let v: Vec<f64> = xs.iter().map(|&x| zd_step(t, x)).collect();
            range = range.max(max_abs(v.iter().map(|&z| (-z).max(z - 1.0).max(0.0))));
            let h = xs[1] - xs[0];
            let trap = h * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]));
            mass = mass.max((trap - 2.0).abs());
        }
        let delta = 1e-4;
        let d = InitialDatum::unit_step().mollify(delta)?;
        let mut agree = 0.0f64;
        for t in [0.5, 2.0] {
            let grid = linspace(-2.0, 2.0 * t + 2.0, 200);
            let f = zd_grid(&d, t, &grid, exec)?;
            let kinks = step_kinks(t);
            agree = agree.max(max_abs(
                grid.iter()
                    .zip(&f.values)
                    .filter(|(x, _)| kinks.iter().all(|k| (*x - k).abs() > 5.0 * delta))
                    .map(|(&x, v)| v - zd_step(t, x)),
            ));
        }
        Ok(vec![
            within("closedforms range", range, 0.0, "zd_step within [0, 1]".into()),
            within("closedforms mass", mass, 1e-9, "trapezoid on the fixture grid".into()),
            within(
                "closedforms mollified",
                agree,
                10.0 * delta.sqrt() + 1e-6,
                format!("δ = {delta}"),
            ),
        ])
    })
}

// ----------------------------------------------------------------- fixtures

pub fn fixture_grid() -> Vec<f64> {
    linspace(-3.0, 13.0, 1601)
}

pub fn fixture_name(t: f64) -> String {
    format!("zd_step_t{t}.csv")
}

/// `x,zd` table of the step profile at time `t`.
pub fn fixture_csv(t: f64) -> String {
    let mut s = String::from("x,zd\n");
    for x in fixture_grid() {
        s.push_str(&fmt_f64(x));
        s.push(',');
        s.push_str(&fmt_f64(zd_step(t, x)));
        s.push('\n');
    }
    s
}

pub fn write_fixtures(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    FIXTURE_TIMES
        .iter()
        .map(|&t| {
            let p = dir.join(fixture_name(t));
            std::fs::write(&p, fixture_csv(t))?;
            Ok(p)
        })
        .collect()
}

/// Byte comparison of every shipped table against a fresh evaluation.
pub fn check_fixtures(dir: &Path) -> Vec<CheckResult> {
    FIXTURE_TIMES
        .iter()
        .map(|&t| {
            let name = format!("fixture {}", fixture_name(t));
            let path = dir.join(fixture_name(t));
            let Ok(have) = std::fs::read_to_string(&path) else {
                return fail(&name, format!("cannot read {}", path.display()));
            };
            let want = fixture_csv(t);
            let bad = have.lines().zip(want.lines()).position(|(a, b)| a != b);
            let mismatch = match bad {
                Some(i) => Some(format!("first difference at line {}", i + 1)),
                None if have.lines().count() != want.lines().count() => Some("row count differs".into()),
                None => None,
            };
            CheckResult {
                name,
                passed: mismatch.is_none(),
                value: if mismatch.is_none() { 0.0 } else { 1.0 },
                tolerance: 0.0,
                detail: mismatch.unwrap_or_else(|| format!("{} matches", path.display())),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_oracle_small_case() {
        // M = 1: det[[z0, 1/(z0-p)], [z1, 1/(z1-p)]] / det[[1, ..], [1, ..]] = z0 + z1 - p
        let z = [C64::new(0.3, 0.1), C64::new(-1.0, 0.7)];
        let p = [C64::new(0.5, -0.4)];
        let r = determinant_ratio(&z, &p);
        assert!((r - (z[0] + z[1] - p[0])).norm() < 1e-14);
    }

    #[test]
    fn fixture_roundtrip() {
        let dir = std::env::temp_dir().join(format!("zd-fixtures-{}", std::process::id()));
        write_fixtures(&dir).unwrap();
        assert!(check_fixtures(&dir).iter().all(|c| c.passed));
        let p = dir.join(fixture_name(1.0));
        let s = std::fs::read_to_string(&p)
            .unwrap()
            .replacen("0.0000000000000000e0", "1.0000000000000000e0", 1);
        std::fs::write(&p, s).unwrap();
        let r = check_fixtures(&dir);
        assert!(!r[2].passed && r[2].name.contains("t1.csv"), "{r:?}");
        std::fs::remove_dir_all(&dir).ok();
    }
}
