//! Multivalued Burgers characteristics.
//!
//! For C¹ data the limit at `(t, x)` is the alternating sum
//! `Σ_k (-1)^k u0(y_k)` over the real roots `y_0 < … < y_{2ℓ}` of
//! `f_t(y) = y + 2t u0(y) = x`. Roots are bracketed on pieces where `f_t` is
//! monotone: the line is split at every critical point of `f_t`, and each piece
//! is additionally scanned at a pitch fine enough that `f_t'` cannot change
//! much within a cell.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::datum::InitialDatum;
use crate::error::{check_finite, Result, ZdError};
use crate::par::{self, Exec};
use crate::quadrature::{self, DEFAULT_ABS_TOL};
use crate::testfn::TestFunction;

pub const TOL_ROOT: f64 = 1e-12;
pub const TOL_MERGE: f64 = 1e-8;
pub const TOL_CAUSTIC: f64 = 1e-8;

/// Shift used to take the right limit at a caustic.
const CAUSTIC_SHIFT: f64 = 4.0 * TOL_CAUSTIC;

/// All real solutions of `y + 2t u0(y) = x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicFan {
    pub t: f64,
    pub x: f64,
    pub roots: Vec<f64>,
    pub ell: usize,
    /// Sign of `1 + 2t u0'(y_k)`; alternates `+, -, +, …` off caustics.
    pub deriv_signs: Vec<i8>,
    /// Set when `x` was on a caustic and this is the fan at `x⁺`.
    pub limiting: bool,
}

impl CharacteristicFan {
    /// `Σ (-1)^k u0(y_k)`.
    pub fn alternating_sum(&self, d: &InitialDatum) -> f64 {
        self.roots
            .iter()
            .enumerate()
            .map(|(k, &y)| {
                if k % 2 == 0 {
                    d.eval_unchecked(y)
                } else {
                    -d.eval_unchecked(y)
                }
            })
            .sum()
    }

    pub fn signs_alternate(&self) -> bool {
        self.deriv_signs
            .iter()
            .enumerate()
            .all(|(k, &s)| s == if k % 2 == 0 { 1 } else { -1 })
    }
}

/// Open interval of the complement of the caustic set, with its branch index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Component {
    pub lo: f64,
    pub hi: f64,
    pub ell: usize,
}

/// Critical values of `y ↦ y + 2t u0(y)` and the components of their
/// complement. Infinite component bounds serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausticSet {
    pub t: f64,
    pub values: Vec<f64>,
    pub components: Vec<Component>,
}

impl CausticSet {
    /// Distance from `x` to the nearest critical value.
    pub fn distance(&self, x: f64) -> f64 {
        self.values.iter().map(|v| (v - x).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Branch index at `x`, `None` within `TOL_CAUSTIC` of a critical value.
    pub fn ell_at(&self, x: f64) -> Option<usize> {
        if self.distance(x) <= TOL_CAUSTIC {
            return None;
        }
        self.components.iter().find(|c| x > c.lo && x < c.hi).map(|c| c.ell)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("caustic set serializes")
    }
}

/// Values of the limit on a grid at one time, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZdField {
    pub t: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Branch index per point when the backend knows it.
    pub ell: Vec<Option<usize>>,
    /// Points that hit a caustic (value is the right limit).
    pub caustic: Vec<bool>,
    pub backend: String,
}

impl ZdField {
    pub fn new(t: f64, grid: Vec<f64>, values: Vec<f64>, backend: &str) -> Self {
        let n = grid.len();
        Self {
            t,
            grid,
            values,
            ell: vec![None; n],
            caustic: vec![false; n],
            backend: backend.to_string(),
        }
    }

    /// CSV with header `x,value,ell,caustic_flag` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,value,ell,caustic_flag\n");
        for i in 0..self.grid.len() {
            let ell = self.ell[i].map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{}",
                crate::io::fmt_f64(self.grid[i]),
                crate::io::fmt_f64(self.values[i]),
                ell,
                u8::from(self.caustic[i])
            );
        }
        s
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max |self - other|` over points where `keep(x)` holds.
    pub fn sup_diff(&self, other: &ZdField, keep: impl Fn(f64) -> bool) -> f64 {
        self.grid
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .filter(|(x, _)| keep(**x))
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-datum bounds shared by every time slice.
#[derive(Debug, Clone)]
pub struct Characteristics<'a> {
    d: &'a InitialDatum,
    range: (f64, f64),
    deriv_bound: f64,
}

impl<'a> Characteristics<'a> {
    pub fn new(d: &'a InitialDatum) -> Self {
        let deriv_bound = if d.is_c1() { d.deriv_bound() } else { f64::INFINITY };
        Self {
            d,
            range: d.extrema(),
            deriv_bound,
        }
    }

    pub fn datum(&self) -> &'a InitialDatum {
        self.d
    }

    /// `(ess inf u0, ess sup u0)`.
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    fn linf(&self) -> f64 {
        self.range.0.abs().max(self.range.1.abs())
    }

    /// The characteristic map at time `t`.
    pub fn at(&self, t: f64) -> Result<FlowMap<'a>> {
        check_finite(t, "t")?;
        FlowMap::build(self, t)
    }
}

#[derive(Debug, Clone)]
enum Region {
    /// `f_t` is the identity (t = 0 or zero datum).
    Identity,
    /// `u0` varies only on `active`; constant `c` on each gap `(a, b, c)`.
    Compact {
        active: Vec<(f64, f64)>,
        gaps: Vec<(f64, f64, f64)>,
    },
    /// Rational data: roots lie within `reach` of `x`.
    Line { reach: f64 },
}

/// `f_t(y) = y + 2t u0(y)` with its critical points located.
#[derive(Debug, Clone)]
pub struct FlowMap<'a> {
    d: &'a InitialDatum,
    t: f64,
    pitch: f64,
    region: Region,
    crit: Vec<f64>,
    crit_values: Vec<f64>,
}

impl<'a> FlowMap<'a> {
    fn build(ch: &Characteristics<'a>, t: f64) -> Result<Self> {
        let d = ch.d;
        let identity = |d| FlowMap {
            d,
            t,
            pitch: 1.0,
            region: Region::Identity,
            crit: vec![],
            crit_values: vec![],
        };
        if t == 0.0 || d.is_zero() {
            return Ok(identity(d));
        }
        if matches!(d, InitialDatum::Step(_)) {
            return Err(ZdError::NeedsMollification);
        }
        let pitch = (d.feature_scale() / 4.0).min(1.0 / (8.0 * (1.0 + 2.0 * t.abs() * ch.deriv_bound)));
        let (region, crit_windows) = match d.active_intervals() {
            Some(active) => {
                let mut gaps = Vec::with_capacity(active.len() + 1);
                let mut left = f64::NEG_INFINITY;
                for &(a, b) in &active {
                    gaps.push((left, a, gap_value(d, left, a)));
                    left = b;
                }
                gaps.push((left, f64::INFINITY, gap_value(d, left, f64::INFINITY)));
                let windows = active.clone();
                (Region::Compact { active, gaps }, windows)
            }
            None => {
                let r = match d {
                    InitialDatum::Rational(r) => r.critical_radius(t),
                    _ => unreachable!("only rational data have unbounded active set"),
                };
                let reach = 2.0 * t.abs() * ch.linf() * (1.0 + 1e-12) + 1e-12;
                (Region::Line { reach }, vec![(-r, r)])
            }
        };
        let mut map = FlowMap {
            d,
            t,
            pitch,
            region,
            crit: Vec::new(),
            crit_values: Vec::new(),
        };
        for (a, b) in crit_windows {
            map.find_critical_points(a, b);
        }
        map.crit.sort_by(f64::total_cmp);
        map.crit.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * (1.0 + q.abs()));
        map.crit_values = map.crit.iter().map(|&c| map.f(c)).collect();
        Ok(map)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `f_t(y)`.
    pub fn f(&self, y: f64) -> f64 {
        y + 2.0 * self.t * self.d.eval_unchecked(y)
    }

    /// `f_t'(y) = 1 + 2t u0'(y)`.
    pub fn g(&self, y: f64) -> f64 {
        1.0 + 2.0 * self.t * self.d.deriv_unchecked(y)
    }

    pub fn critical_points(&self) -> &[f64] {
        &self.crit
    }

    /// Critical values sorted and merged within `TOL_MERGE`.
    pub fn critical_values(&self) -> Vec<f64> {
        let mut v = self.crit_values.clone();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|p, q| (*p - *q).abs() <= TOL_MERGE);
        v
    }

    /// Sign changes of `g` on `[a, b]`, refined by bisection. Endpoints where
    /// `g ≤ 0` from the inside count as well: `f_t` has a corner extremum there
    /// because `g = 1` on the adjacent constant gap.
    fn find_critical_points(&mut self, a: f64, b: f64) {
        let n = (((b - a) / self.pitch).ceil() as usize).max(1);
        let y = |i: usize| if i == n { b } else { a + (b - a) * i as f64 / n as f64 };
        let mut prev = self.g(a) > 0.0;
        if !prev && matches!(self.region, Region::Compact { .. }) {
            self.crit.push(a);
        }
        for i in 1..=n {
            let yi = y(i);
            let cur = self.g(yi) > 0.0;
            if cur != prev {
                let (mut l, mut r) = (y(i - 1), yi);
                while r - l > 1e-15 * (1.0 + l.abs().max(r.abs())) {
                    let m = 0.5 * (l + r);
                    if m <= l || m >= r {
                        break;
                    }
                    if (self.g(m) > 0.0) == prev {
                        l = m;
                    } else {
                        r = m;
                    }
                }
                self.crit.push(0.5 * (l + r));
            }
            prev = cur;
        }
        if !prev && matches!(self.region, Region::Compact { .. }) {
            self.crit.push(b);
        }
    }

    /// The caustic set at this time, with components labelled by a fan probe.
    pub fn caustic_set(&self) -> Result<CausticSet> {
        let values = self.critical_values();
        let mut probes = Vec::with_capacity(values.len() + 1);
        let mut bounds = Vec::with_capacity(values.len() + 1);
        if values.is_empty() {
            probes.push(0.0);
            bounds.push((f64::NEG_INFINITY, f64::INFINITY));
        } else {
            probes.push(values[0] - 1.0);
            bounds.push((f64::NEG_INFINITY, values[0]));
            for w in values.windows(2) {
                probes.push(0.5 * (w[0] + w[1]));
                bounds.push((w[0], w[1]));
            }
            let last = values[values.len() - 1];
            probes.push(last + 1.0);
            bounds.push((last, f64::INFINITY));
        }
        let mut components = Vec::with_capacity(probes.len());
        for (x, (lo, hi)) in probes.into_iter().zip(bounds) {
            let fan = self.fan_unchecked(x, false)?;
            components.push(Component { lo, hi, ell: fan.ell });
        }
        Ok(CausticSet {
            t: self.t,
            values,
            components,
        })
    }

    /// Nearest critical value to `x`.
    pub fn caustic_distance(&self, x: f64) -> f64 {
        self.crit_values
            .iter()
            .map(|v| (v - x).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// All real roots of `f_t(y) = x`. On a caustic returns `CausticHit`
    /// carrying the fan at `x⁺` and the value it gives.
    pub fn fan(&self, x: f64) -> Result<CharacteristicFan> {
        check_finite(x, "x")?;
        if self.caustic_distance(x) <= TOL_CAUSTIC {
            let mut xp = x + CAUSTIC_SHIFT * (1.0 + x.abs());
            // step past any cluster of nearby critical values
            while self.caustic_distance(xp) <= TOL_CAUSTIC {
                xp += CAUSTIC_SHIFT * (1.0 + x.abs());
            }
            let mut fan = self.fan_unchecked(xp, true)?;
            fan.x = x;
            let value = fan.alternating_sum(self.d);
            return Err(ZdError::CausticHit {
                t: self.t,
                x,
                fan: Some(Box::new(fan)),
                value: Some(value),
            });
        }
        self.fan_unchecked(x, false)
    }

    fn fan_unchecked(&self, x: f64, limiting: bool) -> Result<CharacteristicFan> {
        let mut roots = Vec::new();
        match &self.region {
            Region::Identity => roots.push(x),
            Region::Compact { active, gaps } => {
                for &(a, b, c) in gaps {
                    let y = x - 2.0 * self.t * c;
                    if y > a && y < b {
                        roots.push(y);
                    }
                }
                for &(a, b) in active {
                    self.roots_on(a, b, x, &mut roots);
                }
            }
            Region::Line { reach } => self.roots_on(x - reach, x + reach, x, &mut roots),
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|p, q| (*p - *q).abs() <= 1e-11 * (1.0 + q.abs()));
        if roots.len() % 2 == 0 {
            return Err(ZdError::Unsupported(format!(
                "found an even number ({}) of characteristic roots at t = {}, x = {x}; datum under-resolved",
                roots.len(),
                self.t
            )));
        }
        let deriv_signs = roots.iter().map(|&y| if self.g(y) > 0.0 { 1 } else { -1 }).collect();
        Ok(CharacteristicFan {
            t: self.t,
            x,
            ell: roots.len() / 2,
            roots,
            deriv_signs,
            limiting,
        })
    }

    /// Roots of `f_t - x` on `[a, b]`, split at critical points.
    fn roots_on(&self, a: f64, b: f64, x: f64, out: &mut Vec<f64>) {
        let lo = self.crit.partition_point(|&c| c <= a);
        let hi = self.crit.partition_point(|&c| c < b);
        let mut edges = Vec::with_capacity(hi - lo + 2);
        edges.push(a);
        edges.extend_from_slice(&self.crit[lo..hi]);
        edges.push(b);
        for w in edges.windows(2) {
            self.scan(w[0], w[1], x, out);
        }
        for e in [a, b] {
            if self.f(e) == x {
                out.push(e);
            }
        }
    }

    fn scan(&self, a: f64, b: f64, x: f64, out: &mut Vec<f64>) {
        if b <= a {
            return;
        }
        let n = (((b - a) / self.pitch).ceil() as usize).max(1);
        let y = |i: usize| if i == n { b } else { a + (b - a) * i as f64 / n as f64 };
        let mut yl = a;
        let mut fl = self.f(a) - x;
        for i in 1..=n {
            let yr = y(i);
            let fr = self.f(yr) - x;
            if (fl >= 0.0) != (fr >= 0.0) {
                out.push(self.refine(yl, yr, fl, x));
            }
            yl = yr;
            fl = fr;
        }
    }

    /// Safeguarded Newton inside a sign-change bracket.
    fn refine(&self, mut l: f64, mut r: f64, fl: f64, x: f64) -> f64 {
        let left_nonneg = fl >= 0.0;
        let mut y = 0.5 * (l + r);
        for _ in 0..200 {
            let fy = self.f(y) - x;
            if fy.abs() <= 0.01 * TOL_ROOT * (1.0 + x.abs()) {
                return y;
            }
            if (fy >= 0.0) == left_nonneg {
                l = y;
            } else {
                r = y;
            }
            if r - l <= 4.0 * f64::EPSILON * (1.0 + y.abs()) {
                break;
            }
            let g = self.g(y);
            let newton = y - fy / g;
            y = if g != 0.0 && newton > l && newton < r {
                newton
            } else {
                0.5 * (l + r)
            };
        }
        y
    }

    /// `ZD(t, x)`; on a caustic the right-limit value inside `CausticHit`.
    pub fn zd(&self, x: f64) -> Result<f64> {
        Ok(self.fan(x)?.alternating_sum(self.d))
    }

    /// `ZD(t, x)` and its branch index, taking right limits on caustics.
    pub fn zd_or_limit(&self, x: f64) -> Result<(f64, usize, bool)> {
        match self.fan(x) {
            Ok(fan) => Ok((fan.alternating_sum(self.d), fan.ell, false)),
            Err(ZdError::CausticHit {
                fan: Some(fan),
                value: Some(v),
                ..
            }) => Ok((v, fan.ell, true)),
            Err(e) => Err(e),
        }
    }

    pub fn grid(&self, grid: &[f64], exec: Exec) -> Result<ZdField> {
        let out = par::map(exec, grid, |&x| self.zd_or_limit(x));
        let mut field = ZdField::new(self.t, grid.to_vec(), Vec::with_capacity(grid.len()), "characteristics");
        for (i, r) in out.into_iter().enumerate() {
            let (v, ell, caustic) = r?;
            field.values.push(v);
            field.ell[i] = Some(ell);
            field.caustic[i] = caustic;
        }
        Ok(field)
    }

    /// `∫ ZD(t, x) w(x) dx` over `[lo, hi]`, split at caustics.
    pub fn integrate_against(&self, w: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        let pts = quadrature::breakpoints(lo, hi, self.crit_values.iter().copied());
        quadrature::integrate_with_breaks(
            |x| {
                let wx = w(x);
                if wx == 0.0 {
                    0.0
                } else {
                    self.zd_or_limit(x).map(|r| r.0).unwrap_or(f64::NAN) * wx
                }
            },
            &pts,
            tol,
        )
    }

    /// Window in `y` whose image under `f_t` can meet `[lo, hi]`, with the
    /// points the integrand may kink at.
    fn preimage_window(&self, lo: f64, hi: f64, linf: f64) -> Vec<f64> {
        let reach = 2.0 * self.t.abs() * linf;
        let (a, b) = (lo - reach, hi + reach);
        let mut extra: Vec<f64> = self.d.kinks();
        if let Some(active) = self.d.active_intervals() {
            extra.extend(active.iter().flat_map(|&(p, q)| [p, q]));
        }
        extra.extend(self.crit.iter().copied());
        extra.extend((1..32).map(|k| a + (b - a) * k as f64 / 32.0));
        quadrature::breakpoints(a, b, extra)
    }
}

/// Constant value of `u0` on a gap between active intervals.
fn gap_value(d: &InitialDatum, a: f64, b: f64) -> f64 {
    let y = match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (true, false) => a + 1.0,
        (false, true) => b - 1.0,
        (false, false) => 0.0,
    };
    d.eval_unchecked(y)
}

// ---------------------------------------------------------------- public API

/// Caustic set `K_t(u0)` with the branch index of every complementary interval.
pub fn critical_values(d: &InitialDatum, t: f64) -> Result<CausticSet> {
    Characteristics::new(d).at(t)?.caustic_set()
}

pub fn solve_fan(d: &InitialDatum, t: f64, x: f64) -> Result<CharacteristicFan> {
    Characteristics::new(d).at(t)?.fan(x)
}

/// `Σ (-1)^k u0(y_k(t, x))`.
pub fn zd_pointwise(d: &InitialDatum, t: f64, x: f64) -> Result<f64> {
    check_finite(x, "x")?;
    if t == 0.0 {
        return d.eval(x);
    }
    Characteristics::new(d).at(t)?.zd(x)
}

pub fn zd_grid(d: &InitialDatum, t: f64, grid: &[f64], exec: Exec) -> Result<ZdField> {
    if t == 0.0 {
        let values = grid.iter().map(|&x| d.eval(x)).collect::<Result<Vec<_>>>()?;
        let mut f = ZdField::new(0.0, grid.to_vec(), values, "characteristics");
        f.ell = vec![Some(0); grid.len()];
        return Ok(f);
    }
    Characteristics::new(d).at(t)?.grid(grid, exec)
}

/// `∫ φ(y + 2t u0(y)) u0(y) (1 + 2t u0'(y)) dy`, the grid-free value of
/// `∫ ZD(t) φ`.
pub fn weak_pairing(d: &InitialDatum, t: f64, phi: &TestFunction) -> Result<f64> {
    let ch = Characteristics::new(d);
    let (lo, hi) = phi.support();
    if t == 0.0 || d.is_zero() {
        let pts = quadrature::breakpoints(lo, hi, d.kinks());
        return quadrature::integrate_with_breaks(|y| phi.eval(y) * d.eval_unchecked(y), &pts, DEFAULT_ABS_TOL);
    }
    let map = ch.at(t)?;
    let pts = map.preimage_window(lo, hi, ch.linf());
    quadrature::integrate_with_breaks(
        |y| {
            let u = d.eval_unchecked(y);
            if u == 0.0 {
                return 0.0;
            }
            phi.eval(map.f(y)) * u * map.g(y)
        },
        &pts,
        DEFAULT_ABS_TOL,
    )
}

/// `∫ φ(y + 2t u0(y)) dy`, the pairing of `φ` with the push-forward of
/// Lebesgue measure. Defined for any bounded datum, steps included.
pub fn pushforward_pairing(d: &InitialDatum, t: f64, phi: &TestFunction) -> Result<f64> {
    let (lo, hi) = phi.support();
    let (mn, mx) = d.extrema();
    let reach = 2.0 * t.abs() * mn.abs().max(mx.abs());
    let (a, b) = (lo - reach, hi + reach);
    let mut extra = d.kinks();
    if let Some(active) = d.active_intervals() {
        extra.extend(active.iter().flat_map(|&(p, q)| [p, q]));
    }
    extra.extend((1..32).map(|k| a + (b - a) * k as f64 / 32.0));
    let pts = quadrature::breakpoints(a, b, extra);
    quadrature::integrate_with_breaks(|y| phi.eval(y + 2.0 * t * d.eval_unchecked(y)), &pts, DEFAULT_ABS_TOL)
}

/// Distributional Burgers residual `⟨∂_t u + ∂_x(u²), ψ⟩ / ∫χ` of the limit,
/// with `ψ(s, x) = χ(s) φ(x)` bumps on `[t - dt, t + dt] × window`.
///
/// Zero (to quadrature accuracy) where a single branch is active; bounded
/// away from zero on multi-branch components.
pub fn burgers_weak_residual(d: &InitialDatum, t: f64, window: (f64, f64), dt: f64) -> Result<f64> {
    let (a, b) = window;
    if !(dt > 0.0) {
        return Err(ZdError::InvalidArgument("dt must be positive".into()));
    }
    if d.is_zero() {
        return Ok(0.0);
    }
    let ch = Characteristics::new(d);
    let h = dt / 4.0;
    let (lo_t, hi_t) = (t - dt - 2.0 * h, t + dt + 2.0 * h);
    for k in 0..=8 {
        let s = lo_t + (hi_t - lo_t) * k as f64 / 8.0;
        let map = ch.at(s)?;
        if let Some(v) = map.critical_values().into_iter().find(|v| *v >= a && *v <= b) {
            return Err(ZdError::CausticHit {
                t: s,
                x: v,
                fan: None,
                value: None,
            });
        }
    }
    let phi = TestFunction::bump(a, b, 1.0)?;
    let chi = TestFunction::bump(t - dt, t + dt, 1.0)?;
    let tol = 1e-11;
    let moment = |s: f64| -> Result<f64> {
        let map = ch.at(s)?;
        map.integrate_against(|x| phi.eval(x), a, b, tol)
    };
    let flux = |s: f64| -> Result<f64> {
        let map = ch.at(s)?;
        let pts = quadrature::breakpoints(a, b, map.crit_values.iter().copied());
        quadrature::integrate_with_breaks(
            |x| {
                let u = map.zd_or_limit(x).map(|r| r.0).unwrap_or(f64::NAN);
                phi.deriv(x) * u * u
            },
            &pts,
            tol,
        )
    };
    let (gx, gw) = quadrature::gauss_legendre(10);
    let (mut num, mut den) = (0.0, 0.0);
    for (xi, wi) in gx.iter().zip(&gw) {
        let s = t + dt * xi;
        let w = wi * dt * chi.eval(s);
        let dfds =
            (moment(s - 2.0 * h)? - 8.0 * moment(s - h)? + 8.0 * moment(s + h)? - moment(s + 2.0 * h)?) / (12.0 * h);
        num += w * (dfds - flux(s)?);
        den += w;
    }
    Ok(num / den)
}
