//! Initial data `u0 ∈ L² ∩ L^∞` in every representation the backends use.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Result, ZdError};
use crate::quadrature::{self, gauss_legendre};
use crate::C64;

/// Imaginary-part floor below which a pole counts as sitting on the real line.
const POLE_IM_MIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialDatum {
    SampledC1(Sampled),
    Rational(Rational),
    Step(Step),
    PiecewiseLinear(PiecewiseLinear),
    Mollified(Mollified),
}

/// Cubic-Hermite interpolant of samples of a C¹ function; zero outside
/// `[-decay_bound, decay_bound]` and outside the node range.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    nodes: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    decay_bound: f64,
}

/// `u0(y) = Σ c_j/(y - p_j) + conj(c_j)/(y - conj(p_j))` with `Im p_j > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rational {
    poles: Vec<C64>,
    residues: Vec<C64>,
}

/// `height` on the open interval `]left, right[`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub left: f64,
    pub right: f64,
    pub height: f64,
}

/// Linear interpolation between `(breakpoints[i], values[i])`, zero outside
/// `[breakpoints[0], breakpoints[n-1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

/// Convolution of `base` with the biweight kernel `K(s) = 15/16 (1 - s²)²`
/// scaled to half-width `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mollified {
    base: Box<InitialDatum>,
    delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
}

// ---------------------------------------------------------------- kernel

fn kernel(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        15.0 / 16.0 * q * q
    }
}

fn kernel_deriv(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        -15.0 / 4.0 * s * (1.0 - s * s)
    }
}

/// `∫_{-1}^{s} K`.
fn kernel_cdf(s: f64) -> f64 {
    if s <= -1.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let s2 = s * s;
        (8.0 + s * (15.0 - 10.0 * s2 + 3.0 * s2 * s2)) / 16.0
    }
}

// ---------------------------------------------------------------- variants

impl Sampled {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, derivs: Vec<f64>, decay_bound: Option<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() || nodes.len() != derivs.len() {
            return Err(ZdError::InvalidDatum(
                "sampled datum needs at least two nodes and matching values/derivs".into(),
            ));
        }
        if nodes.iter().chain(&values).chain(&derivs).any(|v| !v.is_finite()) {
            return Err(ZdError::InvalidDatum("sampled datum has non-finite entries".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ZdError::InvalidDatum("sampled nodes must be strictly ascending".into()));
        }
        let extent = nodes[0].abs().max(nodes[nodes.len() - 1].abs());
        let decay_bound = decay_bound.unwrap_or(extent);
        if !(decay_bound > 0.0) {
            return Err(ZdError::InvalidDatum("decay_bound must be positive".into()));
        }
        Ok(Self {
            nodes,
            values,
            derivs,
            decay_bound,
        })
    }

    /// Samples `f` and `df` on `n` equispaced nodes of `[lo, hi]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let n = n.max(2);
        let h = (hi - lo) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
        let values = nodes.iter().map(|&y| f(y)).collect();
        let derivs = nodes.iter().map(|&y| df(y)).collect();
        Self::new(nodes, values, derivs, None)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }
    pub fn decay_bound(&self) -> f64 {
        self.decay_bound
    }

    fn support(&self) -> (f64, f64) {
        (
            self.nodes[0].max(-self.decay_bound),
            self.nodes[self.nodes.len() - 1].min(self.decay_bound),
        )
    }

    fn cell(&self, y: f64) -> Option<usize> {
        let (a, b) = self.support();
        if y < a || y > b {
            return None;
        }
        let i = self.nodes.partition_point(|&n| n <= y);
        Some(i.clamp(1, self.nodes.len() - 1) - 1)
    }

    fn eval(&self, y: f64) -> f64 {
        let Some(i) = self.cell(y) else { return 0.0 };
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let s = (y - x0) / h;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.values[i]
            + (s3 - 2.0 * s2 + s) * h * self.derivs[i]
            + (-2.0 * s3 + 3.0 * s2) * self.values[i + 1]
            + (s3 - s2) * h * self.derivs[i + 1]
    }

    fn deriv(&self, y: f64) -> f64 {
        let Some(i) = self.cell(y) else { return 0.0 };
        let [a, b, c] = self.deriv_poly(i);
        let s = (y - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        (a * s + b) * s + c
    }

    /// Coefficients of `u0'` on cell `i` as a quadratic in the local coordinate.
    fn deriv_poly(&self, i: usize) -> [f64; 3] {
        let h = self.nodes[i + 1] - self.nodes[i];
        let (v0, v1, d0, d1) = (self.values[i], self.values[i + 1], self.derivs[i], self.derivs[i + 1]);
        [
            6.0 * (v0 - v1) / h + 3.0 * d0 + 3.0 * d1,
            6.0 * (v1 - v0) / h - 4.0 * d0 - 2.0 * d1,
            d0,
        ]
    }

    fn cells_in_support(&self) -> impl Iterator<Item = usize> + '_ {
        let (a, b) = self.support();
        (0..self.nodes.len() - 1).filter(move |&i| self.nodes[i + 1] > a && self.nodes[i] < b)
    }

    fn extrema(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for i in self.cells_in_support() {
            let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
            let [a, b, c] = self.deriv_poly(i);
            let mut cands = vec![0.0, 1.0];
            if a.abs() > 1e-300 {
                let disc = b * b - 4.0 * a * c;
                if disc >= 0.0 {
                    let r = disc.sqrt();
                    cands.push((-b - r) / (2.0 * a));
                    cands.push((-b + r) / (2.0 * a));
                }
            } else if b.abs() > 1e-300 {
                cands.push(-c / b);
            }
            for s in cands.into_iter().filter(|s| (0.0..=1.0).contains(s)) {
                let v = self.eval(x0 + s * (x1 - x0));
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    fn deriv_bound(&self) -> f64 {
        let mut m = 0.0f64;
        for i in self.cells_in_support() {
            let [a, b, c] = self.deriv_poly(i);
            let mut cands = vec![0.0, 1.0];
            if a.abs() > 1e-300 {
                cands.push(-b / (2.0 * a));
            }
            for s in cands.into_iter().filter(|s| (0.0..=1.0).contains(s)) {
                m = m.max(((a * s + b) * s + c).abs());
            }
        }
        m
    }

    fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

impl Rational {
    pub fn new(poles: Vec<C64>, residues: Vec<C64>) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(ZdError::InvalidDatum("poles and residues differ in length".into()));
        }
        if poles
            .iter()
            .chain(&residues)
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(ZdError::InvalidDatum("non-finite pole or residue".into()));
        }
        if let Some(p) = poles.iter().find(|p| p.im <= POLE_IM_MIN) {
            return Err(ZdError::InvalidDatum(format!(
                "pole {p} must have positive imaginary part"
            )));
        }
        for (i, p) in poles.iter().enumerate() {
            for q in &poles[i + 1..] {
                if (p - q).norm() <= 1e-12 * (1.0 + p.norm()) {
                    return Err(ZdError::InvalidDatum(format!(
                        "duplicate pole {p}; use Rational::split_poles"
                    )));
                }
            }
        }
        Ok(Self { poles, residues })
    }

    /// Builds a datum from possibly repeated poles by nudging each repeated
    /// copy by `1e-6` in a distinct direction of the upper half-plane.
    pub fn split_poles(poles: Vec<C64>, residues: Vec<C64>) -> Result<Self> {
        let mut out: Vec<C64> = Vec::with_capacity(poles.len());
        for (i, &p) in poles.iter().enumerate() {
            let copies = poles[..i]
                .iter()
                .filter(|q| (p - **q).norm() <= 1e-9 * (1.0 + p.norm()))
                .count();
            if copies == 0 {
                out.push(p);
            } else {
                // distinct directions within the upper half-plane
                let angle = PI * copies as f64 / (copies as f64 + 2.0);
                out.push(p + C64::from_polar(1e-6, angle));
            }
        }
        Self::new(out, residues)
    }

    /// `1/(1+y²)` scaled by `amplitude`.
    pub fn lorentzian(amplitude: f64) -> Self {
        Self {
            poles: vec![C64::new(0.0, 1.0)],
            residues: vec![C64::new(0.0, -0.5 * amplitude)],
        }
    }

    pub fn zero() -> Self {
        Self {
            poles: Vec::new(),
            residues: Vec::new(),
        }
    }

    pub fn poles(&self) -> &[C64] {
        &self.poles
    }
    pub fn residues(&self) -> &[C64] {
        &self.residues
    }
    pub fn degree(&self) -> usize {
        self.poles.len()
    }

    pub fn eval_complex(&self, z: C64) -> C64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(p, c)| c / (z - p) + c.conj() / (z - p.conj()))
            .sum()
    }

    pub fn deriv_complex(&self, z: C64) -> C64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(p, c)| -(c / ((z - p) * (z - p)) + c.conj() / ((z - p.conj()) * (z - p.conj()))))
            .sum()
    }

    /// Szegő projection `Π u0(z) = Σ conj(c_j)/(z - conj(p_j))`, holomorphic
    /// for `Im z > -min Im p_j`.
    pub fn hardy_part(&self, z: C64) -> C64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(p, c)| c.conj() / (z - p.conj()))
            .sum()
    }

    fn eval(&self, y: f64) -> f64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(p, c)| 2.0 * (c / (y - p)).re)
            .sum()
    }

    fn deriv(&self, y: f64) -> f64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(p, c)| {
                let d = y - p;
                -2.0 * (c / (d * d)).re
            })
            .sum()
    }

    /// `û0(ξ) = ∫ e^{-iξy} u0(y) dy` in closed form (residues). At `ξ = 0`
    /// returns the right limit when `right` is set, the left limit otherwise.
    pub fn fourier(&self, xi: f64, right: bool) -> C64 {
        let i = C64::i();
        if xi > 0.0 || (xi == 0.0 && right) {
            self.poles
                .iter()
                .zip(&self.residues)
                .map(|(p, c)| -2.0 * PI * i * c.conj() * (-i * xi * p.conj()).exp())
                .sum()
        } else {
            self.poles
                .iter()
                .zip(&self.residues)
                .map(|(p, c)| 2.0 * PI * i * c * (-i * xi * p).exp())
                .sum()
        }
    }

    /// Radius beyond which `|2t u0'(y)| < 1`, so no critical point of
    /// `y + 2t u0(y)` lies outside `[-R, R]`.
    pub fn critical_radius(&self, t: f64) -> f64 {
        let pmax = self.poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let csum: f64 = self.residues.iter().map(|c| c.norm()).sum();
        pmax + (4.0 * t.abs() * csum).sqrt() + 1e-9
    }

    fn scale(&self) -> f64 {
        self.poles.iter().map(|p| p.norm()).fold(1.0, f64::max)
    }
}

impl Step {
    pub fn new(left: f64, right: f64, height: f64) -> Result<Self> {
        if !(left.is_finite() && right.is_finite() && height.is_finite()) || right <= left {
            return Err(ZdError::InvalidDatum("step needs finite left < right".into()));
        }
        Ok(Self { left, right, height })
    }

    /// Indicator of `]-1, 1[`.
    pub fn unit() -> Self {
        Self {
            left: -1.0,
            right: 1.0,
            height: 1.0,
        }
    }

    fn eval(&self, y: f64) -> f64 {
        if y > self.left && y < self.right {
            self.height
        } else {
            0.0
        }
    }
}

impl PiecewiseLinear {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return Err(ZdError::InvalidDatum(
                "piecewise-linear datum needs >= 2 matching points".into(),
            ));
        }
        if breakpoints.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(ZdError::InvalidDatum(
                "piecewise-linear datum has non-finite entries".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ZdError::InvalidDatum("breakpoints must be strictly ascending".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pieces `(a, b, value at a, slope)` including the zero tails.
    pub fn pieces(&self) -> Vec<(f64, f64, f64, f64)> {
        let n = self.breakpoints.len();
        let mut out = Vec::with_capacity(n + 1);
        out.push((f64::NEG_INFINITY, self.breakpoints[0], 0.0, 0.0));
        for i in 0..n - 1 {
            let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let slope = (self.values[i + 1] - self.values[i]) / (b - a);
            out.push((a, b, self.values[i], slope));
        }
        out.push((self.breakpoints[n - 1], f64::INFINITY, 0.0, 0.0));
        out
    }

    fn eval(&self, y: f64) -> f64 {
        let n = self.breakpoints.len();
        if y < self.breakpoints[0] || y > self.breakpoints[n - 1] {
            return 0.0;
        }
        let i = self.breakpoints.partition_point(|&b| b <= y).clamp(1, n - 1) - 1;
        let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let s = (y - a) / (b - a);
        self.values[i] + s * (self.values[i + 1] - self.values[i])
    }

    fn deriv(&self, y: f64) -> Result<f64> {
        let n = self.breakpoints.len();
        if self.breakpoints.contains(&y) {
            return Err(ZdError::NotDifferentiable { y });
        }
        if y < self.breakpoints[0] || y > self.breakpoints[n - 1] {
            return Ok(0.0);
        }
        let i = self.breakpoints.partition_point(|&b| b <= y).clamp(1, n - 1) - 1;
        Ok((self.values[i + 1] - self.values[i]) / (self.breakpoints[i + 1] - self.breakpoints[i]))
    }
}

impl Mollified {
    pub fn new(base: InitialDatum, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(ZdError::InvalidArgument(format!(
                "mollifier width must be positive, got {delta}"
            )));
        }
        Ok(Self {
            base: Box::new(base),
            delta,
        })
    }

    pub fn base(&self) -> &InitialDatum {
        &self.base
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Panels in the kernel variable `s ∈ [-1, 1]` split at the images of the
    /// base datum's kinks.
    fn panels(&self, y: f64) -> Vec<f64> {
        quadrature::breakpoints(-1.0, 1.0, self.base.kinks().into_iter().map(|k| (y - k) / self.delta))
    }

    fn convolve(&self, y: f64, weight: impl Fn(f64) -> f64) -> f64 {
        let (gx, gw) = gl16();
        let mut acc = 0.0;
        for w in self.panels(y).windows(2) {
            let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (x, wt) in gx.iter().zip(gw) {
                let s = c + h * x;
                acc += wt * h * self.base.eval_unchecked(y - self.delta * s) * weight(s);
            }
        }
        acc
    }

    fn eval(&self, y: f64) -> f64 {
        match &*self.base {
            InitialDatum::Step(st) => {
                st.height * (kernel_cdf((y - st.left) / self.delta) - kernel_cdf((y - st.right) / self.delta))
            }
            _ => self.convolve(y, kernel),
        }
    }

    fn deriv(&self, y: f64) -> f64 {
        match &*self.base {
            InitialDatum::Step(st) => {
                st.height / self.delta * (kernel((y - st.left) / self.delta) - kernel((y - st.right) / self.delta))
            }
            _ => self.convolve(y, kernel_deriv) / self.delta,
        }
    }
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

fn merge_intervals(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

// ---------------------------------------------------------------- datum

impl InitialDatum {
    pub fn zero() -> Self {
        InitialDatum::Rational(Rational::zero())
    }

    pub fn unit_step() -> Self {
        InitialDatum::Step(Step::unit())
    }

    /// `amplitude · exp(-y²)` sampled with spacing `h` on `[-r, r]`.
    pub fn gaussian(amplitude: f64, r: f64, h: f64) -> Self {
        let n = (2.0 * r / h).round() as usize + 1;
        let s = Sampled::from_fn(
            |y| amplitude * (-y * y).exp(),
            |y| -2.0 * y * amplitude * (-y * y).exp(),
            -r,
            r,
            n,
        )
        .expect("finite gaussian samples");
        InitialDatum::SampledC1(s)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            InitialDatum::SampledC1(s) => s.values.iter().chain(&s.derivs).all(|v| *v == 0.0),
            InitialDatum::Rational(r) => r.residues.iter().all(|c| c.norm() == 0.0),
            InitialDatum::Step(s) => s.height == 0.0,
            InitialDatum::PiecewiseLinear(p) => p.values.iter().all(|v| *v == 0.0),
            InitialDatum::Mollified(m) => m.base.is_zero(),
        }
    }

    /// Whether the characteristic route applies directly (no mollification).
    pub fn is_c1(&self) -> bool {
        !matches!(self, InitialDatum::Step(_) | InitialDatum::PiecewiseLinear(_)) || self.is_zero()
    }

    /// `u0(y)`.
    pub fn eval(&self, y: f64) -> Result<f64> {
        check_finite(y, "y")?;
        Ok(self.eval_unchecked(y))
    }

    pub(crate) fn eval_unchecked(&self, y: f64) -> f64 {
        match self {
            InitialDatum::SampledC1(s) => s.eval(y),
            InitialDatum::Rational(r) => r.eval(y),
            InitialDatum::Step(s) => s.eval(y),
            InitialDatum::PiecewiseLinear(p) => p.eval(y),
            InitialDatum::Mollified(m) => m.eval(y),
        }
    }

    /// `u0'(y)`; steps have no derivative, piecewise-linear data none at
    /// breakpoints.
    pub fn eval_deriv(&self, y: f64) -> Result<f64> {
        check_finite(y, "y")?;
        match self {
            InitialDatum::Step(s) if s.height != 0.0 => Err(ZdError::NotDifferentiable { y }),
            InitialDatum::Step(_) => Ok(0.0),
            InitialDatum::PiecewiseLinear(p) => p.deriv(y),
            _ => Ok(self.deriv_unchecked(y)),
        }
    }

    /// Derivative for C¹ variants; zero for step, one-sided slope for
    /// piecewise-linear data.
    pub(crate) fn deriv_unchecked(&self, y: f64) -> f64 {
        match self {
            InitialDatum::SampledC1(s) => s.deriv(y),
            InitialDatum::Rational(r) => r.deriv(y),
            InitialDatum::Step(_) => 0.0,
            InitialDatum::PiecewiseLinear(p) => p.deriv(y).unwrap_or(0.0),
            InitialDatum::Mollified(m) => m.deriv(y),
        }
    }

    /// Bounded support `[a, b]` outside which `u0 = 0`; `None` for rational data.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            InitialDatum::SampledC1(s) => Some(s.support()),
            InitialDatum::Rational(r) if r.poles.is_empty() => Some((0.0, 0.0)),
            InitialDatum::Rational(_) => None,
            InitialDatum::Step(s) => Some((s.left, s.right)),
            InitialDatum::PiecewiseLinear(p) => Some((p.breakpoints[0], p.breakpoints[p.breakpoints.len() - 1])),
            InitialDatum::Mollified(m) => m.base.support().map(|(a, b)| (a - m.delta, b + m.delta)),
        }
    }

    /// Points where `u0` or `u0'` may jump.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            InitialDatum::SampledC1(s) => {
                let (a, b) = s.support();
                vec![a, b]
            }
            InitialDatum::Rational(_) | InitialDatum::Mollified(_) => Vec::new(),
            InitialDatum::Step(s) => vec![s.left, s.right],
            InitialDatum::PiecewiseLinear(p) => p.breakpoints.clone(),
        }
    }

    /// Disjoint closed intervals outside of which `u0` is locally constant.
    /// `None` means "the whole line" (rational data).
    pub fn active_intervals(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            InitialDatum::Rational(r) if r.poles.is_empty() => Some(Vec::new()),
            InitialDatum::Rational(_) => None,
            InitialDatum::SampledC1(_) | InitialDatum::PiecewiseLinear(_) => self.support().map(|s| vec![s]),
            InitialDatum::Step(s) => Some(vec![(s.left, s.left), (s.right, s.right)]),
            InitialDatum::Mollified(m) => {
                let d = m.delta;
                m.base
                    .active_intervals()
                    .map(|v| merge_intervals(v.into_iter().map(|(a, b)| (a - d, b + d)).collect()))
            }
        }
    }

    /// Smallest length scale on which `u0'` varies.
    pub fn feature_scale(&self) -> f64 {
        match self {
            InitialDatum::SampledC1(s) => s.min_spacing(),
            InitialDatum::Rational(r) => r.poles.iter().map(|p| p.im).fold(f64::INFINITY, f64::min),
            InitialDatum::Step(s) => s.right - s.left,
            InitialDatum::PiecewiseLinear(p) => p
                .breakpoints
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min),
            InitialDatum::Mollified(m) => m.delta.min(m.base.feature_scale()),
        }
    }

    /// Upper bound for `‖u0'‖_∞`.
    pub fn deriv_bound(&self) -> f64 {
        match self {
            InitialDatum::SampledC1(s) => s.deriv_bound(),
            InitialDatum::Rational(r) => {
                if r.poles.is_empty() {
                    return 0.0;
                }
                let m = scan_max(|y| r.deriv(y).abs(), r.scale() * 20.0, 20_000);
                m * (1.0 + 1e-6)
            }
            InitialDatum::Step(s) => {
                if s.height == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            InitialDatum::PiecewiseLinear(p) => p.pieces().iter().map(|pc| pc.3.abs()).fold(0.0, f64::max),
            InitialDatum::Mollified(m) => match &*m.base {
                InitialDatum::Step(s) => s.height.abs() * kernel(0.0) / m.delta,
                b => b.deriv_bound(),
            },
        }
    }

    /// `(ess inf u0, ess sup u0)`; both include the value 0 at infinity.
    pub fn extrema(&self) -> (f64, f64) {
        match self {
            InitialDatum::SampledC1(s) => s.extrema(),
            InitialDatum::Step(s) => (s.height.min(0.0), s.height.max(0.0)),
            InitialDatum::PiecewiseLinear(p) => p
                .values
                .iter()
                .fold((0.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v))),
            InitialDatum::Mollified(m) if matches!(*m.base, InitialDatum::Step(_)) => m.base.extrema(),
            _ => {
                let (a, b) = match self.support() {
                    Some(s) => s,
                    None => {
                        let r = match self {
                            InitialDatum::Rational(r) => r.scale() * 50.0,
                            _ => 50.0,
                        };
                        (-r, r)
                    }
                };
                refined_extrema(self, a, b, 20_000)
            }
        }
    }

    pub fn norms(&self) -> Norms {
        let (lo, hi) = self.extrema();
        let linf = lo.abs().max(hi.abs());
        let l2sq = match self {
            InitialDatum::Rational(r) if !r.poles.is_empty() => {
                // y = tan θ maps the line onto ]-π/2, π/2[
                let f = |th: f64| {
                    let (s, c) = th.sin_cos();
                    let u = r.eval(s / c);
                    u * u / (c * c)
                };
                let h = 0.5 * PI;
                let mut pts: Vec<f64> = r.poles.iter().map(|p| p.re.atan()).collect();
                pts.extend([-h, h]);
                pts.sort_by(f64::total_cmp);
                quadrature::integrate_with_breaks(f, &pts, 1e-13).unwrap_or(f64::NAN)
            }
            _ => match self.support() {
                Some((a, b)) if b > a => {
                    let mut pts = quadrature::breakpoints(a, b, self.kinks());
                    if let Some(active) = self.active_intervals() {
                        let extra: Vec<f64> = active.iter().flat_map(|&(p, q)| [p, q]).collect();
                        pts = quadrature::breakpoints(a, b, pts.into_iter().chain(extra));
                    }
                    quadrature::integrate_with_breaks(|y| self.eval_unchecked(y).powi(2), &pts, 1e-13)
                        .unwrap_or(f64::NAN)
                }
                _ => 0.0,
            },
        };
        Norms { l2: l2sq.sqrt(), linf }
    }

    /// Smoothed copy with length scale `delta`.
    ///
    /// Steps map to the explicit ramp profile: zero outside
    /// `[left - δ, right + δ]`, `height` on `[left, right]` and strictly
    /// monotone C² ramps in between.
    pub fn mollify(&self, delta: f64) -> Result<InitialDatum> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(ZdError::InvalidArgument(format!(
                "mollifier width must be positive, got {delta}"
            )));
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        Ok(match self {
            InitialDatum::Step(s) => {
                let half = 0.5 * delta;
                let widened = Step::new(s.left - half, s.right + half, s.height)?;
                InitialDatum::Mollified(Mollified::new(InitialDatum::Step(widened), half)?)
            }
            d => InitialDatum::Mollified(Mollified::new(d.clone(), delta)?),
        })
    }

    /// `∫ u0`.
    pub fn integral(&self) -> f64 {
        match self.support() {
            Some((a, b)) if b > a => {
                let mut pts = quadrature::breakpoints(a, b, self.kinks());
                if let Some(active) = self.active_intervals() {
                    pts =
                        quadrature::breakpoints(a, b, pts.into_iter().chain(active.iter().flat_map(|&(p, q)| [p, q])));
                }
                quadrature::integrate_with_breaks(|y| self.eval_unchecked(y), &pts, 1e-12).unwrap_or(f64::NAN)
            }
            Some(_) => 0.0,
            None => match self {
                // principal values: ∫ 1/(y-p) = iπ for Im p > 0, -iπ for its conjugate
                InitialDatum::Rational(r) => r.residues.iter().map(|c| -2.0 * PI * c.im).sum(),
                _ => f64::NAN,
            },
        }
    }

    pub fn to_descriptor(&self) -> DatumDescriptor {
        match self {
            InitialDatum::SampledC1(s) => DatumDescriptor::Sampled {
                nodes: s.nodes.clone(),
                values: s.values.clone(),
                derivs: s.derivs.clone(),
                decay_bound: Some(s.decay_bound),
            },
            InitialDatum::Rational(r) if r.poles.is_empty() => DatumDescriptor::Zero,
            InitialDatum::Rational(r) => DatumDescriptor::Rational {
                poles: r.poles.iter().map(|p| [p.re, p.im]).collect(),
                residues: r.residues.iter().map(|p| [p.re, p.im]).collect(),
            },
            InitialDatum::Step(s) => DatumDescriptor::Step {
                left: s.left,
                right: s.right,
                height: s.height,
            },
            InitialDatum::PiecewiseLinear(p) => DatumDescriptor::PiecewiseLinear {
                breakpoints: p.breakpoints.clone(),
                values: p.values.clone(),
            },
            InitialDatum::Mollified(m) => DatumDescriptor::Mollified {
                base: Box::new(m.base.to_descriptor()),
                delta: m.delta,
            },
        }
    }
}

fn scan_max(f: impl Fn(f64) -> f64, r: f64, n: usize) -> f64 {
    (0..=n)
        .map(|i| f(-r + 2.0 * r * i as f64 / n as f64))
        .fold(0.0, f64::max)
}

/// Dense scan of `u0` on `[a, b]` with bisection refinement of every local
/// extremum through the sign of `u0'`.
fn refined_extrema(d: &InitialDatum, a: f64, b: f64, n: usize) -> (f64, f64) {
    let h = (b - a) / n as f64;
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let mut prev_y = a;
    let mut prev_g = d.deriv_unchecked(a);
    for i in 0..=n {
        let y = a + i as f64 * h;
        let v = d.eval_unchecked(y);
        lo = lo.min(v);
        hi = hi.max(v);
        let g = d.deriv_unchecked(y);
        if i > 0 && prev_g.signum() != g.signum() && prev_g != 0.0 {
            let (mut l, mut r, gl) = (prev_y, y, prev_g);
            for _ in 0..60 {
                let m = 0.5 * (l + r);
                if d.deriv_unchecked(m).signum() == gl.signum() {
                    l = m;
                } else {
                    r = m;
                }
            }
            let v = d.eval_unchecked(0.5 * (l + r));
            lo = lo.min(v);
            hi = hi.max(v);
        }
        prev_y = y;
        prev_g = g;
    }
    (lo, hi)
}

// ---------------------------------------------------------------- JSON

/// JSON form of a datum. Complex numbers are `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DatumDescriptor {
    Zero,
    Step {
        left: f64,
        right: f64,
        height: f64,
    },
    Rational {
        poles: Vec<[f64; 2]>,
        residues: Vec<[f64; 2]>,
    },
    Sampled {
        nodes: Vec<f64>,
        values: Vec<f64>,
        derivs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decay_bound: Option<f64>,
    },
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    Mollified {
        base: Box<DatumDescriptor>,
        delta: f64,
    },
}

impl TryFrom<DatumDescriptor> for InitialDatum {
    type Error = ZdError;

    fn try_from(d: DatumDescriptor) -> Result<Self> {
        let c = |v: Vec<[f64; 2]>| v.into_iter().map(|[re, im]| C64::new(re, im)).collect::<Vec<_>>();
        Ok(match d {
            DatumDescriptor::Zero => InitialDatum::zero(),
            DatumDescriptor::Step { left, right, height } => InitialDatum::Step(Step::new(left, right, height)?),
            DatumDescriptor::Rational { poles, residues } => {
                InitialDatum::Rational(Rational::new(c(poles), c(residues))?)
            }
            DatumDescriptor::Sampled {
                nodes,
                values,
                derivs,
                decay_bound,
            } => InitialDatum::SampledC1(Sampled::new(nodes, values, derivs, decay_bound)?),
            DatumDescriptor::PiecewiseLinear { breakpoints, values } => {
                InitialDatum::PiecewiseLinear(PiecewiseLinear::new(breakpoints, values)?)
            }
            DatumDescriptor::Mollified { base, delta } => {
                InitialDatum::Mollified(Mollified::new(InitialDatum::try_from(*base)?, delta)?)
            }
        })
    }
}

impl InitialDatum {
    pub fn from_json(s: &str) -> Result<Self> {
        let d: DatumDescriptor = serde_json::from_str(s)?;
        d.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_descriptor()).expect("descriptor serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz() -> InitialDatum {
        InitialDatum::Rational(Rational::new(vec![C64::new(0.0, 1.0)], vec![C64::new(0.0, -0.5)]).unwrap())
    }

    #[test]
    fn eval_examples() {
        assert_eq!(InitialDatum::unit_step().eval(0.0).unwrap(), 1.0);
        assert_eq!(InitialDatum::zero().eval(3.7).unwrap(), 0.0);
        assert!((lorentz().eval(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(InitialDatum::unit_step().eval(f64::NAN).is_err());
    }

    #[test]
    fn deriv_examples() {
        assert_eq!(InitialDatum::zero().eval_deriv(2.0).unwrap(), 0.0);
        assert!((lorentz().eval_deriv(1.0).unwrap() + 0.5).abs() < 1e-15);
        let m = InitialDatum::unit_step().mollify(1e-2).unwrap();
        assert_eq!(m.eval_deriv(0.0).unwrap(), 0.0);
        assert!(matches!(
            InitialDatum::unit_step().eval_deriv(0.3),
            Err(ZdError::NotDifferentiable { .. })
        ));
    }

    #[test]
    fn norms_examples() {
        let n = InitialDatum::unit_step().norms();
        assert!((n.l2 - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(n.linf, 1.0);
        let n = InitialDatum::zero().norms();
        assert_eq!((n.l2, n.linf), (0.0, 0.0));
        let n = lorentz().norms();
        assert!((n.l2 - (PI / 2.0).sqrt()).abs() < 1e-10, "{}", n.l2);
        assert!((n.linf - 1.0).abs() < 1e-9);
    }

    #[test]
    fn step_ramp_profile() {
        let m = InitialDatum::unit_step().mollify(0.1).unwrap();
        assert_eq!(m.eval(-1.1).unwrap(), 0.0);
        assert_eq!(m.eval(1.1).unwrap(), 0.0);
        assert_eq!(m.eval(-1.0).unwrap(), 1.0);
        assert_eq!(m.eval(0.99).unwrap(), 1.0);
        let v = m.eval(-1.05).unwrap();
        assert!(v > 0.0 && v < 1.0);
        let mut prev = 0.0;
        for i in 1..100 {
            let v = m.eval(-1.1 + 0.1 * i as f64 / 100.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert_eq!(m.extrema(), (0.0, 1.0));
    }

    #[test]
    fn mollify_rejects_nonpositive_width() {
        assert!(InitialDatum::unit_step().mollify(0.0).is_err());
        assert!(InitialDatum::unit_step().mollify(-1.0).is_err());
        assert!(InitialDatum::zero().mollify(0.3).unwrap().is_zero());
    }

    #[test]
    fn mollified_quadrature_matches_closed_form() {
        // piecewise-linear tent smoothed by quadrature vs direct check of symmetry/mass
        let tent =
            InitialDatum::PiecewiseLinear(PiecewiseLinear::new(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap());
        let m = tent.mollify(0.2).unwrap();
        assert!((m.integral() - 1.0).abs() < 1e-10);
        assert!((m.eval(0.5).unwrap() - 0.5).abs() < 1e-14);
        assert!((m.eval(0.3).unwrap() - m.eval(-0.3).unwrap()).abs() < 1e-14);
        // a steep-sided trapezoid smoothed by quadrature vs the step closed form
        let wide = InitialDatum::Step(Step::new(-1.05, 1.05, 1.0).unwrap());
        let via_pl = InitialDatum::Mollified(Mollified::new(wide.clone(), 0.05).unwrap());
        let pl = InitialDatum::PiecewiseLinear(
            PiecewiseLinear::new(vec![-1.05, -1.05 + 1e-12, 1.05 - 1e-12, 1.05], vec![0.0, 1.0, 1.0, 0.0]).unwrap(),
        );
        let via_q = InitialDatum::Mollified(Mollified::new(pl, 0.05).unwrap());
        for y in [-1.09, -1.05, -1.02, 0.0, 1.01, 1.07] {
            let a = via_pl.eval(y).unwrap();
            let b = via_q.eval(y).unwrap();
            assert!((a - b).abs() < 1e-9, "y={y}: {a} vs {b}");
            let da = via_pl.eval_deriv(y).unwrap();
            let db = via_q.eval_deriv(y).unwrap();
            assert!((da - db).abs() < 1e-6 * (1.0 + da.abs()), "y={y}: {da} vs {db}");
        }
    }

    #[test]
    fn sampled_hermite_reproduces_cubics() {
        let f = |y: f64| y * y * y - 2.0 * y;
        let df = |y: f64| 3.0 * y * y - 2.0;
        let s = Sampled::from_fn(f, df, -2.0, 2.0, 9).unwrap();
        let d = InitialDatum::SampledC1(s);
        for y in [-1.93, -0.4, 0.0, 0.77, 1.999] {
            assert!((d.eval(y).unwrap() - f(y)).abs() < 1e-13);
            assert!((d.eval_deriv(y).unwrap() - df(y)).abs() < 1e-12);
        }
        assert_eq!(d.eval(2.5).unwrap(), 0.0);
    }

    #[test]
    fn rational_validation() {
        assert!(Rational::new(vec![C64::new(0.0, -1.0)], vec![C64::new(1.0, 0.0)]).is_err());
        assert!(Rational::new(vec![C64::new(0.0, 1.0); 2], vec![C64::new(1.0, 0.0); 2]).is_err());
        let r = Rational::split_poles(vec![C64::new(0.0, 1.0); 3], vec![C64::new(0.0, -0.5); 3]).unwrap();
        assert_eq!(r.degree(), 3);
        assert!(r.poles().iter().all(|p| p.im > 0.0));
    }

    #[test]
    fn json_descriptors() {
        let d = InitialDatum::from_json(r#"{"type":"step","left":-1,"right":1,"height":1}"#).unwrap();
        assert_eq!(d, InitialDatum::unit_step());
        let d = InitialDatum::from_json(r#"{"type":"rational","poles":[[0,1]],"residues":[[0,-0.5]]}"#).unwrap();
        assert!((d.eval(1.0).unwrap() - 0.5).abs() < 1e-15);
        let d = InitialDatum::from_json(r#"{"type":"sampled","nodes":[0,1],"values":[0,0],"derivs":[0,0]}"#).unwrap();
        assert!(d.is_zero());
        let m = InitialDatum::unit_step().mollify(1e-3).unwrap();
        assert_eq!(InitialDatum::from_json(&m.to_json()).unwrap(), m);
        assert!(InitialDatum::from_json(r#"{"type":"step","left":1,"right":-1,"height":1}"#).is_err());
    }
}
