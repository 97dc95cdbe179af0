//! Resolvent formula on the Fourier half-line.
//!
//! Hardy functions are represented by samples of `f̂(ξ) = ∫ e^{-iξy} f(y) dy`
//! on a uniform grid over `[0, Ξ]`. On this side `G = i d/dξ` and
//!
//! ```text
//! ((G - x)^{-1} f)^(ξ) = i ∫_ξ^∞ f̂(η) e^{ix(η-ξ)} dη,
//! (T_b f)^(ξ)          = (1/2π) ∫_0^∞ b̂(ξ - η) f̂(η) dη.
//! ```
//!
//! The resolvent equation `(G + 2t T_{u0} - x) f = Π u0` is solved in the
//! second-kind form `(I + 2t K T) f = K Π u0` with `K = (G - x)^{-1}`, and
//! `Π u(t, x) = f̂(0⁺) / (2iπ)`.
//!
//! `K` costs O(M) per application (backward recursion over cells, cubic
//! interpolation of `f̂` inside each cell, exact exponential weights), `T`
//! O(M log M) (FFT convolution, trapezoid weights with Gregory end
//! corrections on both sides of the kink of `b̂` at 0).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::characteristics::ZdField;
use crate::datum::InitialDatum;
use crate::error::{check_finite, Result, ZdError};
use crate::io::fmt_f64;
use crate::par::{self, Exec};
use crate::quadrature::{self, gauss_legendre, gregory_weights};
use crate::C64;

/// Smallest admissible `Im x`.
pub const SIGMA_MIN: f64 = 1e-3;
/// Bound on `∫_Ξ^∞ |û0|` used to pick the truncation.
pub const TOL_TRUNC: f64 = 1e-8;
pub const DEFAULT_MODES: usize = 2048;
/// Largest truncation tried for data without closed-form transforms.
const XI_CAP: f64 = 256.0;

/// Uniform grid `ξ_i = i h`, `i = 0..m`, with `ξ_{m-1} = Ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiGrid {
    pub m: usize,
    pub xi_max: f64,
}

impl XiGrid {
    pub fn new(m: usize, xi_max: f64) -> Result<Self> {
        if m < 8 {
            return Err(ZdError::InvalidArgument(format!(
                "need at least 8 frequency nodes, got {m}"
            )));
        }
        if !(xi_max > 0.0 && xi_max.is_finite()) {
            return Err(ZdError::InvalidArgument(format!("bad truncation {xi_max}")));
        }
        Ok(Self { m, xi_max })
    }

    pub fn h(&self) -> f64 {
        self.xi_max / (self.m - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.m).map(|i| i as f64 * h).collect()
    }

    /// Gregory weights (already scaled by `h`).
    pub fn weights(&self) -> Vec<f64> {
        let h = self.h();
        gregory_weights(self.m).into_iter().map(|w| w * h).collect()
    }
}

/// Samples of `f̂` on `[0, Ξ]` together with `I₊(f) = f̂(0⁺)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineSpectrum {
    pub grid: XiGrid,
    pub values: Vec<C64>,
    pub zero_limit: C64,
}

impl HalfLineSpectrum {
    pub fn new(grid: XiGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.m {
            return Err(ZdError::InvalidArgument(format!(
                "spectrum has {} samples for a grid of {}",
                values.len(),
                grid.m
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(ZdError::NonFinite("spectrum sample"));
        }
        let zero_limit = extrapolate_zero(&values);
        Ok(Self {
            grid,
            values,
            zero_limit,
        })
    }

    pub fn xi(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    /// `∫_0^Ξ |f̂|² dξ`; divide by `2π` for the `L²` norm squared.
    pub fn norm_sq(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum()
    }

    /// CSV `xi,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("xi,re,im\n");
        for (xi, v) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(s, "{},{},{}", fmt_f64(*xi), fmt_f64(v.re), fmt_f64(v.im));
        }
        s
    }
}

/// Quadratic extrapolation through the three smallest nodes to `ξ = 0`. The
/// grid starts at 0, so the Lagrange weights are `(1, 0, 0)`.
fn extrapolate_zero(values: &[C64]) -> C64 {
    values[0]
}

// ---------------------------------------------------------------- û0

/// Quadrature nodes and weights `(y_k, w_k u0(y_k))` for the transform of a
/// compactly supported datum, accurate for `|ξ| ≤ xi_cap`.
struct HatQuadrature {
    nodes: Vec<f64>,
    weighted: Vec<f64>,
}

impl HatQuadrature {
    fn new(d: &InitialDatum, xi_cap: f64) -> Result<Self> {
        let (a, b) = d
            .support()
            .ok_or_else(|| ZdError::Unsupported("transform needs compact support".into()))?;
        if b <= a {
            return Ok(Self {
                nodes: Vec::new(),
                weighted: Vec::new(),
            });
        }
        let mut extra = d.kinks();
        if let Some(active) = d.active_intervals() {
            extra.extend(active.iter().flat_map(|&(p, q)| [p, q]));
        }
        if let InitialDatum::SampledC1(s) = d {
            extra.extend_from_slice(s.nodes());
        }
        let pts = quadrature::breakpoints(a, b, extra);
        let wmax = (1.5 / xi_cap).min(0.25).min(0.5 * d.feature_scale());
        let (gx, gw) = gauss_legendre(8);
        let mut nodes = Vec::new();
        let mut weighted = Vec::new();
        for w in pts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let n = ((q - p) / wmax).ceil().max(1.0) as usize;
            let step = (q - p) / n as f64;
            for k in 0..n {
                let lo = p + k as f64 * step;
                for (x, wt) in gx.iter().zip(&gw) {
                    let y = lo + 0.5 * step * (x + 1.0);
                    let u = d.eval_unchecked(y);
                    if u != 0.0 {
                        nodes.push(y);
                        weighted.push(0.5 * step * wt * u);
                    }
                }
            }
        }
        Ok(Self { nodes, weighted })
    }

    /// `û0(k h)` for `k = 0..m`, blocked over `k` with an exact restart of
    /// the phase recurrence per block.
    fn uniform(&self, h: f64, m: usize, exec: Exec) -> Vec<C64> {
        const BLOCK: usize = 64;
        let blocks = m.div_ceil(BLOCK);
        let parts = par::map_range(exec, blocks, |b| {
            let k0 = b * BLOCK;
            let k1 = (k0 + BLOCK).min(m);
            let mut out = vec![C64::new(0.0, 0.0); k1 - k0];
            for (&y, &w) in self.nodes.iter().zip(&self.weighted) {
                let step = C64::from_polar(1.0, -h * y);
                let mut z = C64::from_polar(w, -(k0 as f64) * h * y);
                for o in out.iter_mut() {
                    *o += z;
                    z *= step;
                }
            }
            out
        });
        parts.into_iter().flatten().collect()
    }
}

/// Truncation `Ξ` with `∫_Ξ^∞ |û0| ≤ TOL_TRUNC`: closed form for rational
/// data, sampled tails (doubling the search range up to a cap) otherwise.
pub fn choose_xi_max(d: &InitialDatum) -> Result<f64> {
    if d.is_zero() {
        return Ok(1.0);
    }
    match d {
        InitialDatum::Rational(r) => {
            // |û0(ξ)| ≤ Σ 2π|c_j| e^{-ξ Im p_j}
            let n = r.degree() as f64;
            let xi = r
                .poles()
                .iter()
                .zip(r.residues())
                .map(|(p, c)| (2.0 * PI * c.norm() * n / (p.im * TOL_TRUNC)).ln().max(0.0) / p.im)
                .fold(1.0, f64::max);
            Ok(xi)
        }
        InitialDatum::Step(_) | InitialDatum::PiecewiseLinear(_) => Err(ZdError::Unsupported(
            "hardy backend needs smooth data: |û0| of a step or piecewise-linear datum decays too slowly".into(),
        )),
        _ => {
            let mut cap = 32.0;
            while cap <= XI_CAP {
                let q = HatQuadrature::new(d, cap)?;
                let n = 1024;
                let dxi = cap / n as f64;
                let mags: Vec<f64> = q.uniform(dxi, n + 1, Exec::Parallel).iter().map(|v| v.norm()).collect();
                let mut tail = vec![0.0; n + 2];
                for k in (0..=n).rev() {
                    tail[k] = tail[k + 1] + mags[k] * dxi;
                }
                if tail[3 * n / 4] <= 0.1 * TOL_TRUNC {
                    let k = (0..=n).find(|&k| tail[k] <= TOL_TRUNC).unwrap_or(n);
                    return Ok((k as f64 * dxi).max(1.0));
                }
                cap *= 2.0;
            }
            Err(ZdError::Unsupported(format!(
                "truncation tolerance unreachable: ∫|û0| beyond ξ = {XI_CAP} exceeds {TOL_TRUNC:e}"
            )))
        }
    }
}

/// Default grid for a datum: `m` nodes over `[0, Ξ]`.
pub fn default_grid(d: &InitialDatum, m: usize) -> Result<XiGrid> {
    XiGrid::new(m, choose_xi_max(d)?)
}

/// `(û0(k h))_k` for `k ≥ 0` (right limits at 0) and `(û0(-k h))_k`.
fn datum_hat(d: &InitialDatum, grid: &XiGrid) -> Result<(Vec<C64>, Vec<C64>)> {
    let h = grid.h();
    let m = grid.m;
    let right: Vec<C64> = if d.is_zero() {
        vec![C64::new(0.0, 0.0); m]
    } else {
        match d {
            InitialDatum::Rational(r) => (0..m).map(|k| r.fourier(k as f64 * h, true)).collect(),
            InitialDatum::Step(_) | InitialDatum::PiecewiseLinear(_) => {
                return Err(ZdError::Unsupported("hardy backend needs smooth data".into()))
            }
            _ => HatQuadrature::new(d, grid.xi_max)?.uniform(h, m, Exec::Parallel),
        }
    };
    // real u0: û0(-ξ) = conj û0(ξ), including the one-sided limits at 0
    let left = right.iter().map(|v| v.conj()).collect();
    Ok((right, left))
}

/// `û0` restricted to `ξ ≥ 0`, i.e. the transform of `Π u0`.
pub fn fourier_plus(d: &InitialDatum, grid: &XiGrid) -> Result<HalfLineSpectrum> {
    HalfLineSpectrum::new(*grid, datum_hat(d, grid)?.0)
}

// ---------------------------------------------------------------- K = (G - x)^{-1}

/// `(G - x)^{-1}` on a fixed grid and spectral parameter.
#[derive(Debug, Clone)]
pub struct Resolvent {
    x: C64,
    m: usize,
    decay: C64,
    /// Cell weights `∫_0^h ℓ_k(s) e^{ixs} ds` for the first, interior and
    /// last-but-one cells.
    w: [[C64; 4]; 3],
}

impl Resolvent {
    pub fn new(grid: &XiGrid, x: C64) -> Result<Self> {
        check_finite(x.re, "Re x")?;
        check_finite(x.im, "Im x")?;
        if x.im < SIGMA_MIN {
            return Err(ZdError::InvalidArgument(format!(
                "Im x = {} is below σ_min = {SIGMA_MIN}",
                x.im
            )));
        }
        let h = grid.h();
        let (gx, gw) = gauss_legendre(8);
        let offsets: [[f64; 4]; 3] = [[0.0, 1.0, 2.0, 3.0], [-1.0, 0.0, 1.0, 2.0], [-2.0, -1.0, 0.0, 1.0]];
        let mut w = [[C64::new(0.0, 0.0); 4]; 3];
        for (kind, off) in offsets.iter().enumerate() {
            for (g, wt) in gx.iter().zip(&gw) {
                let s = 0.5 * (g + 1.0);
                let e = (C64::i() * x * (s * h)).exp() * (0.5 * wt * h);
                for k in 0..4 {
                    let mut l = 1.0;
                    for j in 0..4 {
                        if j != k {
                            l *= (s - off[j]) / (off[k] - off[j]);
                        }
                    }
                    w[kind][k] += e * l;
                }
            }
        }
        Ok(Self {
            x,
            m: grid.m,
            decay: (C64::i() * x * h).exp(),
            w,
        })
    }

    pub fn x(&self) -> C64 {
        self.x
    }

    /// `ĥ = ((G - x)^{-1} f)^` from samples of `f̂`; the tail beyond `Ξ` is
    /// dropped.
    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let m = self.m;
        let mut out = vec![C64::new(0.0, 0.0); m];
        let mut acc = C64::new(0.0, 0.0);
        for i in (0..m - 1).rev() {
            let (kind, j0) = if i == 0 {
                (0, 0)
            } else if i == m - 2 {
                (2, m - 4)
            } else {
                (1, i - 1)
            };
            let w = &self.w[kind];
            let cell = w[0] * f[j0] + w[1] * f[j0 + 1] + w[2] * f[j0 + 2] + w[3] * f[j0 + 3];
            acc = cell + self.decay * acc;
            out[i] = C64::i() * acc;
        }
        out
    }
}

/// `(G - x)^{-1} f` on the spectrum's grid.
pub fn g_resolvent(f: &HalfLineSpectrum, x: C64) -> Result<HalfLineSpectrum> {
    let k = Resolvent::new(&f.grid, x)?;
    HalfLineSpectrum::new(f.grid, k.apply(&f.values))
}

// ---------------------------------------------------------------- T_b

/// Discretized Toeplitz operator `f ↦ Π(b f)` for a symbol given by samples
/// of `b̂` on both sides of the origin.
#[derive(Clone)]
pub struct Toeplitz {
    grid: XiGrid,
    right: Vec<C64>,
    left: Vec<C64>,
    kernel_hat: Vec<C64>,
    weights: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Toeplitz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Toeplitz")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

/// Gregory-minus-trapezoid weights for a segment of `n` nodes; only the
/// returned head and tail entries are nonzero.
fn segment_deltas(n: usize) -> Vec<(usize, f64)> {
    if n < 2 {
        return Vec::new();
    }
    let g = gregory_weights(n);
    let mut out = Vec::new();
    for (q, w) in g.iter().enumerate() {
        let trap = if q == 0 || q == n - 1 { 0.5 } else { 1.0 };
        let d = w - trap;
        if d != 0.0 {
            out.push((q, d));
        }
    }
    out
}

impl Toeplitz {
    /// `right[k] = b̂(k h)` (with `right[0] = b̂(0⁺)`), `left[k] = b̂(-k h)`
    /// (with `left[0] = b̂(0⁻)`).
    pub fn new(grid: XiGrid, right: Vec<C64>, left: Vec<C64>) -> Result<Self> {
        let m = grid.m;
        if right.len() != m || left.len() != m {
            return Err(ZdError::InvalidArgument("symbol samples do not match the grid".into()));
        }
        let l = 2 * m;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(l);
        let inv = planner.plan_fft_inverse(l);
        let mut a = vec![C64::new(0.0, 0.0); l];
        a[0] = 0.5 * (right[0] + left[0]);
        for k in 1..m {
            a[k] = right[k];
            a[l - k] = left[k];
        }
        fwd.process(&mut a);
        let mut weights = vec![1.0; m];
        weights[0] = 0.5;
        weights[m - 1] = 0.5;
        Ok(Self {
            grid,
            right,
            left,
            kernel_hat: a,
            weights,
            fwd,
            inv,
        })
    }

    pub fn from_datum(d: &InitialDatum, grid: XiGrid) -> Result<Self> {
        let (r, l) = datum_hat(d, &grid)?;
        Self::new(grid, r, l)
    }

    /// Symbol with transform `bhat`; `b0 = (b̂(0⁺), b̂(0⁻))`.
    pub fn from_symbol(grid: XiGrid, bhat: impl Fn(f64) -> C64, b0: (C64, C64)) -> Result<Self> {
        let h = grid.h();
        let mut right: Vec<C64> = (0..grid.m).map(|k| bhat(k as f64 * h)).collect();
        let mut left: Vec<C64> = (0..grid.m).map(|k| bhat(-(k as f64) * h)).collect();
        right[0] = b0.0;
        left[0] = b0.1;
        Self::new(grid, right, left)
    }

    pub fn grid(&self) -> &XiGrid {
        &self.grid
    }

    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let m = self.grid.m;
        let l = 2 * m;
        let mut buf = vec![C64::new(0.0, 0.0); l];
        for j in 0..m {
            buf[j] = f[j] * self.weights[j];
        }
        self.fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inv.process(&mut buf);
        let scale = self.grid.h() / (2.0 * PI);
        let k_avg = 0.5 * (self.right[0] + self.left[0]);
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let mut v = buf[i] / l as f64;
            // [0, ξ_i]: kernel b̂(ξ_i - ξ_j) with the right limit at j = i
            for (q, d) in segment_deltas(i + 1) {
                v += d * self.right[i - q] * f[q];
            }
            // [ξ_i, Ξ]: kernel b̂(ξ_i - ξ_j) with the left limit at j = i
            for (q, d) in segment_deltas(m - i) {
                v += d * self.left[q] * f[i + q];
            }
            if i == 0 {
                v += 0.5 * (self.left[0] - k_avg) * f[0];
            }
            if i == m - 1 {
                v += 0.5 * (self.right[0] - k_avg) * f[m - 1];
            }
            out.push(v * scale);
        }
        out
    }
}

pub fn toeplitz_apply(d: &InitialDatum, f: &HalfLineSpectrum) -> Result<HalfLineSpectrum> {
    let t = Toeplitz::from_datum(d, f.grid)?;
    HalfLineSpectrum::new(f.grid, t.apply(&f.values))
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Neumann series in the perturbative regime, GMRES otherwise, dense LU
    /// as the last resort.
    #[default]
    Auto,
    Neumann,
    Gmres,
    Dense,
}

/// Everything about a datum the resolvent needs, cached per grid and shared
/// across `t` and `x`.
#[derive(Debug, Clone)]
pub struct HardyOperator {
    datum: InitialDatum,
    toeplitz: Toeplitz,
    pi_u0: Vec<C64>,
    linf: f64,
}

impl HardyOperator {
    pub fn new(d: &InitialDatum, grid: XiGrid) -> Result<Self> {
        let (right, left) = datum_hat(d, &grid)?;
        let pi_u0 = right.clone();
        let toeplitz = Toeplitz::new(grid, right, left)?;
        Ok(Self {
            datum: d.clone(),
            toeplitz,
            pi_u0,
            linf: d.norms().linf,
        })
    }

    /// Operator on the default grid of `m` nodes.
    pub fn with_modes(d: &InitialDatum, m: usize) -> Result<Self> {
        Self::new(d, default_grid(d, m)?)
    }

    pub fn datum(&self) -> &InitialDatum {
        &self.datum
    }
    pub fn grid(&self) -> &XiGrid {
        &self.toeplitz.grid
    }
    pub fn toeplitz(&self) -> &Toeplitz {
        &self.toeplitz
    }
    pub fn pi_u0(&self) -> HalfLineSpectrum {
        HalfLineSpectrum::new(*self.grid(), self.pi_u0.clone()).expect("finite samples")
    }
    pub fn linf(&self) -> f64 {
        self.linf
    }
}

/// `(G + 2t T_{u0} - x) f = Π u0` at one `(t, x)`.
#[derive(Debug, Clone, Copy)]
pub struct ResolventProblem<'a> {
    pub op: &'a HardyOperator,
    pub t: f64,
    pub x: C64,
    pub solver: Solver,
}

#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub spectrum: HalfLineSpectrum,
    pub solver: Solver,
    pub iterations: usize,
    /// `‖(I + 2t K T) f - K Π u0‖ / ‖K Π u0‖`.
    pub residual: f64,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl ResolventProblem<'_> {
    fn resolvent(&self) -> Result<Resolvent> {
        Resolvent::new(self.op.grid(), self.x)
    }

    /// `f + 2t K T f`.
    pub fn apply(&self, k: &Resolvent, f: &[C64]) -> Vec<C64> {
        let kt = k.apply(&self.op.toeplitz.apply(f));
        f.iter().zip(kt).map(|(a, b)| a + 2.0 * self.t * b).collect()
    }

    pub fn rhs(&self, k: &Resolvent) -> Vec<C64> {
        k.apply(&self.op.pi_u0)
    }

    pub fn residual(&self, f: &[C64]) -> Result<f64> {
        let k = self.resolvent()?;
        Ok(self.residual_with(&k, f))
    }

    fn residual_with(&self, k: &Resolvent, f: &[C64]) -> f64 {
        let b = self.rhs(k);
        let r: Vec<C64> = self.apply(k, f).iter().zip(&b).map(|(a, c)| a - c).collect();
        let nb = norm(&b);
        if nb == 0.0 {
            norm(&r)
        } else {
            norm(&r) / nb
        }
    }

    fn neumann(&self, k: &Resolvent, b: &[C64]) -> Result<(Vec<C64>, usize)> {
        let mut f = b.to_vec();
        let nb = norm(b).max(f64::MIN_POSITIVE);
        for it in 1..=1000 {
            let kt = k.apply(&self.op.toeplitz.apply(&f));
            let next: Vec<C64> = b.iter().zip(kt).map(|(a, c)| a - 2.0 * self.t * c).collect();
            let change = norm(&next.iter().zip(&f).map(|(a, c)| a - c).collect::<Vec<_>>());
            f = next;
            if !change.is_finite() || change > 1e8 * nb {
                break;
            }
            if change <= 1e-14 * nb {
                return Ok((f, it));
            }
        }
        Err(ZdError::SolveFailure {
            reason: "Neumann series did not converge".into(),
            condition: f64::NAN,
        })
    }

    fn gmres(&self, k: &Resolvent, b: &[C64]) -> Result<(Vec<C64>, usize)> {
        let out = gmres(|v| self.apply(k, v), b, 60, 1e-12, 3000);
        if out.converged {
            Ok((out.x, out.iterations))
        } else {
            Err(ZdError::SolveFailure {
                reason: format!("GMRES stalled at relative residual {:e}", out.relres),
                condition: f64::NAN,
            })
        }
    }

    /// Assembles the matrix column by column and solves by LU.
    fn dense(&self, k: &Resolvent, b: &[C64]) -> Result<(Vec<C64>, usize, f64)> {
        let m = b.len();
        let cols: Vec<Vec<C64>> = par::map_range(Exec::Parallel, m, |j| {
            let mut e = vec![C64::new(0.0, 0.0); m];
            e[j] = C64::new(1.0, 0.0);
            self.apply(k, &e)
        });
        let a = DMatrix::from_fn(m, m, |i, j| cols[j][i]);
        let norm_a = cols
            .iter()
            .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let lu = a.lu();
        // ‖A⁻¹‖₁ from a handful of random probes
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut inv_norm = 0.0f64;
        for _ in 0..4 {
            let v = DVector::from_fn(m, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let nv: f64 = v.iter().map(|z| z.norm()).sum();
            match lu.solve(&v) {
                Some(s) => inv_norm = inv_norm.max(s.iter().map(|z| z.norm()).sum::<f64>() / nv),
                None => inv_norm = f64::INFINITY,
            }
        }
        let cond = norm_a * inv_norm;
        if !cond.is_finite() || cond > 1e12 {
            return Err(ZdError::SolveFailure {
                reason: "dense system is ill-conditioned".into(),
                condition: cond,
            });
        }
        let x = lu
            .solve(&DVector::from_column_slice(b))
            .ok_or_else(|| ZdError::SolveFailure {
                reason: "singular dense system".into(),
                condition: cond,
            })?;
        Ok((x.iter().copied().collect(), 1, cond))
    }
}

pub fn solve_resolvent(rp: &ResolventProblem) -> Result<ResolventSolution> {
    check_finite(rp.t, "t")?;
    let k = rp.resolvent()?;
    let b = rp.rhs(&k);
    let grid = *rp.op.grid();
    if rp.t == 0.0 || rp.op.datum.is_zero() {
        return Ok(ResolventSolution {
            spectrum: HalfLineSpectrum::new(grid, b)?,
            solver: rp.solver,
            iterations: 0,
            residual: 0.0,
        });
    }
    let perturbative = 2.0 * rp.t.abs() * rp.op.linf < 0.5 * rp.x.im;
    let (f, solver, iterations) = match rp.solver {
        Solver::Neumann => {
            let (f, n) = rp.neumann(&k, &b)?;
            (f, Solver::Neumann, n)
        }
        Solver::Gmres => {
            let (f, n) = rp.gmres(&k, &b)?;
            (f, Solver::Gmres, n)
        }
        Solver::Dense => {
            let (f, n, _) = rp.dense(&k, &b)?;
            (f, Solver::Dense, n)
        }
        Solver::Auto => {
            let first = if perturbative {
                rp.neumann(&k, &b).map(|r| (r, Solver::Neumann))
            } else {
                Err(ZdError::Unsupported(String::new()))
            };
            match first.or_else(|_| rp.gmres(&k, &b).map(|r| (r, Solver::Gmres))) {
                Ok(((f, n), s)) => (f, s, n),
                Err(_) => {
                    let (f, n, _) = rp.dense(&k, &b)?;
                    (f, Solver::Dense, n)
                }
            }
        }
    };
    let residual = rp.residual_with(&k, &f);
    Ok(ResolventSolution {
        spectrum: HalfLineSpectrum::new(grid, f)?,
        solver,
        iterations,
        residual,
    })
}

pub struct GmresOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub relres: f64,
    pub converged: bool,
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations, from a
/// zero initial guess.
pub fn gmres(apply: impl Fn(&[C64]) -> Vec<C64>, b: &[C64], restart: usize, tol: f64, max_iter: usize) -> GmresOutcome {
    let n = b.len();
    let nb = norm(b);
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    if nb == 0.0 {
        return GmresOutcome {
            x,
            iterations: 0,
            relres: 0.0,
            converged: true,
        };
    }
    let mut total = 0;
    let mut relres = 1.0;
    while total < max_iter {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        relres = beta / nb;
        if relres <= tol {
            return GmresOutcome {
                x,
                iterations: total,
                relres,
                converged: true,
            };
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hmat = vec![vec![zero; restart]; restart + 1];
        let mut cs = vec![zero; restart];
        let mut sn = vec![zero; restart];
        let mut g = vec![zero; restart + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..restart {
            let mut w = apply(&v[k]);
            for (j, vj) in v.iter().enumerate() {
                let hjk = dot(vj, &w);
                hmat[j][k] = hjk;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hjk * vi;
                }
            }
            let hn = norm(&w);
            hmat[k + 1][k] = C64::new(hn, 0.0);
            for j in 0..k {
                let t = cs[j].conj() * hmat[j][k] + sn[j].conj() * hmat[j + 1][k];
                hmat[j + 1][k] = -sn[j] * hmat[j][k] + cs[j] * hmat[j + 1][k];
                hmat[j][k] = t;
            }
            let (a, bb) = (hmat[k][k], hmat[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = a / den;
            sn[k] = bb / den;
            hmat[k][k] = C64::new(den, 0.0);
            hmat[k + 1][k] = zero;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            total += 1;
            k_used = k + 1;
            relres = g[k + 1].norm() / nb;
            if relres <= tol || hn == 0.0 || total >= max_iter {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        // back substitution
        let mut y = vec![zero; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hmat[i][j] * y[j];
            }
            y[i] = s / hmat[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&v[j]) {
                *xi += yj * vi;
            }
        }
        if k_used == 0 {
            break;
        }
    }
    let ax = apply(&x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    relres = relres.max(norm(&r) / nb);
    let converged = norm(&r) / nb <= tol * 10.0;
    GmresOutcome {
        x,
        iterations: total,
        relres,
        converged,
    }
}

// ---------------------------------------------------------------- Π u

impl HardyOperator {
    pub fn solve(&self, t: f64, x: C64, solver: Solver) -> Result<ResolventSolution> {
        solve_resolvent(&ResolventProblem { op: self, t, x, solver })
    }

    /// `Π u(t, x) = I₊(f) / (2iπ)` for `Im x ≥ σ_min`.
    pub fn pi_u(&self, t: f64, x: C64) -> Result<C64> {
        let s = self.solve(t, x, Solver::Auto)?;
        Ok(s.spectrum.zero_limit / (2.0 * PI * C64::i()))
    }

    /// `2 Re Π u(t, x + iσ)`: the Poisson extension of `ZD(t)` at height `σ`.
    pub fn boundary_trace(&self, t: f64, xgrid: &[f64], sigma: f64, exec: Exec) -> Result<ZdField> {
        if !(sigma >= SIGMA_MIN) {
            return Err(ZdError::InvalidArgument(format!(
                "σ = {sigma} is below σ_min = {SIGMA_MIN}"
            )));
        }
        let vals = par::map(exec, xgrid, |&x| self.pi_u(t, C64::new(x, sigma)).map(|p| 2.0 * p.re));
        let values = vals.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(ZdField::new(t, xgrid.to_vec(), values, "hardy"))
    }
}

pub fn pi_u(d: &InitialDatum, t: f64, x: C64) -> Result<C64> {
    HardyOperator::with_modes(d, DEFAULT_MODES)?.pi_u(t, x)
}

pub fn boundary_trace(d: &InitialDatum, t: f64, xgrid: &[f64], sigma: f64, exec: Exec) -> Result<ZdField> {
    HardyOperator::with_modes(d, DEFAULT_MODES)?.boundary_trace(t, xgrid, sigma, exec)
}

/// Poisson extension `∫ σ/(π((x-s)²+σ²)) v(s) ds` by the substitution
/// `s = x + σ tan θ`.
pub fn poisson_smooth(v: impl Fn(f64) -> f64, x: f64, sigma: f64, tol: f64) -> Result<f64> {
    let h = 0.5 * PI;
    // the integrand is concentrated near θ = 0; split there
    let pts: Vec<f64> = [-h, -1.4, -1.0, -0.5, 0.0, 0.5, 1.0, 1.4, h].to_vec();
    quadrature::integrate_with_breaks(
        |th| {
            if th.abs() >= h {
                0.0
            } else {
                v(x + sigma * th.tan()) / PI
            }
        },
        &pts,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz() -> InitialDatum {
        InitialDatum::Rational(crate::datum::Rational::lorentzian(1.0))
    }

    #[test]
    fn lorentzian_transform() {
        let d = lorentz();
        let g = default_grid(&d, 512).unwrap();
        let s = fourier_plus(&d, &g).unwrap();
        for (xi, v) in g.nodes().iter().zip(&s.values) {
            assert!((v - C64::new(PI * (-xi).exp(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn resolvent_of_exponential() {
        // cubic interpolation: the error drops 16x per halving of h
        let mut errs = Vec::new();
        for m in [1024, 2048, 4096] {
            let g = XiGrid::new(m, 30.0).unwrap();
            let f = HalfLineSpectrum::new(g, g.nodes().iter().map(|x| C64::new((-x).exp(), 0.0)).collect()).unwrap();
            let h = g_resolvent(&f, C64::i()).unwrap();
            let err = g
                .nodes()
                .iter()
                .zip(&h.values)
                .filter(|(xi, _)| **xi < 25.0)
                .map(|(xi, v)| (v - C64::i() * (-xi).exp() / 2.0).norm())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[2] < 1e-10, "{errs:?}");
        assert!(errs[0] / errs[1] > 12.0 && errs[1] / errs[2] > 12.0, "{errs:?}");
        let g = XiGrid::new(64, 1.0).unwrap();
        let f = HalfLineSpectrum::new(g, vec![C64::new(1.0, 0.0); 64]).unwrap();
        assert!(g_resolvent(&f, C64::new(0.0, 1e-4)).is_err());
    }

    #[test]
    fn t_zero_pi_u() {
        let v = pi_u(&lorentz(), 0.0, C64::i()).unwrap();
        assert!((v - C64::new(0.25, 0.0)).norm() < 1e-10, "{v}");
        assert_eq!(pi_u(&InitialDatum::zero(), 1.0, C64::i()).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn csv_header() {
        let g = XiGrid::new(8, 1.0).unwrap();
        let s = HalfLineSpectrum::new(g, vec![C64::new(1.0, 0.0); 8]).unwrap();
        assert!(s.to_csv().starts_with("xi,re,im\n"));
    }
}
