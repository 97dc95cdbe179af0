//! `zd`: evaluate, compare and verify the zero-dispersion limit backends.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use zd_core::bo_eps::{self, EpsRunConfig};
use zd_core::characteristics::{self, ZdField};
use zd_core::io::{self, CheckResult, RunManifest};
use zd_core::par::Exec;
use zd_core::suite::{self, SuiteOptions};
use zd_core::{closedforms, hardy, rational, InitialDatum, TestFunction, ZdError};

#[derive(Parser, Debug)]
#[command(
    name = "zd",
    version,
    about = "Zero-dispersion limit of Benjamin-Ono: backends, sweeps and checks"
)]
struct Cli {
    /// Output directory for CSV/JSON files.
    #[arg(long, global = true, default_value = "zd-out")]
    out: PathBuf,

    /// Run sweeps on the current thread only.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate ZD(t, ·) on a grid with one backend.
    Eval(EvalArgs),
    /// Evaluate several backends on the same grid and report their differences.
    CompareBackends(CompareArgs),
    /// Run a verification suite; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Weak gaps of the small-ε solver against the limit.
    EpsSweep(SweepArgs),
    /// Regenerate the golden step-profile tables.
    Fixtures,
    /// Caustic set and branch counts at time t.
    CriticalValues(DatumTime),
    /// Positive-frequency transform of the datum on the default ξ-grid.
    Spectrum(SpectrumArgs),
}

#[derive(Args, Debug)]
struct DatumTime {
    /// Datum as a JSON file path or an inline JSON object.
    #[arg(long)]
    datum: String,
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    dt: DatumTime,
    /// `lo:hi:n`
    #[arg(long, default_value = "-5:5:201", allow_hyphen_values = true)]
    grid: String,
    #[arg(long, value_enum, default_value_t = Backend::Characteristics)]
    backend: Backend,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    dt: DatumTime,
    #[arg(long, default_value = "-5:5:201", allow_hyphen_values = true)]
    grid: String,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Backend::Characteristics, Backend::Rational])]
    backends: Vec<Backend>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args, Debug, Clone, Copy)]
struct Knobs {
    /// Height of the boundary trace for the hardy backend.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// ξ-grid size (hardy) or Fourier modes (eps).
    #[arg(long)]
    modes: Option<usize>,
    /// Dispersion for the eps backend.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: SuiteName,
    /// Directory holding the golden tables.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Restrict to invariant groups (datum, characteristics, rational, hardy,
    /// bo_eps, closedforms, fixtures) and/or criteria (1..11).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Datum (defaults to the unit step mollified at δ = 0.1).
    #[arg(long)]
    datum: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    t: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05])]
    epsilons: Vec<f64>,
    /// Bump supports `a:b`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    phis: Vec<String>,
    #[arg(long, default_value_t = 8192)]
    modes: usize,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    datum: String,
    #[arg(long, default_value_t = hardy::DEFAULT_MODES)]
    modes: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Backend {
    Characteristics,
    Rational,
    Hardy,
    Eps,
    Closedform,
}

impl Backend {
    fn name(self) -> &'static str {
        match self {
            Backend::Characteristics => "characteristics",
            Backend::Rational => "rational",
            Backend::Hardy => "hardy",
            Backend::Eps => "eps",
            Backend::Closedform => "closedform",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SuiteName {
    Invariants,
    Acceptance,
    All,
}

/// Bad flag combination; reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

const VALID_PAIRS: &str = "valid backend/datum pairs:
  characteristics: sampled, rational, mollified, zero
  rational:        rational, zero
  hardy:           rational, sampled, zero
  eps:             sampled, mollified, zero (compact support)
  closedform:      step, piecewise_linear";

fn kind(d: &InitialDatum) -> &'static str {
    if d.is_zero() {
        return "zero";
    }
    match d {
        InitialDatum::SampledC1(_) => "sampled",
        InitialDatum::Rational(_) => "rational",
        InitialDatum::Step(_) => "step",
        InitialDatum::PiecewiseLinear(_) => "piecewise_linear",
        InitialDatum::Mollified(_) => "mollified",
    }
}

fn compatible(b: Backend, d: &InitialDatum) -> bool {
    let k = kind(d);
    match b {
        Backend::Characteristics => matches!(k, "sampled" | "rational" | "mollified" | "zero"),
        Backend::Rational => matches!(k, "rational" | "zero"),
        Backend::Hardy => matches!(k, "rational" | "sampled" | "zero"),
        Backend::Eps => matches!(k, "sampled" | "mollified" | "zero"),
        Backend::Closedform => matches!(k, "step" | "piecewise_linear"),
    }
}

fn require(b: Backend, d: &InitialDatum) -> Result<()> {
    if !compatible(b, d) {
        return Err(Usage(format!(
            "backend {} cannot take a {} datum\n{VALID_PAIRS}",
            b.name(),
            kind(d)
        ))
        .into());
    }
    Ok(())
}

fn load_datum(spec: &str) -> Result<InitialDatum> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec).with_context(|| format!("reading datum {spec}"))?
    };
    InitialDatum::from_json(&text).map_err(|e| Usage(format!("bad datum {spec}: {e}")).into())
}

fn grid(spec: &str) -> Result<Vec<f64>> {
    io::parse_grid(spec).map_err(|e| Usage(e.to_string()).into())
}

/// Right limit at points where the piecewise-linear fan is degenerate.
fn closedform_field(d: &InitialDatum, t: f64, xs: &[f64]) -> Result<ZdField> {
    match d {
        InitialDatum::Step(s) => Ok(closedforms::zd_step_grid(s, t, xs)),
        InitialDatum::PiecewiseLinear(u) => {
            let mut f = ZdField::new(t, xs.to_vec(), Vec::with_capacity(xs.len()), "closedform");
            for (i, &x) in xs.iter().enumerate() {
                let v = match closedforms::zd_piecewise_linear(u, t, x) {
                    Err(ZdError::CausticHit { .. }) => {
                        f.caustic[i] = true;
                        closedforms::zd_piecewise_linear(u, t, x + 1e-9 * (1.0 + x.abs()))?
                    }
                    r => r?,
                };
                f.values.push(v);
            }
            Ok(f)
        }
        _ => unreachable!("checked by require"),
    }
}

fn evaluate(b: Backend, d: &InitialDatum, t: f64, xs: &[f64], k: Knobs, exec: Exec) -> Result<ZdField> {
    require(b, d)?;
    Ok(match b {
        Backend::Characteristics => characteristics::zd_grid(d, t, xs, exec)?,
        Backend::Rational => match d {
            InitialDatum::Rational(r) => rational::zd_rational_grid(r, t, xs, exec)?,
            _ => ZdField::new(t, xs.to_vec(), vec![0.0; xs.len()], "rational"),
        },
        Backend::Hardy => {
            let m = k.modes.unwrap_or(hardy::DEFAULT_MODES);
            if d.is_zero() {
                ZdField::new(t, xs.to_vec(), vec![0.0; xs.len()], "hardy")
            } else {
                hardy::HardyOperator::with_modes(d, m)?.boundary_trace(t, xs, k.sigma, exec)?
            }
        }
        Backend::Eps => {
            let mut cfg = EpsRunConfig::new(d.clone(), k.epsilon, vec![t]);
            if let Some(m) = k.modes {
                cfg.modes = m;
            }
            let sol = bo_eps::run(&cfg)?;
            let (lo, hi) = (xs[0], xs[xs.len() - 1]);
            let keep: Vec<usize> = (0..sol.x.len()).filter(|&j| sol.x[j] >= lo && sol.x[j] <= hi).collect();
            ZdField::new(
                t,
                keep.iter().map(|&j| sol.x[j]).collect(),
                keep.iter().map(|&j| sol.snapshots[0][j]).collect(),
                "eps",
            )
        }
        Backend::Closedform => closedform_field(d, t, xs)?,
    })
}

struct Run {
    out: PathBuf,
    start: Instant,
    manifest: RunManifest,
}

impl Run {
    fn new(out: &Path, exec: Exec) -> Result<Self> {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let manifest = RunManifest {
            command: std::env::args().collect(),
            threads: if exec.is_parallel() { zd_core::par::threads() } else { 1 },
            ..Default::default()
        };
        Ok(Self {
            out: out.to_path_buf(),
            start: Instant::now(),
            manifest,
        })
    }

    fn datum(&mut self, d: &InitialDatum) {
        self.manifest.datum = serde_json::to_value(d.to_descriptor()).ok();
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.out.join(name);
        std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        self.manifest.outputs.push(name.to_string());
        Ok(p)
    }

    fn finish(mut self, name: &str) -> Result<()> {
        self.manifest.wall_clock_s = self.start.elapsed().as_secs_f64();
        self.manifest.outputs.push(name.to_string());
        self.manifest.write(&self.out.join(name))?;
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("ZD_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        set_threads(n);
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) {}

fn run(cli: Cli) -> Result<ExitCode> {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    match cli.cmd {
        Cmd::Eval(a) => cmd_eval(&cli.out, exec, a),
        Cmd::CompareBackends(a) => cmd_compare(&cli.out, exec, a),
        Cmd::Verify(a) => cmd_verify(&cli.out, exec, a),
        Cmd::EpsSweep(a) => cmd_eps_sweep(&cli.out, exec, a),
        Cmd::Fixtures => {
            let mut r = Run::new(&cli.out, exec)?;
            for p in suite::write_fixtures(&cli.out)? {
                let name = p
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                println!("{}", p.display());
                r.manifest.outputs.push(name);
            }
            r.manifest.backends = vec!["closedform".into()];
            r.manifest.grid = Some("-3:13:1601".into());
            r.finish("fixtures.manifest.json")?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::CriticalValues(a) => {
            let d = load_datum(&a.datum)?;
            let mut r = Run::new(&cli.out, exec)?;
            r.datum(&d);
            let set = characteristics::critical_values(&d, a.t)?;
            println!("{}", set.to_json());
            r.write(&format!("critical_values_t{}.json", a.t), &(set.to_json() + "\n"))?;
            r.manifest.backends = vec!["characteristics".into()];
            r.finish("critical-values.manifest.json")?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Spectrum(a) => {
            let d = load_datum(&a.datum)?;
            let g = hardy::default_grid(&d, a.modes).map_err(|e| Usage(e.to_string()))?;
            let s = hardy::fourier_plus(&d, &g)?;
            let mut r = Run::new(&cli.out, exec)?;
            r.datum(&d);
            r.write("spectrum.csv", &s.to_csv())?;
            r.manifest.backends = vec!["hardy".into()];
            r.manifest.parameters.insert("modes".into(), json!(a.modes));
            r.manifest.parameters.insert("xi_max".into(), json!(g.xi_max));
            r.finish("spectrum.manifest.json")?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_eval(out: &Path, exec: Exec, a: EvalArgs) -> Result<ExitCode> {
    let d = load_datum(&a.dt.datum)?;
    let xs = grid(&a.grid)?;
    require(a.backend, &d)?;
    let mut r = Run::new(out, exec)?;
    r.datum(&d);
    let f = evaluate(a.backend, &d, a.dt.t, &xs, a.knobs, exec)?;
    let name = format!("zd_{}_t{}.csv", a.backend.name(), a.dt.t);
    let p = r.write(&name, &f.to_csv())?;
    println!("{}", p.display());
    r.manifest.backends = vec![a.backend.name().into()];
    r.manifest.grid = Some(a.grid.clone());
    r.manifest.parameters = knob_params(a.backend, a.dt.t, a.knobs);
    r.finish(&format!("eval_{}.manifest.json", a.backend.name()))?;
    Ok(ExitCode::SUCCESS)
}

fn knob_params(b: Backend, t: f64, k: Knobs) -> BTreeMap<String, serde_json::Value> {
    let mut m = BTreeMap::new();
    m.insert("t".into(), json!(t));
    match b {
        Backend::Hardy => {
            m.insert("sigma".into(), json!(k.sigma));
            m.insert("modes".into(), json!(k.modes.unwrap_or(hardy::DEFAULT_MODES)));
        }
        Backend::Eps => {
            m.insert("epsilon".into(), json!(k.epsilon));
            if let Some(n) = k.modes {
                m.insert("modes".into(), json!(n));
            }
        }
        _ => {}
    }
    m
}

fn cmd_compare(out: &Path, exec: Exec, a: CompareArgs) -> Result<ExitCode> {
    let d = load_datum(&a.dt.datum)?;
    let xs = grid(&a.grid)?;
    if a.backends.contains(&Backend::Eps) {
        return Err(Usage("compare-backends evaluates on a common grid; eps has its own grid, use eval".into()).into());
    }
    for b in &a.backends {
        require(*b, &d)?;
    }
    let mut r = Run::new(out, exec)?;
    r.datum(&d);
    let mut fields = Vec::new();
    for b in &a.backends {
        let f = evaluate(*b, &d, a.dt.t, &xs, a.knobs, exec)?;
        r.write(&format!("zd_{}_t{}.csv", b.name(), a.dt.t), &f.to_csv())?;
        fields.push((*b, f));
    }
    let mut header = String::from("x");
    for (b, _) in &fields {
        header.push(',');
        header.push_str(b.name());
    }
    let mut table = header + "\n";
    for (i, x) in xs.iter().enumerate() {
        let cells: Vec<String> = std::iter::once(*x)
            .chain(fields.iter().map(|(_, f)| f.values[i]))
            .map(io::fmt_f64)
            .collect();
        table.push_str(&cells.join(","));
        table.push('\n');
    }
    r.write(&format!("compare_t{}.csv", a.dt.t), &table)?;
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            let (fa, fb) = (&fields[i].1, &fields[j].1);
            let diff = (0..xs.len())
                .filter(|&k| !fa.caustic[k] && !fb.caustic[k])
                .map(|k| (fa.values[k] - fb.values[k]).abs())
                .fold(0.0, f64::max);
            let key = format!("{}-{}", fields[i].0.name(), fields[j].0.name());
            println!("{key}: sup |diff| = {diff:.3e} off caustics");
            r.manifest.parameters.insert(format!("sup_diff {key}"), json!(diff));
        }
    }
    r.manifest.backends = a.backends.iter().map(|b| b.name().to_string()).collect();
    r.manifest.grid = Some(a.grid.clone());
    r.manifest.parameters.insert("t".into(), json!(a.dt.t));
    r.finish("compare.manifest.json")?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(out: &Path, exec: Exec, a: VerifyArgs) -> Result<ExitCode> {
    let opts = SuiteOptions {
        fixtures: a.fixtures.unwrap_or_else(suite::default_fixture_dir),
        exec,
    };
    let mut r = Run::new(out, exec)?;
    let (criteria, groups): (Vec<&String>, Vec<&String>) = a.only.iter().partition(|o| o.parse::<usize>().is_ok());
    let criteria: Vec<usize> = criteria.iter().filter_map(|c| c.parse().ok()).collect();
    let groups: Vec<&str> = groups.iter().map(|g| g.as_str()).collect();
    if let Some(bad) = criteria.iter().find(|n| !(1..=11).contains(*n)) {
        return Err(Usage(format!("no acceptance criterion {bad}; expected 1..11")).into());
    }
    if let Some(bad) = groups.iter().find(|g| !suite::INVARIANT_GROUPS.contains(g)) {
        return Err(Usage(format!(
            "no invariant group {bad}; expected one of {:?}",
            suite::INVARIANT_GROUPS
        ))
        .into());
    }
    let filtered = !a.only.is_empty();
    let mut checks: Vec<CheckResult> = Vec::new();
    if matches!(a.suite, SuiteName::Invariants | SuiteName::All) && (!filtered || !groups.is_empty()) {
        let picked: Vec<&str> = if filtered {
            groups
        } else {
            suite::INVARIANT_GROUPS.to_vec()
        };
        for c in suite::invariant_groups(&opts, &picked) {
            println!(
                "{} {:<40} {:.3e} (tol {:.0e})  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance,
                c.detail
            );
            checks.push(c);
        }
    }
    if matches!(a.suite, SuiteName::Acceptance | SuiteName::All) && (!filtered || !criteria.is_empty()) {
        let picked: Vec<usize> = if filtered { criteria } else { (1..=11).collect() };
        for n in picked {
            let c = suite::criterion(n, &opts);
            println!("{}", c.line());
            checks.extend(c.checks.into_iter().map(|mut k| {
                if !k.name.starts_with('A') {
                    k.name = format!("A{n} {}", k.name);
                }
                k
            }));
        }
    }
    if checks.is_empty() {
        return Err(Usage("--only selected nothing in this suite".into()).into());
    }
    let suite_name = format!("{:?}", a.suite).to_lowercase();
    r.write(
        &format!("verify_{suite_name}.json"),
        &(serde_json::to_string_pretty(&checks)? + "\n"),
    )?;
    let failed: Vec<&CheckResult> = checks.iter().filter(|c| !c.passed).collect();
    for c in &failed {
        eprintln!("FAILED {}: {}", c.name, c.detail);
    }
    println!("{} checks, {} failed", checks.len(), failed.len());
    r.manifest.tolerances = checks.iter().map(|c| (c.name.clone(), c.tolerance)).collect();
    r.manifest.checks = checks.clone();
    r.manifest
        .parameters
        .insert("fixtures".into(), json!(opts.fixtures.display().to_string()));
    r.finish(&format!("verify_{suite_name}.manifest.json"))?;
    Ok(if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn parse_phis(specs: &[String]) -> Result<Vec<TestFunction>> {
    if specs.is_empty() {
        return Ok(suite::sweep_bumps());
    }
    specs
        .iter()
        .map(|s| {
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| Usage(format!("bump support must be a:b, got {s:?}")))?;
            let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
            TestFunction::bump(a, b, 1.0).map_err(|e| Usage(e.to_string()).into())
        })
        .collect()
}

fn cmd_eps_sweep(out: &Path, exec: Exec, a: SweepArgs) -> Result<ExitCode> {
    let d = match &a.datum {
        Some(s) => load_datum(s)?,
        None => suite::sweep_datum(),
    };
    require(Backend::Eps, &d)?;
    let phis = parse_phis(&a.phis)?;
    let mut base = EpsRunConfig::new(
        d.clone(),
        a.epsilons.iter().copied().fold(f64::INFINITY, f64::min),
        vec![],
    );
    base.modes = a.modes;
    base.times = vec![a.t];
    base.validate()
        .map_err(|e| Usage(format!("smallest ε fails the solver preconditions: {e}")))?;
    let mut r = Run::new(out, exec)?;
    r.datum(&d);
    let rows = bo_eps::eps_sweep(&base, a.t, &a.epsilons, &phis, exec)?;
    let mut csv = String::from("epsilon,phi_id,gap\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{}\n",
            io::fmt_f64(row.epsilon),
            row.phi_id,
            io::fmt_f64(row.gap)
        ));
    }
    r.write("eps_sweep.csv", &csv)?;
    // ε listed from large to small: the gap should shrink along the list
    let mut order: Vec<f64> = a.epsilons.clone();
    order.sort_by(|p, q| q.total_cmp(p));
    let mut verdicts = Vec::new();
    for (i, phi) in phis.iter().enumerate() {
        let g: Vec<f64> = order
            .iter()
            .filter_map(|e| rows.iter().find(|r| r.epsilon == *e && r.phi_id == i))
            .map(|r| r.gap)
            .collect();
        let decreasing = g.windows(2).all(|w| w[1] < w[0]);
        let (lo, hi) = phi.support();
        println!(
            "phi {i} on [{lo}, {hi}]: gaps {} -> {}",
            g.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "),
            if decreasing { "decreasing" } else { "NOT decreasing" }
        );
        verdicts.push(json!({ "phi_id": i, "support": [lo, hi], "decreasing": decreasing }));
    }
    let drift = rows.iter().map(|r| r.l2_drift).fold(0.0, f64::max);
    println!("max L2 drift {drift:.2e}");
    r.manifest.backends = vec!["eps".into()];
    r.manifest.parameters.insert("t".into(), json!(a.t));
    r.manifest.parameters.insert("epsilons".into(), json!(a.epsilons));
    r.manifest.parameters.insert("modes".into(), json!(a.modes));
    r.manifest.parameters.insert("verdicts".into(), json!(verdicts));
    r.manifest.parameters.insert("l2_drift_max".into(), json!(drift));
    r.manifest.tolerances.insert("l2_drift".into(), 1e-6);
    r.finish("eps_sweep.manifest.json")?;
    Ok(ExitCode::SUCCESS)
}
