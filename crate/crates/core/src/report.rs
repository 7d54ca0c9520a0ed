//! Parameter sweeps, tabular output and the validation suites.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::invariants::{collective_terms, invariant_set};
use crate::linalg::{collective_operator, pauli, Axis, DenseOperator};
use crate::precision::{
    closed_form_precision, oracle_precision, theta_limit_gain, PrecisionResult, Scheme,
    ThetaDerivativeSpec,
};
use crate::states::{MerminKind, NoiseModel, ProbeSpec, ReducedData};
use crate::twirl::{
    collective_x2, haar_mc_twirl, mc_moment_tensor, phi2_analytic, phi4_analytic,
    phi4_moment_tensor, HaarSampler, TwirledObservable,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

impl FromStr for Spacing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            _ => Err(Error::InvalidParameter(format!("unknown spacing `{s}` (linear, log)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl ThetaGrid {
    pub fn new(start: f64, stop: f64, count: usize, spacing: Spacing) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidParameter("grid needs at least two points".into()));
        }
        if !(start < stop) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidParameter(format!("need start < stop, got {start}, {stop}")));
        }
        if spacing == Spacing::Log && start <= 0.0 {
            return Err(Error::InvalidParameter("log grid needs start > 0".into()));
        }
        Ok(Self { start, stop, count, spacing })
    }

    pub fn points(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                if i == 0 {
                    return self.start;
                }
                if i + 1 == self.count {
                    return self.stop;
                }
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

/// θ used for each `N` in an `N` sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "theta")]
pub enum ThetaRule {
    InverseN,
    Fixed(f64),
}

impl ThetaRule {
    pub fn theta(&self, n: usize) -> f64 {
        match *self {
            ThetaRule::InverseN => 1.0 / n as f64,
            ThetaRule::Fixed(t) => t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidParameter(format!("unknown format `{s}` (csv, json)"))),
        }
    }
}

/// Sweep description. `grid` drives θ sweeps, `n_values` and `theta_rule`
/// drive `N` sweeps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub scheme: Scheme,
    #[serde(serialize_with = "as_display")]
    pub model: ProbeSpec,
    pub grid: Option<ThetaGrid>,
    pub n_values: Vec<usize>,
    pub theta_rule: ThetaRule,
    pub p: f64,
    pub seed: Option<u64>,
}

fn as_display<S: serde::Serializer>(spec: &ProbeSpec, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(spec)
}

impl SweepConfig {
    fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub variance: f64,
    pub gain: f64,
    pub scheme: Scheme,
    pub n: usize,
    pub p: f64,
    pub degenerate: bool,
}

impl From<PrecisionResult> for SweepRow {
    fn from(r: PrecisionResult) -> Self {
        Self {
            theta: r.theta,
            variance: r.variance_theta,
            gain: r.gain,
            scheme: r.scheme,
            n: r.n_parties,
            p: r.noise_p,
            degenerate: r.degenerate,
        }
    }
}

/// Closed-form precision over the θ grid at the model's `N`. Rows are in grid
/// order.
pub fn sweep_theta(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let grid = cfg
        .grid
        .ok_or_else(|| Error::InvalidParameter("θ sweep needs a grid".into()))?;
    let noise = cfg.noise()?;
    Ok(grid
        .points()
        .par_iter()
        .map(|&theta| {
            closed_form_precision(&cfg.model, cfg.scheme, theta, noise, ThetaDerivativeSpec::Analytic).into()
        })
        .collect())
}

/// Closed-form precision for each `N` at `θ = rule(N)`.
pub fn sweep_n(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.n_values.is_empty() {
        return Err(Error::InvalidParameter("N sweep needs at least one N".into()));
    }
    let noise = cfg.noise()?;
    let specs: Vec<ProbeSpec> = cfg
        .n_values
        .iter()
        .map(|&n| {
            let spec = cfg.model.with_n(n);
            // re-parse to apply the grammar's per-kind checks (e.g. OAT needs N >= 2)
            spec.to_string().parse::<ProbeSpec>()
        })
        .collect::<Result<_>>()?;
    Ok(specs
        .par_iter()
        .map(|spec| {
            let theta = cfg.theta_rule.theta(spec.n_parties());
            closed_form_precision(spec, cfg.scheme, theta, noise, ThetaDerivativeSpec::Analytic).into()
        })
        .collect())
}

/// `{:.16e}` (17 significant digits, exact round trip) or `inf`/`-inf`/`nan`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub const CSV_HEADER: [&str; 7] = ["theta", "variance", "gain", "scheme", "n", "p", "degenerate"];

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Output(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            format_float(r.theta),
            format_float(r.variance),
            format_float(r.gain),
            r.scheme.name().to_string(),
            r.n.to_string(),
            format_float(r.p),
            r.degenerate.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))?;
    Ok(())
}

fn json_float(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(format_float(x))
    }
}

/// JSON document: `{"metadata": {...}, "rows": [...]}`. Non-finite numbers
/// are written as the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn sweep_json(rows: &[SweepRow], cfg: &SweepConfig, command: &str) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "theta": json_float(r.theta),
                "variance": json_float(r.variance),
                "gain": json_float(r.gain),
                "scheme": r.scheme.name(),
                "n": r.n,
                "p": json_float(r.p),
                "degenerate": r.degenerate,
            })
        })
        .collect();
    json!({
        "metadata": {
            "command": command,
            "version": VERSION,
            "seed": cfg.seed,
            "config": cfg,
        },
        "rows": rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Twirl,
    Oracle,
    Limits,
    All,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "twirl" => Ok(Suite::Twirl),
            "oracle" => Ok(Suite::Oracle),
            "limits" => Ok(Suite::Limits),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidParameter(format!(
                "unknown suite `{s}` (twirl, oracle, limits, all)"
            ))),
        }
    }
}

/// One validation check. `residual` is the quantity compared against
/// `tolerance` (relative error, entrywise difference or a σ-count).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    #[serde(serialize_with = "finite_or_string")]
    pub value: f64,
    #[serde(serialize_with = "finite_or_string")]
    pub expected: f64,
    #[serde(serialize_with = "finite_or_string")]
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn finite_or_string<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_str(&format_float(*x))
    }
}

impl Check {
    fn new(suite: Suite, name: impl Into<String>, value: f64, expected: f64, residual: f64, tolerance: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            value,
            expected,
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }

    /// Relative-error check; `expected == 0` falls back to the absolute error.
    fn relative(suite: Suite, name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let residual = if value == expected {
            0.0
        } else if expected == 0.0 {
            value.abs()
        } else {
            ((value - expected) / expected).abs()
        };
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        Self::new(suite, name, value, expected, residual, tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub suite: Suite,
    pub seed: u64,
    pub samples: usize,
    pub passed: bool,
    pub failures: usize,
    pub checks: Vec<Check>,
}

/// Monte Carlo sample count used by the twirl suite.
pub const DEFAULT_SAMPLES: usize = 100_000;

pub fn validate(suite: Suite, seed: u64, samples: usize) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Twirl | Suite::All) {
        checks.extend(twirl_checks(seed, samples)?);
    }
    if matches!(suite, Suite::Oracle | Suite::All) {
        checks.extend(oracle_checks()?);
    }
    if matches!(suite, Suite::Limits | Suite::All) {
        checks.extend(limit_checks());
    }
    let failures = checks.iter().filter(|c| !c.passed).count();
    Ok(ValidationReport {
        suite,
        seed,
        samples,
        passed: failures == 0,
        failures,
        checks,
    })
}

const SIGMAS: f64 = 5.0;
const SIGMA_FLOOR: f64 = 1e-12;

fn sigma_check(name: &str, est: &TwirledObservable, reference: &DenseOperator) -> Check {
    let dev = est.max_sigma_deviation(reference, SIGMA_FLOOR).unwrap_or(f64::INFINITY);
    Check::new(Suite::Twirl, name, dev, 0.0, dev, SIGMAS)
}

fn twirl_checks(seed: u64, samples: usize) -> Result<Vec<Check>> {
    let sampler = HaarSampler::new(seed, 0);
    let sz = pauli(Axis::Z);
    let mut out = Vec::new();

    let first = haar_mc_twirl(&sz, 1, &sampler.substream(1), samples, false, 1)?;
    out.push(sigma_check("first moment of sigma_z vanishes", &first, &DenseOperator::zeros(2)));

    let phi2 = haar_mc_twirl(&sz, 2, &sampler.substream(2), samples, false, 1)?;
    out.push(sigma_check("phi2 Monte Carlo vs analytic", &phi2, &phi2_analytic(2)?.operator));

    let phi4 = haar_mc_twirl(&sz, 4, &sampler.substream(3), samples, false, 1)?;
    out.push(sigma_check("phi4 Monte Carlo vs analytic", &phi4, &phi4_analytic().operator));

    let moments = mc_moment_tensor(&sampler.substream(4), samples)?;
    let mut worst: f64 = 0.0;
    for (a, &aa) in Axis::ALL.iter().enumerate() {
        for (b, &bb) in Axis::ALL.iter().enumerate() {
            for (c, &cc) in Axis::ALL.iter().enumerate() {
                for (d, &dd) in Axis::ALL.iter().enumerate() {
                    let diff = (moments.mean[a][b][c][d] - phi4_moment_tensor(aa, bb, cc, dd)).abs();
                    worst = worst.max(diff / (moments.std_err[a][b][c][d] + SIGMA_FLOOR));
                }
            }
        }
    }
    out.push(Check::new(Suite::Twirl, "fourth-moment tensor Monte Carlo", worst, 0.0, worst, SIGMAS));

    let jz = collective_operator(Axis::Z, 2);
    let x2 = haar_mc_twirl(&jz, 2, &sampler.substream(5), samples, true, 2)?;
    out.push(sigma_check("collective X2 Monte Carlo vs analytic (N=2)", &x2, &collective_x2(2)?.operator));

    let again = haar_mc_twirl(&sz, 2, &sampler.substream(2), samples.min(5_000), false, 1)?;
    let again2 = haar_mc_twirl(&sz, 2, &sampler.substream(2), samples.min(5_000), false, 1)?;
    let drift = again.operator.max_abs_diff(&again2.operator);
    out.push(Check::new(Suite::Twirl, "fixed seed reproduces estimate", drift, 0.0, drift, 0.0));
    Ok(out)
}

fn oracle_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let thetas = [0.1, 0.3, 0.7];
    let noiseless = NoiseModel::noiseless();
    for n in 2..=6 {
        let mut specs = vec![ProbeSpec::Oat { n }];
        specs.push(ProbeSpec::Mermin { kind: MerminKind::Q1, n });
        specs.push(ProbeSpec::Mermin { kind: MerminKind::Q2, n });
        for spec in specs {
            let mut worst: f64 = 0.0;
            for &theta in &thetas {
                let closed = spec.reduced(theta, noiseless)?;
                let dense = ReducedData::from_state(&spec.full_state(theta, noiseless)?)?;
                worst = worst.max(closed.max_abs_diff(&dense));
            }
            out.push(Check::new(
                Suite::Oracle,
                format!("{spec} closed form vs full state"),
                worst,
                0.0,
                worst,
                1e-10,
            ));
        }
    }
    let cases: [(Scheme, &[usize]); 4] = [
        (Scheme::TwoCopy, &[2, 3, 4]),
        (Scheme::FourCopy, &[2]),
        (Scheme::Collective, &[2, 3, 4]),
        (Scheme::CollectiveExact, &[2, 3, 4]),
    ];
    for (scheme, ns) in cases {
        for &n in ns {
            let spec = ProbeSpec::Oat { n };
            let mut worst_value = (0.0, 0.0);
            let mut worst: f64 = 0.0;
            for &theta in &thetas {
                let a = closed_form_precision(&spec, scheme, theta, noiseless, ThetaDerivativeSpec::Analytic);
                let b = oracle_precision(&spec, scheme, theta, noiseless)?;
                let r = ((a.variance_theta - b.variance_theta) / b.variance_theta).abs();
                if !(r <= worst) {
                    worst = if r.is_nan() { f64::INFINITY } else { r };
                    worst_value = (a.variance_theta, b.variance_theta);
                }
            }
            out.push(Check::new(
                Suite::Oracle,
                format!("{scheme} variance vs dense oracle, {spec}"),
                worst_value.0,
                worst_value.1,
                worst,
                1e-8,
            ));
        }
    }
    let spec = ProbeSpec::Oat { n: 4 };
    let noise = NoiseModel::new(0.9)?;
    let scaled = spec.reduced(0.2, noiseless)?;
    let inv = crate::invariants::apply_noise_scaling(
        &invariant_set(&scaled),
        Some(&collective_terms(&scaled, None)?),
        noise,
    );
    let dense = ReducedData::from_state(&spec.full_state(0.2, noise)?)?;
    let inv_d = invariant_set(&dense);
    let coll_d = collective_terms(&dense, None)?;
    let coll_s = inv.1.expect("collective terms requested");
    let pairs = [
        ("S1", inv.0.s1, inv_d.s1),
        ("S2", inv.0.s2, inv_d.s2),
        ("F1", inv.0.f1.unwrap_or(f64::NAN), inv_d.f1.unwrap_or(f64::NAN)),
        ("F2", inv.0.f2.unwrap_or(f64::NAN), inv_d.f2.unwrap_or(f64::NAN)),
        ("K1", coll_s.k1, coll_d.k1),
        ("K2", coll_s.k2, coll_d.k2),
        ("K2'", coll_s.k2_prime, coll_d.k2_prime),
        ("sum <J^2>", coll_s.sum_j_sq, coll_d.sum_j_sq),
    ];
    for (name, a, b) in pairs {
        let r = (a - b).abs();
        out.push(Check::new(
            Suite::Oracle,
            format!("noise-scaled {name} vs depolarized state (N=4, p=0.9)"),
            a,
            b,
            if r.is_nan() { f64::INFINITY } else { r },
            1e-10,
        ));
    }
    Ok(out)
}

/// The closed-form θ → 0 gains against their quoted expressions.
fn limit_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let noiseless = NoiseModel::noiseless();
    for n in 2..=8usize {
        let nf = n as f64;
        let oat = ProbeSpec::Oat { n };
        let mermin = ProbeSpec::Mermin { kind: MerminKind::Q1, n };
        let g = |spec: &ProbeSpec, scheme| theta_limit_gain(spec, scheme, noiseless).gain;
        out.push(Check::relative(Suite::Limits, format!("OAT G2 -> (N-1)/4, N={n}"), g(&oat, Scheme::TwoCopy), (nf - 1.0) / 4.0, 1e-10));
        out.push(Check::relative(Suite::Limits, format!("OAT G4 -> 3(N-1)/8, N={n}"), g(&oat, Scheme::FourCopy), 3.0 * (nf - 1.0) / 8.0, 1e-10));
        out.push(Check::relative(
            Suite::Limits,
            format!("Mermin G2 -> 4^N/(N+1), N={n}"),
            g(&mermin, Scheme::TwoCopy),
            4f64.powi(n as i32) / (nf + 1.0),
            1e-10,
        ));
        out.push(Check::relative(
            Suite::Limits,
            format!("Mermin G4 -> 3*2^(2N+1)/(3N+1), N={n}"),
            g(&mermin, Scheme::FourCopy),
            3.0 * 2f64.powi(2 * n as i32 + 1) / (3.0 * nf + 1.0),
            1e-10,
        ));
        if n >= 3 {
            out.push(Check::relative(
                Suite::Limits,
                format!("OAT G_C2 -> N^2(N-1)/(2N(3N-5)+8), N={n}"),
                g(&oat, Scheme::Collective),
                nf * nf * (nf - 1.0) / (2.0 * nf * (3.0 * nf - 5.0) + 8.0),
                1e-10,
            ));
        }
    }
    out
}

/// Result of the `twirl-mc` command: Monte Carlo estimate of the twirl of
/// `σ_z` (local) or `J_z` (collective) against its analytic form.
#[derive(Clone, Debug, Serialize)]
pub struct TwirlMcReport {
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
    pub collective: bool,
    pub n: usize,
    pub low_samples: bool,
    pub dim: usize,
    pub operator_re: Vec<Vec<f64>>,
    pub operator_im: Vec<Vec<f64>>,
    pub analytic_available: bool,
    #[serde(serialize_with = "finite_or_string")]
    pub max_abs_deviation: f64,
    #[serde(serialize_with = "finite_or_string")]
    pub max_sigma_deviation: f64,
}

pub fn twirl_mc_report(k: usize, samples: usize, seed: u64, collective: bool, n: usize) -> Result<TwirlMcReport> {
    let sampler = HaarSampler::new(seed, 0);
    let (obs, n_eff) = if collective {
        (collective_operator(Axis::Z, n), n)
    } else {
        (pauli(Axis::Z), 1)
    };
    let est = haar_mc_twirl(&obs, k, &sampler, samples, collective, n_eff)?;
    let analytic = match (collective, k) {
        (false, 1) => Some(DenseOperator::zeros(2)),
        (false, 2) => Some(phi2_analytic(2)?.operator),
        (false, 4) => Some(phi4_analytic().operator),
        (true, 2) => Some(collective_x2(n)?.operator),
        _ => None,
    };
    let (max_abs, max_sigma) = match &analytic {
        Some(a) => (
            est.operator.max_abs_diff(a),
            est.max_sigma_deviation(a, SIGMA_FLOOR).unwrap_or(f64::INFINITY),
        ),
        None => (f64::NAN, f64::NAN),
    };
    let m = est.operator.matrix();
    let rows = |f: fn(&crate::linalg::C64) -> f64| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect()).collect()
    };
    Ok(TwirlMcReport {
        k,
        samples,
        seed,
        collective,
        n: n_eff,
        low_samples: est.low_samples,
        dim: m.nrows(),
        operator_re: rows(|z| z.re),
        operator_im: rows(|z| z.im),
        analytic_available: analytic.is_some(),
        max_abs_deviation: max_abs,
        max_sigma_deviation: max_sigma,
    })
}

/// Invariants of a closed-form model at `θ` with noise, for the `invariants`
/// command.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantReport {
    #[serde(serialize_with = "as_display")]
    pub model: ProbeSpec,
    pub theta: f64,
    pub p: f64,
    pub invariants: crate::invariants::InvariantSet,
    pub collective: crate::invariants::CollectiveTerms,
    pub pi: crate::invariants::PIReduction,
}

pub fn invariant_report(model: &ProbeSpec, theta: f64, p: f64) -> Result<InvariantReport> {
    let noise = NoiseModel::new(p)?;
    let reduced = model.reduced(theta, noise)?;
    Ok(InvariantReport {
        model: *model,
        theta,
        p,
        invariants: invariant_set(&reduced),
        collective: collective_terms(&reduced, None)?,
        pi: crate::invariants::pi_reduction(&reduced)?,
    })
}
