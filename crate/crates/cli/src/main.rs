use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use frameless::report::{
    format_float, invariant_report, sweep_json, sweep_n, sweep_theta, twirl_mc_report, validate, write_csv,
    OutputFormat, Spacing, SweepConfig, ThetaGrid, ThetaRule, ValidationReport, DEFAULT_SAMPLES,
};
use frameless::{ProbeSpec, Scheme};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "frameless", version, about = "Reference-frame-independent metrology: sweeps, validation and invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// csv or json
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Output file (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct JsonOutput {
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Gain and variance over a θ grid at fixed N
    SweepTheta {
        /// two-copy, four-copy, collective or collective-exact
        #[arg(long, default_value = "two-copy")]
        scheme: Scheme,
        /// State spec, e.g. oat:N=100
        #[arg(long)]
        model: ProbeSpec,
        #[arg(long, default_value_t = 1e-4)]
        start: f64,
        #[arg(long, default_value_t = 0.1)]
        stop: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// linear or log
        #[arg(long, default_value = "log")]
        spacing: Spacing,
        /// Depolarizing parameter, 1 is noiseless
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Gain and variance over a range of N at θ = 1/N or a fixed θ
    SweepN {
        #[arg(long, default_value = "two-copy")]
        scheme: Scheme,
        /// State spec; N may be omitted, e.g. `oat:` or `mermin1:`
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 10)]
        n_min: usize,
        #[arg(long, default_value_t = 200)]
        n_max: usize,
        #[arg(long, default_value_t = 1)]
        n_step: usize,
        /// inverse-n or a fixed θ value
        #[arg(long, default_value = "inverse-n", value_parser = parse_theta_rule)]
        theta_rule: ThetaRule,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo Haar twirl of σz (or J_z with --collective) against the analytic form
    TwirlMc {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        collective: bool,
        #[arg(long, default_value_t = 2, requires = "collective")]
        n: usize,
        #[command(flatten)]
        output: JsonOutput,
    },
    /// Run the cross-check suites; exits nonzero if any check fails
    Validate {
        /// twirl, oracle, limits or all
        #[arg(default_value = "all")]
        suite: frameless::report::Suite,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[command(flatten)]
        output: JsonOutput,
    },
    /// Invariants and collective terms of a state spec at θ and p
    Invariants {
        #[arg(long)]
        model: ProbeSpec,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[command(flatten)]
        output: JsonOutput,
    },
}

fn parse_theta_rule(s: &str) -> Result<ThetaRule, String> {
    match s {
        "inverse-n" | "1/n" => Ok(ThetaRule::InverseN),
        _ => s
            .parse::<f64>()
            .map(ThetaRule::Fixed)
            .map_err(|_| format!("expected `inverse-n` or a number, got `{s}`")),
    }
}

// `oat:` or `oat` become `oat:N=<n>`; specs carrying N are left alone.
fn model_with_n(model: &str, n: usize) -> Result<ProbeSpec, frameless::Error> {
    let (kind, params) = model.split_once(':').unwrap_or((model, ""));
    let has_n = params.split(',').any(|kv| matches!(kv.trim().split_once('='), Some(("N" | "n", _))));
    let spec = if has_n {
        model.to_string()
    } else if params.trim().is_empty() {
        format!("{kind}:N={n}")
    } else {
        format!("{kind}:N={n},{params}")
    };
    spec.parse()
}

fn write_output(path: Option<&Path>, body: &[u8]) -> io::Result<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            f.write_all(body)?;
            f.flush()
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body)?;
            out.flush()
        }
    }
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

fn value_to_string(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => n.as_f64().map(format_float).unwrap_or_default(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

// Nested JSON objects flattened to dotted keys.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<Vec<String>>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        _ => out.push(vec![prefix.to_string(), value_to_string(v)]),
    }
}

fn validation_csv(report: &ValidationReport) -> Result<Vec<u8>, Box<dyn std::error::Error>> {
    let rows = report.checks.iter().map(|c| {
        vec![
            serde_json::to_value(c.suite).map(|v| value_to_string(&v)).unwrap_or_default(),
            c.name.clone(),
            format_float(c.value),
            format_float(c.expected),
            format_float(c.residual),
            format_float(c.tolerance),
            c.passed.to_string(),
        ]
    });
    csv_bytes(&["suite", "check", "value", "expected", "residual", "tolerance", "passed"], rows)
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::SweepTheta { scheme, model, start, stop, count, spacing, p, seed, output } => {
            let cfg = SweepConfig {
                scheme,
                model,
                grid: Some(ThetaGrid::new(start, stop, count, spacing)?),
                n_values: vec![model.n_parties()],
                theta_rule: ThetaRule::InverseN,
                p,
                seed,
            };
            let rows = sweep_theta(&cfg)?;
            let body = match output.format {
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    write_csv(&rows, &mut buf)?;
                    buf
                }
                OutputFormat::Json => json_bytes(&sweep_json(&rows, &cfg, "sweep-theta")),
            };
            write_output(output.out.as_deref(), &body)?;
        }
        Command::SweepN { scheme, model, n_min, n_max, n_step, theta_rule, p, seed, output } => {
            if n_step == 0 || n_min > n_max {
                return Err("need n-min <= n-max and n-step >= 1".into());
            }
            let cfg = SweepConfig {
                scheme,
                model: model_with_n(&model, n_min)?,
                grid: None,
                n_values: (n_min..=n_max).step_by(n_step).collect(),
                theta_rule,
                p,
                seed,
            };
            let rows = sweep_n(&cfg)?;
            let body = match output.format {
                OutputFormat::Csv => {
                    let mut buf = Vec::new();
                    write_csv(&rows, &mut buf)?;
                    buf
                }
                OutputFormat::Json => json_bytes(&sweep_json(&rows, &cfg, "sweep-n")),
            };
            write_output(output.out.as_deref(), &body)?;
        }
        Command::TwirlMc { k, samples, seed, collective, n, output } => {
            let report = twirl_mc_report(k, samples, seed, collective, n)?;
            if report.low_samples {
                eprintln!("warning: {samples} samples is below the recommended minimum");
            }
            let body = match output.format {
                OutputFormat::Json => json_bytes(&serde_json::to_value(&report)?),
                OutputFormat::Csv => {
                    let rows = (0..report.dim).flat_map(|r| {
                        let report = &report;
                        (0..report.dim).map(move |c| {
                            vec![
                                r.to_string(),
                                c.to_string(),
                                format_float(report.operator_re[r][c]),
                                format_float(report.operator_im[r][c]),
                            ]
                        })
                    });
                    csv_bytes(&["row", "col", "re", "im"], rows)?
                }
            };
            write_output(output.out.as_deref(), &body)?;
        }
        Command::Validate { suite, seed, samples, output } => {
            let report = validate(suite, seed, samples)?;
            let body = match output.format {
                OutputFormat::Json => json_bytes(&serde_json::to_value(&report)?),
                OutputFormat::Csv => validation_csv(&report)?,
            };
            write_output(output.out.as_deref(), &body)?;
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!(
                    "FAILED {}: value {} expected {} residual {:e} > {:e}",
                    c.name, c.value, c.expected, c.residual, c.tolerance
                );
            }
            if !report.passed {
                eprintln!("{} of {} checks failed", report.failures, report.checks.len());
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Invariants { model, theta, p, output } => {
            let report = serde_json::to_value(invariant_report(&model, theta, p)?)?;
            let body = match output.format {
                OutputFormat::Json => json_bytes(&report),
                OutputFormat::Csv => {
                    let mut rows = Vec::new();
                    flatten("", &report, &mut rows);
                    csv_bytes(&["key", "value"], rows)?
                }
            };
            write_output(output.out.as_deref(), &body)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
