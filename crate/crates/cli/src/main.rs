//! `bsl`: run backscatter detection experiments and evaluate closed forms.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bsl_core::detectors::DetectorId;
use bsl_core::harness::{write_csv, Curve, ExperimentConfig, Runner};
use bsl_core::selftest::run_selftest;
use bsl_core::specfun::q_func;
use bsl_core::theory;
use bsl_core::Error;
use bsl_core::{OutageModelParams, Probability, SeriesControl, SigmaPair};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "bsl",
    version,
    about = "Energy-detection experiments for ambient backscatter links"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER against the swept parameter.
    Ber(RunArgs),
    /// Conditional error rates under each hypothesis.
    Balance(RunArgs),
    /// Outage and error-floor outage probabilities.
    Outage(RunArgs),
    /// BER against the number of training blocks.
    Training(RunArgs),
    /// Print one closed-form value.
    Eval(EvalArgs),
    /// Run the oracle cross-checks.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads; 0 = all cores.
    #[arg(long, env = "BSL_THREADS", default_value_t = 0)]
    threads: usize,
    /// Dotted-path JSON override, e.g. `scenario.samples_per_bit=50`.
    #[arg(long = "override", value_name = "K=V")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Formula {
    Q,
    ThresholdCgOptimal,
    ThresholdCgSuboptimal,
    ThresholdBalanced,
    ThresholdPskNoiseAware,
    ThresholdPskAsymptotic,
    BerCgOptimal,
    BerCgOptimalApprox,
    BerCgSuboptimal,
    BerCgExact,
    BerCgAsymptotic,
    BerFloor,
    BerPskAsymptotic,
    Outage,
    At,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    formula: Formula,
    #[arg(long, allow_negative_numbers = true)]
    x: Option<f64>,
    #[arg(long)]
    sigma0_sq: Option<f64>,
    #[arg(long)]
    sigma1_sq: Option<f64>,
    /// Samples per bit.
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    nw: f64,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sigma_sum: Option<f64>,
    /// Linear SNR.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    h0: Option<f64>,
    #[arg(long)]
    h1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    h_tr: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    var_sr: f64,
    #[arg(long, default_value_t = 1.0)]
    var_st: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Outage / AT target.
    #[arg(long)]
    target: Option<f64>,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain { .. } | Error::Ambiguous { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Ber(a) => experiment("ber", &a, |r, c| r.run_ber_sweep(c)),
        Command::Balance(a) => experiment("balance", &a, |r, c| r.run_balance_sweep(c)),
        Command::Outage(a) => experiment("outage", &a, |r, c| r.run_outage_sweep(c)),
        Command::Training(a) => experiment("training", &a, |r, c| r.run_training_sweep(c)),
        Command::Eval(a) => {
            println!("{:.16e}", eval(&a)?);
            Ok(())
        }
        Command::Selftest => {
            let mut failed = 0;
            for c in run_selftest() {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} self-check(s) failed")));
            }
            Ok(())
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Sets `path` (dot-separated) inside `root`, creating objects as needed.
/// The value is parsed as JSON, falling back to a plain string.
fn apply_override(root: &mut Value, spec: &str) -> Result<(), Failure> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| usage(format!("override `{spec}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(usage(format!("override key `{key}` has an empty component")));
    }
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| usage(format!("override `{key}`: `{part}` is inside a non-object")))?;
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| usage(format!("override `{key}` targets a non-object")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn load_config(a: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let path = &a.config;
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: invalid JSON: {e}", path.display())))?;
    for spec in &a.overrides {
        apply_override(&mut value, spec)?;
    }
    if let Some(seed) = a.seed {
        apply_override(&mut value, &format!("seed={seed}"))?;
    }
    if let Some(trials) = a.trials {
        apply_override(&mut value, &format!("trials={trials}"))?;
    }
    ExperimentConfig::from_value(value).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn output_path(sub: &str, config: &Path, out: &Path) -> Result<PathBuf, Failure> {
    let stem = config
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| usage(format!("cannot derive a name from {}", config.display())))?;
    Ok(out.join(format!("{sub}-{stem}.csv")))
}

fn experiment(
    sub: &str,
    a: &RunArgs,
    go: impl FnOnce(&Runner, &ExperimentConfig) -> bsl_core::Result<Curve>,
) -> Result<(), Failure> {
    let cfg = load_config(a)?;
    let target = output_path(sub, &a.config, &a.out)?;
    let runner = Runner::new(a.threads)?;
    log::info!(
        "{sub}: {} points on {} threads",
        cfg.sweep.points().len(),
        runner.threads()
    );
    let curve = go(&runner, &cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", a.out.display())))?;
    write_csv(&curve, &target)?;
    println!("{}", target.display());
    Ok(())
}

fn need(v: Option<f64>, flag: &str) -> Result<f64, Failure> {
    v.ok_or_else(|| usage(format!("this formula needs --{flag}")))
}

fn eval(a: &EvalArgs) -> Result<f64, Failure> {
    let pair = || -> Result<SigmaPair, Failure> {
        Ok(SigmaPair::new(
            need(a.sigma0_sq, "sigma0-sq")?,
            need(a.sigma1_sq, "sigma1-sq")?,
        )?)
    };
    let threshold = |d: DetectorId| -> Result<f64, Failure> { Ok(d.threshold(&pair()?, a.nw, a.n)?.threshold) };
    let outage_model = || -> Result<(OutageModelParams, Probability), Failure> {
        let model = OutageModelParams::new(
            a.var_sr,
            a.var_st,
            a.alpha,
            need(a.h_tr, "h-tr")?,
            need(a.gamma, "gamma")?,
            a.n,
        )?;
        Ok((model, Probability::new(need(a.target, "target")?)?))
    };
    let ctl = SeriesControl::default();
    Ok(match a.formula {
        Formula::Q => q_func(need(a.x, "x")?),
        Formula::ThresholdCgOptimal => threshold(DetectorId::CgOptimal)?,
        Formula::ThresholdCgSuboptimal => threshold(DetectorId::CgSuboptimal)?,
        Formula::ThresholdBalanced => threshold(DetectorId::Balanced)?,
        Formula::ThresholdPskNoiseAware => threshold(DetectorId::PskNoiseAware)?,
        Formula::ThresholdPskAsymptotic => threshold(DetectorId::PskAsymptotic)?,
        Formula::BerCgOptimal => theory::ber_cg_optimal(&pair()?, a.n)?.value(),
        Formula::BerCgOptimalApprox => theory::ber_cg_optimal_approx(&pair()?, a.n)?.value(),
        Formula::BerCgSuboptimal => theory::ber_cg_suboptimal(&pair()?, a.n)?.value(),
        Formula::BerCgExact => theory::ber_cg_exact(&pair()?, a.n, need(a.threshold, "threshold")?)?.value(),
        Formula::BerCgAsymptotic => theory::ber_cg_asymptotic(
            need(a.delta, "delta")?,
            need(a.sigma_sum, "sigma-sum")?,
            need(a.gamma, "gamma")?,
            a.n,
        )?
        .value(),
        Formula::BerFloor => theory::ber_floor(need(a.delta, "delta")?, need(a.sigma_sum, "sigma-sum")?, a.n)?.value(),
        Formula::BerPskAsymptotic => {
            theory::ber_psk_asymptotic(need(a.h0, "h0")?, need(a.h1, "h1")?, need(a.gamma, "gamma")?, a.n)?.value()
        }
        Formula::Outage => {
            let (m, z) = outage_model()?;
            theory::outage_probability(&m, z, &ctl)?.value()
        }
        Formula::At => {
            let (m, z) = outage_model()?;
            theory::at_probability(&m, z, &ctl)?.value()
        }
    })
}
