//! Command-line front end.
//!
//! Settings come from an optional JSON file (`--config`) overridden by flags.
//! Exit codes: 0 success, 1 runtime failure (including failed verification
//! gates), 2 validation failure. Errors are also written to stderr as a JSON
//! record `{"error": {"kind", "field", "message"}}`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_direct, estimate_importance, estimate_oracle, normalized_decay, EstimatorConfig, StudyRow,
};
use crate::model::{ModelSpec, RateModel, ValidationConfig};
use crate::oracle::OracleConfig;
use crate::profile::{ProfileSpec, TargetProfile};
use crate::rate_functional::{classify, rate_functional, yule_rate_functional, Regime, DEFAULT_QUAD_POINTS};
use crate::report::{config_digest, write_json, write_study_csv, write_table_csv, Provenance};
use crate::rng::run_replicas;
use crate::simulate::{reference_jump_cap, simulate_bdp_with, simulate_reference_with, SimLimits, SimStatus};
use crate::verify::{run_gates, VerifyConfig};

pub const THREADS_ENV: &str = "LDP_BDP_THREADS";
const DEFAULT_SIM_JUMP_CAP: u64 = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "ldp-bdp", version, about = "Tube probabilities and rate functionals for birth-death processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample paths of ξ (or of the reference walk ζ) and write them as CSV.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Sample the reference walk ζ instead of ξ.
        #[arg(long)]
        reference: bool,
    },
    /// Estimate tube probabilities for every (ε, T) pair.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Estimators to run.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "is")]
        method: Vec<MethodArg>,
    },
    /// Classify the regime and compute I(f).
    Rate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Normalized decay table -ln P / ψ(T) over the ε and T lists.
    Study {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the verification gates; exits 0 iff all pass.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Run only the named gate (repeatable).
        #[arg(long)]
        only: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Direct,
    Is,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON file with default settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `power`, `table` (from the config file) or a JSON model file.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub c_lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub l: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c_mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Multiply the exact birth rate without changing the declared asymptotics.
    #[arg(long)]
    pub lambda_scale: Option<f64>,
    /// `linear`, `linear:<slope>`, `power:<k>` or a JSON profile file.
    #[arg(long)]
    pub profile: Option<String>,
    /// Comma-separated tube radii.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub epsilon: Option<Vec<f64>>,
    /// Comma-separated horizons.
    #[arg(long = "T", value_delimiter = ',', allow_negative_numbers = true)]
    pub horizons: Option<Vec<f64>>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Output file (directory for `simulate`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub jump_cap: Option<u64>,
    #[arg(long)]
    pub time_slices: Option<usize>,
    #[arg(long)]
    pub state_cap: Option<u64>,
    #[arg(long)]
    pub quad_points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Layout of the `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    model: Option<ModelSpec>,
    profile: Option<ProfileSpec>,
    epsilon: Option<OneOrMany>,
    #[serde(rename = "T")]
    horizons: Option<OneOrMany>,
    replicas: Option<u64>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    jump_cap: Option<u64>,
    time_slices: Option<usize>,
    state_cap: Option<u64>,
    quad_points: Option<usize>,
}

/// Fully resolved settings. Serialized (without threads and output
/// location) to compute the config digest.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub model: ModelSpec,
    pub profile: ProfileSpec,
    pub epsilon: Vec<f64>,
    #[serde(rename = "T")]
    pub horizons: Vec<f64>,
    pub replicas: u64,
    pub seed: u64,
    pub jump_cap: Option<u64>,
    pub time_slices: usize,
    pub state_cap: u64,
    pub quad_points: usize,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
}

fn read_input(field: &str, path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::invalid(field, format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(field: &str, path: &Path) -> Result<T> {
    serde_json::from_str(&read_input(field, path)?)
        .map_err(|e| Error::invalid(field, format!("{}: {e}", path.display())))
}

fn default_power() -> ModelSpec {
    ModelSpec::Power {
        c_lambda: 1.0,
        l: 1.0,
        c_mu: 1.0,
        m: 0.0,
        lambda_scale: None,
    }
}

impl RunConfig {
    pub fn resolve(command: &str, args: &CommonArgs) -> Result<Self> {
        let file: ConfigFile = match &args.config {
            Some(p) => parse_json("config", p)?,
            None => ConfigFile::default(),
        };

        let mut model = match args.model.as_deref() {
            None => file.model.clone().unwrap_or_else(default_power),
            Some("power") => match &file.model {
                Some(m @ ModelSpec::Power { .. }) => m.clone(),
                _ => default_power(),
            },
            Some("table") => match &file.model {
                Some(m @ ModelSpec::Table { .. }) => m.clone(),
                _ => return Err(Error::invalid("model", "`table` needs a table model in the --config file")),
            },
            Some(path) => parse_json("model", Path::new(path))?,
        };
        let power_flags = [args.c_lambda, args.l, args.c_mu, args.m, args.lambda_scale];
        match &mut model {
            ModelSpec::Power {
                c_lambda,
                l,
                c_mu,
                m,
                lambda_scale,
            } => {
                *c_lambda = args.c_lambda.unwrap_or(*c_lambda);
                *l = args.l.unwrap_or(*l);
                *c_mu = args.c_mu.unwrap_or(*c_mu);
                *m = args.m.unwrap_or(*m);
                if args.lambda_scale.is_some() {
                    *lambda_scale = args.lambda_scale;
                }
            }
            ModelSpec::Table { .. } if power_flags.iter().any(Option::is_some) => {
                return Err(Error::invalid("model", "power-family flags need --model power"));
            }
            ModelSpec::Table { .. } => {}
        }

        let profile = match args.profile.as_deref() {
            Some(p) if p.ends_with(".json") => parse_json("profile", Path::new(p))?,
            Some(p) => ProfileSpec::Named(p.to_string()),
            None => file.profile.clone().unwrap_or_else(|| ProfileSpec::Named("linear".into())),
        };

        let cfg = Self {
            command: command.to_string(),
            model,
            profile,
            epsilon: args
                .epsilon
                .clone()
                .or(file.epsilon.map(OneOrMany::into_vec))
                .unwrap_or_else(|| vec![0.5]),
            horizons: args
                .horizons
                .clone()
                .or(file.horizons.map(OneOrMany::into_vec))
                .unwrap_or_else(|| vec![5.0]),
            replicas: args.replicas.or(file.replicas).unwrap_or(10_000),
            seed: args.seed.or(file.seed).unwrap_or(1),
            jump_cap: args.jump_cap.or(file.jump_cap),
            time_slices: args.time_slices.or(file.time_slices).unwrap_or(1024),
            state_cap: args.state_cap.or(file.state_cap).unwrap_or(100_000),
            quad_points: args.quad_points.or(file.quad_points).unwrap_or(DEFAULT_QUAD_POINTS),
            threads: args.threads.or(file.threads),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if self.epsilon.is_empty() || self.epsilon.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid("epsilon", "every value must be finite and > 0"));
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::invalid("T", "every value must be finite and > 0"));
        }
        if self.replicas == 0 {
            return Err(Error::invalid("replicas", "must be >= 1"));
        }
        if self.jump_cap == Some(0) {
            return Err(Error::invalid("jump_cap", "must be >= 1"));
        }
        if self.time_slices == 0 {
            return Err(Error::invalid("time_slices", "must be >= 1"));
        }
        if self.quad_points < 3 {
            return Err(Error::invalid("quad_points", "must be >= 3"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads", "must be >= 1"));
        }
        Ok(())
    }

    pub fn digest(&self) -> Result<String> {
        config_digest(self)
    }

    fn provenance(&self) -> Result<Provenance> {
        Ok(Provenance::new(self.digest()?, self.seed))
    }

    /// Builds and validates the model against its declared asymptotics.
    pub fn validated_model(&self) -> Result<RateModel> {
        let model = self.model.build()?;
        model.validate(&ValidationConfig::default())?;
        Ok(model)
    }

    pub fn target_profile(&self) -> Result<TargetProfile> {
        let p = self.profile.build()?;
        p.validate()?;
        Ok(p)
    }

    fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            replicas: self.replicas,
            master_seed: self.seed,
            threads: self.threads,
            jump_cap: self.jump_cap,
            wall_clock: None,
        }
    }

    fn oracle_config(&self) -> OracleConfig {
        OracleConfig {
            time_slices: self.time_slices,
            state_cap: self.state_cap,
            ..Default::default()
        }
    }
}

/// Writes `bytes` to `--out` or to `stdout`.
fn emit(cfg: &RunConfig, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, bytes)?;
        }
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn status_label(status: &SimStatus) -> &'static str {
    match status {
        SimStatus::Completed => "completed",
        SimStatus::Exploded { .. } => "exploded",
        SimStatus::Truncated { .. } => "truncated",
    }
}

#[derive(Serialize)]
struct SimSummary {
    replica: u64,
    jumps: usize,
    final_state: i64,
    status: &'static str,
}

fn cmd_simulate(cfg: &RunConfig, reference: bool, stdout: &mut dyn Write) -> Result<()> {
    let [horizon] = cfg.horizons[..] else {
        return Err(Error::invalid("T", "simulate takes a single horizon"));
    };
    let model = cfg.validated_model()?;
    let cap = cfg.jump_cap.unwrap_or(if reference {
        reference_jump_cap(horizon)
    } else {
        DEFAULT_SIM_JUMP_CAP
    });
    let limits = SimLimits::jump_cap(cap);
    let outcomes = run_replicas(cfg.replicas, cfg.seed, cfg.threads, |_, rng| {
        if reference {
            simulate_reference_with(horizon, cap, rng)
        } else {
            simulate_bdp_with(&model, horizon, &limits, rng)
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("ldp-bdp-paths"));
    fs::create_dir_all(&dir)?;
    let provenance = cfg.provenance()?;
    let width = (cfg.replicas.saturating_sub(1)).to_string().len().max(5);
    for (i, o) in outcomes.iter().enumerate() {
        let mut buf = Vec::new();
        provenance.write_csv_header(&mut buf)?;
        writeln!(buf, "# replica: {i}")?;
        writeln!(buf, "# T: {horizon}")?;
        writeln!(buf, "# status: {}", status_label(&o.status))?;
        o.path.write_csv(&mut buf)?;
        fs::write(dir.join(format!("path_{i:0width$}.csv")), buf)?;
    }

    let rows: Vec<SimSummary> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| SimSummary {
            replica: i as u64,
            jumps: o.path.jump_count(),
            final_state: o.path.final_state(),
            status: status_label(&o.status),
        })
        .collect();
    let n = rows.len() as f64;
    let mean_jumps = rows.iter().map(|r| r.jumps as f64).sum::<f64>() / n;
    let exploded = rows.iter().filter(|r| r.status == "exploded").count() as f64 / n;
    let truncated = rows.iter().filter(|r| r.status == "truncated").count() as f64 / n;
    let mut buf = Vec::new();
    let summary_name = match cfg.format {
        Format::Csv => {
            provenance.write_csv_header(&mut buf)?;
            writeln!(buf, "# mean_jumps: {mean_jumps}")?;
            writeln!(buf, "# explosion_frequency: {exploded}")?;
            writeln!(buf, "# truncation_frequency: {truncated}")?;
            writeln!(buf, "replica,jumps,final_state,status")?;
            for r in &rows {
                writeln!(buf, "{},{},{},{}", r.replica, r.jumps, r.final_state, r.status)?;
            }
            "summary.csv"
        }
        Format::Json => {
            write_json(
                &mut buf,
                &provenance,
                &json!({
                    "process": if reference { "reference" } else { "bdp" },
                    "T": horizon,
                    "mean_jumps": mean_jumps,
                    "explosion_frequency": exploded,
                    "truncation_frequency": truncated,
                    "paths": rows,
                }),
            )?;
            "summary.json"
        }
    };
    fs::write(dir.join(summary_name), buf)?;
    writeln!(
        stdout,
        "wrote {} paths to {} (mean jumps {mean_jumps}, explosion frequency {exploded})",
        rows.len(),
        dir.display()
    )?;
    Ok(())
}

fn rate_or_nan(model: &RateModel, profile: &TargetProfile, quad_points: usize) -> f64 {
    rate_functional(model, profile, quad_points).unwrap_or(f64::NAN)
}

fn cmd_estimate(cfg: &RunConfig, methods: &[MethodArg], stdout: &mut dyn Write) -> Result<()> {
    let model = cfg.validated_model()?;
    let profile = cfg.target_profile()?;
    let i_f = rate_or_nan(&model, &profile, cfg.quad_points);
    let est = cfg.estimator_config();
    let mut reports = Vec::new();
    for &eps in &cfg.epsilon {
        for &t in &cfg.horizons {
            let tube = crate::tube::TubeSpec::new(profile.clone(), eps, t)?;
            for m in methods {
                reports.push(match m {
                    MethodArg::Direct => estimate_direct(&model, &tube, &est)?,
                    MethodArg::Is => estimate_importance(&model, &tube, &est)?,
                    MethodArg::Oracle => estimate_oracle(&model, &tube, &cfg.oracle_config())?,
                });
            }
        }
    }
    let provenance = cfg.provenance()?;
    let mut buf = Vec::new();
    match cfg.format {
        Format::Csv => {
            let rows: Vec<StudyRow> = reports.iter().map(|r| StudyRow::from_report(r, i_f)).collect();
            write_study_csv(&mut buf, &provenance, &rows)?;
        }
        Format::Json => write_json(&mut buf, &provenance, &reports)?,
    }
    emit(cfg, &buf, stdout)
}

fn cmd_rate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let model = cfg.validated_model()?;
    let profile = cfg.target_profile()?;
    let class = classify(&model);
    let i_f = rate_functional(&model, &profile, cfg.quad_points)?;
    let yule = if model.asymptotics().is_pure_birth() {
        Some(yule_rate_functional(&model, &profile)?)
    } else {
        None
    };
    let provenance = cfg.provenance()?;
    let mut buf = Vec::new();
    match cfg.format {
        Format::Csv => {
            let row = vec![
                regime_label(class.regime).to_string(),
                class.psi_exponent.to_string(),
                i_f.to_string(),
                profile.label().to_string(),
                yule.map(|y| y.to_string()).unwrap_or_default(),
            ];
            write_table_csv(&mut buf, &provenance, &["regime", "psi_exp", "I_f", "profile", "I_yule"], &[row])?;
        }
        Format::Json => write_json(
            &mut buf,
            &provenance,
            &json!({
                "regime": class.regime,
                "psi_exp": class.psi_exponent,
                "I_f": i_f,
                "profile": profile.label(),
                "I_yule": yule,
            }),
        )?,
    }
    emit(cfg, &buf, stdout)
}

fn regime_label(r: Regime) -> &'static str {
    match r {
        Regime::BirthDominant => "birth_dominant",
        Regime::Balanced => "balanced",
        Regime::DeathDominant => "death_dominant",
        Regime::Degenerate => "degenerate",
    }
}

fn cmd_study(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let model = cfg.validated_model()?;
    let profile = cfg.target_profile()?;
    let class = classify(&model);
    if class.regime == Regime::Degenerate {
        return Err(Error::DegenerateRegime);
    }
    let rows = normalized_decay(&model, &profile, &cfg.epsilon, &cfg.horizons, &cfg.estimator_config())?;
    let provenance = cfg.provenance()?;
    let mut buf = Vec::new();
    match cfg.format {
        Format::Csv => {
            writeln!(buf, "# regime: {}", regime_label(class.regime))?;
            write_study_csv(&mut buf, &provenance, &rows)?;
        }
        Format::Json => write_json(
            &mut buf,
            &provenance,
            &json!({
                "regime": class.regime,
                "psi_exp": class.psi_exponent,
                "rows": rows,
            }),
        )?,
    }
    emit(cfg, &buf, stdout)
}

/// Returns whether every gate passed.
fn cmd_verify(cfg: &RunConfig, args: &CommonArgs, only: &[String], stdout: &mut dyn Write) -> Result<bool> {
    let mut vcfg = VerifyConfig {
        model: cfg.model.build()?,
        threads: cfg.threads,
        ..Default::default()
    };
    if let Some(seed) = args.seed {
        vcfg.seed = seed;
    }
    if let Some(r) = args.replicas {
        vcfg.samples = r;
    }
    let results = run_gates(only, &vcfg)?;
    let provenance = Provenance::new(cfg.digest()?, vcfg.seed);
    let mut buf = Vec::new();
    match cfg.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| {
                    vec![
                        r.gate.clone(),
                        if r.passed { "pass" } else { "fail" }.to_string(),
                        r.value.to_string(),
                        r.bound.to_string(),
                        r.margin.to_string(),
                        format!("\"{}\"", r.detail.replace('"', "'")),
                    ]
                })
                .collect();
            write_table_csv(
                &mut buf,
                &provenance,
                &["gate", "status", "value", "bound", "margin", "detail"],
                &rows,
            )?;
        }
        Format::Json => write_json(&mut buf, &provenance, &results)?,
    }
    emit(cfg, &buf, stdout)?;
    Ok(results.iter().all(|r| r.passed))
}

fn error_record(err: &Error) -> serde_json::Value {
    json!({
        "error": {
            "kind": if err.is_validation() { "validation" } else { "runtime" },
            "field": err.field(),
            "message": err.to_string(),
        }
    })
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<bool> {
    match cli.command {
        Command::Simulate { common, reference } => {
            cmd_simulate(&RunConfig::resolve("simulate", &common)?, reference, stdout)?;
        }
        Command::Estimate { common, method } => {
            cmd_estimate(&RunConfig::resolve("estimate", &common)?, &method, stdout)?;
        }
        Command::Rate { common } => cmd_rate(&RunConfig::resolve("rate", &common)?, stdout)?,
        Command::Study { common } => cmd_study(&RunConfig::resolve("study", &common)?, stdout)?,
        Command::Verify { common, only } => {
            let cfg = RunConfig::resolve("verify", &common)?;
            return cmd_verify(&cfg, &common, &only, stdout);
        }
    }
    Ok(true)
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = write!(stderr, "{e}");
            let record = json!({"error": {"kind": "validation", "field": null, "message": e.kind().to_string()}});
            let _ = writeln!(stderr, "{record}");
            return 2;
        }
    };
    match execute(cli, stdout) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(err) => {
            let _ = writeln!(stderr, "{}", error_record(&err));
            if err.is_validation() {
                2
            } else {
                1
            }
        }
    }
}
