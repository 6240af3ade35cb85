//! `pushdob`: synthesize push data, estimate friction and predict poses.
//!
//! Exit status is 0 on success, 1 when a stage fails and 2 on usage errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pushdob::observer::ResetMode;
use pushdob::predict::Regressor;
use pushdob::{ObjectParams, RunConfig};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PUSHDOB_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "pushdob",
    version,
    about = "Friction estimation and pose prediction for pushed objects"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory.
    #[arg(short, long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    out: PathBuf,
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSON object parameters (`mass`, `inertia`, `width`, `length`); the rec2 block by default.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Q-filter natural frequency [rad/s].
    #[arg(long, global = true)]
    omega_n: Option<f64>,
    /// Q-filter damping ratio.
    #[arg(long, global = true)]
    zeta: Option<f64>,
    #[arg(long, global = true)]
    kp: Option<f64>,
    #[arg(long, global = true)]
    ki: Option<f64>,
    #[arg(long, global = true)]
    kd: Option<f64>,
    #[arg(long, global = true)]
    lp: Option<f64>,
    #[arg(long, global = true)]
    li: Option<f64>,
    #[arg(long, global = true)]
    ld: Option<f64>,
    /// Force plan rate [Hz].
    #[arg(long, global = true)]
    plan_rate: Option<f64>,
    /// Number of alternating identification/prediction phases.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(2..))]
    phases: Option<u32>,
    /// Friction coefficient of the baseline predictor.
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// RLS window length [samples].
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(2..))]
    window: Option<u32>,
    /// Observer output discarded after each reset [s].
    #[arg(long, global = true)]
    settle_time: Option<f64>,
    /// Length of the regression weight ramp at segment edges [s].
    #[arg(long, global = true)]
    taper_time: Option<f64>,
    #[arg(long, global = true)]
    reset_mode: Option<ResetArg>,
    #[arg(long, global = true)]
    regressor: Option<RegressorArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ResetArg {
    Hold,
    Track,
    Zero,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegressorArg {
    Filtered,
    Raw,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    /// Moderate friction with default sensor noise.
    Default,
    /// Friction cancelling almost all of the applied force.
    Friction,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic push with known friction law.
    Synth(SynthArgs),
    /// Recover total and friction wrenches by PID tracking of the measured pose.
    Reconstruct(Inputs),
    /// Run the disturbance observer over whole records.
    Observe(Inputs),
    /// Fit the per-channel linear friction law to whole records.
    Identify(Inputs),
    /// Alternate identification and prediction, scoring both predictors.
    Predict(Inputs),
    /// Summarize prediction reports (or raw records) into improvement ratios.
    Compare(Inputs),
}

#[derive(Args, Debug)]
struct Inputs {
    /// Canonical trajectory CSV files; `compare` also accepts `*_report.json`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Preset::Default, conflicts_with = "scenario")]
    preset: Preset,
    /// Full scenario as JSON instead of a preset.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// [s]
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    noise_free: bool,
    /// Base name of the written files.
    #[arg(long)]
    case_id: Option<String>,
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) {
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut c.q.omega_n, self.omega_n);
        set(&mut c.q.zeta, self.zeta);
        set(&mut c.gains.kp, self.kp);
        set(&mut c.gains.ki, self.ki);
        set(&mut c.gains.kd, self.kd);
        set(&mut c.gains.lp, self.lp);
        set(&mut c.gains.li, self.li);
        set(&mut c.gains.ld, self.ld);
        set(&mut c.plan_rate, self.plan_rate);
        set(&mut c.mu, self.mu);
        set(&mut c.settle_time, self.settle_time);
        set(&mut c.taper_time, self.taper_time);
        if let Some(v) = self.phases {
            c.phases = v as usize;
        }
        if let Some(v) = self.window {
            c.window = v as usize;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.reset_mode {
            c.reset_mode = match v {
                ResetArg::Hold => ResetMode::Hold,
                ResetArg::Track => ResetMode::Track,
                ResetArg::Zero => ResetMode::Zero,
            };
        }
        if let Some(v) = self.regressor {
            c.regressor = match v {
                RegressorArg::Filtered => Regressor::Filtered,
                RegressorArg::Raw => Regressor::Raw,
            };
        }
    }
}

/// Settings shared by every subcommand after precedence is resolved.
pub struct Context {
    pub out: PathBuf,
    pub config: RunConfig,
    pub params: ObjectParams,
    /// Whether the seed came from a flag or config file rather than the default.
    pub seed_given: bool,
}

fn context(common: &Common) -> anyhow::Result<Context> {
    let mut config = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let seed_given = common.config.is_some() || common.overrides.seed.is_some();
    common.overrides.apply(&mut config);
    config.validate()?;
    let params = match &common.params {
        Some(path) => pushdob::data::load_params(path)?,
        None => ObjectParams::rec2(),
    };
    Ok(Context {
        out: common.out.clone(),
        config,
        params,
        seed_given,
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = context(&cli.common)?;
    std::fs::create_dir_all(&ctx.out)?;
    match cli.command {
        Command::Synth(a) => commands::synth(&ctx, &a),
        Command::Reconstruct(i) => commands::reconstruct(&ctx, &i.inputs),
        Command::Observe(i) => commands::observe(&ctx, &i.inputs),
        Command::Identify(i) => commands::identify(&ctx, &i.inputs),
        Command::Predict(i) => commands::predict(&ctx, &i.inputs),
        Command::Compare(i) => commands::compare(&ctx, &i.inputs),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on its own for usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
