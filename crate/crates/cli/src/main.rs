use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wpbft_core::channel::{active_distance, db_to_linear, linear_to_db};
use wpbft_core::latency::Eq11Form;
use wpbft_core::SignalProfile;
use wpbft::config::{load_spec, ExperimentSpec, OutputGroup, Setting, ThresholdUnit};
use wpbft::output::{emit_csv, gnuplot_script, header};
use wpbft::sweep::{evaluate_point, run_sweep, SweepRow};
use wpbft::validate::agreement_grid;
use wpbft::CliError;

#[derive(Debug, Parser)]
#[command(name = "wpbft", version, about = "PBFT consensus performance over fading mmWave/THz links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Eq11Arg {
    Printed,
    Normalized,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Unit of SNR thresholds given in the spec or on the command line.
    #[arg(long, value_enum)]
    threshold_unit: Option<ThresholdUnit>,
    /// Reading of the capacity/rate terms in the delay relation.
    #[arg(long, value_enum)]
    eq11: Option<Eq11Arg>,
    /// Same as `--eq11 printed`.
    #[arg(long, conflicts_with = "eq11")]
    raw_eq11: bool,
}

impl ModelArgs {
    fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(unit) = self.threshold_unit {
            spec.threshold_unit = unit;
        }
        if self.raw_eq11 {
            spec.delay_model.form = Eq11Form::Printed;
        }
        if let Some(form) = self.eq11 {
            spec.delay_model.form = match form {
                Eq11Arg::Printed => Eq11Form::Printed,
                Eq11Arg::Normalized => Eq11Form::Normalized,
            };
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full sweep and write CSV.
    Sweep {
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Enables simulation columns with this many trials per row.
        #[arg(long)]
        trials: Option<u64>,
        /// Simulate in geometric mode with receiver positions held fixed
        /// across phases.
        #[arg(long)]
        exploratory_fixed_positions: bool,
        /// Also write a gnuplot script for the CSV.
        #[arg(long, requires = "out")]
        gnuplot: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Evaluate one (signal, threshold, density, n) point.
    Point {
        #[arg(long, default_value = "thz-0.22")]
        signal: String,
        #[arg(long, default_value_t = 6.0)]
        threshold: f64,
        #[arg(long, default_value_t = 5.0)]
        gamma: f64,
        #[arg(long, default_value_t = 4)]
        n: u64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Largest distance at which the SNR with gain h still meets the threshold.
    ActiveDistance {
        #[arg(long, default_value = "thz-0.22")]
        signal: String,
        #[arg(long, default_value_t = 6.0)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "db")]
        threshold_unit: ThresholdUnit,
        /// Fading power gain.
        #[arg(long, default_value_t = 1.0)]
        h: f64,
    },
    /// Check simulator against the analytic consensus rate; exits 3 on a miss.
    Validate {
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.99)]
        confidence_level: f64,
    },
}

fn profile_by_name(name: &str) -> Result<SignalProfile, CliError> {
    SignalProfile::preset(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown signal profile {name:?} (built-in: {})",
            SignalProfile::preset_names().join(", ")
        ))
    })
}

fn print_point(row: &SweepRow, groups: &[OutputGroup]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    emit_csv(std::slice::from_ref(row), groups, &mut buf)?;
    let text = String::from_utf8(buf).map_err(io::Error::other)?;
    let values: Vec<&str> = text.lines().nth(1).unwrap_or_default().split(',').collect();
    let mut out = io::stdout().lock();
    for (key, value) in header(groups).iter().zip(values) {
        writeln!(out, "{key}={value}")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep {
            spec,
            out,
            seed,
            trials,
            exploratory_fixed_positions,
            gnuplot,
            model,
        } => {
            let mut spec = match spec {
                Some(path) => load_spec(&path)?,
                None => ExperimentSpec::default(),
            };
            model.apply(&mut spec);
            if trials.is_some() || seed.is_some() || exploratory_fixed_positions {
                let sim = spec.enable_sim();
                if let Some(t) = trials {
                    sim.config.trials = t;
                }
                if let Some(s) = seed {
                    sim.config.seed = s;
                }
                if exploratory_fixed_positions {
                    sim.fixed_positions = true;
                    sim.config.mode = wpbft_core::SimMode::Geometric;
                }
            }
            let rows = run_sweep(&spec)?;
            match &out {
                Some(path) => emit_csv(&rows, &spec.outputs, BufWriter::new(File::create(path)?))?,
                None => emit_csv(&rows, &spec.outputs, io::stdout().lock())?,
            }
            if let (Some(script), Some(csv_path)) = (gnuplot, out) {
                std::fs::write(script, gnuplot_script(&csv_path.display().to_string(), &rows, &spec.outputs))?;
            }
            Ok(())
        }
        Command::Point { signal, threshold, gamma, n, model } => {
            let mut spec = ExperimentSpec::default();
            model.apply(&mut spec);
            let profile = profile_by_name(&signal)?;
            let setting = Setting { snr_threshold: threshold, density: gamma };
            spec.profiles = vec![profile.clone()];
            spec.settings = vec![setting];
            spec.n_values = vec![n];
            spec.validate()?;
            let row = evaluate_point(&spec, &profile, &setting, n, 0)?;
            print_point(&row, &spec.outputs)
        }
        Command::ActiveDistance { signal, threshold, threshold_unit, h } => {
            let profile = profile_by_name(&signal)?;
            let z_linear = match threshold_unit {
                ThresholdUnit::Db => db_to_linear(threshold),
                ThresholdUnit::Linear => threshold,
            };
            let r = active_distance(&profile, z_linear, h)?;
            let mut out = io::stdout().lock();
            writeln!(out, "signal={}", profile.name())?;
            writeln!(out, "z_db={}", linear_to_db(z_linear))?;
            writeln!(out, "z_linear={z_linear}")?;
            writeln!(out, "h={h}")?;
            writeln!(out, "active_distance_m={r}")?;
            Ok(())
        }
        Command::Validate { trials, seed, confidence_level } => {
            if trials == 0 {
                return Err(CliError::Config("trials must be at least 1".into()));
            }
            let checks = agreement_grid(trials, seed, confidence_level)?;
            let mut out = io::stdout().lock();
            for c in &checks {
                writeln!(out, "{}", c.line())?;
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(CliError::Validation(format!(
                    "{failed} of {} points outside the confidence interval",
                    checks.len()
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("wpbft: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
