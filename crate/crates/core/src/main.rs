use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polfreq::device::Preset;
use polfreq::error::Result;
use polfreq::experiments::{cmd_bell, cmd_sweep, cmd_tomo, cmd_truth_table, DeviceSpec, ExperimentConfig, RunManifest};

/// Polarization-to-frequency-bin CNOT simulator.
#[derive(Parser)]
#[command(name = "polfreq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conversion efficiency versus RF frequency for both directions.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rf_start: Option<f64>,
        #[arg(long)]
        rf_stop: Option<f64>,
        #[arg(long)]
        rf_step: Option<f64>,
    },
    /// Computational-basis truth table.
    TruthTable {
        #[command(flatten)]
        common: Common,
    },
    /// Bell-state synthesis followed by 36-setting tomography.
    Bell {
        #[command(flatten)]
        common: Common,
        /// D:w0, A:w0, D:w1 or A:w1
        #[arg(long)]
        input: Option<String>,
    },
    /// Tomography of an existing counts CSV.
    Tomo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        counts: Option<PathBuf>,
        /// phi+, phi-, psi+ or psi-
        #[arg(long)]
        target: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Ideal,
    Paper,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exact probabilities, no sampling.
    #[arg(long)]
    analytic: bool,
    #[arg(long)]
    flux: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = self.preset {
            let preset = match p {
                PresetArg::Ideal => Preset::Ideal,
                PresetArg::Paper => Preset::Paper,
            };
            c.device = DeviceSpec::Preset(preset.name().into());
        }
        c.seed = self.seed.or(c.seed);
        c.output_path = self.out.clone().unwrap_or(c.output_path);
        c.analytic |= self.analytic;
        c.flux = self.flux.unwrap_or(c.flux);
        c.duration = self.duration.unwrap_or(c.duration);
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<RunManifest> {
    match cli.command {
        Command::Sweep {
            common,
            rf_start,
            rf_stop,
            rf_step,
        } => {
            let mut c = common.resolve()?;
            c.rf.start_ghz = rf_start.unwrap_or(c.rf.start_ghz);
            c.rf.stop_ghz = rf_stop.unwrap_or(c.rf.stop_ghz);
            c.rf.step_ghz = rf_step.unwrap_or(c.rf.step_ghz);
            cmd_sweep(&c)
        }
        Command::TruthTable { common } => cmd_truth_table(&common.resolve()?),
        Command::Bell { common, input } => {
            let mut c = common.resolve()?;
            c.input = input.or(c.input);
            cmd_bell(&c)
        }
        Command::Tomo { common, counts, target } => {
            let mut c = common.resolve()?;
            c.counts = counts.or(c.counts);
            c.target = target.or(c.target);
            cmd_tomo(&c)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(manifest) => {
            for o in &manifest.outputs {
                println!("{}  {}", o.sha256, o.file);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("polfreq: {e}");
            ExitCode::FAILURE
        }
    }
}
