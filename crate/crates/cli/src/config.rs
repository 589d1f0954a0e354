use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use logfuture::{GridParams, NormalizationAxis, Readout, DEFAULT_SEED};
use serde::{Deserialize, Serialize};

/// Everything needed to regenerate an output file. Embedded in each CSV as a
/// `# config:` line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridParams,
    pub scenario: Option<PathBuf>,
    pub seed: u64,
    pub episodes_per_choice: usize,
    pub out: Option<PathBuf>,
    pub strict: bool,
    pub axis: NormalizationAxis,
    pub epsilon: Option<f64>,
    pub readout: Readout,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Action {
    Impulse { tau_probe: f64, duration: f64, dt: f64 },
    Train,
    Predict { snapshot: PathBuf, probe: String },
    Value { snapshot: PathBuf, probe: Vec<String>, window: Option<[f64; 2]> },
    Figures { ids: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Past,
    Present,
}

impl From<AxisArg> for NormalizationAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Past => NormalizationAxis::PastStimulus,
            AxisArg::Present => NormalizationAxis::PresentStimulus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReadoutArg {
    Raw,
    Normalized,
    Exposure,
}

impl From<ReadoutArg> for Readout {
    fn from(r: ReadoutArg) -> Self {
        match r {
            ReadoutArg::Raw => Readout::Raw,
            ReadoutArg::Normalized => Readout::Normalized,
            ReadoutArg::Exposure => Readout::Exposure,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Smallest represented lag.
    #[arg(long, default_value_t = 0.5)]
    pub tau_min: f64,
    /// Largest represented lag.
    #[arg(long, default_value_t = 100.0)]
    pub tau_max: f64,
    /// Number of exposed timeline nodes.
    #[arg(long, default_value_t = 64)]
    pub n_units: usize,
    /// Order of the inverse approximation.
    #[arg(short = 'k', long = "k", default_value_t = 4)]
    pub k: usize,
    /// Scenario document (TOML).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Episodes sampled per choice.
    #[arg(long = "episodes", default_value_t = 10_000)]
    pub episodes_per_choice: usize,
    /// Output file (directory for `figures`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Treat grid-interior warnings as errors.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, value_enum, default_value_t = AxisArg::Past)]
    pub axis: AxisArg,
    /// Normalization floor; defaults to a tiny fraction of the largest row sum.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value_t = ReadoutArg::Exposure)]
    pub readout: ReadoutArg,
    /// Worker threads for training (0: all cores). Never changes results.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discrete inverse versus the closed form for a delta input.
    Impulse {
        #[command(flatten)]
        common: Common,
        /// Lag of the probed node.
        #[arg(long, default_value_t = 5.0)]
        tau_probe: f64,
        /// Simulated time; defaults to five times the probe.
        #[arg(long)]
        duration: Option<f64>,
        /// Sampling step; defaults to a hundredth of the probe.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Train on a scenario and write a tensor snapshot.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Future timeline cued by one stimulus.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        probe: String,
    },
    /// Cached and windowed values of cues under the scenario's rewards.
    Value {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        snapshot: PathBuf,
        /// Cue to evaluate; repeatable. Defaults to every choice.
        #[arg(long)]
        probe: Vec<String>,
        /// Rectangular window `LO,HI`.
        #[arg(long, value_parser = parse_window)]
        window: Option<[f64; 2]>,
    },
    /// Reproduce canonical experiments and check their claims.
    Figures {
        #[command(flatten)]
        common: Common,
        /// fig4 .. fig8; all when omitted.
        ids: Vec<String>,
    },
}

fn parse_window(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok([num(lo)?, num(hi)?])
}

impl Common {
    fn into_config(self, action: Action) -> (RunConfig, usize) {
        (
            RunConfig {
                grid: GridParams {
                    tau_min: self.tau_min,
                    tau_max: self.tau_max,
                    n_units: self.n_units,
                    k: self.k,
                },
                scenario: self.scenario,
                seed: self.seed,
                episodes_per_choice: self.episodes_per_choice,
                out: self.out,
                strict: self.strict,
                axis: self.axis.into(),
                epsilon: self.epsilon,
                readout: self.readout.into(),
                action,
            },
            self.workers,
        )
    }
}

impl Command {
    /// The run configuration and the worker count.
    pub fn into_config(self) -> (RunConfig, usize) {
        match self {
            Command::Impulse {
                common,
                tau_probe,
                duration,
                dt,
            } => common.into_config(Action::Impulse {
                tau_probe,
                duration: duration.unwrap_or(5.0 * tau_probe),
                dt: dt.unwrap_or(tau_probe / 100.0),
            }),
            Command::Train { common } => common.into_config(Action::Train),
            Command::Predict {
                common,
                snapshot,
                probe,
            } => common.into_config(Action::Predict { snapshot, probe }),
            Command::Value {
                common,
                snapshot,
                probe,
                window,
            } => common.into_config(Action::Value {
                snapshot,
                probe,
                window,
            }),
            Command::Figures { common, ids } => common.into_config(Action::Figures { ids }),
        }
    }
}

pub const CONFIG_PREFIX: &str = "config: ";

impl RunConfig {
    pub fn header_line(&self) -> String {
        format!(
            "{CONFIG_PREFIX}{}",
            serde_json::to_string(self).expect("config serialises")
        )
    }

    /// Reads a config from a JSON file or from the `# config:` line of an
    /// output file.
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let json = text
            .lines()
            .find_map(|l| l.strip_prefix("# ").and_then(|l| l.strip_prefix(CONFIG_PREFIX)))
            .unwrap_or(&text);
        Ok(serde_json::from_str(json)?)
    }
}
