//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 2 when an analysis finds no observable state; errors map to 1.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bayesopt::{BoConfig, Observation};
use crate::model::parse_model;
use crate::neural::{Checkpoint, Network};
use crate::observability::{analyze_all, AnalysisOptions};
use crate::report::{emit_report, lookup, metrics, write_report_csv, MetricRow, RunSummary};
use crate::scenarios::{make_dataset, DataConfig, Dataset, Scenario, ScenarioId};
use crate::training::{train, write_bo_history, write_losses_csv, LossWeights, Mode, Profile, Selection, TrainConfig, TrainOutcome};

pub type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Debug, Parser)]
#[command(name = "obspinn", version, about = "Observability analysis and observability-augmented PINN training")]
pub struct Cli {
    /// Seed for data sampling, network initialization and BO.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON file with run settings; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Training budget: desk or full.
    #[arg(long, global = true)]
    pub profile: Option<Profile>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide which states can be written in terms of the output and its derivatives.
    Analyze {
        #[arg(long, conflicts_with = "model")]
        scenario: Option<ScenarioId>,
        /// Model file in the text format.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Parameters kept symbolic (scenarios only).
        #[arg(long, value_delimiter = ',')]
        unknown: Option<Vec<String>>,
        #[arg(long)]
        json: bool,
    },
    /// Integrate a scenario with its true parameters and write the trajectory as CSV.
    Simulate {
        #[arg(long)]
        scenario: ScenarioId,
    },
    /// Sample noisy train, validation and test splits.
    Dataset(RunArgs),
    /// Train one estimator and write a run directory.
    Train(RunArgs),
    /// Train every mode over several seeds and tabulate the metrics.
    Reproduce {
        #[command(flatten)]
        run: RunArgs,
        /// Seeds 0..n (offset by --seed).
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// Modes to run, comma separated. Defaults to --mode, or all three.
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<Mode>>,
    },
    /// Recompute report.csv of a run directory from its checkpoint.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: Option<ScenarioId>,
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Noise amplitude of the measurements.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Estimated parameters, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub unknown: Option<Vec<String>>,
    /// States whose initial value is left out of the loss.
    #[arg(long, value_delimiter = ',')]
    pub no_initial: Option<Vec<String>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// BO samples.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Split whose loss selects the checkpoint: val or test.
    #[arg(long)]
    pub select: Option<Selection>,
    /// Reuse the dataset directory written by `dataset`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

/// Settings a config file may carry; everything is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<ScenarioId>,
    pub mode: Option<Mode>,
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
    pub profile: Option<Profile>,
    pub unknown: Option<Vec<String>>,
    pub no_initial: Option<Vec<String>>,
    pub epochs: Option<usize>,
    pub iterations: Option<usize>,
    pub lr: Option<f64>,
    pub val_every: Option<usize>,
    pub select: Option<Selection>,
    pub weights: Option<LossWeights>,
    pub bo: Option<BoConfig>,
    pub symmetric_noise: Option<bool>,
    pub n_train: Option<usize>,
    pub n_val: Option<usize>,
    pub n_test: Option<usize>,
}

/// Fully resolved run settings, stored as `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: ScenarioId,
    pub profile: Profile,
    pub unknown: Vec<String>,
    pub no_initial: Vec<String>,
    pub data: DataConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn scenario(&self) -> CliResult<Scenario> {
        let unknown: Vec<&str> = self.unknown.iter().map(String::as_str).collect();
        let no_init: Vec<&str> = self.no_initial.iter().map(String::as_str).collect();
        Ok(Scenario::preset(self.scenario).with_unknown(&unknown)?.without_initial(&no_init)?)
    }
}

fn read_config(path: Option<&Path>) -> CliResult<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?).map_err(|e| format!("{}: {e}", p.display()))?),
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve(cli: &Cli, a: &RunArgs) -> CliResult<RunConfig> {
    let f = read_config(cli.config.as_deref())?;
    let scenario = a.scenario.or(f.scenario).ok_or("no scenario given (use --scenario or the config file)")?;
    let mode = a.mode.or(f.mode).unwrap_or(Mode::Proposed);
    let seed = cli.seed.or(f.seed).unwrap_or(0);
    let profile = cli.profile.or(f.profile).unwrap_or(Profile::Desk);
    let preset = Scenario::preset(scenario);
    let unknown = a.unknown.clone().or(f.unknown).unwrap_or(preset.unknown.clone());
    let no_initial = a.no_initial.clone().or(f.no_initial).unwrap_or_default();
    let mut train = TrainConfig::profile(profile, scenario, mode, seed);
    train.epochs = a.epochs.or(f.epochs).unwrap_or(train.epochs);
    train.bo_iterations = a.iterations.or(f.iterations).unwrap_or(train.bo_iterations);
    train.lr = a.lr.or(f.lr).unwrap_or(train.lr);
    train.val_every = f.val_every.unwrap_or(train.val_every);
    train.selection = a.select.or(f.select).unwrap_or(train.selection);
    train.weights = f.weights.unwrap_or(train.weights);
    train.bo = f.bo.unwrap_or(train.bo);
    let d = DataConfig::default();
    let data = DataConfig {
        sigma: a.sigma.or(f.sigma).unwrap_or(0.0),
        seed,
        n_train: f.n_train.unwrap_or(d.n_train),
        n_val: f.n_val.unwrap_or(d.n_val),
        n_test: f.n_test.unwrap_or(d.n_test),
        symmetric_noise: f.symmetric_noise.unwrap_or(false),
    };
    Ok(RunConfig { scenario, profile, unknown, no_initial, data, train })
}

fn write_json(path: &Path, v: &impl Serialize) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?)?)
}

/// Trains as configured and writes the run directory.
pub fn train_run(cfg: &RunConfig, dataset: Option<&Path>, dir: &Path) -> CliResult<(TrainOutcome, Vec<MetricRow>)> {
    let s = cfg.scenario()?;
    let d = match dataset {
        Some(p) => {
            let d = Dataset::load(p)?;
            if d.scenario != cfg.scenario {
                return Err(format!("dataset in {} belongs to {}", p.display(), d.scenario.name()).into());
            }
            d
        }
        None => make_dataset(&s, &cfg.data)?,
    };
    let analysis = match cfg.train.mode {
        Mode::Proposed => Some(s.analyze(&AnalysisOptions::default())?),
        _ => None,
    };
    fs::create_dir_all(dir)?;
    let mut stored = cfg.clone();
    stored.data = d.config;
    write_json(&dir.join("config.json"), &stored)?;
    d.save(&dir.join("dataset"))?;
    log::info!("training {} ({:?}) into {}", s.id.name(), cfg.train.mode, dir.display());
    let out = train(&s, analysis.as_ref(), &d, &cfg.train)?;
    write_losses_csv(&out.trace, BufWriter::new(File::create(dir.join("losses.csv"))?))?;
    write_bo_history(&out.unknown, &out.bo_history, BufWriter::new(File::create(dir.join("bo_history.csv"))?))?;
    write_json(&dir.join("checkpoint.json"), &out.network.to_checkpoint())?;
    let summary = RunSummary {
        scenario: s.id.name().into(),
        mode: format!("{:?}", out.mode).to_lowercase(),
        sigma: d.config.sigma,
        seed: d.config.seed,
        selection: format!("{:?}", cfg.train.selection).to_lowercase(),
        unknown: out.unknown.clone(),
        theta_hat: out.theta_hat.clone(),
        theta_true: s.true_unknown(),
        val_loss: out.val_loss,
        best_epoch: out.best_epoch,
        s_star: out.s_star,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(&dir.join("bo_history.json"), &out.bo_history)?;
    let rows = emit_report(dir, &summary, &out.network, &d, &out.bo_history, (cfg.train.bo.lower, cfg.train.bo.upper), s.horizon)?;
    Ok((out, rows))
}

/// Recomputes the metrics of a run directory.
pub fn evaluate_run(dir: &Path) -> CliResult<Vec<MetricRow>> {
    let summary: RunSummary = read_json(&dir.join("summary.json"))?;
    let ckpt: Checkpoint = read_json(&dir.join("checkpoint.json"))?;
    let net = Network::from_checkpoint(&ckpt)?;
    let d = Dataset::load(&dir.join("dataset"))?;
    Ok(metrics(&summary, &net, &d))
}

fn out_dir(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

pub fn run(cli: Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Analyze { scenario, model, unknown, json } => {
            let result = match (scenario, model) {
                (Some(id), None) => {
                    let mut s = Scenario::preset(*id);
                    if let Some(u) = unknown {
                        s = s.with_unknown(&u.iter().map(String::as_str).collect::<Vec<_>>())?;
                    }
                    s.analyze(&AnalysisOptions::default())?
                }
                (None, Some(path)) => analyze_all(&parse_model(&fs::read_to_string(path)?)?, &AnalysisOptions::default())?,
                _ => return Err("give exactly one of --scenario and --model".into()),
            };
            let text = if *json { result.to_json() } else { result.to_text() };
            match &cli.out {
                Some(p) => fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(if result.observable_indices().is_empty() { 2 } else { 0 })
        }
        Command::Simulate { scenario } => {
            let s = Scenario::preset(*scenario);
            let traj = s.simulate()?;
            match &cli.out {
                Some(p) => traj.write_csv(&s.model.states, BufWriter::new(File::create(p)?))?,
                None => traj.write_csv(&s.model.states, std::io::stdout().lock())?,
            }
            Ok(0)
        }
        Command::Dataset(a) => {
            let cfg = resolve(&cli, a)?;
            let d = make_dataset(&cfg.scenario()?, &cfg.data)?;
            let dir = out_dir(&cli, &format!("data_{}", cfg.scenario.name()));
            d.save(&dir)?;
            println!("wrote {}", dir.display());
            Ok(0)
        }
        Command::Train(a) => {
            let cfg = resolve(&cli, a)?;
            let dir = out_dir(&cli, &format!("run_{}_{:?}", cfg.scenario.name(), cfg.train.mode).to_lowercase());
            let (out, rows) = train_run(&cfg, a.dataset.as_deref(), &dir)?;
            println!("theta_hat {:?} = {:?} (E_val {:.4e})", out.unknown, out.theta_hat, out.val_loss);
            write_report_csv(&rows, std::io::stdout().lock())?;
            Ok(0)
        }
        Command::Reproduce { run, seeds, modes } => {
            let base = resolve(&cli, run)?;
            let modes = match (modes, run.mode) {
                (Some(m), _) => m.clone(),
                (None, Some(m)) => vec![m],
                (None, None) => vec![Mode::Baseline, Mode::Reference, Mode::Proposed],
            };
            let root = out_dir(&cli, &format!("reproduce_{}", base.scenario.name()));
            fs::create_dir_all(&root)?;
            let mut table = BufWriter::new(File::create(root.join("summary.csv"))?);
            writeln!(table, "mode,seed,metric,target,split,value")?;
            for k in 0..*seeds {
                for &mode in &modes {
                    let mut cfg = base.clone();
                    cfg.train.mode = mode;
                    cfg.train.seed = base.train.seed + k;
                    cfg.data.seed = base.data.seed + k;
                    let dir = root.join(format!("{:?}_seed{}", mode, cfg.train.seed).to_lowercase());
                    let (_, rows) = train_run(&cfg, run.dataset.as_deref(), &dir)?;
                    for r in &rows {
                        writeln!(table, "{:?},{},{},{},{},{:?}", mode, cfg.train.seed, r.metric, r.target, r.split, r.value)?;
                    }
                    let headline: Vec<String> = cfg.unknown.iter().filter_map(|p| lookup(&rows, "RAE", p, "all").map(|v| format!("RAE({p}) {v:.4}"))).collect();
                    println!("{mode:?} seed {}: {}", cfg.train.seed, headline.join(", "));
                }
            }
            table.flush()?;
            println!("wrote {}", root.join("summary.csv").display());
            Ok(0)
        }
        Command::Evaluate { run } => {
            let rows = evaluate_run(run)?;
            let target = cli.out.clone().unwrap_or_else(|| run.join("report.csv"));
            write_report_csv(&rows, BufWriter::new(File::create(&target)?))?;
            println!("wrote {}", target.display());
            Ok(0)
        }
    }
}

/// Loads the BO history a run directory stores next to its CSV.
pub fn load_bo_history(dir: &Path) -> CliResult<Vec<Observation>> {
    read_json(&dir.join("bo_history.json"))
}
