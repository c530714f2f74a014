//! Command line front end: every verb maps onto one engine operation and
//! prints the same JSON body the HTTP service returns.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rebalance_core::cohort::Constraint;
use rebalance_core::engine::{Engine, LayoutOverrides};
use rebalance_core::ingest::DatasetManifest;
use rebalance_core::reweight::{assess_danger, ReweightConfig, SubgroupTable};
use rebalance_core::session::{load_session, save_session};
use rebalance_core::stats::ChiSquareParams;
use rebalance_core::{Error, Execution, Result};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "rebalance", version, about = "Selection-bias analysis from the command line")]
pub struct Cli {
    /// Session file to read (and, for mutating verbs, write back).
    #[arg(long, global = true)]
    pub session: Option<PathBuf>,
    /// Run statistics on a single thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a dataset; with --session, start a new session file for it.
    Ingest {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Inspect or edit the cohort tree.
    Cohort {
        #[command(subcommand)]
        action: CohortAction,
    },
    /// Per-dimension statistics of a cohort against the baseline.
    Stats {
        #[arg(long)]
        cohort: Option<String>,
        #[arg(long)]
        weighted: bool,
    },
    /// Assess or apply a reweighting configuration.
    Reweight(ReweightArgs),
    /// Danger score of a raw subgroup counts table.
    Danger {
        /// JSON file `{"baseline": [..], "focus": [..]}`, one entry per subgroup.
        #[arg(long)]
        counts_file: PathBuf,
    },
    /// Icicle table layout.
    Layout(LayoutArgs),
    /// Plot data.
    Plots {
        #[command(subcommand)]
        plot: PlotKind,
    },
    /// Print the session state.
    Session,
}

#[derive(Subcommand, Debug)]
pub enum CohortAction {
    /// Split a cohort by a constraint into included and excluded children.
    Derive {
        #[arg(long, default_value = "c0")]
        parent: String,
        /// Constraint as JSON, e.g. `{"dimension":"I50","op":"has_event"}`.
        #[arg(long)]
        constraint: String,
    },
    List,
    Baseline {
        id: String,
    },
    /// Set the focus cohort; `none` clears it.
    Focus {
        id: String,
    },
}

#[derive(Args, Debug)]
pub struct ReweightArgs {
    /// Comma-separated dimension codes.
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    pub coeff: f64,
    #[arg(long, conflicts_with = "apply")]
    pub assess: bool,
    /// Assess, then apply and write the session.
    #[arg(long)]
    pub apply: bool,
}

#[derive(Args, Debug)]
pub struct LayoutArgs {
    #[arg(long)]
    pub cohort: Option<String>,
    /// Saliency threshold; `inf` turns threshold saliency off.
    #[arg(long)]
    pub t_s: Option<String>,
    #[arg(long)]
    pub pins: Option<String>,
    #[arg(long)]
    pub collapses: Option<String>,
    #[arg(long)]
    pub sort: Option<String>,
    #[arg(long)]
    pub color: Option<String>,
    /// Show the replace-reweight view for this dimension.
    #[arg(long)]
    pub replace: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum PlotKind {
    Scatter {
        #[arg(long)]
        cohort: Option<String>,
        #[arg(long)]
        cap: Option<usize>,
    },
    Contour {
        #[arg(long)]
        cohort: Option<String>,
    },
    Vector {
        #[arg(long)]
        cohort: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    Setvis,
    Distribution {
        #[arg(long)]
        cohort: Option<String>,
        #[arg(long)]
        dim: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CountsFile {
    pub baseline: Vec<usize>,
    pub focus: Vec<usize>,
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Parse(e.to_string()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

fn session_path(cli: &Cli) -> Result<&Path> {
    cli.session.as_deref().ok_or_else(|| Error::InvalidInput("--session is required for this command".into()))
}

fn open(cli: &Cli) -> Result<Engine> {
    let state = load_session(&read(session_path(cli)?)?)?;
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    Ok(Engine::from_session(state)?.with_execution(exec))
}

fn save(cli: &Cli, engine: &Engine) -> Result<()> {
    write(session_path(cli)?, &save_session(&engine.session())?)
}

/// Runs one command and returns the JSON text to print.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Ingest { manifest } => {
            let m = DatasetManifest::read(manifest)?;
            let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
            let engine = Engine::open(&m, &base)?;
            if cli.session.is_some() {
                save(cli, &engine)?;
            }
            json(&engine.dataset_info())
        }
        Command::Cohort { action } => {
            let mut engine = open(cli)?;
            match action {
                CohortAction::List => json(&engine.cohorts()?),
                CohortAction::Derive { parent, constraint } => {
                    let c: Constraint = serde_json::from_str(constraint).map_err(|e| Error::InvalidInput(format!("constraint: {e}")))?;
                    let out = engine.derive_cohort(parent, c)?;
                    save(cli, &engine)?;
                    json(&out)
                }
                CohortAction::Baseline { id } => {
                    let out = engine.set_baseline(id)?;
                    save(cli, &engine)?;
                    json(&out)
                }
                CohortAction::Focus { id } => {
                    let out = engine.set_focus((id != "none").then_some(id.as_str()))?;
                    save(cli, &engine)?;
                    json(&out)
                }
            }
        }
        Command::Stats { cohort, weighted } => json(&open(cli)?.stats(cohort.as_deref(), *weighted)?),
        Command::Reweight(args) => {
            if !args.assess && !args.apply {
                return Err(Error::InvalidInput("choose --assess or --apply".into()));
            }
            let mut engine = open(cli)?;
            let assessed = engine.assess(ReweightConfig::new(args.dims.clone(), args.coeff))?;
            if args.apply {
                let out = engine.apply(None)?;
                save(cli, &engine)?;
                json(&out)
            } else {
                json(&assessed)
            }
        }
        Command::Danger { counts_file } => {
            let counts: CountsFile =
                serde_json::from_slice(&read(counts_file)?).map_err(|e| Error::Parse(format!("{}: {e}", counts_file.display())))?;
            let table = SubgroupTable::from_counts(&counts.baseline, &counts.focus)?;
            json(&assess_danger(&table, ChiSquareParams::default())?)
        }
        Command::Layout(a) => {
            let engine = open(cli)?;
            let o =
                LayoutOverrides::parse(a.t_s.as_deref(), a.pins.as_deref(), a.collapses.as_deref(), a.sort.as_deref(), a.color.as_deref())?;
            match &a.replace {
                Some(dim) => json(&engine.replace_view(a.cohort.as_deref(), dim, &o)?),
                None => json(&engine.layout(a.cohort.as_deref(), &o)?),
            }
        }
        Command::Plots { plot } => {
            let engine = open(cli)?;
            match plot {
                PlotKind::Scatter { cohort, cap } => json(&engine.scatter(cohort.as_deref(), *cap)?),
                PlotKind::Contour { cohort } => json(&engine.contour(cohort.as_deref())?),
                PlotKind::Vector { cohort, threshold } => json(&engine.vector(cohort.as_deref(), *threshold)?),
                PlotKind::Setvis => json(&engine.setvis()?),
                PlotKind::Distribution { cohort, dim } => json(&engine.distribution(cohort.as_deref(), dim)?),
            }
        }
        Command::Session => json(&open(cli)?.session()),
    }
}

/// 0 on success, 2 for validation errors, 1 otherwise.
pub fn exit_code(r: &Result<String>) -> i32 {
    match r {
        Ok(_) => 0,
        Err(e) if e.is_validation() => 2,
        Err(_) => 1,
    }
}
