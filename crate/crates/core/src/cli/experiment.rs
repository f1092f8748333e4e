//! Batch execution of an [`ExperimentConfig`]: scenario construction,
//! Monte-Carlo runs, CSV traces, summary, manifest and plot.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cli::config::{ConfigError, ExperimentConfig, ScenarioKind};
use crate::cli::plot::{emit_plot, PlotError};
use crate::error::Error;
use crate::geometry::{ConstraintSet, METRIC_FLOOR, NEWTON_PD_TOL};
use crate::optimizers::{Algorithm, FEASIBILITY_TOL};
use crate::sim::{
    generate_constraint_mask, generate_cost_sequence, generate_plant, monte_carlo_regret, AlgorithmOutcome,
    MonteCarloOptions, Scenario,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const TRACE_COLUMNS: [&str; 12] = [
    "scenario",
    "algorithm",
    "run",
    "t",
    "stage_cost",
    "comparator_stage_cost",
    "cumulative_regret",
    "eta",
    "certificate",
    "grad_norm_g",
    "closed_loop_radius",
    "surrogate_dist",
];

pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "regret.svg";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure at round {} in {stage}: {source}", round.map_or("-".to_string(), |r| r.to_string()))]
    Numerical {
        round: Option<usize>,
        stage: String,
        source: Error,
    },
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Plot(#[from] PlotError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } => 3,
            RunError::Io { .. } | RunError::Plot(_) => 1,
        }
    }

    fn numerical(err: Error, fallback_stage: &str) -> Self {
        match err {
            Error::AtRound { round, stage, source } => RunError::Numerical {
                round: Some(round),
                stage,
                source: *source,
            },
            other => RunError::Numerical {
                round: None,
                stage: fallback_stage.to_string(),
                source: other,
            },
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Tolerances in force for a run, recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub comparator_tol: f64,
    pub feasibility_tol: f64,
    pub newton_pd_tol: f64,
    pub metric_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub algorithm: Algorithm,
    pub variation_factor: f64,
    pub comparator_path_length: f64,
    pub final_regret_mean: f64,
    pub final_regret_std: f64,
    pub runs: usize,
    pub failed_runs: Vec<usize>,
    pub trace_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub version: String,
    /// Fully resolved configuration, overrides applied.
    pub config: ExperimentConfig,
    pub output_dir: PathBuf,
    /// File names relative to `output_dir`.
    pub artifacts: Vec<String>,
    pub groups: Vec<GroupSummary>,
    pub tolerances: Tolerances,
    pub wall_clock_seconds: f64,
}

#[derive(Serialize)]
struct TraceRow<'a> {
    scenario: &'a str,
    algorithm: &'a str,
    run: usize,
    t: usize,
    stage_cost: f64,
    comparator_stage_cost: f64,
    cumulative_regret: f64,
    eta: f64,
    certificate: f64,
    grad_norm_g: f64,
    closed_loop_radius: f64,
    surrogate_dist: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    algorithm: &'a str,
    t: usize,
    regret_mean: f64,
    regret_std: f64,
    runs: usize,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub master_seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(dir) = &self.output_dir {
            config.output_dir = dir.clone();
        }
        if let Some(seed) = self.master_seed {
            config.master_seed = seed;
        }
    }
}

pub fn run_experiment_file(config_path: &Path, overrides: &Overrides) -> Result<RunManifest, RunError> {
    let mut config = ExperimentConfig::from_path(config_path)?;
    overrides.apply(&mut config);
    run_experiment(&config)
}

struct Group {
    label: String,
    file_stem: String,
    variation_factor: f64,
    path_length: f64,
    outcome: AlgorithmOutcome,
}

fn build_scenario(config: &ExperimentConfig, variation_factor: f64) -> Result<Scenario, RunError> {
    let setup = |e| RunError::numerical(e, "setup");
    let plant = generate_plant(config.plant_seed, config.n, config.m, config.target_rho).map_err(setup)?;
    let constraint = match config.scenario {
        ScenarioKind::UnconstrainedSanity => ConstraintSet::none(config.m, config.n),
        _ => generate_constraint_mask(config.mask_seed, config.n, config.m, config.mask_density).map_err(setup)?,
    };
    let costs = generate_cost_sequence(config.cost_seed, config.horizon, variation_factor, config.n, config.m)
        .map_err(setup)?;
    Scenario::build(plant, constraint, costs, config.comparator_tol).map_err(|e| RunError::numerical(e, "comparator"))
}

fn run_groups(config: &ExperimentConfig) -> Result<Vec<Group>, RunError> {
    let factors = match config.scenario {
        ScenarioKind::VariationSweep => config.variation_factors.clone(),
        _ => vec![config.variation_factor],
    };
    let opts = MonteCarloOptions {
        runs: config.runs,
        master_seed: config.master_seed,
        mode: config.regret_mode,
        init: config.init,
        comparator_tol: config.comparator_tol,
    };
    let mut groups = Vec::new();
    for vf in factors {
        let scenario = build_scenario(config, vf)?;
        let outcomes =
            monte_carlo_regret(&scenario, &config.algorithms, &opts).map_err(|e| RunError::numerical(e, "monte_carlo"))?;
        for outcome in outcomes {
            let name = outcome.algorithm.as_str();
            let (label, file_stem) = match config.scenario {
                ScenarioKind::VariationSweep => (format!("{name}@vf={vf}"), format!("traces_{name}_vf{vf}")),
                _ => (name.to_string(), format!("traces_{name}")),
            };
            groups.push(Group {
                label,
                file_stem,
                variation_factor: vf,
                path_length: scenario.path_length,
                outcome,
            });
        }
    }
    Ok(groups)
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), RunError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| RunError::io(path, e.into()))?;
    for row in rows {
        writer.serialize(row).map_err(|e| RunError::io(path, e.into()))?;
    }
    writer.flush().map_err(|e| RunError::io(path, e))
}

/// Executes `config` and writes every artifact under `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest, RunError> {
    config.validate()?;
    let started = Instant::now();
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;

    let groups = run_groups(config)?;
    let scenario_name = config.scenario.as_str();
    let mut artifacts = Vec::new();
    let mut summaries = Vec::new();
    for g in &groups {
        let file = format!("{}.csv", g.file_stem);
        let rows = g.outcome.traces.iter().flat_map(|(run, trace)| {
            trace.iter().map(move |r| TraceRow {
                scenario: scenario_name,
                algorithm: &g.label,
                run: *run,
                t: r.t,
                stage_cost: r.stage_cost,
                comparator_stage_cost: r.comparator_stage_cost,
                cumulative_regret: r.cumulative_regret,
                eta: r.eta,
                certificate: r.certificate,
                grad_norm_g: r.grad_norm_g,
                closed_loop_radius: r.closed_loop_radius,
                surrogate_dist: r.surrogate_dist,
            })
        });
        write_csv(&dir.join(&file), rows)?;
        artifacts.push(file.clone());
        summaries.push(GroupSummary {
            label: g.label.clone(),
            algorithm: g.outcome.algorithm,
            variation_factor: g.variation_factor,
            comparator_path_length: g.path_length,
            final_regret_mean: g.outcome.final_mean(),
            final_regret_std: g.outcome.std.last().copied().unwrap_or(0.0),
            runs: g.outcome.traces.len(),
            failed_runs: g.outcome.failures.iter().map(|(r, _)| *r).collect(),
            trace_file: file,
        });
    }

    let summary_rows = groups.iter().flat_map(|g| {
        let runs = g.outcome.traces.len();
        g.outcome
            .mean
            .iter()
            .zip(&g.outcome.std)
            .enumerate()
            .map(move |(i, (mean, std))| SummaryRow {
                algorithm: &g.label,
                t: i + 1,
                regret_mean: *mean,
                regret_std: *std,
                runs,
            })
    });
    let summary_path = dir.join(SUMMARY_FILE);
    write_csv(&summary_path, summary_rows)?;
    artifacts.push(SUMMARY_FILE.to_string());

    emit_plot(&summary_path, &dir.join(PLOT_FILE))?;
    artifacts.push(PLOT_FILE.to_string());
    artifacts.push(MANIFEST_FILE.to_string());

    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        output_dir: dir.clone(),
        artifacts,
        groups: summaries,
        tolerances: Tolerances {
            comparator_tol: config.comparator_tol,
            feasibility_tol: FEASIBILITY_TOL,
            newton_pd_tol: NEWTON_PD_TOL,
            metric_floor: METRIC_FLOOR,
        },
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text + "\n").map_err(|e| RunError::io(&manifest_path, e))?;
    Ok(manifest)
}
