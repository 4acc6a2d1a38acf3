//! Model comparison: solve several aggregation models on one case, then
//! replay the same seeded trajectories through each dispatch strategy.

use std::time::Instant;

use flexagg::disaggregation::{run_rolling_with, Objective, Strategy};
use flexagg::{aggregate, AggregationResult, Case, Certificate, Error, FlexBand, Limits, Mode, ModelKind};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::result_file::{mode_name, BandEntry};
use crate::sig;
use crate::trajectory::{sample_trajectory, SampleMode};

/// Slack allowed when re-checking the model ordering.
pub const CHAIN_SLACK: f64 = 1e-6;
/// Failures listed per strategy; the rest are only counted.
const MAX_LISTED_FAILURES: usize = 5;

/// Models ordered from the most to the least conservative.
const CHAIN: [ModelKind; 5] = [ModelKind::Envelope, ModelKind::Rectangular, ModelKind::Enumeration, ModelKind::TwoStage, ModelKind::Outer];

#[derive(Clone, Debug)]
pub struct ComparisonConfig {
    pub models: Vec<ModelKind>,
    pub strategies: Vec<Strategy>,
    pub n_trajectories: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Sampling modes used round-robin across trajectories.
    pub sampling: Vec<SampleMode>,
    pub limits: Limits,
    /// Include wall-clock figures. Off by default so reports are reproducible.
    pub timings: bool,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            models: ModelKind::ALL.to_vec(),
            strategies: vec![Strategy::Envelope, Strategy::Rectangular, Strategy::Enumeration],
            n_trajectories: 100,
            seed: 0,
            mode: Mode::Full,
            sampling: vec![SampleMode::Uniform, SampleMode::Vertex],
            limits: Limits::default(),
            timings: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelReport {
    pub model: String,
    /// `ok`, `size-cap` or `not-applicable`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<BandEntry>,
    pub lp_solves: usize,
    pub rounds: usize,
    pub added_cuts: usize,
    pub rows: usize,
    pub columns: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureEntry {
    pub trajectory: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyReport {
    pub strategy: String,
    /// Model whose certificate the strategy used.
    pub source: String,
    pub trajectories: usize,
    pub completed: usize,
    pub feasibility_rate: f64,
    /// Mean total cost over completed trajectories.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_cost: Option<f64>,
    /// Mean total cost of the same trajectories with no cost objective.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_average_cost: Option<f64>,
    pub max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_step_time_s: Option<f64>,
    pub failures: Vec<FailureEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub format_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub seed: u64,
    pub mode: String,
    pub n_trajectories: usize,
    pub sampling: Vec<String>,
    pub models: Vec<ModelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intersection: Option<BandEntry>,
    pub strategies: Vec<StrategyReport>,
}

impl ComparisonReport {
    pub fn model(&self, kind: ModelKind) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model == kind.name())
    }

    pub fn strategy(&self, s: Strategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|r| r.strategy == s.name())
    }
}

enum Outcome {
    Solved(AggregationResult),
    Refused(String, String),
}

fn model_report(kind: ModelKind, outcome: &Outcome, timings: bool) -> ModelReport {
    match outcome {
        Outcome::Solved(r) => ModelReport {
            model: kind.name().into(),
            status: "ok".into(),
            objective: Some(sig(r.objective)),
            band: Some(BandEntry::from_band(&r.band)),
            lp_solves: r.stats.lp_solves,
            rounds: r.stats.rounds,
            added_cuts: r.stats.added_cuts,
            rows: r.stats.rows,
            columns: r.stats.columns,
            wall_time_s: timings.then(|| sig(r.stats.wall_time.as_secs_f64())),
            note: None,
        },
        Outcome::Refused(status, note) => ModelReport {
            model: kind.name().into(),
            status: status.clone(),
            objective: None,
            band: None,
            lp_solves: 0,
            rounds: 0,
            added_cuts: 0,
            rows: 0,
            columns: 0,
            wall_time_s: None,
            note: Some(note.clone()),
        },
    }
}

/// Checks the model ordering over whichever models were solved.
pub fn check_chain(objectives: &[(ModelKind, f64)]) -> Result<()> {
    let get = |k: ModelKind| objectives.iter().find(|(m, _)| *m == k).map(|(_, v)| *v);
    let present: Vec<(ModelKind, f64)> = CHAIN.iter().filter_map(|k| get(*k).map(|v| (*k, v))).collect();
    for pair in present.windows(2) {
        if pair[0].1 > pair[1].1 + CHAIN_SLACK {
            return Err(Error::Invariant(format!("{} objective {} exceeds {} objective {}", pair[0].0, pair[0].1, pair[1].0, pair[1].1)).into());
        }
    }
    if let (Some(s), Some(r)) = (get(ModelKind::SingleEss), get(ModelKind::Rectangular)) {
        if (s - r).abs() > CHAIN_SLACK {
            return Err(Error::Invariant(format!("single-ess objective {s} differs from rectangular {r}")).into());
        }
    }
    if let (Some(s), Some(e)) = (get(ModelKind::SingleEss), get(ModelKind::Enumeration)) {
        if (s - e).abs() > CHAIN_SLACK {
            return Err(Error::Invariant(format!("single-ess objective {s} differs from enumeration {e}")).into());
        }
    }
    Ok(())
}

fn source_model(strategy: Strategy) -> &'static [ModelKind] {
    match strategy {
        Strategy::Envelope => &[ModelKind::Envelope],
        Strategy::Rectangular => &[ModelKind::Rectangular, ModelKind::SingleEss],
        Strategy::Enumeration => &[ModelKind::Enumeration],
        Strategy::Myopic => &[],
    }
}

struct Run {
    cost: Option<f64>,
    baseline: Option<f64>,
    residual: f64,
    periods: usize,
    seconds: f64,
    failure: Option<String>,
}

fn replay(case: &Case, result: &AggregationResult, strategy: Strategy, trajectory: &[f64]) -> Run {
    let started = Instant::now();
    let greedy = run_rolling_with(case, result, trajectory, strategy, Objective::Cost);
    let seconds = started.elapsed().as_secs_f64();
    match greedy {
        Ok(log) => {
            let baseline = run_rolling_with(case, result, trajectory, strategy, Objective::FeasibilityOnly).ok().map(|l| l.total_cost);
            Run {
                cost: Some(log.total_cost),
                baseline,
                residual: log.periods.iter().map(|p| p.residual).fold(0.0, f64::max),
                periods: log.periods.len(),
                seconds,
                failure: None,
            }
        }
        Err(e) => Run { cost: None, baseline: None, residual: 0.0, periods: 0, seconds, failure: Some(e.to_string()) },
    }
}

pub fn run_comparison(case: &Case, name: Option<&str>, config: &ComparisonConfig) -> Result<ComparisonReport> {
    case.validate()?;
    if config.sampling.is_empty() {
        return Err(crate::error::CliError::Usage("at least one sampling mode is required".into()));
    }
    let mut models = config.models.clone();
    models.sort();
    models.dedup();
    let outcomes: Vec<(ModelKind, Outcome)> = models
        .par_iter()
        .map(|&kind| {
            let outcome = match aggregate(case, kind, config.mode, &config.limits) {
                Ok(r) => Ok(Outcome::Solved(r)),
                Err(e @ Error::SizeCap { .. }) => Ok(Outcome::Refused("size-cap".into(), e.to_string())),
                Err(e @ Error::Precondition(_)) if kind == ModelKind::SingleEss => Ok(Outcome::Refused("not-applicable".into(), e.to_string())),
                Err(e) => Err(e),
            };
            outcome.map(|o| (kind, o))
        })
        .collect::<std::result::Result<_, Error>>()?;

    let solved: Vec<(ModelKind, &AggregationResult)> =
        outcomes.iter().filter_map(|(k, o)| if let Outcome::Solved(r) = o { Some((*k, r)) } else { None }).collect();
    check_chain(&solved.iter().map(|(k, r)| (*k, r.objective)).collect::<Vec<_>>())?;
    for (k, o) in &outcomes {
        if let Outcome::Refused(status, note) = o {
            log::info!("{k}: {status} ({note})");
        }
    }

    let mut report = ComparisonReport {
        format_version: crate::result_file::FORMAT_VERSION,
        case: name.map(str::to_string),
        seed: config.seed,
        mode: mode_name(config.mode).into(),
        n_trajectories: config.n_trajectories,
        sampling: config.sampling.iter().map(|m| m.name().to_string()).collect(),
        models: outcomes.iter().map(|(k, o)| model_report(*k, o, config.timings)).collect(),
        intersection: None,
        strategies: Vec::new(),
    };
    if config.n_trajectories == 0 || config.strategies.is_empty() || solved.is_empty() {
        return Ok(report);
    }

    let nonanticipative: Vec<&AggregationResult> = solved.iter().filter(|(k, _)| k.is_nonanticipative()).map(|(_, r)| *r).collect();
    let pool: Vec<&AggregationResult> = if nonanticipative.is_empty() { solved.iter().map(|(_, r)| *r).collect() } else { nonanticipative };
    let mut band: FlexBand = pool[0].band.clone();
    for r in &pool[1..] {
        band = band.intersect(&r.band)?;
    }
    report.intersection = Some(BandEntry::from_band(&band));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let trajectories: Vec<Vec<f64>> = (0..config.n_trajectories)
        .map(|k| sample_trajectory(&band, rng.random::<u64>(), config.sampling[k % config.sampling.len()]))
        .collect();

    for &strategy in &config.strategies {
        let myopic;
        let source: Option<&AggregationResult> = if strategy == Strategy::Myopic {
            myopic = AggregationResult {
                model: pool[0].model,
                band: band.clone(),
                objective: flexagg::flexibility_index(&band, &case.weights)?,
                certificate: Certificate::None,
                stats: Default::default(),
            };
            Some(&myopic)
        } else {
            source_model(strategy).iter().find_map(|k| solved.iter().find(|(m, _)| m == k).map(|(_, r)| *r))
        };
        let Some(result) = source else {
            log::warn!("{strategy} strategy skipped: its aggregation model was not solved");
            continue;
        };
        let runs: Vec<Run> = trajectories.par_iter().map(|t| replay(case, result, strategy, t)).collect();
        let completed: Vec<&Run> = runs.iter().filter(|r| r.failure.is_none()).collect();
        let mean = |v: Vec<f64>| if v.is_empty() { None } else { Some(sig(v.iter().sum::<f64>() / v.len() as f64)) };
        let paired: Vec<&&Run> = completed.iter().filter(|r| r.baseline.is_some()).collect();
        let periods: usize = completed.iter().map(|r| r.periods).sum();
        report.strategies.push(StrategyReport {
            strategy: strategy.name().into(),
            source: if strategy == Strategy::Myopic { "intersection".into() } else { result.model.name().into() },
            trajectories: runs.len(),
            completed: completed.len(),
            feasibility_rate: sig(completed.len() as f64 / runs.len() as f64),
            average_cost: mean(completed.iter().map(|r| r.cost.expect("completed")).collect()),
            baseline_average_cost: if paired.len() == completed.len() { mean(paired.iter().map(|r| r.baseline.expect("paired")).collect()) } else { None },
            max_residual: sig(completed.iter().map(|r| r.residual).fold(0.0, f64::max)),
            average_step_time_s: (config.timings && periods > 0).then(|| sig(completed.iter().map(|r| r.seconds).sum::<f64>() / periods as f64)),
            failures: runs
                .iter()
                .enumerate()
                .filter_map(|(k, r)| r.failure.clone().map(|message| FailureEntry { trajectory: k, message }))
                .take(MAX_LISTED_FAILURES)
                .collect(),
        });
    }
    Ok(report)
}
