//! Aggregation models: each computes a per-period band of aggregate power the
//! system can follow, plus whatever certificate its dispatch strategy needs.

mod envelope;
mod enumeration;
mod outer;
mod rectangular;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use flexagg_lp::{self as lp, LinearProgram, LpOutcome, LpStatus, Relation, Sense, VarId};

use crate::error::{Error, Result};
use crate::model::Case;
use crate::polyhedron::{add_period_block, build_period_polyhedron, Level};
use crate::scenario::{VertexPattern, DEFAULT_MAX_ESS_CORNERS, DEFAULT_MAX_LEAVES};

pub use envelope::solve_envelope;
pub use enumeration::{solve_enumeration, solve_enumeration_with};
pub use outer::{solve_outer, solve_two_stage, solve_two_stage_with};
pub use rectangular::{corner_recourse_feasible, solve_rectangular, solve_rectangular_with, solve_single_ess};

pub(crate) use enumeration::add_tree;

/// Per-period lower and upper aggregate power (MW).
#[derive(Clone, Debug, PartialEq)]
pub struct FlexBand {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FlexBand {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let band = Self { lower, upper };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::Precondition(format!(
                "band has {} lower and {} upper values",
                self.lower.len(),
                self.upper.len()
            )));
        }
        for t in 0..self.lower.len() {
            if !(self.lower[t].is_finite() && self.upper[t].is_finite()) {
                return Err(Error::Precondition(format!("band period {} is not finite", t + 1)));
            }
            if self.lower[t] > self.upper[t] {
                return Err(Error::Precondition(format!(
                    "band period {}: lower {} exceeds upper {}",
                    t + 1,
                    self.lower[t],
                    self.upper[t]
                )));
            }
        }
        Ok(())
    }

    pub fn periods(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, t: usize) -> f64 {
        self.upper[t] - self.lower[t]
    }

    /// Per-period intersection; an error if any period is empty.
    pub fn intersect(&self, other: &FlexBand) -> Result<FlexBand> {
        if self.periods() != other.periods() {
            return Err(Error::Precondition("bands cover different horizons".into()));
        }
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        for t in 0..lower.len() {
            if lower[t] > upper[t] {
                return Err(Error::Precondition(format!("band intersection is empty in period {}", t + 1)));
            }
        }
        Ok(FlexBand { lower, upper })
    }
}

/// Weighted sum of band widths.
pub fn flexibility_index(band: &FlexBand, weights: &[f64]) -> Result<f64> {
    if weights.len() != band.periods() {
        return Err(Error::Precondition(format!("{} weights for {} periods", weights.len(), band.periods())));
    }
    Ok((0..band.periods()).map(|t| weights[t] * band.width(t)).sum())
}

/// Rectangular storage energy ranges, indexed `[unit][t]` for `t = 0..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SocBox {
    pub lo: Vec<Vec<f64>>,
    pub hi: Vec<Vec<f64>>,
}

impl SocBox {
    pub fn validate(&self, case: &Case, tol: f64) -> Result<()> {
        for (i, e) in case.esses.iter().enumerate() {
            for t in 0..=case.periods {
                let (lo, hi) = (self.lo[i][t], self.hi[i][t]);
                if lo < e.e_min - tol || hi > e.e_max + tol || lo > hi + tol {
                    return Err(Error::Invariant(format!("storage box of unit {i} at {t} is [{lo}, {hi}]")));
                }
            }
            if self.lo[i][0] > e.e0 + tol || self.hi[i][0] < e.e0 - tol {
                return Err(Error::Invariant(format!("storage box of unit {i} excludes the initial energy")));
            }
        }
        Ok(())
    }
}

/// Storage power envelopes, indexed `[unit][t]` with `t = 0..T` for powers and
/// energy deltas and `t = 0..=T` for the induced energy bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelopes {
    pub p_lo: Vec<Vec<f64>>,
    pub p_hi: Vec<Vec<f64>>,
    pub d_lo: Vec<Vec<f64>>,
    pub d_hi: Vec<Vec<f64>>,
    pub e_lo: Vec<Vec<f64>>,
    pub e_hi: Vec<Vec<f64>>,
}

/// Stored energy at the end of every scenario-tree node, `[node][unit]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSolution {
    pub depth: usize,
    pub soc: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    None,
    SocBox(SocBox),
    Envelopes(Envelopes),
    ScenarioTree(ScenarioSolution),
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::None => "none",
            Certificate::SocBox(_) => "soc-box",
            Certificate::Envelopes(_) => "envelopes",
            Certificate::ScenarioTree(_) => "scenario-tree",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Envelope,
    SingleEss,
    Rectangular,
    Enumeration,
    TwoStage,
    Outer,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Envelope,
        ModelKind::SingleEss,
        ModelKind::Rectangular,
        ModelKind::Enumeration,
        ModelKind::TwoStage,
        ModelKind::Outer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Envelope => "envelope",
            ModelKind::SingleEss => "single-ess",
            ModelKind::Rectangular => "rectangular",
            ModelKind::Enumeration => "enumeration",
            ModelKind::TwoStage => "two-stage",
            ModelKind::Outer => "outer",
        }
    }

    /// Whether every in-band trajectory can be followed without knowing
    /// future setpoints.
    pub fn is_nonanticipative(self) -> bool {
        !matches!(self, ModelKind::TwoStage | ModelKind::Outer)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown model '{s}'")))
    }
}

/// How vertex sets are handled by the models that enumerate them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Full,
    Lazy,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "lazy" => Ok(Mode::Lazy),
            _ => Err(Error::Precondition(format!("unknown mode '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest number of scenario-tree leaves or trajectory patterns.
    pub max_leaves: usize,
    /// Largest number of storage units whose box corners are enumerated.
    pub max_ess_corners: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_leaves: DEFAULT_MAX_LEAVES, max_ess_corners: DEFAULT_MAX_ESS_CORNERS }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub lp_solves: usize,
    pub iterations: usize,
    /// Master-problem rounds in lazy mode; 1 otherwise.
    pub rounds: usize,
    /// Corners or patterns added beyond the initial two in lazy mode.
    pub added_cuts: usize,
    pub rows: usize,
    pub columns: usize,
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregationResult {
    pub model: ModelKind,
    pub band: FlexBand,
    pub objective: f64,
    pub certificate: Certificate,
    pub stats: SolveStats,
}

/// Runs `model` on `case`.
pub fn aggregate(case: &Case, model: ModelKind, mode: Mode, limits: &Limits) -> Result<AggregationResult> {
    match model {
        ModelKind::Envelope => solve_envelope(case),
        ModelKind::SingleEss => solve_single_ess(case),
        ModelKind::Rectangular => solve_rectangular_with(case, mode, limits),
        ModelKind::Enumeration => solve_enumeration_with(case, limits),
        ModelKind::TwoStage => solve_two_stage_with(case, mode, limits),
        ModelKind::Outer => solve_outer(case),
    }
}

/// Band columns shared by every recourse copy, with the index as objective.
pub(crate) struct BandColumns {
    pub lower: Vec<VarId>,
    pub upper: Vec<VarId>,
}

impl BandColumns {
    pub fn add(lp: &mut LinearProgram, case: &Case) -> Self {
        let mut lower = Vec::with_capacity(case.periods);
        let mut upper = Vec::with_capacity(case.periods);
        for t in 0..case.periods {
            let w = case.weights[t];
            let l = lp.add_named_var(format!("band_lo_{}", t + 1), f64::NEG_INFINITY, f64::INFINITY, -w);
            let u = lp.add_named_var(format!("band_hi_{}", t + 1), f64::NEG_INFINITY, f64::INFINITY, w);
            lp.add_row(&[(l, 1.0), (u, -1.0)], Relation::Le, 0.0);
            lower.push(l);
            upper.push(u);
        }
        Self { lower, upper }
    }

    pub fn side(&self, t: usize, upper: bool) -> VarId {
        if upper {
            self.upper[t]
        } else {
            self.lower[t]
        }
    }

    pub fn read(&self, x: &[f64]) -> FlexBand {
        let lower: Vec<f64> = self.lower.iter().map(|v| x[v.index()]).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&lower).map(|(v, l)| x[v.index()].max(*l)).collect();
        FlexBand { lower, upper }
    }
}

/// Appends one full-horizon recourse copy following `pattern` and returns its
/// storage energy columns, `[t][unit]`.
pub(crate) fn add_trajectory_copy(
    lp: &mut LinearProgram,
    case: &Case,
    aggregate: impl Fn(usize, bool) -> VarId,
    pattern: &VertexPattern,
) -> Vec<Vec<VarId>> {
    let mut prev: Vec<Level> = case.esses.iter().map(|e| Level::Const(e.e0)).collect();
    let mut socs = Vec::with_capacity(case.periods);
    for t in 0..case.periods {
        let block = add_period_block(lp, case, t, aggregate(t, pattern.0[t]), true);
        let next: Vec<VarId> = (0..case.esses.len()).map(|i| block.add_next_soc_var(lp, case, i, prev[i])).collect();
        prev = next.iter().map(|&v| Level::Var(v)).collect();
        socs.push(next);
    }
    socs
}

/// Solves an aggregation master problem, turning infeasibility into a
/// diagnosis that names the first period or device at fault.
pub(crate) fn solve_master(lp: &LinearProgram, case: &Case, stats: &mut SolveStats) -> Result<LpOutcome> {
    stats.lp_solves += 1;
    stats.rows = stats.rows.max(lp.num_rows());
    stats.columns = stats.columns.max(lp.num_vars());
    let out = lp::solve(lp)?;
    stats.iterations += out.iterations;
    match out.status {
        LpStatus::Optimal => Ok(out),
        LpStatus::Infeasible => Err(Error::Infeasible(diagnose(case))),
        LpStatus::Unbounded => Err(Error::Invariant("aggregation program unbounded; device bounds should prevent this".into())),
    }
}

/// Names the first period with no feasible dispatch at all, or blames the
/// storage energy limits.
pub fn diagnose(case: &Case) -> String {
    if let Err(e) = case.validate() {
        return e.to_string();
    }
    for t in 1..=case.periods {
        match build_period_polyhedron(case, t).and_then(|p| p.project_aggregate()) {
            Ok(_) => {}
            Err(Error::Infeasible(_)) => return format!("period {t} has no feasible dispatch"),
            Err(e) => return format!("period {t}: {e}"),
        }
    }
    "storage energy limits cannot be met over the horizon".into()
}

/// Builds the result record once a master solution is known.
pub(crate) fn finish(
    case: &Case,
    model: ModelKind,
    band: FlexBand,
    certificate: Certificate,
    mut stats: SolveStats,
    started: Instant,
) -> Result<AggregationResult> {
    band.validate()?;
    let objective = flexibility_index(&band, &case.weights)?;
    stats.wall_time = started.elapsed();
    log::debug!("{model}: objective {objective:.9} after {} LP solves", stats.lp_solves);
    Ok(AggregationResult { model, band, objective, certificate, stats })
}

/// A fresh maximization program with band columns.
pub(crate) fn master(case: &Case) -> Result<(LinearProgram, BandColumns)> {
    case.validate()?;
    let mut lp = LinearProgram::new(Sense::Maximize);
    let band = BandColumns::add(&mut lp, case);
    Ok((lp, band))
}
