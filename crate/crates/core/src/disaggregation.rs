//! Rolling, period-by-period realization of setpoints inside a band.
//!
//! Each step solves one LP: the current period's operating constraints at the
//! given setpoint plus whatever the aggregation certificate requires to keep
//! every future in-band setpoint serviceable. Only the current period's
//! operating cost is minimized.

use std::fmt;
use std::str::FromStr;

use flexagg_lp::{self as lp, LinearProgram, LpStatus, Relation, Sense};

use crate::aggregation::{add_tree, AggregationResult, Certificate, FlexBand, Limits};
use crate::error::{Error, Result};
use crate::model::{ess_energy_delta_inv, Case};
use crate::polyhedron::{add_expr_row, add_period_block, Dispatch, LinExpr, Level};
use crate::scenario::ScenarioTree;

/// Residual tolerance for a realized period.
pub const RESIDUAL_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Future feasibility through the scenario tree of remaining band extremes.
    Enumeration,
    /// Next stored energy confined to the storage box.
    Rectangular,
    /// Storage energy delta confined to the envelopes.
    Envelope,
    /// Current period only, energy limits respected, no lookahead.
    Myopic,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Enumeration, Strategy::Rectangular, Strategy::Envelope, Strategy::Myopic];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Enumeration => "enumeration",
            Strategy::Rectangular => "rectangular",
            Strategy::Envelope => "envelope",
            Strategy::Myopic => "myopic",
        }
    }

    /// Whether this strategy can run on `certificate`.
    pub fn accepts(self, certificate: &Certificate) -> bool {
        match self {
            Strategy::Enumeration | Strategy::Myopic => true,
            Strategy::Rectangular => matches!(certificate, Certificate::SocBox(_)),
            Strategy::Envelope => matches!(certificate, Certificate::Envelopes(_)),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Precondition(format!("unknown strategy '{s}'")))
    }
}

/// What a step minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Objective {
    /// Current-period operating cost.
    #[default]
    Cost,
    /// Nothing: any feasible dispatch, as a baseline.
    FeasibilityOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodRecord {
    /// 1-based period number.
    pub period: usize,
    pub setpoint: f64,
    pub dispatch: Dispatch,
    pub soc_after: Vec<f64>,
    pub cost: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispatchLog {
    pub strategy: Strategy,
    pub periods: Vec<PeriodRecord>,
    pub total_cost: f64,
}

/// Mutable state of one rolling run.
#[derive(Clone, Debug)]
pub struct RollingState<'a> {
    case: &'a Case,
    band: &'a FlexBand,
    certificate: &'a Certificate,
    strategy: Strategy,
    limits: Limits,
    /// Number of periods already realized.
    pub period: usize,
    pub soc: Vec<f64>,
    pub realized: Vec<f64>,
}

impl<'a> RollingState<'a> {
    pub fn new(case: &'a Case, result: &'a AggregationResult, strategy: Strategy) -> Result<Self> {
        case.validate()?;
        if result.band.periods() != case.periods {
            return Err(Error::Precondition(format!("band covers {} periods, case has {}", result.band.periods(), case.periods)));
        }
        if !strategy.accepts(&result.certificate) {
            return Err(Error::Precondition(format!(
                "{strategy} strategy cannot use a {} certificate from the {} model",
                result.certificate.kind(),
                result.model
            )));
        }
        Ok(Self {
            case,
            band: &result.band,
            certificate: &result.certificate,
            strategy,
            limits: Limits::default(),
            period: 0,
            soc: case.initial_soc(),
            realized: Vec::new(),
        })
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn is_done(&self) -> bool {
        self.period >= self.case.periods
    }

    /// Checks a setpoint against the band, clamping tiny excursions.
    fn admit(&self, setpoint: f64) -> Result<f64> {
        let t = self.period;
        let (lo, hi) = (self.band.lower[t], self.band.upper[t]);
        if !setpoint.is_finite() {
            return Err(Error::Precondition(format!("period {}: setpoint is not finite", t + 1)));
        }
        let tol_lo = 1e-6 * lo.abs().max(1.0);
        let tol_hi = 1e-6 * hi.abs().max(1.0);
        if setpoint < lo - tol_lo {
            return Err(Error::OutOfBand { period: t + 1, setpoint, side: "lower", bound: lo });
        }
        if setpoint > hi + tol_hi {
            return Err(Error::OutOfBand { period: t + 1, setpoint, side: "upper", bound: hi });
        }
        if setpoint < lo || setpoint > hi {
            log::warn!("period {}: setpoint {setpoint} clamped into [{lo}, {hi}]", t + 1);
        }
        Ok(setpoint.clamp(lo, hi))
    }

    /// Solves the current period without changing the state.
    pub fn plan(&self, setpoint: f64, objective: Objective) -> Result<PeriodRecord> {
        if self.is_done() {
            return Err(Error::Precondition("all periods already realized".into()));
        }
        let setpoint = self.admit(setpoint)?;
        let case = self.case;
        let t = self.period;
        let mut prog = LinearProgram::new(Sense::Minimize);
        let agg = prog.add_fixed(setpoint);
        let block = add_period_block(&mut prog, case, t, agg, true);
        let prev: Vec<Level> = self.soc.iter().map(|&e| Level::Const(e)).collect();
        match (self.strategy, self.certificate) {
            (Strategy::Myopic, _) => {
                for (i, p) in prev.iter().enumerate() {
                    block.add_next_soc_var(&mut prog, case, i, *p);
                }
            }
            (Strategy::Rectangular, Certificate::SocBox(b)) => {
                for (i, p) in prev.iter().enumerate() {
                    block.bound_next_soc(&mut prog, case, i, *p, Level::Const(b.lo[i][t + 1]), Level::Const(b.hi[i][t + 1]));
                }
            }
            (Strategy::Envelope, Certificate::Envelopes(env)) => {
                for (i, (ess, p)) in case.esses.iter().zip(&prev).enumerate() {
                    let delta = block.delta(ess, i, case.tau);
                    add_expr_row(&mut prog, &delta, Relation::Ge, &LinExpr::constant(env.d_lo[i][t]));
                    add_expr_row(&mut prog, &delta, Relation::Le, &LinExpr::constant(env.d_hi[i][t]));
                    block.add_next_soc_var(&mut prog, case, i, *p);
                }
            }
            (Strategy::Enumeration, _) => {
                let next: Vec<Level> =
                    prev.iter().enumerate().map(|(i, p)| Level::Var(block.add_next_soc_var(&mut prog, case, i, *p))).collect();
                let remaining = case.periods - t - 1;
                if remaining > 0 {
                    let tree = ScenarioTree::new(remaining, self.limits.max_leaves)?;
                    let fixed: Vec<[flexagg_lp::VarId; 2]> = (t + 1..case.periods)
                        .map(|s| [prog.add_fixed(self.band.lower[s]), prog.add_fixed(self.band.upper[s])])
                        .collect();
                    add_tree(&mut prog, case, &tree, t + 1, &next, |s, u| fixed[s - t - 1][u as usize]);
                }
            }
            (s, c) => {
                return Err(Error::Precondition(format!("{s} strategy cannot use a {} certificate", c.kind())));
            }
        }
        if objective == Objective::Cost {
            block.set_cost_objective(&mut prog, case);
        }
        let out = lp::solve(&prog)?;
        if out.status != LpStatus::Optimal {
            return Err(Error::StepInfeasible { period: t + 1, setpoint, strategy: self.strategy.name().into() });
        }
        let residual = prog.max_violation(&out.x);
        if residual > RESIDUAL_TOL {
            return Err(Error::Invariant(format!("period {} dispatch residual {residual:e}", t + 1)));
        }
        let dispatch = block.extract(&out.x);
        let deltas = dispatch.deltas(case);
        let mut soc_after = Vec::with_capacity(case.esses.len());
        for (i, ess) in case.esses.iter().enumerate() {
            let e = ess.kappa * self.soc[i] - deltas[i];
            if e < ess.e_min - RESIDUAL_TOL || e > ess.e_max + RESIDUAL_TOL {
                return Err(Error::Invariant(format!("period {}: unit {i} energy {e} outside its limits", t + 1)));
            }
            soc_after.push(e.clamp(ess.e_min, ess.e_max));
        }
        let cost = dispatch.cost(case);
        Ok(PeriodRecord { period: t + 1, setpoint, dispatch, soc_after, cost, residual })
    }

    /// Realizes the current period and advances.
    pub fn step(&mut self, setpoint: f64, objective: Objective) -> Result<PeriodRecord> {
        let rec = self.plan(setpoint, objective)?;
        self.soc = rec.soc_after.clone();
        self.realized.push(rec.setpoint);
        self.period += 1;
        Ok(rec)
    }
}

fn expect_strategy(state: &RollingState<'_>, strategy: Strategy) -> Result<()> {
    if state.strategy != strategy {
        return Err(Error::Precondition(format!("state runs the {} strategy, not {strategy}", state.strategy)));
    }
    Ok(())
}

/// One greedy step that keeps the remaining scenario tree feasible.
pub fn disagg_enumeration_step(state: &mut RollingState<'_>, setpoint: f64) -> Result<PeriodRecord> {
    expect_strategy(state, Strategy::Enumeration)?;
    state.step(setpoint, Objective::Cost)
}

/// One greedy step that lands inside the storage box.
pub fn disagg_rectangular_step(state: &mut RollingState<'_>, setpoint: f64) -> Result<PeriodRecord> {
    expect_strategy(state, Strategy::Rectangular)?;
    state.step(setpoint, Objective::Cost)
}

/// One greedy step with storage held inside its envelopes.
pub fn disagg_envelope_step(state: &mut RollingState<'_>, setpoint: f64) -> Result<PeriodRecord> {
    expect_strategy(state, Strategy::Envelope)?;
    state.step(setpoint, Objective::Cost)
}

/// Greedy cost-minimizing run over a whole trajectory.
pub fn run_rolling(case: &Case, result: &AggregationResult, trajectory: &[f64], strategy: Strategy) -> Result<DispatchLog> {
    run_rolling_with(case, result, trajectory, strategy, Objective::Cost)
}

pub fn run_rolling_with(
    case: &Case,
    result: &AggregationResult,
    trajectory: &[f64],
    strategy: Strategy,
    objective: Objective,
) -> Result<DispatchLog> {
    if trajectory.len() != case.periods {
        return Err(Error::Precondition(format!("trajectory has {} values for {} periods", trajectory.len(), case.periods)));
    }
    let mut state = RollingState::new(case, result, strategy)?;
    let mut periods = Vec::with_capacity(case.periods);
    for &p in trajectory {
        periods.push(state.step(p, objective)?);
    }
    let total_cost = periods.iter().map(|r| r.cost).sum();
    Ok(DispatchLog { strategy, periods, total_cost })
}

/// Checks that a log keeps storage power inside the envelopes it was run with.
pub fn check_envelope_confinement(case: &Case, env: &crate::aggregation::Envelopes, log: &DispatchLog, tol: f64) -> bool {
    log.periods.iter().all(|rec| {
        let t = rec.period - 1;
        rec.dispatch.deltas(case).iter().enumerate().all(|(i, d)| {
            let p = ess_energy_delta_inv(*d, &case.esses[i], case.tau);
            p >= env.p_lo[i][t] - tol && p <= env.p_hi[i][t] + tol
        })
    })
}
