//! Per-period operating constraints as LP blocks.
//!
//! A [`DispatchBlock`] is one copy of a period's device and network variables
//! wired to a given aggregate-power column. The aggregation models stack many
//! blocks that share band columns; [`PeriodPolyhedron`] is the stand-alone
//! single-block program.

use flexagg_lp::{self as lp, LinearProgram, LpStatus, Relation, Sense, VarId};

use crate::error::{Error, Result};
use crate::model::{Case, EssParams};

/// A linear expression `Σ a·x + constant`.
#[derive(Clone, Debug, Default)]
pub(crate) struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: VarId) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.1 *= k);
        self.constant *= k;
        self
    }

    pub fn plus(mut self, other: &LinExpr, k: f64) -> Self {
        self.terms.extend(other.terms.iter().map(|&(v, a)| (v, a * k)));
        self.constant += other.constant * k;
        self
    }
}

/// Adds the row `lhs (rel) rhs`.
pub(crate) fn add_expr_row(lp: &mut LinearProgram, lhs: &LinExpr, rel: Relation, rhs: &LinExpr) {
    let diff = lhs.clone().plus(rhs, -1.0);
    lp.add_row(&diff.terms, rel, -diff.constant);
}

/// A level that is either known or a column of the program.
#[derive(Clone, Copy, Debug)]
pub enum Level {
    Const(f64),
    Var(VarId),
}

impl Level {
    pub(crate) fn expr(self) -> LinExpr {
        match self {
            Level::Const(c) => LinExpr::constant(c),
            Level::Var(v) => LinExpr::var(v),
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            Level::Const(c) => c,
            Level::Var(v) => x[v.index()],
        }
    }
}

/// Values of one block at a solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Dispatch {
    pub aggregate: f64,
    pub gens: Vec<f64>,
    pub loads: Vec<f64>,
    pub discharge: Vec<f64>,
    pub charge: Vec<f64>,
    pub flows: Vec<f64>,
}

impl Dispatch {
    /// Signed storage power, positive when discharging.
    pub fn ess_power(&self) -> Vec<f64> {
        self.discharge.iter().zip(&self.charge).map(|(d, c)| d - c).collect()
    }

    /// Energy delta of each storage unit over the period.
    pub fn deltas(&self, case: &Case) -> Vec<f64> {
        case.esses.iter().enumerate().map(|(i, e)| e.split_delta(self.discharge[i], self.charge[i], case.tau)).collect()
    }

    /// Operating cost over one period.
    pub fn cost(&self, case: &Case) -> f64 {
        let g: f64 = self.gens.iter().zip(&case.costs.gens).map(|(p, c)| p * c).sum();
        let s: f64 = self.discharge.iter().zip(&self.charge).zip(&case.costs.esses).map(|((d, c), k)| (d + c) * k).sum();
        (g + s) * case.tau
    }
}

/// Columns of one copy of a period's operating constraints.
#[derive(Clone, Debug)]
pub struct DispatchBlock {
    pub aggregate: VarId,
    pub gens: Vec<VarId>,
    pub loads: Vec<VarId>,
    pub discharge: Vec<VarId>,
    pub charge: Vec<VarId>,
    /// Voltage angle per node; `None` at the reference node.
    pub angles: Vec<Option<VarId>>,
    pub flows: Vec<VarId>,
    /// Row indices of the charge/discharge mixing rows.
    pub mixing_rows: Vec<usize>,
}

impl DispatchBlock {
    /// Energy removed from storage unit `i` by this block.
    pub(crate) fn delta(&self, ess: &EssParams, i: usize, tau: f64) -> LinExpr {
        LinExpr {
            terms: vec![(self.discharge[i], tau / ess.eta_d), (self.charge[i], -tau * ess.eta_c)],
            constant: 0.0,
        }
    }

    /// `κ·prev − delta`, the stored energy after this block.
    pub(crate) fn next_soc(&self, case: &Case, i: usize, prev: Level) -> LinExpr {
        let ess = &case.esses[i];
        prev.expr().scaled(ess.kappa).plus(&self.delta(ess, i, case.tau), -1.0)
    }

    /// Constrains the stored energy after this block to `[lo, hi]`.
    pub(crate) fn bound_next_soc(&self, lp: &mut LinearProgram, case: &Case, i: usize, prev: Level, lo: Level, hi: Level) {
        let next = self.next_soc(case, i, prev);
        add_expr_row(lp, &next, Relation::Ge, &lo.expr());
        add_expr_row(lp, &next, Relation::Le, &hi.expr());
    }

    /// Adds a column for the stored energy after this block, bounded by the
    /// unit's energy limits.
    pub(crate) fn add_next_soc_var(&self, lp: &mut LinearProgram, case: &Case, i: usize, prev: Level) -> VarId {
        let ess = &case.esses[i];
        let e = lp.add_var(ess.e_min, ess.e_max, 0.0);
        add_expr_row(lp, &LinExpr::var(e), Relation::Eq, &self.next_soc(case, i, prev));
        e
    }

    pub(crate) fn cost_terms(&self, case: &Case) -> Vec<(VarId, f64)> {
        let mut terms = Vec::new();
        for (g, c) in self.gens.iter().zip(&case.costs.gens) {
            terms.push((*g, c * case.tau));
        }
        for (i, c) in case.costs.esses.iter().enumerate() {
            terms.push((self.discharge[i], c * case.tau));
            terms.push((self.charge[i], c * case.tau));
        }
        terms
    }

    pub(crate) fn set_cost_objective(&self, lp: &mut LinearProgram, case: &Case) {
        for (v, c) in self.cost_terms(case) {
            lp.set_objective(v, lp.objective()[v.index()] + c);
        }
    }

    pub fn extract(&self, x: &[f64]) -> Dispatch {
        let pick = |vs: &[VarId]| vs.iter().map(|v| x[v.index()]).collect::<Vec<_>>();
        Dispatch {
            aggregate: x[self.aggregate.index()],
            gens: pick(&self.gens),
            loads: pick(&self.loads),
            discharge: pick(&self.discharge),
            charge: pick(&self.charge),
            flows: pick(&self.flows),
        }
    }
}

/// Appends one copy of period `t`'s operating constraints (0-based `t`) whose
/// reference-node import is the existing column `aggregate`.
pub(crate) fn add_period_block(lp: &mut LinearProgram, case: &Case, t: usize, aggregate: VarId, mixing: bool) -> DispatchBlock {
    let gens: Vec<VarId> = case.gens.iter().map(|g| lp.add_var(g.min[t], g.max[t], 0.0)).collect();
    let loads: Vec<VarId> = case.loads.iter().map(|l| lp.add_var(l.min[t], l.max[t], 0.0)).collect();
    let discharge: Vec<VarId> = case.esses.iter().map(|e| lp.add_var(0.0, e.p_dis_max, 0.0)).collect();
    let charge: Vec<VarId> = case.esses.iter().map(|e| lp.add_var(0.0, e.p_chg_max, 0.0)).collect();
    let mut mixing_rows = Vec::new();
    if mixing {
        for (i, e) in case.esses.iter().enumerate() {
            mixing_rows.push(lp.add_row(
                &[(discharge[i], 1.0 / e.p_dis_max), (charge[i], 1.0 / e.p_chg_max)],
                Relation::Le,
                1.0,
            ));
        }
    }
    let reference = case.reference_index();
    let angles: Vec<Option<VarId>> =
        (0..case.nodes.len()).map(|k| (k != reference && !case.lines.is_empty()).then(|| lp.free_var())).collect();
    let mut flows = Vec::with_capacity(case.lines.len());
    for line in &case.lines {
        let f = lp.add_var(-line.limit, line.limit, 0.0);
        let from = case.node_index(line.from).expect("validated");
        let to = case.node_index(line.to).expect("validated");
        let mut terms = vec![(f, 1.0)];
        if let Some(a) = angles[from] {
            terms.push((a, -line.susceptance));
        }
        if let Some(a) = angles[to] {
            terms.push((a, line.susceptance));
        }
        lp.add_row(&terms, Relation::Eq, 0.0);
        flows.push(f);
    }
    for (k, &node) in case.nodes.iter().enumerate() {
        let mut terms = Vec::new();
        for (g, v) in case.gens.iter().zip(&gens) {
            if g.node == node {
                terms.push((*v, 1.0));
            }
        }
        for (l, v) in case.loads.iter().zip(&loads) {
            if l.node == node {
                terms.push((*v, -1.0));
            }
        }
        for (i, e) in case.esses.iter().enumerate() {
            if e.node == node {
                terms.push((discharge[i], 1.0));
                terms.push((charge[i], -1.0));
            }
        }
        for (line, f) in case.lines.iter().zip(&flows) {
            if line.from == node {
                terms.push((*f, -1.0));
            }
            if line.to == node {
                terms.push((*f, 1.0));
            }
        }
        if k == reference {
            terms.push((aggregate, 1.0));
        }
        lp.add_row(&terms, Relation::Eq, 0.0);
    }
    DispatchBlock { aggregate, gens, loads, discharge, charge, angles, flows, mixing_rows }
}

/// The operating constraints of a single period as a stand-alone program.
#[derive(Clone, Debug)]
pub struct PeriodPolyhedron {
    pub lp: LinearProgram,
    pub block: DispatchBlock,
    pub period: usize,
    /// Columns for the stored energy after the period, when a previous state
    /// has been attached.
    pub next_soc: Vec<VarId>,
}

/// Builds the operating constraints of period `t` (1-based).
pub fn build_period_polyhedron(case: &Case, t: usize) -> Result<PeriodPolyhedron> {
    build_with(case, t, true)
}

fn build_with(case: &Case, t: usize, mixing: bool) -> Result<PeriodPolyhedron> {
    case.validate()?;
    if t == 0 || t > case.periods {
        return Err(Error::Precondition(format!("period {t} outside 1..={}", case.periods)));
    }
    let mut lp = LinearProgram::new(Sense::Maximize);
    let aggregate = lp.free_var();
    let block = add_period_block(&mut lp, case, t - 1, aggregate, mixing);
    Ok(PeriodPolyhedron { lp, block, period: t, next_soc: Vec::new() })
}

impl PeriodPolyhedron {
    /// Attaches storage dynamics from the given previous energy levels, with
    /// the next levels held within the units' energy limits.
    pub fn with_soc_step(mut self, case: &Case, e_prev: &[f64]) -> Result<Self> {
        if e_prev.len() != case.esses.len() {
            return Err(Error::Precondition(format!("{} energy levels for {} storage units", e_prev.len(), case.esses.len())));
        }
        self.next_soc =
            (0..case.esses.len()).map(|i| self.block.add_next_soc_var(&mut self.lp, case, i, Level::Const(e_prev[i]))).collect();
        Ok(self)
    }

    /// Same constraints without the charge/discharge mixing rows.
    pub fn without_mixing_rows(&self, case: &Case) -> Result<Self> {
        let fresh = build_with(case, self.period, false)?;
        if self.next_soc.is_empty() {
            return Ok(fresh);
        }
        Err(Error::Precondition("drop mixing rows before attaching storage dynamics".into()))
    }

    /// Interval of aggregate power values the polyhedron admits.
    pub fn project_aggregate(&self) -> Result<(f64, f64)> {
        project(&self.lp, self.block.aggregate)
    }
}

fn project(base: &LinearProgram, v: VarId) -> Result<(f64, f64)> {
    let mut ends = [0.0; 2];
    for (k, sense) in [Sense::Minimize, Sense::Maximize].into_iter().enumerate() {
        let mut prog = base.clone();
        prog.clear_objective();
        prog.set_sense(sense);
        prog.set_objective(v, 1.0);
        let out = lp::solve(&prog)?;
        match out.status {
            LpStatus::Optimal => ends[k] = out.objective,
            LpStatus::Infeasible => return Err(Error::Infeasible("period constraints admit no point".into())),
            LpStatus::Unbounded => return Err(Error::Invariant("aggregate power unbounded".into())),
        }
    }
    Ok((ends[0], ends[1]))
}

/// Hull of the aggregate power range of period `t` (1-based) from energy
/// levels `e_prev` when no unit may charge and discharge at once. Solved by
/// trying every charge/discharge regime. Returns `None` if no regime is
/// feasible.
pub fn exact_aggregate_range(case: &Case, t: usize, e_prev: &[f64]) -> Result<Option<(f64, f64)>> {
    let n = case.esses.len();
    if n > 16 {
        return Err(Error::SizeCap { what: "storage regimes".into(), size: 1u128 << n, cap: 1 << 16 });
    }
    let base = build_with(case, t, false)?.with_soc_step(case, e_prev)?;
    let mut hull: Option<(f64, f64)> = None;
    for regime in 0u32..(1 << n) {
        let mut poly = base.clone();
        for i in 0..n {
            let v = if regime >> i & 1 == 1 { poly.block.charge[i] } else { poly.block.discharge[i] };
            poly.lp.set_bounds(v, 0.0, 0.0);
        }
        match poly.project_aggregate() {
            Ok((lo, hi)) => hull = Some(hull.map_or((lo, hi), |(a, b)| (a.min(lo), b.max(hi)))),
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(hull)
}
