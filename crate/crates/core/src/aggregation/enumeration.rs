//! Exact multistage model over the binary scenario tree of band extremes.

use std::time::Instant;

use flexagg_lp::{LinearProgram, VarId};

use super::{finish, master, solve_master, AggregationResult, Certificate, Limits, ModelKind, ScenarioSolution, SolveStats};
use crate::error::Result;
use crate::model::Case;
use crate::polyhedron::{add_period_block, DispatchBlock, Level};
use crate::scenario::ScenarioTree;

/// Appends a scenario tree covering periods `first..first + tree.depth()`
/// (0-based) whose root state is `root`. `aggregate(t, upper)` supplies the
/// band column for period `t`. Returns each node's block and storage columns.
pub(crate) fn add_tree(
    lp: &mut LinearProgram,
    case: &Case,
    tree: &ScenarioTree,
    first: usize,
    root: &[Level],
    aggregate: impl Fn(usize, bool) -> VarId,
) -> Vec<(DispatchBlock, Vec<VarId>)> {
    let mut out: Vec<(DispatchBlock, Vec<VarId>)> = Vec::with_capacity(tree.num_blocks());
    for node in tree.nodes() {
        let t = first + node.depth - 1;
        let block = add_period_block(lp, case, t, aggregate(t, node.takes_upper()), true);
        let prev: Vec<Level> = match node.parent() {
            None => root.to_vec(),
            Some(p) => out[p.index()].1.iter().map(|&v| Level::Var(v)).collect(),
        };
        let soc = (0..case.esses.len()).map(|i| block.add_next_soc_var(lp, case, i, prev[i])).collect();
        out.push((block, soc));
    }
    out
}

pub fn solve_enumeration(case: &Case) -> Result<AggregationResult> {
    solve_enumeration_with(case, &Limits::default())
}

pub fn solve_enumeration_with(case: &Case, limits: &Limits) -> Result<AggregationResult> {
    let started = Instant::now();
    let (mut lp, band) = master(case)?;
    let tree = ScenarioTree::new(case.periods, limits.max_leaves)?;
    let root: Vec<Level> = case.esses.iter().map(|e| Level::Const(e.e0)).collect();
    let nodes = add_tree(&mut lp, case, &tree, 0, &root, |t, u| band.side(t, u));
    let mut stats = SolveStats { rounds: 1, ..Default::default() };
    let out = solve_master(&lp, case, &mut stats)?;
    let soc = nodes.iter().map(|(_, s)| s.iter().map(|v| out.x[v.index()]).collect()).collect();
    let cert = Certificate::ScenarioTree(ScenarioSolution { depth: case.periods, soc });
    finish(case, ModelKind::Enumeration, band.read(&out.x), cert, stats, started)
}
