//! Models that let the dispatch see the whole trajectory: the exact
//! two-stage model over all trajectory vertex patterns, and its relaxation to
//! the two extreme trajectories.

use std::collections::BTreeSet;
use std::time::Instant;

use flexagg_lp::{self as lp, LinearProgram, Sense};

use super::{add_trajectory_copy, finish, master, solve_master, AggregationResult, Certificate, FlexBand, Limits, Mode, ModelKind, SolveStats};
use crate::error::{Error, Result};
use crate::model::Case;
use crate::scenario::{enumerate_patterns, VertexPattern};

const SCAN_WARNING: usize = 1 << 10;

/// Band that the two extreme trajectories can each follow.
pub fn solve_outer(case: &Case) -> Result<AggregationResult> {
    let started = Instant::now();
    let mut stats = SolveStats { rounds: 1, ..Default::default() };
    let (mut lp, band) = master(case)?;
    for upper in [false, true] {
        add_trajectory_copy(&mut lp, case, |t, u| band.side(t, u), &VertexPattern::uniform(case.periods, upper));
    }
    let out = solve_master(&lp, case, &mut stats)?;
    finish(case, ModelKind::Outer, band.read(&out.x), Certificate::None, stats, started)
}

pub fn solve_two_stage(case: &Case, mode: Mode) -> Result<AggregationResult> {
    solve_two_stage_with(case, mode, &Limits::default())
}

/// Band every vertex trajectory of which can be followed with full knowledge
/// of the trajectory.
pub fn solve_two_stage_with(case: &Case, mode: Mode, limits: &Limits) -> Result<AggregationResult> {
    let started = Instant::now();
    case.validate()?;
    let count: u128 = 1u128 << case.periods.min(127);
    if count > limits.max_leaves as u128 {
        return Err(Error::SizeCap {
            what: format!("trajectory patterns over {} periods", case.periods),
            size: count,
            cap: limits.max_leaves as u128,
        });
    }
    let all = enumerate_patterns(case.periods);
    let mut stats = SolveStats::default();
    let mut active: BTreeSet<VertexPattern> = match mode {
        Mode::Full => all.iter().cloned().collect(),
        Mode::Lazy => {
            if all.len() > SCAN_WARNING {
                log::warn!("two-stage separation scans {} patterns per round", all.len());
            }
            [VertexPattern::uniform(case.periods, false), VertexPattern::uniform(case.periods, true)].into_iter().collect()
        }
    };
    let initial = active.len();
    loop {
        stats.rounds += 1;
        let (mut lp, band) = master(case)?;
        for pattern in &active {
            add_trajectory_copy(&mut lp, case, |t, u| band.side(t, u), pattern);
        }
        let out = solve_master(&lp, case, &mut stats)?;
        let current = band.read(&out.x);
        if mode == Mode::Full {
            return finish(case, ModelKind::TwoStage, current, Certificate::None, stats, started);
        }
        let mut added = 0;
        for pattern in &all {
            if active.contains(pattern) {
                continue;
            }
            stats.lp_solves += 1;
            if !trajectory_feasible(case, &current, pattern)? {
                active.insert(pattern.clone());
                added += 1;
            }
        }
        if added == 0 {
            stats.added_cuts = active.len() - initial;
            return finish(case, ModelKind::TwoStage, current, Certificate::None, stats, started);
        }
        if stats.rounds > all.len() {
            return Err(Error::Invariant("two-stage pattern generation did not terminate".into()));
        }
    }
}

/// Whether the fixed trajectory given by `pattern` over `band` has a
/// full-horizon dispatch.
pub(crate) fn trajectory_feasible(case: &Case, band: &FlexBand, pattern: &VertexPattern) -> Result<bool> {
    let mut prog = LinearProgram::new(Sense::Minimize);
    let fixed: Vec<[flexagg_lp::VarId; 2]> =
        (0..case.periods).map(|t| [prog.add_fixed(band.lower[t]), prog.add_fixed(band.upper[t])]).collect();
    add_trajectory_copy(&mut prog, case, |t, u| fixed[t][u as usize], pattern);
    Ok(lp::check_feasible(&prog)?)
}
