//! Rectangular storage-box model and its one-unit special case.

use std::collections::BTreeSet;
use std::time::Instant;

use flexagg_lp::{self as lp, LinearProgram, Relation, Sense, VarId};

use super::{finish, master, solve_master, AggregationResult, BandColumns, Certificate, FlexBand, Limits, Mode, ModelKind, SocBox, SolveStats};
use crate::error::{Error, Result};
use crate::model::Case;
use crate::polyhedron::{add_period_block, Level};
use crate::scenario::{enumerate_soc_corners, VertexPattern};

struct BoxColumns {
    lo: Vec<Vec<VarId>>,
    hi: Vec<Vec<VarId>>,
}

fn build(case: &Case, corners: &BTreeSet<VertexPattern>) -> Result<(LinearProgram, BandColumns, BoxColumns)> {
    let (mut lp, band) = master(case)?;
    let mut cols = BoxColumns { lo: Vec::new(), hi: Vec::new() };
    for (i, ess) in case.esses.iter().enumerate() {
        let mut lo = Vec::with_capacity(case.periods + 1);
        let mut hi = Vec::with_capacity(case.periods + 1);
        for t in 0..=case.periods {
            let (l_up, h_lo) = if t == 0 { (ess.e0, ess.e0) } else { (ess.e_max, ess.e_min) };
            let l = lp.add_named_var(format!("box_lo_{i}_{t}"), ess.e_min, l_up, 0.0);
            let h = lp.add_named_var(format!("box_hi_{i}_{t}"), h_lo, ess.e_max, 0.0);
            lp.add_row(&[(l, 1.0), (h, -1.0)], Relation::Le, 0.0);
            lo.push(l);
            hi.push(h);
        }
        cols.lo.push(lo);
        cols.hi.push(hi);
    }
    for t in 0..case.periods {
        for corner in corners {
            for upper in [false, true] {
                let block = add_period_block(&mut lp, case, t, band.side(t, upper), true);
                for i in 0..case.esses.len() {
                    let prev = if corner.0[i] { cols.hi[i][t] } else { cols.lo[i][t] };
                    block.bound_next_soc(
                        &mut lp,
                        case,
                        i,
                        Level::Var(prev),
                        Level::Var(cols.lo[i][t + 1]),
                        Level::Var(cols.hi[i][t + 1]),
                    );
                }
            }
        }
    }
    Ok((lp, band, cols))
}

fn read_box(case: &Case, cols: &BoxColumns, x: &[f64]) -> SocBox {
    let mut b = SocBox { lo: Vec::new(), hi: Vec::new() };
    for (i, ess) in case.esses.iter().enumerate() {
        let lo: Vec<f64> = cols.lo[i].iter().map(|v| x[v.index()].clamp(ess.e_min, ess.e_max)).collect();
        let hi: Vec<f64> = cols.hi[i].iter().zip(&lo).map(|(v, l)| x[v.index()].clamp(*l, ess.e_max)).collect();
        b.lo.push(lo);
        b.hi.push(hi);
    }
    b
}

/// Whether, starting from the box corner `corner` at the end of period `t`
/// (0-based, so the corner sits at box index `t`), both band extremes of
/// period `t + 1` can be served while landing inside the next box.
pub fn corner_recourse_feasible(case: &Case, band: &FlexBand, soc_box: &SocBox, t: usize, corner: &VertexPattern) -> Result<bool> {
    for upper in [false, true] {
        let mut prog = LinearProgram::new(Sense::Minimize);
        let agg = prog.add_fixed(if upper { band.upper[t] } else { band.lower[t] });
        let block = add_period_block(&mut prog, case, t, agg, true);
        for i in 0..case.esses.len() {
            let prev = if corner.0[i] { soc_box.hi[i][t] } else { soc_box.lo[i][t] };
            block.bound_next_soc(
                &mut prog,
                case,
                i,
                Level::Const(prev),
                Level::Const(soc_box.lo[i][t + 1]),
                Level::Const(soc_box.hi[i][t + 1]),
            );
        }
        if !lp::check_feasible(&prog)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn solve_rectangular(case: &Case, mode: Mode) -> Result<AggregationResult> {
    solve_rectangular_with(case, mode, &Limits::default())
}

pub fn solve_rectangular_with(case: &Case, mode: Mode, limits: &Limits) -> Result<AggregationResult> {
    let started = Instant::now();
    case.validate()?;
    let n = case.esses.len();
    let all = enumerate_soc_corners(n, limits.max_ess_corners)?;
    let mut active: BTreeSet<VertexPattern> = match mode {
        Mode::Full => all.iter().cloned().collect(),
        Mode::Lazy => [VertexPattern::uniform(n, false), VertexPattern::uniform(n, true)].into_iter().collect(),
    };
    let initial = active.len();
    let mut stats = SolveStats::default();
    loop {
        stats.rounds += 1;
        let (lp, band_cols, box_cols) = build(case, &active)?;
        let out = solve_master(&lp, case, &mut stats)?;
        let band = band_cols.read(&out.x);
        let soc_box = read_box(case, &box_cols, &out.x);
        let mut added = 0;
        if mode == Mode::Lazy {
            for corner in &all {
                if active.contains(corner) {
                    continue;
                }
                for t in 0..case.periods {
                    stats.lp_solves += 1;
                    if !corner_recourse_feasible(case, &band, &soc_box, t, corner)? {
                        active.insert(corner.clone());
                        added += 1;
                        break;
                    }
                }
            }
        }
        if added == 0 {
            stats.added_cuts = active.len() - initial;
            return finish(case, ModelKind::Rectangular, band, Certificate::SocBox(soc_box), stats, started);
        }
        if stats.rounds >= all.len().max(1) {
            return Err(Error::Invariant(format!("lazy corner generation exceeded {} rounds", all.len())));
        }
    }
}

/// Box model for exactly one storage unit: four recourse copies per period.
pub fn solve_single_ess(case: &Case) -> Result<AggregationResult> {
    let started = Instant::now();
    case.validate()?;
    if case.esses.len() != 1 {
        return Err(Error::Precondition(format!("single-ess model needs exactly one storage unit, case has {}", case.esses.len())));
    }
    let corners: BTreeSet<VertexPattern> = [VertexPattern(vec![false]), VertexPattern(vec![true])].into_iter().collect();
    let mut stats = SolveStats { rounds: 1, ..Default::default() };
    let (lp, band_cols, box_cols) = build(case, &corners)?;
    let out = solve_master(&lp, case, &mut stats)?;
    let soc_box = read_box(case, &box_cols, &out.x);
    finish(case, ModelKind::SingleEss, band_cols.read(&out.x), Certificate::SocBox(soc_box), stats, started)
}
