//! Envelope model: per-period storage envelopes shared by both band extremes.
//!
//! Envelopes are carried as energy deltas `[d_lo, d_hi]` rather than powers,
//! which keeps the program linear for lossy units; the reported power
//! envelopes are their images under the inverse energy map. The lower delta
//! drives the upper energy trajectory and vice versa.

use std::time::Instant;

use flexagg_lp::{LinearProgram, Relation, VarId};

use super::{finish, master, solve_master, AggregationResult, BandColumns, Certificate, Envelopes, ModelKind, SolveStats};
use crate::error::{Error, Result};
use crate::model::{ess_energy_delta_inv, Case};
use crate::polyhedron::{add_expr_row, add_period_block, LinExpr};

struct EnvelopeColumns {
    d_lo: Vec<Vec<VarId>>,
    d_hi: Vec<Vec<VarId>>,
}

fn build(case: &Case) -> Result<(LinearProgram, BandColumns, EnvelopeColumns)> {
    let (mut lp, band) = master(case)?;
    let n = case.esses.len();
    let mut cols = EnvelopeColumns { d_lo: vec![Vec::new(); n], d_hi: vec![Vec::new(); n] };
    let mut e_hi: Vec<LinExpr> = case.esses.iter().map(|e| LinExpr::constant(e.e0)).collect();
    let mut e_lo = e_hi.clone();
    for t in 0..case.periods {
        for (i, ess) in case.esses.iter().enumerate() {
            let (dmin, dmax) = ess.delta_range(case.tau);
            let lo = lp.add_named_var(format!("d_lo_{i}_{}", t + 1), dmin, dmax, 0.0);
            let hi = lp.add_named_var(format!("d_hi_{i}_{}", t + 1), dmin, dmax, 0.0);
            lp.add_row(&[(lo, 1.0), (hi, -1.0)], Relation::Le, 0.0);
            let up = lp.add_var(ess.e_min, ess.e_max, 0.0);
            let dn = lp.add_var(ess.e_min, ess.e_max, 0.0);
            let next_up = e_hi[i].clone().scaled(ess.kappa).plus(&LinExpr::var(lo), -1.0);
            let next_dn = e_lo[i].clone().scaled(ess.kappa).plus(&LinExpr::var(hi), -1.0);
            add_expr_row(&mut lp, &LinExpr::var(up), Relation::Eq, &next_up);
            add_expr_row(&mut lp, &LinExpr::var(dn), Relation::Eq, &next_dn);
            e_hi[i] = LinExpr::var(up);
            e_lo[i] = LinExpr::var(dn);
            cols.d_lo[i].push(lo);
            cols.d_hi[i].push(hi);
        }
        for upper in [false, true] {
            let block = add_period_block(&mut lp, case, t, band.side(t, upper), true);
            for (i, ess) in case.esses.iter().enumerate() {
                let delta = block.delta(ess, i, case.tau);
                add_expr_row(&mut lp, &delta, Relation::Ge, &LinExpr::var(cols.d_lo[i][t]));
                add_expr_row(&mut lp, &delta, Relation::Le, &LinExpr::var(cols.d_hi[i][t]));
            }
        }
    }
    Ok((lp, band, cols))
}

/// Solves the envelope model, then widens the storage envelopes as far as
/// possible without lowering the flexibility index.
pub fn solve_envelope(case: &Case) -> Result<AggregationResult> {
    let started = Instant::now();
    let mut stats = SolveStats { rounds: 1, ..Default::default() };
    let (lp, band, cols) = build(case)?;
    let first = solve_master(&lp, case, &mut stats)?;
    let published = band.read(&first.x);

    // Widening keeps the stage-1 band fixed, so the index is unchanged.
    let mut widen = lp.clone();
    widen.clear_objective();
    for t in 0..case.periods {
        widen.set_bounds(band.lower[t], published.lower[t], published.lower[t]);
        widen.set_bounds(band.upper[t], published.upper[t], published.upper[t]);
    }
    for i in 0..case.esses.len() {
        for t in 0..case.periods {
            let w = case.weights[t] / case.tau;
            widen.set_objective(cols.d_hi[i][t], w);
            widen.set_objective(cols.d_lo[i][t], -w);
        }
    }
    let x = match solve_master(&widen, case, &mut stats) {
        Ok(out) => out.x,
        Err(e @ (Error::Lp(_) | Error::Infeasible(_))) => {
            log::warn!("envelope widening failed ({e}); keeping unwidened envelopes");
            first.x
        }
        Err(e) => return Err(e),
    };

    let envelopes = read_envelopes(case, &cols, &x);
    finish(case, ModelKind::Envelope, published, Certificate::Envelopes(envelopes), stats, started)
}

fn read_envelopes(case: &Case, cols: &EnvelopeColumns, x: &[f64]) -> Envelopes {
    let n = case.esses.len();
    let mut env = Envelopes {
        p_lo: vec![Vec::new(); n],
        p_hi: vec![Vec::new(); n],
        d_lo: vec![Vec::new(); n],
        d_hi: vec![Vec::new(); n],
        e_lo: vec![Vec::new(); n],
        e_hi: vec![Vec::new(); n],
    };
    for (i, ess) in case.esses.iter().enumerate() {
        let (dmin, dmax) = ess.delta_range(case.tau);
        let (mut lo_e, mut hi_e) = (ess.e0, ess.e0);
        env.e_lo[i].push(lo_e);
        env.e_hi[i].push(hi_e);
        for t in 0..case.periods {
            let d_lo = x[cols.d_lo[i][t].index()].clamp(dmin, dmax);
            let d_hi = x[cols.d_hi[i][t].index()].clamp(d_lo, dmax);
            hi_e = (ess.kappa * hi_e - d_lo).min(ess.e_max);
            lo_e = (ess.kappa * lo_e - d_hi).max(ess.e_min);
            env.d_lo[i].push(d_lo);
            env.d_hi[i].push(d_hi);
            env.p_lo[i].push(ess_energy_delta_inv(d_lo, ess, case.tau));
            env.p_hi[i].push(ess_energy_delta_inv(d_hi, ess, case.tau));
            env.e_lo[i].push(lo_e);
            env.e_hi[i].push(hi_e);
        }
    }
    env
}
