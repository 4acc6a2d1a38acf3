//! Linear programs and the solvers behind the aggregation models.
//!
//! [`solve`] picks a backend by size, checks the returned point against the
//! rows, and retries on the other backend if the check fails.

mod dense;
pub mod program;
mod sparse;

pub use dense::DenseSimplex;
pub use program::{LinearProgram, Relation, Row, Sense, VarId};
pub use sparse::SparseBackend;

/// Residual tolerance a returned optimum must satisfy.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Programs with at most this many rows go to the dense solver first.
pub const DENSE_ROW_LIMIT: usize = 250;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Primal point; empty unless optimal.
    pub x: Vec<f64>,
    /// Objective in the program's own sense; NaN unless optimal.
    pub objective: f64,
    /// Row multipliers, when the backend provides them.
    pub duals: Option<Vec<f64>>,
    /// Row multipliers proving infeasibility, when available.
    pub farkas: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub trait LpBackend {
    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError>;

    /// Whether any point satisfies all rows and bounds.
    fn check_feasible(&self, lp: &LinearProgram) -> Result<bool, LpError> {
        let mut probe = lp.clone();
        probe.clear_objective();
        Ok(self.solve(&probe)?.is_optimal())
    }
}

fn order(lp: &LinearProgram) -> [&'static dyn LpBackend; 2] {
    if lp.num_rows() <= DENSE_ROW_LIMIT {
        [&DenseSimplex, &SparseBackend]
    } else {
        [&SparseBackend, &DenseSimplex]
    }
}

/// Solves with the size-appropriate backend, falling back to the other one if
/// the first fails or returns a point that violates the rows.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let mut last_err = None;
    for backend in order(lp) {
        match backend.solve(lp) {
            Ok(out) if out.is_optimal() => {
                let viol = lp.max_violation(&out.x);
                if viol <= FEASIBILITY_TOL {
                    return Ok(out);
                }
                log::debug!("discarding optimum with residual {viol:e}");
                last_err = Some(LpError::NumericalBreakdown(format!("residual {viol:e} above tolerance")));
            }
            Ok(out) => return Ok(out),
            Err(e @ (LpError::DimensionMismatch(_) | LpError::InvalidData(_))) => return Err(e),
            Err(e) => {
                log::debug!("backend failed: {e}");
                last_err = Some(e);
            }
        }
    }
    Err(last_err.unwrap_or_else(|| LpError::NumericalBreakdown("no backend produced a result".into())))
}

/// Phase-one feasibility check.
pub fn check_feasible(lp: &LinearProgram) -> Result<bool, LpError> {
    lp.validate()?;
    let mut last_err = None;
    for backend in order(lp) {
        match backend.check_feasible(lp) {
            Ok(v) => return Ok(v),
            Err(e @ (LpError::DimensionMismatch(_) | LpError::InvalidData(_))) => return Err(e),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| LpError::NumericalBreakdown("no backend produced a result".into())))
}

fn row_range(row: &Row) -> (f64, f64) {
    match row.relation {
        Relation::Le => (f64::NEG_INFINITY, row.rhs),
        Relation::Ge => (row.rhs, f64::INFINITY),
        Relation::Eq => (row.rhs, row.rhs),
    }
}

/// `sup` (if `maximize`) or `inf` of `g·v` over `v ∈ [lo, hi]`. Tiny
/// coefficients against infinite bounds count as zero.
fn box_extreme(g: f64, lo: f64, hi: f64, maximize: bool) -> f64 {
    if g.abs() < 1e-12 {
        return 0.0;
    }
    let pick_hi = (g > 0.0) == maximize;
    g * if pick_hi { hi } else { lo }
}

fn column_weights(lp: &LinearProgram, y: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; lp.num_vars()];
    for (row, &yi) in lp.rows().iter().zip(y) {
        for &(j, a) in &row.coeffs {
            g[j] += yi * a;
        }
    }
    g
}

/// Lagrangian bound from row multipliers `y`: a lower bound on the minimum or
/// an upper bound on the maximum. `None` when the bound is infinite.
pub fn dual_objective(lp: &LinearProgram, y: &[f64]) -> Option<f64> {
    let maximize = lp.sense() == Sense::Maximize;
    let g = column_weights(lp, y);
    let mut total = 0.0;
    for j in 0..lp.num_vars() {
        total += box_extreme(lp.objective()[j] - g[j], lp.lower()[j], lp.upper()[j], maximize);
    }
    for (row, &yi) in lp.rows().iter().zip(y) {
        let (lo, hi) = row_range(row);
        total += box_extreme(yi, lo, hi, maximize);
    }
    total.is_finite().then_some(total)
}

/// Checks that `y` proves the rows and bounds have no common point: the
/// combination `y·(A x - s)` stays strictly away from zero over the boxes.
pub fn verify_farkas(lp: &LinearProgram, y: &[f64]) -> bool {
    let g = column_weights(lp, y);
    let mut sup = 0.0;
    let mut inf = 0.0;
    for j in 0..lp.num_vars() {
        sup += box_extreme(g[j], lp.lower()[j], lp.upper()[j], true);
        inf += box_extreme(g[j], lp.lower()[j], lp.upper()[j], false);
    }
    for (row, &yi) in lp.rows().iter().zip(y) {
        let (lo, hi) = row_range(row);
        sup += box_extreme(-yi, lo, hi, true);
        inf += box_extreme(-yi, lo, hi, false);
    }
    sup < -1e-9 || inf > 1e-9
}
