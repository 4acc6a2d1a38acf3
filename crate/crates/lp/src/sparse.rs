use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::{LinearProgram, LpBackend, LpError, LpOutcome, LpStatus, Relation, Sense};

/// Backend built on the `microlp` sparse simplex. Provides no multipliers.
#[derive(Clone, Copy, Debug, Default)]
pub struct SparseBackend;

impl LpBackend for SparseBackend {
    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        lp.validate()?;
        let dir = match lp.sense() {
            Sense::Minimize => OptimizationDirection::Minimize,
            Sense::Maximize => OptimizationDirection::Maximize,
        };
        let mut problem = Problem::new(dir);
        let vars: Vec<_> = (0..lp.num_vars())
            .map(|j| problem.add_var(lp.objective()[j], (lp.lower()[j], lp.upper()[j])))
            .collect();
        for row in lp.rows() {
            let terms: Vec<_> = row.coeffs.iter().map(|&(j, a)| (vars[j], a)).collect();
            let op = match row.relation {
                Relation::Le => ComparisonOp::Le,
                Relation::Eq => ComparisonOp::Eq,
                Relation::Ge => ComparisonOp::Ge,
            };
            problem.add_constraint(terms.as_slice(), op, row.rhs);
        }
        let blank = |status| LpOutcome {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            duals: None,
            farkas: None,
            iterations: 0,
        };
        match problem.solve() {
            Ok(outcome) => {
                let sol = outcome
                    .into_solution()
                    .map_err(|_| LpError::NumericalBreakdown("sparse solve interrupted".into()))?;
                let x: Vec<f64> = vars.iter().map(|v| sol.var_value(*v)).collect();
                Ok(LpOutcome {
                    status: LpStatus::Optimal,
                    objective: lp.objective_value(&x),
                    x,
                    duals: None,
                    farkas: None,
                    iterations: 0,
                })
            }
            Err(microlp::Error::Infeasible) => Ok(blank(LpStatus::Infeasible)),
            Err(microlp::Error::Unbounded) => Ok(blank(LpStatus::Unbounded)),
            Err(e) => Err(LpError::NumericalBreakdown(e.to_string())),
        }
    }
}
