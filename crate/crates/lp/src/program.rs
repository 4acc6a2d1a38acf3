use std::fmt::Write as _;

use crate::LpError;

/// Optimization direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Row relation `a·x (rel) rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// Handle to a column of a [`LinearProgram`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub name: Option<String>,
}

/// A linear program with bounded columns and sparse rows.
///
/// Columns are added with [`LinearProgram::add_var`], rows with
/// [`LinearProgram::add_row`]. Duplicate column entries inside a row are
/// merged when the row is added.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    sense: Sense,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: Vec<f64>,
    names: Vec<Option<String>>,
    rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            lower: Vec::new(),
            upper: Vec::new(),
            objective: Vec::new(),
            names: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, objective: f64) -> VarId {
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(objective);
        self.names.push(None);
        VarId(self.objective.len() - 1)
    }

    pub fn add_named_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, objective: f64) -> VarId {
        let v = self.add_var(lower, upper, objective);
        self.names[v.0] = Some(name.into());
        v
    }

    /// A column fixed at `value`.
    pub fn add_fixed(&mut self, value: f64) -> VarId {
        self.add_var(value, value, 0.0)
    }

    pub fn free_var(&mut self) -> VarId {
        self.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0)
    }

    pub fn add_row(&mut self, terms: &[(VarId, f64)], relation: Relation, rhs: f64) -> usize {
        self.push_row(terms, relation, rhs, None)
    }

    pub fn add_named_row(&mut self, name: impl Into<String>, terms: &[(VarId, f64)], relation: Relation, rhs: f64) -> usize {
        self.push_row(terms, relation, rhs, Some(name.into()))
    }

    fn push_row(&mut self, terms: &[(VarId, f64)], relation: Relation, rhs: f64, name: Option<String>) -> usize {
        let mut coeffs: Vec<(usize, f64)> = terms.iter().map(|&(v, a)| (v.0, a)).collect();
        coeffs.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for (j, a) in coeffs {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Row { coeffs: merged, relation, rhs, name });
        self.rows.len() - 1
    }

    pub fn set_objective(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] = coeff;
    }

    pub fn clear_objective(&mut self) {
        self.objective.iter_mut().for_each(|c| *c = 0.0);
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.lower[var.0] = lower;
        self.upper[var.0] = upper;
    }

    pub fn set_sense(&mut self, sense: Sense) {
        self.sense = sense;
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn var_name(&self, j: usize) -> String {
        match &self.names[j] {
            Some(n) => n.clone(),
            None => format!("x{j}"),
        }
    }

    /// Checks dimensions and rejects NaN data.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.names.len() != n {
            return Err(LpError::DimensionMismatch(format!(
                "{} objective entries, {} lower bounds, {} upper bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || !self.objective[j].is_finite() {
                return Err(LpError::InvalidData(format!("column {} has NaN data", self.var_name(j))));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::InvalidData(format!("column {} has an empty infinite bound", self.var_name(j))));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::InvalidData(format!("row {i} has non-finite right-hand side")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::DimensionMismatch(format!("row {i} references column {j} of {n}")));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidData(format!("row {i} has non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    pub fn row_activity(&self, row: &Row, x: &[f64]) -> f64 {
        row.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest absolute violation of any row or column bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.rows {
            let act = self.row_activity(row, x);
            let v = match row.relation {
                Relation::Le => act - row.rhs,
                Relation::Ge => row.rhs - act,
                Relation::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Writes the program in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ written by flexagg-lp");
        let _ = writeln!(
            out,
            "{}",
            match self.sense {
                Sense::Minimize => "Minimize",
                Sense::Maximize => "Maximize",
            }
        );
        let obj_terms: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (j, *c))
            .collect();
        let _ = writeln!(out, " obj: {}", self.linear_expr(&obj_terms));
        let _ = writeln!(out, "Subject To");
        for (i, row) in self.rows.iter().enumerate() {
            let op = match row.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let name = row.name.clone().unwrap_or_else(|| format!("r{i}"));
            let _ = writeln!(out, " {}: {} {} {}", sanitize(&name), self.linear_expr(&row.coeffs), op, fmt_num(row.rhs));
        }
        let _ = writeln!(out, "Bounds");
        for j in 0..self.num_vars() {
            let name = sanitize(&self.var_name(j));
            let (l, u) = (self.lower[j], self.upper[j]);
            if l == f64::NEG_INFINITY && u == f64::INFINITY {
                let _ = writeln!(out, " {name} free");
            } else if l == u {
                let _ = writeln!(out, " {name} = {}", fmt_num(l));
            } else {
                let lo = if l == f64::NEG_INFINITY { "-inf".to_string() } else { fmt_num(l) };
                let hi = if u == f64::INFINITY { "+inf".to_string() } else { fmt_num(u) };
                let _ = writeln!(out, " {lo} <= {name} <= {hi}");
            }
        }
        let _ = writeln!(out, "End");
        out
    }

    fn linear_expr(&self, terms: &[(usize, f64)]) -> String {
        if terms.is_empty() {
            return "0 x0".to_string();
        }
        let mut s = String::new();
        for (k, &(j, a)) in terms.iter().enumerate() {
            let name = sanitize(&self.var_name(j));
            if k == 0 {
                let _ = write!(s, "{} {}", fmt_num(a), name);
            } else if a < 0.0 {
                let _ = write!(s, " - {} {}", fmt_num(-a), name);
            } else {
                let _ = write!(s, " + {} {}", fmt_num(a), name);
            }
        }
        s
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:.12}").trim_end_matches('0').trim_end_matches('.').to_string()
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_terms_are_merged() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(0.0, 1.0, 1.0);
        let y = lp.add_var(0.0, 1.0, 1.0);
        lp.add_row(&[(x, 1.0), (y, 2.0), (x, 0.5), (y, -2.0)], Relation::Le, 3.0);
        assert_eq!(lp.rows()[0].coeffs, vec![(0, 1.5)]);
    }

    #[test]
    fn out_of_range_column_is_a_dimension_error() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(0.0, 1.0, 1.0);
        lp.add_row(&[(x, 1.0), (VarId(7), 1.0)], Relation::Le, 1.0);
        assert!(matches!(lp.validate(), Err(LpError::DimensionMismatch(_))));
    }

    #[test]
    fn nan_coefficient_rejected() {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let x = lp.add_var(0.0, 1.0, 1.0);
        lp.add_row(&[(x, f64::NAN)], Relation::Le, 1.0);
        assert!(matches!(lp.validate(), Err(LpError::InvalidData(_))));
    }

    #[test]
    fn lp_format_contains_sections() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_named_var("p[1]", 0.0, 1.0, 1.0);
        let y = lp.free_var();
        lp.add_named_row("cap", &[(x, 1.0), (y, -1.0)], Relation::Le, 2.0);
        let text = lp.to_lp_format();
        assert!(text.contains("Maximize"));
        assert!(text.contains(" cap: 1 p_1_ - 1 x1 <= 2"));
        assert!(text.contains(" x1 free"));
        assert!(text.trim_end().ends_with("End"));
    }
}
