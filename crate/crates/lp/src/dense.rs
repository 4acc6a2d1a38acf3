//! Dense bounded-variable revised simplex.
//!
//! Every row `a·x (rel) b` becomes `a·x - s = 0` with the logical column `s`
//! carrying the row bounds, so the initial basis is made of logicals (plus
//! artificials for rows the starting point violates). The basis inverse is
//! kept explicitly and refreshed from scratch every [`REFACTOR_EVERY`] pivots.
//!
//! Pricing is Dantzig's rule with lowest-index tie breaking. After a run of
//! degenerate pivots the solver falls back to Bland's rule until it makes
//! progress again, which rules out cycling.

use crate::{LinearProgram, LpBackend, LpError, LpOutcome, LpStatus, Relation, Sense};

const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN: usize = 50;
const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;

/// In-house solver, used for small programs and as a cross-check.
#[derive(Clone, Copy, Debug, Default)]
pub struct DenseSimplex;

impl LpBackend for DenseSimplex {
    fn solve(&self, lp: &LinearProgram) -> Result<LpOutcome, LpError> {
        lp.validate()?;
        let mut t = Tableau::new(lp);
        t.solve(lp, true)
    }

    fn check_feasible(&self, lp: &LinearProgram) -> Result<bool, LpError> {
        lp.validate()?;
        let mut t = Tableau::new(lp);
        let out = t.solve(lp, false)?;
        Ok(out.status == LpStatus::Optimal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column, sitting at its current value.
    Free,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    n_struct: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    head: Vec<usize>,
    binv: Vec<f64>,
    first_artificial: usize,
    iterations: usize,
    since_refactor: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in lp.rows().iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((i, a));
            }
        }
        let mut lower = lp.lower().to_vec();
        let mut upper = lp.upper().to_vec();
        for (i, row) in lp.rows().iter().enumerate() {
            cols.push(vec![(i, -1.0)]);
            let (l, u) = match row.relation {
                Relation::Le => (f64::NEG_INFINITY, row.rhs),
                Relation::Ge => (row.rhs, f64::INFINITY),
                Relation::Eq => (row.rhs, row.rhs),
            };
            lower.push(l);
            upper.push(u);
        }
        let mut x = vec![0.0; n + m];
        let mut state = vec![State::AtLower; n + m];
        for j in 0..n {
            let (l, u) = (lower[j], upper[j]);
            if l.is_finite() {
                x[j] = l;
                state[j] = State::AtLower;
            } else if u.is_finite() {
                x[j] = u;
                state[j] = State::AtUpper;
            } else {
                x[j] = 0.0;
                state[j] = State::Free;
            }
        }
        let mut activity = vec![0.0; m];
        for j in 0..n {
            if x[j] != 0.0 {
                for &(i, a) in &cols[j] {
                    activity[i] += a * x[j];
                }
            }
        }
        let first_artificial = n + m;
        let mut head = vec![0usize; m];
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            let s = n + i;
            let r = activity[i];
            if r >= lower[s] - PRIMAL_TOL && r <= upper[s] + PRIMAL_TOL {
                x[s] = r;
                state[s] = State::Basic;
                head[i] = s;
                binv[i * m + i] = -1.0;
            } else {
                let beta = if r < lower[s] { lower[s] } else { upper[s] };
                x[s] = beta;
                state[s] = if r < lower[s] { State::AtLower } else { State::AtUpper };
                let sigma = if beta - r > 0.0 { 1.0 } else { -1.0 };
                let a = cols.len();
                cols.push(vec![(i, sigma)]);
                lower.push(0.0);
                upper.push(f64::INFINITY);
                x.push((beta - r).abs());
                state.push(State::Basic);
                head[i] = a;
                binv[i * m + i] = 1.0 / sigma;
            }
        }
        Self {
            m,
            n_struct: n,
            cols,
            lower,
            upper,
            x,
            state,
            head,
            binv,
            first_artificial,
            iterations: 0,
            since_refactor: 0,
        }
    }

    fn has_artificials(&self) -> bool {
        self.cols.len() > self.first_artificial
    }

    fn solve(&mut self, lp: &LinearProgram, optimize: bool) -> Result<LpOutcome, LpError> {
        let total = self.cols.len();
        let max_iter = 50 * (self.m + total) + 10_000;

        if self.has_artificials() {
            let mut c1 = vec![0.0; total];
            for c in c1.iter_mut().skip(self.first_artificial) {
                *c = 1.0;
            }
            match self.run(&c1, max_iter)? {
                PhaseEnd::Optimal => {}
                PhaseEnd::Unbounded => {
                    return Err(LpError::NumericalBreakdown("phase one reported an unbounded ray".into()));
                }
            }
            let infeasibility: f64 = (self.first_artificial..total).map(|j| self.x[j]).sum();
            if infeasibility > PHASE1_TOL {
                let y = self.duals(&c1);
                return Ok(LpOutcome {
                    status: LpStatus::Infeasible,
                    x: Vec::new(),
                    objective: f64::NAN,
                    duals: None,
                    farkas: Some(y),
                    iterations: self.iterations,
                });
            }
            for j in self.first_artificial..total {
                self.upper[j] = 0.0;
                if self.state[j] != State::Basic {
                    self.x[j] = 0.0;
                    self.state[j] = State::AtLower;
                }
            }
            self.drive_out_artificials()?;
            self.refactor()?;
        }

        if !optimize {
            let x: Vec<f64> = self.x[..self.n_struct].to_vec();
            return Ok(LpOutcome {
                status: LpStatus::Optimal,
                objective: 0.0,
                x,
                duals: None,
                farkas: None,
                iterations: self.iterations,
            });
        }

        let flip = match lp.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c = vec![0.0; total];
        for (j, &cj) in lp.objective().iter().enumerate() {
            c[j] = flip * cj;
        }
        match self.run(&c, max_iter)? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => {
                return Ok(LpOutcome {
                    status: LpStatus::Unbounded,
                    x: Vec::new(),
                    objective: f64::NAN,
                    duals: None,
                    farkas: None,
                    iterations: self.iterations,
                })
            }
        }
        self.refactor()?;
        let y: Vec<f64> = self.duals(&c).into_iter().map(|v| flip * v).collect();
        let x: Vec<f64> = self.x[..self.n_struct].to_vec();
        let objective = lp.objective_value(&x);
        Ok(LpOutcome {
            status: LpStatus::Optimal,
            x,
            objective,
            duals: Some(y),
            farkas: None,
            iterations: self.iterations,
        })
    }

    fn duals(&self, c: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for r in 0..m {
            let cb = c[self.head[r]];
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, b) in y.iter_mut().zip(row) {
                    *yi += cb * b;
                }
            }
        }
        y
    }

    fn column_times_binv(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(i, a) in &self.cols[j] {
            for (r, al) in alpha.iter_mut().enumerate() {
                *al += self.binv[r * m + i] * a;
            }
        }
        alpha
    }

    fn run(&mut self, c: &[f64], max_iter: usize) -> Result<PhaseEnd, LpError> {
        let total = self.cols.len();
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= max_iter {
                return Err(LpError::NumericalBreakdown(format!("iteration limit {max_iter} reached")));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let bland = degenerate_run >= DEGENERATE_RUN;
            let y = self.duals(c);

            // pricing
            let mut entering: Option<(usize, f64, f64)> = None; // (col, d_j, direction)
            for j in 0..total {
                let st = self.state[j];
                if st == State::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let dj = c[j] - self.cols[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>();
                let dir = match st {
                    State::AtLower if dj < -OPT_TOL => 1.0,
                    State::AtUpper if dj > OPT_TOL => -1.0,
                    State::Free if dj.abs() > OPT_TOL => -dj.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dj, dir));
                    break;
                }
                match entering {
                    Some((_, best, _)) if dj.abs() <= best.abs() => {}
                    _ => entering = Some((j, dj, dir)),
                }
            }
            let Some((q, _dq, dir)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            let alpha = self.column_times_binv(q);
            let flip_range = self.upper[q] - self.lower[q];
            let leave = if bland { self.ratio_textbook(&alpha, dir) } else { self.ratio_harris(&alpha, dir) };

            let (theta, leaving) = match leave {
                Some((r, th)) if th < flip_range => (th, Some(r)),
                _ if flip_range.is_finite() => (flip_range, None),
                Some((r, th)) => (th, Some(r)),
                None => return Ok(PhaseEnd::Unbounded),
            };

            self.iterations += 1;
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            for r in 0..self.m {
                if alpha[r] != 0.0 {
                    let b = self.head[r];
                    self.x[b] -= theta * dir * alpha[r];
                }
            }
            self.x[q] += theta * dir;

            match leaving {
                None => {
                    self.state[q] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some(r) => {
                    let b = self.head[r];
                    let rate = dir * alpha[r];
                    if rate > 0.0 {
                        self.x[b] = self.lower[b];
                        self.state[b] = State::AtLower;
                    } else {
                        self.x[b] = self.upper[b];
                        self.state[b] = State::AtUpper;
                    }
                    if !self.x[b].is_finite() {
                        self.x[b] = 0.0;
                        self.state[b] = State::Free;
                    }
                    self.state[q] = State::Basic;
                    self.head[r] = q;
                    self.pivot(r, &alpha);
                }
            }
        }
    }

    /// Textbook minimum ratio with lowest column index on ties.
    fn ratio_textbook(&self, alpha: &[f64], dir: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.m {
            if alpha[r].abs() < PIVOT_TOL {
                continue;
            }
            let Some(ratio) = self.limit(r, dir * alpha[r], 0.0) else { continue };
            let ratio = ratio.max(0.0);
            best = match best {
                None => Some((r, ratio)),
                Some((br, bt)) => {
                    if ratio < bt - 1e-12 || (ratio <= bt + 1e-12 && self.head[r] < self.head[br]) {
                        Some((r, ratio))
                    } else {
                        Some((br, bt))
                    }
                }
            };
        }
        best
    }

    /// Harris two-pass ratio test: largest pivot among the near-minimal ratios.
    fn ratio_harris(&self, alpha: &[f64], dir: f64) -> Option<(usize, f64)> {
        let mut bound = f64::INFINITY;
        for r in 0..self.m {
            if alpha[r].abs() < PIVOT_TOL {
                continue;
            }
            if let Some(ratio) = self.limit(r, dir * alpha[r], PRIMAL_TOL) {
                bound = bound.min(ratio);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for r in 0..self.m {
            if alpha[r].abs() < PIVOT_TOL {
                continue;
            }
            let Some(ratio) = self.limit(r, dir * alpha[r], 0.0) else { continue };
            if ratio > bound {
                continue;
            }
            let mag = alpha[r].abs();
            best = match best {
                Some((_, _, bm)) if mag <= bm => best,
                _ => Some((r, ratio.max(0.0), mag)),
            };
        }
        best.map(|(r, t, _)| (r, t))
    }

    /// Step length after which basic position `r` hits a bound, given its rate
    /// of decrease per unit step.
    fn limit(&self, r: usize, rate: f64, slack: f64) -> Option<f64> {
        let b = self.head[r];
        if rate > 0.0 {
            let l = self.lower[b];
            l.is_finite().then(|| (self.x[b] - l + slack) / rate)
        } else {
            let u = self.upper[b];
            u.is_finite().then(|| (u - self.x[b] + slack) / -rate)
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        for (i, row) in before.chunks_mut(m).enumerate() {
            let a = alpha[i];
            if a != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= a * p;
                }
            }
        }
        for (off, row) in after.chunks_mut(m).enumerate() {
            let a = alpha[r + 1 + off];
            if a != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= a * p;
                }
            }
        }
        self.since_refactor += 1;
    }

    /// Rebuilds the basis inverse and recomputes basic values.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return Ok(());
        }
        // augmented [B | I]
        let w = 2 * m;
        let mut a = vec![0.0; m * w];
        for (k, &j) in self.head.iter().enumerate() {
            for &(i, v) in &self.cols[j] {
                a[i * w + k] = v;
            }
        }
        for i in 0..m {
            a[i * w + m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = a[col * w + col].abs();
            for r in col + 1..m {
                let v = a[r * w + col].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = r;
                }
            }
            if piv_val < 1e-11 {
                return Err(LpError::NumericalBreakdown("singular basis during refactorization".into()));
            }
            if piv_row != col {
                for k in 0..w {
                    a.swap(col * w + k, piv_row * w + k);
                }
            }
            let p = a[col * w + col];
            for k in 0..w {
                a[col * w + k] /= p;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r * w + col];
                    if f != 0.0 {
                        for k in col..w {
                            a[r * w + k] -= f * a[col * w + k];
                        }
                    }
                }
            }
        }
        for r in 0..m {
            for k in 0..m {
                self.binv[r * m + k] = a[r * w + m + k];
            }
        }
        let mut rhs = vec![0.0; m];
        for j in 0..self.cols.len() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                for &(i, v) in &self.cols[j] {
                    rhs[i] -= v * self.x[j];
                }
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.x[self.head[r]] = row.iter().zip(&rhs).map(|(b, v)| b * v).sum();
        }
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis where a replacement
    /// column exists; rows with no replacement are redundant and keep their
    /// artificial fixed at zero.
    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        let m = self.m;
        for r in 0..m {
            if self.head[r] < self.first_artificial {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.first_artificial {
                if self.state[j] == State::Basic {
                    continue;
                }
                let v: f64 = self.cols[j].iter().map(|&(i, a)| self.binv[r * m + i] * a).sum();
                if v.abs() > 1e-7 && best.is_none_or(|(_, bv)| v.abs() > bv.abs()) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.column_times_binv(j);
                let a = self.head[r];
                self.state[a] = State::AtLower;
                self.x[a] = 0.0;
                self.state[j] = State::Basic;
                self.head[r] = j;
                self.pivot(r, &alpha);
            }
        }
        Ok(())
    }
}
