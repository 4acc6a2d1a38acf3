//! Distribution-system data model and storage energy accounting.

use crate::error::{invalid, Result};

/// Node id of the substation; the aggregate power is its import.
pub const REFERENCE_NODE: usize = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
    /// Flow limit in MW, both directions.
    pub limit: f64,
}

/// Load with per-period active power bounds (MW). Equal bounds make it
/// uncontrollable.
#[derive(Clone, Debug, PartialEq)]
pub struct Load {
    pub node: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Dispatchable or fixed generation with per-period bounds (MW).
#[derive(Clone, Debug, PartialEq)]
pub struct Gen {
    pub node: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EssParams {
    pub node: usize,
    /// Retention factor applied to stored energy each period.
    pub kappa: f64,
    pub eta_d: f64,
    pub eta_c: f64,
    pub p_dis_max: f64,
    pub p_chg_max: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub e0: f64,
}

impl EssParams {
    /// Lossless, non-dissipating storage.
    pub fn ideal(node: usize, p_max: f64, e_min: f64, e_max: f64, e0: f64) -> Self {
        Self { node, kappa: 1.0, eta_d: 1.0, eta_c: 1.0, p_dis_max: p_max, p_chg_max: p_max, e_min, e_max, e0 }
    }

    /// Energy removed from storage by discharging `sd` and charging `sc` for
    /// one period.
    pub fn split_delta(&self, sd: f64, sc: f64, tau: f64) -> f64 {
        sd * tau / self.eta_d - sc * tau * self.eta_c
    }

    /// Range of energy deltas reachable in one period.
    pub fn delta_range(&self, tau: f64) -> (f64, f64) {
        (-self.p_chg_max * tau * self.eta_c, self.p_dis_max * tau / self.eta_d)
    }
}

/// Linear operating costs in $/MWh.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Costs {
    /// Generation cost, one per entry of [`Case::gens`].
    pub gens: Vec<f64>,
    /// Throughput cost on charge plus discharge, one per storage unit.
    pub esses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub periods: usize,
    /// Period length in hours.
    pub tau: f64,
    pub nodes: Vec<usize>,
    pub lines: Vec<Line>,
    pub loads: Vec<Load>,
    pub gens: Vec<Gen>,
    pub esses: Vec<EssParams>,
    pub costs: Costs,
    /// Flexibility weight per period.
    pub weights: Vec<f64>,
}

impl Case {
    /// Position of `id` in [`Case::nodes`].
    pub fn node_index(&self, id: usize) -> Option<usize> {
        self.nodes.iter().position(|&n| n == id)
    }

    pub fn reference_index(&self) -> usize {
        self.node_index(REFERENCE_NODE).expect("validated case has a reference node")
    }

    pub fn initial_soc(&self) -> Vec<f64> {
        self.esses.iter().map(|e| e.e0).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let t_len = self.periods;
        if t_len == 0 {
            return Err(invalid("periods", "must be at least 1"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", format!("must be positive, got {}", self.tau)));
        }
        if self.nodes.is_empty() {
            return Err(invalid("nodes", "at least one node required"));
        }
        for (k, n) in self.nodes.iter().enumerate() {
            if self.nodes[..k].contains(n) {
                return Err(invalid("nodes", format!("duplicate node id {n}")));
            }
        }
        if self.node_index(REFERENCE_NODE).is_none() {
            return Err(invalid("nodes", format!("reference node {REFERENCE_NODE} missing")));
        }
        let node_ok = |field: String, id: usize| -> Result<()> {
            if self.node_index(id).is_none() {
                return Err(invalid(field, format!("unknown node {id}")));
            }
            Ok(())
        };
        for (k, l) in self.lines.iter().enumerate() {
            node_ok(format!("lines[{k}].from"), l.from)?;
            node_ok(format!("lines[{k}].to"), l.to)?;
            if l.from == l.to {
                return Err(invalid(format!("lines[{k}]"), "line connects a node to itself"));
            }
            if !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
                return Err(invalid(format!("lines[{k}].susceptance"), "must be positive"));
            }
            if !(l.limit > 0.0 && l.limit.is_finite()) {
                return Err(invalid(format!("lines[{k}].limit"), "must be positive"));
            }
        }
        let check_profile = |field: String, node: usize, min: &[f64], max: &[f64]| -> Result<()> {
            node_ok(format!("{field}.node"), node)?;
            if min.len() != t_len || max.len() != t_len {
                return Err(invalid(field, format!("bounds must have {t_len} entries")));
            }
            for t in 0..t_len {
                if !min[t].is_finite() || !max[t].is_finite() {
                    return Err(invalid(format!("{field}.min[{t}]"), "bounds must be finite"));
                }
                if min[t] > max[t] {
                    return Err(invalid(format!("{field}.min[{t}]"), format!("min {} exceeds max {}", min[t], max[t])));
                }
            }
            Ok(())
        };
        for (k, l) in self.loads.iter().enumerate() {
            check_profile(format!("loads[{k}]"), l.node, &l.min, &l.max)?;
        }
        for (k, g) in self.gens.iter().enumerate() {
            check_profile(format!("gens[{k}]"), g.node, &g.min, &g.max)?;
        }
        for (k, e) in self.esses.iter().enumerate() {
            let f = |name: &str| format!("esses[{k}].{name}");
            node_ok(f("node"), e.node)?;
            for (name, v) in [("kappa", e.kappa), ("eta_d", e.eta_d), ("eta_c", e.eta_c)] {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(invalid(f(name), format!("must lie in (0, 1], got {v}")));
                }
            }
            for (name, v) in [("p_dis_max", e.p_dis_max), ("p_chg_max", e.p_chg_max)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(f(name), format!("must be positive, got {v}")));
                }
            }
            if !(e.e_min.is_finite() && e.e_max.is_finite() && e.e0.is_finite()) {
                return Err(invalid(f("e0"), "energy data must be finite"));
            }
            if e.e_min > e.e_max {
                return Err(invalid(f("e_min"), format!("e_min {} exceeds e_max {}", e.e_min, e.e_max)));
            }
            if e.e0 < e.e_min || e.e0 > e.e_max {
                return Err(invalid(f("e0"), format!("initial energy {} outside [{}, {}]", e.e0, e.e_min, e.e_max)));
            }
        }
        if self.costs.gens.len() != self.gens.len() {
            return Err(invalid("costs.gens", format!("expected {} entries", self.gens.len())));
        }
        if self.costs.esses.len() != self.esses.len() {
            return Err(invalid("costs.esses", format!("expected {} entries", self.esses.len())));
        }
        if self.costs.gens.iter().chain(&self.costs.esses).any(|c| !c.is_finite()) {
            return Err(invalid("costs", "costs must be finite"));
        }
        if self.weights.len() != t_len {
            return Err(invalid("weights", format!("expected {t_len} entries")));
        }
        if let Some(t) = self.weights.iter().position(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(invalid(format!("weights[{t}]"), "weights must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Energy drawn from storage over one period at signed power `p`
/// (positive discharges).
pub fn ess_energy_delta(p: f64, params: &EssParams, tau: f64) -> f64 {
    p.max(0.0) * tau / params.eta_d + p.min(0.0) * tau * params.eta_c
}

/// Signed power whose energy delta is `d`.
pub fn ess_energy_delta_inv(d: f64, params: &EssParams, tau: f64) -> f64 {
    if d > 0.0 {
        d * params.eta_d / tau
    } else if d < 0.0 {
        d / (tau * params.eta_c)
    } else {
        0.0
    }
}

/// Membership test for one step of the exact (no simultaneous charge and
/// discharge) storage model.
pub fn check_general_ess_step(e_prev: f64, e_next: f64, p: f64, params: &EssParams, tau: f64) -> bool {
    if p < -params.p_chg_max || p > params.p_dis_max {
        return false;
    }
    let expected = params.kappa * e_prev - ess_energy_delta(p, params, tau);
    (e_next - expected).abs() <= 1e-9
}
