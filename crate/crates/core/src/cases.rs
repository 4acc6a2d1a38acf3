//! Small hand-built systems used as fixtures.
//!
//! Costs are not part of the original setups; every fixture uses 10 $/MWh for
//! generation and 1 $/MWh for storage throughput.

use crate::model::{Case, Costs, EssParams, Gen, Line, Load};

const GEN_COST: f64 = 10.0;
const ESS_COST: f64 = 1.0;

/// One node, one lossy storage unit, one period.
pub fn example1() -> Case {
    let ess = EssParams { eta_d: 0.9, eta_c: 0.9, ..EssParams::ideal(1, 1.0, 0.0, 1.0, 1.0) };
    Case {
        periods: 1,
        tau: 1.0,
        nodes: vec![1],
        lines: vec![],
        loads: vec![],
        gens: vec![],
        esses: vec![ess],
        costs: Costs { gens: vec![], esses: vec![ESS_COST] },
        weights: vec![1.0],
    }
}

/// Two nodes joined by a 1 MW line; storage, generation and load sit behind it.
pub fn example2() -> Case {
    Case {
        periods: 2,
        tau: 1.0,
        nodes: vec![1, 2],
        lines: vec![Line { from: 1, to: 2, susceptance: 1.0, limit: 1.0 }],
        loads: vec![Load { node: 2, min: vec![0.0, 0.0], max: vec![2.0, 0.0] }],
        gens: vec![Gen { node: 2, min: vec![0.0, 0.0], max: vec![1.0, 0.0] }],
        esses: vec![EssParams::ideal(2, 1.0, 0.0, 1.0, 1.0)],
        costs: Costs { gens: vec![GEN_COST], esses: vec![ESS_COST] },
        weights: vec![1.0, 1.0],
    }
}

/// One node with an empty ideal storage unit and a generator available only
/// in the middle period.
pub fn example3() -> Case {
    Case {
        periods: 3,
        tau: 1.0,
        nodes: vec![1],
        lines: vec![],
        loads: vec![],
        gens: vec![Gen { node: 1, min: vec![0.0; 3], max: vec![0.0, 2.0, 0.0] }],
        esses: vec![EssParams::ideal(1, 1.0, 0.0, 1.0, 0.0)],
        costs: Costs { gens: vec![GEN_COST], esses: vec![ESS_COST] },
        weights: vec![2.0, 1.0, 2.0],
    }
}

/// Generator-only system with no storage.
pub fn no_storage(periods: usize) -> Case {
    Case {
        periods,
        tau: 1.0,
        nodes: vec![1],
        lines: vec![],
        loads: vec![],
        gens: vec![Gen { node: 1, min: vec![0.0; periods], max: vec![1.0; periods] }],
        esses: vec![],
        costs: Costs { gens: vec![GEN_COST], esses: vec![] },
        weights: vec![1.0; periods],
    }
}
