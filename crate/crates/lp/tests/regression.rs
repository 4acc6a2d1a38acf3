use flexagg_lp::{
    check_feasible, dual_objective, solve, verify_farkas, DenseSimplex, LinearProgram, LpBackend, LpStatus, Relation,
    Sense, SparseBackend, VarId,
};
use proptest::prelude::*;

fn single_var(upper_row: f64) -> LinearProgram {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
    lp.add_row(&[(x, 1.0)], Relation::Le, upper_row);
    lp.add_row(&[(x, 1.0)], Relation::Ge, 0.0);
    lp
}

#[test]
fn trivial_bounded_maximum() {
    let out = solve(&single_var(1.0)).unwrap();
    assert_eq!(out.status, LpStatus::Optimal);
    assert!((out.x[0] - 1.0).abs() < 1e-12);
    assert!((out.objective - 1.0).abs() < 1e-12);
}

#[test]
fn trivial_infeasible_has_certificate() {
    let lp = single_var(-1.0);
    let out = DenseSimplex.solve(&lp).unwrap();
    assert_eq!(out.status, LpStatus::Infeasible);
    assert!(verify_farkas(&lp, out.farkas.as_ref().unwrap()));
    assert_eq!(SparseBackend.solve(&lp).unwrap().status, LpStatus::Infeasible);
    assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn unbounded_detected() {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let x = lp.add_var(0.0, f64::INFINITY, 1.0);
    let y = lp.add_var(0.0, f64::INFINITY, 0.0);
    lp.add_row(&[(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
    assert_eq!(DenseSimplex.solve(&lp).unwrap().status, LpStatus::Unbounded);
    assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn empty_program_is_feasible() {
    let lp = LinearProgram::new(Sense::Minimize);
    assert!(check_feasible(&lp).unwrap());
}

#[test]
fn contradictory_equalities_are_infeasible() {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let x = lp.free_var();
    lp.add_row(&[(x, 1.0)], Relation::Eq, 0.0);
    lp.add_row(&[(x, 1.0)], Relation::Eq, 1.0);
    assert!(!check_feasible(&lp).unwrap());
    assert!(!DenseSimplex.check_feasible(&lp).unwrap());
    assert!(!SparseBackend.check_feasible(&lp).unwrap());
}

#[test]
fn dimension_error_is_not_infeasibility() {
    let mut lp = LinearProgram::new(Sense::Minimize);
    lp.add_row(&[(VarId(3), 1.0)], Relation::Le, 1.0);
    assert!(matches!(solve(&lp), Err(flexagg_lp::LpError::DimensionMismatch(_))));
}

/// Classic diet-style problem with a known optimum.
#[test]
fn textbook_production_problem() {
    // max 3a + 5b, a <= 4, 2b <= 12, 3a + 2b <= 18 -> 36 at (2, 6)
    let mut lp = LinearProgram::new(Sense::Maximize);
    let a = lp.add_var(0.0, f64::INFINITY, 3.0);
    let b = lp.add_var(0.0, f64::INFINITY, 5.0);
    lp.add_row(&[(a, 1.0)], Relation::Le, 4.0);
    lp.add_row(&[(b, 2.0)], Relation::Le, 12.0);
    lp.add_row(&[(a, 3.0), (b, 2.0)], Relation::Le, 18.0);
    for backend in [&DenseSimplex as &dyn LpBackend, &SparseBackend] {
        let out = backend.solve(&lp).unwrap();
        assert!((out.objective - 36.0).abs() < 1e-9);
        assert!((out.x[0] - 2.0).abs() < 1e-9 && (out.x[1] - 6.0).abs() < 1e-9);
    }
    let out = DenseSimplex.solve(&lp).unwrap();
    let dual = dual_objective(&lp, out.duals.as_ref().unwrap()).unwrap();
    assert!((dual - 36.0).abs() < 1e-9);
}

#[test]
fn repeated_solves_are_identical() {
    let lp = random_program(7, 5, 6, 0.4);
    let a = DenseSimplex.solve(&lp).unwrap();
    let b = DenseSimplex.solve(&lp).unwrap();
    assert_eq!(a, b);
}

/// A random box-bounded program that is feasible at a known interior point.
fn random_program(seed: u64, n: usize, m: usize, density: f64) -> LinearProgram {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64) / ((1u64 << 53) as f64)
    };
    let sense = if next() < 0.5 { Sense::Minimize } else { Sense::Maximize };
    let mut lp = LinearProgram::new(sense);
    let mut point = Vec::new();
    let vars: Vec<VarId> = (0..n)
        .map(|_| {
            let lo = -5.0 * next();
            let hi = 5.0 * next();
            point.push(lo + (hi - lo) * next());
            lp.add_var(lo, hi, 4.0 * next() - 2.0)
        })
        .collect();
    for _ in 0..m {
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for &v in &vars {
            if next() < density {
                terms.push((v, (8.0 * next() - 4.0).round() / 2.0));
            }
        }
        let act: f64 = terms.iter().map(|&(v, a)| a * point[v.index()]).sum();
        let r = next();
        if r < 0.2 {
            lp.add_row(&terms, Relation::Eq, act);
        } else if r < 0.6 {
            lp.add_row(&terms, Relation::Le, act + next());
        } else {
            lp.add_row(&terms, Relation::Ge, act - next());
        }
    }
    lp
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn backends_agree_and_duality_holds(seed in any::<u64>(), n in 1usize..9, m in 0usize..9, density in 0.2f64..0.9) {
        let lp = random_program(seed, n, m, density);
        let dense = DenseSimplex.solve(&lp).unwrap();
        let sparse = SparseBackend.solve(&lp).unwrap();
        prop_assert_eq!(dense.status, LpStatus::Optimal);
        prop_assert_eq!(sparse.status, LpStatus::Optimal);
        prop_assert!(lp.max_violation(&dense.x) <= 1e-7);
        let scale = 1.0f64.max(dense.objective.abs());
        prop_assert!((dense.objective - sparse.objective).abs() <= 1e-6 * scale,
            "dense {} sparse {}", dense.objective, sparse.objective);
        let dual = dual_objective(&lp, dense.duals.as_ref().unwrap()).unwrap();
        prop_assert!((dual - dense.objective).abs() <= 1e-6 * scale, "primal {} dual {}", dense.objective, dual);
    }

    #[test]
    fn infeasible_programs_carry_certificates(seed in any::<u64>(), n in 1usize..6, m in 1usize..6) {
        let mut lp = random_program(seed, n, m, 0.6);
        // force a contradiction on a combination of columns
        let terms: Vec<(VarId, f64)> = (0..n).map(|j| (VarId(j), 1.0)).collect();
        let hi: f64 = lp.upper().iter().sum();
        lp.add_row(&terms, Relation::Ge, hi + 1.0);
        let out = DenseSimplex.solve(&lp).unwrap();
        prop_assert_eq!(out.status, LpStatus::Infeasible);
        prop_assert!(verify_farkas(&lp, out.farkas.as_ref().unwrap()));
        prop_assert_eq!(SparseBackend.solve(&lp).unwrap().status, LpStatus::Infeasible);
    }
}
