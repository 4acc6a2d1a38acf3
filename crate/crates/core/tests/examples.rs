use flexagg::aggregation::{solve_enumeration, solve_envelope, solve_outer, solve_rectangular, solve_single_ess, solve_two_stage};
use flexagg::{cases, flexibility_index, Certificate, Mode};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6
}

#[test]
fn example2_chain() {
    let c = cases::example2();
    let v = [
        solve_envelope(&c).unwrap().objective,
        solve_single_ess(&c).unwrap().objective,
        solve_rectangular(&c, Mode::Full).unwrap().objective,
        solve_enumeration(&c).unwrap().objective,
        solve_two_stage(&c, Mode::Full).unwrap().objective,
        solve_outer(&c).unwrap().objective,
    ];
    let expected = [3.0, 3.0, 3.0, 3.0, 4.0, 4.0];
    for (got, want) in v.iter().zip(expected) {
        assert!(close(*got, want), "{v:?}");
    }
}

#[test]
fn example3_chain() {
    let c = cases::example3();
    let v = [
        solve_envelope(&c).unwrap().objective,
        solve_single_ess(&c).unwrap().objective,
        solve_rectangular(&c, Mode::Full).unwrap().objective,
        solve_enumeration(&c).unwrap().objective,
        solve_two_stage(&c, Mode::Full).unwrap().objective,
        solve_outer(&c).unwrap().objective,
    ];
    let expected = [4.0, 5.0, 5.0, 5.0, 6.0, 6.0];
    for (got, want) in v.iter().zip(expected) {
        assert!(close(*got, want), "{v:?}");
    }
}

#[test]
fn lazy_modes_match_full_on_examples() {
    for c in [cases::example2(), cases::example3()] {
        let a = solve_rectangular(&c, Mode::Lazy).unwrap();
        let b = solve_rectangular(&c, Mode::Full).unwrap();
        assert!(close(a.objective, b.objective));
        let a = solve_two_stage(&c, Mode::Lazy).unwrap();
        let b = solve_two_stage(&c, Mode::Full).unwrap();
        assert!(close(a.objective, b.objective));
    }
}

#[test]
fn example3_enumeration_band_index() {
    let c = cases::example3();
    let r = solve_enumeration(&c).unwrap();
    assert!(close(flexibility_index(&r.band, &[2.0, 1.0, 2.0]).unwrap(), 5.0));
    assert!(close(r.objective, flexibility_index(&r.band, &c.weights).unwrap()));
}

#[test]
fn no_storage_collapse() {
    let c = cases::no_storage(2);
    let env = solve_envelope(&c).unwrap();
    assert!(close(env.objective, 2.0));
    // generation shows up as negative import at the substation
    for t in 0..2 {
        assert!(close(env.band.lower[t], -1.0) && close(env.band.upper[t], 0.0), "{:?}", env.band);
    }
    for r in [
        solve_rectangular(&c, Mode::Full).unwrap(),
        solve_enumeration(&c).unwrap(),
        solve_two_stage(&c, Mode::Full).unwrap(),
        solve_outer(&c).unwrap(),
    ] {
        assert!(close(r.objective, 2.0), "{:?}", r.model);
    }
    assert!(solve_single_ess(&c).is_err());
}

#[test]
fn certificates_are_well_formed() {
    let c = cases::example3();
    match solve_rectangular(&c, Mode::Full).unwrap().certificate {
        Certificate::SocBox(b) => b.validate(&c, 1e-7).unwrap(),
        other => panic!("unexpected certificate {other:?}"),
    }
    match solve_envelope(&c).unwrap().certificate {
        Certificate::Envelopes(e) => {
            assert_eq!(e.e_lo[0][0], 0.0);
            assert_eq!(e.e_hi[0][0], 0.0);
            for t in 0..3 {
                assert!(e.p_lo[0][t] <= e.p_hi[0][t]);
                assert!(e.e_lo[0][t + 1] >= -1e-9 && e.e_hi[0][t + 1] <= 1.0 + 1e-9);
            }
        }
        other => panic!("unexpected certificate {other:?}"),
    }
}
