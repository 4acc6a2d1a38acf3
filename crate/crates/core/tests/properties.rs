use flexagg::aggregation::{
    corner_recourse_feasible, solve_enumeration, solve_envelope, solve_outer, solve_rectangular, solve_single_ess,
    solve_two_stage, Certificate, SocBox,
};
use flexagg::scenario::{enumerate_soc_corners, DEFAULT_MAX_ESS_CORNERS};
use flexagg::synth::{random_case, SynthSpec};
use flexagg::{aggregate, Limits, Mode, ModelKind};

const SLACK: f64 = 1e-6;

fn chain(case: &flexagg::Case) -> [f64; 5] {
    [
        solve_envelope(case).unwrap().objective,
        solve_rectangular(case, Mode::Full).unwrap().objective,
        solve_enumeration(case).unwrap().objective,
        solve_two_stage(case, Mode::Full).unwrap().objective,
        solve_outer(case).unwrap().objective,
    ]
}

#[test]
fn ordering_chain_on_random_cases() {
    let mut single = 0;
    for seed in 0..50 {
        let case = random_case(seed, &SynthSpec::property());
        let v = chain(&case);
        for k in 0..4 {
            assert!(v[k] <= v[k + 1] + SLACK, "seed {seed}: {v:?}");
        }
        if case.esses.len() == 1 {
            single += 1;
            let s = solve_single_ess(&case).unwrap().objective;
            assert!((s - v[1]).abs() <= SLACK && (s - v[2]).abs() <= SLACK, "seed {seed}: {s} vs {v:?}");
        }
        if case.esses.is_empty() {
            assert!(v.iter().all(|x| (x - v[0]).abs() <= SLACK), "seed {seed}: {v:?}");
        }
    }
    assert!(single > 0);
}

#[test]
fn single_unit_models_agree_at_five_periods() {
    let spec = SynthSpec { periods: 5..=5, esses: 1..=1, ..SynthSpec::property() };
    for seed in 100..110 {
        let case = random_case(seed, &spec);
        let s = solve_single_ess(&case).unwrap().objective;
        let e = solve_enumeration(&case).unwrap().objective;
        assert!((s - e).abs() <= SLACK, "seed {seed}: {s} vs {e}");
    }
}

#[test]
fn lazy_and_full_modes_agree() {
    let spec = SynthSpec { periods: 4..=4, esses: 2..=2, ..SynthSpec::property() };
    for seed in 200..210 {
        let case = random_case(seed, &spec);
        for model in [ModelKind::Rectangular, ModelKind::TwoStage] {
            let full = aggregate(&case, model, Mode::Full, &Limits::default()).unwrap();
            let lazy = aggregate(&case, model, Mode::Lazy, &Limits::default()).unwrap();
            assert!((full.objective - lazy.objective).abs() <= SLACK, "seed {seed} {model}: {} vs {}", full.objective, lazy.objective);
        }
    }
}

#[test]
fn envelope_boxes_pass_corner_checks() {
    for seed in 0..30 {
        let case = random_case(seed, &SynthSpec::property());
        let r = solve_envelope(&case).unwrap();
        let Certificate::Envelopes(env) = &r.certificate else { panic!() };
        let soc_box = SocBox { lo: env.e_lo.clone(), hi: env.e_hi.clone() };
        soc_box.validate(&case, 1e-7).unwrap();
        for corner in enumerate_soc_corners(case.esses.len(), DEFAULT_MAX_ESS_CORNERS).unwrap() {
            for t in 0..case.periods {
                assert!(corner_recourse_feasible(&case, &r.band, &soc_box, t, &corner).unwrap(), "seed {seed} t {t}");
            }
        }
    }
}

#[test]
fn certificates_are_well_formed_on_random_cases() {
    for seed in 0..20 {
        let case = random_case(seed, &SynthSpec::property());
        for model in ModelKind::ALL {
            if model == ModelKind::SingleEss && case.esses.len() != 1 {
                continue;
            }
            let r = aggregate(&case, model, Mode::Full, &Limits::default()).unwrap();
            r.band.validate().unwrap();
            let index: f64 = (0..case.periods).map(|t| case.weights[t] * (r.band.upper[t] - r.band.lower[t])).sum();
            assert!((index - r.objective).abs() <= 1e-9);
            if let Certificate::SocBox(b) = &r.certificate {
                b.validate(&case, 1e-7).unwrap();
            }
        }
    }
}
