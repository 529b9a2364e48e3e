mod common;

use randamp::adversary::{
    enumerate_unbiased_functions, max_predictability, max_predictability_with, AdversaryOptions,
    OutputFunction,
};
use randamp::lp::{certify, LinearProgramSpec, Sense, VarBounds};
use randamp::mermin::{ghz_correlations, mermin_coefficients};
use randamp::polytope::{index, nosignalling_constraints};

#[test]
fn majority_bound_is_setting_independent() {
    let f = mermin_coefficients(5).unwrap();
    let g = OutputFunction::majority3();
    let support = f.support();
    let values: Vec<f64> = support
        .iter()
        .step_by(3)
        .map(|&x| max_predictability(&f, &g, x, 1).unwrap().optimum)
        .collect();
    for v in &values {
        assert!((v - 0.75).abs() < 1e-6, "{values:?}");
    }
}

#[test]
fn optimum_dominates_the_quantum_box() {
    // the GHZ box is feasible, so it lower-bounds the adversary's optimum
    let f = mermin_coefficients(5).unwrap();
    let ghz = ghz_correlations(5).unwrap();
    let g = OutputFunction::majority3();
    for &x in &f.support()[..4] {
        let quantum: f64 = (0..32)
            .filter(|&a| common::maj3(a) == 1)
            .map(|a| ghz.prob(a, x))
            .sum();
        assert!((quantum - 0.5).abs() < 1e-12);
        let r = max_predictability(&f, &g, x, 1).unwrap();
        assert!(r.optimum >= quantum - 1e-9);
    }
}

#[test]
fn unbiased_functions_are_at_least_half_predictable() {
    let f = mermin_coefficients(5).unwrap();
    for g in enumerate_unbiased_functions(3).unwrap().step_by(7) {
        let r = max_predictability(&f, &g, 0b11111, 0).unwrap();
        assert!(
            r.optimum >= 0.5 - 1e-9 && r.optimum <= 1.0 + 1e-9,
            "{}",
            r.optimum
        );
    }
}

#[test]
fn certificate_rechecks_independently() {
    let f = mermin_coefficients(5).unwrap();
    let r = max_predictability(&f, &OutputFunction::majority3(), 0b10000, 0).unwrap();
    let sol = &r.certificate;
    // rebuild the program and re-certify the returned pair
    let g = OutputFunction::majority3();
    let mut objective = vec![0.0; 1024];
    for a in 0..32 {
        if g.eval(a) == 0 {
            objective[index(5, a, 0b10000)] = 1.0;
        }
    }
    let mut spec = LinearProgramSpec::new(Sense::Maximize, objective);
    spec.equalities = nosignalling_constraints(5).unwrap();
    let coeffs = f.functional().coefficients();
    spec.bounds = Some(
        coeffs
            .iter()
            .map(|&c| {
                if c != 0.0 {
                    VarBounds::ZERO
                } else {
                    VarBounds::NONNEGATIVE
                }
            })
            .collect(),
    );
    let cert = certify(&spec, &sol.primal, &sol.dual);
    assert!(cert.is_tight(), "{cert:?}");
    assert!((spec.objective_value(&sol.primal) - 0.75).abs() < 1e-6);
}

#[test]
fn dropping_the_violation_makes_majority_certain() {
    let f = mermin_coefficients(5).unwrap();
    let opts = AdversaryOptions {
        enforce_violation: false,
        ..Default::default()
    };
    let r = max_predictability_with(&f, &OutputFunction::majority3(), 0b11111, 1, &opts).unwrap();
    assert!((r.optimum - 1.0).abs() < 1e-9);
}

#[test]
fn three_party_functions_are_fully_predictable() {
    let f = mermin_coefficients(3).unwrap();
    for g in enumerate_unbiased_functions(3).unwrap().step_by(5) {
        for &x in &f.support() {
            let best = (0..2)
                .map(|v| max_predictability(&f, &g, x, v).unwrap().optimum)
                .fold(0.0, f64::max);
            assert!((best - 1.0).abs() < 1e-6);
        }
    }
}
