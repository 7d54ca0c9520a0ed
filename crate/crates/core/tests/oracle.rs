// Closed forms against the dense multi-copy oracle, away from the acceptance
// grid: noisy states, the exact collective numerator, GHZ reduced data.

use approx::assert_relative_eq;
use frameless::invariants::{collective_terms, UniformInvariants, invariant_set, invariant_set_from_state, pi_reduction};
use frameless::precision::{closed_form_precision, oracle_precision, scheme_terms, Scheme, ThetaDerivativeSpec};
use frameless::states::{ghz_reduced, AsymmetricGHZ, MerminKind, NoiseModel, ProbeSpec, ReducedData};

fn specs(n: usize) -> Vec<ProbeSpec> {
    vec![
        ProbeSpec::Oat { n },
        ProbeSpec::Mermin { kind: MerminKind::Q1, n },
        ProbeSpec::Mermin { kind: MerminKind::Q2, n },
    ]
}

fn check(spec: ProbeSpec, scheme: Scheme, theta: f64, p: f64) {
    let noise = NoiseModel::new(p).unwrap();
    let closed = closed_form_precision(&spec, scheme, theta, noise, ThetaDerivativeSpec::Analytic);
    let dense = oracle_precision(&spec, scheme, theta, noise).unwrap();
    assert_relative_eq!(closed.variance_theta, dense.variance_theta, max_relative = 1e-8);
}

#[test]
fn collective_exact_matches_dense() {
    for n in 2..=4 {
        for spec in specs(n) {
            for &theta in &[0.07, 0.31, 0.9] {
                check(spec, Scheme::CollectiveExact, theta, 1.0);
            }
        }
    }
}

#[test]
fn noisy_two_copy_and_collective_exact_match_dense() {
    for n in 2..=4 {
        for spec in specs(n) {
            for &p in &[0.95, 0.7] {
                check(spec, Scheme::TwoCopy, 0.23, p);
                check(spec, Scheme::CollectiveExact, 0.23, p);
            }
        }
    }
}

#[test]
fn noisy_four_copy_matches_dense() {
    for spec in specs(2) {
        for &p in &[1.0, 0.9, 0.6] {
            check(spec, Scheme::FourCopy, 0.41, p);
        }
    }
}

#[test]
fn collective_formula_agrees_with_dense_for_pure_two_qubit_states() {
    for spec in specs(2) {
        for &theta in &[0.05, 0.5, 1.3] {
            check(spec, Scheme::Collective, theta, 1.0);
        }
    }
}

#[test]
fn collective_formula_misses_purity_deficit_for_mixed_states() {
    // At N = 2 the simplified numerator uses 1 + S1 + S2 = 4, so on mixed
    // states it overshoots the exact one by 2 (3 - S1 - S2).
    for spec in specs(2) {
        for &(theta, p) in &[(0.05, 0.8), (0.5, 0.6), (0.9, 0.95)] {
            let (r, t) = spec.pair_data(theta);
            let u = UniformInvariants::new(2, &r, &t).depolarized(p);
            let simplified = scheme_terms(Scheme::Collective, &u).0;
            let exact = scheme_terms(Scheme::CollectiveExact, &u).0;
            assert_relative_eq!(simplified - exact, 2.0 * (3.0 - u.s1 - u.s2), epsilon = 1e-12);
            assert!(simplified - exact > 1e-3);
        }
    }
}

#[test]
fn ghz_reduced_data_matches_dense_state() {
    for n in 2..=5 {
        for &alpha in &[1.0, 0.8, std::f64::consts::FRAC_1_SQRT_2, 0.3] {
            let ghz = AsymmetricGHZ::from_real_alpha(alpha, n).unwrap();
            let state = ghz.state().unwrap();
            let closed = ghz_reduced(&ghz);
            let dense = ReducedData::from_state(&state).unwrap();
            assert!(closed.max_abs_diff(&dense) < 1e-12, "N={n} alpha={alpha}");

            let a = invariant_set(&closed);
            let b = invariant_set_from_state(&state).unwrap();
            assert_relative_eq!(a.s1, b.s1, epsilon = 1e-12);
            assert_relative_eq!(a.s2, b.s2, epsilon = 1e-12);
        }
    }
}

#[test]
fn permutation_invariant_reduction_matches_generic_terms() {
    for n in 2..=5 {
        for spec in specs(n) {
            let reduced = spec.reduced(0.37, NoiseModel::new(0.9).unwrap()).unwrap();
            let pi = pi_reduction(&reduced).unwrap();
            let coll = collective_terms(&reduced, None).unwrap();
            let inv = invariant_set(&reduced);
            assert_relative_eq!(pi.s1_plus_k1(), inv.s1 + coll.k1, max_relative = 1e-12, epsilon = 1e-12);
            assert_relative_eq!(pi.b_theta(), coll.b_theta, max_relative = 1e-10, epsilon = 1e-10);
        }
    }
}

#[test]
fn collective_terms_with_state_match_reduced_only() {
    for n in 2..=4 {
        let spec = ProbeSpec::Oat { n };
        let noise = NoiseModel::new(0.85).unwrap();
        let state = spec.full_state(0.6, noise).unwrap();
        let reduced = spec.reduced(0.6, noise).unwrap();
        let from_state = collective_terms(&reduced, Some(&state)).unwrap();
        let closed = collective_terms(&reduced, None).unwrap();
        assert_relative_eq!(from_state.sum_j_sq, closed.sum_j_sq, epsilon = 1e-10);
        assert_relative_eq!(from_state.b_theta, closed.b_theta, epsilon = 1e-9);
    }
}

#[test]
fn static_states_are_degenerate_on_both_paths() {
    let spec = ProbeSpec::Ghz { n: 3, alpha: 0.8 };
    let dense = oracle_precision(&spec, Scheme::TwoCopy, 0.3, NoiseModel::noiseless()).unwrap();
    let closed = closed_form_precision(&spec, Scheme::TwoCopy, 0.3, NoiseModel::noiseless(), ThetaDerivativeSpec::Analytic);
    assert!(dense.variance_theta.is_infinite() && closed.variance_theta.is_infinite());
    assert_eq!(dense.gain, 0.0);
    assert_eq!(closed.gain, 0.0);
}
