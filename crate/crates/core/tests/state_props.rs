mod common;

use common::{random_local, random_state, rng};
use gausschan::state::{
    entropy, is_physical, log_negativity, optimal_witness, purity, repair, simon_lambda, state_condition,
    symplectic_spectrum, symplectic_spectrum_routes, CovarianceMatrix,
};
use proptest::prelude::*;

/// States this close to the separable boundary count as undecided.
const DEAD_BAND: f64 = 1e-6;

fn entropy_term(nu: f64) -> f64 {
    if nu <= 1.0 + 1e-12 {
        return 0.0;
    }
    let (p, m) = ((nu + 1.0) / 2.0, (nu - 1.0) / 2.0);
    p * p.log2() - m * m.log2()
}

/// Smaller symplectic eigenvalue of the partial transpose from the local
/// invariants, with the sign of det C flipped.
fn pt_nu_minus(g: &CovarianceMatrix) -> f64 {
    let d = g.a().det() + g.b().det() - 2.0 * g.c().det();
    ((d - (d * d - 4.0 * g.det()).max(0.0).sqrt()) / 2.0).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(200) })]

    #[test]
    fn spectrum_matches_construction(seed in any::<u64>()) {
        let (g, nu) = random_state(&mut rng(seed));
        let s = symplectic_spectrum(&g).unwrap();
        for k in 0..2 {
            prop_assert!((s.nu[k] - nu[k]).abs() < 1e-8 * (1.0 + g.matrix().max_abs()), "{:?} vs {:?}", s.nu, nu);
        }
        let (a, b) = symplectic_spectrum_routes(&g).unwrap();
        prop_assert!(a.nu.iter().zip(b.nu).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + g.matrix().max_abs())));
        prop_assert!(s.min() >= 1.0 - 1e-9);
        prop_assert!(is_physical(&g));
    }

    #[test]
    fn entropy_and_purity_follow_spectrum(seed in any::<u64>()) {
        let (g, nu) = random_state(&mut rng(seed));
        let mu = purity(&g).unwrap();
        prop_assert!((mu - 1.0 / (nu[0] * nu[1])).abs() < 1e-8);
        let s = entropy(&g).unwrap();
        prop_assert!((s - entropy_term(nu[0]) - entropy_term(nu[1])).abs() < 1e-5);
        let pure = nu[1] == 1.0;
        prop_assert_eq!(pure, (mu - 1.0).abs() < 1e-8);
        if pure {
            prop_assert!(s.abs() < 1e-5);
        }
    }

    #[test]
    fn log_negativity_is_locally_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (g, _) = random_state(&mut r);
        let e = log_negativity(&g).unwrap();
        let h = g.transformed(&random_local(&mut r));
        prop_assert!((log_negativity(&h).unwrap() - e).abs() < 1e-7 * (1.0 + e));
        let want = (-pt_nu_minus(&g).log2()).max(0.0);
        prop_assert!((e - want).abs() < 1e-7 * (1.0 + want), "{} vs {}", e, want);
    }

    #[test]
    fn witness_sign_agrees_with_simon(seed in any::<u64>()) {
        let (g, _) = random_state(&mut rng(seed));
        let s = simon_lambda(&g);
        prop_assume!(s.abs() > DEAD_BAND);
        let w = optimal_witness(&g);
        prop_assert_eq!(w.value < -DEAD_BAND, s < 0.0, "W = {}, Simon = {}", w.value, s);
        prop_assert!(w.bracket.0 <= w.value && w.value <= w.bracket.1);
    }

    #[test]
    fn repair_reaches_the_boundary(seed in any::<u64>(), shrink in 0.2..0.99f64) {
        let (g, _) = random_state(&mut rng(seed));
        let bad = g.scaled(shrink);
        let lambda = state_condition(&bad);
        let r = repair(&bad);
        prop_assert!((r.delta - (-lambda).max(0.0)).abs() <= 1e-12);
        let fixed = state_condition(&r.repaired);
        if lambda < 0.0 {
            prop_assert!((0.0..=1e-12).contains(&fixed), "repaired lambda {}", fixed);
        } else {
            prop_assert_eq!(fixed, lambda);
        }
    }
}

#[test]
fn scaled_pure_state_is_unphysical() {
    let g = CovarianceMatrix::tmsv(0.6).unwrap().scaled(0.9);
    assert!(!is_physical(&g));
    assert!(state_condition(&g) < 0.0);
}

#[test]
fn product_of_thermal_states_is_separable() {
    let g = CovarianceMatrix::thermal(1.7).unwrap();
    assert!(simon_lambda(&g) > 0.0);
    assert_eq!(log_negativity(&g).unwrap(), 0.0);
    assert!(optimal_witness(&g).value > 0.0);
}
