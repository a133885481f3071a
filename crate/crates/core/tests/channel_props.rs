mod common;

use common::{random_state, rng, state_with_spectrum};
use gausschan::channel::{
    amplifier_channel, classical_noise_channel, loss_channel, q_lower_bound, secret_key_rate, teleport_fidelity,
    GaussianChannel, Mode,
};
use gausschan::numcore::{Mat2, Mat4, SymMatrix};
use gausschan::state::{is_physical, log_negativity, product_state, simon_lambda, state_condition, CovarianceMatrix};
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Alice), Just(Mode::Bob)]
}

/// A random CP channel built from the constructor families.
fn channel() -> impl Strategy<Value = GaussianChannel> {
    (mode(), 0.0..=1.0f64, mode(), 1.0..4.0f64, mode(), 0.0..2.0f64).prop_map(|(m1, eta, m2, gain, m3, n)| {
        loss_channel(m1, eta)
            .unwrap()
            .then(&amplifier_channel(m2, gain).unwrap())
            .then(&classical_noise_channel(m3, n).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        max_global_rejects: 20_000,
        ..ProptestConfig::with_cases(200)
    })]

    #[test]
    fn cp_channels_preserve_physicality(seed in any::<u64>(), ch in channel()) {
        prop_assert!(ch.is_completely_positive().completely_positive);
        let (g, _) = random_state(&mut rng(seed));
        let out = ch.apply(&g);
        prop_assert!(state_condition(&out) >= -1e-9 * (1.0 + out.matrix().max_abs()));
    }

    #[test]
    fn composition_matches_sequential_application(seed in any::<u64>(), c1 in channel(), c2 in channel()) {
        let (g, _) = random_state(&mut rng(seed));
        let a = c1.then(&c2).apply(&g);
        let b = c2.apply(&c1.apply(&g));
        prop_assert!(a.max_abs_diff(&b) < 1e-10 * (1.0 + a.matrix().max_abs()));
    }

    #[test]
    fn local_channels_do_not_create_entanglement(seed in any::<u64>(), ch in channel()) {
        let (g, _) = random_state(&mut rng(seed));
        let before = log_negativity(&g).unwrap();
        let after = log_negativity(&ch.apply(&g)).unwrap();
        prop_assert!(after <= before + 1e-9);
    }

    #[test]
    fn separable_states_give_no_quantum_advantage(seed in any::<u64>()) {
        let (g, _) = random_state(&mut rng(seed));
        prop_assume!(simon_lambda(&g) > 1e-9);
        prop_assert!(q_lower_bound(&g).unwrap() <= 1e-6);
        prop_assert!(teleport_fidelity(&g).unwrap() <= 0.5 + 1e-9);
    }

    #[test]
    fn pure_state_capacity_bound_is_local_entropy(seed in any::<u64>()) {
        let (g, _) = state_with_spectrum(&mut rng(seed), [1.0, 1.0]);
        let sa = gausschan::state::entropy_single_mode(&g.alice()).unwrap();
        prop_assert!((q_lower_bound(&g).unwrap() - sa).abs() < 1e-5);
    }

    #[test]
    fn loss_degrades_tmsv(r in 0.05..1.5f64, eta in 0.05..0.95f64) {
        let g = CovarianceMatrix::tmsv(r).unwrap();
        let lossy = loss_channel(Mode::Bob, eta).unwrap().apply(&g);
        prop_assert!(is_physical(&lossy));
        prop_assert!(log_negativity(&lossy).unwrap() < log_negativity(&g).unwrap());
        prop_assert!(teleport_fidelity(&lossy).unwrap() < teleport_fidelity(&g).unwrap());
    }

    #[test]
    fn fidelity_increases_with_squeezing(r1 in 0.0..1.5f64, dr in 0.01..0.5f64) {
        let f1 = teleport_fidelity(&CovarianceMatrix::tmsv(r1).unwrap()).unwrap();
        let f2 = teleport_fidelity(&CovarianceMatrix::tmsv(r1 + dr).unwrap()).unwrap();
        prop_assert!(f2 > f1);
    }

    #[test]
    fn pure_product_states_have_no_key(ra in -1.0..1.0f64, rb in -1.0..1.0f64) {
        let sq = |r: f64| SymMatrix::new(Mat2::from_diag([(-2.0 * r).exp(), (2.0 * r).exp()])).unwrap();
        let g = product_state(&sq(ra), &sq(rb));
        let k = secret_key_rate(&g).unwrap();
        prop_assert!(k.key_rate.abs() < 1e-9, "{:?}", k);
        prop_assert!(k.mutual_information.abs() < 1e-12);
    }
}

#[test]
fn non_cp_maps_are_rejected() {
    let bad = GaussianChannel::new(Mat4::identity(), Mat4::identity().scale(-0.5)).unwrap();
    let cp = bad.is_completely_positive();
    assert!(!cp.completely_positive);
    assert!((cp.margin + 0.5).abs() < 1e-12);
}

#[test]
fn identity_channel_echoes_state() {
    let (g, _) = random_state(&mut rng(3));
    assert_eq!(GaussianChannel::identity().apply(&g).rows(), g.rows());
}
