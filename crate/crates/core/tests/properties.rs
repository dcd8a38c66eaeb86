use std::f64::consts::PI;

use ndarray::Array1;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cvqnn::appendix::{
    google_circuit, google_circuit_full, ry_head, trace_distance, QubitGate, PIXELS,
};
use cvqnn::dataio::{encode_idx_images, encode_idx_labels, parse_idx_images, parse_idx_labels, take_balanced, Dataset};
use cvqnn::gates::{beamsplitter, commutator, displacement, kerr, pair_number, rotation, squeezer, Gate};
use cvqnn::measurement::{expectation, probabilities, variance, Observable};
use cvqnn::qnn::{
    loss_xent, model_forward, sgd_step, squash, HybridModelConfig, ModelParams, SQUASH_LIMIT,
};
use cvqnn::wigner::{wigner_fock_closed, wigner_fock_numeric};
use cvqnn::{Cutoff, Operator, State, C64};

fn cut(n: usize) -> Cutoff {
    Cutoff::new(n).unwrap()
}

fn state_from(raw: &[(f64, f64)], modes: usize, n: usize) -> State {
    let amps: Array1<C64> = raw.iter().map(|&(re, im)| C64::new(re, im)).collect();
    State::from_amplitudes(amps, modes, cut(n)).unwrap()
}

/// A normalized state on `modes` modes at cutoff `n`.
fn arb_state(modes: usize, n: usize) -> impl Strategy<Value = State> {
    let dim = n.pow(modes as u32);
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("nonzero", |v| v.iter().any(|&(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(move |v| state_from(&v, modes, n).normalized())
}

fn arb_gate() -> impl Strategy<Value = Gate> {
    let mag = 0.0f64..2.0;
    let ang = 0.0f64..(2.0 * PI);
    prop_oneof![
        ang.clone().prop_map(|phi| Gate::Rotation { phi }),
        (mag.clone(), ang.clone()).prop_map(|(r, p)| Gate::Squeezer { z: C64::from_polar(r, p) }),
        (mag.clone(), ang.clone()).prop_map(|(r, p)| Gate::Displacement { alpha: C64::from_polar(r, p) }),
        (ang.clone(), ang.clone()).prop_map(|(theta, phi)| Gate::Beamsplitter { theta, phi }),
        (-PI..PI).prop_map(|kappa| Gate::Kerr { kappa }),
    ]
}

fn max_abs(op: &Operator) -> f64 {
    op.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ladder_operators_are_adjoint(n in 2usize..16) {
        let c = cut(n);
        prop_assert_eq!(Operator::creation(c).adjoint(), Operator::annihilation(c));
    }

    #[test]
    fn tensor_product_norm_is_multiplicative(a in arb_state(1, 3), b in arb_state(2, 3), sa in 0.1f64..3.0) {
        let scaled = State::from_amplitudes(a.amplitudes().mapv(|z| z * sa), 1, cut(3)).unwrap();
        let t = scaled.tensor(&b).unwrap();
        prop_assert!((t.norm() - sa * b.norm()).abs() < 1e-12);
        prop_assert_eq!(t.modes(), 3);
    }

    #[test]
    fn reduced_states_are_unit_trace_and_hermitian(psi in arb_state(3, 2), keep in 0usize..3) {
        let rho = psi.partial_trace(keep).unwrap();
        prop_assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(rho.hermiticity_error() < 1e-14);
    }

    #[test]
    fn gates_are_unitary(g in arb_gate(), n in 2usize..7) {
        let u = g.matrix(cut(n)).unwrap();
        prop_assert!(u.unitarity_error() <= 1e-9);
    }

    #[test]
    fn gates_preserve_norm(g in arb_gate(), psi in arb_state(2, 3)) {
        let u = g.matrix(cut(3)).unwrap();
        let out = if u.arity() == 1 { u.apply_on(&psi, 1).unwrap() } else { u.apply(&psi).unwrap() };
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn displacement_inverse(r in 0.0f64..2.0, p in 0.0f64..(2.0 * PI), n in 2usize..10) {
        let c = cut(n);
        let a = C64::from_polar(r, p);
        let prod = displacement(a, c).unwrap().matmul(&displacement(-a, c).unwrap()).unwrap();
        prop_assert!(prod.max_abs_diff(&Operator::identity(1, c)).unwrap() < 1e-10);
    }

    #[test]
    fn squeezer_inverse(r in 0.0f64..2.0, p in 0.0f64..(2.0 * PI), n in 2usize..10) {
        let c = cut(n);
        let z = C64::from_polar(r, p);
        let prod = squeezer(z, c).unwrap().matmul(&squeezer(-z, c).unwrap()).unwrap();
        prop_assert!(prod.max_abs_diff(&Operator::identity(1, c)).unwrap() < 1e-10);
    }

    #[test]
    fn beamsplitter_conserves_photon_number(theta in 0.0f64..(2.0 * PI), phi in 0.0f64..(2.0 * PI), n in 2usize..6) {
        let c = cut(n);
        let comm = commutator(&beamsplitter(theta, phi, c).unwrap(), &pair_number(c).unwrap()).unwrap();
        prop_assert!(max_abs(&comm) < 1e-10);
    }

    #[test]
    fn diagonal_gates_compose_additively(a in -PI..PI, b in -PI..PI, n in 2usize..12) {
        let c = cut(n);
        let r = rotation(a, c).unwrap().matmul(&rotation(b, c).unwrap()).unwrap();
        prop_assert!(r.max_abs_diff(&rotation(a + b, c).unwrap()).unwrap() < 1e-12);
        let k = kerr(a, c).unwrap().matmul(&kerr(b, c).unwrap()).unwrap();
        prop_assert!(k.max_abs_diff(&kerr(a + b, c).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn oversized_magnitudes_rejected(r in 2.0001f64..10.0) {
        prop_assert!(squeezer(C64::new(r, 0.0), cut(4)).is_err());
        prop_assert!(displacement(C64::new(0.0, r), cut(4)).is_err());
    }

    #[test]
    fn probabilities_sum_to_one(psi in arb_state(2, 4)) {
        let p = probabilities(&psi);
        prop_assert_eq!(p.len(), 16);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn number_statistics_in_range(psi in arb_state(2, 4), mode in 0usize..2) {
        let obs = Observable::number(cut(4));
        let e = expectation(&psi, &obs, mode).unwrap();
        prop_assert!((-1e-12..=3.0 + 1e-12).contains(&e));
        prop_assert!(variance(&psi, &obs, mode).unwrap() >= -1e-12);
    }

    #[test]
    fn pauli_x_expectation_bounded(psi in arb_state(3, 2), mode in 0usize..3) {
        let e = expectation(&psi, &Observable::pauli_x(cut(2)).unwrap(), mode).unwrap();
        prop_assert!(e.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn wigner_closed_form_is_point_symmetric(k in 0usize..12, x in -5.0f64..5.0, p in -5.0f64..5.0) {
        prop_assert!((wigner_fock_closed(k, x, p) - wigner_fock_closed(k, -x, -p)).abs() < 1e-15);
        prop_assert!(wigner_fock_closed(k, x, p).abs() <= 1.0 / PI + 1e-12);
    }

    #[test]
    fn wigner_numeric_matches_closed_form(k in 0usize..6, x in -4.0f64..4.0, p in -4.0f64..4.0) {
        let err = (wigner_fock_numeric(k, x, p).unwrap() - wigner_fock_closed(k, x, p)).abs();
        prop_assert!(err < 1e-6);
    }

    #[test]
    fn idx_round_trip(pixels in prop::collection::vec(any::<u8>(), 784 * 3), labels in prop::collection::vec(0u8..10, 3)) {
        let mut bytes = Vec::new();
        for w in [0x803u32, 3, 28, 28] {
            bytes.extend_from_slice(&w.to_be_bytes());
        }
        bytes.extend_from_slice(&pixels);
        let images = parse_idx_images(&bytes).unwrap();
        prop_assert!(images.iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert_eq!(encode_idx_images(&images), bytes);
        let encoded = encode_idx_labels(&labels);
        prop_assert_eq!(parse_idx_labels(&encoded).unwrap(), labels);
    }

    #[test]
    fn balanced_selection_is_deterministic(
        seed in any::<u64>(),
        (classes, total) in (1usize..5).prop_flat_map(|c| (Just(c), 1..=20 * c)),
    ) {
        let images: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 / 200.0; 2]).collect();
        let labels: Vec<u8> = (0..200).map(|i| (i % 10) as u8).collect();
        let data = Dataset::new(images, labels).unwrap();
        let a = take_balanced(&data, total, classes, seed).unwrap();
        let b = take_balanced(&data, total, classes, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), total);
        let counts: Vec<usize> = (0..classes as u8).map(|c| a.labels().iter().filter(|&&l| l == c).count()).collect();
        let lo = *counts.iter().min().unwrap();
        let hi = *counts.iter().max().unwrap();
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn parameter_layout_round_trips(seed in any::<u64>(), m in 2usize..5, layers in 1usize..4) {
        let config = HybridModelConfig::new(m, 2, layers, 2).with_encoder(6, &[5]);
        let params = ModelParams::init(&config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let flat = params.flatten();
        prop_assert_eq!(flat.len(), params.param_count());
        let back = ModelParams::partition(&config, &flat).unwrap();
        prop_assert_eq!(&back, &params);
        let json = serde_json::to_string(&params).unwrap();
        let reloaded: ModelParams = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(reloaded.flatten(), flat);
    }

    #[test]
    fn zero_model_returns_vacuum(m in 2usize..4, n in 2usize..4, image in prop::collection::vec(0.0f64..1.0, 6)) {
        let config = HybridModelConfig::new(m, n, 2, 1).with_encoder(6, &[4]);
        let count = ModelParams::init(&config, &mut ChaCha8Rng::seed_from_u64(0)).unwrap().param_count();
        let params = ModelParams::partition(&config, &vec![0.0; count]).unwrap();
        let out = model_forward(&config, &params, &image).unwrap();
        prop_assert!((out[0] - 1.0).abs() < 1e-12);
        prop_assert!(out[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn squash_is_bounded_and_odd(r in -1e6f64..1e6) {
        prop_assert!(squash(r).abs() <= SQUASH_LIMIT);
        prop_assert_eq!(squash(-r), -squash(r));
    }

    #[test]
    fn crossentropy_is_nonnegative(p in prop::collection::vec(0.0f64..1.0, 4), label in 0usize..4) {
        let mut t = vec![0.0; 4];
        t[label] = 1.0;
        prop_assert!(loss_xent(&p, &t).unwrap() >= 0.0);
    }

    #[test]
    fn sgd_step_is_affine(p in prop::collection::vec(-5.0f64..5.0, 5), g in prop::collection::vec(-5.0f64..5.0, 5), lr in 0.0f64..1.0) {
        let out = sgd_step(&p, &g, lr).unwrap();
        for i in 0..5 {
            prop_assert_eq!(out[i], p[i] - lr * g[i]);
        }
    }

    #[test]
    fn ry_head_is_a_distribution_with_period_4pi(theta in -20.0f64..20.0) {
        let p = ry_head(theta).unwrap();
        prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        let q = ry_head(theta + 4.0 * PI).unwrap();
        prop_assert!((p[0] - q[0]).abs() < 1e-12);
    }

    #[test]
    fn qubit_gate_names_round_trip(v in -10.0f64..10.0) {
        for (text, gate) in [
            (format!("Ry({v})"), QubitGate::Ry(v)),
            (format!("XXpow({v})"), QubitGate::XXPow(v)),
            (format!("ZZpow({v})"), QubitGate::ZZPow(v)),
        ] {
            prop_assert_eq!(QubitGate::parse(&text).unwrap(), gate);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn readout_simulators_agree(
        bits in prop::collection::vec(any::<bool>(), PIXELS),
        t in prop::collection::vec(-1.0f64..1.0, PIXELS),
        s in prop::collection::vec(-1.0f64..1.0, PIXELS),
    ) {
        let a = google_circuit(&bits, &t, &s).unwrap();
        let b = google_circuit_full(&bits, &t, &s).unwrap();
        prop_assert!(trace_distance(&a.rho, &b.rho) < 1e-9);
        let z = a.expectation_z();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&z));
        prop_assert!(a.purity() <= 1.0 + 1e-12);
    }
}
