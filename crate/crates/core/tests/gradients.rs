mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stvqc::sim::{Angle, Circuit, GateKind, GateOp};
use stvqc::trainer::*;

const H: f64 = 1e-5;

/// Largest component gap relative to the largest finite-difference component.
fn relative_gap(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    analytic.iter().zip(numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

fn central_difference(f: impl Fn(&[f64]) -> f64, params: &[f64]) -> Vec<f64> {
    (0..params.len())
        .map(|i| {
            let mut p = params.to_vec();
            p[i] += H;
            let up = f(&p);
            p[i] -= 2.0 * H;
            (up - f(&p)) / (2.0 * H)
        })
        .collect()
}

#[test]
fn loss_gradient_matches_finite_differences_on_50_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for m in 0..50 {
        let (spec, batch) = random_model(&mut rng);
        let model = spec.build().unwrap();
        let params: Vec<f64> = (0..model.n_params()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let analytic = grad(&model, &params, &batch).unwrap();
        let numeric = central_difference(|p| loss(&model, p, &batch).unwrap(), &params);
        let gap = relative_gap(&analytic, &numeric);
        assert!(gap < 1e-5, "model {m} ({spec:?}): relative gap {gap}");
    }
}

fn random_trainable_circuit(rng: &mut ChaCha8Rng, n: usize, n_params: usize) -> Circuit {
    let kinds = [GateKind::Rx, GateKind::Ry, GateKind::Rz, GateKind::Crx, GateKind::Cry, GateKind::Crz];
    let mut c = random_circuit(rng, n, 6, 0);
    for _ in 0..10 {
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let angle = Angle::param(rng.gen_range(0..n_params)).scaled(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0));
        let a = rng.gen_range(0..n);
        let qubits = if kind.arity() == 2 { vec![a, (a + 1 + rng.gen_range(0..n - 1)) % n] } else { vec![a] };
        c.push(GateOp::new(kind, qubits, Some(angle)));
    }
    c.n_params = n_params;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_rules_match_finite_differences(seed in any::<u64>(), n in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let circuit = random_trainable_circuit(&mut rng, n, 4);
        let params: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let qubits: Vec<usize> = (0..n).collect();
        let (_, jac) = shift_jacobian(&circuit, &params, None, &qubits).unwrap();
        for q in 0..n {
            let numeric = central_difference(
                |p| stvqc::sim::run_circuit(&circuit, p, None).unwrap().expectation_z(&[q]).unwrap()[0],
                &params,
            );
            let analytic: Vec<f64> = jac.iter().map(|row| row[q]).collect();
            let abs_gap = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(abs_gap < 1e-7, "qubit {q}: {analytic:?} vs {numeric:?}");
        }
    }
}
