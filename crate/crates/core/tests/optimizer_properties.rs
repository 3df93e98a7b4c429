use proptest::prelude::*;
use sngm_core::optimizers::{GradAccumulator, LrSchedule, Method, OptimizerConfig, OptimizerState};
use sngm_core::problems::{make_logistic, DatasetMatrix, Problem, Quadratic};
use sngm_core::{ParamVector, SeededRng};

fn state(method: Method, beta: f64, lr: f64, dim: usize) -> OptimizerState {
    OptimizerState::new(
        OptimizerConfig::new(method, beta),
        LrSchedule::constant(lr).unwrap(),
        dim,
    )
    .unwrap()
}

/// Gradient whose magnitude spans many orders, from a seeded stream.
fn wild_gradient(rng: &mut SeededRng, dim: usize) -> ParamVector {
    let scale = 10f64.powf(rng.uniform_in(-12.0, 12.0));
    ParamVector::new(
        (0..dim)
            .map(|_| scale * rng.uniform_in(-1.0, 1.0))
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn momentum_norm_stays_bounded(seed in any::<u64>(), beta_idx in 0usize..4, dim in 1usize..8) {
        let beta = [0.0, 0.5, 0.9, 0.99][beta_idx];
        let mut opt = state(Method::Sngm, beta, 0.01, dim);
        let mut w = ParamVector::zeros(dim);
        let mut rng = SeededRng::new(seed);
        let bound = 1.0 / (1.0 - beta);
        for _ in 0..10_000 {
            let g = wild_gradient(&mut rng, dim);
            let r = opt.step(&mut w, &g).unwrap();
            prop_assert!(r.momentum_norm <= bound + 1e-9);
            prop_assert!(r.displacement <= 0.01 * bound + 1e-12);
        }
    }

    #[test]
    fn sngm_ignores_gradient_scale(seed in any::<u64>(), log_c in -3.0f64..3.0) {
        let c = 10f64.powf(log_c);
        let mut a = state(Method::Sngm, 0.9, 0.1, 4);
        let mut b = state(Method::Sngm, 0.9, 0.1, 4);
        let (mut wa, mut wb) = (ParamVector::zeros(4), ParamVector::zeros(4));
        let mut rng = SeededRng::new(seed);
        for _ in 0..50 {
            let g = wild_gradient(&mut rng, 4);
            a.step(&mut wa, &g).unwrap();
            b.step(&mut wb, &g.scaled(c)).unwrap();
        }
        let scale = wa.norm().max(1.0);
        prop_assert!(wa.distance(&wb).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn zero_momentum_reduces_to_plain_methods(seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let pairs = [(Method::Msgd, Method::Sgd), (Method::Sngm, Method::Sngd)];
        for (with, without) in pairs {
            let mut a = state(with, 0.0, 0.05, 3);
            let mut b = state(without, 0.9, 0.05, 3);
            let (mut wa, mut wb) = (ParamVector::zeros(3), ParamVector::zeros(3));
            for _ in 0..100 {
                let g = wild_gradient(&mut rng, 3);
                a.step(&mut wa, &g).unwrap();
                b.step(&mut wb, &g).unwrap();
            }
            prop_assert_eq!(wa.as_slice(), wb.as_slice());
        }
    }
}

fn toy_quadratic() -> Quadratic {
    Quadratic::from_centers(vec![1.0, 4.0], vec![0.5, -1.0, 1.5, 0.0]).unwrap()
}

fn trajectory(method: Method) -> Vec<[f64; 2]> {
    let q = toy_quadratic();
    let mut opt = state(method, 0.9, 0.1, 2);
    let mut w = ParamVector::new(vec![3.0, 2.0]);
    (0..5)
        .map(|_| {
            let g = q.full_gradient(w.as_slice());
            opt.step(&mut w, &g).unwrap();
            [w.as_slice()[0], w.as_slice()[1]]
        })
        .collect()
}

fn assert_trajectory(got: &[[f64; 2]], want: &[[f64; 2]]) {
    for (g, w) in got.iter().zip(want) {
        for k in 0..2 {
            assert!(
                (g[k] - w[k]).abs() <= 1e-12 * w[k].abs().max(1.0),
                "{got:?}"
            );
        }
    }
}

#[test]
fn msgd_trajectory_matches_recurrence() {
    // independently scripted heavy-ball recurrence on the same quadratic
    let want = [
        [2.8, 1.0],
        [2.44, -0.5],
        [1.972, -1.85],
        [1.4536, -2.5250000000000004],
        [0.9416800000000001, -2.3225000000000002],
    ];
    assert_trajectory(&trajectory(Method::Msgd), &want);
}

#[test]
fn sngm_trajectory_matches_recurrence() {
    let want = [
        [2.9803883864861818, 1.901941932430908],
        [2.942549968633643, 1.7157486381276736],
        [2.887086054702915, 1.4504933533811608],
        [2.8136591457862368, 1.1145663299044966],
        [2.7205380580413063, 0.7159563229781591],
    ];
    assert_trajectory(&trajectory(Method::Sngm), &want);
}

#[test]
fn accumulated_batch_matches_direct_batch() {
    let mut rng = SeededRng::new(21);
    let n = 300;
    let d = 6;
    let features: Vec<f64> = (0..n * d).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
    let labels: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let p = make_logistic(DatasetMatrix::new(n, d, features, labels).unwrap(), 0.0).unwrap();
    let w: Vec<f64> = (0..d).map(|_| rng.uniform_in(-0.5, 0.5)).collect();

    let batch = rng.sample_indices(n, 256).unwrap();
    let direct = p.batch_gradient(&batch, &w);
    let mut acc = GradAccumulator::new(64, 256).unwrap();
    let mut emitted = None;
    for chunk in batch.chunks(64) {
        emitted = acc.accumulate(&p.batch_gradient(chunk, &w)).unwrap();
    }
    let emitted = emitted.expect("four micro-batches complete the batch");
    let scale = direct.norm().max(1.0);
    for (a, b) in emitted.as_slice().iter().zip(direct.as_slice()) {
        assert!((a - b).abs() <= 1e-12 * scale);
    }
}
