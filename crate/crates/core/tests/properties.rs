use ccd_core::algorithms::{
    baseline_prox_gd, output_index, pccd_run, vrccd_run, PccdConfig, SampleSharing, VrccdConfig,
};
use ccd_core::problems::{Components, QuadraticFiniteSum, SigmoidClassification};
use ccd_core::sampling::{bernoulli_switch, draw_minibatch, RngStream, StreamId};
use ccd_core::smoothness::{backtrack_lambda, compute_l_constants, step_size, EstimatorParams, StepSizeMode};
use ccd_core::theory::{
    check_descent, check_lemma2, check_lemma3, check_lemma5, check_lemma6, check_theorem3_rate, theorem3_rhs,
    OptimumSource, RateParams,
};
use ccd_core::{BlockPartition, DiagonalMetric, Matrix, Objective, Regularizer};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 32, ..ProptestConfig::default() }
}

fn partition(d: usize, m: usize) -> BlockPartition {
    BlockPartition::uniform(d, m.clamp(1, d)).unwrap()
}

fn point(seed: u64, d: usize, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

fn constants(q: &QuadraticFiniteSum) -> (DiagonalMetric, f64, f64) {
    let metric = q.block_lipschitz_metric().unwrap();
    let q_list = q.exact_q_list(&metric).unwrap();
    let (l_hat, l_tilde) = compute_l_constants(&q_list, &metric, q.partition()).unwrap();
    (metric, l_hat, l_tilde)
}

fn concatenated_block_grads<O: Objective>(prob: &O, x: &[f64]) -> Vec<f64> {
    (0..prob.partition().num_blocks()).flat_map(|j| prob.block_grad(j, x)).collect()
}

fn component_mean_matches<O: Objective>(prob: &O, n: usize, x: &[f64]) -> Result<(), TestCaseError> {
    for j in 0..prob.partition().num_blocks() {
        let exact = prob.block_grad(j, x);
        let mut mean = vec![0.0; exact.len()];
        for i in 0..n {
            for (m, g) in mean.iter_mut().zip(prob.component_block_grad(i, j, x)) {
                *m += g / n as f64;
            }
        }
        let scale = exact.iter().fold(1.0f64, |a, g| a.max(g.abs()));
        for (a, b) in mean.iter().zip(&exact) {
            prop_assert!((a - b).abs() <= 1e-12 * scale, "block {j}: {a} vs {b}");
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn block_gradients_assemble_the_full_gradient(seed in any::<u64>(), n in 1usize..6, d in 1usize..10, m in 1usize..10) {
        let part = partition(d, m);
        let q = QuadraticFiniteSum::generate(seed, n, part.clone(), 8.0, seed % 2 == 0).unwrap();
        let x = point(seed ^ 1, d, 2.0);
        prop_assert_eq!(concatenated_block_grads(&q, &x), q.full_grad(&x));
        let s = SigmoidClassification::generate(seed, n, part, 1.0).unwrap();
        prop_assert_eq!(concatenated_block_grads(&s, &x), s.full_grad(&x));
    }

    #[test]
    fn component_gradients_average_to_the_block_gradient(seed in any::<u64>(), n in 1usize..8, d in 1usize..10, m in 1usize..10) {
        let part = partition(d, m);
        let x = point(seed ^ 2, d, 2.0);
        let q = QuadraticFiniteSum::generate(seed, n, part.clone(), 8.0, true).unwrap();
        component_mean_matches(&q, n, &x)?;
        let s = SigmoidClassification::generate(seed, n, part, 1.0).unwrap();
        component_mean_matches(&s, n, &x)?;
    }

    #[test]
    fn exact_metric_bounds_block_gradient_change(seed in any::<u64>(), n in 1usize..6, d in 2usize..10, m in 1usize..10, convex in any::<bool>()) {
        let part = partition(d, m);
        let q = QuadraticFiniteSum::generate(seed, n, part.clone(), 8.0, convex).unwrap();
        let metric = q.block_lipschitz_metric().unwrap();
        let x = point(seed ^ 3, d, 2.0);
        for j in 0..part.num_blocks() {
            let mut y = x.clone();
            let shift = point(seed ^ (4 + j as u64), part.size(j), 1.0);
            for (t, i) in part.range(j).enumerate() {
                y[i] += shift[t];
            }
            let dg: Vec<f64> = q.block_grad(j, &x).iter().zip(q.block_grad(j, &y)).map(|(a, b)| a - b).collect();
            let lhs = ccd_core::block::weighted_norm_sq(&dg, metric.block(j), true);
            let rhs = ccd_core::block::weighted_norm_sq(&shift, metric.block(j), false);
            prop_assert!(lhs <= rhs * (1.0 + 1e-9), "block {j}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn backtracking_scales_with_curvature(seed in any::<u64>(), d in 1usize..8, m in 1usize..8) {
        // f and 2f share gradient directions, so the accepted multiplier doubles
        let part = partition(d, m);
        let q = QuadraticFiniteSum::generate(seed, 3, part.clone(), 8.0, true).unwrap();
        let doubled = QuadraticFiniteSum::new(
            part.clone(),
            (0..3).map(|i| {
                let a = q.component_matrix(i);
                Matrix::from_fn(d, d, |r, c| 2.0 * a[(r, c)])
            }).collect(),
            (0..3).map(|i| q.component_linear(i).iter().map(|v| 2.0 * v).collect()).collect(),
            (0..3).map(|i| 2.0 * q.component_constant(i)).collect(),
        ).unwrap();
        let x = point(seed ^ 5, d, 3.0);
        let growth = 2.0;
        for j in 0..part.num_blocks() {
            let once = backtrack_lambda(&q, j, &x, growth, 1e-3).unwrap();
            let twice = backtrack_lambda(&doubled, j, &x, growth, 1e-3).unwrap();
            prop_assert!(twice >= 2.0 * once / growth, "block {j}: {twice} vs {once}");
        }
    }

    #[test]
    fn switch_stream_ignores_batch_draws(seed in any::<u64>(), draws in 1usize..40, n in 2usize..20) {
        let mut alone = RngStream::new(seed, StreamId::Switch);
        let expected: Vec<_> = (0..draws).map(|_| bernoulli_switch(alone.rng(), 0.3).unwrap()).collect();
        let mut switch = RngStream::new(seed, StreamId::Switch);
        let mut batch = RngStream::new(seed, StreamId::Batch);
        let mut interleaved = Vec::new();
        for t in 0..draws {
            draw_minibatch(batch.rng(), n, 1 + t % n).unwrap();
            interleaved.push(bernoulli_switch(switch.rng(), 0.3).unwrap());
        }
        prop_assert_eq!(expected, interleaved);
    }

    #[test]
    fn pccd_descends_with_exact_or_backtracked_metric(seed in any::<u64>(), n in 1usize..6, d in 2usize..16, m in 1usize..16, convex in any::<bool>()) {
        let part = partition(d, m);
        let q = QuadraticFiniteSum::generate(seed, n, part, 8.0, convex).unwrap();
        let (reg, x0) = if convex {
            (Regularizer::L1(0.1), point(seed ^ 6, d, 3.0))
        } else {
            (Regularizer::Box { lo: -1.0, hi: 1.0 }, point(seed ^ 6, d, 1.0))
        };
        let exact = pccd_run(&q, &reg, &PccdConfig::new(30, q.block_lipschitz_metric().unwrap(), x0.clone())).unwrap();
        let report = check_descent(&exact.trace).unwrap();
        prop_assert!(report.passed(), "{}", report.to_text());
        let tracked = pccd_run(&q, &reg, &PccdConfig::backtracking(30, 2.0, 1.0, x0)).unwrap();
        let report = check_descent(&tracked.trace).unwrap();
        prop_assert!(report.passed(), "{}", report.to_text());
    }

    #[test]
    fn pccd_stationarity_and_telescoping_hold_pathwise(seed in any::<u64>(), n in 1usize..6, d in 2usize..16, m in 1usize..16) {
        let q = QuadraticFiniteSum::generate(seed, n, partition(d, m), 8.0, true).unwrap();
        let (metric, l_hat, _) = constants(&q);
        let out = pccd_run(&q, &Regularizer::Zero, &PccdConfig::new(40, metric, point(seed ^ 7, d, 3.0))).unwrap();
        let lemma2 = check_lemma2(&out.trace, l_hat).unwrap();
        prop_assert!(lemma2.passed(), "{}", lemma2.to_text());
        let lemma3 = check_lemma3(&out.trace, OptimumSource::Exact(q.optimal_value().unwrap())).unwrap();
        prop_assert!(lemma3.passed(), "{}", lemma3.to_text());
    }

    #[test]
    fn vrccd_lemmas_hold_pathwise(
        seed in any::<u64>(),
        n in 2usize..12,
        d in 2usize..10,
        m in 1usize..10,
        p in 0.05f64..=1.0,
        shared in any::<bool>(),
    ) {
        let q = QuadraticFiniteSum::generate(seed, n, partition(d, m), 8.0, true).unwrap();
        let (metric, l_hat, l_tilde) = constants(&q);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 8);
        let b = rng.random_range(1..=n);
        let bprime = rng.random_range(1..=b);
        let params = EstimatorParams { p, b, bprime, components: Components::Finite(n) };
        let eta = step_size(l_hat, l_tilde, params, StepSizeMode::Theorem3).unwrap().eta;
        let sharing = if shared { SampleSharing::SharedPerCycle } else { SampleSharing::FreshPerBlock };
        let cfg = VrccdConfig::new(40, eta, p, b, bprime, metric, point(seed ^ 9, d, 3.0))
            .with_seed(seed)
            .with_sharing(sharing)
            .with_diagnostics(true);
        let out = vrccd_run(&q, &Regularizer::L1(0.05), &cfg).unwrap();
        let lemma5 = check_lemma5(&out.trace, eta).unwrap();
        prop_assert!(lemma5.passed(), "{}", lemma5.to_text());
        let lemma6 = check_lemma6(&out.trace, l_hat).unwrap();
        prop_assert!(lemma6.passed(), "{}", lemma6.to_text());
    }

    #[test]
    fn full_batch_single_block_rate_check_matches_prox_gd(seed in any::<u64>(), n in 1usize..8, d in 1usize..8) {
        let q = QuadraticFiniteSum::generate(seed, n, BlockPartition::single(d).unwrap(), 8.0, true).unwrap();
        let (metric, l_hat, l_tilde) = constants(&q);
        let params = EstimatorParams { p: 1.0, b: n, bprime: n, components: Components::Finite(n) };
        let eta = step_size(l_hat, l_tilde, params, StepSizeMode::Theorem3).unwrap().eta;
        let x0 = point(seed ^ 10, d, 3.0);
        let iterations = 25;
        let vr = vrccd_run(&q, &Regularizer::Zero, &VrccdConfig::new(iterations, eta, 1.0, n, n, metric.clone(), x0.clone()).with_seed(seed)).unwrap();
        let gd = baseline_prox_gd(&q, &Regularizer::Zero, &PccdConfig::new(iterations, metric, x0).with_eta(eta)).unwrap();
        let k = output_index(seed, iterations);
        let rate = RateParams {
            eta,
            p: 1.0,
            variance_factor: 0.0,
            sigma_sq: 0.0,
            delta0: vr.trace.objective(0) - q.optimal_value().unwrap(),
        };
        let from_vr = check_theorem3_rate(&[vr.trace.stationarity(k)], iterations, &rate).unwrap();
        let from_gd = check_theorem3_rate(&[gd.trace.stationarity(k)], iterations, &rate).unwrap();
        prop_assert_eq!(from_vr.points[0].lhs.to_bits(), from_gd.points[0].lhs.to_bits());
        prop_assert_eq!(from_vr.points[0].rhs.to_bits(), from_gd.points[0].rhs.to_bits());
        // deterministic run: the expectation over the output draw is the mean over k
        let mean = (1..=iterations).map(|k| vr.trace.stationarity(k)).sum::<f64>() / iterations as f64;
        let rhs = theorem3_rhs(&rate, iterations);
        prop_assert!(mean <= rhs * (1.0 + 1e-9), "{mean} > {rhs}");
    }
}
