use super::*;
use crate::block::BlockPartition;
use crate::error::Error;
use crate::linalg::Matrix;
use crate::problems::{QuadraticFiniteSum, SigmoidClassification, StreamingObjective};

fn quad(seed: u64, n: usize, d: usize, m: usize) -> QuadraticFiniteSum {
    QuadraticFiniteSum::generate(seed, n, BlockPartition::uniform(d, m).unwrap(), 10.0, true).unwrap()
}

fn start(d: usize) -> Vec<f64> {
    (0..d).map(|t| ((t * 7 + 3) % 5) as f64 - 2.0).collect()
}

#[test]
fn single_block_pccd_is_prox_gd() {
    let q = quad(1, 3, 6, 1);
    let metric = q.block_lipschitz_metric().unwrap();
    let cfg = PccdConfig::new(25, metric.clone(), start(6));
    for reg in [Regularizer::Zero, Regularizer::L1(0.3)] {
        let a = pccd_run(&q, &reg, &cfg).unwrap();
        let b = baseline_prox_gd(&q, &reg, &cfg).unwrap();
        assert_eq!(a.trace.rows, b.trace.rows);
        assert_eq!(a.x, b.x);

        // hand-written reference loop
        let mut x = start(6);
        for k in 1..=25 {
            let g = q.full_grad(&x);
            x = reg.metric_prox(0, &x, &g, 1.0, metric.diag()).unwrap();
            assert_eq!(composite_value(&q, &reg, &x), a.trace.objective(k));
        }
        assert_eq!(x, a.last);
    }
}

#[test]
fn separable_quadratic_solved_in_one_cycle() {
    let lambdas = [1.0, 4.0, 0.5, 9.0];
    let part = BlockPartition::uniform(4, 2).unwrap();
    let q = QuadraticFiniteSum::new(part.clone(), vec![Matrix::from_diag(&lambdas)], vec![vec![0.0; 4]], vec![0.0])
        .unwrap();
    let metric = DiagonalMetric::new(lambdas.to_vec(), part).unwrap();
    let out = pccd_run(&q, &Regularizer::Zero, &PccdConfig::new(1, metric, vec![3.0, -1.0, 2.5, 0.7])).unwrap();
    assert_eq!(out.last, vec![0.0; 4]);
}

#[test]
fn fixed_point_has_zero_measures() {
    let q = quad(2, 2, 5, 5);
    let xs = q.minimizer().unwrap();
    let metric = q.block_lipschitz_metric().unwrap();
    let out = pccd_run(&q, &Regularizer::Zero, &PccdConfig::new(1, metric, xs)).unwrap();
    assert!(out.trace.stationarity(1) < 1e-24);
    assert!(out.trace.step_sq(1) < 1e-24);
}

#[test]
fn scalar_l1_stationarity() {
    // f(x) = ½(x − 3)², r = |x|, Λ = 1, start at 3: the step lands at 2.
    let part = BlockPartition::single(1).unwrap();
    let q = QuadraticFiniteSum::new(part.clone(), vec![Matrix::identity(1)], vec![vec![-3.0]], vec![4.5]).unwrap();
    let metric = DiagonalMetric::identity(part);
    let out = pccd_run(&q, &Regularizer::L1(1.0), &PccdConfig::new(1, metric.clone(), vec![3.0])).unwrap();
    assert_eq!(out.last, vec![2.0]);
    // residual (3 − 2) − 0 = 1 ∈ ∂|·|(2); ∇f(2) + 1 = 0
    assert_eq!(out.trace.stationarity(1), 0.0);
    assert_eq!(stationarity_sq(&q, &[2.0], &[1.0], &metric).unwrap(), 0.0);
    assert!(matches!(stationarity_sq(&q, &[2.0], &[], &metric), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn zero_regularizer_stationarity_is_gradient_norm() {
    let q = quad(3, 2, 4, 2);
    let metric = DiagonalMetric::identity(q.partition().clone());
    let x = start(4);
    let g = q.full_grad(&x);
    let s = stationarity_sq(&q, &x, &[0.0; 4], &metric).unwrap();
    assert_eq!(s, g.iter().map(|v| v * v).sum::<f64>());
}

#[test]
fn full_batch_vrccd_is_pccd_with_step() {
    let q = quad(4, 6, 8, 4);
    let metric = q.block_lipschitz_metric().unwrap();
    let eta = 0.6;
    let p_run =
        pccd_run(&q, &Regularizer::L1(0.1), &PccdConfig::new(30, metric.clone(), start(8)).with_eta(eta)).unwrap();
    for sharing in [SampleSharing::FreshPerBlock, SampleSharing::SharedPerCycle] {
        let cfg = VrccdConfig::new(30, eta, 1.0, 6, 2, metric.clone(), start(8)).with_seed(9).with_sharing(sharing);
        let v_run = vrccd_run(&q, &Regularizer::L1(0.1), &cfg).unwrap();
        for k in 0..=30 {
            assert_eq!(p_run.trace.objective(k), v_run.trace.objective(k));
            assert_eq!(p_run.trace.step_sq(k), v_run.trace.step_sq(k));
            assert_eq!(p_run.trace.rows[k].stationarity, v_run.trace.rows[k].stationarity);
        }
        assert_eq!(p_run.last, v_run.last);
    }
}

#[test]
fn single_block_sccd_is_sgd() {
    let s = SigmoidClassification::generate(5, 40, BlockPartition::single(5).unwrap(), 2.0).unwrap();
    let metric = s.curvature_metric().unwrap();
    let cfg = VrccdConfig::new(50, 0.5, 1.0, 8, 8, metric, vec![0.1; 5]).with_seed(77).with_diagnostics(true);
    let a = sccd_run(&s, &Regularizer::Zero, &cfg).unwrap();
    let b = baseline_sgd(&s, &Regularizer::Zero, &cfg).unwrap();
    assert_eq!(a.trace.rows, b.trace.rows);
    assert_eq!(a.x, b.x);
    assert_eq!(a.output_index, b.output_index);
}

#[test]
fn page_full_batch_is_prox_gd() {
    let q = quad(6, 5, 6, 3);
    let metric = q.block_lipschitz_metric().unwrap();
    let gd =
        baseline_prox_gd(&q, &Regularizer::Zero, &PccdConfig::new(20, metric.clone(), start(6)).with_eta(0.4)).unwrap();
    let page = baseline_page(&q, &Regularizer::Zero, &VrccdConfig::new(20, 0.4, 1.0, 5, 1, metric, start(6))).unwrap();
    assert_eq!(gd.last, page.last);
    assert_eq!(gd.trace.objectives(), page.trace.objectives());
}

#[test]
fn prox_gd_decreases_on_convex_quadratic() {
    let q = quad(7, 3, 10, 2);
    let l = crate::linalg::symmetric_eigenvalues(q.mean_matrix()).unwrap()[9];
    let metric = DiagonalMetric::identity(q.partition().clone());
    let out =
        baseline_prox_gd(&q, &Regularizer::Zero, &PccdConfig::new(100, metric, start(10)).with_eta(1.0 / l)).unwrap();
    let f = out.trace.objectives();
    assert!(f.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
}

#[test]
fn full_samples_give_zero_estimator_error() {
    let q = quad(8, 7, 6, 3);
    let metric = q.block_lipschitz_metric().unwrap();
    let cfg = VrccdConfig::new(40, 0.3, 0.4, 7, 7, metric, start(6)).with_seed(1).with_diagnostics(true);
    let out = vrccd_run(&q, &Regularizer::Zero, &cfg).unwrap();
    for row in &out.trace.rows {
        assert!(row.estimator_error.unwrap() <= 1e-20, "{row:?}");
    }
}

#[test]
fn sample_counts_follow_the_sharing_rule() {
    let q = quad(9, 16, 6, 3);
    let metric = q.block_lipschitz_metric().unwrap();
    let base = VrccdConfig::new(10, 0.2, 1.0, 8, 2, metric.clone(), start(6)).with_seed(3);
    let fresh = vrccd_run(&q, &Regularizer::Zero, &base).unwrap();
    assert_eq!(fresh.trace.rows[10].samples, 8 + 10 * 3 * 8);
    assert_eq!(fresh.trace.rows[10].work, (8 * 6 + 10 * 8 * 6) as u64);
    let shared = vrccd_run(&q, &Regularizer::Zero, &base.clone().with_sharing(SampleSharing::SharedPerCycle)).unwrap();
    assert_eq!(shared.trace.rows[10].samples, 8 + 10 * 8);
    assert_eq!(shared.trace.rows[10].work, fresh.trace.rows[10].work);
    let mut never = base.clone();
    never.p = 0.0;
    never.allow_large_step = true;
    let rec = vrccd_run(&q, &Regularizer::Zero, &never).unwrap();
    assert_eq!(rec.trace.rows[10].work, (8 * 6 + 10 * 2 * 6) as u64);
}

#[test]
fn shared_sampling_matches_expected_rate() {
    // one coin and one batch per cycle: E[samples per cycle] = p·b + (1 − p)·b'
    let q = quad(10, 64, 4, 2);
    let metric = q.block_lipschitz_metric().unwrap();
    let (b, bp) = (64usize, 8usize);
    let p = bp as f64 / (b + bp) as f64;
    let cycles = 100_000;
    let cfg = VrccdConfig::new(cycles, 0.05, p, b, bp, metric, vec![0.0; 4])
        .with_seed(12)
        .with_sharing(SampleSharing::SharedPerCycle);
    let out = vrccd_run(&q, &Regularizer::Zero, &cfg).unwrap();
    let per_cycle = (out.trace.rows[cycles].samples - b as u64) as f64 / cycles as f64;
    let expected = p * b as f64 + (1.0 - p) * bp as f64;
    assert!((per_cycle / expected - 1.0).abs() < 0.02, "{per_cycle} vs {expected}");
}

#[test]
fn config_validation() {
    let q = quad(11, 4, 4, 2);
    let metric = q.block_lipschitz_metric().unwrap();
    let ok = VrccdConfig::new(5, 0.5, 0.5, 4, 2, metric, vec![0.0; 4]);
    let reg = Regularizer::Zero;
    assert!(vrccd_run(&q, &reg, &VrccdConfig { bprime: 5, ..ok.clone() }).is_err());
    assert!(vrccd_run(&q, &reg, &VrccdConfig { b: 5, bprime: 1, ..ok.clone() }).is_err());
    assert!(vrccd_run(&q, &reg, &VrccdConfig { p: 1.5, ..ok.clone() }).is_err());
    assert!(vrccd_run(&q, &reg, &VrccdConfig { p: 0.0, ..ok.clone() }).is_err());
    assert!(vrccd_run(&q, &reg, &VrccdConfig { eta: 0.0, ..ok.clone() }).is_err());
    assert!(vrccd_run(&q, &reg, &ok.clone().with_eta_bound(0.1, false)).is_err());
    let over = ok.clone().with_eta_bound(0.1, true);
    assert!(over.exceeds_bound());
    assert!(vrccd_run(&q, &reg, &over).is_ok());
    assert!(vrccd_run(&q, &reg, &VrccdConfig { iterations: 0, ..ok }).is_err());
}

#[test]
fn infeasible_start_is_reported() {
    let q = quad(12, 2, 3, 3);
    let metric = q.block_lipschitz_metric().unwrap();
    let reg = Regularizer::Box { lo: -1.0, hi: 1.0 };
    let err = pccd_run(&q, &reg, &PccdConfig::new(3, metric, vec![5.0, 0.0, 0.0])).unwrap_err();
    assert!(matches!(err, Error::NonFinite(0)));
}

#[test]
fn backtracking_run_descends() {
    let s = SigmoidClassification::generate(13, 30, BlockPartition::uniform(6, 3).unwrap(), 1.0).unwrap();
    let out = pccd_run(&s, &Regularizer::L1(0.01), &PccdConfig::backtracking(40, 2.0, 1e-4, vec![0.5; 6])).unwrap();
    for k in 1..=40 {
        let (prev, cur) = (out.trace.objective(k - 1), out.trace.objective(k));
        assert!(cur <= prev - 0.5 * out.trace.step_sq(k) + 1e-12 * prev.abs().max(1.0), "k = {k}");
    }
    assert!(out.metric.diag().iter().all(|&l| l > 1e-4));
}

#[test]
fn runs_are_reproducible_and_stream_rows() {
    let s = SigmoidClassification::generate(14, 50, BlockPartition::uniform(4, 2).unwrap(), 2.0).unwrap();
    let metric = s.curvature_metric().unwrap();
    let cfg = VrccdConfig::new(20, 0.4, 0.3, 10, 3, metric, vec![0.2; 4]).with_seed(5).with_diagnostics(true);
    let mut seen = Vec::new();
    let mut sink = |row: &TraceRow| {
        seen.push(row.k);
        Ok(())
    };
    let a = vrccd_run_with(&s, &Regularizer::Zero, &cfg, Some(&mut sink)).unwrap();
    let b = vrccd_run(&s, &Regularizer::Zero, &cfg).unwrap();
    assert_eq!(a.trace.rows, b.trace.rows);
    assert_eq!(seen, (0..=20).collect::<Vec<_>>());
    assert_eq!(a.output_index, output_index(5, 20));
    let c = vrccd_run(&s, &Regularizer::Zero, &cfg.clone().with_seed(6)).unwrap();
    assert_ne!(a.trace.rows, c.trace.rows);
}

#[test]
fn pccd_returns_first_smallest_step() {
    let q = quad(15, 2, 4, 2);
    let metric = q.block_lipschitz_metric().unwrap();
    let out = pccd_run(&q, &Regularizer::Zero, &PccdConfig::new(50, metric, start(4))).unwrap();
    let steps: Vec<f64> = (1..=50).map(|k| out.trace.step_sq(k)).collect();
    let best = steps.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(out.output_index, 1 + steps.iter().position(|&v| v == best).unwrap());
}

#[test]
fn streaming_runs_without_diagnostics() {
    let s = StreamingObjective::generate_quadratic(16, BlockPartition::uniform(4, 2).unwrap(), 4.0, 0.3, 5000).unwrap();
    let metric = DiagonalMetric::identity(s.partition().clone()).with_partition(s.partition().clone()).unwrap();
    let mut cfg = VrccdConfig::new(30, 0.1, 0.5, 16, 4, metric, vec![1.0; 4]).with_seed(2);
    let out = vrccd_run(&s, &Regularizer::Zero, &cfg).unwrap();
    assert!(out.trace.approximate);
    assert!(out.trace.objective(30) < out.trace.objective(0));
    cfg.record_u = true;
    assert!(vrccd_run(&s, &Regularizer::Zero, &cfg).is_err());
    assert!(matches!(
        pccd_run(
            &s,
            &Regularizer::Zero,
            &PccdConfig::new(2, DiagonalMetric::identity(s.partition().clone()), vec![0.0; 4])
        ),
        Err(Error::RequiresFiniteSum)
    ));
}
