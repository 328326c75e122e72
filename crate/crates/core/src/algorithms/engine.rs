//! One loop for every method: a sweep over coordinate ranges, each updated
//! by a metric prox step on a gradient estimate. Cyclic methods sweep the
//! blocks of the partition; full-vector methods sweep a single range.

use std::ops::Range;

use super::trace::{
    composite_value, prox_residual, step_norm_sq, sum_norm_sq, Clock, RunOutput, RunTrace, TraceRow, TraceSink,
};
use crate::error::{invalid, Error, Result};
use crate::problems::{Components, Objective, Regularizer};
use crate::sampling::{bernoulli_switch, draw_batch, Branch, RngStream, StreamId};
use crate::smoothness::BlockBacktracker;
use crate::DiagonalMetric;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleSharing {
    /// New coin and minibatch for every block.
    FreshPerBlock,
    /// One coin and minibatch per cycle, reused by all blocks.
    SharedPerCycle,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Estimator {
    Exact,
    Recursive { p: f64, b: usize, bprime: usize, sharing: SampleSharing, seed: u64 },
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum OutputRule {
    /// First `k` minimizing `v_k`.
    SmallestStep,
    /// Uniform over `1..=K`, drawn up front.
    Uniform(usize),
}

pub(crate) struct EngineSpec<'a> {
    pub ranges: Vec<Range<usize>>,
    pub iterations: usize,
    pub eta: f64,
    pub metric: DiagonalMetric,
    pub backtracking: Option<BlockBacktracker>,
    pub estimator: Estimator,
    pub record_u: bool,
    pub output: OutputRule,
    pub x0: &'a [f64],
    pub record_wall_time: bool,
    pub record_iterates: bool,
}

fn finite_components<O: Objective + ?Sized>(prob: &O) -> Result<usize> {
    prob.components().finite().ok_or(Error::RequiresFiniteSum)
}

pub(crate) fn run<O: Objective + ?Sized>(
    prob: &O,
    reg: &Regularizer,
    spec: EngineSpec<'_>,
    mut sink: Option<TraceSink<'_>>,
) -> Result<RunOutput> {
    let d = prob.dim();
    prob.partition().check_len(spec.x0)?;
    if spec.metric.partition().dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: spec.metric.partition().dim() });
    }
    reg.validate()?;
    if spec.iterations == 0 {
        return Err(invalid("the number of iterations must be at least 1"));
    }
    if !(spec.eta > 0.0 && spec.eta.is_finite()) {
        return Err(invalid(format!("step size {} must be finite and > 0", spec.eta)));
    }
    let components = prob.components();
    if spec.record_u && components == Components::Streaming {
        return Err(invalid(
            "estimator-error recording needs exact gradients; it is unavailable for streaming objectives",
        ));
    }
    let exact_n = match spec.estimator {
        Estimator::Exact => Some(finite_components(prob)?),
        Estimator::Recursive { .. } => None,
    };

    let clock = Clock::new(spec.record_wall_time);
    let mut diag = spec.metric.diag().to_vec();
    let mut backtracker = spec.backtracking;
    if let Some(bt) = &backtracker {
        for (j, r) in spec.ranges.iter().enumerate() {
            diag[r.clone()].fill(bt.estimate(j));
        }
    }
    let mut switch = RngStream::new(0, StreamId::Switch);
    let mut batches = RngStream::new(0, StreamId::Batch);
    let mut x = spec.x0.to_vec();
    let mut g = vec![0.0; d];
    let mut exact = vec![0.0; d];
    let mut residual = vec![0.0; d];
    let mut diff = vec![0.0; d];
    let mut new_block = vec![0.0; d];
    let mut lagged = x.clone();
    let (mut samples, mut work) = (0u64, 0u64);

    let f0 = composite_value(prob, reg, &x);
    if !f0.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let mut u0 = None;
    if let Estimator::Recursive { b, seed, .. } = spec.estimator {
        switch = RngStream::new(seed, StreamId::Switch);
        batches = RngStream::new(seed, StreamId::Batch);
        let batch = draw_batch(batches.rng(), components, b)?;
        prob.minibatch_grad_range(&batch, 0..d, &x, &mut g);
        samples += batch.len() as u64;
        work += (batch.len() * d) as u64;
        if spec.record_u {
            prob.grad_range(0..d, &x, &mut exact);
            u0 = Some(sum_norm_sq(&g, &exact, &diag, -1.0));
        }
    }

    let mut trace = RunTrace { rows: Vec::with_capacity(spec.iterations + 1), approximate: !prob.is_exact() };
    let row0 = TraceRow {
        k: 0,
        objective: f0,
        stationarity: None,
        step_sq: 0.0,
        estimator_error: u0,
        inner_residual: None,
        samples,
        work,
        wall_ns: clock.elapsed_ns(),
    };
    if let Some(s) = sink.as_mut() {
        s(&row0)?;
    }
    trace.rows.push(row0);
    let mut iterates = Vec::new();
    if spec.record_iterates {
        iterates.push(x.clone());
    }

    let target = match spec.output {
        OutputRule::Uniform(k) => Some(k),
        OutputRule::SmallestStep => None,
    };
    let mut chosen = (f64::INFINITY, 0usize, x.clone());
    let mut prev = x.clone();

    for k in 1..=spec.iterations {
        prev.copy_from_slice(&x);
        let mut cycle_draw: Option<(Branch, Vec<usize>)> = None;
        if let Estimator::Recursive { p, b, bprime, sharing: SampleSharing::SharedPerCycle, .. } = spec.estimator {
            let branch = bernoulli_switch(switch.rng(), p)?;
            let size = if branch == Branch::FullBatch { b } else { bprime };
            let batch = draw_batch(batches.rng(), components, size)?;
            samples += batch.len() as u64;
            cycle_draw = Some((branch, batch));
        }
        for (j, range) in spec.ranges.iter().enumerate() {
            let range = range.clone();
            let dj = range.len();
            match spec.estimator {
                Estimator::Exact => {
                    prob.grad_range(range.clone(), &x, &mut g[range.clone()]);
                    let n = exact_n.unwrap_or(0);
                    samples += n as u64;
                    work += (n * dj) as u64;
                }
                Estimator::Recursive { p, b, bprime, sharing, .. } => {
                    let fresh;
                    let (branch, batch) = match sharing {
                        SampleSharing::SharedPerCycle => {
                            let (br, bt) = cycle_draw.as_ref().expect("drawn at cycle start");
                            (*br, bt.as_slice())
                        }
                        SampleSharing::FreshPerBlock => {
                            let br = bernoulli_switch(switch.rng(), p)?;
                            let size = if br == Branch::FullBatch { b } else { bprime };
                            fresh = draw_batch(batches.rng(), components, size)?;
                            samples += fresh.len() as u64;
                            (br, fresh.as_slice())
                        }
                    };
                    work += (batch.len() * dj) as u64;
                    match branch {
                        Branch::FullBatch => prob.minibatch_grad_range(batch, range.clone(), &x, &mut g[range.clone()]),
                        Branch::Recursive => {
                            prob.minibatch_diff_range(batch, range.clone(), &x, &lagged, &mut diff[range.clone()]);
                            for t in range.clone() {
                                g[t] += diff[t];
                            }
                        }
                    }
                }
            }
            if spec.record_u {
                prob.grad_range(range.clone(), &x, &mut exact[range.clone()]);
            }
            match backtracker.as_mut() {
                Some(bt) => {
                    let block = bt.step(prob, reg, j, &x, &g[range.clone()])?;
                    new_block[range.clone()].copy_from_slice(&block);
                    diag[range.clone()].fill(bt.estimate(j));
                }
                None => reg.prox_into(
                    j,
                    &x[range.clone()],
                    &g[range.clone()],
                    spec.eta,
                    &diag[range.clone()],
                    &mut new_block[range.clone()],
                ),
            }
            prox_residual(
                &x[range.clone()],
                &new_block[range.clone()],
                &diag[range.clone()],
                spec.eta,
                &g[range.clone()],
                &mut residual[range.clone()],
            );
            lagged[range.clone()].copy_from_slice(&x[range.clone()]);
            x[range.clone()].copy_from_slice(&new_block[range.clone()]);
        }

        let objective = composite_value(prob, reg, &x);
        if !objective.is_finite() {
            return Err(Error::NonFinite(k));
        }
        let step_sq = step_norm_sq(&x, &prev, &diag);
        let grad_now = prob.full_grad(&x);
        let stationarity = sum_norm_sq(&grad_now, &residual, &diag, 1.0);
        let (estimator_error, inner_residual) = match spec.estimator {
            Estimator::Exact => (None, Some(sum_norm_sq(&g, &residual, &diag, 1.0))),
            Estimator::Recursive { .. } if spec.record_u => {
                (Some(sum_norm_sq(&g, &exact, &diag, -1.0)), Some(sum_norm_sq(&exact, &residual, &diag, 1.0)))
            }
            Estimator::Recursive { .. } => (None, None),
        };
        let row = TraceRow {
            k,
            objective,
            stationarity: Some(stationarity),
            step_sq,
            estimator_error,
            inner_residual,
            samples,
            work,
            wall_ns: clock.elapsed_ns(),
        };
        if let Some(s) = sink.as_mut() {
            s(&row)?;
        }
        trace.rows.push(row);
        if spec.record_iterates {
            iterates.push(x.clone());
        }
        match target {
            Some(t) if t == k => chosen = (step_sq, k, x.clone()),
            Some(_) => {}
            None if step_sq < chosen.0 => chosen = (step_sq, k, x.clone()),
            None => {}
        }
    }
    let metric = DiagonalMetric::new(diag, spec.metric.partition().clone())?;
    Ok(RunOutput { x: chosen.2, output_index: chosen.1, last: x, trace, metric, iterates })
}
