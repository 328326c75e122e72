//! Optimizers: proximal cyclic block coordinate descent, its recursive
//! variance-reduced version (fresh or shared samples), and full-vector
//! baselines with the same trace schema.

mod engine;
mod trace;

pub use engine::SampleSharing;
pub use trace::{composite_value, output_index, stationarity_sq, RunOutput, RunTrace, TraceRow, TraceSink};

use engine::{EngineSpec, Estimator, OutputRule};

use crate::error::{invalid, Result};
use crate::problems::{Objective, Regularizer};
use crate::smoothness::BlockBacktracker;
use crate::DiagonalMetric;

/// Where the block metrics come from.
#[derive(Clone, Debug)]
pub enum MetricSource {
    Fixed(DiagonalMetric),
    /// `Λ_j = L_j·I` with `L_j` raised by `growth` until the block descent
    /// inequality holds at the current step, starting from `init`.
    Backtracking {
        growth: f64,
        init: f64,
    },
}

#[derive(Clone, Debug)]
pub struct PccdConfig {
    pub iterations: usize,
    pub metric: MetricSource,
    /// Prox step scale; the plain method uses 1.
    pub eta: f64,
    pub x0: Vec<f64>,
    pub record_wall_time: bool,
    /// Keep every iterate in [`RunOutput::iterates`].
    pub record_iterates: bool,
}

impl PccdConfig {
    pub fn new(iterations: usize, metric: DiagonalMetric, x0: Vec<f64>) -> Self {
        PccdConfig {
            iterations,
            metric: MetricSource::Fixed(metric),
            eta: 1.0,
            x0,
            record_wall_time: false,
            record_iterates: false,
        }
    }

    pub fn backtracking(iterations: usize, growth: f64, init: f64, x0: Vec<f64>) -> Self {
        PccdConfig {
            iterations,
            metric: MetricSource::Backtracking { growth, init },
            eta: 1.0,
            x0,
            record_wall_time: false,
            record_iterates: false,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_iterates(mut self, on: bool) -> Self {
        self.record_iterates = on;
        self
    }
}

#[derive(Clone, Debug)]
pub struct VrccdConfig {
    pub iterations: usize,
    pub eta: f64,
    /// Probability of a fresh size-`b` minibatch gradient.
    pub p: f64,
    pub b: usize,
    pub bprime: usize,
    pub metric: DiagonalMetric,
    pub x0: Vec<f64>,
    pub sharing: SampleSharing,
    pub seed: u64,
    /// Record `u_k` and the inner residual (costs exact block gradients).
    pub record_u: bool,
    /// Largest admissible step; `eta` above it is rejected unless
    /// `allow_large_step` is set.
    pub eta_bound: Option<f64>,
    pub allow_large_step: bool,
    pub record_wall_time: bool,
    /// Keep every iterate in [`RunOutput::iterates`].
    pub record_iterates: bool,
}

impl VrccdConfig {
    pub fn new(
        iterations: usize,
        eta: f64,
        p: f64,
        b: usize,
        bprime: usize,
        metric: DiagonalMetric,
        x0: Vec<f64>,
    ) -> Self {
        VrccdConfig {
            iterations,
            eta,
            p,
            b,
            bprime,
            metric,
            x0,
            sharing: SampleSharing::FreshPerBlock,
            seed: 0,
            record_u: false,
            eta_bound: None,
            allow_large_step: false,
            record_wall_time: false,
            record_iterates: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sharing(mut self, sharing: SampleSharing) -> Self {
        self.sharing = sharing;
        self
    }

    pub fn with_diagnostics(mut self, record_u: bool) -> Self {
        self.record_u = record_u;
        self
    }

    pub fn with_iterates(mut self, on: bool) -> Self {
        self.record_iterates = on;
        self
    }

    pub fn with_eta_bound(mut self, bound: f64, allow_large_step: bool) -> Self {
        self.eta_bound = Some(bound);
        self.allow_large_step = allow_large_step;
        self
    }

    /// Checks the estimator parameters against an objective.
    ///
    /// `p = 0` is accepted (the estimator never refreshes) but no step size
    /// is admissible then, so it needs `allow_large_step`.
    pub fn validate<O: Objective + ?Sized>(&self, prob: &O) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(invalid(format!("p = {} must lie in (0, 1]", self.p)));
        }
        if self.p == 0.0 && !self.allow_large_step {
            return Err(invalid("p = 0 admits no step size; it needs the step-size override"));
        }
        if self.bprime == 0 || self.bprime > self.b {
            return Err(invalid(format!("need 1 <= b' <= b, got b' = {}, b = {}", self.bprime, self.b)));
        }
        if let Some(n) = prob.components().finite() {
            if self.b > n {
                return Err(invalid(format!("need b <= n, got b = {}, n = {n}", self.b)));
            }
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid(format!("step size {} must be finite and > 0", self.eta)));
        }
        if let Some(bound) = self.eta_bound {
            if self.eta > bound * (1.0 + 1e-12) && !self.allow_large_step {
                return Err(invalid(format!(
                    "step size {} exceeds the admissible bound {bound}; set the override to run anyway",
                    self.eta
                )));
            }
        }
        Ok(())
    }

    /// True when `eta` is above the recorded bound (checks relying on it are void).
    pub fn exceeds_bound(&self) -> bool {
        self.p == 0.0 || self.eta_bound.is_some_and(|b| self.eta > b * (1.0 + 1e-12))
    }
}

fn block_ranges<O: Objective + ?Sized>(prob: &O) -> Vec<std::ops::Range<usize>> {
    prob.partition().ranges().collect()
}

fn fixed_spec<'a, O: Objective + ?Sized>(
    prob: &O,
    cfg: &'a PccdConfig,
    ranges: Vec<std::ops::Range<usize>>,
) -> Result<EngineSpec<'a>> {
    let (metric, backtracking) = match &cfg.metric {
        MetricSource::Fixed(m) => (m.clone(), None),
        MetricSource::Backtracking { growth, init } => {
            if cfg.eta != 1.0 {
                return Err(invalid("backtracking assumes the unit prox step"));
            }
            let bt = BlockBacktracker::new(ranges.len(), *growth, *init)?;
            let metric = DiagonalMetric::new(vec![*init; prob.dim()], prob.partition().clone())?;
            (metric, Some(bt))
        }
    };
    Ok(EngineSpec {
        ranges,
        iterations: cfg.iterations,
        eta: cfg.eta,
        metric,
        backtracking,
        estimator: Estimator::Exact,
        record_u: false,
        output: OutputRule::SmallestStep,
        x0: &cfg.x0,
        record_wall_time: cfg.record_wall_time,
        record_iterates: cfg.record_iterates,
    })
}

/// Proximal cyclic block coordinate descent. Returns the first iterate with
/// the smallest `‖x_k − x_{k−1}‖_Λ`.
pub fn pccd_run<O: Objective + ?Sized>(prob: &O, reg: &Regularizer, cfg: &PccdConfig) -> Result<RunOutput> {
    pccd_run_with(prob, reg, cfg, None)
}

pub fn pccd_run_with<O: Objective + ?Sized>(
    prob: &O,
    reg: &Regularizer,
    cfg: &PccdConfig,
    sink: Option<TraceSink<'_>>,
) -> Result<RunOutput> {
    let spec = fixed_spec(prob, cfg, block_ranges(prob))?;
    engine::run(prob, reg, spec, sink)
}

fn vr_spec<'a, O: Objective + ?Sized>(
    prob: &O,
    cfg: &'a VrccdConfig,
    ranges: Vec<std::ops::Range<usize>>,
) -> Result<EngineSpec<'a>> {
    cfg.validate(prob)?;
    Ok(EngineSpec {
        ranges,
        iterations: cfg.iterations,
        eta: cfg.eta,
        metric: cfg.metric.clone(),
        backtracking: None,
        estimator: Estimator::Recursive {
            p: cfg.p,
            b: cfg.b,
            bprime: cfg.bprime,
            sharing: cfg.sharing,
            seed: cfg.seed,
        },
        record_u: cfg.record_u,
        output: OutputRule::Uniform(output_index(cfg.seed, cfg.iterations.max(1))),
        x0: &cfg.x0,
        record_wall_time: cfg.record_wall_time,
        record_iterates: cfg.record_iterates,
    })
}

/// Variance-reduced cyclic block coordinate descent. Returns an iterate drawn
/// uniformly from `x_1..x_K`.
pub fn vrccd_run<O: Objective + ?Sized>(prob: &O, reg: &Regularizer, cfg: &VrccdConfig) -> Result<RunOutput> {
    vrccd_run_with(prob, reg, cfg, None)
}

pub fn vrccd_run_with<O: Objective + ?Sized>(
    prob: &O,
    reg: &Regularizer,
    cfg: &VrccdConfig,
    sink: Option<TraceSink<'_>>,
) -> Result<RunOutput> {
    let spec = vr_spec(prob, cfg, block_ranges(prob))?;
    engine::run(prob, reg, spec, sink)
}

/// Cyclic minibatch SGD: the variance-reduced method with `p = 1`.
pub fn sccd_run<O: Objective + ?Sized>(prob: &O, reg: &Regularizer, cfg: &VrccdConfig) -> Result<RunOutput> {
    let cfg = VrccdConfig { p: 1.0, bprime: cfg.bprime.min(cfg.b), ..cfg.clone() };
    vrccd_run(prob, reg, &cfg)
}

/// Proximal gradient descent: every coordinate updated at once from the
/// gradient at `x_{k−1}`.
pub fn baseline_prox_gd<O: Objective + ?Sized>(prob: &O, reg: &Regularizer, cfg: &PccdConfig) -> Result<RunOutput> {
    baseline_prox_gd_with(prob, reg, cfg, None)
}

pub fn baseline_prox_gd_with<O: Objective + ?Sized>(
    prob: &O,
    reg: &Regularizer,
    cfg: &PccdConfig,
    sink: Option<TraceSink<'_>>,
) -> Result<RunOutput> {
    if matches!(cfg.metric, MetricSource::Backtracking { .. }) {
        return Err(invalid("the full-vector baseline takes a fixed metric"));
    }
    let spec = fixed_spec(prob, cfg, vec![0..prob.dim()])?;
    engine::run(prob, reg, spec, sink)
}

/// PAGE: one recursive estimator for the whole gradient vector.
pub fn baseline_page<O: Objective + ?Sized>(prob: &O, reg: &Regularizer, cfg: &VrccdConfig) -> Result<RunOutput> {
    baseline_page_with(prob, reg, cfg, None)
}

pub fn baseline_page_with<O: Objective + ?Sized>(
    prob: &O,
    reg: &Regularizer,
    cfg: &VrccdConfig,
    sink: Option<TraceSink<'_>>,
) -> Result<RunOutput> {
    let spec = vr_spec(prob, cfg, vec![0..prob.dim()])?;
    engine::run(prob, reg, spec, sink)
}

/// Minibatch proximal SGD: PAGE with `p = 1`.
pub fn baseline_sgd<O: Objective + ?Sized>(prob: &O, reg: &Regularizer, cfg: &VrccdConfig) -> Result<RunOutput> {
    let cfg = VrccdConfig { p: 1.0, bprime: cfg.bprime.min(cfg.b), ..cfg.clone() };
    baseline_page(prob, reg, &cfg)
}

#[cfg(test)]
mod tests;
