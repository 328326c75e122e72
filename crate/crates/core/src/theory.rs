//! Executable checks of the convergence guarantees: pathwise inequalities on
//! single traces, Monte Carlo checks of the in-expectation rates, and the
//! parameter schedules those rates prescribe.

use std::fmt::Write as _;
use std::io::Write;

use crate::algorithms::RunTrace;
use crate::error::{invalid, Error, Result};
use crate::problems::{Components, Objective, Regularizer};
use crate::smoothness::{step_size, EstimatorParams, StepSizeMode};

/// One-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.326_347_874_040_841;

/// Seed count below which a Monte Carlo report is flagged as low-power.
pub const MIN_SEEDS: usize = 30;

/// Cycle count below which a cost report is flagged as low-power.
pub const MIN_COST_CYCLES: usize = 10_000;

/// Default relative tolerance on a bound.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Absolute tolerance allowed on a bound with right-hand side `rhs`.
pub fn bound_tolerance(rel_tol: f64, rhs: f64) -> f64 {
    rel_tol * rhs.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// Holds on every realization; any violation is a hard failure.
    Pathwise,
    /// Holds in expectation; checked as sample mean against bound plus CI.
    InExpectation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundPoint {
    pub k: usize,
    pub lhs: f64,
    /// Bound value, including any confidence allowance.
    pub rhs: f64,
}

impl BoundPoint {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn passes(&self, rel_tol: f64) -> bool {
        self.slack() >= -bound_tolerance(rel_tol, self.rhs)
    }
}

/// Outcome of one bound over a range of iterations.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub name: String,
    pub kind: BoundKind,
    pub points: Vec<BoundPoint>,
    /// Violations up to `rel_tol·max(1, |rhs|)` are forgiven; 0 makes the
    /// comparison exact.
    pub rel_tol: f64,
    /// Conditions the verdict depends on, e.g. supplied constants.
    pub flags: Vec<String>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, kind: BoundKind) -> Self {
        BoundReport { name: name.into(), kind, points: Vec::new(), rel_tol: DEFAULT_REL_TOL, flags: Vec::new() }
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn point_passes(&self, p: &BoundPoint) -> bool {
        p.passes(self.rel_tol)
    }

    pub fn push(&mut self, k: usize, lhs: f64, rhs: f64) {
        self.points.push(BoundPoint { k, lhs, rhs });
    }

    pub fn flag(&mut self, note: impl Into<String>) {
        let note = note.into();
        if !self.flags.contains(&note) {
            self.flags.push(note);
        }
    }

    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| !p.passes(self.rel_tol)).count()
    }

    pub fn passed(&self) -> bool {
        self.failures() == 0
    }

    /// Point with the smallest slack relative to its tolerance.
    pub fn tightest(&self) -> Option<BoundPoint> {
        self.points
            .iter()
            .copied()
            .min_by(|a, b| (a.slack() / a.rhs.abs().max(1.0)).total_cmp(&(b.slack() / b.rhs.abs().max(1.0))))
    }

    pub fn merge(&mut self, other: BoundReport) {
        self.points.extend(other.points);
        for f in other.flags {
            self.flag(f);
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.passed() {
            "pass"
        } else {
            "fail"
        }
    }

    /// One summary line.
    pub fn summary(&self) -> String {
        let mut line =
            format!("{}: {} ({} points, {} violations", self.name, self.verdict(), self.points.len(), self.failures());
        if let Some(t) = self.tightest() {
            write!(line, ", tightest k={} lhs={:.6e} rhs={:.6e}", t.k, t.lhs, t.rhs).unwrap();
        }
        line.push(')');
        if !self.flags.is_empty() {
            write!(line, " [{}]", self.flags.join("; ")).unwrap();
        }
        line
    }

    /// Line-oriented report: the summary, then one line per violation.
    pub fn to_text(&self) -> String {
        let mut out = self.summary();
        out.push('\n');
        for p in self.points.iter().filter(|p| !p.passes(self.rel_tol)) {
            writeln!(out, "  violation k={} lhs={:.17e} rhs={:.17e} slack={:.3e}", p.k, p.lhs, p.rhs, p.slack())
                .unwrap();
        }
        out
    }
}

pub const REPORT_CSV_HEADER: &str = "bound_name,k,lhs,rhs,slack,verdict";

pub fn write_reports_csv<W: Write>(reports: &[BoundReport], mut w: W) -> Result<()> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        for p in &r.points {
            let verdict = if r.point_passes(p) { "pass" } else { "fail" };
            writeln!(w, "{},{},{:.17e},{:.17e},{:.17e},{}", r.name, p.k, p.lhs, p.rhs, p.slack(), verdict)?;
        }
    }
    Ok(())
}

/// How `F★` (and so `Δ0`) was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimumSource {
    /// Closed form.
    Exact(f64),
    /// A certified lower bound on `F★`.
    LowerBound(f64),
    /// Best value found by a long run; may exceed `F★`, so verdicts that
    /// use it are conditional.
    Estimated(f64),
}

impl OptimumSource {
    pub fn value(self) -> f64 {
        match self {
            OptimumSource::Exact(v) | OptimumSource::LowerBound(v) | OptimumSource::Estimated(v) => v,
        }
    }

    pub fn annotate(self, report: &mut BoundReport) {
        match self {
            OptimumSource::Exact(_) => {}
            OptimumSource::LowerBound(_) => report.flag("optimal value replaced by a certified lower bound"),
            OptimumSource::Estimated(_) => report.flag("optimal value estimated by a long run; verdict conditional"),
        }
    }
}

/// Lower bound `F(x) − dist²(∂F(x), 0)/(2σ)` on `F★`, valid when `F` is
/// `σ`-strongly convex in the Euclidean norm.
pub fn certified_lower_bound<O: Objective + ?Sized>(
    prob: &O,
    reg: &Regularizer,
    x: &[f64],
    strong_convexity: f64,
) -> Result<f64> {
    if !(strong_convexity > 0.0) {
        return Err(invalid("strong convexity modulus must be > 0"));
    }
    let g = prob.full_grad(x);
    let dist_sq = reg.min_residual_sq(x, &g, &vec![1.0; x.len()]);
    Ok(prob.value(x) + reg.value(x, prob.partition()) - dist_sq / (2.0 * strong_convexity))
}

fn require(trace: &RunTrace, what: &str, present: impl Fn(usize) -> bool) -> Result<()> {
    if trace.cycles() == 0 {
        return Err(invalid("trace has no cycles"));
    }
    if (1..=trace.cycles()).all(present) {
        Ok(())
    } else {
        Err(invalid(format!("trace lacks {what}; rerun with diagnostics enabled")))
    }
}

fn tag_approximate(trace: &RunTrace, report: &mut BoundReport) {
    if trace.approximate {
        report.flag("values from a large-sample surrogate");
    }
}

/// `F(x_k) ≤ F(x_{k−1}) − ½ v_k` at every cycle.
pub fn check_descent(trace: &RunTrace) -> Result<BoundReport> {
    require(trace, "cycles", |_| true)?;
    let mut r = BoundReport::new("pccd_descent", BoundKind::Pathwise);
    for k in 1..=trace.cycles() {
        r.push(k, trace.objective(k) + 0.5 * trace.step_sq(k), trace.objective(k - 1));
    }
    tag_approximate(trace, &mut r);
    Ok(r)
}

/// `s_k ≤ 2(L̂ + 1) v_k` for the cyclic method with unit step.
pub fn check_lemma2(trace: &RunTrace, l_hat: f64) -> Result<BoundReport> {
    require(trace, "stationarity", |k| trace.rows[k].stationarity.is_some())?;
    let mut r = BoundReport::new("pccd_stationarity_vs_step", BoundKind::Pathwise);
    for k in 1..=trace.cycles() {
        r.push(k, trace.stationarity(k), 2.0 * (l_hat + 1.0) * trace.step_sq(k));
    }
    Ok(r)
}

/// `Σ_{i≤k} v_i ≤ 2Δ0` for every prefix.
pub fn check_lemma3(trace: &RunTrace, optimum: OptimumSource) -> Result<BoundReport> {
    require(trace, "cycles", |_| true)?;
    let delta0 = trace.objective(0) - optimum.value();
    let mut r = BoundReport::new("pccd_step_sum", BoundKind::Pathwise);
    let mut total = 0.0;
    for k in 1..=trace.cycles() {
        total += trace.step_sq(k);
        r.push(k, total, 2.0 * delta0);
    }
    optimum.annotate(&mut r);
    Ok(r)
}

/// `min_{k≤K} s_k ≤ 4(L̂ + 1)Δ0 / K` for every `K`.
pub fn check_theorem1(trace: &RunTrace, l_hat: f64, optimum: OptimumSource) -> Result<BoundReport> {
    require(trace, "stationarity", |k| trace.rows[k].stationarity.is_some())?;
    let delta0 = trace.objective(0) - optimum.value();
    let mut r = BoundReport::new("pccd_min_stationarity_rate", BoundKind::Pathwise);
    let mut best = f64::INFINITY;
    for k in 1..=trace.cycles() {
        best = best.min(trace.stationarity(k));
        r.push(k, best, 4.0 * (l_hat + 1.0) * delta0 / k as f64);
    }
    optimum.annotate(&mut r);
    Ok(r)
}

/// `gap_k ≤ (2(L̂+1)/(2(L̂+1)+μ))^k · gap_0` where `gaps[k] = F(x_k) − F★`.
pub fn check_corollary1_pl(gaps: &[f64], l_hat: f64, mu: f64) -> Result<BoundReport> {
    if !(mu > 0.0) {
        return Err(invalid(format!("PŁ constant {mu} must be > 0")));
    }
    if gaps.len() < 2 {
        return Err(invalid("need at least one cycle"));
    }
    let ratio = 2.0 * (l_hat + 1.0) / (2.0 * (l_hat + 1.0) + mu);
    let mut r = BoundReport::new("pccd_pl_linear_rate", BoundKind::Pathwise);
    for (k, gap) in gaps.iter().enumerate().skip(1) {
        r.push(k, *gap, ratio.powi(k as i32) * gaps[0]);
    }
    Ok(r)
}

/// Per-cycle descent of the variance-reduced method with the realized
/// estimator error: `F_k ≤ F_{k−1} − ((1−η)/(2η))v_k + (η/2)u_k − (η/2)·inner_k`.
pub fn check_lemma5(trace: &RunTrace, eta: f64) -> Result<BoundReport> {
    require(trace, "estimator error", |k| {
        trace.rows[k].estimator_error.is_some() && trace.rows[k].inner_residual.is_some()
    })?;
    let mut r = BoundReport::new("vr_descent", BoundKind::Pathwise);
    for k in 1..=trace.cycles() {
        let row = &trace.rows[k];
        let rhs = trace.objective(k - 1) - (1.0 - eta) / (2.0 * eta) * row.step_sq
            + 0.5 * eta * row.estimator_error.unwrap()
            - 0.5 * eta * row.inner_residual.unwrap();
        r.push(k, row.objective, rhs);
    }
    Ok(r)
}

/// `s_k ≤ 2L̂ v_k + 2·inner_k`.
pub fn check_lemma6(trace: &RunTrace, l_hat: f64) -> Result<BoundReport> {
    require(trace, "inner residual", |k| trace.rows[k].inner_residual.is_some())?;
    let mut r = BoundReport::new("vr_stationarity_vs_step", BoundKind::Pathwise);
    for k in 1..=trace.cycles() {
        let row = &trace.rows[k];
        r.push(k, trace.stationarity(k), 2.0 * l_hat * row.step_sq + 2.0 * row.inner_residual.unwrap());
    }
    Ok(r)
}

/// Parameters of the potential `Φ_k = F_k + ((1−p)η/(2p))u_k + ((1−p)L̂η/(pb′))v_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialParams {
    pub eta: f64,
    pub p: f64,
    pub bprime: usize,
    pub l_hat: f64,
    /// `(n − b)/(b(n − 1))`.
    pub variance_factor: f64,
    pub sigma_sq: f64,
}

impl PotentialParams {
    fn potential(&self, trace: &RunTrace, k: usize) -> f64 {
        let row = &trace.rows[k];
        let q = (1.0 - self.p) / self.p;
        row.objective
            + q * self.eta / 2.0 * row.estimator_error.unwrap_or(0.0)
            + q * self.l_hat * self.eta / self.bprime as f64 * row.step_sq
    }

    /// `(η/4)s_k + Φ_k − Φ_{k−1}` on one trace.
    pub fn increment(&self, trace: &RunTrace, k: usize) -> f64 {
        self.eta / 4.0 * trace.stationarity(k) + self.potential(trace, k) - self.potential(trace, k - 1)
    }

    pub fn noise_floor(&self) -> f64 {
        self.variance_factor * self.sigma_sq * self.eta
    }
}

/// Pathwise version of the potential inequality; holds on every
/// realization when the estimator is exact (`b = b′ = n`).
pub fn check_potential_pathwise(trace: &RunTrace, params: &PotentialParams) -> Result<BoundReport> {
    require(trace, "estimator error", |k| trace.rows[k].estimator_error.is_some())?;
    if trace.rows[0].estimator_error.is_none() {
        return Err(invalid("trace lacks the initial estimator error"));
    }
    let mut r = BoundReport::new("vr_potential_pathwise", BoundKind::Pathwise);
    for k in 1..=trace.cycles() {
        let lhs = params.eta / 4.0 * trace.stationarity(k) + params.potential(trace, k);
        r.push(k, lhs, params.potential(trace, k - 1) + params.noise_floor());
    }
    Ok(r)
}

/// Sample mean and standard deviation (`n − 1` denominator).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One-sided 99% normal-approximation allowance for a sample mean.
pub fn ci_allowance(values: &[f64]) -> f64 {
    let (_, sd) = mean_sd(values);
    Z_99 * sd / (values.len() as f64).sqrt()
}

fn flag_power(report: &mut BoundReport, seeds: usize) {
    if seeds < MIN_SEEDS {
        report.flag(format!("low power: {seeds} seeds"));
    }
}

/// Seed-averaged potential inequality: for each `k`, the mean over runs of
/// `(η/4)s_k + Φ_k − Φ_{k−1}` against the noise floor plus a one-sided 99%
/// allowance on that mean.
pub fn check_potential_mean(traces: &[RunTrace], params: &PotentialParams) -> Result<BoundReport> {
    if traces.is_empty() {
        return Err(invalid("no traces"));
    }
    for t in traces {
        require(t, "estimator error", |k| t.rows[k].estimator_error.is_some())?;
    }
    let cycles = traces.iter().map(|t| t.cycles()).min().unwrap_or(0);
    let mut r = BoundReport::new("vr_potential_mean", BoundKind::InExpectation);
    for k in 1..=cycles {
        let inc: Vec<f64> = traces.iter().map(|t| params.increment(t, k)).collect();
        let (mean, _) = mean_sd(&inc);
        r.push(k, mean, params.noise_floor() + ci_allowance(&inc));
    }
    flag_power(&mut r, traces.len());
    Ok(r)
}

/// Inputs of the in-expectation rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams {
    pub eta: f64,
    pub p: f64,
    /// `(n − b)/(b(n − 1))`, or `1/b` for a streaming objective.
    pub variance_factor: f64,
    pub sigma_sq: f64,
    pub delta0: f64,
}

/// `4Δ0/(ηK) + 2(1−p)·vf·σ²/(pK) + 4·vf·σ²`.
pub fn theorem3_rhs(params: &RateParams, iterations: usize) -> f64 {
    let k = iterations as f64;
    let noise = params.variance_factor * params.sigma_sq;
    4.0 * params.delta0 / (params.eta * k) + 2.0 * (1.0 - params.p) * noise / (params.p * k) + 4.0 * noise
}

/// Mean of `s(x̂_K)` over seeds against the rate plus a 99% allowance.
pub fn check_theorem3_rate(samples: &[f64], iterations: usize, params: &RateParams) -> Result<BoundReport> {
    if samples.is_empty() {
        return Err(invalid("no samples"));
    }
    let mut r = BoundReport::new(format!("vr_rate_K{iterations}"), BoundKind::InExpectation);
    let (mean, _) = mean_sd(samples);
    r.push(iterations, mean, theorem3_rhs(params, iterations) + ci_allowance(samples));
    flag_power(&mut r, samples.len());
    Ok(r)
}

/// `(1 + ημ/2)^{−K}(Δ0 + σ²η(1−p)vf/p) + 4·vf·σ²/μ`.
pub fn corollary4_rhs(params: &RateParams, mu: f64, iterations: usize) -> f64 {
    let noise = params.variance_factor * params.sigma_sq;
    (1.0 + params.eta * mu / 2.0).powi(-(iterations as i32))
        * (params.delta0 + noise * params.eta * (1.0 - params.p) / params.p)
        + 4.0 * noise / mu
}

/// Mean final optimality gap over seeds against the PŁ rate plus allowance.
pub fn check_corollary4_pl_rate(gaps: &[f64], iterations: usize, mu: f64, params: &RateParams) -> Result<BoundReport> {
    if !(mu > 0.0) {
        return Err(invalid(format!("PŁ constant {mu} must be > 0")));
    }
    if gaps.is_empty() {
        return Err(invalid("no samples"));
    }
    let mut r = BoundReport::new(format!("vr_pl_rate_K{iterations}"), BoundKind::InExpectation);
    let (mean, _) = mean_sd(gaps);
    r.push(iterations, mean, corollary4_rhs(params, mu, iterations) + ci_allowance(gaps));
    flag_power(&mut r, gaps.len());
    Ok(r)
}

/// Expected work per cycle, `(p·b + (1 − p)·b′)·d`.
pub fn expected_cycle_work(p: f64, b: usize, bprime: usize, d: usize) -> f64 {
    (p * b as f64 + (1.0 - p) * bprime as f64) * d as f64
}

/// Mean per-cycle work (excluding the initial minibatch) against its
/// expectation: relative deviation at most 2%, exact when `p ∈ {0, 1}`.
pub fn check_arith_cost(trace: &RunTrace, p: f64, b: usize, bprime: usize, d: usize) -> Result<BoundReport> {
    check_arith_cost_pooled(std::slice::from_ref(trace), p, b, bprime, d)
}

/// [`check_arith_cost`] with the cycles of several runs pooled.
pub fn check_arith_cost_pooled(traces: &[RunTrace], p: f64, b: usize, bprime: usize, d: usize) -> Result<BoundReport> {
    if traces.is_empty() {
        return Err(invalid("no traces"));
    }
    let (mut spent, mut cycles) = (0u64, 0usize);
    for trace in traces {
        require(trace, "cycles", |_| true)?;
        let last = trace.cycles();
        spent += trace.rows[last].work - trace.rows[0].work;
        cycles += last;
    }
    let expected = expected_cycle_work(p, b, bprime, d);
    let mut r = BoundReport::new("vr_cycle_work", BoundKind::InExpectation).with_tolerance(0.0);
    let deviation = (spent as f64 / cycles as f64 / expected - 1.0).abs();
    let allowed = if p == 0.0 || p == 1.0 { 1e-12 } else { 0.02 };
    r.push(cycles, deviation, allowed);
    if cycles < MIN_COST_CYCLES && allowed > 0.0 {
        r.flag(format!("low power: {cycles} cycles"));
    }
    Ok(r)
}

/// Parameters prescribed by a complexity corollary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub b: usize,
    pub bprime: usize,
    pub p: f64,
    pub eta: f64,
    pub iterations: usize,
}

fn sqrt_batch(b: usize) -> usize {
    ((b as f64).sqrt().round() as usize).clamp(1, b)
}

fn batch_and_step(
    components: Components,
    b: usize,
    l_hat: f64,
    l_tilde: f64,
    mode: StepSizeMode,
) -> Result<(usize, f64, f64)> {
    let bprime = sqrt_batch(b);
    let p = bprime as f64 / (b + bprime) as f64;
    let plan = step_size(l_hat, l_tilde, EstimatorParams { p, b, bprime, components }, mode)?;
    Ok((bprime, p, plan.eta))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {v} must be finite and > 0")))
    }
}

/// Finite sum, target `E[s(x̂_K)] ≤ ε²`: `b = n`, `b′ = √n`,
/// `p = b′/(b + b′)`, `K = ⌈4Δ0/(ε²η)⌉`.
pub fn finite_sum_schedule(n: usize, l_hat: f64, l_tilde: f64, delta0: f64, eps: f64) -> Result<Schedule> {
    positive("eps", eps)?;
    let (bprime, p, eta) = batch_and_step(Components::Finite(n), n, l_hat, l_tilde, StepSizeMode::Theorem3)?;
    let iterations = (4.0 * delta0.max(0.0) / (eps * eps * eta)).ceil().max(1.0) as usize;
    Ok(Schedule { b: n, bprime, p, eta, iterations })
}

fn capped_batch(components: Components, want: f64) -> Result<usize> {
    if !want.is_finite() {
        return Err(Error::InvalidParameter("batch size is not finite".into()));
    }
    let want = (want.ceil() as usize).max(1);
    Ok(match components {
        Components::Finite(n) => want.min(n),
        Components::Streaming => want,
    })
}

/// General (possibly streaming) case, target `ε²`: `b = min(⌈12σ²/ε²⌉, n)`,
/// `b′ = √b`, `K = ⌈12Δ0/(ε²η) + 1/(2p)⌉`.
pub fn infinite_sum_schedule(
    components: Components,
    sigma_sq: f64,
    l_hat: f64,
    l_tilde: f64,
    delta0: f64,
    eps: f64,
) -> Result<Schedule> {
    positive("eps", eps)?;
    let b = capped_batch(components, 12.0 * sigma_sq / (eps * eps))?;
    let (bprime, p, eta) = batch_and_step(components, b, l_hat, l_tilde, StepSizeMode::Theorem3)?;
    let iterations = (12.0 * delta0.max(0.0) / (eps * eps * eta) + 1.0 / (2.0 * p)).ceil().max(1.0) as usize;
    Ok(Schedule { b, bprime, p, eta, iterations })
}

fn pl_iterations(eta: f64, mu: f64, ratio: f64) -> usize {
    ((1.0 + 2.0 / (eta * mu)) * ratio.max(1.0).ln()).ceil().max(1.0) as usize
}

/// Finite sum under PŁ, target gap `ε`: `b = n`, `b′ = √n`,
/// `K = ⌈(1 + 2/(ημ)) log(Δ0/ε)⌉`.
pub fn finite_sum_pl_schedule(n: usize, l_hat: f64, l_tilde: f64, mu: f64, delta0: f64, eps: f64) -> Result<Schedule> {
    positive("eps", eps)?;
    let (bprime, p, eta) = batch_and_step(Components::Finite(n), n, l_hat, l_tilde, StepSizeMode::Pl { mu })?;
    Ok(Schedule { b: n, bprime, p, eta, iterations: pl_iterations(eta, mu, delta0 / eps) })
}

/// General case under PŁ, target `ε`: `b = min(⌈12σ²/(με)⌉, n)`,
/// `K = ⌈(1 + 2/(ημ)) log(3Δ0/ε)⌉`.
pub fn infinite_sum_pl_schedule(
    components: Components,
    sigma_sq: f64,
    l_hat: f64,
    l_tilde: f64,
    mu: f64,
    delta0: f64,
    eps: f64,
) -> Result<Schedule> {
    positive("eps", eps)?;
    positive("mu", mu)?;
    let b = capped_batch(components, 12.0 * sigma_sq / (mu * eps))?;
    let (bprime, p, eta) = batch_and_step(components, b, l_hat, l_tilde, StepSizeMode::Pl { mu })?;
    Ok(Schedule { b, bprime, p, eta, iterations: pl_iterations(eta, mu, 3.0 * delta0 / eps) })
}

/// Runs `check` with `seeds` runs and, if it fails, once more with four
/// times as many; the second verdict is final.
pub fn with_escalation(seeds: usize, mut check: impl FnMut(usize) -> Result<BoundReport>) -> Result<BoundReport> {
    let first = check(seeds)?;
    if first.passed() {
        return Ok(first);
    }
    let mut second = check(4 * seeds)?;
    second.flag(format!("escalated from {seeds} to {} seeds", 4 * seeds));
    Ok(second)
}
