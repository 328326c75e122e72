//! Builds the instance a config describes, runs every seed, writes traces
//! and evaluates the requested bound checks.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ccd_core::algorithms::{
    baseline_page, baseline_prox_gd, baseline_sgd, pccd_run, sccd_run, vrccd_run, PccdConfig, RunOutput, RunTrace,
    SampleSharing, VrccdConfig,
};
use ccd_core::problems::{
    estimate_sigma_sq, read_instance, Components, Instance, QuadraticFiniteSum, SigmoidClassification, StreamFamily,
    StreamingObjective,
};
use ccd_core::sampling::variance_factor;
use ccd_core::smoothness::{compute_l_constants, step_size, EstimatorParams, StepSizeMode};
use ccd_core::theory::{
    certified_lower_bound, check_arith_cost_pooled, check_corollary1_pl, check_corollary4_pl_rate, check_descent,
    check_lemma2, check_lemma3, check_lemma5, check_lemma6, check_potential_mean, check_potential_pathwise,
    check_theorem1, check_theorem3_rate, with_escalation, BoundKind, BoundReport, OptimumSource, PotentialParams,
    RateParams,
};
use ccd_core::{BlockPartition, DiagonalMetric, Objective, Regularizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::{
    format_regularizer, AlgorithmName, CheckName, ExperimentConfig, Family, LambdaMode, Sharing, StepSize, StreamKind,
};
use crate::CliError;

pub const TRACE_HEADER: &str = "k,F,s_k,v_k,u_k,grad_component_evals,wall_ns";

/// Cycles of the exact method used to approximate `F★` when no closed form exists.
const OPTIMUM_CYCLES: usize = 5000;

pub enum Problem {
    Quad(QuadraticFiniteSum),
    Sigmoid(SigmoidClassification),
    Stream(StreamingObjective),
}

impl Problem {
    pub fn objective(&self) -> &dyn Objective {
        match self {
            Problem::Quad(q) => q,
            Problem::Sigmoid(s) => s,
            Problem::Stream(s) => s,
        }
    }

    /// A finite-sum quadratic with the same curvature, for computing block
    /// constants; streaming quadratics share one matrix across components.
    fn quadratic_view(&self) -> Option<std::borrow::Cow<'_, QuadraticFiniteSum>> {
        match self {
            Problem::Quad(q) => Some(std::borrow::Cow::Borrowed(q)),
            Problem::Stream(s) => match s.family() {
                StreamFamily::Quadratic { a, mean_b, .. } => {
                    QuadraticFiniteSum::new(s.partition().clone(), vec![a.clone()], vec![mean_b.clone()], vec![0.0])
                        .ok()
                        .map(std::borrow::Cow::Owned)
                }
                StreamFamily::Sigmoid { .. } => None,
            },
            Problem::Sigmoid(_) => None,
        }
    }
}

pub fn build_problem(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Problem, CliError> {
    let pc = &cfg.problem;
    if let Some(path) = &pc.instance {
        let full = base_dir.join(path);
        let file = File::open(&full).map_err(|e| CliError::io(&full, e))?;
        let instance = read_instance(BufReader::new(file))?;
        let (prob, family) = match instance {
            Instance::Quadratic(q) => (Problem::Quad(q), Family::Quadratic),
            Instance::Sigmoid(s) => (Problem::Sigmoid(s), Family::Sigmoid),
        };
        if family != pc.family {
            return Err(CliError::Usage(format!(
                "{} holds a different problem family than problem.family",
                full.display()
            )));
        }
        return Ok(prob);
    }
    let partition = BlockPartition::uniform(pc.d, pc.m)?;
    Ok(match pc.family {
        Family::Quadratic => Problem::Quad(QuadraticFiniteSum::generate(
            pc.seed,
            pc.n.unwrap_or(1),
            partition,
            pc.condition_number,
            pc.convex,
        )?),
        Family::Sigmoid => {
            Problem::Sigmoid(SigmoidClassification::generate(pc.seed, pc.n.unwrap_or(1), partition, pc.margin)?)
        }
        Family::Streaming => Problem::Stream(match pc.stream {
            StreamKind::Quadratic => StreamingObjective::generate_quadratic(
                pc.seed,
                partition,
                pc.condition_number,
                pc.noise,
                pc.surrogate_size,
            )?,
            StreamKind::Sigmoid => {
                StreamingObjective::generate_sigmoid(pc.seed, partition, pc.margin, pc.surrogate_size)?
            }
        }),
    })
}

/// Everything derived from the config before any run starts.
pub struct Plan {
    pub cfg: ExperimentConfig,
    pub problem: Problem,
    /// `None` under backtracking.
    pub metric: Option<DiagonalMetric>,
    pub l_constants: Option<(f64, f64)>,
    pub l_supplied: bool,
    pub eta: f64,
    pub eta_bound: Option<f64>,
    pub x0: Vec<f64>,
}

impl Plan {
    pub fn new(cfg: ExperimentConfig, base_dir: &Path) -> Result<Plan, CliError> {
        let problem = build_problem(&cfg, base_dir)?;
        let obj = problem.objective();
        let partition = obj.partition().clone();
        let metric = match &cfg.lambda {
            LambdaMode::Backtracking { .. } => None,
            LambdaMode::Explicit(values) => Some(DiagonalMetric::from_block_scalars(partition.clone(), values)?),
            LambdaMode::Exact => Some(match &problem {
                Problem::Quad(q) => q.block_lipschitz_metric()?,
                Problem::Sigmoid(s) => s.curvature_metric()?,
                Problem::Stream(_) => problem
                    .quadratic_view()
                    .ok_or_else(|| CliError::Usage("no data-derived metric for this family".into()))?
                    .block_lipschitz_metric()?,
            }),
        };
        let (l_constants, l_supplied) = match (cfg.l_hat, cfg.l_tilde) {
            (Some(h), Some(t)) => (Some((h, t)), true),
            _ => match (&metric, problem.quadratic_view()) {
                (Some(metric), Some(q)) => {
                    let q_list = q.exact_q_list(metric)?;
                    (Some(compute_l_constants(&q_list, metric, &partition)?), false)
                }
                _ => (None, false),
            },
        };
        let a = &cfg.algorithm;
        let mut eta_bound = None;
        if a.name.is_variance_reduced() && a.p > 0.0 {
            if let Some((l_hat, l_tilde)) = l_constants {
                let params = EstimatorParams { p: a.p, b: a.b, bprime: a.bprime, components: obj.components() };
                eta_bound = Some(step_size(l_hat, l_tilde, params, StepSizeMode::Theorem3)?.eta);
            }
        }
        let eta = match a.eta {
            StepSize::Explicit(e) => e,
            StepSize::Auto => {
                a.eta_scale * eta_bound.ok_or_else(|| CliError::Usage("eta = auto needs L̂, L̃ and p > 0".into()))?
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.problem.seed);
        rng.set_stream(99);
        let mut x0: Vec<f64> = (0..obj.dim()).map(|_| a.x0_scale * rng.sample::<f64, _>(StandardNormal)).collect();
        if let Regularizer::Box { lo, hi } = cfg.problem.reg {
            x0.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
        }
        Ok(Plan { cfg, problem, metric, l_constants, l_supplied, eta, eta_bound, x0 })
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.cfg.seed_count as u64).map(|i| self.cfg.seed_base.wrapping_add(i)).collect()
    }

    fn needs_iterates(&self) -> bool {
        let a = &self.cfg.algorithm;
        let full_batch = self.problem.objective().components() == Components::Finite(a.b) && a.bprime == a.b;
        self.cfg.checks.iter().any(|c| {
            matches!(c, CheckName::Theorem3 | CheckName::Corollary4) || (*c == CheckName::Potential && !full_batch)
        })
    }

    fn vr_config(&self, seed: u64) -> VrccdConfig {
        let a = &self.cfg.algorithm;
        let mut cfg =
            VrccdConfig::new(a.iterations, self.eta, a.p, a.b, a.bprime, self.metric.clone().unwrap(), self.x0.clone())
                .with_seed(seed)
                .with_sharing(match a.sharing {
                    Sharing::Fresh => SampleSharing::FreshPerBlock,
                    Sharing::Shared => SampleSharing::SharedPerCycle,
                })
                .with_diagnostics(self.cfg.record_u)
                .with_iterates(self.needs_iterates());
        cfg.allow_large_step = a.allow_large_step;
        cfg.eta_bound = self.eta_bound;
        cfg.record_wall_time = self.cfg.wall_time;
        cfg
    }

    fn exact_config(&self) -> PccdConfig {
        let a = &self.cfg.algorithm;
        let mut cfg = match (&self.cfg.lambda, &self.metric) {
            (LambdaMode::Backtracking { growth, init }, _) => {
                PccdConfig::backtracking(a.iterations, *growth, *init, self.x0.clone())
            }
            (_, Some(metric)) => PccdConfig::new(a.iterations, metric.clone(), self.x0.clone()).with_eta(self.eta),
            (_, None) => unreachable!("fixed lambda modes always resolve a metric"),
        };
        cfg.record_wall_time = self.cfg.wall_time;
        cfg.with_iterates(self.needs_iterates())
    }

    /// One run of the configured method.
    pub fn run_seed(&self, seed: u64) -> Result<RunOutput, CliError> {
        let obj = self.problem.objective();
        let reg = &self.cfg.problem.reg;
        let out = match self.cfg.algorithm.name {
            AlgorithmName::Pccd => pccd_run(obj, reg, &self.exact_config())?,
            AlgorithmName::ProxGd => baseline_prox_gd(obj, reg, &self.exact_config())?,
            AlgorithmName::Vrccd | AlgorithmName::Vroccd => vrccd_run(obj, reg, &self.vr_config(seed))?,
            AlgorithmName::Sccd => sccd_run(obj, reg, &self.vr_config(seed))?,
            AlgorithmName::Page => baseline_page(obj, reg, &self.vr_config(seed))?,
            AlgorithmName::Sgd => baseline_sgd(obj, reg, &self.vr_config(seed))?,
        };
        Ok(out)
    }

    pub fn run_seeds(&self, seeds: &[u64]) -> Result<Vec<RunOutput>, CliError> {
        seeds.par_iter().map(|&s| self.run_seed(s)).collect()
    }

    /// Resolved parameters, echoed at the top of every output file.
    pub fn header(&self) -> Vec<(String, String)> {
        let c = &self.cfg;
        let a = &c.algorithm;
        let obj = self.problem.objective();
        let mut h: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| h.push((k.to_string(), v));
        put("problem.family", format!("{:?}", c.problem.family).to_lowercase());
        if c.problem.family == Family::Streaming {
            put("problem.stream", format!("{:?}", c.problem.stream).to_lowercase());
        }
        match obj.components() {
            Components::Finite(n) => put("problem.n", n.to_string()),
            Components::Streaming => put("problem.n", "inf".into()),
        }
        put("problem.d", obj.dim().to_string());
        put("problem.m", obj.partition().num_blocks().to_string());
        put("problem.block_sizes", join(&obj.partition().sizes()));
        put("problem.reg", format_regularizer(&c.problem.reg));
        put("problem.seed", c.problem.seed.to_string());
        if let Some(path) = &c.problem.instance {
            put("problem.instance", path.clone());
        }
        put("algorithm.name", a.name.name().into());
        put("algorithm.K", a.iterations.to_string());
        put("algorithm.eta", self.eta.to_string());
        if a.eta == StepSize::Auto {
            put("algorithm.eta_source", format!("auto x {}", a.eta_scale));
        }
        if let Some(bound) = self.eta_bound {
            put("algorithm.eta_bound", bound.to_string());
        }
        if a.name.is_variance_reduced() {
            put("algorithm.p", a.p.to_string());
            put("algorithm.b", a.b.to_string());
            put("algorithm.bprime", a.bprime.to_string());
            if !a.name.is_full_vector() {
                put("algorithm.sample_sharing", a.sharing.name().into());
            }
            put("algorithm.schedule", a.schedule.name().into());
        }
        match (&c.lambda, &self.metric) {
            (LambdaMode::Backtracking { growth, init }, _) => {
                put("lambda.mode", "backtracking".into());
                put("lambda.growth", growth.to_string());
                put("lambda.init", init.to_string());
            }
            (mode, Some(metric)) => {
                put(
                    "lambda.mode",
                    if matches!(mode, LambdaMode::Exact) { "exact_quadratic" } else { "explicit" }.into(),
                );
                let per_block: Vec<f64> = obj.partition().ranges().map(|r| metric.diag()[r.start]).collect();
                put("lambda.values", join(&per_block));
            }
            (_, None) => {}
        }
        if let Some((l_hat, l_tilde)) = self.l_constants {
            let source = if self.l_supplied { "supplied" } else { "computed" };
            put("smoothness.l_hat", format!("{l_hat} ({source})"));
            put("smoothness.l_tilde", format!("{l_tilde} ({source})"));
        }
        put("x0", format!("gaussian(seed {}) x {}", c.problem.seed, a.x0_scale));
        put("seeds.base", c.seed_base.to_string());
        put("seeds.count", c.seed_count.to_string());
        put("diagnostics.record_u", c.record_u.to_string());
        h
    }

    fn trace_file(&self, out_dir: &Path, seed: u64) -> PathBuf {
        out_dir.join(format!("{}_seed{seed}.csv", self.cfg.trace_path))
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_header<W: Write>(w: &mut W, header: &[(String, String)]) -> std::io::Result<()> {
    for (k, v) in header {
        writeln!(w, "# {k} = {v}")?;
    }
    Ok(())
}

pub fn write_trace<W: Write>(
    mut w: W,
    header: &[(String, String)],
    trace: &RunTrace,
    seed: u64,
) -> std::io::Result<()> {
    write_header(&mut w, header)?;
    writeln!(w, "# seed = {seed}")?;
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.k,
            r.objective,
            opt(r.stationarity),
            r.step_sq,
            opt(r.estimator_error),
            r.samples,
            r.wall_ns
        )?;
    }
    w.flush()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Outcome of `run`.
pub struct RunSummary {
    pub trace_files: Vec<PathBuf>,
    pub report_file: Option<PathBuf>,
    pub reports: Vec<BoundReport>,
}

impl RunSummary {
    pub fn exit_code(&self) -> u8 {
        let failed = |kind| self.reports.iter().any(|r| r.kind == kind && !r.passed());
        if failed(BoundKind::Pathwise) {
            2
        } else if failed(BoundKind::InExpectation) {
            1
        } else {
            0
        }
    }
}

pub fn run_experiment(plan: &Plan, out_dir: &Path) -> Result<RunSummary, CliError> {
    let seeds = plan.seeds();
    let runs = plan.run_seeds(&seeds)?;
    let header = plan.header();
    let mut trace_files = Vec::new();
    for (seed, run) in seeds.iter().zip(&runs) {
        let path = plan.trace_file(out_dir, *seed);
        let w = create(&path)?;
        write_trace(w, &header, &run.trace, *seed).map_err(|e| CliError::io(&path, e))?;
        trace_files.push(path);
    }
    let reports = evaluate_checks(plan, &runs)?;
    let mut report_file = None;
    if !plan.cfg.checks.is_empty() {
        let path = out_dir.join(&plan.cfg.report_path);
        let mut w = create(&path)?;
        write_header(&mut w, &header).map_err(|e| CliError::io(&path, e))?;
        ccd_core::theory::write_reports_csv(&reports, &mut w)?;
        w.flush().map_err(|e| CliError::io(&path, e))?;
        report_file = Some(path);
    }
    Ok(RunSummary { trace_files, report_file, reports })
}

/// `F★` (or a stand-in) for the configured problem.
fn optimum(plan: &Plan) -> Result<OptimumSource, CliError> {
    let reg = &plan.cfg.problem.reg;
    let metric = plan.metric.clone().ok_or_else(|| CliError::Usage("this check needs a fixed metric".into()))?;
    match &plan.problem {
        Problem::Quad(q) if plan.cfg.problem.convex && *reg == Regularizer::Zero => {
            Ok(OptimumSource::Exact(q.optimal_value()?))
        }
        Problem::Quad(q) if plan.cfg.problem.convex => {
            let out = pccd_run(q, reg, &PccdConfig::new(OPTIMUM_CYCLES, metric, plan.x0.clone()))?;
            Ok(OptimumSource::LowerBound(certified_lower_bound(q, reg, &out.last, q.min_eigenvalue()?)?))
        }
        _ => {
            let obj = plan.problem.objective();
            let out = pccd_run(obj, reg, &PccdConfig::new(OPTIMUM_CYCLES, metric, plan.x0.clone()))?;
            let best = out.trace.objectives().into_iter().fold(f64::INFINITY, f64::min);
            Ok(OptimumSource::Estimated(best))
        }
    }
}

fn pl_constant(plan: &Plan) -> Result<f64, CliError> {
    match (&plan.problem, &plan.metric) {
        (Problem::Quad(q), Some(metric)) => Ok(q.pl_constant(metric)?),
        _ => Err(CliError::Usage("the PŁ constant is known only for quadratics with a fixed metric".into())),
    }
}

fn tagged(mut report: BoundReport, seed: u64) -> BoundReport {
    report.name = format!("{}[seed={seed}]", report.name);
    report
}

pub fn evaluate_checks(plan: &Plan, runs: &[RunOutput]) -> Result<Vec<BoundReport>, CliError> {
    let checks = &plan.cfg.checks;
    if checks.is_empty() {
        return Ok(Vec::new());
    }
    let a = &plan.cfg.algorithm;
    let obj = plan.problem.objective();
    let seeds = plan.seeds();
    let needs_optimum = checks.iter().any(|c| {
        matches!(
            c,
            CheckName::Lemma3
                | CheckName::Theorem1
                | CheckName::Corollary1
                | CheckName::Theorem3
                | CheckName::Corollary4
        )
    });
    let optimum = if needs_optimum { Some(optimum(plan)?) } else { None };
    let l_hat = plan.l_constants.map(|(h, _)| h);
    let need_l = || l_hat.ok_or_else(|| CliError::Usage("this check needs L̂".into()));
    let components = obj.components();
    let vf = variance_factor(components, a.b);

    // extra seeds for escalated Monte Carlo checks, run at most once
    let mut extra: Option<Vec<RunOutput>> = None;
    let mut pool = |count: usize| -> Result<Vec<RunOutput>, CliError> {
        if count <= runs.len() {
            return Ok(runs[..count].to_vec());
        }
        if extra.is_none() {
            let more: Vec<u64> =
                (runs.len() as u64..count as u64).map(|i| plan.cfg.seed_base.wrapping_add(i)).collect();
            extra = Some(plan.run_seeds(&more)?);
        }
        Ok(runs.iter().chain(extra.as_ref().unwrap()).take(count).cloned().collect())
    };
    let sigma_sq = |runs: &[RunOutput]| -> Result<f64, CliError> {
        let metric = plan.metric.as_ref().ok_or_else(|| CliError::Usage("σ² needs a fixed metric".into()))?;
        let probes: Vec<Vec<f64>> = runs.iter().flat_map(|r| r.iterates.iter().cloned()).collect();
        Ok(estimate_sigma_sq(obj, metric, &probes)?.value)
    };

    let mut reports = Vec::new();
    for check in checks {
        match check {
            CheckName::Descent => {
                for (s, r) in seeds.iter().zip(runs) {
                    reports.push(tagged(check_descent(&r.trace)?, *s));
                }
            }
            CheckName::Lemma2 => {
                for (s, r) in seeds.iter().zip(runs) {
                    reports.push(tagged(check_lemma2(&r.trace, need_l()?)?, *s));
                }
            }
            CheckName::Lemma3 | CheckName::Theorem1 => {
                for (s, r) in seeds.iter().zip(runs) {
                    let report = if *check == CheckName::Lemma3 {
                        check_lemma3(&r.trace, optimum.unwrap())?
                    } else {
                        check_theorem1(&r.trace, need_l()?, optimum.unwrap())?
                    };
                    reports.push(tagged(report, *s));
                }
            }
            CheckName::Corollary1 => {
                let mu = pl_constant(plan)?;
                let f_star = optimum.unwrap();
                for (s, r) in seeds.iter().zip(runs) {
                    let gaps: Vec<f64> = r.trace.objectives().iter().map(|f| f - f_star.value()).collect();
                    let mut report = check_corollary1_pl(&gaps, need_l()?, mu)?;
                    f_star.annotate(&mut report);
                    reports.push(tagged(report, *s));
                }
            }
            CheckName::Lemma5 => {
                for (s, r) in seeds.iter().zip(runs) {
                    reports.push(tagged(check_lemma5(&r.trace, plan.eta)?, *s));
                }
            }
            CheckName::Lemma6 => {
                for (s, r) in seeds.iter().zip(runs) {
                    reports.push(tagged(check_lemma6(&r.trace, need_l()?)?, *s));
                }
            }
            CheckName::Potential => {
                let full_batch = components == Components::Finite(a.b) && a.bprime == a.b;
                let base = PotentialParams {
                    eta: plan.eta,
                    p: a.p,
                    bprime: a.bprime,
                    l_hat: need_l()?,
                    variance_factor: vf,
                    sigma_sq: 0.0,
                };
                if full_batch {
                    for (s, r) in seeds.iter().zip(runs) {
                        reports.push(tagged(check_potential_pathwise(&r.trace, &base)?, *s));
                    }
                } else {
                    reports.push(with_escalation(runs.len(), |count| {
                        let batch = pool(count).map_err(to_core)?;
                        let params = PotentialParams { sigma_sq: sigma_sq(&batch).map_err(to_core)?, ..base };
                        let traces: Vec<RunTrace> = batch.iter().map(|r| r.trace.clone()).collect();
                        let mut report = check_potential_mean(&traces, &params)?;
                        report.flag("variance bound taken along the realized trajectories");
                        Ok(report)
                    })?);
                }
            }
            CheckName::Theorem3 | CheckName::Corollary4 => {
                let f_star = optimum.unwrap();
                let delta0 = runs[0].trace.objective(0) - f_star.value();
                let mu = if *check == CheckName::Corollary4 { Some(pl_constant(plan)?) } else { None };
                let mut report = with_escalation(runs.len(), |count| {
                    let batch = pool(count).map_err(to_core)?;
                    let params = RateParams {
                        eta: plan.eta,
                        p: a.p,
                        variance_factor: vf,
                        sigma_sq: sigma_sq(&batch).map_err(to_core)?,
                        delta0,
                    };
                    let mut report = match mu {
                        None => {
                            let samples: Vec<f64> =
                                batch.iter().map(|r| r.trace.stationarity(r.output_index)).collect();
                            check_theorem3_rate(&samples, a.iterations, &params)?
                        }
                        Some(mu) => {
                            let gaps: Vec<f64> =
                                batch.iter().map(|r| r.trace.objective(a.iterations) - f_star.value()).collect();
                            check_corollary4_pl_rate(&gaps, a.iterations, mu, &params)?
                        }
                    };
                    if vf > 0.0 {
                        report.flag("variance bound taken along the realized trajectories");
                    }
                    Ok(report)
                })?;
                f_star.annotate(&mut report);
                reports.push(report);
            }
            CheckName::ArithCost => {
                let traces: Vec<RunTrace> = runs.iter().map(|r| r.trace.clone()).collect();
                let mut report = check_arith_cost_pooled(&traces, a.p, a.b, a.bprime, obj.dim())?;
                report.name = format!("{}[{} seeds]", report.name, runs.len());
                reports.push(report);
            }
        }
    }
    Ok(reports)
}

fn to_core(e: CliError) -> ccd_core::Error {
    match e {
        CliError::Core(e) => e,
        other => ccd_core::Error::InvalidParameter(other.to_string()),
    }
}

/// One summary row per value per seed.
pub struct SweepRow {
    pub value: String,
    pub seed: u64,
    pub final_objective: f64,
    pub final_stationarity: f64,
    pub total_work: u64,
}

pub const SWEEP_HEADER: &str = "axis,value,seed,final_F,final_s,total_work";

pub fn write_sweep<W: Write>(
    mut w: W,
    axis: &str,
    headers: &[(String, Vec<(String, String)>)],
    rows: &[SweepRow],
) -> std::io::Result<()> {
    for (value, header) in headers {
        writeln!(w, "# {axis} = {value}")?;
        for (k, v) in header {
            writeln!(w, "#   {k} = {v}")?;
        }
    }
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(w, "{axis},{},{},{},{},{}", r.value, r.seed, r.final_objective, r.final_stationarity, r.total_work)?;
    }
    w.flush()
}

pub fn sweep_rows(plan: &Plan, value: &str) -> Result<Vec<SweepRow>, CliError> {
    let seeds = plan.seeds();
    let runs = plan.run_seeds(&seeds)?;
    Ok(seeds
        .iter()
        .zip(&runs)
        .map(|(seed, run)| {
            let last = run.trace.rows.last().unwrap();
            SweepRow {
                value: value.to_string(),
                seed: *seed,
                final_objective: last.objective,
                final_stationarity: last.stationarity.unwrap_or(f64::NAN),
                total_work: last.work,
            }
        })
        .collect())
}
