//! Flat `section.key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ccd_core::Regularizer;

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found while parsing, in line order.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Quadratic,
    Sigmoid,
    Streaming,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamKind {
    Quadratic,
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgorithmName {
    Pccd,
    Vrccd,
    Vroccd,
    Sccd,
    ProxGd,
    Page,
    Sgd,
}

impl AlgorithmName {
    pub fn is_variance_reduced(self) -> bool {
        !matches!(self, AlgorithmName::Pccd | AlgorithmName::ProxGd)
    }

    pub fn is_full_vector(self) -> bool {
        matches!(self, AlgorithmName::ProxGd | AlgorithmName::Page | AlgorithmName::Sgd)
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmName::Pccd => "pccd",
            AlgorithmName::Vrccd => "vrccd",
            AlgorithmName::Vroccd => "vroccd",
            AlgorithmName::Sccd => "sccd",
            AlgorithmName::ProxGd => "prox_gd",
            AlgorithmName::Page => "page",
            AlgorithmName::Sgd => "sgd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Auto,
    Explicit(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sharing {
    Fresh,
    Shared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    None,
    FiniteSum,
    InfiniteSum,
}

impl Schedule {
    pub fn name(self) -> &'static str {
        match self {
            Schedule::None => "none",
            Schedule::FiniteSum => "finite_sum",
            Schedule::InfiniteSum => "infinite_sum",
        }
    }
}

impl Sharing {
    pub fn name(self) -> &'static str {
        match self {
            Sharing::Fresh => "fresh",
            Sharing::Shared => "shared",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LambdaMode {
    /// Data-derived block bounds: exact block Lipschitz constants for
    /// quadratics, the curvature bound for sigmoid losses.
    Exact,
    Backtracking {
        growth: f64,
        init: f64,
    },
    Explicit(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckName {
    Descent,
    Lemma2,
    Lemma3,
    Theorem1,
    Corollary1,
    Lemma5,
    Lemma6,
    Potential,
    Theorem3,
    Corollary4,
    ArithCost,
}

impl CheckName {
    pub const ALL: [CheckName; 11] = [
        CheckName::Descent,
        CheckName::Lemma2,
        CheckName::Lemma3,
        CheckName::Theorem1,
        CheckName::Corollary1,
        CheckName::Lemma5,
        CheckName::Lemma6,
        CheckName::Potential,
        CheckName::Theorem3,
        CheckName::Corollary4,
        CheckName::ArithCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckName::Descent => "descent",
            CheckName::Lemma2 => "lemma2",
            CheckName::Lemma3 => "lemma3",
            CheckName::Theorem1 => "theorem1",
            CheckName::Corollary1 => "corollary1",
            CheckName::Lemma5 => "lemma5",
            CheckName::Lemma6 => "lemma6",
            CheckName::Potential => "potential",
            CheckName::Theorem3 => "theorem3",
            CheckName::Corollary4 => "corollary4",
            CheckName::ArithCost => "arith_cost",
        }
    }

    /// Checks that read traces of the exact cyclic method.
    pub fn needs_exact_method(self) -> bool {
        matches!(
            self,
            CheckName::Descent | CheckName::Lemma2 | CheckName::Lemma3 | CheckName::Theorem1 | CheckName::Corollary1
        )
    }

    pub fn needs_estimator_error(self) -> bool {
        matches!(self, CheckName::Lemma5 | CheckName::Lemma6 | CheckName::Potential)
    }
}

impl FromStr for CheckName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        CheckName::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = CheckName::ALL.iter().map(|c| c.name()).collect();
            format!("unknown check '{s}' (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub family: Family,
    pub stream: StreamKind,
    /// `None` for a streaming objective.
    pub n: Option<usize>,
    pub d: usize,
    pub m: usize,
    pub condition_number: f64,
    pub convex: bool,
    pub reg: Regularizer,
    pub seed: u64,
    pub margin: f64,
    pub noise: f64,
    pub surrogate_size: usize,
    /// Load the instance from this file instead of generating it.
    pub instance: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmConfig {
    pub name: AlgorithmName,
    pub iterations: usize,
    pub eta: StepSize,
    /// Multiplier applied to an automatic step size.
    pub eta_scale: f64,
    pub p: f64,
    pub b: usize,
    pub bprime: usize,
    pub sharing: Sharing,
    pub schedule: Schedule,
    pub allow_large_step: bool,
    pub x0_scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub algorithm: AlgorithmConfig,
    pub lambda: LambdaMode,
    pub l_hat: Option<f64>,
    pub l_tilde: Option<f64>,
    pub seed_base: u64,
    pub seed_count: usize,
    pub record_u: bool,
    pub wall_time: bool,
    pub checks: Vec<CheckName>,
    pub trace_path: String,
    pub report_path: String,
}

/// Keys a sweep may vary.
pub const NUMERIC_KEYS: &[&str] = &[
    "problem.n",
    "problem.d",
    "problem.m",
    "problem.condition_number",
    "problem.seed",
    "problem.margin",
    "problem.noise",
    "problem.surrogate_size",
    "algorithm.K",
    "algorithm.eta",
    "algorithm.eta_scale",
    "algorithm.p",
    "algorithm.b",
    "algorithm.bprime",
    "algorithm.x0_scale",
    "lambda.growth",
    "lambda.init",
    "smoothness.l_hat",
    "smoothness.l_tilde",
    "seeds.base",
    "seeds.count",
];

const OTHER_KEYS: &[&str] = &[
    "problem.family",
    "problem.stream",
    "problem.convex",
    "problem.reg",
    "problem.instance",
    "algorithm.name",
    "algorithm.sample_sharing",
    "algorithm.schedule",
    "algorithm.allow_large_step",
    "lambda.mode",
    "lambda.values",
    "diagnostics.record_u",
    "diagnostics.wall_time",
    "diagnostics.checks",
    "output.trace_path",
    "output.report_path",
];

fn known_key(key: &str) -> bool {
    NUMERIC_KEYS.contains(&key) || OTHER_KEYS.contains(&key)
}

/// Parsed but untyped document; overrides replace entries by key.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (Option<usize>, String)>,
    errors: Vec<ConfigError>,
}

impl RawConfig {
    pub fn parse(text: &str) -> RawConfig {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                raw.error(Some(lineno), format!("expected 'section.key = value', got '{content}'"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !known_key(key) {
                raw.error(Some(lineno), format!("unknown key '{key}'"));
                continue;
            }
            if let Some((first, _)) = raw.entries.get(key) {
                let first = first.map_or(String::from("an override"), |l| format!("line {l}"));
                raw.error(Some(lineno), format!("duplicate key '{key}' (first set on {first})"));
                continue;
            }
            raw.entries.insert(key.to_string(), (Some(lineno), value.to_string()));
        }
        raw
    }

    /// Replaces (or adds) `key`; used by sweeps and command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigErrors> {
        if !known_key(key) {
            return Err(ConfigErrors(vec![ConfigError { line: None, message: format!("unknown key '{key}'") }]));
        }
        self.entries.insert(key.to_string(), (None, value.to_string()));
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn error(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.errors.push(ConfigError { line, message: message.into() });
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).and_then(|(l, _)| *l)
    }

    fn raw(&self, key: &str) -> Option<(Option<usize>, String)> {
        self.entries.get(key).cloned()
    }

    fn typed<T>(&mut self, key: &str, what: &str, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (line, value) = self.raw(key)?;
        match parse(&value) {
            Ok(v) => Some(v),
            Err(msg) => {
                let detail = if msg.is_empty() { String::new() } else { format!(": {msg}") };
                self.error(line, format!("{key} = '{value}' is not {what}{detail}"));
                None
            }
        }
    }

    fn num<T: FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        self.typed(key, what, |v| v.parse::<T>().map_err(|_| String::new()))
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        self.typed(key, "a number", |v| match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(String::new()),
        })
    }

    fn flag(&mut self, key: &str) -> Option<bool> {
        self.typed(key, "a boolean", |v| match v {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            _ => Err(String::new()),
        })
    }

    fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)]) -> Option<T> {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        self.typed(key, &format!("one of {}", names.join("|")), |v| {
            options.iter().find(|(n, _)| *n == v).map(|(_, t)| *t).ok_or_else(String::new)
        })
    }

    fn constraint(&mut self, key: &str, ok: bool, message: impl Into<String>) {
        if !ok {
            let line = self.line_of(key);
            self.error(line, message);
        }
    }

    /// Types every entry and enforces the cross-field rules, collecting all
    /// errors.
    pub fn resolve(mut self) -> Result<ExperimentConfig, ConfigErrors> {
        let family = self
            .choice(
                "problem.family",
                &[("quadratic", Family::Quadratic), ("sigmoid", Family::Sigmoid), ("streaming", Family::Streaming)],
            )
            .unwrap_or(Family::Quadratic);
        let stream = self
            .choice("problem.stream", &[("quadratic", StreamKind::Quadratic), ("sigmoid", StreamKind::Sigmoid)])
            .unwrap_or(StreamKind::Quadratic);
        let n = self.num::<usize>("problem.n", "a positive integer");
        let d = self.num::<usize>("problem.d", "a positive integer");
        let m = self.num::<usize>("problem.m", "a positive integer").unwrap_or(1);
        let condition_number = self.float("problem.condition_number").unwrap_or(10.0);
        let convex = self.flag("problem.convex").unwrap_or(true);
        let reg = self.typed("problem.reg", "a regularizer", parse_regularizer).unwrap_or(Regularizer::Zero);
        let problem_seed = self.num::<u64>("problem.seed", "a non-negative integer").unwrap_or(0);
        let margin = self.float("problem.margin").unwrap_or(2.0);
        let noise = self.float("problem.noise").unwrap_or(1.0);
        let surrogate_size = self.num::<usize>("problem.surrogate_size", "a positive integer").unwrap_or(4096);
        let instance = self.raw("problem.instance").map(|(_, v)| v);

        let name = self.choice(
            "algorithm.name",
            &[
                ("pccd", AlgorithmName::Pccd),
                ("vrccd", AlgorithmName::Vrccd),
                ("vroccd", AlgorithmName::Vroccd),
                ("sccd", AlgorithmName::Sccd),
                ("prox_gd", AlgorithmName::ProxGd),
                ("page", AlgorithmName::Page),
                ("sgd", AlgorithmName::Sgd),
            ],
        );
        if !self.has("algorithm.name") {
            self.error(None, "missing required key algorithm.name");
        }
        let iterations = self.num::<usize>("algorithm.K", "a positive integer");
        if !self.has("algorithm.K") {
            self.error(None, "missing required key algorithm.K");
        }
        let eta = self.typed("algorithm.eta", "'auto' or a number", |v| {
            if v == "auto" {
                Ok(StepSize::Auto)
            } else {
                v.parse::<f64>().map(StepSize::Explicit).map_err(|_| String::new())
            }
        });
        let eta_scale = self.float("algorithm.eta_scale").unwrap_or(1.0);
        let p = self.float("algorithm.p");
        let b = self.num::<usize>("algorithm.b", "a positive integer");
        let bprime = self.num::<usize>("algorithm.bprime", "a positive integer");
        let sharing =
            self.choice("algorithm.sample_sharing", &[("fresh", Sharing::Fresh), ("shared", Sharing::Shared)]);
        let schedule = self
            .choice(
                "algorithm.schedule",
                &[
                    ("none", Schedule::None),
                    ("finite_sum", Schedule::FiniteSum),
                    ("infinite_sum", Schedule::InfiniteSum),
                ],
            )
            .unwrap_or(Schedule::None);
        let allow_large_step = self.flag("algorithm.allow_large_step").unwrap_or(false);
        let x0_scale = self.float("algorithm.x0_scale").unwrap_or(1.0);

        let growth = self.float("lambda.growth").unwrap_or(2.0);
        let init = self.float("lambda.init").unwrap_or(1.0);
        let values = self.typed("lambda.values", "a comma-separated list of numbers", |v| {
            v.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad entry '{}'", t.trim()))).collect()
        });
        let mode = self
            .choice("lambda.mode", &[("exact_quadratic", 0u8), ("backtracking", 1), ("explicit", 2)])
            .unwrap_or(if values.is_some() { 2 } else { 0 });
        let lambda = match mode {
            1 => LambdaMode::Backtracking { growth, init },
            2 => LambdaMode::Explicit(values.clone().unwrap_or_default()),
            _ => LambdaMode::Exact,
        };
        let l_hat = self.float("smoothness.l_hat");
        let l_tilde = self.float("smoothness.l_tilde");
        let seed_base = self.num::<u64>("seeds.base", "a non-negative integer").unwrap_or(0);
        let seed_count = self.num::<usize>("seeds.count", "a positive integer").unwrap_or(1);
        let record_u = self.flag("diagnostics.record_u").unwrap_or(false);
        let wall_time = self.flag("diagnostics.wall_time").unwrap_or(false);
        let checks: Vec<CheckName> = self
            .typed("diagnostics.checks", "a list of check names", |v| {
                let v = v.trim_start_matches('[').trim_end_matches(']');
                v.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect()
            })
            .unwrap_or_default();
        let trace_path = self.raw("output.trace_path").map_or_else(|| "trace".to_string(), |(_, v)| v);
        let report_path = self.raw("output.report_path").map_or_else(|| "report.csv".to_string(), |(_, v)| v);

        // cross-field rules
        let streaming = family == Family::Streaming;
        if instance.is_none() {
            self.constraint("problem.d", d.is_some_and(|d| d >= 1), "problem.d must be given and >= 1");
            if !streaming {
                self.constraint(
                    "problem.n",
                    n.is_some_and(|n| n >= 1),
                    "problem.n must be given and >= 1 for a finite sum",
                );
            }
        }
        if streaming && self.has("problem.n") {
            self.constraint("problem.n", false, "problem.n does not apply to a streaming objective");
        }
        if let Some(d) = d {
            self.constraint("problem.m", m >= 1 && m <= d, format!("problem.m = {m} must lie in [1, d = {d}]"));
        }
        self.constraint("problem.condition_number", condition_number >= 1.0, "problem.condition_number must be >= 1");
        self.constraint("problem.margin", margin > 0.0, "problem.margin must be > 0");
        self.constraint("problem.noise", noise >= 0.0, "problem.noise must be >= 0");
        self.constraint("problem.surrogate_size", surrogate_size >= 1, "problem.surrogate_size must be >= 1");
        if let Err(e) = reg.validate() {
            self.constraint("problem.reg", false, e.to_string());
        }
        if family == Family::Quadratic && !convex && matches!(reg, Regularizer::Zero | Regularizer::L1(_)) {
            self.constraint("problem.reg", false, "a nonconvex quadratic is unbounded below without a box regularizer");
        }
        self.constraint("algorithm.K", iterations != Some(0), "algorithm.K must be >= 1");
        self.constraint("seeds.count", seed_count >= 1, "seeds.count must be >= 1");
        self.constraint("algorithm.eta_scale", eta_scale > 0.0, "algorithm.eta_scale must be > 0");
        if let Some(StepSize::Explicit(e)) = eta {
            self.constraint("algorithm.eta", e > 0.0 && e.is_finite(), "algorithm.eta must be > 0");
        }
        let finite_n = if streaming { None } else { n };

        let name = name.unwrap_or(AlgorithmName::Pccd);
        let vr = name.is_variance_reduced();
        let forced_p = matches!(name, AlgorithmName::Sccd | AlgorithmName::Sgd);
        if let Some(p) = p {
            if !vr {
                self.constraint("algorithm.p", false, format!("algorithm.p does not apply to {}", name.name()));
            } else if forced_p && p != 1.0 {
                self.constraint("algorithm.p", false, format!("{} forces p = 1", name.name()));
            } else if p == 0.0 {
                self.constraint(
                    "algorithm.p",
                    allow_large_step,
                    "p = 0 admits no step size; set algorithm.allow_large_step = true",
                );
            } else {
                self.constraint(
                    "algorithm.p",
                    p > 0.0 && p <= 1.0,
                    format!("algorithm.p = {p} violates the rule p ∈ (0, 1]"),
                );
            }
        }
        if !vr {
            for key in ["algorithm.b", "algorithm.bprime", "algorithm.sample_sharing", "algorithm.schedule"] {
                if self.has(key) {
                    self.constraint(key, false, format!("{key} does not apply to {}", name.name()));
                }
            }
        }
        if name == AlgorithmName::Vroccd && sharing == Some(Sharing::Fresh) {
            self.constraint("algorithm.sample_sharing", false, "vroccd shares one sample per cycle");
        }
        if name.is_full_vector() && sharing.is_some() {
            self.constraint("algorithm.sample_sharing", false, "sample sharing does not apply to a full-vector method");
        }

        // schedule expansion
        let (mut p, mut b, mut bprime) = (p, b, bprime);
        // b′ may be overridden; p is always re-derived from it
        if vr && schedule != Schedule::None {
            self.constraint("algorithm.p", !self.has("algorithm.p"), "algorithm.p is set by algorithm.schedule");
            match (schedule, finite_n) {
                (Schedule::FiniteSum, Some(n)) => {
                    self.constraint("algorithm.b", b.is_none_or(|b| b == n), "the finite_sum schedule fixes b = n");
                    b = Some(n);
                }
                (Schedule::FiniteSum, None) => {
                    self.constraint("algorithm.schedule", false, "the finite_sum schedule needs a finite problem.n");
                }
                (_, _) => {
                    self.constraint("algorithm.b", b.is_some(), "the infinite_sum schedule needs algorithm.b");
                }
            }
            if let Some(b) = b {
                let bp = *bprime.get_or_insert_with(|| sqrt_round(b));
                p = Some(bp as f64 / (b + bp) as f64);
            }
        }
        if forced_p {
            p = Some(1.0);
            if bprime.is_none() {
                bprime = b;
            }
        }
        if vr {
            self.constraint("algorithm.b", b.is_some(), format!("{} needs algorithm.b", name.name()));
            if !forced_p {
                self.constraint("algorithm.p", p.is_some(), format!("{} needs algorithm.p", name.name()));
                self.constraint(
                    "algorithm.bprime",
                    bprime.is_some(),
                    format!("{} needs algorithm.bprime", name.name()),
                );
            }
            if let (Some(b), Some(bp)) = (b, bprime) {
                self.constraint("algorithm.bprime", bp >= 1 && bp <= b, format!("need 1 <= bprime ({bp}) <= b ({b})"));
            }
            if let (Some(b), Some(n)) = (b, finite_n) {
                self.constraint("algorithm.b", b <= n, format!("algorithm.b = {b} exceeds n = {n}"));
            }
        }
        let eta = eta.unwrap_or(if vr { StepSize::Auto } else { StepSize::Explicit(1.0) });
        if self.has("algorithm.eta_scale") && eta != StepSize::Auto {
            self.constraint("algorithm.eta_scale", false, "algorithm.eta_scale only scales eta = auto");
        }

        match &lambda {
            LambdaMode::Backtracking { growth, init } => {
                self.constraint("lambda.mode", name == AlgorithmName::Pccd, "backtracking is available for pccd only");
                self.constraint("lambda.growth", *growth > 1.0, "lambda.growth must be > 1");
                self.constraint("lambda.init", *init > 0.0, "lambda.init must be > 0");
                if eta != StepSize::Explicit(1.0) {
                    self.constraint("algorithm.eta", false, "backtracking uses the unit step; drop algorithm.eta");
                }
            }
            LambdaMode::Explicit(v) => {
                self.constraint("lambda.values", !v.is_empty(), "explicit lambda mode needs lambda.values");
                self.constraint("lambda.values", v.iter().all(|l| *l > 0.0), "lambda.values must be > 0");
                self.constraint(
                    "lambda.values",
                    v.is_empty() || v.len() == m,
                    format!("lambda.values needs one entry per block ({m})"),
                );
            }
            LambdaMode::Exact => {
                let supported = !streaming || stream == StreamKind::Quadratic;
                self.constraint(
                    "lambda.mode",
                    supported,
                    "exact_quadratic needs a quadratic or sigmoid family; use explicit lambda.values for a streaming sigmoid",
                );
            }
        }
        let constants_known = (l_hat.is_some() && l_tilde.is_some())
            || (!matches!(lambda, LambdaMode::Backtracking { .. })
                && (family == Family::Quadratic || (streaming && stream == StreamKind::Quadratic)));
        if self.has("smoothness.l_hat") != self.has("smoothness.l_tilde") {
            self.constraint("smoothness.l_hat", false, "smoothness.l_hat and smoothness.l_tilde go together");
        }
        if vr && eta == StepSize::Auto {
            self.constraint(
                "algorithm.eta",
                constants_known,
                "eta = auto needs computable constants (a quadratic with a fixed metric) or smoothness.l_hat/l_tilde",
            );
        }
        if record_u && streaming {
            self.constraint("diagnostics.record_u", false, "estimator-error recording needs a finite sum");
        }
        for check in &checks {
            let c = check.name();
            if check.needs_exact_method() {
                self.constraint(
                    "diagnostics.checks",
                    matches!(name, AlgorithmName::Pccd | AlgorithmName::ProxGd),
                    format!("check {c} applies to pccd or prox_gd"),
                );
                if matches!(check, CheckName::Lemma2 | CheckName::Theorem1 | CheckName::Corollary1) {
                    self.constraint("diagnostics.checks", constants_known, format!("check {c} needs L̂"));
                    self.constraint(
                        "diagnostics.checks",
                        eta == StepSize::Explicit(1.0),
                        format!("check {c} assumes the unit step"),
                    );
                }
            } else {
                self.constraint("diagnostics.checks", vr, format!("check {c} applies to the variance-reduced methods"));
                self.constraint(
                    "diagnostics.checks",
                    !streaming || *check == CheckName::ArithCost,
                    format!("check {c} needs a finite sum"),
                );
            }
            if check.needs_estimator_error() {
                self.constraint("diagnostics.checks", record_u, format!("check {c} needs diagnostics.record_u = true"));
            }
            if matches!(check, CheckName::Lemma6 | CheckName::Potential | CheckName::Theorem3 | CheckName::Corollary4) {
                self.constraint("diagnostics.checks", constants_known, format!("check {c} needs L̂ and L̃"));
            }
            if matches!(check, CheckName::Corollary1 | CheckName::Corollary4) {
                self.constraint(
                    "diagnostics.checks",
                    family == Family::Quadratic && convex,
                    format!("check {c} needs a convex quadratic (known PŁ constant)"),
                );
            }
        }

        if !self.errors.is_empty() {
            self.errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
            return Err(ConfigErrors(self.errors));
        }
        Ok(ExperimentConfig {
            problem: ProblemConfig {
                family,
                stream,
                n: finite_n,
                d: d.unwrap_or(0),
                m,
                condition_number,
                convex,
                reg,
                seed: problem_seed,
                margin,
                noise,
                surrogate_size,
                instance,
            },
            algorithm: AlgorithmConfig {
                name,
                iterations: iterations.unwrap_or(1),
                eta,
                eta_scale,
                p: p.unwrap_or(1.0),
                b: b.unwrap_or(1),
                bprime: bprime.unwrap_or(1),
                sharing: match name {
                    AlgorithmName::Vroccd => Sharing::Shared,
                    _ => sharing.unwrap_or(Sharing::Fresh),
                },
                schedule,
                allow_large_step,
                x0_scale,
            },
            lambda,
            l_hat,
            l_tilde,
            seed_base,
            seed_count,
            record_u,
            wall_time,
            checks,
            trace_path,
            report_path,
        })
    }
}

fn sqrt_round(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).clamp(1, n.max(1))
}

/// `zero`, `l1(λ)` or `box(lo, hi)`.
pub fn parse_regularizer(text: &str) -> Result<Regularizer, String> {
    let t = text.trim();
    if t == "zero" {
        return Ok(Regularizer::Zero);
    }
    let args = |prefix: &str| -> Option<Vec<Result<f64, String>>> {
        let inner = t.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
        Some(
            inner
                .split(',')
                .map(|a| a.trim().parse::<f64>().map_err(|_| format!("bad number '{}'", a.trim())))
                .collect(),
        )
    };
    if let Some(a) = args("l1") {
        let a: Vec<f64> = a.into_iter().collect::<Result<_, _>>()?;
        return match a[..] {
            [w] => Ok(Regularizer::L1(w)),
            _ => Err("l1 takes one weight".into()),
        };
    }
    if let Some(a) = args("box") {
        let a: Vec<f64> = a.into_iter().collect::<Result<_, _>>()?;
        return match a[..] {
            [lo, hi] => Ok(Regularizer::Box { lo, hi }),
            _ => Err("box takes (lo, hi)".into()),
        };
    }
    Err("expected zero, l1(w) or box(lo, hi)".into())
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    RawConfig::parse(text).resolve()
}

pub fn format_regularizer(reg: &Regularizer) -> String {
    match reg {
        Regularizer::Zero => "zero".into(),
        Regularizer::L1(w) => format!("l1({w})"),
        Regularizer::Box { lo, hi } => format!("box({lo}, {hi})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "problem.n = 8\nproblem.d = 4\nalgorithm.name = pccd\nalgorithm.K = 10\n";

    #[test]
    fn minimal_pccd_gets_unit_step() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.algorithm.eta, StepSize::Explicit(1.0));
        assert_eq!(cfg.problem.m, 1);
        assert_eq!(cfg.lambda, LambdaMode::Exact);
        assert_eq!(cfg.seed_count, 1);
    }

    #[test]
    fn p_out_of_range_names_the_rule() {
        let text = "problem.n = 8\nproblem.d = 4\nalgorithm.name = vrccd\nalgorithm.K = 10\nalgorithm.b = 4\nalgorithm.bprime = 2\nalgorithm.p = 1.5\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].line, Some(7));
        assert!(err.0[0].message.contains("p ∈ (0, 1]"), "{err}");
    }

    #[test]
    fn finite_sum_schedule_expands() {
        let text = "problem.n = 64\nproblem.d = 4\nalgorithm.name = vrccd\nalgorithm.K = 10\nalgorithm.schedule = finite_sum\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!((cfg.algorithm.b, cfg.algorithm.bprime), (64, 8));
        assert_eq!(cfg.algorithm.p, 8.0 / 72.0);
        assert_eq!(cfg.algorithm.eta, StepSize::Auto);
    }

    #[test]
    fn all_errors_are_reported_with_lines() {
        let text = "# header\nproblem.n = eight\nproblem.bogus = 1\nproblem.d = 4\nproblem.d = 5\nalgorithm.name = sccd\nalgorithm.K = 0\nalgorithm.p = 0.5\nalgorithm.b = 4\nnonsense\n";
        let err = parse_config(text).unwrap_err();
        let lines: Vec<Option<usize>> = err.0.iter().map(|e| e.line).collect();
        for l in [2, 3, 5, 7, 8, 10] {
            assert!(lines.contains(&Some(l)), "missing line {l}: {err}");
        }
    }

    #[test]
    fn schedule_rederives_p_from_bprime() {
        let text = "problem.n = 64\nproblem.d = 4\nalgorithm.name = vrccd\nalgorithm.K = 10\nalgorithm.schedule = finite_sum\nalgorithm.bprime = 4\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!((cfg.algorithm.b, cfg.algorithm.bprime, cfg.algorithm.p), (64, 4, 4.0 / 68.0));
        let clash = format!("{text}algorithm.p = 0.5\n");
        assert!(parse_config(&clash).unwrap_err().to_string().contains("set by algorithm.schedule"));
        let stream = "problem.family = streaming\nproblem.d = 4\nalgorithm.name = vroccd\nalgorithm.K = 10\nalgorithm.schedule = infinite_sum\nalgorithm.b = 100\n";
        let cfg = parse_config(stream).unwrap();
        assert_eq!((cfg.algorithm.bprime, cfg.algorithm.sharing), (10, Sharing::Shared));
    }

    #[test]
    fn sccd_forces_unit_probability() {
        let text = "problem.n = 8\nproblem.d = 4\nalgorithm.name = sccd\nalgorithm.K = 5\nalgorithm.b = 4\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!((cfg.algorithm.p, cfg.algorithm.bprime), (1.0, 4));
    }

    #[test]
    fn regularizer_forms() {
        assert_eq!(parse_regularizer("zero"), Ok(Regularizer::Zero));
        assert_eq!(parse_regularizer("l1(0.5)"), Ok(Regularizer::L1(0.5)));
        assert_eq!(parse_regularizer("box(-1, 2)"), Ok(Regularizer::Box { lo: -1.0, hi: 2.0 }));
        assert!(parse_regularizer("l2(1)").is_err());
        assert!(parse_regularizer("box(1)").is_err());
        for reg in [Regularizer::Zero, Regularizer::L1(0.25), Regularizer::Box { lo: -1.5, hi: 2.0 }] {
            assert_eq!(parse_regularizer(&format_regularizer(&reg)), Ok(reg));
        }
    }

    #[test]
    fn checks_must_fit_the_method() {
        let text = format!("{MINIMAL}diagnostics.checks = [theorem1, lemma5]\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("lemma5"), "{err}");
        let ok = format!("{MINIMAL}diagnostics.checks = theorem1, descent\n");
        assert_eq!(parse_config(&ok).unwrap().checks, vec![CheckName::Theorem1, CheckName::Descent]);
    }

    #[test]
    fn overrides_replace_entries() {
        let mut raw = RawConfig::parse(MINIMAL);
        raw.set("algorithm.K", "3").unwrap();
        assert_eq!(raw.resolve().unwrap().algorithm.iterations, 3);
        assert!(RawConfig::parse(MINIMAL).set("algorithm.nope", "1").is_err());
    }

    #[test]
    fn auto_step_needs_constants() {
        let text = "problem.family = sigmoid\nproblem.n = 8\nproblem.d = 4\nalgorithm.name = vrccd\nalgorithm.K = 5\nalgorithm.b = 4\nalgorithm.bprime = 2\nalgorithm.p = 0.5\n";
        assert!(parse_config(text).unwrap_err().to_string().contains("eta = auto"));
        let supplied = format!("{text}smoothness.l_hat = 1\nsmoothness.l_tilde = 1\n");
        assert!(parse_config(&supplied).is_ok());
    }
}
