//! Configuration-driven experiment runner.
//!
//! A config is flat `key=value` text. Pairs are separated by whitespace or
//! newlines and `#` starts a comment running to the end of the line. Every
//! experiment accepts only the keys it uses and fills the rest with defaults,
//! so a config is also a complete record of the run once echoed into the
//! summary.

use std::collections::BTreeMap;
use std::fmt::{self, Display};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fracops::{
    commutation_report_1, commutation_residual_2, fundamental_identity_report, SampledPath, TimeGrid,
};
use crate::fundsol::{
    critical_exponent, default_epsilons, linear_fit, optimality_with_profile, write_optimality_csv,
    FundamentalSolutionEvaluator, Regime,
};
use crate::harnack::{
    checkerboard_benchmark, continuity_check, harnack_ratio_sweep, max_principle_check,
    random_max_principle_problem, ramp_benchmark, write_harnack_csv, write_oscillation_csv,
    HarnackConfig, HarnackReport, NEGATIVITY_TOL,
};
use crate::kernels::{
    mittag_leffler, yosida_identity_residual, yosida_kernels, FractionalOrder, KernelTable,
    MittagLefflerParams,
};
use crate::solver::{
    constant_field, solve_scalar_relaxation, solve_subdiffusion, CoefficientField, ProblemSpec, SpaceGrid,
};
use crate::special::erfc;

/// Seed used when a config does not set `seed`.
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Name of the key=value summary written next to the CSV files.
pub const SUMMARY_FILE: &str = "summary.txt";

/// The experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Identities,
    Converge,
    Harnack,
    Optimality,
    Continuity,
    MaxPrinciple,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Identities => "identities",
            Self::Converge => "converge",
            Self::Harnack => "harnack",
            Self::Optimality => "optimality",
            Self::Continuity => "continuity",
            Self::MaxPrinciple => "maxprinciple",
        }
    }

    /// Keys accepted besides `experiment` and `output`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Self::Identities => &["alpha", "steps"],
            Self::Converge => &["alpha", "sigma", "steps", "t_end"],
            Self::Harnack => &[
                "alpha", "N", "cells", "steps", "domain", "coefficients", "a", "low", "high", "block",
                "delta", "eta", "tau", "t0", "x0", "r", "p",
            ],
            Self::Optimality => &["alpha", "N", "p", "epsilons"],
            Self::Continuity => &["alpha", "cells", "steps", "domain", "x0", "r", "eta", "ramp", "levels"],
            Self::MaxPrinciple => &["seed", "runs"],
        }
    }
}

impl Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identities" => Self::Identities,
            "converge" => Self::Converge,
            "harnack" => Self::Harnack,
            "optimality" => Self::Optimality,
            "continuity" => Self::Continuity,
            "maxprinciple" => Self::MaxPrinciple,
            other => return Err(Error::Parse(format!("unknown experiment `{other}`"))),
        })
    }
}

/// How the Harnack benchmark builds `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientRecipe {
    Constant { a: f64 },
    /// blocks of physical width `block` alternating between `low` and `high`
    Checkerboard { block: f64, low: f64, high: f64 },
}

/// A parsed and validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub alpha: f64,
    pub dim: usize,
    pub cells: usize,
    pub steps: usize,
    pub t_end: f64,
    pub sigma: f64,
    pub domain: (f64, f64),
    pub coefficients: CoefficientRecipe,
    pub delta: f64,
    pub eta: f64,
    pub tau: f64,
    pub t0: f64,
    pub x0: [f64; 2],
    pub r: f64,
    pub p_values: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub seed: u64,
    pub runs: usize,
    pub ramp: f64,
    pub levels: usize,
    pub output: Option<PathBuf>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

struct Raw(BTreeMap<String, String>);

impl Raw {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| parse_err(format!("cannot parse `{key}={v}`"))),
        }
    }

    fn list(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| parse_err(format!("cannot parse `{key}={v}`"))))
                .collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| parse_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and validates; every failure is an [`Error::Parse`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for token in line.split_whitespace() {
                let (k, v) = token
                    .split_once('=')
                    .ok_or_else(|| parse_err(format!("expected key=value, got `{token}`")))?;
                if k.is_empty() || v.is_empty() {
                    return Err(parse_err(format!("empty key or value in `{token}`")));
                }
                if raw.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(parse_err(format!("duplicate key `{k}`")));
                }
            }
        }
        let experiment: Experiment = raw
            .get("experiment")
            .ok_or_else(|| parse_err("missing key `experiment`"))?
            .parse()?;
        for k in raw.keys() {
            if k != "experiment" && k != "output" && !experiment.keys().contains(&k.as_str()) {
                return Err(parse_err(format!("key `{k}` is not used by experiment {experiment}")));
            }
        }
        let raw = Raw(raw);
        let cfg = Self::resolve(experiment, &raw)?;
        cfg.validate().map_err(|e| match e {
            Error::Parse(m) => Error::Parse(m),
            other => Error::Parse(other.to_string()),
        })?;
        Ok(cfg)
    }

    fn resolve(experiment: Experiment, raw: &Raw) -> Result<Self> {
        use Experiment::*;
        let continuity = experiment == Continuity;
        let domain = raw.list("domain", if continuity { vec![-1.0, 1.0] } else { vec![-3.0, 3.0] })?;
        if domain.len() != 2 {
            return Err(parse_err("domain takes two values: lower,upper"));
        }
        let x0 = raw.list("x0", vec![0.0])?;
        let x0 = match x0[..] {
            [x] => [x, x],
            [x, y] => [x, y],
            _ => return Err(parse_err("x0 takes one or two values")),
        };
        let coefficients = match raw.get("coefficients", "checkerboard".to_string())?.as_str() {
            "constant" => CoefficientRecipe::Constant { a: raw.get("a", 1.0)? },
            "checkerboard" => CoefficientRecipe::Checkerboard {
                block: raw.get("block", 0.2)?,
                low: raw.get("low", 1.0)?,
                high: raw.get("high", 5.0)?,
            },
            other => return Err(parse_err(format!("unknown coefficients `{other}`"))),
        };
        if matches!(coefficients, CoefficientRecipe::Constant { .. })
            && ["low", "high", "block"].iter().any(|k| raw.0.contains_key(*k))
        {
            return Err(parse_err("low/high/block need coefficients=checkerboard"));
        }
        if matches!(coefficients, CoefficientRecipe::Checkerboard { .. }) && raw.0.contains_key("a") {
            return Err(parse_err("a needs coefficients=constant"));
        }
        let alpha = raw.get("alpha", 0.5)?;
        let dim = raw.get("N", 1)?;
        let (cells, steps) = match experiment {
            Continuity => (200, 8192),
            Harnack => (60, 100),
            Converge => (0, 64),
            Identities => (0, 512),
            _ => (0, 0),
        };
        let p_default = match experiment {
            Optimality => {
                let a = FractionalOrder::new(alpha).map_err(|e| parse_err(e.to_string()))?;
                vec![1.0, critical_exponent(a, dim.clamp(1, 3)), 2.0]
            }
            _ => vec![0.5, 1.0, 1.5],
        };
        Ok(Self {
            experiment,
            alpha,
            dim,
            cells: raw.get("cells", cells)?,
            steps: raw.get("steps", steps)?,
            t_end: raw.get("t_end", 1.0)?,
            sigma: raw.get("sigma", 1.0)?,
            domain: (domain[0], domain[1]),
            coefficients,
            delta: raw.get("delta", 0.5)?,
            eta: raw.get("eta", if continuity { 1.0 } else { 2.0 })?,
            tau: raw.get("tau", 1.0)?,
            t0: raw.get("t0", 0.0)?,
            x0,
            r: raw.get("r", if continuity { 0.5 } else { 1.0 })?,
            p_values: raw.list("p", p_default)?,
            epsilons: raw.list("epsilons", default_epsilons())?,
            seed: raw.get("seed", DEFAULT_SEED)?,
            runs: raw.get("runs", 200)?,
            ramp: raw.get("ramp", 0.01)?,
            levels: raw.get("levels", 4)?,
            output: raw.0.get("output").map(PathBuf::from),
        })
    }

    fn order(&self) -> Result<FractionalOrder> {
        FractionalOrder::new(self.alpha)
    }

    pub fn harnack_config(&self) -> Result<HarnackConfig> {
        HarnackConfig::new(self.delta, self.eta, self.tau, self.t0, self.x0, self.r, self.order()?)
    }

    /// Continuity horizon `η r₀^{2/α}`.
    pub fn continuity_horizon(&self) -> f64 {
        self.eta * self.r.powf(2.0 / self.alpha)
    }

    fn radii(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.r / f64::powi(2.0, k as i32)).collect()
    }

    /// Checks every parameter against the module it feeds.
    pub fn validate(&self) -> Result<()> {
        use Experiment::*;
        if self.experiment != MaxPrinciple {
            self.order()?;
        }
        let (lo, hi) = self.domain;
        match self.experiment {
            Identities => {
                if self.steps < 8 {
                    return Err(parse_err("identities need steps >= 8"));
                }
            }
            Converge => {
                if self.steps < 2 || !(self.t_end > 0.0 && self.t_end.is_finite()) {
                    return Err(parse_err("converge needs steps >= 2 and t_end > 0"));
                }
                if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
                    return Err(parse_err("sigma must be nonnegative"));
                }
            }
            Harnack => {
                if !matches!(self.dim, 1 | 2) {
                    return Err(parse_err("harnack supports N = 1 or 2"));
                }
                if self.cells < 4 || self.steps < 2 || !(lo < hi) {
                    return Err(parse_err("harnack needs cells >= 4, steps >= 2 and lower < upper"));
                }
                let hc = self.harnack_config()?;
                let reach = hc.eta * hc.r;
                if (0..self.dim).any(|k| hc.x0[k] - reach < lo || hc.x0[k] + reach > hi) {
                    return Err(parse_err(format!("B(x0, eta*r) with radius {reach} leaves the domain")));
                }
                if let CoefficientRecipe::Checkerboard { block, low, high } = self.coefficients {
                    let per = block / ((hi - lo) / self.cells as f64);
                    if !(per >= 1.0 - 1e-9) || (per - per.round()).abs() > 1e-9 * per {
                        return Err(parse_err(format!("block {block} is not a multiple of the cell size")));
                    }
                    if !(low > 0.0 && high >= low) {
                        return Err(parse_err("checkerboard needs 0 < low <= high"));
                    }
                } else if let CoefficientRecipe::Constant { a } = self.coefficients {
                    if !(a > 0.0 && a.is_finite()) {
                        return Err(parse_err("a must be positive"));
                    }
                }
                self.check_p()?;
            }
            Optimality => {
                if !(1..=3).contains(&self.dim) {
                    return Err(parse_err("optimality supports N in 1..=3"));
                }
                self.check_p()?;
                let e = &self.epsilons;
                if e.len() < 3 || e.iter().any(|v| !(*v > 0.0 && *v < 1.0)) || e.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(parse_err("epsilons must be at least three decreasing values in (0, 1)"));
                }
            }
            Continuity => {
                if self.cells < 4 || self.steps < 2 || !(lo < hi) {
                    return Err(parse_err("continuity needs cells >= 4, steps >= 2 and lower < upper"));
                }
                if !(self.r > 0.0 && self.eta > 0.0 && self.ramp > 0.0) || self.levels < 2 {
                    return Err(parse_err("continuity needs r, eta, ramp > 0 and levels >= 2"));
                }
                if self.x0[0] - self.r < lo || self.x0[0] + self.r > hi {
                    return Err(parse_err("B(x0, r) leaves the domain"));
                }
            }
            MaxPrinciple => {
                if self.runs == 0 {
                    return Err(parse_err("runs must be positive"));
                }
            }
        }
        Ok(())
    }

    fn check_p(&self) -> Result<()> {
        if self.p_values.is_empty() || self.p_values.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(parse_err("p must be a list of positive numbers"));
        }
        Ok(())
    }
}

/// One output file held in memory until the run finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Ordered key=value lines; `check` records an assertion.
#[derive(Debug, Default)]
struct Summary {
    lines: Vec<(String, String)>,
    failed: bool,
}

/// Rendering of a summary value.
trait SummaryValue {
    fn render(&self) -> String;
}

impl SummaryValue for f64 {
    /// Shortest round-trip digits, switching to exponent form outside `[1e-4, 1e16)`.
    fn render(&self) -> String {
        let x = *self + 0.0;
        if x != 0.0 && x.is_finite() && !(1e-4..1e16).contains(&x.abs()) {
            format!("{x:e}")
        } else {
            x.to_string()
        }
    }
}

macro_rules! plain_summary_value {
    ($($t:ty),*) => {$(
        impl SummaryValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
plain_summary_value!(usize, u64, bool, &str, String, Experiment);

impl Summary {
    fn value(&mut self, key: impl Into<String>, v: impl SummaryValue) {
        self.lines.push((key.into(), v.render()));
    }

    fn check(&mut self, key: impl Into<String>, ok: bool) {
        self.failed |= !ok;
        self.lines.push((key.into(), if ok { "pass" } else { "fail" }.into()));
    }
}

/// What a run produced: summary lines, CSV artifacts and the overall verdict.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Vec<(String, String)>,
    pub artifacts: Vec<Artifact>,
    pub passed: bool,
}

impl RunOutcome {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.summary {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }
}

fn csv(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Runs the experiment entirely in memory.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let mut s = Summary::default();
    s.value("experiment", config.experiment);
    let artifacts = match config.experiment {
        Experiment::Identities => run_identities(config, &mut s)?,
        Experiment::Converge => run_converge(config, &mut s)?,
        Experiment::Harnack => run_harnack(config, &mut s)?,
        Experiment::Optimality => run_optimality(config, &mut s)?,
        Experiment::Continuity => run_continuity(config, &mut s)?,
        Experiment::MaxPrinciple => run_max_principle(config, &mut s)?,
    };
    let passed = !s.failed;
    s.value("status", if passed { "pass" } else { "fail" });
    Ok(RunOutcome { summary: s.lines, artifacts, passed })
}

fn order_of(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}

fn run_identities(c: &ExperimentConfig, s: &mut Summary) -> Result<Vec<Artifact>> {
    let alpha = c.order()?;
    let a = alpha.value();
    s.value("alpha", a);
    s.value("steps", c.steps);

    let m = c.steps;
    let dt = 1.0 / m as f64;
    let ga = KernelTable::convolution_weights(a, dt, m)?;
    let gb = KernelTable::convolution_weights(1.0 - a, dt, m)?;
    let dev = ga.convolve(&gb)?[1..].iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    s.value("g_conv_deviation", dev);
    s.check("g_conv_identity", dev <= 1e-12);

    let (ny, dty) = (1024, 1.0 / 1024.0);
    let rl = KernelTable::riemann_liouville(1.0 - a, dty, ny)?;
    let mut yosida = b"n,l1_distance\n".to_vec();
    let mut dists = Vec::new();
    let mut monotone = true;
    for n in [1u32, 4, 16, 64, 256] {
        // yosida_kernels refuses tables that lose monotonicity
        match yosida_kernels(alpha, n, dty, ny) {
            Ok((g, _)) => {
                let d = g.l1_distance(&rl)?;
                writeln!(yosida, "{n},{d}")?;
                dists.push(d);
            }
            Err(Error::Accuracy(_)) => monotone = false,
            Err(e) => return Err(e),
        }
    }
    let decreasing = dists.len() == 5 && dists.windows(2).all(|w| w[1] < w[0]);
    s.check("yosida_monotone", monotone);
    s.check("yosida_l1_decreasing", decreasing);
    let last = dists.last().copied().unwrap_or(f64::INFINITY);
    s.value("yosida_l1_n256", last);
    s.check("yosida_l1_small", last < 0.05);

    let mut ident = b"n,m,residual\n".to_vec();
    let mut worst_order = f64::INFINITY;
    for n in [1u32, 4] {
        let e1 = yosida_identity_residual(alpha, n, 128, 0.1)?;
        let e2 = yosida_identity_residual(alpha, n, 256, 0.1)?;
        writeln!(ident, "{n},128,{e1}\n{n},256,{e2}")?;
        worst_order = worst_order.min(order_of(e1, e2));
    }
    s.value("yosida_identity_order", worst_order);
    s.check("yosida_identity", worst_order >= 0.8);

    let exp_err = (0..100)
        .map(|k| {
            let z = -20.0 + 40.0 * k as f64 / 99.0;
            let e = mittag_leffler(MittagLefflerParams::new(1.0, 1.0)?, z)?;
            Ok((e - z.exp()).abs() / z.exp())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    s.value("ml_exp_rel_error", exp_err);
    s.check("ml_exp", exp_err <= 1e-10);
    let half = mittag_leffler(MittagLefflerParams::new(0.5, 1.0)?, -1.0)?;
    let erfc_err = (half - std::f64::consts::E * erfc(1.0)).abs();
    s.value("ml_erfc_error", erfc_err);
    s.check("ml_erfc", erfc_err <= 1e-8);

    let fund = |m: usize| -> Result<(f64, f64)> {
        let g = TimeGrid::covering(1.0, m)?;
        let (k, _) = yosida_kernels(alpha, 4, g.dt(), m)?;
        let u = SampledPath::from_fn(g, |t| 1.0 + (2.0 * t).sin());
        let r = fundamental_identity_report(&u, &k, |y| y * y, |y| 2.0 * y)?;
        Ok((r.max_residual, r.min_history()))
    };
    let ((f1, h1), (f2, h2)) = (fund(64)?, fund(128)?);
    s.value("fundamental_identity_factor", f1 / f2);
    s.check("fundamental_identity", f1 / f2 >= 1.7);
    s.value("history_min", h1.min(h2));
    s.check("history_nonneg", h1.min(h2) >= -1e-12);

    let comm1 = |m: usize| -> Result<f64> {
        let g = TimeGrid::covering(1.0, m)?;
        let v = SampledPath::from_fn(g, |t| t);
        let phi = SampledPath::from_fn(g, |t| t);
        Ok(commutation_report_1(&v, &phi, alpha)?.max_residual)
    };
    let comm2 = |m: usize| -> Result<f64> {
        let g = TimeGrid::covering(1.0, m)?;
        let (k, _) = yosida_kernels(alpha, 2, g.dt(), m)?;
        let v = SampledPath::from_fn(g, |t| (3.0 * t).cos());
        let phi = SampledPath::from_fn(g, |t| t * t + t);
        commutation_residual_2(&k, &v, &phi)
    };
    let mut comm = b"lemma,m,residual\n".to_vec();
    for (name, f) in [("commutation_1", &comm1 as &dyn Fn(usize) -> Result<f64>), ("commutation_2", &comm2)] {
        let (r1, r2) = (f(64)?, f(128)?);
        writeln!(comm, "{name},64,{r1}\n{name},128,{r2}")?;
        s.value(format!("{name}_order"), order_of(r1, r2));
        s.check(name, order_of(r1, r2) >= 0.8);
    }
    Ok(vec![
        Artifact { name: "yosida_l1.csv".into(), contents: yosida },
        Artifact { name: "yosida_identity.csv".into(), contents: ident },
        Artifact { name: "commutation.csv".into(), contents: comm },
    ])
}

fn run_converge(c: &ExperimentConfig, s: &mut Summary) -> Result<Vec<Artifact>> {
    let alpha = c.order()?;
    for (k, v) in [("alpha", c.alpha), ("sigma", c.sigma), ("t_end", c.t_end)] {
        s.value(k, v);
    }
    let exact = mittag_leffler(MittagLefflerParams::new(c.alpha, 1.0)?, -c.sigma * c.t_end.powf(c.alpha))?;
    let mut out = b"dt,error\n".to_vec();
    let mut pts = Vec::new();
    for k in 0..3 {
        let m = c.steps << k;
        let path = solve_scalar_relaxation(alpha, c.sigma, 1.0, TimeGrid::covering(c.t_end, m)?)?;
        let err = (path.values()[m] - exact).abs();
        let dt = c.t_end / m as f64;
        writeln!(out, "{dt},{err}")?;
        pts.push((dt.ln(), err.ln()));
    }
    let (slope, _) = linear_fit(&pts);
    let target = 2.0 - c.alpha;
    s.value("relaxation_order", slope);
    s.value("expected_order", target);
    s.check("relaxation_convergence", (slope - target).abs() <= 0.3);
    Ok(vec![Artifact { name: "converge.csv".into(), contents: out }])
}

fn harnack_spec(c: &ExperimentConfig, hc: &HarnackConfig, refine: usize) -> Result<ProblemSpec> {
    let cells = c.cells * refine;
    let steps = c.steps * refine;
    match c.coefficients {
        CoefficientRecipe::Checkerboard { block, low, high } => {
            checkerboard_benchmark(hc, c.dim, c.domain, cells, steps, block, low, high)
        }
        // a checkerboard with equal values is the constant field
        CoefficientRecipe::Constant { a } => {
            let h = (c.domain.1 - c.domain.0) / cells as f64;
            checkerboard_benchmark(hc, c.dim, c.domain, cells, steps, h, a, a)
        }
    }
}

fn constant_solution_spec(base: &ProblemSpec) -> ProblemSpec {
    let u0 = vec![1.0; base.u0.len()];
    ProblemSpec::new(base.alpha, base.space.clone(), base.time, u0, base.coefficients.clone())
        .with_boundary(constant_field(1.0))
}

fn run_harnack(c: &ExperimentConfig, s: &mut Summary) -> Result<Vec<Artifact>> {
    let hc = c.harnack_config()?;
    s.value("alpha", c.alpha);
    s.value("N", c.dim);
    s.value("p", fmt_list(&c.p_values));
    s.value("horizon", hc.horizon());
    let coarse = harnack_spec(c, &hc, 1)?;
    let fine = harnack_spec(c, &hc, 2)?;
    let constant = constant_solution_spec(&coarse);
    info!("harnack: solving two grids and the constant case");
    let sweep = |spec: &ProblemSpec| -> Result<Vec<HarnackReport>> {
        harnack_ratio_sweep(&solve_subdiffusion(spec)?, &hc, &c.p_values)
    };
    let (a, (b, k)) = rayon::join(|| sweep(&coarse), || rayon::join(|| sweep(&fine), || sweep(&constant)));
    let (a, b, k) = (a?, b?, k?);

    let finite = a.iter().chain(&b).all(|r| r.ratio.is_finite() && r.essinf_plus > 0.0);
    s.check("ratio_finite", finite);
    let change = a
        .iter()
        .zip(&b)
        .map(|(x, y)| ((x.ratio - y.ratio) / y.ratio).abs())
        .fold(0.0, f64::max);
    for (x, y) in a.iter().zip(&b) {
        s.value(format!("ratio@{}", x.p), y.ratio);
        s.value(format!("in_range@{}", x.p), x.in_range);
    }
    s.value("two_grid_change", change);
    s.check("two_grid_stable", finite && change < 0.05);
    let const_dev = k.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
    s.value("constant_ratio_deviation", const_dev);
    s.check("constant_ratio", const_dev <= 1e-12);

    let rows: Vec<HarnackReport> = a.into_iter().chain(b).collect();
    Ok(vec![Artifact { name: "harnack.csv".into(), contents: csv(|w| write_harnack_csv(&rows, w))? }])
}

fn file_tag(p: f64) -> String {
    format!("{p}").replace('.', "_")
}

fn run_optimality(c: &ExperimentConfig, s: &mut Summary) -> Result<Vec<Artifact>> {
    let alpha = c.order()?;
    s.value("alpha", c.alpha);
    s.value("N", c.dim);
    s.value("critical_p", critical_exponent(alpha, c.dim));
    let ev = FundamentalSolutionEvaluator::new(alpha, c.dim)?;
    let mut profile = Vec::new();
    let single = c.p_values.len() == 1;
    let mut out = Vec::new();
    for &p in &c.p_values {
        info!("optimality: p = {p}");
        let rep = optimality_with_profile(&ev, p, &c.epsilons, &mut profile)?;
        let key = |k: &str| if single { k.to_string() } else { format!("{k}@{p}") };
        s.value(key("divergence_exponent"), rep.exponents.divergence_exponent);
        match rep.regime {
            Regime::Convergent => {
                s.value(key("regime"), "convergent");
                s.value(key("last_decade_change"), rep.last_decade_change);
                s.check(key("convergence"), rep.passes());
            }
            Regime::Logarithmic => {
                s.value(key("regime"), "logarithmic");
                s.value(key("log_slope"), rep.log_slope);
                s.value(key("log_fit_residual"), rep.log_fit_residual);
                s.check(key("log_fit"), rep.passes() && rep.log_slope > 0.0);
            }
            Regime::Power => {
                s.value(key("regime"), "power");
                s.value(key("power_slope"), rep.power_slope);
                s.value(key("predicted_power_slope"), rep.predicted_power_slope);
                s.check(key("power_fit"), rep.passes());
            }
        }
        let name = if single { "optimality.csv".to_string() } else { format!("optimality_p{}.csv", file_tag(p)) };
        out.push(Artifact { name, contents: csv(|w| write_optimality_csv(&rep.points, w))? });
    }
    Ok(out)
}

fn run_continuity(c: &ExperimentConfig, s: &mut Summary) -> Result<Vec<Artifact>> {
    let alpha = c.order()?;
    let radii = c.radii();
    s.value("alpha", c.alpha);
    s.value("radii", fmt_list(&radii));
    let t_end = c.continuity_horizon();
    s.value("t_end", t_end);
    let spec = ramp_benchmark(alpha, c.domain, c.cells, t_end, c.steps, c.ramp)?;
    info!("continuity: solving {} steps", c.steps);
    let result = solve_subdiffusion(&spec)?;
    let rep = continuity_check(&result, c.x0, &radii, c.eta)?;
    s.value("osc", fmt_list(&rep.decay.osc));
    s.value("decay_slope", rep.decay.slope);
    s.check("decay_positive", rep.decay.slope > crate::harnack::MIN_DECAY_SLOPE);
    s.check("osc_monotone", rep.decay.is_monotone());
    s.value("smallest_sup", rep.smallest_sup);
    s.value("extrapolated", rep.extrapolated);
    s.check("smallest_cylinder", rep.smallest_sup <= 1.1 * rep.extrapolated);
    Ok(vec![Artifact { name: "oscillation.csv".into(), contents: csv(|w| write_oscillation_csv(&rep.decay, w))? }])
}

/// Seed of run `i` in a max-principle sweep.
pub fn run_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64)
}

fn run_max_principle(c: &ExperimentConfig, s: &mut Summary) -> Result<Vec<Artifact>> {
    s.value("seed", c.seed);
    s.value("runs", c.runs);
    let rows = (0..c.runs)
        .into_par_iter()
        .map(|i| {
            let two_d = i % 2 == 1;
            let nonneg = i % 4 >= 2;
            let spec = random_max_principle_problem(run_seed(c.seed, i), two_d, nonneg)?;
            let rep = max_principle_check(&solve_subdiffusion(&spec)?)?;
            Ok((i, two_d, nonneg, rep))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = b"run,dim,nonnegative_data,violation,u_min\n".to_vec();
    let (mut worst, mut neg_min) = (0.0f64, f64::INFINITY);
    for (i, two_d, nonneg, rep) in &rows {
        writeln!(out, "{i},{},{nonneg},{},{}", if *two_d { 2 } else { 1 }, rep.worst_violation, rep.u_min)?;
        worst = worst.max(rep.worst_violation);
        if *nonneg {
            neg_min = neg_min.min(rep.u_min);
        }
    }
    s.value("worst_violation", worst);
    s.check("data_bounds", worst <= 1e-10);
    s.value("nonnegative_runs_min", neg_min);
    s.check("nonnegativity", neg_min >= -1e-10);

    // strict interior margin for a nonconstant bump
    let space = SpaceGrid::new_1d(-1.0, 1.0, 40)?;
    let u0 = ProblemSpec::u0_from_fn(&space, crate::harnack::bump([0.0; 2], 0.5, 1));
    let spec = ProblemSpec::new(
        FractionalOrder::new(0.5)?,
        space.clone(),
        TimeGrid::covering(1.0, 40)?,
        u0,
        CoefficientField::constant(&space, 1.0)?,
    );
    let rep = max_principle_check(&solve_subdiffusion(&spec)?)?;
    s.value("interior_margin", rep.interior_margin);
    s.check("strict_interior", rep.passes(NEGATIVITY_TOL));
    Ok(vec![Artifact { name: "maxprinciple.csv".into(), contents: out }])
}

/// Writes every artifact and the summary into `dir`: all contents go to
/// temporary files first and are renamed only when every write succeeded.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(&str, &[u8])> = outcome.artifacts.iter().map(|a| (a.name.as_str(), &a.contents[..])).collect();
    let summary = outcome.summary_text();
    files.push((SUMMARY_FILE, summary.as_bytes()));
    let pid = std::process::id();
    let mut staged = Vec::new();
    for (name, bytes) in &files {
        let tmp = dir.join(format!(".{name}.tmp{pid}"));
        let written = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        });
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(e.into());
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dest) in staged {
        fs::rename(tmp, dest)?;
    }
    Ok(())
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    AssertionFailed = 1,
    ConfigError = 2,
    NumericalFailure = 3,
}

/// Parse, run and write; returns the exit status and a message for failures.
pub fn execute(config_path: &Path, out: Option<&Path>) -> (ExitStatus, Option<String>) {
    let config = match ExperimentConfig::from_file(config_path) {
        Ok(c) => c,
        Err(e) => return (ExitStatus::ConfigError, Some(e.to_string())),
    };
    let dir = out.map(Path::to_path_buf).or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    let outcome = match run(&config) {
        Ok(o) => o,
        Err(e) => return (ExitStatus::NumericalFailure, Some(e.to_string())),
    };
    if let Err(e) = write_outputs(&outcome, &dir) {
        return (ExitStatus::NumericalFailure, Some(e.to_string()));
    }
    if outcome.passed {
        (ExitStatus::Pass, None)
    } else {
        let failed: Vec<&str> =
            outcome.summary.iter().filter(|(k, v)| v == "fail" && k != "status").map(|(k, _)| k.as_str()).collect();
        (ExitStatus::AssertionFailed, Some(format!("failed: {}", failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_defaults() {
        let c = ExperimentConfig::parse("# demo\nexperiment=harnack alpha=0.5\np=0.5,1 # two\n").unwrap();
        assert_eq!(c.experiment, Experiment::Harnack);
        assert_eq!(c.p_values, vec![0.5, 1.0]);
        assert_eq!((c.cells, c.steps, c.seed), (60, 100, DEFAULT_SEED));
        assert_eq!(c.coefficients, CoefficientRecipe::Checkerboard { block: 0.2, low: 1.0, high: 5.0 });
    }

    #[test]
    fn rejects_malformed_configs() {
        for bad in [
            "alpha=0.5",
            "experiment=harnack alpha",
            "experiment=harnack alpha=0.5 alpha=0.6",
            "experiment=identities cells=3",
            "experiment=nothing",
            "experiment=identities alpha=1.5",
            "experiment=harnack delta=1.2",
            "experiment=harnack r=2",
            "experiment=harnack block=0.15",
            "experiment=optimality epsilons=0.1,0.2,0.01",
            "experiment=harnack coefficients=constant low=2",
            "experiment=converge steps=x",
        ] {
            assert!(matches!(ExperimentConfig::parse(bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn identity_suite_passes() {
        let c = ExperimentConfig::parse("experiment=identities alpha=0.5").unwrap();
        let out = run(&c).unwrap();
        assert_eq!(out.get("g_conv_identity"), Some("pass"));
        assert!(out.passed, "{}", out.summary_text());
        assert_eq!(out.summary.last().unwrap(), &("status".to_string(), "pass".to_string()));
    }

    #[test]
    fn converge_reports_order() {
        let out = run(&ExperimentConfig::parse("experiment=converge").unwrap()).unwrap();
        assert_eq!(out.get("relaxation_convergence"), Some("pass"), "{}", out.summary_text());
        let csv = String::from_utf8(out.artifacts[0].contents.clone()).unwrap();
        assert!(csv.starts_with("dt,error\n0.015625,"));
    }

    #[test]
    fn outputs_are_renamed_into_place() {
        let dir = tempfile::tempdir().unwrap();
        let out = RunOutcome {
            summary: vec![("status".into(), "pass".into())],
            artifacts: vec![Artifact { name: "a.csv".into(), contents: b"x\n".to_vec() }],
            passed: true,
        };
        write_outputs(&out, dir.path()).unwrap();
        let mut names: Vec<String> =
            fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        names.sort();
        assert_eq!(names, ["a.csv", "summary.txt"]);
        assert_eq!(fs::read_to_string(dir.path().join("summary.txt")).unwrap(), "status=pass\n");
    }

    #[test]
    fn summary_floats_are_compact_and_exact() {
        for x in [0.5, 3.1086244689504383e-15, -2.5e20, 1234.5678, 1.0 / 3.0] {
            let r = x.render();
            assert_eq!(r.parse::<f64>().unwrap(), x, "{r}");
        }
        assert_eq!(3.1086244689504383e-15.render(), "3.1086244689504383e-15");
        assert_eq!((-0.0f64).render(), "0");
    }

    #[test]
    fn run_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..200).map(|i| run_seed(DEFAULT_SEED, i)).collect();
        assert_eq!(seeds.len(), 200);
    }
}
