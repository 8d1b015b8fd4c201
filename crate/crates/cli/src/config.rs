//! Experiment configuration and its validation.

use std::path::{Path, PathBuf};

use qdx_core::bounds::{ChainConfig, EnvelopeConfig, SandwichConfig, DEFAULT_THRESHOLD_INF, DEFAULT_THRESHOLD_ZERO};
use qdx_core::tracemap::lambda_zero;
use qdx_core::{Error, PotentialSpec, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub potential: PotentialSpec,
    pub task: Task,
    /// Relative paths resolve against the config file's directory.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; `QDX_WORKERS` overrides it.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Evolve(EvolveTask),
    Tracemap(TracemapTask),
    Dimension(DimensionTask),
    Exponents(ExponentsTask),
    Bounds(BoundsTask),
    Sandwich(SandwichConfig),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Evolve(_) => "evolve",
            Task::Tracemap(_) => "tracemap",
            Task::Dimension(_) => "dimension",
            Task::Exponents(_) => "exponents",
            Task::Bounds(_) => "bounds",
            Task::Sandwich(_) => "sandwich",
        }
    }
}

fn default_tol() -> f64 {
    1e-12
}
fn default_quad_tol() -> f64 {
    1e-6
}
fn default_true() -> bool {
    true
}
fn default_zero() -> f64 {
    DEFAULT_THRESHOLD_ZERO
}
fn default_inf() -> f64 {
    DEFAULT_THRESHOLD_INF
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveTask {
    pub time_grid: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Only sites with `|n| ≤ radius` are written; all sites when absent.
    #[serde(default)]
    pub radius: Option<usize>,
    #[serde(default)]
    pub p_list: Vec<f64>,
    #[serde(default)]
    pub distances: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracemapTask {
    /// Inclusive level range.
    pub k_range: [usize; 2],
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_true")]
    pub histogram: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionTask {
    /// Couplings to estimate; the potential's own coupling when empty.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    pub k: usize,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsTask {
    pub time_grid: Vec<f64>,
    #[serde(default)]
    pub p_list: Vec<f64>,
    #[serde(default)]
    pub alpha_grid: Vec<f64>,
    /// Use exponential time averages (via resolvents) instead of `P(N, t)`.
    #[serde(default)]
    pub averaged: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_zero")]
    pub threshold_zero: f64,
    #[serde(default = "default_inf")]
    pub threshold_inf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsTask {
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub p_list: Vec<f64>,
    #[serde(default)]
    pub envelope: Option<EnvelopeConfig>,
    #[serde(default)]
    pub chain: Option<ChainConfig>,
}

fn bad(field: &str, reason: impl Into<String>) -> Error {
    Error::config(field, reason)
}

fn check_times(field: &str, grid: &[f64], positive: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(bad(field, "must not be empty"));
    }
    for &t in grid {
        if !t.is_finite() || t < 0.0 || (positive && t == 0.0) {
            return Err(bad(field, format!("entry {t} is not a valid time")));
        }
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad(field, "must be strictly increasing"));
    }
    Ok(())
}

fn check_decades(field: &str, grid: &[f64], decades: f64) -> Result<()> {
    let span = (grid[grid.len() - 1] / grid[0]).log10();
    if span < decades - 1e-9 {
        return Err(bad(
            field,
            format!("spans {span:.2} decades, at least {decades} needed"),
        ));
    }
    Ok(())
}

fn check_positive(field: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
        return Err(bad(field, "entries must be positive and finite"));
    }
    Ok(())
}

fn check_tol(field: &str, tol: f64, max: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= max) {
        return Err(bad(field, format!("must lie in (0, {max:e}]")));
    }
    Ok(())
}

fn check_alphas(field: &str, alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(bad(field, "must not be empty"));
    }
    if alphas.iter().any(|a| !(0.0..=1.2 + 1e-9).contains(a)) || alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad(field, "must be increasing inside [0, 1.2]"));
    }
    Ok(())
}

fn check_delta(field: &str, delta: f64) -> Result<()> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(bad(field, "must be finite and ≥ 0"));
    }
    Ok(())
}

/// Coupling of a zero-phase Fibonacci potential.
fn zero_phase_coupling(spec: &PotentialSpec) -> Result<f64> {
    match spec {
        PotentialSpec::Fibonacci { lambda, theta } if *theta == 0.0 => Ok(*lambda),
        _ => Err(bad("potential", "this task needs a Fibonacci potential with theta = 0")),
    }
}

fn check_band_coupling(field: &str, lambda: f64, delta: f64) -> Result<()> {
    let l0 = lambda_zero(delta);
    if !(lambda > l0) {
        return Err(bad(
            field,
            format!("coupling {lambda} must exceed λ0({delta}) = {l0:.6}"),
        ));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| bad("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        if cfg.output_dir.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output_dir = dir.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    /// Checks every parameter against the preconditions of the operations it feeds.
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(bad("id", "must not be empty"));
        }
        if self.workers == Some(0) {
            return Err(bad("workers", "must be at least 1"));
        }
        self.potential.validate()?;
        match &self.task {
            Task::Evolve(t) => {
                check_times("time_grid", &t.time_grid, false)?;
                check_tol("tol", t.tol, 1e-6)?;
                check_positive("p_list", &t.p_list)?;
                if t.distances.contains(&0) {
                    return Err(bad("distances", "entries must be at least 1"));
                }
            }
            Task::Tracemap(t) => {
                let lambda = zero_phase_coupling(&self.potential)?;
                let [lo, hi] = t.k_range;
                if lo < 1 || hi < lo || hi > 24 {
                    return Err(bad("k_range", "needs 1 ≤ k_min ≤ k_max ≤ 24"));
                }
                check_delta("delta", t.delta)?;
                check_band_coupling("potential.lambda", lambda, t.delta)?;
            }
            Task::Dimension(t) => {
                let lambdas = self.dimension_lambdas(t)?;
                if !(4..=24).contains(&t.k) {
                    return Err(bad("k", "needs 4 ≤ k ≤ 24"));
                }
                check_delta("delta", t.delta)?;
                for l in lambdas {
                    check_band_coupling("lambdas", l, t.delta)?;
                }
            }
            Task::Exponents(t) => {
                check_times("time_grid", &t.time_grid, true)?;
                check_decades("time_grid", &t.time_grid, 2.0)?;
                check_tol("tol", t.tol, 1e-6)?;
                check_tol("quad_tol", t.quad_tol, 1e-2)?;
                check_positive("p_list", &t.p_list)?;
                if t.averaged && !t.p_list.is_empty() {
                    return Err(bad("p_list", "moments are not available for averaged runs"));
                }
                if t.p_list.is_empty() && t.alpha_grid.is_empty() {
                    return Err(bad("alpha_grid", "give an alpha grid, a p list, or both"));
                }
                if !t.alpha_grid.is_empty() {
                    check_alphas("alpha_grid", &t.alpha_grid)?;
                    if t.time_grid[0] <= 1.0 {
                        return Err(bad("time_grid", "spreading profiles need times above 1"));
                    }
                }
                if !(0.0 < t.threshold_zero && t.threshold_zero < t.threshold_inf) {
                    return Err(bad("threshold_zero", "needs 0 < threshold_zero < threshold_inf"));
                }
            }
            Task::Bounds(t) => {
                let lambda = zero_phase_coupling(&self.potential)?;
                for &d in &t.deltas {
                    check_delta("deltas", d)?;
                }
                check_positive("p_list", &t.p_list)?;
                if qdx_core::bounds::s_lower(lambda).is_err() {
                    return Err(bad("potential.lambda", "closed-form constants need λ ≥ 4 + 2√3"));
                }
                if let Some(e) = &t.envelope {
                    check_times("envelope.times", &e.times, true)?;
                    if e.times.len() < 2 {
                        return Err(bad("envelope.times", "needs at least two times"));
                    }
                    check_positive("envelope.exponents", &e.exponents)?;
                    if e.exponents.is_empty() {
                        return Err(bad("envelope.exponents", "must not be empty"));
                    }
                    check_tol("envelope.quad_tol", e.quad_tol, 1e-2)?;
                    check_tol("envelope.evolve_tol", e.evolve_tol, 1e-6)?;
                }
                if let Some(c) = &t.chain {
                    check_times("chain.times", &c.times, true)?;
                    check_delta("chain.band_delta", c.band_delta)?;
                    check_band_coupling("potential.lambda", lambda, c.band_delta)?;
                    if !(3..=20).contains(&c.band_level) {
                        return Err(bad("chain.band_level", "needs 3 ≤ band_level ≤ 20"));
                    }
                    check_tol("chain.quad_tol", c.quad_tol, 1e-2)?;
                }
            }
            Task::Sandwich(c) => {
                let lambda = zero_phase_coupling(&self.potential)?;
                if c.check_upper && lambda < 8.0 {
                    return Err(bad("potential.lambda", "the upper bound is stated for λ ≥ 8"));
                }
                check_alphas("alphas", &c.alphas)?;
                check_times("times", &c.times, true)?;
                check_decades("times", &c.times, 2.0)?;
                if c.times[0] <= 1.0 {
                    return Err(bad("times", "spreading profiles need times above 1"));
                }
                check_tol("quad_tol", c.quad_tol, 1e-2)?;
                for &l in &c.trend_lambdas {
                    if qdx_core::bounds::s_lower(l).is_err() {
                        return Err(bad("trend_lambdas", format!("λ = {l} is below 4 + 2√3")));
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn dimension_lambdas(&self, t: &DimensionTask) -> Result<Vec<f64>> {
        if t.lambdas.is_empty() {
            Ok(vec![zero_phase_coupling(&self.potential)?])
        } else {
            check_positive("lambdas", &t.lambdas)?;
            Ok(t.lambdas.clone())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(e: Error) -> String {
        match e {
            Error::Config { field, .. } => field,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn empty_time_grid_is_named() {
        let cfg = ExperimentConfig::from_json(
            r#"{"id": "e", "potential": {"kind": "free"}, "task": {"kind": "evolve", "time_grid": []}}"#,
        )
        .unwrap();
        assert_eq!(field_of(cfg.validate().unwrap_err()), "time_grid");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = ExperimentConfig::from_json(
            r#"{"id": "e", "potential": {"kind": "free"}, "task": {"kind": "evolve", "time_grid": [1], "tmie": 3}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("tmie"), "{e}");
    }

    #[test]
    fn tracemap_needs_zero_phase() {
        let cfg = ExperimentConfig::from_json(
            r#"{"id": "t", "potential": {"kind": "fibonacci", "lambda": 8, "theta": 0.3},
                "task": {"kind": "tracemap", "k_range": [2, 3]}}"#,
        )
        .unwrap();
        assert_eq!(field_of(cfg.validate().unwrap_err()), "potential");
    }

    #[test]
    fn sandwich_below_eight_rejected() {
        let cfg = ExperimentConfig::from_json(
            r#"{"id": "s", "potential": {"kind": "fibonacci", "lambda": 5}, "task": {"kind": "sandwich"}}"#,
        )
        .unwrap();
        assert_eq!(field_of(cfg.validate().unwrap_err()), "potential.lambda");
    }

    #[test]
    fn short_exponent_series_rejected() {
        let cfg = ExperimentConfig::from_json(
            r#"{"id": "x", "potential": {"kind": "free"},
                "task": {"kind": "exponents", "time_grid": [2, 5, 10], "p_list": [2]}}"#,
        )
        .unwrap();
        assert_eq!(field_of(cfg.validate().unwrap_err()), "time_grid");
    }

    #[test]
    fn defaults_resolve() {
        let cfg = ExperimentConfig::from_json(
            r#"{"id": "t", "potential": {"kind": "fibonacci", "lambda": 8}, "task": {"kind": "tracemap", "k_range": [2, 2]}}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
        let Task::Tracemap(t) = &cfg.task else { panic!() };
        assert!(t.histogram && t.delta == 0.0);
    }
}
