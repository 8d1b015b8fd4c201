//! Executes a validated configuration and writes its outputs.

use std::path::PathBuf;

use anyhow::{Context, Result};
use qdx_core::bounds::{
    coupling_constants, front_distance, lower_bound_chain, sandwich_report, spreading_profile, theorem1_envelope,
    transport_exponents, BoundReport, SandwichConfig, SpreadingProfile,
};
use qdx_core::dynamics::{evolve, moment, moment_uncertainty, parseval_averages, Region, TailProfile};
use qdx_core::quadrature::QuadOptions;
use qdx_core::tracemap::{box_dimension_of, histogram, TraceSpectrum};
use qdx_core::{Error, PotentialSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BoundsTask, DimensionTask, EvolveTask, ExperimentConfig, ExponentsTask, Task, TracemapTask};
use crate::output::{num, ManifestEntry, Output};
use crate::schema;

pub const WORKERS_ENV: &str = "QDX_WORKERS";

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: PathBuf,
    pub files: Vec<ManifestEntry>,
}

fn worker_count(cfg: &ExperimentConfig) -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| Error::config(WORKERS_ENV, format!("expected a positive integer, got {v:?}")))?;
            Ok(Some(n))
        }
        Err(_) => Ok(cfg.workers),
    }
}

/// Validates `cfg`, runs its task on a private thread pool and writes the outputs.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let workers = worker_count(cfg)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building the worker pool")?;
    let mut out = Output::create(&cfg.output_dir)?;
    pool.install(|| match &cfg.task {
        Task::Evolve(t) => run_evolve(&cfg.potential, t, &mut out),
        Task::Tracemap(t) => run_tracemap(&cfg.potential, t, &mut out),
        Task::Dimension(t) => run_dimension(cfg, t, &mut out),
        Task::Exponents(t) => run_exponents(&cfg.potential, t, &mut out),
        Task::Bounds(t) => run_bounds(&cfg.potential, t, &mut out),
        Task::Sandwich(t) => run_sandwich(&cfg.potential, t, &mut out),
    })
    .with_context(|| format!("task `{}` of experiment `{}`", cfg.task.name(), cfg.id))?;
    let (manifest, files) = out.finish(cfg)?;
    Ok(RunSummary { manifest, files })
}

fn lambda_of(spec: &PotentialSpec) -> f64 {
    spec.coupling().unwrap_or(0.0)
}

fn run_evolve(spec: &PotentialSpec, t: &EvolveTask, out: &mut Output) -> Result<()> {
    let packets = t
        .time_grid
        .par_iter()
        .map(|&time| evolve(spec, time, t.tol).map_err(|e| e.in_task(format!("evolution to t = {time}"))))
        .collect::<qdx_core::Result<Vec<_>>>()?;
    let mut moments = Vec::new();
    let mut outside = Vec::new();
    for (i, psi) in packets.iter().enumerate() {
        let rows: Vec<Vec<String>> = psi
            .window
            .iter()
            .filter(|(n, _)| t.radius.is_none_or(|r| n.unsigned_abs() as usize <= r))
            .map(|(n, a)| vec![num(psi.t), n.to_string(), num(a.re), num(a.im), num(a.norm_sqr())])
            .collect();
        out.csv(&format!("wavepacket_{i:03}.csv"), &schema::WAVEPACKET, &rows)?;
        for &p in &t.p_list {
            moments.push(vec![
                num(psi.t),
                num(p),
                num(moment(psi, p)),
                num(moment_uncertainty(psi, p)),
            ]);
        }
        if !t.distances.is_empty() {
            let tails = TailProfile::new(psi);
            for &n in &t.distances {
                outside.push(vec![
                    num(psi.t),
                    n.to_string(),
                    num(tails.get(n, Region::Right)),
                    num(tails.get(n, Region::Left)),
                    num(tails.get(n, Region::Both)),
                ]);
            }
        }
    }
    if !t.p_list.is_empty() {
        out.csv("moments.csv", &schema::MOMENTS, &moments)?;
    }
    if !t.distances.is_empty() {
        out.csv("outside.csv", &schema::OUTSIDE, &outside)?;
    }
    Ok(())
}

fn run_tracemap(spec: &PotentialSpec, t: &TracemapTask, out: &mut Output) -> Result<()> {
    let [lo, hi] = t.k_range;
    let spectrum = TraceSpectrum::build(lambda_of(spec), hi)?;
    let sets = (lo..=hi)
        .into_par_iter()
        .map(|k| spectrum.bands(k, t.delta))
        .collect::<qdx_core::Result<Vec<_>>>()?;
    let mut profiles = Vec::new();
    for set in &sets {
        let rows: Vec<Vec<String>> = set
            .bands
            .iter()
            .enumerate()
            .map(|(j, b)| {
                vec![
                    set.k.to_string(),
                    j.to_string(),
                    num(b.root.hi()),
                    b.m.to_string(),
                    num(b.left.hi()),
                    num(b.right.hi()),
                    num(b.width()),
                ]
            })
            .collect();
        out.csv(&format!("bands_k{:02}.csv", set.k), &schema::BANDS, &rows)?;
        if t.histogram {
            for (m, count) in histogram(&spectrum.profiles(set.k)) {
                profiles.push(vec![set.k.to_string(), m.to_string(), count.to_string()]);
            }
        }
    }
    if t.histogram {
        out.csv("profiles.csv", &schema::PROFILES, &profiles)?;
    }
    Ok(())
}

fn run_dimension(cfg: &ExperimentConfig, t: &DimensionTask, out: &mut Output) -> Result<()> {
    let lambdas = cfg.dimension_lambdas(t)?;
    let estimates = lambdas
        .par_iter()
        .map(|&l| {
            TraceSpectrum::build(l, t.k)
                .and_then(|s| s.bands(t.k, t.delta))
                .and_then(|set| box_dimension_of(&set))
                .map_err(|e| e.in_task(format!("box dimension at λ = {l}")))
        })
        .collect::<qdx_core::Result<Vec<_>>>()?;
    let mut dims = Vec::new();
    let mut covers = Vec::new();
    for e in &estimates {
        dims.push(vec![
            num(e.lambda),
            e.k.to_string(),
            num(e.delta),
            num(e.dimension),
            num(e.dimension * e.lambda.ln()),
            num(e.fit.correlation),
        ]);
        for &(eps, count) in &e.counts {
            covers.push(vec![num(e.lambda), num(eps), count.to_string()]);
        }
    }
    out.csv("dimension.csv", &schema::DIMENSION, &dims)?;
    out.csv("covers.csv", &schema::COVERS, &covers)?;
    Ok(())
}

#[derive(Serialize)]
struct ExponentReport<'a> {
    averaged: bool,
    transport: Vec<qdx_core::bounds::TransportExponents>,
    spreading: Option<&'a SpreadingProfile>,
}

fn spreading_rows(p: &SpreadingProfile) -> Vec<Vec<String>> {
    p.alphas
        .iter()
        .zip(p.s_minus.iter().zip(&p.s_plus))
        .map(|(a, (lo, hi))| vec![num(*a), num(*lo), num(*hi)])
        .collect()
}

fn probability_rows(times: &[f64], alphas: &[f64], table: &[Vec<f64>]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        for (i, &a) in alphas.iter().enumerate() {
            rows.push(vec![num(t), num(a), front_distance(t, a).to_string(), num(table[i][j])]);
        }
    }
    rows
}

fn run_exponents(spec: &PotentialSpec, t: &ExponentsTask, out: &mut Output) -> Result<()> {
    let alphas = &t.alpha_grid;
    let mut table = vec![vec![0.0; t.time_grid.len()]; alphas.len()];
    let mut transport = Vec::new();
    if t.averaged {
        let cols = t
            .time_grid
            .par_iter()
            .map(|&big_t| {
                let ns: Vec<usize> = alphas.iter().map(|&a| front_distance(big_t, a)).collect();
                parseval_averages(&ns, big_t, spec, Region::Both, QuadOptions::with_rel_tol(t.quad_tol))
                    .map_err(|e| e.in_task(format!("Parseval average at T = {big_t}")))
            })
            .collect::<qdx_core::Result<Vec<_>>>()?;
        for (j, c) in cols.into_iter().enumerate() {
            for (i, v) in c.values.into_iter().enumerate() {
                table[i][j] = v.max(0.0);
            }
        }
    } else {
        let per_time = t
            .time_grid
            .par_iter()
            .map(|&time| {
                let psi = evolve(spec, time, t.tol).map_err(|e| e.in_task(format!("evolution to t = {time}")))?;
                let tails = TailProfile::new(&psi);
                let probs: Vec<f64> = alphas
                    .iter()
                    .map(|&a| tails.get(front_distance(time, a), Region::Both))
                    .collect();
                let moments: Vec<(f64, f64)> = t
                    .p_list
                    .iter()
                    .map(|&p| (moment(&psi, p), moment_uncertainty(&psi, p)))
                    .collect();
                Ok((probs, moments))
            })
            .collect::<qdx_core::Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for (j, (probs, moments)) in per_time.iter().enumerate() {
            for (i, v) in probs.iter().enumerate() {
                table[i][j] = *v;
            }
            for (p, m) in t.p_list.iter().zip(moments) {
                rows.push(vec![num(t.time_grid[j]), num(*p), num(m.0), num(m.1)]);
            }
        }
        for (k, &p) in t.p_list.iter().enumerate() {
            let series: Vec<(f64, f64)> = t.time_grid.iter().zip(&per_time).map(|(a, b)| (*a, b.1[k].0)).collect();
            transport.push(transport_exponents(&series, p)?);
        }
        if !t.p_list.is_empty() {
            out.csv("moments.csv", &schema::MOMENTS, &rows)?;
        }
    }
    let profile = if alphas.is_empty() {
        None
    } else {
        let p = spreading_profile(alphas, &t.time_grid, &table, t.threshold_zero, t.threshold_inf)?;
        out.csv(
            "probabilities.csv",
            &schema::PROBABILITIES,
            &probability_rows(&t.time_grid, alphas, &table),
        )?;
        out.csv("spreading.csv", &schema::SPREADING, &spreading_rows(&p))?;
        Some(p)
    };
    let report = ExponentReport {
        averaged: t.averaged,
        transport,
        spreading: profile.as_ref(),
    };
    out.json("exponents.json", &schema::REPORT, &report)?;
    Ok(())
}

fn run_bounds(spec: &PotentialSpec, t: &BoundsTask, out: &mut Output) -> Result<()> {
    let lambda = lambda_of(spec);
    let constants = coupling_constants(lambda, &t.deltas, &t.p_list)?;
    out.json("constants.json", &schema::REPORT, &constants)?;
    if let Some(e) = &t.envelope {
        let report = theorem1_envelope(spec, e)?;
        let fit = report.envelope.as_ref().expect("envelope report carries its fit");
        let rows: Vec<Vec<String>> = report
            .envelope_points
            .iter()
            .map(|p| {
                vec![
                    p.n.to_string(),
                    num(p.t),
                    num(p.measured),
                    num(p.rhs),
                    num(fit.envelope(p.n, p.rhs)),
                ]
            })
            .collect();
        out.csv("envelope.csv", &schema::ENVELOPE, &rows)?;
        out.json("envelope_report.json", &schema::REPORT, &report)?;
    }
    if let Some(c) = &t.chain {
        let report = lower_bound_chain(lambda, c)?;
        let rows: Vec<Vec<String>> = (0..report.times.len())
            .map(|j| {
                let cmp = &report.comparisons[j];
                vec![
                    num(report.times[j]),
                    report.distances[j].to_string(),
                    num(cmp.measured),
                    num(cmp.predicted),
                ]
            })
            .collect();
        out.csv("chain.csv", &schema::CHAIN, &rows)?;
        out.json("chain_report.json", &schema::REPORT, &report)?;
    }
    Ok(())
}

fn run_sandwich(spec: &PotentialSpec, cfg: &SandwichConfig, out: &mut Output) -> Result<()> {
    let report: BoundReport = sandwich_report(lambda_of(spec), cfg)?;
    let profile = report.spreading.as_ref().expect("sandwich report carries its profile");
    out.csv(
        "probabilities.csv",
        &schema::PROBABILITIES,
        &probability_rows(&report.times, &report.alphas, &report.probabilities),
    )?;
    out.csv("spreading.csv", &schema::SPREADING, &spreading_rows(profile))?;
    let trend: Vec<Vec<String>> = report
        .product_trend
        .iter()
        .map(|p| {
            vec![
                num(p.lambda),
                num(p.alpha_upper_times_log),
                num(p.alpha_lower_times_log),
                num(p.gap),
            ]
        })
        .collect();
    out.csv("trend.csv", &schema::TREND, &trend)?;
    out.json("sandwich_report.json", &schema::REPORT, &report)?;
    Ok(())
}
