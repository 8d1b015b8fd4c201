//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Intervals refined per round. Fixed so results do not depend on the
/// number of worker threads.
const BATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-6,
            abs_tol: 0.0,
            max_depth: 40,
            initial_panels: 16,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadOptions {
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    value: Vec<f64>,
    error: Vec<f64>,
}

fn kronrod<F>(f: &F, a: f64, b: f64, depth: u32) -> Result<Panel>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let dim = fc.len();
    let mut k: Vec<f64> = fc.iter().map(|v| v * WGK[7]).collect();
    let mut g: Vec<f64> = fc.iter().map(|v| v * WG[3]).collect();
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x)?;
        let f2 = f(c + x)?;
        for i in 0..dim {
            let s = f1[i] + f2[i];
            k[i] += WGK[j] * s;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * s;
            }
        }
    }
    let value: Vec<f64> = k.iter().map(|v| v * h).collect();
    let error = k.iter().zip(&g).map(|(kv, gv)| ((kv - gv) * h).abs()).collect();
    Ok(Panel {
        a,
        b,
        depth,
        value,
        error,
    })
}

/// Integrates every component of `f` over `[a, b]` until each component's
/// error estimate is within `max(rel_tol·|I_i|, abs_tol)`.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quadrature>
where
    F: Fn(f64) -> Vec<f64> + Sync,
{
    try_integrate(|x| Ok(f(x)), a, b, opts)
}

/// As [`integrate`], for integrands that can fail; the first failure aborts.
pub fn try_integrate<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quadrature>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    assert!(a < b, "integration interval must have a < b");
    let n0 = opts.initial_panels.max(1);
    let width = (b - a) / n0 as f64;
    let mut panels: Vec<Panel> = (0..n0)
        .into_par_iter()
        .map(|j| {
            let lo = a + width * j as f64;
            let hi = if j + 1 == n0 { b } else { lo + width };
            kronrod(&f, lo, hi, 0)
        })
        .collect::<Result<_>>()?;
    let mut evaluations = 15 * n0;
    loop {
        let dim = panels[0].value.len();
        let mut total = vec![0.0; dim];
        let mut err = vec![0.0; dim];
        for p in &panels {
            for i in 0..dim {
                total[i] += p.value[i];
                err[i] += p.error[i];
            }
        }
        let tol: Vec<f64> = total
            .iter()
            .map(|v| (opts.rel_tol * v.abs()).max(opts.abs_tol))
            .collect();
        let score = |e: &[f64]| {
            e.iter()
                .zip(&tol)
                .map(|(ei, ti)| {
                    if *ti > 0.0 {
                        ei / ti
                    } else if *ei > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                })
                .fold(0.0f64, f64::max)
        };
        let worst = score(&err);
        if worst <= 1.0 {
            return Ok(Quadrature {
                values: total,
                errors: err,
                evaluations,
            });
        }
        let mut order: Vec<usize> = (0..panels.len())
            .filter(|&i| panels[i].depth < opts.max_depth && score(&panels[i].error) > 0.0)
            .collect();
        if order.is_empty() {
            let i = (0..dim)
                .max_by(|&x, &y| (err[x] / tol[x]).total_cmp(&(err[y] / tol[y])))
                .expect("nonempty integrand");
            return Err(Error::GridTooCoarse {
                estimate: err[i],
                tolerance: tol[i],
            });
        }
        order.sort_by(|&x, &y| {
            score(&panels[y].error)
                .total_cmp(&score(&panels[x].error))
                .then(x.cmp(&y))
        });
        order.truncate(BATCH);
        let halves: Vec<(f64, f64, u32)> = order
            .iter()
            .flat_map(|&i| {
                let p = &panels[i];
                let mid = 0.5 * (p.a + p.b);
                [(p.a, mid, p.depth + 1), (mid, p.b, p.depth + 1)]
            })
            .collect();
        let fresh: Vec<Panel> = halves
            .par_iter()
            .map(|&(lo, hi, d)| kronrod(&f, lo, hi, d))
            .collect::<Result<_>>()?;
        evaluations += 15 * fresh.len();
        order.sort_unstable();
        for &i in order.iter().rev() {
            panels.swap_remove(i);
        }
        panels.extend(fresh);
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    }
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64 + Sync,
{
    let q = integrate(|x| vec![f(x)], a, b, opts)?;
    Ok((q.values[0], q.errors[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let (v, e) = integrate_scalar(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, QuadOptions::default()).unwrap();
        assert!((v - (64.0 - 1.0) / 6.0 + 9.0).abs() < 1e-13, "{v}");
        assert!(e < 1e-12);
    }

    #[test]
    fn narrow_lorentzian() {
        let eta = 1e-3;
        let opts = QuadOptions::with_rel_tol(1e-8);
        let (v, _) = integrate_scalar(|x| eta / (x * x + eta * eta), -10.0, 10.0, opts).unwrap();
        let exact = 2.0 * (10.0 / eta).atan();
        assert!((v - exact).abs() < 1e-7 * exact, "{v} vs {exact}");
    }

    #[test]
    fn components_converge_independently() {
        let q = integrate(
            |x| vec![x.sin(), (3.0 * x).exp()],
            0.0,
            1.0,
            QuadOptions::with_rel_tol(1e-10),
        )
        .unwrap();
        assert!((q.values[0] - (1.0 - 1f64.cos())).abs() < 1e-10);
        assert!((q.values[1] - (3f64.exp() - 1.0) / 3.0).abs() < 1e-9);
    }

    #[test]
    fn depth_limit_reports_coarse_grid() {
        let opts = QuadOptions {
            rel_tol: 1e-14,
            max_depth: 2,
            initial_panels: 1,
            ..Default::default()
        };
        let r = integrate_scalar(|x| x.abs().sqrt(), -1.0, 1.0, opts);
        assert!(matches!(r, Err(Error::GridTooCoarse { .. })));
    }
}
