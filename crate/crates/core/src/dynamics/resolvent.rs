//! Resolvent matrix elements `u(n) = ⟨(H−z)⁻¹δ_0, δ_n⟩` and the energy-domain
//! form of exponential time averages.
//!
//! The tridiagonal system is solved through the ratios `u(n+1)/u(n)` of the
//! solution decaying to the right (and to the left), recursed inward from a
//! Dirichlet boundary. The box is doubled until the boundary's influence on
//! the requested sites is below tolerance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::observables::Region;
use crate::error::{Error, Result};
use crate::lattice::{spectral_bound, LatticeWindow, PotentialSpec};
use crate::quadrature::{try_integrate, QuadOptions};

pub const DEFAULT_PADDING_CAP: usize = 1 << 22;
const INITIAL_PADDING: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventVector {
    pub z: Complex64,
    /// `u(n)` on `[−radius, radius]`.
    pub window: LatticeWindow,
    /// `‖(H−z)u − δ_0‖` over the window.
    pub residual: f64,
    /// Sites added beyond `radius` on each side.
    pub padding: usize,
}

/// Solves `(H−z)u = δ_0` for many `z` sharing one potential table.
#[derive(Debug, Clone)]
pub struct ResolventSolver {
    spec: PotentialSpec,
    sup: f64,
    k: f64,
    tol: f64,
    padding_cap: usize,
    v0: f64,
    /// `V(1), V(2), …`
    right: Vec<f64>,
    /// `V(−1), V(−2), …`
    left: Vec<f64>,
}

impl ResolventSolver {
    pub fn new(spec: &PotentialSpec, tol: f64) -> Result<Self> {
        spec.validate()?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::domain(format!(
                "resolvent tolerance must lie in (0, 1), got {tol}"
            )));
        }
        Ok(ResolventSolver {
            spec: spec.clone(),
            sup: spec.sup_norm(),
            k: spectral_bound(spec),
            tol,
            padding_cap: DEFAULT_PADDING_CAP,
            v0: spec.value(0)?,
            right: Vec::new(),
            left: Vec::new(),
        })
    }

    pub fn with_padding_cap(mut self, cap: usize) -> Self {
        self.padding_cap = cap;
        self
    }

    /// Largest padding ever needed at `z`: `⌈(2K/|Im z|)·ln(1/tol)⌉` off the
    /// real axis, and the Combes–Thomas decay length for real `z` off the spectrum.
    pub fn padding_limit(&self, z: Complex64) -> Result<usize> {
        let log_inv = (1.0 / self.tol).ln();
        let p = if z.im != 0.0 {
            2.0 * self.k / z.im.abs() * log_inv
        } else {
            let d = z.re.abs() - 2.0 - self.sup;
            if !(d > 0.0) {
                return Err(Error::domain(format!(
                    "real energy {} lies inside [−{s}, {s}]",
                    z.re,
                    s = 2.0 + self.sup
                )));
            }
            let a = 2.0 + d;
            let rho = 0.5 * (a - (a * a - 4.0).sqrt());
            log_inv / (-2.0 * rho.ln())
        };
        Ok(p.ceil() as usize + 1)
    }

    /// Extends the potential tables to cover `reach` sites on each side.
    pub fn reserve(&mut self, reach: usize) -> Result<()> {
        if self.right.len() < reach {
            self.right = self.spec.sample(1, reach)?;
            let mut l = self.spec.sample(-(reach as i64), reach)?;
            l.reverse();
            self.left = l;
        }
        Ok(())
    }

    fn table(&self, region: Region) -> &[f64] {
        match region {
            Region::Left => &self.left,
            _ => &self.right,
        }
    }

    /// Ratios `r[j] = u(±(j+1))/u(±j)` for `j < len`, with `r[len] = 0`.
    fn ratios(&self, z: Complex64, region: Region, len: usize) -> Vec<Complex64> {
        let v = self.table(region);
        let mut r = vec![Complex64::new(0.0, 0.0); len + 1];
        for j in (0..len).rev() {
            r[j] = 1.0 / (z - v[j] - r[j + 1]);
        }
        r
    }

    /// Ratios on one side, with a box large enough that sites `0..=reach`
    /// see the boundary only below tolerance.
    fn side(&self, z: Complex64, region: Region, reach: usize) -> Result<Vec<Complex64>> {
        let limit = self.padding_limit(z)?;
        let mut padding = INITIAL_PADDING.min(limit).max(1);
        let ln_tol = self.tol.ln();
        loop {
            if padding > self.padding_cap {
                return Err(Error::BoxCapExceeded {
                    padding,
                    cap: self.padding_cap,
                });
            }
            let len = reach + padding;
            if self.table(region).len() < len {
                return Err(Error::domain(format!(
                    "potential table shorter than {len} sites; call reserve"
                )));
            }
            let r = self.ratios(z, region, len);
            if padding >= limit {
                return Ok(r);
            }
            let log_decay: f64 = r[reach..reach + padding / 2].iter().map(|x| x.norm_sqr().ln()).sum();
            if log_decay <= ln_tol {
                return Ok(r);
            }
            padding = (padding * 2).min(limit);
        }
    }

    fn check_z(&self, z: Complex64) -> Result<()> {
        if z.im == 0.0 {
            self.padding_limit(z)?;
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::domain("energy must be finite"));
        }
        Ok(())
    }

    /// `u` on `[−radius, radius]`.
    pub fn vector(&mut self, z: Complex64, radius: usize) -> Result<ResolventVector> {
        self.check_z(z)?;
        let limit = self.padding_limit(z)?.min(self.padding_cap);
        self.reserve(radius + limit + 2)?;
        let r = self.side(z, Region::Right, radius + 1)?;
        let s = self.side(z, Region::Left, radius + 1)?;
        let padding = r.len().max(s.len()) - radius - 2;
        let u0 = 1.0 / (self.v0 - z + r[0] + s[0]);
        let n = radius + 1;
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        amps[n] = u0;
        for j in 0..n {
            amps[n + j + 1] = amps[n + j] * r[j];
            amps[n - j - 1] = amps[n - j] * s[j];
        }
        let site = |i: usize| -> f64 {
            let m = i as i64 - n as i64;
            match m.cmp(&0) {
                std::cmp::Ordering::Equal => self.v0,
                std::cmp::Ordering::Greater => self.right[m as usize - 1],
                std::cmp::Ordering::Less => self.left[(-m) as usize - 1],
            }
        };
        let mut res = 0.0;
        for i in 1..2 * n {
            let mut e = amps[i + 1] + amps[i - 1] + (site(i) - z) * amps[i];
            if i == n {
                e -= 1.0;
            }
            res += e.norm_sqr();
        }
        let window = LatticeWindow::new(-(radius as i64), amps[1..2 * n].to_vec());
        Ok(ResolventVector {
            z,
            window,
            residual: res.sqrt(),
            padding,
        })
    }

    /// `Σ_{n≥N}|u(n)|²` (right), `Σ_{n≤−N}|u(n)|²` (left) or their sum, for each `N`.
    /// The tables must reach `max N` plus the padding limit; see [`reserve`](Self::reserve).
    pub fn tail_sums(&self, z: Complex64, ns: &[usize], region: Region) -> Result<Vec<f64>> {
        self.check_z(z)?;
        let mut out = vec![0.0; ns.len()];
        let mut u0 = None;
        let sides: &[Region] = match region {
            Region::Both => &[Region::Right, Region::Left],
            Region::Right => &[Region::Right],
            Region::Left => &[Region::Left],
        };
        let reach = ns.iter().copied().max().unwrap_or(0);
        let r = self.side(z, Region::Right, if region == Region::Left { 0 } else { reach })?;
        let s = self.side(z, Region::Left, if region == Region::Right { 0 } else { reach })?;
        let u = 1.0 / (self.v0 - z + r[0] + s[0]);
        for &side in sides {
            let ratios = if side == Region::Right { &r } else { &s };
            // |u(j)|² for j = 0..len, then suffix sums.
            let mut w = Vec::with_capacity(ratios.len());
            let mut a = u.norm_sqr();
            w.push(a);
            for x in &ratios[..ratios.len() - 1] {
                a *= x.norm_sqr();
                w.push(a);
            }
            let mut acc = 0.0;
            for x in w.iter_mut().rev() {
                acc += *x;
                *x = acc;
            }
            for (o, &n) in out.iter_mut().zip(ns) {
                *o += w.get(n).copied().unwrap_or(0.0);
            }
            u0 = Some(u.norm_sqr());
        }
        if region == Region::Both {
            for (o, &n) in out.iter_mut().zip(ns) {
                if n == 0 {
                    *o -= u0.unwrap_or(0.0);
                }
            }
        }
        Ok(out)
    }
}

/// `⟨(H−z)⁻¹δ_0, δ_n⟩` for `|n| ≤ radius`.
pub fn resolvent_vector(z: Complex64, spec: &PotentialSpec, radius: usize, tol: f64) -> Result<ResolventVector> {
    ResolventSolver::new(spec, tol)?.vector(z, radius)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsevalAverage {
    pub big_t: f64,
    pub ns: Vec<usize>,
    pub region: Region,
    pub values: Vec<f64>,
    pub quadrature_errors: Vec<f64>,
    /// Bound on the energy integral outside the integrated interval.
    pub tail_bounds: Vec<f64>,
    pub energy_range: (f64, f64),
}

/// Analytic bound on `(1/πT)∫_{|E|>E_0} Σ_{n≥N}|u(n)|² dE` per side, from
/// `|u(n)| ≤ (2/m)^{|n|}/(m−2)` with `m = |E| − sup|V| > 2`.
fn energy_tail_bound(m0: f64, n: usize, big_t: f64) -> f64 {
    let q = (2.0 / m0).powi(2);
    2.0 / (std::f64::consts::PI * big_t) * q.powi(n as i32) / ((1.0 - q) * (m0 - 2.0))
}

/// `⟨P(N,·)⟩(T)` for each `N` via the energy integral of resolvent tails
/// at `Im z = 1/T`.
pub fn parseval_averages(
    ns: &[usize],
    big_t: f64,
    spec: &PotentialSpec,
    region: Region,
    opts: QuadOptions,
) -> Result<ParsevalAverage> {
    if !(big_t > 0.0 && big_t.is_finite()) {
        return Err(Error::domain(format!("averaging time must be positive, got {big_t}")));
    }
    if ns.is_empty() {
        return Err(Error::domain("no distances requested"));
    }
    let eta = 1.0 / big_t;
    let res_tol = (opts.rel_tol * 1e-4).min(1e-8);
    let mut solver = ResolventSolver::new(spec, res_tol)?;
    let k = solver.k;
    let sup = solver.sup;
    let limit = solver.padding_limit(Complex64::new(0.0, eta))?.min(solver.padding_cap);
    solver.reserve(limit + ns.iter().copied().max().unwrap_or(0) + 2)?;
    let scale = 1.0 / (std::f64::consts::PI * big_t);
    let integrand = |e: f64| -> Result<Vec<f64>> {
        let v = solver.tail_sums(Complex64::new(e, eta), ns, region)?;
        Ok(v.into_iter().map(|x| x * scale).collect())
    };
    let mut e0 = k + 2.0;
    let q = try_integrate(
        integrand,
        -e0,
        e0,
        QuadOptions {
            initial_panels: 64,
            ..opts
        },
    )?;
    let mut values = q.values;
    let mut errors = q.errors;
    let sides = if region == Region::Both { 2.0 } else { 1.0 };
    let bound = |m0: f64| -> Vec<f64> { ns.iter().map(|&n| sides * energy_tail_bound(m0, n, big_t)).collect() };
    let mut tails = bound(e0 - sup);
    let too_big = |t: &[f64], v: &[f64]| t.iter().zip(v).any(|(b, x)| *b > opts.rel_tol * x.abs());
    if too_big(&tails, &values) {
        let mut e1 = e0;
        while too_big(&bound(e1 - sup), &values) && e1 < 1e6 {
            e1 *= 2.0;
        }
        for (a, b) in [(-e1, -e0), (e0, e1)] {
            let extra = try_integrate(integrand, a, b, opts)?;
            for i in 0..ns.len() {
                values[i] += extra.values[i];
                errors[i] += extra.errors[i];
            }
        }
        e0 = e1;
        tails = bound(e0 - sup);
    }
    Ok(ParsevalAverage {
        big_t,
        ns: ns.to_vec(),
        region,
        values,
        quadrature_errors: errors,
        tail_bounds: tails,
        energy_range: (-e0, e0),
    })
}

/// `⟨P_r(N,·)⟩(T)` or `⟨P_l(N,·)⟩(T)`.
pub fn parseval_average(n: usize, big_t: f64, spec: &PotentialSpec, side: Region, quad_tol: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("distance N must be at least 1"));
    }
    let avg = parseval_averages(&[n], big_t, spec, side, QuadOptions::with_rel_tol(quad_tol))?;
    Ok(avg.values[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_green_function_off_spectrum() {
        let r = resolvent_vector(Complex64::new(5.0, 0.0), &PotentialSpec::Free, 10, 1e-14).unwrap();
        let zeta = (5.0 - 21f64.sqrt()) / 2.0;
        let a = -1.0 / 21f64.sqrt();
        for n in -10i64..=10 {
            let expect = a * zeta.powi(n.abs() as i32);
            assert!((r.window.get(n) - expect).norm() < 1e-14, "n = {n}");
        }
        assert!(r.residual < 1e-13);
    }

    #[test]
    fn spectral_bound_on_origin() {
        let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
        for z in [
            Complex64::new(0.3, 0.05),
            Complex64::new(8.2, 0.01),
            Complex64::new(-15.0, 0.0),
        ] {
            let r = resolvent_vector(z, &spec, 20, 1e-12).unwrap();
            let dist = if z.im != 0.0 { z.im } else { 15.0 - 2.0 - 8.0 };
            assert!(r.window.get(0).norm() <= 1.0 / dist * (1.0 + 1e-12));
            assert!(r.residual < 1e-10, "{}", r.residual);
        }
    }

    #[test]
    fn total_mass_identity() {
        // Σ_n |u(n)|² = Im u(0) / Im z.
        let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
        let z = Complex64::new(0.7, 0.1);
        let solver = ResolventSolver::new(&spec, 1e-12).unwrap();
        let mut solver = solver;
        solver.reserve(10_000).unwrap();
        let total = solver.tail_sums(z, &[0], Region::Both).unwrap()[0];
        let u0 = solver.vector(z, 0).unwrap().window.get(0);
        assert!(
            (total - u0.im / z.im).abs() < 1e-9 * total,
            "{total} vs {}",
            u0.im / z.im
        );
    }

    #[test]
    fn rejects_real_energy_in_spectrum() {
        assert!(resolvent_vector(Complex64::new(1.0, 0.0), &PotentialSpec::Free, 5, 1e-10).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let mut s = ResolventSolver::new(&PotentialSpec::Free, 1e-12)
            .unwrap()
            .with_padding_cap(100);
        let r = s.vector(Complex64::new(0.5, 1e-4), 10);
        assert!(matches!(r, Err(Error::BoxCapExceeded { .. })));
    }

    #[test]
    fn far_distances_are_negligible() {
        let spec = PotentialSpec::Free;
        let v = parseval_average(500, 10.0, &spec, Region::Right, 1e-6).unwrap();
        assert!(v < 1e-8, "{v}");
    }
}
