//! Chebyshev propagation of `e^{−itH}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{spectral_bound, LatticeWindow, PotentialSpec};
use crate::special::bessel_j_sequence;

pub const DEFAULT_WINDOW_CAP: usize = 10_000_000;
pub const DEFAULT_TOL: f64 = 1e-12;

/// Amplitudes below this are dropped from the edges of a time-stepped window.
const TRIM_AMPLITUDE: f64 = 1e-150;

/// `e^{−itH}δ_0` on a finite window.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    pub t: f64,
    pub window: LatticeWindow,
    /// `|‖ψ‖² − 1|`.
    pub norm_defect: f64,
    /// Bound on the ℓ² distance between the stored and the exact state.
    pub truncation_bound: f64,
}

impl WavePacket {
    pub fn initial() -> Self {
        WavePacket {
            t: 0.0,
            window: LatticeWindow::delta(),
            norm_defect: 0.0,
            truncation_bound: 0.0,
        }
    }

    fn from_window(t: f64, window: LatticeWindow, truncation_bound: f64) -> Self {
        let norm_defect = (window.norm_sqr() - 1.0).abs();
        WavePacket {
            t,
            window,
            norm_defect,
            truncation_bound,
        }
    }

    pub fn amplitude(&self, n: i64) -> Complex64 {
        self.window.get(n)
    }

    /// Additive uncertainty of any sum of `|ψ(n)|²` over a set of sites.
    pub fn probability_uncertainty(&self) -> f64 {
        let b = self.truncation_bound;
        2.0 * b + b * b
    }
}

/// Potential values on a growing range of sites.
#[derive(Debug, Clone)]
pub(crate) struct PotentialCache {
    spec: PotentialSpec,
    first: i64,
    values: Vec<f64>,
}

impl PotentialCache {
    pub(crate) fn new(spec: &PotentialSpec) -> Self {
        PotentialCache {
            spec: spec.clone(),
            first: 0,
            values: Vec::new(),
        }
    }

    pub(crate) fn ensure(&mut self, left: i64, right: i64) -> Result<()> {
        let last = self.first + self.values.len() as i64 - 1;
        if !self.values.is_empty() && left >= self.first && right <= last {
            return Ok(());
        }
        let (mut lo, mut hi) = if self.values.is_empty() {
            (left, right)
        } else {
            (left.min(self.first), right.max(last))
        };
        if !matches!(self.spec, PotentialSpec::Custom { .. }) {
            let pad = (hi - lo) / 2 + 16;
            lo -= pad;
            hi += pad;
        }
        self.values = self.spec.sample(lo, (hi - lo + 1) as usize)?;
        self.first = lo;
        Ok(())
    }

    /// Values on `[left, right]`; `ensure` must cover the range.
    pub(crate) fn slice(&self, left: i64, right: i64) -> &[f64] {
        let a = (left - self.first) as usize;
        let b = (right - self.first) as usize;
        &self.values[a..=b]
    }
}

/// Chebyshev coefficients of `e^{−ixy}` on `y ∈ [−1, 1]`, cut where they fall
/// below `cut`, and the sum of the magnitudes that were cut.
fn exponential_coefficients(x: f64, cut: f64) -> (Vec<Complex64>, f64) {
    let n0 = (std::f64::consts::E * x / 2.0).ceil() as usize + 40;
    let j = bessel_j_sequence(x, n0);
    let last = j.iter().rposition(|v| v.abs() >= cut / 2.0).unwrap_or(0);
    let phase = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    let coeffs = (0..=last)
        .map(|k| {
            let w = if k == 0 { 1.0 } else { 2.0 };
            phase[k % 4] * (w * j[k])
        })
        .collect();
    let tail = j[last + 1..].iter().map(|v| 2.0 * v.abs()).sum();
    (coeffs, tail)
}

/// `Σ_k coeffs[k] T_k(H/scale) φ`. The result is exact on its window, which
/// is `φ`'s window widened by `coeffs.len() − 1` sites on each side.
fn chebyshev_apply(
    phi: &LatticeWindow,
    coeffs: &[Complex64],
    scale: f64,
    pot: &mut PotentialCache,
) -> Result<LatticeWindow> {
    let m = coeffs.len() - 1;
    let len = phi.len();
    let left = phi.left() - m as i64;
    let n = len + 2 * m;
    pot.ensure(left, left + n as i64 - 1)?;
    let v = pot.slice(left, left + n as i64 - 1);
    let inv = 1.0 / scale;
    let zero = Complex64::new(0.0, 0.0);
    // One guard cell on each side keeps the stencil branch-free.
    let mut prev = vec![zero; n + 2];
    let mut cur = vec![zero; n + 2];
    let mut acc = vec![zero; n];
    prev[m + 1..m + 1 + len].copy_from_slice(phi.amplitudes());
    for i in m..m + len {
        acc[i] = coeffs[0] * prev[i + 1];
    }
    if m >= 1 {
        for i in m - 1..m + len + 1 {
            let g = i + 1;
            cur[g] = (prev[g + 1] + prev[g - 1] + prev[g] * v[i]) * inv;
            acc[i] += coeffs[1] * cur[g];
        }
    }
    for (k, &c) in coeffs.iter().enumerate().skip(2) {
        let lo = m - k;
        let hi = m + len + k;
        for i in lo..hi {
            let g = i + 1;
            let next = (cur[g + 1] + cur[g - 1] + cur[g] * v[i]) * (2.0 * inv) - prev[g];
            prev[g] = next;
            acc[i] += c * next;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(LatticeWindow::new(left, acc))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::domain(format!("tolerance must lie in (0, 1e-6], got {tol}")));
    }
    Ok(())
}

/// `e^{−itH}δ_0` with the default window cap.
pub fn evolve(spec: &PotentialSpec, t: f64, tol: f64) -> Result<WavePacket> {
    evolve_with_cap(spec, t, tol, DEFAULT_WINDOW_CAP)
}

pub fn evolve_with_cap(spec: &PotentialSpec, t: f64, tol: f64, window_cap: usize) -> Result<WavePacket> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be finite and nonnegative, got {t}")));
    }
    check_tol(tol)?;
    spec.validate()?;
    if t == 0.0 {
        return Ok(WavePacket::initial());
    }
    let k = spectral_bound(spec);
    let (coeffs, tail) = exponential_coefficients(k * t, tol * 1e-3);
    let sites = 2 * coeffs.len() - 1;
    if sites > window_cap {
        return Err(Error::TolUnreachable { sites, cap: window_cap });
    }
    let mut pot = PotentialCache::new(spec);
    let window = chebyshev_apply(&LatticeWindow::delta(), &coeffs, k, &mut pot)?;
    Ok(WavePacket::from_window(t, window, tail))
}

/// Fixed-step propagation, for dense time series.
#[derive(Debug, Clone)]
pub struct Propagator {
    pot: PotentialCache,
    scale: f64,
    step: f64,
    coeffs: Vec<Complex64>,
    step_tail: f64,
    psi: LatticeWindow,
    steps: u64,
    truncation_bound: f64,
    dropped_mass: f64,
    window_cap: usize,
}

impl Propagator {
    pub fn new(spec: &PotentialSpec, step: f64, tol: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::domain(format!("time step must be positive, got {step}")));
        }
        check_tol(tol)?;
        spec.validate()?;
        let scale = spectral_bound(spec);
        let (coeffs, step_tail) = exponential_coefficients(scale * step, tol * 1e-3);
        Ok(Propagator {
            pot: PotentialCache::new(spec),
            scale,
            step,
            coeffs,
            step_tail,
            psi: LatticeWindow::delta(),
            steps: 0,
            truncation_bound: 0.0,
            dropped_mass: 0.0,
            window_cap: DEFAULT_WINDOW_CAP,
        })
    }

    pub fn with_window_cap(mut self, cap: usize) -> Self {
        self.window_cap = cap;
        self
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.step
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.psi
    }

    pub fn advance(&mut self) -> Result<()> {
        let next = chebyshev_apply(&self.psi, &self.coeffs, self.scale, &mut self.pot)?;
        self.psi = self.trim(next);
        self.steps += 1;
        self.truncation_bound += self.step_tail;
        if self.psi.len() > self.window_cap {
            return Err(Error::TolUnreachable {
                sites: self.psi.len(),
                cap: self.window_cap,
            });
        }
        Ok(())
    }

    fn trim(&mut self, w: LatticeWindow) -> LatticeWindow {
        let keep = |z: &Complex64| z.norm() >= TRIM_AMPLITUDE;
        let amps = w.amplitudes();
        let origin = (-w.left()) as usize;
        let first = amps.iter().position(keep).unwrap_or(origin).min(origin);
        let last = amps.iter().rposition(keep).unwrap_or(origin).max(origin);
        let dropped: f64 = amps[..first]
            .iter()
            .chain(&amps[last + 1..])
            .map(|z| z.norm_sqr())
            .sum();
        if dropped > 0.0 {
            self.dropped_mass += dropped;
        }
        LatticeWindow::new(w.left() + first as i64, amps[first..=last].to_vec())
    }

    pub fn packet(&self) -> WavePacket {
        WavePacket::from_window(
            self.time(),
            self.psi.clone(),
            self.truncation_bound + self.dropped_mass.sqrt(),
        )
    }
}
