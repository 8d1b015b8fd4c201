//! Transfer matrices `Φ(n, z)` of the difference equation
//! `u(n+1) + u(n−1) + V(n)u(n) = z u(n)` at real and complex energies.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::PotentialSpec;

const RESCALE_THRESHOLD_EXP: i32 = 512;

/// Default cap on the power-of-two exponent carried by a product.
pub const DEFAULT_SCALE_CAP: i64 = 1 << 40;

/// Half-line of the lattice a transfer-matrix window sweeps over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
}

/// `x · 2^e` without intermediate overflow.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// 2×2 complex matrix `2^scale_exponent · [[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub scale_exponent: i64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::from_entries(one, zero, zero, one)
    }

    pub fn from_entries(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        TransferMatrix {
            a,
            b,
            c,
            d,
            scale_exponent: 0,
        }
    }

    /// One-step matrix `T(m, z) = [[z − V(m), −1], [1, 0]]`.
    pub fn step(z: Complex64, v: f64) -> Self {
        Self::from_entries(
            z - v,
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        )
    }

    /// `T(m, z)⁻¹ = [[0, 1], [−1, z − V(m)]]`.
    pub fn step_inverse(z: Complex64, v: f64) -> Self {
        Self::from_entries(
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            z - v,
        )
    }

    fn max_entry(&self) -> f64 {
        [self.a, self.b, self.c, self.d]
            .iter()
            .map(|x| x.re.abs().max(x.im.abs()))
            .fold(0.0, f64::max)
    }

    /// Moves a power of two from the entries into `scale_exponent` once an
    /// entry exceeds `2^512`. Multiplying by powers of two is exact.
    fn rescale(&mut self) {
        let m = self.max_entry();
        if m > 2f64.powi(RESCALE_THRESHOLD_EXP) && m.is_finite() {
            let shift = m.log2().floor() as i32;
            let f = 2f64.powi(-shift);
            self.a *= f;
            self.b *= f;
            self.c *= f;
            self.d *= f;
            self.scale_exponent += shift as i64;
        }
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &TransferMatrix) -> TransferMatrix {
        let mut out = TransferMatrix {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
            scale_exponent: self.scale_exponent + rhs.scale_exponent,
        };
        out.rescale();
        out
    }

    /// Left-multiplies by a one-step matrix `T(m, z)` in place.
    fn push_step(&mut self, z: Complex64, v: f64) {
        let w = z - v;
        let (a, b) = (w * self.a - self.c, w * self.b - self.d);
        self.c = self.a;
        self.d = self.b;
        self.a = a;
        self.b = b;
        self.rescale();
    }

    /// Left-multiplies by `T(m, z)⁻¹` in place.
    fn push_step_inverse(&mut self, z: Complex64, v: f64) {
        let w = z - v;
        let (c, d) = (w * self.c - self.a, w * self.d - self.b);
        self.a = self.c;
        self.b = self.d;
        self.c = c;
        self.d = d;
        self.rescale();
    }

    /// Unscaled entries `[a, b, c, d]`; may overflow to infinity.
    pub fn entries(&self) -> [Complex64; 4] {
        let f = |x: Complex64| Complex64::new(ldexp(x.re, self.scale_exponent), ldexp(x.im, self.scale_exponent));
        [f(self.a), f(self.b), f(self.c), f(self.d)]
    }

    /// Determinant of the represented matrix.
    pub fn determinant(&self) -> Complex64 {
        let det = self.a * self.d - self.b * self.c;
        let e = 2 * self.scale_exponent;
        Complex64::new(ldexp(det.re, e), ldexp(det.im, e))
    }

    /// `|det − 1| / ‖Φ‖²`, evaluated on the scaled entries so it stays finite
    /// for products far beyond the `f64` range.
    pub fn determinant_defect(&self) -> f64 {
        let top = self.max_entry();
        if top == 0.0 {
            return f64::INFINITY;
        }
        let [a, b, c, d] = [self.a / top, self.b / top, self.c / top, self.d / top];
        let det = a * d - b * c;
        let fro = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
        // 1 / (top² · 2^{2e}), formed in two steps to avoid intermediate underflow.
        let one = ldexp(1.0 / top, -2 * self.scale_exponent) / top;
        (det - one).norm() / fro
    }

    /// Natural log of the spectral norm (largest singular value).
    pub fn log_norm(&self) -> f64 {
        // Entries are divided by the largest one so that fro² cannot overflow.
        let top = self.max_entry();
        if top == 0.0 {
            return f64::NEG_INFINITY;
        }
        let [a, b, c, d] = [self.a / top, self.b / top, self.c / top, self.d / top];
        let fro = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
        let det = (a * d - b * c).norm_sqr();
        let disc = (fro * fro - 4.0 * det).max(0.0);
        let sigma_sq = 0.5 * (fro + disc.sqrt());
        0.5 * sigma_sq.ln() + top.ln() + self.scale_exponent as f64 * std::f64::consts::LN_2
    }

    /// Spectral norm; `+∞` once it leaves the `f64` range.
    pub fn norm(&self) -> f64 {
        self.log_norm().exp()
    }

    /// `Tr/2` as a mantissa and power-of-two exponent.
    pub fn half_trace_scaled(&self) -> (Complex64, i64) {
        ((self.a + self.d) * 0.5, self.scale_exponent)
    }

    /// `Tr/2`; may overflow to infinity.
    pub fn half_trace(&self) -> Complex64 {
        let (m, e) = self.half_trace_scaled();
        Complex64::new(ldexp(m.re, e), ldexp(m.im, e))
    }

    /// `self · (v0, v1)ᵀ`, unscaled.
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let [a, b, c, d] = self.entries();
        [a * v[0] + b * v[1], c * v[0] + d * v[1]]
    }
}

/// `Φ(n, z)`: `T(n)⋯T(1)` for `n ≥ 1`, the identity for `n = 0`, and
/// `T(n+1)⁻¹⋯T(0)⁻¹` for `n ≤ −1`.
pub fn transfer_matrix(n: i64, z: Complex64, spec: &PotentialSpec) -> Result<TransferMatrix> {
    let mut m = TransferMatrix::identity();
    if n > 0 {
        for v in spec.sample(1, n as usize)? {
            m.push_step(z, v);
        }
    } else if n < 0 {
        // Φ(−j) = T(−j+1)⁻¹ Φ(−j+1); sites 0, −1, …, n+1.
        let pot = spec.sample(n + 1, (-n) as usize)?;
        for v in pot.into_iter().rev() {
            m.push_step_inverse(z, v);
        }
    }
    Ok(m)
}

/// `ln max ‖Φ(n, z)‖²` over `0 ≤ n ≤ N−1` (right) or `−N+1 ≤ n ≤ 0` (left),
/// computed in a single sweep. `potential` must hold `V` on the swept sites:
/// `V(1..=N−1)` for the right side, `V(0), V(−1), …, V(−N+2)` for the left.
fn sweep_max_log_norm_sq(z: Complex64, potential: &[f64], side: Side, scale_cap: i64) -> f64 {
    let mut m = TransferMatrix::identity();
    let mut best = 0.0f64;
    for &v in potential {
        match side {
            Side::Right => m.push_step(z, v),
            Side::Left => m.push_step_inverse(z, v),
        }
        if m.scale_exponent > scale_cap {
            return f64::INFINITY;
        }
        best = best.max(2.0 * m.log_norm());
    }
    best
}

/// Potential values visited by a window sweep of length `n_max` on `side`.
pub(crate) fn window_potential(spec: &PotentialSpec, n_max: usize, side: Side) -> Result<Vec<f64>> {
    if n_max <= 1 {
        return Ok(Vec::new());
    }
    let steps = n_max - 1;
    match side {
        Side::Right => spec.sample(1, steps),
        Side::Left => {
            let mut v = spec.sample(-(steps as i64) + 1, steps)?;
            v.reverse();
            Ok(v)
        }
    }
}

/// Precomputed window sweep for repeated evaluation at many energies.
#[derive(Debug, Clone)]
pub struct WindowSweep {
    potential: Vec<f64>,
    side: Side,
    scale_cap: i64,
}

impl WindowSweep {
    pub fn new(spec: &PotentialSpec, n_max: usize, side: Side) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::domain("window length N must be ≥ 1"));
        }
        Ok(WindowSweep {
            potential: window_potential(spec, n_max, side)?,
            side,
            scale_cap: DEFAULT_SCALE_CAP,
        })
    }

    pub fn with_scale_cap(mut self, cap: i64) -> Self {
        self.scale_cap = cap;
        self
    }

    /// `ln max_n ‖Φ(n, z)‖²`.
    pub fn log_max_norm_sq(&self, z: Complex64) -> f64 {
        sweep_max_log_norm_sq(z, &self.potential, self.side, self.scale_cap)
    }
}

/// `max ‖Φ(n, z)‖²` over the window `0..N−1` (right) or `−N+1..0` (left).
///
/// The value is at least 1. Products beyond the `f64` range are carried in
/// log space and saturate to `+∞` here; use [`WindowSweep`] for the log.
pub fn window_max_norm(z: Complex64, n_max: usize, side: Side, spec: &PotentialSpec) -> Result<f64> {
    Ok(WindowSweep::new(spec, n_max, side)?.log_max_norm_sq(z).exp())
}

/// `M_k(z) = Φ_{θ=0}(F_k, z)` via `M_{k+1} = M_{k−1} M_k`, seeded with
/// `M_1 = T(1, z)` and `M_2 = T(2, z) T(1, z)`.
pub fn fibonacci_matrix(k: usize, z: Complex64, lambda: f64) -> Result<TransferMatrix> {
    if k == 0 {
        return Err(Error::domain("Fibonacci matrix level must be ≥ 1"));
    }
    let m1 = TransferMatrix::step(z, lambda);
    let m2 = TransferMatrix::step(z, 0.0).mul(&m1);
    if k == 1 {
        return Ok(m1);
    }
    let (mut prev, mut cur) = (m1, m2);
    for _ in 2..k {
        let next = prev.mul(&cur);
        if next.scale_exponent > DEFAULT_SCALE_CAP {
            return Err(Error::domain("Fibonacci matrix exceeds the scale cap"));
        }
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Measured power law `‖Φ(N, z)‖ ≤ C N^γ` over a set of energies.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// `ln C`, taken as `max_z ln ‖Φ(1, z)‖`.
    pub log_c: f64,
    /// Smallest `γ ≥ 0` with `ln ‖Φ(N, z)‖ ≤ ln C + γ ln N` on every sample.
    pub gamma: f64,
    pub samples: usize,
}

/// Fits `C` and `γ` over the energies `points` and `1 ≤ N ≤ n_max`.
pub fn power_law_fit(points: &[Complex64], n_max: usize, spec: &PotentialSpec) -> Result<PowerLawFit> {
    if points.is_empty() || n_max < 2 {
        return Err(Error::DegenerateFit {
            usable: points.len().min(n_max),
            required: 2,
        });
    }
    let potential = spec.sample(1, n_max)?;
    let curves: Vec<Vec<f64>> = points
        .iter()
        .map(|&z| {
            let mut m = TransferMatrix::identity();
            potential
                .iter()
                .map(|&v| {
                    m.push_step(z, v);
                    m.log_norm()
                })
                .collect()
        })
        .collect();
    let log_c = curves.iter().map(|c| c[0]).fold(f64::NEG_INFINITY, f64::max);
    let gamma = curves
        .iter()
        .flat_map(|c| {
            c.iter()
                .enumerate()
                .skip(1)
                .map(|(i, ln)| (ln - log_c) / ((i + 1) as f64).ln())
        })
        .fold(0.0, f64::max);
    Ok(PowerLawFit {
        log_c,
        gamma,
        samples: points.len() * n_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_norm_between_1e77_and_rescaling() {
        let big = Complex64::new(3e120, -4e120);
        let zero = Complex64::new(0.0, 0.0);
        let m = TransferMatrix::from_entries(big, zero, zero, Complex64::new(1.0, 0.0) / big);
        assert!((m.log_norm() - 5e120f64.ln()).abs() < 1e-12);
        assert!(m.determinant_defect() < 1e-15);
        let near = Complex64::new(2f64.powi(511), 0.0);
        let m = TransferMatrix::from_entries(near, near, zero, Complex64::new(1.0, 0.0) / near);
        assert!(m.determinant_defect() < 1e-15);
    }

    fn cz(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_step_is_identity() {
        let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
        let m = transfer_matrix(0, cz(0.3, 0.2), &spec).unwrap();
        assert_eq!(m, TransferMatrix::identity());
        assert_eq!(m.norm(), 1.0);
    }

    #[test]
    fn free_at_zero_energy_is_isometry() {
        for n in [-7i64, -1, 1, 2, 3, 10, 1001] {
            let m = transfer_matrix(n, cz(0.0, 0.0), &PotentialSpec::Free).unwrap();
            assert!((m.norm() - 1.0).abs() < 1e-14, "n = {n}");
        }
        assert_eq!(
            window_max_norm(cz(0.0, 0.0), 500, Side::Right, &PotentialSpec::Free).unwrap(),
            1.0
        );
    }

    #[test]
    fn single_site_window_is_one() {
        let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
        for side in [Side::Right, Side::Left] {
            assert_eq!(window_max_norm(cz(3.0, 0.1), 1, side, &spec).unwrap(), 1.0);
        }
    }

    #[test]
    fn propagates_solutions_both_directions() {
        let spec = PotentialSpec::fibonacci(5.0, 0.3).unwrap();
        let z = cz(0.7, 0.05);
        let (u1, u0) = (cz(0.4, -0.2), cz(1.0, 0.5));
        // Direct recursion u(n+1) = (z − V(n))u(n) − u(n−1).
        let mut u = std::collections::BTreeMap::new();
        u.insert(0i64, u0);
        u.insert(1i64, u1);
        for n in 1..40 {
            let next = (z - spec.value(n).unwrap()) * u[&n] - u[&(n - 1)];
            u.insert(n + 1, next);
        }
        for n in (-40i64..=0).rev() {
            // u(n−1) = (z − V(n))u(n) − u(n+1)
            let prev = (z - spec.value(n).unwrap()) * u[&n] - u[&(n + 1)];
            u.insert(n - 1, prev);
        }
        for n in -39i64..40 {
            let phi = transfer_matrix(n, z, &spec).unwrap();
            let [a, b] = phi.apply([u1, u0]);
            let scale = u[&(n + 1)].norm().max(1.0);
            assert!((a - u[&(n + 1)]).norm() < 1e-9 * scale, "n = {n}");
            assert!((b - u[&n]).norm() < 1e-9 * scale, "n = {n}");
        }
    }

    #[test]
    fn determinant_is_one_with_rescaling() {
        let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
        // Far off the spectrum the product overflows without rescaling.
        let m = transfer_matrix(2000, cz(30.0, 1.0), &spec).unwrap();
        assert!(m.scale_exponent > 0);
        assert!(m.determinant_defect() < 1e-10);
        assert!(m.log_norm() > 1000.0);
        // Log growth of one column, renormalised each step, tracks the norm.
        let v = spec.sample(1, 2000).unwrap();
        let (mut u, mut w, mut log) = (cz(1.0, 0.0), cz(0.0, 0.0), 0.0f64);
        for x in v {
            let next = (cz(30.0, 1.0) - x) * u - w;
            w = u;
            u = next;
            let s = u.norm().max(w.norm());
            u /= s;
            w /= s;
            log += s.ln();
        }
        assert!((log + u.norm().ln() - m.log_norm()).abs() < 1e-6 * log);
        let small = transfer_matrix(300, cz(0.3, 0.01), &spec).unwrap();
        assert!((small.determinant() - 1.0).norm() < 1e-10 * small.norm().powi(2));
    }

    #[test]
    fn fibonacci_matrix_first_level_trace() {
        let z = cz(1.3, 0.2);
        let m1 = fibonacci_matrix(1, z, 8.0).unwrap();
        assert!((m1.a + m1.d - (z - 8.0)).norm() < 1e-15);
    }

    #[test]
    fn fibonacci_recursion_and_definition_agree() {
        let lambda = 8.0;
        let spec = PotentialSpec::fibonacci(lambda, 0.0).unwrap();
        let z = cz(0.4, 0.01);
        let fib = [1usize, 1, 2, 3, 5, 8, 13, 21, 34];
        for (k, &f) in fib.iter().enumerate().skip(1) {
            let rec = fibonacci_matrix(k, z, lambda).unwrap();
            let direct = transfer_matrix(f as i64, z, &spec).unwrap();
            let (r, d) = (rec.entries(), direct.entries());
            for i in 0..4 {
                assert!((r[i] - d[i]).norm() <= 1e-10 * d[i].norm().max(1.0), "k = {k}");
            }
        }
        let m3 = fibonacci_matrix(3, z, lambda).unwrap();
        let m4 = fibonacci_matrix(4, z, lambda).unwrap();
        let m5 = fibonacci_matrix(5, z, lambda).unwrap();
        let prod = m3.mul(&m4).entries();
        for (p, e) in prod.iter().zip(m5.entries()) {
            assert!((p - e).norm() <= 1e-10 * e.norm().max(1.0));
        }
    }

    #[test]
    fn window_max_norm_is_monotone_in_length() {
        let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
        let z = cz(0.5, 0.01);
        for side in [Side::Right, Side::Left] {
            let mut last = 1.0;
            for n in [1usize, 2, 5, 13, 40, 100] {
                let v = window_max_norm(z, n, side, &spec).unwrap();
                assert!(v >= last);
                last = v;
            }
        }
    }
}
