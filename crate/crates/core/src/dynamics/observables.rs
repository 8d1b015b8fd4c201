//! Outside probabilities and position moments.

use serde::{Deserialize, Serialize};

use super::evolve::WavePacket;

/// Which tail of the lattice an outside probability covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Right,
    Left,
    Both,
}

/// `P_r(N) = Σ_{n≥N}|ψ(n)|²` and `P_l(N) = Σ_{n≤−N}|ψ(n)|²` for every `N`
/// up to the window edge, summed from the outside in.
#[derive(Debug, Clone, PartialEq)]
pub struct TailProfile {
    right: Vec<f64>,
    left: Vec<f64>,
    origin: f64,
}

impl TailProfile {
    pub fn new(psi: &WavePacket) -> Self {
        let w = &psi.window;
        let suffix = |sites: &mut dyn Iterator<Item = i64>| {
            let mut v: Vec<f64> = sites.map(|n| w.get(n).norm_sqr()).collect();
            let mut acc = 0.0;
            for x in v.iter_mut().rev() {
                acc += *x;
                *x = acc;
            }
            v
        };
        TailProfile {
            right: suffix(&mut (0..=w.right().max(0))),
            left: suffix(&mut (0..=(-w.left()).max(0)).map(|n| -n)),
            origin: w.get(0).norm_sqr(),
        }
    }

    pub fn right(&self, n: usize) -> f64 {
        self.right.get(n).copied().unwrap_or(0.0)
    }

    pub fn left(&self, n: usize) -> f64 {
        self.left.get(n).copied().unwrap_or(0.0)
    }

    /// Outside probability; for `Both` at `N = 0` the origin is counted once.
    pub fn get(&self, n: usize, region: Region) -> f64 {
        match region {
            Region::Right => self.right(n),
            Region::Left => self.left(n),
            Region::Both if n == 0 => self.right(0) + self.left(0) - self.origin,
            Region::Both => self.right(n) + self.left(n),
        }
    }
}

/// `P_r(N,t)`, `P_l(N,t)` or their sum. The certified additive uncertainty
/// is `psi.probability_uncertainty()`.
pub fn outside_probability(psi: &WavePacket, n: usize, region: Region) -> f64 {
    TailProfile::new(psi).get(n, region)
}

/// `Σ_n |n|^p |ψ(n)|²` over the window.
pub fn moment(psi: &WavePacket, p: f64) -> f64 {
    assert!(p > 0.0, "moment order must be positive");
    psi.window
        .iter()
        .map(|(n, a)| (n.unsigned_abs() as f64).powf(p) * a.norm_sqr())
        .sum()
}

/// Bound on the moment error from the truncation, using the window edge as
/// a ballistic envelope for the mass that may be missing.
pub fn moment_uncertainty(psi: &WavePacket, p: f64) -> f64 {
    let reach = psi.window.left().unsigned_abs().max(psi.window.right().unsigned_abs()) as f64 + 1.0;
    psi.probability_uncertainty() * reach.powf(p)
}
