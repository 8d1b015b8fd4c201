//! The Fibonacci trace map.

pub mod bands;
pub mod dimension;
pub mod real;
pub mod sequence;

pub use bands::{
    band_scaling, band_scaling_of, c_histogram, histogram, real_bands, root_profiles, triple_intersection, Band,
    BandScaling, BandSet, RootProfile, TraceSpectrum,
};
pub use dimension::{box_dimension, box_dimension_of, cover_count, DimensionEstimate};
pub use real::{RealTrace, TraceValue};
pub use sequence::{fricke_deviations, trace_sequence, TraceState};

/// `F_k` with `F_0 = F_1 = 1`.
pub fn fibonacci_number(k: usize) -> u64 {
    let (mut a, mut b) = (1u64, 1u64);
    for _ in 0..k {
        let c = a + b;
        a = b;
        b = c;
    }
    a
}

/// Coupling above which `σ_k^δ` has exactly `F_k` real components.
pub fn lambda_zero(delta: f64) -> f64 {
    let d = 1.0 + delta;
    (12.0 * d * d + 8.0 * d * d * d + 4.0).sqrt()
}
