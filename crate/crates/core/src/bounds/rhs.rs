//! Energy integrals on the right-hand sides of the dynamical upper bounds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Region, ResolventSolver};
use crate::error::{Error, Result};
use crate::lattice::{spectral_bound, PotentialSpec};
use crate::quadrature::{integrate_scalar, try_integrate, QuadOptions};
use crate::transfer::{Side, WindowSweep};

/// A computed quantity with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn check_args(n: usize, t: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("distance N must be at least 1"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be positive and finite, got {t}")));
    }
    Ok(())
}

/// `t⁴ ∫_{−K}^{K} (max_{n<N} ‖Φ(n, E + i/t)‖²)⁻¹ dE`, with the window on `side`.
pub fn theorem1_rhs(n: usize, t: f64, spec: &PotentialSpec, side: Side, quad_tol: f64) -> Result<Estimate> {
    check_args(n, t)?;
    let k = spectral_bound(spec);
    let sweep = WindowSweep::new(spec, n, side)?;
    let eta = 1.0 / t;
    let f = |e: f64| (-sweep.log_max_norm_sq(Complex64::new(e, eta))).exp();
    let opts = QuadOptions {
        initial_panels: 64,
        ..QuadOptions::with_rel_tol(quad_tol)
    };
    let (v, err) = integrate_scalar(f, -k, k, opts)?;
    let t4 = t.powi(4);
    Ok(Estimate {
        value: v * t4,
        error: err * t4,
    })
}

/// `∫_{−K}^{K} Σ_{n≥N} |⟨(H − E − i/t)⁻¹δ_0, δ_n⟩|² dE`, summing `n ≤ −N` for the left side.
pub fn lemma2_rhs(n: usize, t: f64, spec: &PotentialSpec, side: Side, quad_tol: f64) -> Result<Estimate> {
    check_args(n, t)?;
    let k = spectral_bound(spec);
    let region = match side {
        Side::Right => Region::Right,
        Side::Left => Region::Left,
    };
    let z0 = Complex64::new(0.0, 1.0 / t);
    let mut solver = ResolventSolver::new(spec, (quad_tol * 1e-4).min(1e-8))?;
    let reach = solver
        .padding_limit(z0)?
        .min(crate::dynamics::resolvent::DEFAULT_PADDING_CAP);
    solver.reserve(reach + n + 2)?;
    let f = |e: f64| solver.tail_sums(Complex64::new(e, 1.0 / t), &[n], region);
    let opts = QuadOptions {
        initial_panels: 64,
        ..QuadOptions::with_rel_tol(quad_tol)
    };
    let q = try_integrate(f, -k, k, opts)?;
    Ok(Estimate {
        value: q.values[0],
        error: q.errors[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_integral_trivial_bounds() {
        let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
        let t = 5.0;
        let k = spectral_bound(&spec);
        let mut prev = f64::INFINITY;
        for n in [1, 2, 4, 8, 16] {
            let r = theorem1_rhs(n, t, &spec, Side::Right, 1e-6).unwrap();
            assert!(r.value <= 2.0 * k * t.powi(4) * (1.0 + 1e-9));
            assert!(r.value <= prev * (1.0 + 1e-6));
            prev = r.value;
        }
        let one = theorem1_rhs(1, t, &spec, Side::Left, 1e-8).unwrap();
        assert!((one.value - 2.0 * k * t.powi(4)).abs() < 1e-6 * one.value);
    }

    #[test]
    fn transfer_integral_free_far_tail() {
        let r = lemma2_rhs(400, 10.0, &PotentialSpec::Free, Side::Right, 1e-6).unwrap();
        assert!(r.value < 1e-8, "{}", r.value);
    }

    #[test]
    fn transfer_integral_decreases_with_distance() {
        let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
        let a = lemma2_rhs(2, 10.0, &spec, Side::Right, 1e-6).unwrap().value;
        let b = lemma2_rhs(10, 10.0, &spec, Side::Right, 1e-6).unwrap().value;
        assert!(b < a && b > 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let spec = PotentialSpec::Free;
        assert!(theorem1_rhs(0, 1.0, &spec, Side::Right, 1e-6).is_err());
        assert!(lemma2_rhs(3, -1.0, &spec, Side::Right, 1e-6).is_err());
    }
}
