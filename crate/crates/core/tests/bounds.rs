use proptest::prelude::*;
use qdx_core::bounds::{
    alpha_lower, alpha_upper, band_power_law, envelope_fit, lemma2_rhs, spreading_profile, theorem1_rhs,
    transport_exponents, EnvelopePoint,
};
use qdx_core::dynamics::{evolve, moment, outside_probability, Region};
use qdx_core::{PotentialSpec, Side};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn alpha_bounds_are_ordered(lambda in 5.0f64..1e4) {
        let lo = alpha_lower(lambda).unwrap();
        let hi = alpha_upper(lambda).unwrap();
        prop_assert!(0.0 < lo && lo <= hi && hi <= 1.0 + 1e-12);
    }

    #[test]
    fn power_law_recovers_exact_decay(q in 0.1f64..4.0) {
        let times: Vec<f64> = (0..=20).map(|i| 10f64.powf(1.0 + i as f64 / 10.0)).collect();
        let alphas: Vec<f64> = (0..=4).map(|i| 0.25 * i as f64).collect();
        let probs: Vec<Vec<f64>> = alphas.iter().map(|_| times.iter().map(|t| t.powf(-q)).collect()).collect();
        let prof = spreading_profile(&alphas, &times, &probs, 0.05, 10.0).unwrap();
        for (&a, &b) in prof.s_minus.iter().zip(&prof.s_plus) {
            prop_assert!((a - q).abs() < 1e-3 && (b - q).abs() < 1e-3);
        }
    }
}

#[test]
fn power_law_exponent_grows_with_log_coupling() {
    let lambdas = [8.0, 16.0, 32.0, 64.0];
    let gammas: Vec<f64> = lambdas
        .iter()
        .map(|&l| band_power_law(l, 8, 0.2).unwrap().gamma)
        .collect();
    for w in gammas.windows(2) {
        assert!(w[1] > w[0], "{gammas:?}");
    }
    let ratios: Vec<f64> = gammas.iter().zip(&lambdas).map(|(g, l)| g / l.ln()).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi / lo < 2.0, "γ/ln λ = {ratios:?}");
}

#[test]
fn moment_norms_are_monotone_in_p() {
    let spec = PotentialSpec::fibonacci(5.0, 0.0).unwrap();
    let ps = [0.5, 1.0, 2.0, 4.0];
    for i in 0..=8 {
        let t = 10f64.powf(0.25 * i as f64);
        let psi = evolve(&spec, t, 1e-12).unwrap();
        let norms: Vec<f64> = ps.iter().map(|&p| moment(&psi, p).powf(1.0 / p)).collect();
        for w in norms.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-10), "t = {t}: {norms:?}");
        }
    }
}

#[test]
fn free_transport_is_ballistic() {
    let series: Vec<(f64, f64)> = (0..=10)
        .map(|i| {
            let t = 10f64.powf(1.0 + i as f64 / 5.0);
            (t, moment(&evolve(&PotentialSpec::Free, t, 1e-12).unwrap(), 2.0))
        })
        .collect();
    let b = transport_exponents(&series, 2.0).unwrap();
    assert!(
        (b.beta_minus - 1.0).abs() < 1e-3 && (b.beta_plus - 1.0).abs() < 1e-3,
        "{b:?}"
    );
}

#[test]
fn transfer_integral_dominates_up_to_constants() {
    let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
    let mut pts = Vec::new();
    for t in [10.0, 20.0, 40.0, 80.0] {
        let psi = evolve(&spec, t, 1e-14).unwrap();
        for a in [0.5, 0.7, 0.9] {
            let n = f64::powf(t, a).ceil() as usize;
            let rhs = lemma2_rhs(n, t, &spec, Side::Right, 1e-6).unwrap().value;
            pts.push(EnvelopePoint {
                n,
                t,
                measured: outside_probability(&psi, n, Region::Right),
                rhs,
            });
        }
    }
    let fit = envelope_fit(&pts, 40.0).unwrap();
    assert!(fit.violations.is_empty(), "{fit:?}");
}

#[test]
fn decay_integral_shrinks_with_distance() {
    let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
    let mut prev = f64::INFINITY;
    for n in [4, 8, 16, 32] {
        let v = theorem1_rhs(n, 10.0, &spec, Side::Left, 1e-6).unwrap().value;
        assert!(v <= prev);
        prev = v;
    }
}
