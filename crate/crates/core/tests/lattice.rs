use num_complex::Complex64;
use proptest::prelude::*;
use qdx_core::{apply_hamiltonian, potential_value, spectral_bound, LatticeWindow, PotentialSpec};

fn window(left: i64, parts: &[(f64, f64)]) -> LatticeWindow {
    LatticeWindow::new(left, parts.iter().map(|&(a, b)| Complex64::new(a, b)).collect())
}

fn spec_strategy() -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        Just(PotentialSpec::Free),
        (0.5f64..40.0, 0.0f64..1.0).prop_map(|(l, t)| PotentialSpec::fibonacci(l, t).unwrap()),
    ]
}

fn amps() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40)
}

proptest! {
    #[test]
    fn hamiltonian_is_symmetric(spec in spec_strategy(), a in amps(), b in amps(), la in -30i64..=0, lb in -30i64..=0) {
        let (mut psi, mut chi) = (window(la, &a), window(lb, &b));
        let lo = psi.left().min(chi.left()) - 2;
        let hi = psi.right().max(chi.right()) + 2;
        psi.grow_to(lo, hi);
        chi.grow_to(lo, hi);
        let lhs = apply_hamiltonian(&psi, &spec).unwrap().inner(&chi);
        let rhs = psi.inner(&apply_hamiltonian(&chi, &spec).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn hamiltonian_norm_bound(spec in spec_strategy(), a in amps(), left in -50i64..=0) {
        let psi = window(left, &a);
        let h = apply_hamiltonian(&psi, &spec).unwrap();
        let bound = 2.0 + spec.sup_norm();
        prop_assert!(h.norm_sqr().sqrt() <= bound * psi.norm_sqr().sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn hamiltonian_is_linear(spec in spec_strategy(), a in amps(), b in amps(), s in -3.0f64..3.0, r in -3.0f64..3.0) {
        let psi = window(-5, &a);
        let mut chi = window(-5, &b);
        let mut comb = psi.clone();
        let hi = psi.right().max(chi.right());
        comb.grow_to(-5, hi);
        chi.grow_to(-5, hi);
        let (cs, cr) = (Complex64::new(s, 0.5), Complex64::new(r, -1.0));
        for n in -5..=hi {
            comb.set(n, cs * psi.get(n) + cr * chi.get(n));
        }
        let lhs = apply_hamiltonian(&comb, &spec).unwrap();
        let hp = apply_hamiltonian(&psi, &spec).unwrap();
        let hc = apply_hamiltonian(&chi, &spec).unwrap();
        for n in lhs.left()..=lhs.right() {
            let want = cs * hp.get(n) + cr * hc.get(n);
            prop_assert!((lhs.get(n) - want).norm() < 1e-12 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn fibonacci_takes_two_values(lambda in 0.1f64..100.0, theta in 0.0f64..1.0, n in -1_000_000_000i64..1_000_000_000) {
        let spec = PotentialSpec::fibonacci(lambda, theta).unwrap();
        let v = potential_value(&spec, n).unwrap();
        prop_assert!(v == 0.0 || v == lambda);
        prop_assert_eq!(v, potential_value(&spec, n).unwrap());
    }

    #[test]
    fn sampling_matches_pointwise(lambda in 0.1f64..50.0, theta in 0.0f64..1.0, first in -10_000i64..10_000, len in 1usize..200) {
        let spec = PotentialSpec::fibonacci(lambda, theta).unwrap();
        let s = spec.sample(first, len).unwrap();
        for (i, v) in s.iter().enumerate() {
            prop_assert_eq!(*v, potential_value(&spec, first + i as i64).unwrap());
        }
    }
}

#[test]
fn zero_phase_sequence_starts_as_expected() {
    let spec = PotentialSpec::fibonacci(8.0, 0.0).unwrap();
    let v: Vec<f64> = (1..=8).map(|n| potential_value(&spec, n).unwrap() / 8.0).collect();
    assert_eq!(v, [1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    assert_eq!(potential_value(&spec, 0).unwrap(), 0.0);
}

#[test]
fn zero_phase_matches_exact_integer_rule() {
    // n·φ⁻¹ mod 1 ≥ 1 − φ⁻¹ exactly when ⌊(n+1)φ⁻¹⌋ − ⌊nφ⁻¹⌋ = 1.
    let spec = PotentialSpec::fibonacci(1.0, 0.0).unwrap();
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    for n in 1..2000i64 {
        let jump = ((n + 1) as f64 * inv).floor() - (n as f64 * inv).floor();
        assert_eq!(potential_value(&spec, n).unwrap(), jump, "n = {n}");
    }
}

#[test]
fn stencil_on_delta() {
    let free = apply_hamiltonian(&LatticeWindow::delta(), &PotentialSpec::Free).unwrap();
    let fib = apply_hamiltonian(&LatticeWindow::delta(), &PotentialSpec::fibonacci(8.0, 0.0).unwrap()).unwrap();
    for h in [free, fib] {
        assert_eq!(h.get(-1), Complex64::new(1.0, 0.0));
        assert_eq!(h.get(0), Complex64::new(0.0, 0.0));
        assert_eq!(h.get(1), Complex64::new(1.0, 0.0));
    }
}

#[test]
fn spectral_bounds() {
    assert_eq!(spectral_bound(&PotentialSpec::Free), 4.0);
    assert_eq!(spectral_bound(&PotentialSpec::fibonacci(8.0, 0.0).unwrap()), 11.0);
    assert_eq!(spectral_bound(&PotentialSpec::custom(vec![0.0; 10], -5).unwrap()), 4.0);
}

#[test]
fn custom_table_out_of_range() {
    let spec = PotentialSpec::custom(vec![1.0, 2.0, 3.0], -1).unwrap();
    assert_eq!(potential_value(&spec, 1).unwrap(), 3.0);
    assert!(potential_value(&spec, 2).is_err());
}
