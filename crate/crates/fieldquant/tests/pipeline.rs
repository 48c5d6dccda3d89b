use fieldquant::evolution::{frame_at, hamiltonian_at, kahler_at, norm_drift, Evolver, FoliationCurve, Scheme};
use fieldquant::fock::FockSpace;
use fieldquant::gaussmeasure::{segal_coefficients, segal_polynomial};
use fieldquant::linalg::{c, max_abs_c};
use fieldquant::{CVec, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn state(dim: usize, seed: u64) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVec::from_fn(dim, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).normalize()
}

#[test]
fn frame_intertwines_hamiltonians() {
    // the flat-basis generator conjugated by T(t) is the Hamiltonian in the Δ(t) basis
    let fc = FoliationCurve::linear_expansion(3, 2.0 * PI, 1.0, 1.0, 0.2);
    let t = 0.4;
    let ks = kahler_at(&fc, t).unwrap();
    let ev = Evolver::new(fc.clone(), 3, Scheme::Cayley, false);
    let frame = frame_at(&ev.flat, &ks);
    let lhs = &frame * ev.generator(t).unwrap() * frame.clone().try_inverse().unwrap();
    let h = hamiltonian_at(&fc, t, &ks, 3).unwrap();
    assert!(max_abs_c(&(lhs - h.mat * C64::new(0.0, -1.0))) < 1e-12);
}

#[test]
fn evolved_state_round_trips_through_polynomials() {
    let fc = FoliationCurve::minkowski(3, 2.0 * PI, 1.0, 1.0);
    let ev = Evolver::new(fc, 3, Scheme::Cayley, true);
    let recs = ev.run(&state(ev.flat.dim(), 2), 0.0, 0.3, 0.01).unwrap();
    let psi = fieldquant::fock::FockState { coeffs: recs.last().unwrap().state.clone() };
    let flat = FockSpace::new(&fieldquant::RMat::identity(3, 3), 3);
    let back = segal_coefficients(&segal_polynomial(&psi, &flat), &flat).unwrap();
    assert!((back.coeffs - psi.coeffs).norm() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn static_cayley_is_unitary(seed in any::<u64>(), mass in 0.5f64..2.0, lapse in 0.5f64..2.0) {
        let fc = FoliationCurve::minkowski(3, 2.0 * PI, lapse, mass);
        let ev = Evolver::new(fc, 2, Scheme::Cayley, true);
        let recs = ev.run(&state(ev.flat.dim(), seed), 0.0, 0.5, 0.05).unwrap();
        prop_assert!(norm_drift(&recs) < 1e-10);
        let e0 = recs[0].energy;
        prop_assert!(recs.iter().all(|r| (r.energy - e0).abs() < 1e-10));
    }

    #[test]
    fn connection_beats_no_connection(seed in any::<u64>(), rate in 0.05f64..0.3) {
        let fc = FoliationCurve::linear_expansion(3, 2.0 * PI, 1.0, 1.0, rate);
        let v = state(10, seed);
        let with = Evolver::new(fc.clone(), 2, Scheme::Cayley, true).run(&v, 0.0, 0.5, 0.01).unwrap();
        let without = Evolver::new(fc, 2, Scheme::Cayley, false).run(&v, 0.0, 0.5, 0.01).unwrap();
        prop_assert!(norm_drift(&with) < 1e-3 * norm_drift(&without));
    }
}
