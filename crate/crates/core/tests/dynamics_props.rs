//! Schrödinger propagation: unitarity, splitting order, and the
//! semiclassical energy formula.

use phasequant::irrep::{build_window, FrameMaps, WindowFamily, XGrid};
use phasequant::phase_grid::{DensityModel, Interval};
use phasequant::qdynamics::{schrodinger_propagate, schrodinger_propagate_with, Integrator};
use phasequant::quantize::{harmonic_hamiltonian, potential_hamiltonian, semiclassical_expectation};
use phasequant::states::gaussian_packet;
use phasequant::symbol::Symbol;
use proptest::prelude::*;

fn frame(lambda: f64) -> FrameMaps {
    let xg = XGrid::new(1, Interval::symmetric(10.0), 128, 1.0).unwrap();
    let w = build_window(WindowFamily::Hermite1d { n: 0 }, lambda, 1.0).unwrap();
    FrameMaps::new(&w, &xg, 128).unwrap()
}

#[test]
fn harmonic_evolution_is_unitary_and_conserves_energy() {
    let fr = frame(1.0);
    let (h, _) = harmonic_hamiltonian(&fr, 1.0, 1.0).unwrap();
    let psi = gaussian_packet(fr.x_grid(), &[2.0], &[0.5], 0.7);
    let e0 = h.expectation(&psi).unwrap().re;
    let traj = schrodinger_propagate(&psi, &h, 2.0 * std::f64::consts::PI, 2000).unwrap();
    for s in &traj {
        assert!((s.norm() - 1.0).abs() < 1e-8);
        assert!((h.expectation(s).unwrap().re - e0).abs() < 1e-8 * e0.abs());
    }
}

#[test]
fn strang_splitting_is_second_order() {
    let fr = frame(1.0);
    let (h, _, _) = potential_hamiltonian(&fr, 1.0, |x: &[f64]| 0.05 * x[0].powi(4)).unwrap();
    let psi = gaussian_packet(fr.x_grid(), &[1.0], &[0.5], 0.8);
    let t = 1.0;
    let exact = schrodinger_propagate_with(&psi, &h, t, 1, Integrator::Dense).unwrap().pop().unwrap();
    let err = |steps: usize| {
        let last = schrodinger_propagate_with(&psi, &h, t, steps, Integrator::Strang).unwrap().pop().unwrap();
        last.distance(&exact).unwrap()
    };
    let (e1, e2) = (err(40), err(80));
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "{e1:.3e} / {e2:.3e} = {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn energy_equals_symbol_average_over_the_husimi_density(
        q0 in -2.0..2.0f64, p0 in -1.5..1.5f64, sigma in 0.6..1.2f64, omega in 0.5..1.5f64,
    ) {
        let fr = frame(1.0);
        let (h, _) = harmonic_hamiltonian(&fr, 1.0, omega).unwrap();
        let psi = gaussian_packet(fr.x_grid(), &[q0], &[p0], sigma);
        let quantum = h.expectation(&psi).unwrap().re;
        let rho = DensityModel::pure(fr.analyze(&psi).unwrap()).unwrap();
        let classical = semiclassical_expectation(&Symbol::harmonic(1, 1.0, omega), &rho, &fr).unwrap();
        prop_assert!((quantum - classical).abs() < 1e-6 * quantum.abs(), "{quantum} vs {classical}");
    }
}
