//! Windowed-Fourier frame identities against closed forms and direct sums.

use std::f64::consts::PI;

use phasequant::galileo_rep::{group_action, GroupAction};
use phasequant::irrep::{build_window, coherent_state, FrameMaps, WindowFamily, XGrid, XState};
use phasequant::states::{random_x_state, seeded_rng};
use phasequant::Complex64;
use proptest::prelude::*;

const LAMBDA: f64 = 0.25;

fn frame(n: usize, family: WindowFamily) -> FrameMaps {
    let dim = family.dim();
    let xg = XGrid::balanced(dim, n, LAMBDA, 1.0).unwrap();
    let w = build_window(family, LAMBDA, 1.0).unwrap();
    FrameMaps::new(&w, &xg, n).unwrap()
}

/// `⟨ξ_a|ξ_b⟩` for the Gaussian window with `ξ_{p,q}(x) = Φ(x−q) e^{ip(x−q)/ħ}`:
/// `h⁻¹ exp(−Δq²/4λ² − λ²Δp²/4ħ²) exp(i(Δp·m − p_b q_b + p_a q_a)/ħ)` with
/// `m` the midpoint of the two positions (ħ = 1).
fn gaussian_overlap(a: (f64, f64), b: (f64, f64)) -> Complex64 {
    let (dp, dq) = (b.0 - a.0, b.1 - a.1);
    let m = 0.5 * (a.1 + b.1);
    let modulus = (-dq * dq / (4.0 * LAMBDA * LAMBDA) - LAMBDA * LAMBDA * dp * dp / 4.0).exp() / (2.0 * PI);
    Complex64::from_polar(modulus, dp * m - b.0 * b.1 + a.0 * a.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analysis_is_an_isometry(seed in any::<u64>()) {
        let fr = frame(128, WindowFamily::Hermite1d { n: 0 });
        let psi = random_x_state(fr.x_grid(), &mut seeded_rng(seed));
        let phi = fr.analyze(&psi).unwrap();
        prop_assert!((phi.norm() - psi.norm()).abs() < 1e-10);
        prop_assert!(fr.synthesize(&phi).unwrap().distance(&psi).unwrap() < 1e-8);
    }

    #[test]
    fn coherent_overlaps_match_the_gaussian_kernel(a in prop::array::uniform4(-1.5..1.5f64)) {
        let fr = frame(128, WindowFamily::Hermite1d { n: 0 });
        let (pa, qa, pb, qb) = (4.0 * a[0], a[1], 4.0 * a[2], a[3]);
        let xa = coherent_state(&fr, &[pa], &[qa]).unwrap();
        let xb = coherent_state(&fr, &[pb], &[qb]).unwrap();
        let got = xa.inner(&xb).unwrap();
        let want = gaussian_overlap((pa, qa), (pb, qb));
        prop_assert!((got - want).norm() < 1e-8, "{got} vs {want}");
    }
}

/// `∑ ξ_{p,q} ⟨ξ_{p,q}|ψ⟩ Δp Δq` assembled from coherent states alone.
fn closure(fr: &FrameMaps, psi: &XState) -> XState {
    let g = fr.phase_grid();
    let cell = g.dp() * g.dq();
    let mut acc = XState::zeros(*fr.x_grid());
    for p in g.p_coords() {
        for q in g.q_coords() {
            let xi = coherent_state(fr, &[p], &[q]).unwrap();
            let c = xi.inner(psi).unwrap() * cell;
            acc = acc.combine(Complex64::new(1.0, 0.0), &xi, c).unwrap();
        }
    }
    acc
}

#[test]
fn coherent_states_resolve_the_identity() {
    let fr = frame(64, WindowFamily::Hermite1d { n: 0 });
    let mut rng = seeded_rng(5);
    for _ in 0..10 {
        // in-subspace: the image of an x-state under ΠW
        let psi = random_x_state(fr.x_grid(), &mut rng);
        let back = closure(&fr, &psi);
        let r = back.distance(&psi).unwrap();
        assert!(r < 1e-6, "{r:.3e}");
    }
}

#[test]
fn delta_states_are_orthonormal_across_windows() {
    let xg = XGrid::balanced(1, 128, LAMBDA, 1.0).unwrap();
    let frames: Vec<FrameMaps> = (0..3)
        .map(|n| FrameMaps::new(&build_window(WindowFamily::Hermite1d { n }, LAMBDA, 1.0).unwrap(), &xg, 128).unwrap())
        .collect();
    let norm = 1.0 / xg.dx().sqrt();
    let picks = [40usize, 63, 64, 90];
    let mut images = Vec::new();
    for (n, fr) in frames.iter().enumerate() {
        for &k in &picks {
            let mut e = XState::zeros(xg);
            e.values_mut().as_slice_mut().unwrap()[k] = Complex64::new(norm, 0.0);
            images.push(((n, k), fr.analyze_unchecked(&e).unwrap()));
        }
    }
    let mut worst: f64 = 0.0;
    for (a, fa) in &images {
        for (b, fb) in &images {
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((fa.inner(fb).unwrap() - want).norm());
        }
    }
    assert!(worst < 1e-6, "{worst:.3e}");
}

#[test]
fn planar_analysis_is_rotation_covariant() {
    let theta: f64 = 0.4;
    for m in [0i32, 1, -1] {
        let fr = frame(64, WindowFamily::Planar2d { m });
        let xg = *fr.x_grid();
        let packet = |x: &[f64]| {
            let (a, b) = (x[0] - 0.3, x[1] + 0.2);
            Complex64::from_polar((-(a * a + 1.5 * b * b) / (2.0 * 0.3 * 0.3)).exp(), 2.0 * x[0] - x[1])
        };
        let psi = XState::from_fn(xg, packet);
        // ψ(R⁻¹x)
        let (s, c) = theta.sin_cos();
        let rotated = XState::from_fn(xg, |x| packet(&[c * x[0] + s * x[1], -s * x[0] + c * x[1]]));
        // ξ carries conj Φ, so analysis pairs ψ with Φ(x − q) and
        // Φ(Ru) = e^{imθ} Φ(u) twists by e^{+imθ}
        let lhs = fr.analyze(&rotated).unwrap();
        let rhs = group_action(&GroupAction::Rotation(vec![theta]), &fr.analyze(&psi).unwrap())
            .unwrap()
            .scaled(Complex64::from_polar(1.0, m as f64 * theta));
        let r = lhs.distance(&rhs).unwrap() / lhs.norm();
        assert!(r < 1e-6, "m = {m}: {r:.3e}");
    }
}
