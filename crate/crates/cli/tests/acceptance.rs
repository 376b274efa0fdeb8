//! Acceptance criteria 1–12, each printed as one PASS/FAIL line.
//!
//! Expected values come from closed forms or independent quadratures written
//! here, never from the library routine under test.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use phasequant::galileo_rep::{prequantum_apply, self_dual_grid, Generator, SymplecticTransform};
use phasequant::irrep::{
    build_window, coherent_state, discrete_symmetry_signs, quasi_projector_trace, FrameMaps, WindowFamily, XGrid,
    XState,
};
use phasequant::koopman::{poisson_bracket, KoopmanGenerator};
use phasequant::phase_grid::{make_grid, Interval, PhaseField, PhaseGrid, Region, Role};
use phasequant::qdynamics::{compare_classical_quantum, run_evolution, weak_equation_residuals, EvolutionConfig, Integrator};
use phasequant::quantize::{
    angular_spin_operators, energy_constants, harmonic_hamiltonian, hermitian_eigenvalues, momentum_apply,
    position_apply, potential_hamiltonian, quantize_grid_route, QuantizedOperator,
};
use phasequant::states::{gaussian_packet, random_phase_field, random_x_state, seeded_rng};
use phasequant::symbol::{Polynomial, Symbol};
use phasequant::Complex64;
use rand::Rng;

const SEED: u64 = 20240917;
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(checks: &[(&str, f64, f64)]) -> Outcome {
    let pass = checks.iter().all(|(_, v, tol)| v.is_finite() && v <= tol);
    let detail = checks.iter().map(|(n, v, t)| format!("{n}={v:.2e} (≤{t:.0e})")).collect::<Vec<_>>().join(", ");
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// helpers on phase fields

type Op<'a> = Box<dyn Fn(&PhaseField) -> PhaseField + 'a>;

fn gen(g: Generator) -> Op<'static> {
    Box::new(move |f| prequantum_apply(g, f).unwrap())
}

/// `‖([A,B] − c·C)φ‖ / ‖φ‖` with `C = 1` when absent.
fn commutator_residual(a: &Op, b: &Op, c: Complex64, rhs: Option<&Op>, phi: &PhaseField) -> f64 {
    let ab = a(&b(phi));
    let ba = b(&a(phi));
    let comm = ab.sub(&ba).unwrap();
    let target = match rhs {
        Some(r) => r(phi),
        None => phi.clone(),
    };
    comm.combine(ONE, &target, -c).unwrap().norm() / phi.norm()
}

fn ihbar(hbar: f64) -> Complex64 {
    Complex64::new(0.0, hbar)
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let hbar = 1.0;
    let mut rng = seeded_rng(SEED);
    let zero = Complex64::new(0.0, 0.0);
    let mut worst_1d: f64 = 0.0;
    let g1 = make_grid(1, Interval::symmetric(9.0), Interval::symmetric(9.0), 256, 256, hbar).unwrap();
    let (p, q) = (gen(Generator::P(0)), gen(Generator::Q(0)));
    for _ in 0..10 {
        let phi = random_phase_field(&g1, &mut rng);
        worst_1d = worst_1d.max(commutator_residual(&p, &q, -ihbar(hbar), None, &phi));
    }
    // [A_i, A_i] vanishes identically; only distinct pairs are exercised.
    let mut worst_2d: f64 = 0.0;
    let g2 = make_grid(2, Interval::symmetric(9.0), Interval::symmetric(9.0), 32, 32, hbar).unwrap();
    let ps = [gen(Generator::P(0)), gen(Generator::P(1))];
    let qs = [gen(Generator::Q(0)), gen(Generator::Q(1))];
    let jz = gen(Generator::J(2));
    // ε_{z x y} = +1: [J_z, A_x] = iħA_y, [J_z, A_y] = −iħA_x.
    let eps = [(0usize, 1usize, 1.0), (1, 0, -1.0)];
    for _ in 0..10 {
        let phi = random_phase_field(&g2, &mut rng);
        for i in 0..2 {
            for j in 0..2 {
                let delta = if i == j { 1.0 } else { 0.0 };
                worst_2d = worst_2d.max(commutator_residual(&ps[i], &qs[j], -ihbar(hbar) * delta, None, &phi));
            }
        }
        worst_2d = worst_2d.max(commutator_residual(&ps[0], &ps[1], zero, None, &phi));
        worst_2d = worst_2d.max(commutator_residual(&qs[0], &qs[1], zero, None, &phi));
        for &(a, b, s) in &eps {
            worst_2d = worst_2d.max(commutator_residual(&jz, &qs[a], ihbar(hbar) * s, Some(&qs[b]), &phi));
            worst_2d = worst_2d.max(commutator_residual(&jz, &ps[a], ihbar(hbar) * s, Some(&ps[b]), &phi));
        }
    }
    outcome(&[("table_1d_256²", worst_1d, 1e-8), ("table_2d_32⁴", worst_2d, 1e-8)])
}

/// Two ħ-width packets with random centres (|c| ≤ 3) and carriers (|k| ≤ 0.5).
fn coherent_mixture<R: Rng>(grid: PhaseGrid, rng: &mut R) -> PhaseField {
    let mut u = || 2.0 * rng.random::<f64>() - 1.0;
    let packets: Vec<[f64; 6]> = (0..2).map(|_| [3.0 * u(), 3.0 * u(), 0.5 * u(), 0.5 * u(), u(), u()]).collect();
    let hbar = grid.hbar();
    PhaseField::from_fn(grid, Role::State, |p, q| {
        packets
            .iter()
            .map(|c| {
                let r2 = (p[0] - c[0]).powi(2) + (q[0] - c[1]).powi(2);
                Complex64::new(c[4], c[5]) * Complex64::from_polar((-r2 / (4.0 * hbar)).exp(), c[2] * p[0] + c[3] * q[0])
            })
            .sum()
    })
    .normalized()
}

fn criterion_2() -> Outcome {
    let hbar = 1.0;
    let mut rng = seeded_rng(SEED + 2);
    // one dimension: random coherent mixtures for P*, Q*, X_q and the
    // involution. Fields with carriers near the grid Nyquist frequency are
    // not admissible here: the transform mixes p and q, so their image is
    // no longer resolved on the same grid.
    let grid = self_dual_grid(1, 128, 0.5, hbar).unwrap();
    let ks = SymplecticTransform::fundamental(&grid).unwrap();
    let k = |f: &PhaseField| ks.apply(f).unwrap();
    let xq = KoopmanGenerator::new(&Symbol::q(1, 0), &grid).unwrap();
    let (mut inv, mut gens, mut anti): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10 {
        let phi = coherent_mixture(grid, &mut rng);
        inv = inv.max(k(&k(&phi)).distance(&phi).unwrap());
        for g in [Generator::P(0), Generator::Q(0)] {
            let lhs = k(&prequantum_apply(g, &k(&phi)).unwrap());
            gens = gens.max(lhs.distance(&prequantum_apply(g, &phi).unwrap()).unwrap());
        }
        let lhs = k(&xq.apply(&k(&phi)).unwrap());
        anti = anti.max(lhs.add(&xq.apply(&phi).unwrap()).unwrap().norm());
    }
    // two dimensions for J*_z. The gauge chirp of the fundamental transform
    // reaches the position Nyquist frequency at the momentum edge, leaving an
    // aliasing floor ~exp(−πn/8); n = 52 puts it near 1e−9. The field is an
    // origin-centred Gaussian times a random linear polynomial.
    let grid = self_dual_grid(2, 52, 0.5, hbar).unwrap();
    let ks2 = SymplecticTransform::fundamental(&grid).unwrap();
    let c = [
        Complex64::new(0.3, 0.1),
        Complex64::new(-0.2, 0.4),
        Complex64::new(0.1, -0.3),
        Complex64::new(0.25, 0.2),
        Complex64::new(0.0, 0.0),
    ];
    let phi = PhaseField::from_fn(grid, Role::State, |p, q| {
        let r2 = p[0] * p[0] + p[1] * p[1] + q[0] * q[0] + q[1] * q[1];
        (c[0] * p[0] + c[1] * p[1] + c[2] * q[0] + c[3] * q[1] + c[4] + 1.0) * (-r2 / (4.0 * hbar)).exp()
    })
    .normalized();
    let kphi = ks2.apply(&phi).unwrap();
    inv = inv.max(ks2.apply(&kphi).unwrap().distance(&phi).unwrap());
    let lhs = ks2.apply(&prequantum_apply(Generator::J(2), &kphi).unwrap()).unwrap();
    let jz = lhs.distance(&prequantum_apply(Generator::J(2), &phi).unwrap()).unwrap();
    outcome(&[
        ("K_S²−1", inv, 1e-8),
        ("K_S{P*,Q*}K_S−{P*,Q*}", gens, 1e-7),
        ("K_S J*_z K_S − J*_z", jz, 1e-7),
        ("K_S X_q K_S + X_q", anti, 1e-7),
    ])
}

/// Hermite function `ψ_n(t)` by the three-term recurrence, written out
/// independently of the library.
fn hermite_oracle(n: usize, t: f64) -> f64 {
    let mut h0 = PI.powf(-0.25) * (-0.5 * t * t).exp();
    if n == 0 {
        return h0;
    }
    let mut h1 = 2f64.sqrt() * t * h0;
    for k in 1..n {
        let h2 = (2.0 / (k as f64 + 1.0)).sqrt() * t * h1 - (k as f64 / (k as f64 + 1.0)).sqrt() * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn criterion_3() -> Outcome {
    let hbar = 1.0;
    let lam = 0.25;
    // reduced orthonormality h ∫ Φ_n* Φ_m = δ_nm
    let mut ortho: f64 = 0.0;
    let windows: Vec<_> =
        (0..=8).map(|n| build_window(WindowFamily::Hermite1d { n }, lam, hbar).unwrap()).collect();
    for a in &windows {
        for b in &windows {
            let v = a.reduced_inner(b).unwrap();
            let want = if a.family() == b.family() { 1.0 } else { 0.0 };
            ortho = ortho.max((v - want).norm());
        }
    }
    // window samples against the oracle Hermite functions
    let h = 2.0 * PI * hbar;
    let mut shape: f64 = 0.0;
    for (n, w) in windows.iter().enumerate() {
        for k in -40..=40 {
            let u = k as f64 * 0.05;
            let want = hermite_oracle(n, u / lam) / (h * lam).sqrt();
            shape = shape.max((w.eval(&[u]).re - want).abs());
        }
    }
    let xg = XGrid::balanced(1, 128, lam, hbar).unwrap();
    let mut rng = seeded_rng(SEED + 3);
    let (mut iso, mut idem, mut cp, mut cq): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for w in [&windows[0], &windows[3]] {
        let frame = FrameMaps::new(w, &xg, 64).unwrap();
        let proj = |f: &PhaseField| frame.project(f).unwrap();
        for _ in 0..5 {
            let psi = random_x_state(&xg, &mut rng);
            iso = iso.max(frame.synthesize(&frame.analyze(&psi).unwrap()).unwrap().distance(&psi).unwrap());
            let phi = random_phase_field(frame.phase_grid(), &mut rng);
            let once = proj(&phi);
            idem = idem.max(proj(&once).distance(&once).unwrap());
            for (g, slot) in [(Generator::P(0), &mut cp), (Generator::Q(0), &mut cq)] {
                let a = prequantum_apply(g, &proj(&phi)).unwrap();
                let b = proj(&prequantum_apply(g, &phi).unwrap());
                *slot = slot.max(a.distance(&b).unwrap());
            }
        }
    }
    outcome(&[
        ("hermite_ortho", ortho, 1e-9),
        ("hermite_shape", shape, 1e-9),
        ("W_isometry", iso, 1e-8),
        ("Π²−Π", idem, 1e-8),
        ("[P*,Π]", cp, 1e-7),
        ("[Q*,Π]", cq, 1e-7),
    ])
}

fn criterion_4() -> Outcome {
    let hbar = 1.0;
    let lam = 0.25;
    let xg = XGrid::balanced(1, 256, lam, hbar).unwrap();
    let mut rng = seeded_rng(SEED + 4);
    let (mut ep, mut eq): (f64, f64) = (0.0, 0.0);
    for n in [0usize, 2] {
        let w = build_window(WindowFamily::Hermite1d { n }, lam, hbar).unwrap();
        let frame = FrameMaps::new(&w, &xg, 128).unwrap();
        let qp = quantize_grid_route(&Symbol::p(1, 0), &frame).unwrap();
        let qq = quantize_grid_route(&Symbol::q(1, 0), &frame).unwrap();
        for _ in 0..5 {
            let psi = random_x_state(&xg, &mut rng);
            // −iħ∂ and x written directly from the spectrum and the grid
            let dpsi = momentum_apply(&psi, 0);
            let xpsi = position_apply(&psi, 0);
            ep = ep.max(qp.apply(&psi).unwrap().distance(&dpsi).unwrap());
            eq = eq.max(qq.apply(&psi).unwrap().distance(&xpsi).unwrap());
        }
    }
    outcome(&[("ΠpΠ − P", ep, 1e-7), ("ΠqΠ − x", eq, 1e-7)])
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn criterion_5() -> Outcome {
    let (hbar, mass, omega, lam) = (1.0, 2.0, 3.0, 0.25);
    let w = build_window(WindowFamily::Hermite1d { n: 0 }, lam, hbar).unwrap();
    let c = energy_constants(&w, mass, omega).unwrap();
    let e0_exact = hbar * hbar / (4.0 * mass * lam * lam);
    let e1_exact = mass * omega * omega * lam * lam / 4.0;

    let xg = XGrid::balanced(1, 256, lam, hbar).unwrap();
    let frame = FrameMaps::new(&w, &xg, 128).unwrap();
    let p2 = Polynomial::p(1, 0).mul(&Polynomial::p(1, 0)).scale(0.5 / mass);
    let q2 = Polynomial::q(1, 0).mul(&Polynomial::q(1, 0)).scale(0.5 * mass * omega * omega);
    let kin = quantize_grid_route(&Symbol::polynomial(p2), &frame).unwrap();
    let pot = quantize_grid_route(&Symbol::polynomial(q2), &frame).unwrap();
    let plain_kin = QuantizedOperator::kinetic(xg, mass);
    let x2 = xg.sample_real(|x| 0.5 * mass * omega * omega * x[0] * x[0]);
    let plain_pot = QuantizedOperator::multiplication(xg, x2, "x²").unwrap();
    let mut e0_err: f64 = 0.0;
    let mut e1_err: f64 = 0.0;
    for (q0, p0) in [(0.0, 0.0), (0.4, 1.0), (-0.3, -2.0)] {
        let psi = gaussian_packet(&xg, &[q0], &[p0], 0.35);
        let e0 = (kin.expectation(&psi).unwrap() - plain_kin.expectation(&psi).unwrap()).re;
        let e1 = (pot.expectation(&psi).unwrap() - plain_pot.expectation(&psi).unwrap()).re;
        e0_err = e0_err.max((e0 - c.e0).abs() / c.e0).max((e0 - e0_exact).abs() / e0_exact);
        e1_err = e1_err.max((e1 - c.e1).abs() / c.e1).max((e1 - e1_exact).abs() / e1_exact);
    }

    // radial oracle: Ψ₀ = N e^{−u²/2} with ∫u²Ψ₀² = 1, i.e. N² = 4/√π
    let n2 = 4.0 / PI.sqrt();
    let chi2_oracle = |s: f64| {
        simpson(
            |u| {
                let d = (1.0 - u * u) * (-0.5 * u * u).exp();
                n2 * (d * d + s * (s + 1.0) * (-u * u).exp())
            },
            0.0,
            14.0,
            40_000,
        )
    };
    let mut chi_err: f64 = 0.0;
    for (s, paper) in [(0usize, 1.5), (1, 5.5)] {
        let win = build_window(WindowFamily::Radial3d { s, m: 0 }, lam, hbar).unwrap();
        let lib = energy_constants(&win, mass, omega).unwrap().chi2;
        let oracle = chi2_oracle(s as f64);
        chi_err = chi_err.max((lib - oracle).abs()).max((oracle - paper).abs());
    }
    outcome(&[("E₀_rel", e0_err, 1e-6), ("E₁_rel", e1_err, 1e-6), ("χ²(S=0,1)", chi_err, 1e-8)])
}

fn criterion_6() -> Outcome {
    let (hbar, mass, omega) = (1.0, 1.0, 1.0);
    let n = 512;
    let ext = 10.0;
    let dx = 2.0 * ext / n as f64;
    let lam = dx / (2.0 * PI / n as f64).sqrt();
    let xg = XGrid::new(1, Interval::symmetric(ext), n, hbar).unwrap();
    let w = build_window(WindowFamily::Hermite1d { n: 0 }, lam, hbar).unwrap();
    let frame = FrameMaps::new(&w, &xg, 128).unwrap();
    let (h, _) = harmonic_hamiltonian(&frame, mass, omega).unwrap();
    let ev = hermitian_eigenvalues(&h.to_dense().unwrap());
    let e0 = hbar * hbar / (4.0 * mass * lam * lam);
    let e1 = mass * omega * omega * lam * lam / 4.0;
    let worst = (0..=10)
        .map(|k| {
            let want = hbar * omega * (k as f64 + 0.5) + e0 + e1;
            ((ev[k] - want) / want).abs()
        })
        .fold(0.0, f64::max);
    outcome(&[("levels_0..10_rel", worst, 1e-6)])
}

fn criterion_7() -> Outcome {
    let hbar = 1.0;
    let h = 2.0 * PI * hbar;
    let lam = 0.25;
    let xg = XGrid::balanced(1, 256, lam, hbar).unwrap();
    let mut norm_err: f64 = 0.0;
    let mut trace_err: f64 = 0.0;
    for n in [0usize, 1, 4] {
        let w = build_window(WindowFamily::Hermite1d { n }, lam, hbar).unwrap();
        let frame = FrameMaps::new(&w, &xg, 128).unwrap();
        for (p, q) in [(0.0, 0.0), (3.0, -1.0), (-5.0, 2.0)] {
            let xi = coherent_state(&frame, &[p], &[q]).unwrap();
            norm_err = norm_err.max((xi.norm_sq() - 1.0 / h).abs() * h);
        }
        // boxes with edges on cell boundaries: area = cells × ΔpΔq exactly
        let g = frame.phase_grid();
        let (dp, dq) = (g.dp(), g.dq());
        for (np, nq) in [(8usize, 6usize), (20, 12), (40, 30)] {
            let (p_lo, p_hi) = (-(np as f64) * dp / 2.0, np as f64 * dp / 2.0);
            let (q_lo, q_hi) = (-(nq as f64) * dq / 2.0, nq as f64 * dq / 2.0);
            let (p_lo, p_hi) = (p_lo - 0.5 * dp, p_hi - 0.5 * dp);
            let (q_lo, q_hi) = (q_lo - 0.5 * dq, q_hi - 0.5 * dq);
            let region = Region::boxed(vec![p_lo], vec![p_hi], vec![q_lo], vec![q_hi]);
            let volume = (p_hi - p_lo) * (q_hi - q_lo);
            let tr = quasi_projector_trace(&frame, &region).unwrap();
            trace_err = trace_err.max((tr - volume / h).abs() / (volume / h));
        }
    }
    outcome(&[("h‖ξ‖²−1", norm_err, 1e-8), ("TrΠ(A)·h/V−1", trace_err, 1e-6)])
}

fn criterion_8() -> Outcome {
    let hbar = 1.0;
    let lam = 0.25;
    let xg = XGrid::balanced(2, 48, lam, hbar).unwrap();
    let mut rng = seeded_rng(SEED + 8);
    let states: Vec<XState> = (0..3).map(|_| random_x_state(&xg, &mut rng)).collect();
    let lz = QuantizedOperator::angular_momentum_z(xg).unwrap();
    let mut worst = [0.0f64; 3];
    for (slot, m) in [0i32, 1, -1].into_iter().enumerate() {
        let w = build_window(WindowFamily::Planar2d { m }, lam, hbar).unwrap();
        let frame = FrameMaps::new(&w, &xg, 48).unwrap();
        let rep = angular_spin_operators(&frame).unwrap();
        for psi in &states {
            // Π(q∧p)_zΠ ψ against (L_z − mħ)ψ
            let lhs = rep.projected_orbital.apply(psi).unwrap();
            let rhs = lz.apply(psi).unwrap().combine(ONE, psi, Complex64::new(-(m as f64) * hbar, 0.0)).unwrap();
            worst[slot] = worst[slot].max(lhs.distance(&rhs).unwrap());
        }
    }
    outcome(&[("m=0", worst[0], 1e-6), ("m=+1", worst[1], 1e-6), ("m=−1", worst[2], 1e-6)])
}

fn criterion_9() -> Outcome {
    let hbar = 1.0;
    let lam = 0.25;
    let mut coef: f64 = 0.0;
    let mut mismatches = 0.0;
    let mut remainder: f64 = 0.0;
    let mut check = |family: WindowFamily, xg: &XGrid, n_p: usize, parity: f64, partner: WindowFamily, kt: f64| {
        let w = build_window(family, lam, hbar).unwrap();
        let frame = FrameMaps::new(&w, xg, n_p).unwrap();
        let s = discrete_symmetry_signs(&frame).unwrap();
        if s.time_reversal_partner != partner {
            mismatches += 1.0;
        }
        for (reading, want) in [(s.parity, parity), (s.symplectic, parity), (s.time_reversal, kt)] {
            let err = (reading.coefficient - want).norm();
            if err > 0.5 {
                mismatches += 1.0;
            }
            coef = coef.max(err);
            remainder = remainder.max(reading.residual);
        }
    };
    let x1 = XGrid::balanced(1, 256, lam, hbar).unwrap();
    for n in [0usize, 1] {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        check(WindowFamily::Hermite1d { n }, &x1, 256, sign, WindowFamily::Hermite1d { n }, 1.0);
    }
    let x2 = XGrid::balanced(2, 48, lam, hbar).unwrap();
    for m in [0i32, 1, -1] {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        check(WindowFamily::Planar2d { m }, &x2, 48, sign, WindowFamily::Planar2d { m: -m }, sign);
    }
    let mut o = outcome(&[("sign_mismatches", mismatches, 0.0), ("coefficient", coef, 1e-7)]);
    o.detail.push_str(&format!(", remainder={remainder:.2e}"));
    o
}

fn criterion_10() -> Outcome {
    let (hbar, mass) = (1.0, 1.0);
    let xg = XGrid::new(1, Interval::symmetric(10.0), 128, hbar).unwrap();
    let w = build_window(WindowFamily::Hermite1d { n: 0 }, 1.0, hbar).unwrap();
    let frame = FrameMaps::new(&w, &xg, 128).unwrap();

    // quartic V = q⁴/4
    let (hq, _, _) = potential_hamiltonian(&frame, mass, |x: &[f64]| 0.25 * x[0].powi(4)).unwrap();
    let psi = gaussian_packet(&xg, &[1.0], &[0.0], 0.5);
    let cfg = EvolutionConfig { t_final: 4.0, steps: 8000, record_every: 1, integrator: Integrator::Yoshida4, husimi_stride: 1 };
    let rec = run_evolution(&psi, &hq, &Symbol::quartic(1, mass, 1.0), &frame, &cfg).unwrap();
    let weak = weak_equation_residuals(&rec).unwrap().max();
    let liouville_min = rec.liouville_residual.iter().copied().fold(f64::INFINITY, f64::min);

    // harmonic over one period against the closed-form ellipse
    let omega = 1.0;
    let period = 2.0 * PI / omega;
    let (hh, _) = harmonic_hamiltonian(&frame, mass, omega).unwrap();
    let (q0, p0) = (2.0, 0.5);
    let psi = gaussian_packet(&xg, &[q0], &[p0], 0.7);
    let cfg = EvolutionConfig { t_final: period, steps: 2000, record_every: 1, integrator: Integrator::Yoshida4, husimi_stride: 1 };
    let cmp = compare_classical_quantum(&psi, &hh, &Symbol::harmonic(1, mass, omega), &frame, &cfg).unwrap();
    let mut ellipse: f64 = 0.0;
    for (k, &t) in cmp.quantum.times.iter().enumerate() {
        let q = q0 * (omega * t).cos() + p0 / (mass * omega) * (omega * t).sin();
        let p = p0 * (omega * t).cos() - mass * omega * q0 * (omega * t).sin();
        for rec in [&cmp.quantum, &cmp.classical] {
            ellipse = ellipse.max((rec.q_mean[k][0] - q).abs()).max((rec.p_mean[k][0] - p).abs());
        }
    }
    let mut o = outcome(&[
        ("quartic_weak", weak, 1e-4),
        ("1/quartic_liouville_min", 1.0 / liouville_min, 10.0),
        ("harmonic_gap", cmp.max_expectation_gap(), 1e-6),
        ("harmonic_vs_ellipse", ellipse, 1e-6),
    ]);
    o.detail.push_str(&format!(", quartic_liouville_min={liouville_min:.3}"));
    o
}

fn criterion_11() -> Outcome {
    let hbar = 1.0;
    let grid: PhaseGrid = make_grid(1, Interval::symmetric(8.0), Interval::symmetric(8.0), 128, 128, hbar).unwrap();
    let (p, q) = (Polynomial::p(1, 0), Polynomial::q(1, 0));
    let pairs = [
        (q.clone(), p.clone()),
        (p.mul(&p).scale(0.5), q.mul(&q).scale(0.5)),
        (q.mul(&q).mul(&q), p.clone()),
        (p.mul(&q), p.mul(&p)),
        (q.mul(&q).mul(&p), q.mul(&p).mul(&p).add(&q)),
    ];
    let mut rng = seeded_rng(SEED + 11);
    let states: Vec<PhaseField> = (0..3).map(|_| random_phase_field(&grid, &mut rng)).collect();
    let mut worst: f64 = 0.0;
    for (f, g) in &pairs {
        let (sf, sg) = (Symbol::polynomial(f.clone()), Symbol::polynomial(g.clone()));
        // the bracket polynomial is computed here by hand-rolled derivatives
        let fg = f.derivative(0).mul(&g.derivative(1)).sub(&g.derivative(0).mul(&f.derivative(1)));
        let lib = poisson_bracket(&sf, &sg).unwrap();
        let xf = KoopmanGenerator::new(&sf, &grid).unwrap();
        let xg = KoopmanGenerator::new(&sg, &grid).unwrap();
        let xfg = KoopmanGenerator::new(&Symbol::polynomial(fg), &grid).unwrap();
        let xlib = KoopmanGenerator::new(&lib, &grid).unwrap();
        for phi in &states {
            let a = xf.apply(&xg.apply(phi).unwrap()).unwrap();
            let b = xg.apply(&xf.apply(phi).unwrap()).unwrap();
            let lhs = a.sub(&b).unwrap().scaled(Complex64::new(0.0, 1.0));
            let rhs = xfg.apply(phi).unwrap();
            let scale = rhs.norm().max(phi.norm());
            worst = worst.max(lhs.distance(&rhs).unwrap() / scale);
            worst = worst.max(xlib.apply(phi).unwrap().distance(&rhs).unwrap() / scale);
        }
    }
    outcome(&[("i[X_f,X_g]−X_{f,g}", worst, 1e-6)])
}

// ---------------------------------------------------------------------------
// criterion 12: byte-identical CLI outputs

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_phasequant")).args(args).output().expect("cli runs")
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn criterion_12() -> Outcome {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance_determinism");
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).unwrap();
    let config = root.join("scenario.toml");
    std::fs::write(
        &config,
        "[grid]\ndim = 1\nextent = [-10.0, 10.0]\npoints = 128\nhbar = 1.0\n\n\
         [window]\nfamily = \"hermite\"\nlambda = 1.0\nindex = 0\nmomentum_points = 128\n\n\
         [hamiltonian]\nkind = \"harmonic\"\nmass = 1.0\nomega = 1.0\n\n\
         [run]\nt_final = 6.283185307179586\nsteps = 400\nseed = 7\n[run.initial]\nq0 = [1.5]\np0 = [0.5]\nsigma = 0.7\n\n\
         [verify]\nsuites = [\"commutators\", \"isometries\", \"energy\"]\n",
    )
    .unwrap();
    let mut differing = 0.0;
    let mut failures = 0.0;
    for cmd in ["verify", "evolve"] {
        let outs: Vec<PathBuf> = (0..2).map(|k| root.join(format!("{cmd}_{k}"))).collect();
        for out in &outs {
            let o = run_cli(&[cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "11"]);
            if !o.status.success() {
                failures += 1.0;
                eprintln!("{cmd} failed: {}", String::from_utf8_lossy(&o.stderr));
            }
        }
        let (a, b) = (files_in(&outs[0]), files_in(&outs[1]));
        if a.is_empty() || a != b {
            differing += 1.0;
        }
    }
    outcome(&[("failed_runs", failures, 0.0), ("differing_outputs", differing, 0.0)])
}

/// Runs without the libtest harness so the report is never captured.
fn main() {
    type Criterion = (usize, fn() -> Outcome, Duration);
    let s = Duration::from_secs;
    let criteria: [Criterion; 12] = [
        (1, criterion_1, s(30)),
        (2, criterion_2, s(10)),
        (3, criterion_3, s(20)),
        (4, criterion_4, s(10)),
        (5, criterion_5, s(10)),
        (6, criterion_6, s(30)),
        (7, criterion_7, s(10)),
        (8, criterion_8, s(60)),
        (9, criterion_9, s(10)),
        (10, criterion_10, s(120)),
        (11, criterion_11, s(10)),
        (12, criterion_12, s(120)),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = Vec::new();
    for (id, run, budget) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let elapsed = t.elapsed();
        let pass = o.pass && elapsed <= budget;
        println!(
            "criterion {id:>2}: {} [{:.1}s ≤ {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
