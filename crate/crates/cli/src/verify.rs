//! Invariant suites behind `phasequant verify`.
//!
//! Each check reports a measured residual against a tolerance. Randomized
//! suites draw from a generator seeded per suite, so filtering suites never
//! changes the numbers of the ones that remain.

use phasequant::galileo_rep::{parity, prequantum_apply, self_dual_grid, time_reversal, Generator, SymplecticTransform};
use phasequant::irrep::{coherent_state, discrete_symmetry_signs};
use phasequant::koopman::{poisson_bracket, KoopmanGenerator};
use phasequant::phase_grid::{PhaseField, PhaseGrid};
use phasequant::qdynamics::{run_evolution, weak_equation_residuals};
use phasequant::quantize::{quantize_grid_route, QuantizedOperator};
use phasequant::states::{gaussian_packet, random_coherent_field, random_phase_field, random_phase_field_within, random_x_state, seeded_rng, StateRng};
use phasequant::symbol::{Polynomial, Symbol};
use phasequant::Complex64;
use serde::Serialize;

use crate::config::Tolerances;
use crate::error::CliError;
use crate::scenario::{evolution_config, Scenario};

pub const SUITES: [&str; 6] = ["commutators", "involutions", "isometries", "signs", "energy", "weak"];

/// Suites that draw random states and therefore need a seed.
const RANDOMIZED: [&str; 3] = ["commutators", "involutions", "isometries"];

/// Self-dual grid sizes of the involution suite. The gauge chirp of the
/// transform reaches the position Nyquist frequency at the momentum edge,
/// so the aliasing floor falls like `exp(−πn/8)`.
const SELF_DUAL_1D: usize = 128;
const SELF_DUAL_2D: usize = 52;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

/// Expands aliases (`all`, `galileo`) and returns the suites in canonical
/// order without duplicates.
pub fn resolve_suites(requested: &[String]) -> Result<Vec<&'static str>, CliError> {
    let mut want = [false; SUITES.len()];
    for r in requested {
        match r.as_str() {
            "all" => want = [true; SUITES.len()],
            "galileo" => {
                want[0] = true;
                want[1] = true;
            }
            name => match SUITES.iter().position(|s| *s == name) {
                Some(k) => want[k] = true,
                None => {
                    return Err(CliError::Config(format!(
                        "unknown suite `{name}`; expected one of {SUITES:?}, `galileo` or `all`"
                    )))
                }
            },
        }
    }
    Ok(SUITES.iter().zip(want).filter(|(_, w)| *w).map(|(s, _)| *s).collect())
}

pub fn needs_seed(suites: &[&str]) -> bool {
    suites.iter().any(|s| RANDOMIZED.contains(s))
}

struct Collector {
    checks: Vec<Check>,
    overridden: Option<f64>,
}

impl Collector {
    fn new(overridden: Option<f64>) -> Self {
        Self { checks: Vec::new(), overridden }
    }

    fn push(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        let tolerance = self.overridden.unwrap_or(tolerance);
        let pass = residual.is_finite() && residual <= tolerance;
        self.checks.push(Check { name: name.into(), residual, tolerance, pass });
    }
}

pub fn run_suites(sc: &Scenario, suites: &[&str], seed: Option<u64>) -> Result<Vec<SuiteReport>, CliError> {
    let verify = sc.config.verify.clone().unwrap_or_else(|| crate::config::VerifySection {
        suites: None,
        states: 5,
        seed: None,
        tolerances: Tolerances::default(),
    });
    let tol = &verify.tolerances;
    let mut out = Vec::new();
    for &name in suites {
        let index = SUITES.iter().position(|s| *s == name).expect("resolved suite") as u64;
        let rng = || -> Result<StateRng, CliError> {
            let s = seed.ok_or_else(|| CliError::Config(format!("suite `{name}` draws random states and needs a seed")))?;
            Ok(seeded_rng(s.wrapping_add(1_000 * index)))
        };
        let n = verify.states;
        let checks = match name {
            "commutators" => commutators(sc, &mut rng()?, n, Collector::new(tol.commutators))?,
            "involutions" => involutions(sc, &mut rng()?, n, Collector::new(tol.involutions))?,
            "isometries" => isometries(sc, &mut rng()?, n, Collector::new(tol.isometries))?,
            "signs" => signs(sc, Collector::new(tol.signs))?,
            "energy" => energy(sc, Collector::new(tol.energy))?,
            "weak" => weak(sc, seed, Collector::new(tol.weak))?,
            _ => unreachable!("resolved suite"),
        };
        let pass = checks.iter().all(|c| c.pass);
        out.push(SuiteReport { name: name.into(), pass, checks });
    }
    Ok(out)
}

fn apply(g: Generator, phi: &PhaseField) -> Result<PhaseField, CliError> {
    prequantum_apply(g, phi).map_err(CliError::runtime)
}

fn rt<T>(r: phasequant::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::runtime)
}

/// `‖([A,B] − c·C)φ‖ / ‖φ‖`, with `C = 1` when `rhs` is absent.
fn commutator_residual(
    a: Generator,
    b: Generator,
    c: Complex64,
    rhs: Option<Generator>,
    phi: &PhaseField,
) -> Result<f64, CliError> {
    let comm = rt(apply(a, &apply(b, phi)?)?.sub(&apply(b, &apply(a, phi)?)?))?;
    let target = match rhs {
        Some(r) => apply(r, phi)?,
        None => phi.clone(),
    };
    Ok(rt(comm.combine(Complex64::new(1.0, 0.0), &target, -c))?.norm() / phi.norm())
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn commutators(sc: &Scenario, rng: &mut StateRng, states: usize, mut c: Collector) -> Result<Vec<Check>, CliError> {
    use Generator::{J, P, Q};
    let grid = *sc.frame.phase_grid();
    let d = grid.dim();
    let ih = Complex64::new(0.0, grid.hbar());
    let zero = Complex64::new(0.0, 0.0);
    let fields: Vec<PhaseField> = (0..states).map(|_| random_phase_field(&grid, rng)).collect();
    let (mut pq, mut pp, mut qq, mut jq, mut jp): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    // axial components available in this dimension and their in-plane axes
    let axial: Vec<usize> = match d {
        2 => vec![2],
        3 => vec![0, 1, 2],
        _ => vec![],
    };
    for phi in &fields {
        for i in 0..d {
            for j in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                pq = pq.max(commutator_residual(P(i), Q(j), -ih * delta, None, phi)?);
                if i < j {
                    pp = pp.max(commutator_residual(P(i), P(j), zero, None, phi)?);
                    qq = qq.max(commutator_residual(Q(i), Q(j), zero, None, phi)?);
                }
            }
        }
        for &k in &axial {
            for a in 0..d.min(3) {
                // [J_k, A_a] = iħ ε_{kab} A_b; in two dimensions k = z and a, b ∈ {x, y}
                let b = (0..d).find(|&b| levi_civita(k, a, b) != 0.0);
                let (coef, rb) = match b {
                    Some(b) => (ih * levi_civita(k, a, b), Some(b)),
                    None => (zero, None),
                };
                jq = jq.max(commutator_residual(J(k), Q(a), coef, rb.map(Q), phi)?);
                jp = jp.max(commutator_residual(J(k), P(a), coef, rb.map(P), phi)?);
            }
        }
    }
    c.push("[P*_i,Q*_j] = -iħδ_ij", pq, 1e-8);
    if d > 1 {
        c.push("[P*_i,P*_j] = 0", pp, 1e-8);
        c.push("[Q*_i,Q*_j] = 0", qq, 1e-8);
        c.push("[J*_k,Q*_a] = iħε_kab Q*_b", jq, 1e-8);
        c.push("[J*_k,P*_a] = iħε_kab P*_b", jp, 1e-8);
    }
    if sc.config.hamiltonian.is_some() {
        let hs = sc.hamiltonian()?.symbol;
        let xh = rt(KoopmanGenerator::new(&hs, &grid))?;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for g in [Symbol::p(d, i), Symbol::q(d, i)] {
                let xg = rt(KoopmanGenerator::new(&g, &grid))?;
                let xb = rt(KoopmanGenerator::new(&rt(poisson_bracket(&hs, &g))?, &grid))?;
                for phi in &fields {
                    let a = rt(xh.apply(&rt(xg.apply(phi))?))?;
                    let b = rt(xg.apply(&rt(xh.apply(phi))?))?;
                    let lhs = rt(a.sub(&b))?.scaled(Complex64::new(0.0, 1.0));
                    let rhs = rt(xb.apply(phi))?;
                    worst = worst.max(rt(lhs.distance(&rhs))? / rhs.norm().max(phi.norm()));
                }
            }
        }
        c.push("i[X_H,X_g] = X_{H,g} (g = p_i, q_i)", worst, 1e-6);
    }
    Ok(c.checks)
}

fn involution_checks(grid: &PhaseGrid, fields: &[PhaseField], c: &mut Collector, tag: &str) -> Result<(), CliError> {
    use Generator::{J, P, Q};
    let d = grid.dim();
    let ks = rt(SymplecticTransform::fundamental(grid))?;
    let k = |f: &PhaseField| rt(ks.apply(f));
    let (mut sq, mut par, mut tr, mut inv, mut jz, mut anti): (f64, f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let xq = rt(KoopmanGenerator::new(&Symbol::q(d, 0), grid))?;
    for phi in fields {
        let kphi = k(phi)?;
        sq = sq.max(rt(k(&kphi)?.distance(phi))?);
        par = par.max(rt(rt(parity(&rt(parity(phi))?))?.distance(phi))?);
        tr = tr.max(rt(rt(time_reversal(&rt(time_reversal(phi))?))?.distance(phi))?);
        for i in 0..d {
            for g in [P(i), Q(i)] {
                inv = inv.max(rt(k(&apply(g, &kphi)?)?.distance(&apply(g, phi)?))?);
            }
        }
        if d == 2 {
            jz = jz.max(rt(k(&apply(J(2), &kphi)?)?.distance(&apply(J(2), phi)?))?);
        }
        let lhs = k(&rt(xq.apply(&kphi))?)?;
        anti = anti.max(rt(lhs.add(&rt(xq.apply(phi))?))?.norm());
    }
    c.push(format!("{tag} K_S² = 1"), sq, 1e-8);
    c.push(format!("{tag} K_P² = 1"), par, 1e-8);
    c.push(format!("{tag} K_T² = 1"), tr, 1e-8);
    c.push(format!("{tag} K_S P*,Q* K_S = P*,Q*"), inv, 1e-7);
    if d == 2 {
        c.push(format!("{tag} K_S J*_z K_S = J*_z"), jz, 1e-7);
    }
    c.push(format!("{tag} K_S X_q K_S = -X_q"), anti, 1e-7);
    Ok(())
}

fn involutions(sc: &Scenario, rng: &mut StateRng, states: usize, mut c: Collector) -> Result<Vec<Check>, CliError> {
    let hbar = sc.xgrid.hbar();
    let g1 = rt(self_dual_grid(1, SELF_DUAL_1D, 0.5, hbar))?;
    let fields: Vec<PhaseField> = (0..states).map(|_| random_coherent_field(&g1, rng)).collect();
    involution_checks(&g1, &fields, &mut c, "1d")?;
    if sc.dim() >= 2 {
        let g2 = rt(self_dual_grid(2, SELF_DUAL_2D, 0.5, hbar))?;
        let fields: Vec<PhaseField> = (0..states.min(2)).map(|_| random_coherent_field(&g2, rng)).collect();
        involution_checks(&g2, &fields, &mut c, "2d")?;
    }
    Ok(c.checks)
}

fn isometries(sc: &Scenario, rng: &mut StateRng, states: usize, mut c: Collector) -> Result<Vec<Check>, CliError> {
    let frame = &sc.frame;
    let grid = *frame.phase_grid();
    let d = grid.dim();
    let (mut iso, mut idem, mut comm): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..states {
        let psi = random_x_state(&sc.xgrid, rng);
        iso = iso.max(rt(rt(frame.synthesize(&rt(frame.analyze(&psi))?))?.distance(&psi))?);
        // Π smears over a window width in q; position tails stay 4λ inside
        // the box so its image does not reach the periodic seam
        let phi = random_phase_field_within(&grid, 4.0 * sc.window.lambda(), rng);
        let once = rt(frame.project(&phi))?;
        idem = idem.max(rt(rt(frame.project(&once))?.distance(&once))?);
        for i in 0..d {
            for g in [Generator::P(i), Generator::Q(i)] {
                let a = apply(g, &once)?;
                let b = rt(frame.project(&apply(g, &phi)?))?;
                comm = comm.max(rt(a.distance(&b))?);
            }
        }
    }
    c.push("W†W = 1", iso, 1e-8);
    c.push("Π² = Π", idem, 1e-8);
    c.push("[P*,Π] = [Q*,Π] = 0", comm, 1e-7);
    let h_d = grid.h().powi(d as i32);
    let lam = sc.window.lambda();
    let hbar = grid.hbar();
    let mut cs: f64 = 0.0;
    for (p, q) in [(0.0, 0.0), (0.5 * hbar / lam, lam), (-hbar / lam, -0.5 * lam)] {
        let xi = rt(coherent_state(frame, &vec![p; d], &vec![q; d]))?;
        cs = cs.max((xi.norm_sq() * h_d - 1.0).abs());
    }
    c.push("h^d ‖ξ_pq‖² = 1", cs, 1e-8);
    c.push("window reduced norm = 1", (sc.window.reduced_norm() - 1.0).abs(), 1e-9);
    Ok(c.checks)
}

fn signs(sc: &Scenario, mut c: Collector) -> Result<Vec<Check>, CliError> {
    let s = rt(discrete_symmetry_signs(&sc.frame))?;
    let parity_sign = sc.window.parity_sign();
    let (partner, kt) = sc.window.conjugate_partner();
    let one = |x: f64| Complex64::new(x, 0.0);
    c.push("parity coefficient", (s.parity.coefficient - one(parity_sign)).norm(), 1e-7);
    c.push("K_S coefficient", (s.symplectic.coefficient - one(parity_sign)).norm(), 1e-7);
    c.push("K_T coefficient", (s.time_reversal.coefficient - one(kt)).norm(), 1e-7);
    let mismatch = if s.time_reversal_partner == partner { 0.0 } else { 1.0 };
    c.push("K_T partner family", mismatch, 0.0);
    let rem = s.parity.residual.max(s.symplectic.residual).max(s.time_reversal.residual);
    c.push("sign remainder", rem, 1e-7);
    Ok(c.checks)
}

fn energy(sc: &Scenario, mut c: Collector) -> Result<Vec<Check>, CliError> {
    let k = sc.energy_constants()?;
    let (mass, omega) = (k.mass, k.omega);
    let d = sc.dim();
    let xg = sc.xgrid;
    let frame = &sc.frame;
    let setup = CliError::setup;
    let spring = (0..d).fold(Polynomial::zero(d), |acc, i| acc.add(&Polynomial::q(d, i).mul(&Polynomial::q(d, i))));
    let kin = quantize_grid_route(&Symbol::free(d, mass), frame).map_err(setup)?;
    let pot = quantize_grid_route(&Symbol::polynomial(spring.scale(0.5 * mass * omega * omega)), frame).map_err(setup)?;
    let plain_kin = QuantizedOperator::kinetic(xg, mass);
    let x2 = xg.sample_real(|x| 0.5 * mass * omega * omega * x.iter().map(|v| v * v).sum::<f64>());
    let plain_pot = rt(QuantizedOperator::multiplication(xg, x2, "½Mω²x²"))?;
    let lam = sc.window.lambda();
    let hbar = xg.hbar();
    let (mut e0, mut e1): (f64, f64) = (0.0, 0.0);
    for (q0, p0) in [(0.0, 0.0), (0.5 * lam, 0.5 * hbar / lam)] {
        let psi = gaussian_packet(&xg, &vec![q0; d], &vec![p0; d], 1.5 * lam);
        let de0 = rt(kin.expectation(&psi))?.re - rt(plain_kin.expectation(&psi))?.re;
        let de1 = rt(pot.expectation(&psi))?.re - rt(plain_pot.expectation(&psi))?.re;
        e0 = e0.max(((de0 - k.e0) / k.e0).abs());
        e1 = e1.max(((de1 - k.e1) / k.e1).abs());
    }
    c.push("E₀ quadrature vs grid route (relative)", e0, 1e-6);
    c.push("E₁ quadrature vs grid route (relative)", e1, 1e-6);
    Ok(c.checks)
}

fn weak(sc: &Scenario, seed: Option<u64>, mut c: Collector) -> Result<Vec<Check>, CliError> {
    let run = sc.config.run()?;
    if run.steps / run.record_every < 2 {
        return Err(CliError::Config("the weak suite needs at least three recorded samples".into()));
    }
    let h = sc.hamiltonian()?;
    let psi = sc.initial_state(run, seed)?;
    let rec = rt(run_evolution(&psi, &h.operator, &h.symbol, &sc.frame, &evolution_config(run)))?;
    let w = rt(weak_equation_residuals(&rec))?;
    c.push("norm deviation", rec.max_norm_deviation(), 1e-8);
    c.push("weak equations", w.max(), 1e-4);
    Ok(c.checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_expand_in_canonical_order() {
        let s = resolve_suites(&["energy".into(), "galileo".into(), "energy".into()]).unwrap();
        assert_eq!(s, vec!["commutators", "involutions", "energy"]);
        assert_eq!(resolve_suites(&["all".into()]).unwrap(), SUITES.to_vec());
        assert!(resolve_suites(&["galilean".into()]).is_err());
    }

    #[test]
    fn levi_civita_is_antisymmetric() {
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(levi_civita(i, j, k), -levi_civita(j, i, k));
                }
            }
        }
    }
}
