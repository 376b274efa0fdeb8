//! Turns a validated [`Config`] into grids, a frame, a Hamiltonian and an
//! initial state.

use phasequant::irrep::{build_window, FrameMaps, Window, WindowFamily, XGrid, XState};
use phasequant::phase_grid::Interval;
use phasequant::qdynamics::{EvolutionConfig, Integrator};
use phasequant::quantize::{
    energy_constants, free_hamiltonian, harmonic_hamiltonian, magnetic_hamiltonian, potential_hamiltonian,
    EnergyConstants, MagneticField, QuantizedOperator,
};
use phasequant::states::{gaussian_packet, random_x_state, seeded_rng};
use phasequant::symbol::{Polynomial, Symbol};
use serde_json::{json, Value};

use crate::config::{Config, Family, HamiltonianKind, InitialKind, IntegratorChoice, Monomial, RunSection};
use crate::error::CliError;

pub struct Scenario {
    pub config: Config,
    pub xgrid: XGrid,
    pub window: Window,
    pub frame: FrameMaps,
}

/// A quantized Hamiltonian with the classical symbol it came from.
pub struct Hamiltonian {
    pub operator: QuantizedOperator,
    pub symbol: Symbol,
    pub constants: EnergyConstants,
    /// Kind-specific extras for the JSON artifacts.
    pub metadata: Value,
}

pub fn window_family(cfg: &Config) -> WindowFamily {
    let w = &cfg.window;
    match w.family {
        Family::Hermite => WindowFamily::Hermite1d { n: w.index.unwrap_or(0) },
        Family::Planar => WindowFamily::Planar2d { m: w.m.unwrap_or(0) },
        Family::Radial => WindowFamily::Radial3d { s: w.s.unwrap_or(0), m: w.m.unwrap_or(0) },
    }
}

/// Sum of monomials; `dim` position exponents follow the momentum ones.
pub fn polynomial(dim: usize, terms: &[Monomial]) -> Polynomial {
    terms.iter().fold(Polynomial::zero(dim), |acc, t| {
        let mut e = vec![0; 2 * dim];
        if let Some(p) = &t.p {
            e[..dim].copy_from_slice(p);
        }
        if let Some(q) = &t.q {
            e[dim..].copy_from_slice(q);
        }
        acc.add(&Polynomial::monomial(dim, e, t.coef))
    })
}

/// `|p − eA|²/2M` with the symmetric gauge `A = ½ B ẑ ∧ q`.
fn magnetic_symbol(dim: usize, mass: f64, charge: f64, b: f64) -> Symbol {
    let half = 0.5 * charge * b;
    let px = Polynomial::p(dim, 0).add(&Polynomial::q(dim, 1).scale(half));
    let py = Polynomial::p(dim, 1).sub(&Polynomial::q(dim, 0).scale(half));
    let mut h = px.mul(&px).add(&py.mul(&py));
    for i in 2..dim {
        h = h.add(&Polynomial::p(dim, i).mul(&Polynomial::p(dim, i)));
    }
    Symbol::polynomial(h.scale(0.5 / mass)).labeled("magnetic")
}

impl Scenario {
    pub fn build(config: Config) -> Result<Self, CliError> {
        let g = &config.grid;
        let xgrid = XGrid::new(g.dim, Interval::new(g.extent[0], g.extent[1]), g.points, g.hbar).map_err(CliError::setup)?;
        let window = build_window(window_family(&config), config.window.lambda, g.hbar).map_err(CliError::setup)?;
        let frame = FrameMaps::new(&window, &xgrid, config.momentum_points()).map_err(CliError::setup)?;
        Ok(Self { config, xgrid, window, frame })
    }

    pub fn dim(&self) -> usize {
        self.xgrid.dim()
    }

    pub fn hamiltonian(&self) -> Result<Hamiltonian, CliError> {
        let h = self.config.hamiltonian()?;
        let (d, m) = (self.dim(), h.mass);
        let frame = &self.frame;
        let setup = CliError::setup;
        Ok(match h.kind {
            HamiltonianKind::Free => {
                let (operator, constants) = free_hamiltonian(frame, m).map_err(setup)?;
                Hamiltonian { operator, symbol: Symbol::free(d, m), constants, metadata: json!({}) }
            }
            HamiltonianKind::Harmonic => {
                let omega = h.omega();
                let (operator, constants) = harmonic_hamiltonian(frame, m, omega).map_err(setup)?;
                Hamiltonian { operator, symbol: Symbol::harmonic(d, m, omega), constants, metadata: json!({}) }
            }
            HamiltonianKind::Quartic => {
                let c = h.coupling.unwrap_or(0.0);
                let v = move |x: &[f64]| 0.25 * c * x.iter().map(|v| v.powi(4)).sum::<f64>();
                let (operator, pot, constants) = potential_hamiltonian(frame, m, v).map_err(setup)?;
                let metadata = json!({ "max_mollification_correction": pot.correction });
                Hamiltonian { operator, symbol: Symbol::quartic(d, m, c), constants, metadata }
            }
            HamiltonianKind::CustomPotential => {
                let v = polynomial(d, h.potential.as_deref().unwrap_or_default());
                let zeros = vec![0.0; d];
                let vv = v.clone();
                let (operator, pot, constants) =
                    potential_hamiltonian(frame, m, move |x: &[f64]| vv.eval(&zeros, x)).map_err(setup)?;
                let symbol = Symbol::polynomial(Symbol::free(d, m).as_polynomial().unwrap().add(&v)).labeled("custom-potential");
                let metadata = json!({ "max_mollification_correction": pot.correction });
                Hamiltonian { operator, symbol, constants, metadata }
            }
            HamiltonianKind::Magnetic => {
                let (e, b) = (h.charge.unwrap_or(0.0), h.field.unwrap_or(0.0));
                let mh = magnetic_hamiltonian(frame, m, e, &MagneticField::Uniform(b), h.g).map_err(setup)?;
                let metadata = json!({
                    "field": mh.field,
                    "measured_spin": mh.measured_spin,
                    "spin_term": mh.spin_term,
                    "anomalous_term": mh.anomalous_term,
                });
                Hamiltonian { operator: mh.operator, symbol: magnetic_symbol(d, m, e, b), constants: mh.constants, metadata }
            }
        })
    }

    /// Energy constants for the configured mass and frequency, or unit mass
    /// and frequency without a Hamiltonian section.
    pub fn energy_constants(&self) -> Result<EnergyConstants, CliError> {
        let (mass, omega) = match &self.config.hamiltonian {
            Some(h) => (h.mass, h.omega.unwrap_or(1.0)),
            None => (1.0, 1.0),
        };
        energy_constants(&self.window, mass, omega).map_err(CliError::setup)
    }

    pub fn initial_state(&self, run: &RunSection, seed: Option<u64>) -> Result<XState, CliError> {
        let i = &run.initial;
        let d = self.dim();
        match i.kind {
            InitialKind::Gaussian => {
                let zeros = vec![0.0; d];
                let q0 = i.q0.as_deref().unwrap_or(&zeros);
                let p0 = i.p0.as_deref().unwrap_or(&zeros);
                Ok(gaussian_packet(&self.xgrid, q0, p0, i.sigma.unwrap_or(1.0)))
            }
            InitialKind::Random => {
                let seed = seed.ok_or_else(|| CliError::Config("a random initial state needs a seed".into()))?;
                Ok(random_x_state(&self.xgrid, &mut seeded_rng(seed)))
            }
        }
    }
}

pub fn evolution_config(run: &RunSection) -> EvolutionConfig {
    EvolutionConfig {
        t_final: run.t_final,
        steps: run.steps,
        record_every: run.record_every,
        integrator: match run.integrator {
            IntegratorChoice::Yoshida4 => Integrator::Yoshida4,
            IntegratorChoice::Strang => Integrator::Strang,
            IntegratorChoice::Dense => Integrator::Dense,
        },
        husimi_stride: run.husimi_stride,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_table_orders_momentum_first() {
        let t = [Monomial { coef: 2.0, p: Some(vec![1, 0]), q: Some(vec![0, 3]) }];
        let poly = polynomial(2, &t);
        assert_eq!(poly.eval(&[1.5, 7.0], &[9.0, 2.0]), 2.0 * 1.5 * 8.0);
    }

    #[test]
    fn magnetic_symbol_expands_to_larmor_form() {
        let (m, e, b) = (2.0, 0.5, 3.0);
        let s = magnetic_symbol(2, m, e, b);
        let (p, q) = ([0.3, -0.7], [1.1, 0.4]);
        let lz = q[0] * p[1] - q[1] * p[0];
        let want = (p[0] * p[0] + p[1] * p[1]) / (2.0 * m) - e * b / (2.0 * m) * lz
            + e * e * b * b / (8.0 * m) * (q[0] * q[0] + q[1] * q[1]);
        assert!((s.evaluate(&p, &q).unwrap() - want).abs() < 1e-12);
    }
}
