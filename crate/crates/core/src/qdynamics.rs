//! Schrödinger propagation of projected states, Husimi densities and the
//! weak-versus-Liouville diagnostics.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayD, Zip};
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft;
use crate::irrep::{FrameMaps, XState};
use crate::koopman::{yoshida_weights, KoopmanGenerator, LiouvilleOptions, LiouvillePropagator, SplitOrder};
use crate::phase_grid::{DensityField, PhaseField, PhaseGrid, Role};
use crate::quantize::{hermitian_eigen, momentum_apply, position_apply, QuantizedOperator, SplitForm, DENSE_LIMIT};
use crate::symbol::Symbol;

/// Norm drift tolerated before a run is declared unstable.
pub const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Second-order split operator.
    Strang,
    /// Fourth-order triple-jump composition of Strang steps.
    Yoshida4,
    /// Exact exponential from the dense eigendecomposition.
    Dense,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Self::Strang => "strang",
            Self::Yoshida4 => "yoshida4",
            Self::Dense => "dense",
        }
    }
}

struct Substep {
    weight: f64,
    kinetic: ArrayD<Complex64>,
    half_kick: ArrayD<Complex64>,
}

enum Engine {
    Split { substeps: Vec<Substep>, constant_phase: Complex64 },
    Dense(DMatrix<Complex64>),
}

/// Fixed-step propagator `ψ ↦ e^{−iH dt/ħ} ψ`.
pub struct Propagator {
    dt: f64,
    integrator: Integrator,
    grid_len: usize,
    engine: Engine,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator").field("dt", &self.dt).field("integrator", &self.integrator).finish()
    }
}

fn split_engine(split: &SplitForm, dt: f64, hbar: f64, integrator: Integrator) -> Engine {
    let weights: Vec<f64> = match integrator {
        Integrator::Strang => vec![1.0],
        _ => yoshida_weights().to_vec(),
    };
    let n_total = split.kinetic.len() as f64;
    let mut substeps: Vec<Substep> = Vec::new();
    for w in weights {
        if let Some(s) = substeps.iter().find(|s| s.weight == w) {
            let (kinetic, half_kick) = (s.kinetic.clone(), s.half_kick.clone());
            substeps.push(Substep { weight: w, kinetic, half_kick });
            continue;
        }
        let tau = w * dt / hbar;
        // the inverse FFT normalization is folded into the kinetic factor
        let kinetic = split.kinetic.mapv(|t| Complex64::from_polar(1.0 / n_total, -t * tau));
        let half_kick = split.potential.mapv(|v| Complex64::from_polar(1.0, -0.5 * v * tau));
        substeps.push(Substep { weight: w, kinetic, half_kick });
    }
    Engine::Split { substeps, constant_phase: Complex64::from_polar(1.0, -split.constant * dt / hbar) }
}

fn dense_engine(h: &QuantizedOperator, dt: f64) -> Result<Engine> {
    let m = h.to_dense()?;
    let (vals, vecs) = hermitian_eigen(&m);
    let hbar = h.grid().hbar();
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&e| Complex64::from_polar(1.0, -e * dt / hbar)),
    ));
    Ok(Engine::Dense(&vecs * phases * vecs.adjoint()))
}

impl Propagator {
    /// Split-operator integrators fall back to the dense route for
    /// non-splittable operators on small grids.
    pub fn new(h: &QuantizedOperator, dt: f64, integrator: Integrator) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::NonPositiveStep(dt));
        }
        let grid = h.grid();
        let (engine, integrator) = match (integrator, h.split_form()) {
            (Integrator::Dense, _) => (dense_engine(h, dt)?, Integrator::Dense),
            (i, Some(split)) => (split_engine(&split, dt, grid.hbar(), i), i),
            (_, None) if grid.len() <= DENSE_LIMIT => (dense_engine(h, dt)?, Integrator::Dense),
            (_, None) => {
                return Err(Error::Capability(format!(
                    "operator is not kinetic + multiplication and the grid ({} points) exceeds the dense limit {DENSE_LIMIT}",
                    grid.len()
                )))
            }
        };
        Ok(Self { dt, integrator, grid_len: grid.len(), engine })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Integrator actually used (after any dense fallback).
    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn step(&self, psi: &mut XState) -> Result<()> {
        if psi.grid().len() != self.grid_len {
            return Err(Error::GridMismatch("state does not match the propagator grid".into()));
        }
        match &self.engine {
            Engine::Split { substeps, constant_phase } => {
                let v = psi.values_mut();
                let d = v.ndim();
                for s in substeps {
                    Zip::from(&mut *v).and(&s.half_kick).for_each(|a, b| *a *= b);
                    for ax in 0..d {
                        fft::fft_axis(v, ax, FftDirection::Forward);
                    }
                    Zip::from(&mut *v).and(&s.kinetic).for_each(|a, b| *a *= b);
                    for ax in 0..d {
                        fft::fft_axis(v, ax, FftDirection::Inverse);
                    }
                    Zip::from(&mut *v).and(&s.half_kick).for_each(|a, b| *a *= b);
                }
                v.mapv_inplace(|a| a * constant_phase);
            }
            Engine::Dense(u) => {
                let x = DVector::from_iterator(self.grid_len, psi.values().iter().copied());
                let y = u * x;
                for (a, b) in psi.values_mut().iter_mut().zip(y.iter()) {
                    *a = *b;
                }
            }
        }
        Ok(())
    }
}

/// Trajectory `ψ(t_k)`, `k = 0..=steps`, with the fourth-order splitting.
pub fn schrodinger_propagate(psi0: &XState, h: &QuantizedOperator, t_final: f64, steps: usize) -> Result<Vec<XState>> {
    schrodinger_propagate_with(psi0, h, t_final, steps, Integrator::Yoshida4)
}

pub fn schrodinger_propagate_with(
    psi0: &XState,
    h: &QuantizedOperator,
    t_final: f64,
    steps: usize,
    integrator: Integrator,
) -> Result<Vec<XState>> {
    if psi0.grid() != h.grid() {
        return Err(Error::GridMismatch("initial state is not on the Hamiltonian's grid".into()));
    }
    if steps == 0 {
        return Ok(vec![psi0.clone()]);
    }
    let prop = Propagator::new(h, t_final / steps as f64, integrator)?;
    let mut out = Vec::with_capacity(steps + 1);
    let mut psi = psi0.clone();
    out.push(psi.clone());
    for _ in 0..steps {
        prop.step(&mut psi)?;
        out.push(psi.clone());
    }
    Ok(out)
}

/// Piecewise-constant `H(t)`: each step uses `H` at the step midpoint.
pub fn schrodinger_propagate_piecewise<F>(
    psi0: &XState,
    h_of_t: F,
    t_final: f64,
    steps: usize,
    integrator: Integrator,
) -> Result<Vec<XState>>
where
    F: Fn(f64) -> Result<QuantizedOperator>,
{
    if steps == 0 {
        return Ok(vec![psi0.clone()]);
    }
    let dt = t_final / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut psi = psi0.clone();
    out.push(psi.clone());
    for k in 0..steps {
        let h = h_of_t((k as f64 + 0.5) * dt)?;
        if h.grid() != psi.grid() {
            return Err(Error::GridMismatch("H(t) is not on the state's grid".into()));
        }
        Propagator::new(&h, dt, integrator)?.step(&mut psi)?;
        out.push(psi.clone());
    }
    Ok(out)
}

/// `ρ(p,q) = |Wψ|²` on the frame's phase grid.
pub fn husimi(psi: &XState, frame: &FrameMaps) -> Result<DensityField> {
    husimi_decimated(psi, frame, 1)
}

/// Husimi density with every `stride`-th position sample.
pub fn husimi_decimated(psi: &XState, frame: &FrameMaps, stride: usize) -> Result<DensityField> {
    let phi = if stride == 1 { frame.analyze_unchecked(psi)? } else { frame.analyze_decimated(psi, stride)? };
    DensityField::new(*phi.grid(), phi.values().mapv(|v| v.norm_sqr()))
}

/// Gradients of a symbol tabulated on a phase grid.
struct SymbolTables {
    values: ArrayD<f64>,
    grad_p: Vec<ArrayD<f64>>,
    grad_q: Vec<ArrayD<f64>>,
    p: Vec<ArrayD<f64>>,
    q: Vec<ArrayD<f64>>,
    generator: KoopmanGenerator,
}

impl SymbolTables {
    fn new(h: &Symbol, grid: &PhaseGrid) -> Result<Self> {
        if h.dim() != grid.dim() {
            return Err(Error::GridMismatch("Hamiltonian symbol and phase grid dimensions differ".into()));
        }
        let values = h.sample(grid)?;
        let (grad_p, grad_q) = h.sample_gradients(grid)?;
        let d = grid.dim();
        let p = (0..d).map(|i| grid.sample_real(|p, _| p[i])).collect();
        let q = (0..d).map(|i| grid.sample_real(|_, q| q[i])).collect();
        Ok(Self { values, grad_p, grad_q, p, q, generator: KoopmanGenerator::new(h, grid)? })
    }
}

/// Time series for one run. Quantum runs fill the means from the state;
/// classical runs from the transported density.
#[derive(Debug, Clone, Default)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub q_mean: Vec<Vec<f64>>,
    pub p_mean: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    /// `∫ H ρ_t`.
    pub semiclassical_energy: Vec<f64>,
    pub norm: Vec<f64>,
    /// `∫ ∇_p H ρ_t`.
    pub drift_moment: Vec<Vec<f64>>,
    /// `∫ ∇_q H ρ_t`.
    pub force_moment: Vec<Vec<f64>>,
    /// `‖∂_tρ + {H,ρ}‖ / ‖{H,ρ}‖`.
    pub liouville_residual: Vec<f64>,
    pub hamiltonian: String,
    pub window: String,
    pub integrator: String,
    pub step: f64,
}

impl EvolutionRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    /// Largest Liouville residual over interior samples.
    pub fn max_liouville_residual(&self) -> f64 {
        self.liouville_residual.iter().copied().fold(0.0, f64::max)
    }
}

/// `d/dt` of a uniformly sampled series: centred differences inside, the
/// one-sided three-point formula at the ends.
pub fn sample_derivative(values: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::TooFewSamples(n));
    }
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt);
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt);
    for k in 1..n - 1 {
        out[k] = (values[k + 1] - values[k - 1]) / (2.0 * dt);
    }
    Ok(out)
}

/// Residuals of `d⟨Q⟩/dt = ∫∇_pH ρ` and `d⟨P⟩/dt = −∫∇_qH ρ`, indexed
/// `[sample][component]`.
#[derive(Debug, Clone)]
pub struct WeakResiduals {
    pub position: Vec<Vec<f64>>,
    pub momentum: Vec<Vec<f64>>,
}

impl WeakResiduals {
    pub fn max(&self) -> f64 {
        self.position.iter().chain(&self.momentum).flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return Err(Error::TooFewSamples(times.len()));
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if !(w[1] > w[0]) || ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(Error::InvalidArgument("record samples are not uniformly spaced".into()));
        }
    }
    Ok(dt)
}

/// Weak-equation residuals of a record whose Husimi moments were taken with
/// the Hamiltonian symbol of the run.
pub fn weak_equation_residuals(record: &EvolutionRecord) -> Result<WeakResiduals> {
    let dt = check_uniform(&record.times)?;
    let n = record.len();
    let d = record.q_mean.first().map_or(0, |v| v.len());
    let mut position = vec![vec![0.0; d]; n];
    let mut momentum = vec![vec![0.0; d]; n];
    for i in 0..d {
        let q: Vec<f64> = record.q_mean.iter().map(|v| v[i]).collect();
        let p: Vec<f64> = record.p_mean.iter().map(|v| v[i]).collect();
        let dq = sample_derivative(&q, dt)?;
        let dp = sample_derivative(&p, dt)?;
        for k in 0..n {
            position[k][i] = dq[k] - record.drift_moment[k][i];
            momentum[k][i] = dp[k] + record.force_moment[k][i];
        }
    }
    Ok(WeakResiduals { position, momentum })
}

fn integrate(grid: &PhaseGrid, f: &ArrayD<f64>, rho: &ArrayD<f64>) -> f64 {
    Zip::from(f).and(rho).fold(0.0, |acc, a, b| acc + a * b) * grid.cell_volume()
}

/// Accumulates density samples, filling moments immediately and the
/// Liouville residual once three consecutive densities are known.
struct Recorder {
    grid: PhaseGrid,
    tables: SymbolTables,
    dt: f64,
    window: VecDeque<ArrayD<f64>>,
    first: Vec<ArrayD<f64>>,
    record: EvolutionRecord,
}

impl Recorder {
    fn new(h: &Symbol, grid: PhaseGrid, dt: f64, mut record: EvolutionRecord) -> Result<Self> {
        record.hamiltonian = h.label().to_string();
        Ok(Self { tables: SymbolTables::new(h, &grid)?, grid, dt, window: VecDeque::new(), first: vec![], record })
    }

    fn liouville(&self, dt_rho: &ArrayD<f64>, rho: &ArrayD<f64>) -> Result<f64> {
        let field = PhaseField::new(self.grid, rho.mapv(|v| Complex64::new(v, 0.0)), Role::State)?;
        let br = self.tables.generator.bracket_with(&field)?;
        let mut num = 0.0;
        let mut den = 0.0;
        Zip::from(dt_rho).and(&br).for_each(|a, b| {
            num += (a + b.re).powi(2);
            den += b.re * b.re;
        });
        Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
    }

    fn push(&mut self, t: f64, q: Vec<f64>, p: Vec<f64>, energy: f64, norm: f64, rho: ArrayD<f64>) -> Result<()> {
        let g = &self.grid;
        let tb = &self.tables;
        let r = &mut self.record;
        r.times.push(t);
        r.q_mean.push(q);
        r.p_mean.push(p);
        r.energy.push(energy);
        r.norm.push(norm);
        r.semiclassical_energy.push(integrate(g, &tb.values, &rho));
        r.drift_moment.push(tb.grad_p.iter().map(|f| integrate(g, f, &rho)).collect());
        r.force_moment.push(tb.grad_q.iter().map(|f| integrate(g, f, &rho)).collect());
        let k = r.times.len() - 1;
        if self.first.len() < 3 {
            self.first.push(rho.clone());
        }
        self.window.push_back(rho);
        if self.window.len() > 3 {
            self.window.pop_front();
        }
        if k == 2 {
            let f = &self.first;
            let d = (&f[1] * 4.0 - &f[0] * 3.0 - &f[2]) / (2.0 * self.dt);
            let v = self.liouville(&d, &f[0])?;
            self.record.liouville_residual.push(v);
        }
        if k >= 2 {
            let w = &self.window;
            let d = (&w[2] - &w[0]) / (2.0 * self.dt);
            let v = self.liouville(&d, &w[1])?;
            self.record.liouville_residual.push(v);
        }
        Ok(())
    }

    fn finish(mut self) -> Result<EvolutionRecord> {
        let n = self.record.len();
        if n >= 3 {
            let w = &self.window;
            let d = (&w[2] * 3.0 - &w[1] * 4.0 + &w[0]) / (2.0 * self.dt);
            let v = self.liouville(&d, &w[2])?;
            self.record.liouville_residual.push(v);
        } else {
            self.record.liouville_residual = vec![f64::NAN; n];
        }
        Ok(self.record)
    }
}

/// Settings of a recorded quantum run.
#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub t_final: f64,
    pub steps: usize,
    /// Record every `record_every` steps (the final step is always on a
    /// record boundary).
    pub record_every: usize,
    pub integrator: Integrator,
    /// Position decimation of the Husimi grid.
    pub husimi_stride: usize,
}

impl EvolutionConfig {
    /// Step size; `steps = 0` is accepted and yields `0` (initial sample only).
    fn validate(&self) -> Result<f64> {
        if self.steps == 0 && self.record_every > 0 {
            return Ok(0.0);
        }
        if self.record_every == 0 || self.steps % self.record_every != 0 {
            return Err(Error::InvalidArgument(format!(
                "steps ({}) must be a positive multiple of record_every ({})",
                self.steps, self.record_every
            )));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::NonPositiveStep(self.t_final));
        }
        Ok(self.t_final / self.steps as f64)
    }
}

fn quantum_means(psi: &XState) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = psi.grid().dim();
    let n2 = psi.norm_sq();
    let mut q = Vec::with_capacity(d);
    let mut p = Vec::with_capacity(d);
    for i in 0..d {
        q.push(psi.inner(&position_apply(psi, i))?.re / n2);
        p.push(psi.inner(&momentum_apply(psi, i))?.re / n2);
    }
    Ok((q, p))
}

/// Propagates `ψ₀` under `H` and records expectations, Husimi moments and
/// the Liouville residual of the Husimi density with respect to `h_symbol`.
pub fn run_evolution(
    psi0: &XState,
    h: &QuantizedOperator,
    h_symbol: &Symbol,
    frame: &FrameMaps,
    config: &EvolutionConfig,
) -> Result<EvolutionRecord> {
    let dt = config.validate()?;
    if psi0.grid() != h.grid() || psi0.grid() != frame.x_grid() {
        return Err(Error::GridMismatch("state, Hamiltonian and frame must share the x-grid".into()));
    }
    let prop = if config.steps > 0 { Some(Propagator::new(h, dt, config.integrator)?) } else { None };
    let grid = frame.decimated_grid(config.husimi_stride)?;
    let record = EvolutionRecord {
        window: h.provenance().window.clone(),
        integrator: prop.as_ref().map_or(config.integrator, |p| p.integrator()).name().into(),
        step: dt,
        ..Default::default()
    };
    let mut rec = Recorder::new(h_symbol, grid, dt * config.record_every as f64, record)?;
    let mut psi = psi0.clone();
    let n0 = psi0.norm_sq();
    for k in 0..=config.steps {
        if let (true, Some(prop)) = (k > 0, &prop) {
            prop.step(&mut psi)?;
        }
        if k % config.record_every == 0 {
            let norm = psi.norm_sq() / n0;
            if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
                return Err(Error::Instability { drift: (norm - 1.0).abs(), time: k as f64 * dt });
            }
            let (q, p) = quantum_means(&psi)?;
            let energy = h.expectation(&psi)?.re / psi.norm_sq();
            let rho = husimi_decimated(&psi, frame, config.husimi_stride)?;
            rec.push(k as f64 * dt, q, p, energy, norm, rho.values().clone())?;
        }
    }
    rec.finish()
}

/// Side-by-side quantum and classical runs from the same initial density.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub quantum: EvolutionRecord,
    pub classical: EvolutionRecord,
    /// `∫|ρ_cl − ρ_qu|` per sample.
    pub l1_distance: Vec<f64>,
    /// `max_i |⟨q_i⟩_cl − ⟨q_i⟩_qu|` per sample.
    pub q_gap: Vec<f64>,
    pub p_gap: Vec<f64>,
}

impl Comparison {
    pub fn max_expectation_gap(&self) -> f64 {
        self.q_gap.iter().chain(&self.p_gap).copied().fold(0.0, f64::max)
    }
}

/// Quantum run under `H` and a Liouville run of `ρ₀ = husimi(ψ₀)` under the
/// symbol, both on the (decimated) Husimi grid.
pub fn compare_classical_quantum(
    psi0: &XState,
    h: &QuantizedOperator,
    h_symbol: &Symbol,
    frame: &FrameMaps,
    config: &EvolutionConfig,
) -> Result<Comparison> {
    let dt = config.validate()?;
    if config.steps == 0 {
        return Err(Error::InvalidArgument("a comparison needs at least one step".into()));
    }
    if psi0.grid() != h.grid() || psi0.grid() != frame.x_grid() {
        return Err(Error::GridMismatch("state, Hamiltonian and frame must share the x-grid".into()));
    }
    if h_symbol.dim() != frame.x_grid().dim() {
        return Err(Error::GridMismatch("symbol dimension differs from the grid".into()));
    }
    let grid = frame.decimated_grid(config.husimi_stride)?;
    let order = if config.integrator == Integrator::Strang { SplitOrder::Second } else { SplitOrder::Fourth };
    let liouville = LiouvillePropagator::new(h_symbol, &grid, dt, LiouvilleOptions { order })?;
    let prop = Propagator::new(h, dt, config.integrator)?;
    let rec_dt = dt * config.record_every as f64;

    let base = EvolutionRecord { window: h.provenance().window.clone(), step: dt, ..Default::default() };
    let mut quantum = Recorder::new(
        h_symbol,
        grid,
        rec_dt,
        EvolutionRecord { integrator: prop.integrator().name().into(), ..base.clone() },
    )?;
    let mut classical = Recorder::new(
        h_symbol,
        grid,
        rec_dt,
        EvolutionRecord { integrator: format!("liouville-{}", config.integrator.name()), ..base },
    )?;
    let d = grid.dim();
    let mut psi = psi0.clone();
    let n0 = psi0.norm_sq();
    let rho0 = husimi_decimated(psi0, frame, config.husimi_stride)?;
    let mut cl = PhaseField::new(grid, rho0.values().mapv(|v| Complex64::new(v, 0.0)), Role::State)?;
    let mut l1_distance = Vec::new();
    let mut q_gap = Vec::new();
    let mut p_gap = Vec::new();
    for k in 0..=config.steps {
        if k > 0 {
            prop.step(&mut psi)?;
            liouville.step(&mut cl)?;
        }
        if k % config.record_every != 0 {
            continue;
        }
        let t = k as f64 * dt;
        let norm = psi.norm_sq() / n0;
        let (q, p) = quantum_means(&psi)?;
        let energy = h.expectation(&psi)?.re / psi.norm_sq();
        let rho_q = husimi_decimated(&psi, frame, config.husimi_stride)?.values().clone();

        let rho_c = cl.values().mapv(|v| v.re);
        let tb = &classical.tables;
        let mass = rho_c.sum() * grid.cell_volume();
        let qc: Vec<f64> = (0..d).map(|i| integrate(&grid, &tb.q[i], &rho_c) / mass).collect();
        let pc: Vec<f64> = (0..d).map(|i| integrate(&grid, &tb.p[i], &rho_c) / mass).collect();
        let ec = integrate(&grid, &tb.values, &rho_c) / mass;

        l1_distance.push(Zip::from(&rho_c).and(&rho_q).fold(0.0, |a, x, y| a + (x - y).abs()) * grid.cell_volume());
        q_gap.push(q.iter().zip(&qc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        p_gap.push(p.iter().zip(&pc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        quantum.push(t, q, p, energy, norm, rho_q)?;
        classical.push(t, qc, pc, ec, mass, rho_c)?;
    }
    Ok(Comparison { quantum: quantum.finish()?, classical: classical.finish()?, l1_distance, q_gap, p_gap })
}
