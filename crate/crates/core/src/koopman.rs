//! Poisson brackets, Koopman generators and Liouville transport.
//!
//! Sign convention: `{f, g} = ∇_p f·∇_q g − ∇_p g·∇_q f`, so `{p, q} = 1`,
//! Hamilton's equations read `dq/dt = ∇_p H`, `dp/dt = −∇_q H`, and fields
//! evolve by `∂_t φ = −{H, φ}`. The generator of a symbol is
//! `X_f φ = −i{f, φ}`.

use ndarray::{ArrayD, Zip};
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft;
use crate::phase_grid::{PhaseField, PhaseGrid, Role};
use crate::symbol::{SeparableParts, Symbol, SymbolKind};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Fourth-order triple-jump weights `(w1, w0, w1)`.
pub(crate) fn yoshida_weights() -> [f64; 3] {
    let c = 2f64.powf(1.0 / 3.0);
    let w1 = 1.0 / (2.0 - c);
    [w1, -c * w1, w1]
}

pub fn poisson_bracket(f: &Symbol, g: &Symbol) -> Result<Symbol> {
    if f.dim() != g.dim() {
        return Err(Error::InvalidArgument("bracket of symbols of different dimension".into()));
    }
    if let (Some(a), Some(b)) = (f.as_polynomial(), g.as_polynomial()) {
        return Ok(Symbol::polynomial(a.poisson_bracket(b)));
    }
    for s in [f, g] {
        if !s.is_differentiable() {
            return Err(Error::Undifferentiable(format!("{} has neither gradients nor samples", s.label())));
        }
    }
    let sampled_grid = [f, g].into_iter().find_map(|s| match s.kind() {
        SymbolKind::Sampled(field) => Some(*field.grid()),
        _ => None,
    });
    if let Some(grid) = sampled_grid {
        let (fp, fq) = f.sample_gradients(&grid)?;
        let (gp, gq) = g.sample_gradients(&grid)?;
        let mut out = ArrayD::<f64>::zeros(ndarray::IxDyn(&grid.shape()));
        for i in 0..grid.dim() {
            Zip::from(&mut out)
                .and(&fp[i])
                .and(&gq[i])
                .and(&gp[i])
                .and(&fq[i])
                .for_each(|o, a, b, c, d| *o += a * b - c * d);
        }
        let field = PhaseField::new(grid, out.mapv(|v| Complex64::new(v, 0.0)), Role::Symbol)?;
        return Symbol::sampled(field);
    }
    let (f, g) = (f.clone(), g.clone());
    Ok(Symbol::callable(f.dim(), move |p, q| {
        let (fp, fq) = f.gradient(p, q).unwrap();
        let (gp, gq) = g.gradient(p, q).unwrap();
        (0..fp.len()).map(|i| fp[i] * gq[i] - gp[i] * fq[i]).sum()
    })
    .labeled("bracket"))
}

/// `X_f φ = −i{f, φ}` with spectral derivatives of `φ`.
#[derive(Debug, Clone)]
pub struct KoopmanGenerator {
    grid: PhaseGrid,
    grad_p: Vec<ArrayD<f64>>,
    grad_q: Vec<ArrayD<f64>>,
}

impl KoopmanGenerator {
    pub fn new(f: &Symbol, grid: &PhaseGrid) -> Result<Self> {
        let (grad_p, grad_q) = f.sample_gradients(grid)?;
        Ok(Self { grid: *grid, grad_p, grad_q })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    /// `{f, φ}` without the `−i`.
    pub fn bracket_with(&self, phi: &PhaseField) -> Result<ArrayD<Complex64>> {
        self.grid.check_same(phi.grid())?;
        let g = &self.grid;
        let mut out = ArrayD::<Complex64>::zeros(ndarray::IxDyn(&g.shape()));
        for i in 0..g.dim() {
            let dq = fft::derivative(phi.values(), g.q_axis(i), g.dq(), 1);
            let dp = fft::derivative(phi.values(), g.p_axis(i), g.dp(), 1);
            Zip::from(&mut out)
                .and(&self.grad_p[i])
                .and(&dq)
                .and(&self.grad_q[i])
                .and(&dp)
                .for_each(|o, &a, &b, &c, &d| *o += b * a - d * c);
        }
        Ok(out)
    }

    pub fn apply(&self, phi: &PhaseField) -> Result<PhaseField> {
        let b = self.bracket_with(phi)?;
        Ok(phi.with_values(b.mapv(|v| -I * v)))
    }
}

pub fn apply_generator(x: &KoopmanGenerator, phi: &PhaseField) -> Result<PhaseField> {
    x.apply(phi)
}

/// Splitting order for separable Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitOrder {
    /// Strang splitting.
    Second,
    /// Triple-jump composition of Strang steps.
    Fourth,
}

#[derive(Debug, Clone, Copy)]
pub struct LiouvilleOptions {
    pub order: SplitOrder,
}

impl Default for LiouvilleOptions {
    fn default() -> Self {
        Self { order: SplitOrder::Fourth }
    }
}

enum Engine {
    /// Exact spectral advection; velocities indexed by the flat momentum
    /// (resp. position) sub-index.
    Split {
        velocity: Vec<Vec<f64>>,
        force_grad: Vec<Vec<f64>>,
        kp: Vec<Vec<f64>>,
        kq: Vec<Vec<f64>>,
        order: SplitOrder,
    },
    Rk4(KoopmanGenerator),
}

/// Steps `∂_t φ = −{H, φ}` with a fixed step.
pub struct LiouvillePropagator {
    grid: PhaseGrid,
    dt: f64,
    engine: Engine,
}

fn sub_coords(n: usize, d: usize, coords: &[f64]) -> Vec<Vec<f64>> {
    let total = n.pow(d as u32);
    (0..total)
        .map(|flat| {
            let mut v = vec![0.0; d];
            let mut r = flat;
            for i in (0..d).rev() {
                v[i] = coords[r % n];
                r /= n;
            }
            v
        })
        .collect()
}

impl LiouvillePropagator {
    pub fn new(h: &Symbol, grid: &PhaseGrid, dt: f64, options: LiouvilleOptions) -> Result<Self> {
        let d = grid.dim();
        let engine = match h.separable_parts() {
            Some(SeparableParts { kinetic_grad, potential_grad }) => {
                let ps = sub_coords(grid.n_p(), d, &grid.p_coords());
                let qs = sub_coords(grid.n_q(), d, &grid.q_coords());
                Engine::Split {
                    velocity: ps.iter().map(|p| kinetic_grad(p)).collect(),
                    force_grad: qs.iter().map(|q| potential_grad(q)).collect(),
                    kp: sub_coords(grid.n_p(), d, &grid.p_wavenumbers()),
                    kq: sub_coords(grid.n_q(), d, &grid.q_wavenumbers()),
                    order: options.order,
                }
            }
            None => Engine::Rk4(KoopmanGenerator::new(h, grid)?),
        };
        Ok(Self { grid: *grid, dt, engine })
    }

    pub fn is_split(&self) -> bool {
        matches!(self.engine, Engine::Split { .. })
    }

    fn drift(&self, v: &mut ArrayD<Complex64>, tau: f64) {
        let Engine::Split { velocity, kq, .. } = &self.engine else { unreachable!() };
        let g = &self.grid;
        let d = g.dim();
        for i in 0..d {
            fft::fft_axis(v, g.q_axis(i), FftDirection::Forward);
        }
        let nq = kq.len();
        let scale = 1.0 / nq as f64;
        for (flat, x) in v.iter_mut().enumerate() {
            let (pf, qf) = (flat / nq, flat % nq);
            let phase: f64 = (0..d).map(|i| kq[qf][i] * velocity[pf][i]).sum::<f64>() * tau;
            *x *= Complex64::from_polar(scale, -phase);
        }
        for i in 0..d {
            fft::fft_axis(v, g.q_axis(i), FftDirection::Inverse);
        }
    }

    fn kick(&self, v: &mut ArrayD<Complex64>, tau: f64) {
        let Engine::Split { force_grad, kp, kq, .. } = &self.engine else { unreachable!() };
        let g = &self.grid;
        let d = g.dim();
        if force_grad.iter().all(|f| f.iter().all(|&x| x == 0.0)) {
            return;
        }
        for i in 0..d {
            fft::fft_axis(v, g.p_axis(i), FftDirection::Forward);
        }
        let nq = kq.len();
        let scale = 1.0 / kp.len() as f64;
        for (flat, x) in v.iter_mut().enumerate() {
            let (pf, qf) = (flat / nq, flat % nq);
            let phase: f64 = (0..d).map(|i| kp[pf][i] * force_grad[qf][i]).sum::<f64>() * tau;
            *x *= Complex64::from_polar(scale, phase);
        }
        for i in 0..d {
            fft::fft_axis(v, g.p_axis(i), FftDirection::Inverse);
        }
    }

    fn strang(&self, v: &mut ArrayD<Complex64>, tau: f64) {
        self.kick(v, 0.5 * tau);
        self.drift(v, tau);
        self.kick(v, 0.5 * tau);
    }

    fn rhs(gen: &KoopmanGenerator, v: &ArrayD<Complex64>) -> ArrayD<Complex64> {
        let phi = PhaseField::from_parts(gen.grid, v.clone(), Role::State);
        gen.bracket_with(&phi).expect("same grid").mapv(|x| -x)
    }

    pub fn step(&self, phi: &mut PhaseField) -> Result<()> {
        self.grid.check_same(phi.grid())?;
        let dt = self.dt;
        match &self.engine {
            Engine::Split { order, .. } => {
                let v = phi.values_mut();
                match order {
                    SplitOrder::Second => self.strang(v, dt),
                    SplitOrder::Fourth => {
                        for w in yoshida_weights() {
                            self.strang(v, w * dt);
                        }
                    }
                }
            }
            Engine::Rk4(gen) => {
                let y = phi.values().clone();
                let k1 = Self::rhs(gen, &y);
                let k2 = Self::rhs(gen, &(&y + &k1.mapv(|x| x * (0.5 * dt))));
                let k3 = Self::rhs(gen, &(&y + &k2.mapv(|x| x * (0.5 * dt))));
                let k4 = Self::rhs(gen, &(&y + &k3.mapv(|x| x * dt)));
                let mut out = y;
                Zip::from(&mut out)
                    .and(&k1)
                    .and(&k2)
                    .and(&k3)
                    .and(&k4)
                    .for_each(|o, a, b, c, e| *o += (a + b * 2.0 + c * 2.0 + e) * (dt / 6.0));
                *phi.values_mut() = out;
            }
        }
        Ok(())
    }
}

pub fn liouville_propagate(phi0: &PhaseField, h: &Symbol, t_final: f64, steps: usize) -> Result<PhaseField> {
    liouville_propagate_with(phi0, h, t_final, steps, LiouvilleOptions::default())
}

pub fn liouville_propagate_with(
    phi0: &PhaseField,
    h: &Symbol,
    t_final: f64,
    steps: usize,
    options: LiouvilleOptions,
) -> Result<PhaseField> {
    if steps == 0 || t_final == 0.0 {
        return Ok(phi0.clone());
    }
    let dt = t_final / steps as f64;
    let prop = LiouvillePropagator::new(h, phi0.grid(), dt, options)?;
    let n0 = phi0.norm();
    let mut phi = phi0.clone();
    for s in 0..steps {
        prop.step(&mut phi)?;
        let drift = (phi.norm() - n0).abs() / n0;
        if !(drift <= 1e-4) {
            return Err(Error::Instability { drift, time: (s + 1) as f64 * dt });
        }
    }
    Ok(phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMethod {
    Leapfrog,
    Yoshida4,
    Rk4,
}

#[derive(Debug, Clone)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub method: FlowMethod,
    pub step: f64,
}

impl ClassicalTrajectory {
    pub fn last(&self) -> (&[f64], &[f64]) {
        (self.p.last().unwrap(), self.q.last().unwrap())
    }
}

/// Fourth-order symplectic flow for separable `H`, RK4 otherwise.
pub fn classical_flow(h: &Symbol, p0: &[f64], q0: &[f64], t_final: f64, step: f64) -> Result<ClassicalTrajectory> {
    let method = if h.separable_parts().is_some() { FlowMethod::Yoshida4 } else { FlowMethod::Rk4 };
    classical_flow_with(h, p0, q0, t_final, step, method)
}

pub fn classical_flow_with(
    h: &Symbol,
    p0: &[f64],
    q0: &[f64],
    t_final: f64,
    step: f64,
    method: FlowMethod,
) -> Result<ClassicalTrajectory> {
    if !(step > 0.0) {
        return Err(Error::NonPositiveStep(step));
    }
    if !h.has_analytic_gradient() {
        return Err(Error::Undifferentiable("classical flow needs analytic gradients".into()));
    }
    let n = (t_final.abs() / step).ceil().max(1.0) as usize;
    let dt = t_final / n as f64;
    let mut p = p0.to_vec();
    let mut q = q0.to_vec();
    let mut traj = ClassicalTrajectory {
        times: vec![0.0],
        p: vec![p.clone()],
        q: vec![q.clone()],
        method,
        step: dt,
    };
    let parts = h.separable_parts();
    if matches!(method, FlowMethod::Leapfrog | FlowMethod::Yoshida4) && parts.is_none() {
        return Err(Error::InvalidArgument("symplectic splitting needs a separable Hamiltonian".into()));
    }
    let leapfrog = |p: &mut Vec<f64>, q: &mut Vec<f64>, tau: f64| {
        let parts = parts.as_ref().unwrap();
        let f = (parts.potential_grad)(q);
        p.iter_mut().zip(&f).for_each(|(x, g)| *x -= 0.5 * tau * g);
        let v = (parts.kinetic_grad)(p);
        q.iter_mut().zip(&v).for_each(|(x, g)| *x += tau * g);
        let f = (parts.potential_grad)(q);
        p.iter_mut().zip(&f).for_each(|(x, g)| *x -= 0.5 * tau * g);
    };
    let field = |p: &[f64], q: &[f64]| {
        let (gp, gq) = h.gradient(p, q).unwrap();
        (gq.iter().map(|x| -x).collect::<Vec<_>>(), gp)
    };
    for s in 0..n {
        match method {
            FlowMethod::Leapfrog => leapfrog(&mut p, &mut q, dt),
            FlowMethod::Yoshida4 => {
                for w in yoshida_weights() {
                    leapfrog(&mut p, &mut q, w * dt);
                }
            }
            FlowMethod::Rk4 => {
                let add = |a: &[f64], b: &[f64], c: f64| a.iter().zip(b).map(|(x, y)| x + c * y).collect::<Vec<_>>();
                let (k1p, k1q) = field(&p, &q);
                let (k2p, k2q) = field(&add(&p, &k1p, 0.5 * dt), &add(&q, &k1q, 0.5 * dt));
                let (k3p, k3q) = field(&add(&p, &k2p, 0.5 * dt), &add(&q, &k2q, 0.5 * dt));
                let (k4p, k4q) = field(&add(&p, &k3p, dt), &add(&q, &k3q, dt));
                for i in 0..p.len() {
                    p[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
                    q[i] += dt / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
                }
            }
        }
        traj.times.push((s + 1) as f64 * dt);
        traj.p.push(p.clone());
        traj.q.push(q.clone());
    }
    Ok(traj)
}
