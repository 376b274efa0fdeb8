//! Projection quantization `F = Π f Π` on the position representation.
//!
//! Two independent routes are provided. The grid route applies
//! `ψ ↦ W†(f · Wψ)` through the frame maps. The closed-form route reduces
//! polynomial symbols (degree ≤ 2 in `p`) to differential operators plus
//! window moments, and mollifies potentials with `κ(u) = h^d |Φ(u)|²`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fft;
use crate::irrep::{sign_probe, sphere_quadrature, spherical_harmonic, spherical_harmonic_dtheta, unflatten};
use crate::irrep::{FrameMaps, Window, WindowFamily, XGrid, XState};
use crate::phase_grid::{expectation, DensityModel, PhaseGrid};
use crate::symbol::{Polynomial, Symbol};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Largest x-grid (total points) assembled densely.
pub const DENSE_LIMIT: usize = 1024;
/// Upper-band spectral energy fraction above which a sampled symbol counts
/// as aliased.
pub const ALIASING_TOLERANCE: f64 = 1e-6;
/// Out-of-subspace fraction tolerated by the semi-classical expectation.
pub const SUBSPACE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub symbol: String,
    pub window: String,
    pub route: String,
}

/// One additive piece of a quantized operator.
#[derive(Debug, Clone)]
pub enum Term {
    Constant(Complex64),
    /// Multiplication by a real function of `x`.
    Multiplication(Arc<ArrayD<f64>>),
    /// `Σ b_j P_j + Σ c_jk P_j P_k`, applied as a Fourier multiplier.
    Momentum { linear: Vec<f64>, quadratic: Vec<Vec<f64>>, multiplier: Arc<ArrayD<f64>> },
    /// `coef · x_i P_j`.
    PositionMomentum { position: usize, momentum: usize, coef: f64 },
    /// `coef · W†(f · Wψ)`.
    GridRoute { frame: Arc<FrameMaps>, samples: Arc<ArrayD<f64>>, coef: f64 },
    /// `coef · A B`.
    Product { left: Arc<QuantizedOperator>, right: Arc<QuantizedOperator>, coef: f64 },
    Dense(Arc<DMatrix<Complex64>>),
}

#[derive(Debug, Clone)]
pub struct QuantizedOperator {
    grid: XGrid,
    terms: Vec<Term>,
    provenance: Provenance,
}

/// Kinetic multiplier, potential and constant of an operator of the form
/// `T(P) + V(x) + c`.
#[derive(Debug, Clone)]
pub struct SplitForm {
    pub kinetic: ArrayD<f64>,
    pub potential: ArrayD<f64>,
    pub constant: f64,
}

fn momentum_multiplier(grid: &XGrid, linear: &[f64], quadratic: &[Vec<f64>]) -> ArrayD<f64> {
    let d = grid.dim();
    let n = grid.n();
    let ks = grid.wavenumbers();
    let hbar = grid.hbar();
    let mut out = Vec::with_capacity(grid.len());
    for flat in 0..grid.len() {
        let idx = unflatten(flat, n, d);
        let nyq: Vec<bool> = (0..d).map(|a| idx[a] == n / 2).collect();
        let k: Vec<f64> = (0..d).map(|a| hbar * ks[idx[a]]).collect();
        let mut m = 0.0;
        for j in 0..d {
            if !nyq[j] {
                m += linear[j] * k[j];
            }
            for l in 0..d {
                if j == l || (!nyq[j] && !nyq[l]) {
                    m += quadratic[j][l] * k[j] * k[l];
                }
            }
        }
        out.push(m);
    }
    ArrayD::from_shape_vec(IxDyn(&grid.shape()), out).expect("shape")
}

fn fft_all(v: &mut ArrayD<Complex64>, dir: FftDirection) {
    for a in 0..v.ndim() {
        fft::fft_axis(v, a, dir);
    }
}

/// `P_j ψ = −iħ ∂_j ψ` (Nyquist bin dropped).
pub fn momentum_apply(psi: &XState, j: usize) -> XState {
    let g = psi.grid();
    let d = fft::derivative(psi.values(), j, g.dx(), 1);
    psi.with_values(d.mapv(|v| -I * g.hbar() * v))
}

/// `x_i ψ`.
pub fn position_apply(psi: &XState, i: usize) -> XState {
    let g = psi.grid();
    let xs: Vec<Complex64> = g.coords().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut v = psi.values().clone();
    fft::scale_axis(&mut v, i, &xs);
    psi.with_values(v)
}

impl Term {
    fn apply(&self, psi: &XState) -> Result<ArrayD<Complex64>> {
        let g = psi.grid();
        Ok(match self {
            Term::Constant(c) => psi.values().mapv(|v| v * c),
            Term::Multiplication(f) => {
                let mut v = psi.values().clone();
                v.zip_mut_with(f, |a, b| *a *= *b);
                v
            }
            Term::Momentum { multiplier, .. } => {
                let mut v = psi.values().clone();
                fft_all(&mut v, FftDirection::Forward);
                let inv = 1.0 / g.len() as f64;
                v.zip_mut_with(multiplier, |a, m| *a *= m * inv);
                fft_all(&mut v, FftDirection::Inverse);
                v
            }
            Term::PositionMomentum { position, momentum, coef } => {
                position_apply(&momentum_apply(psi, *momentum), *position).values().mapv(|v| v * *coef)
            }
            Term::GridRoute { frame, samples, coef } => {
                let phi = frame.analyze_unchecked(psi)?;
                let phi = phi.multiply_real(samples);
                frame.synthesize(&phi)?.values().mapv(|v| v * *coef)
            }
            Term::Product { left, right, coef } => left.apply(&right.apply(psi)?)?.values().mapv(|v| v * *coef),
            Term::Dense(m) => {
                let x = DVector::from_iterator(g.len(), psi.values().iter().copied());
                let y = m.as_ref() * x;
                ArrayD::from_shape_vec(IxDyn(&g.shape()), y.iter().copied().collect()).expect("shape")
            }
        })
    }
}

impl QuantizedOperator {
    pub fn new(grid: XGrid, terms: Vec<Term>, provenance: Provenance) -> Self {
        Self { grid, terms, provenance }
    }

    pub fn zero(grid: XGrid) -> Self {
        Self::new(grid, vec![], Provenance { symbol: "0".into(), window: String::new(), route: "assembled".into() })
    }

    pub fn identity(grid: XGrid) -> Self {
        Self::constant(grid, 1.0)
    }

    pub fn constant(grid: XGrid, c: f64) -> Self {
        Self::new(
            grid,
            vec![Term::Constant(Complex64::new(c, 0.0))],
            Provenance { symbol: format!("{c}"), window: String::new(), route: "closed-form".into() },
        )
    }

    pub fn multiplication(grid: XGrid, f: ArrayD<f64>, label: &str) -> Result<Self> {
        if f.shape() != grid.shape().as_slice() {
            return Err(Error::GridMismatch("multiplier shape does not match the x-grid".into()));
        }
        Ok(Self::new(
            grid,
            vec![Term::Multiplication(Arc::new(f))],
            Provenance { symbol: label.into(), window: String::new(), route: "closed-form".into() },
        ))
    }

    /// `Σ b_j P_j + Σ c_jk P_j P_k`.
    pub fn momentum_polynomial(grid: XGrid, linear: Vec<f64>, quadratic: Vec<Vec<f64>>) -> Self {
        let multiplier = Arc::new(momentum_multiplier(&grid, &linear, &quadratic));
        Self::new(
            grid,
            vec![Term::Momentum { linear, quadratic, multiplier }],
            Provenance { symbol: "momentum polynomial".into(), window: String::new(), route: "closed-form".into() },
        )
    }

    /// `P²/2M`.
    pub fn kinetic(grid: XGrid, mass: f64) -> Self {
        let d = grid.dim();
        let quad = (0..d).map(|j| (0..d).map(|k| if j == k { 0.5 / mass } else { 0.0 }).collect()).collect();
        Self::momentum_polynomial(grid, vec![0.0; d], quad).with_symbol("p²/2M")
    }

    /// `L_z = x₁P₂ − x₂P₁`.
    pub fn angular_momentum_z(grid: XGrid) -> Result<Self> {
        if grid.dim() < 2 {
            return Err(Error::UnsupportedDimension("angular momentum needs dim ≥ 2".into()));
        }
        Ok(Self::new(
            grid,
            vec![
                Term::PositionMomentum { position: 0, momentum: 1, coef: 1.0 },
                Term::PositionMomentum { position: 1, momentum: 0, coef: -1.0 },
            ],
            Provenance { symbol: "L_z".into(), window: String::new(), route: "closed-form".into() },
        ))
    }

    pub fn dense(grid: XGrid, m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != grid.len() || m.ncols() != grid.len() {
            return Err(Error::GridMismatch("dense matrix size does not match the x-grid".into()));
        }
        Ok(Self::new(
            grid,
            vec![Term::Dense(Arc::new(m))],
            Provenance { symbol: "matrix".into(), window: String::new(), route: "dense".into() },
        ))
    }

    pub fn grid(&self) -> &XGrid {
        &self.grid
    }
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_symbol(mut self, label: &str) -> Self {
        self.provenance.symbol = label.into();
        self
    }
    pub fn with_window(mut self, label: &str) -> Self {
        self.provenance.window = label.into();
        self
    }
    pub fn with_route(mut self, label: &str) -> Self {
        self.provenance.route = label.into();
        self
    }

    pub fn apply(&self, psi: &XState) -> Result<XState> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch("state is not on the operator's x-grid".into()));
        }
        let mut out = ArrayD::<Complex64>::zeros(IxDyn(&self.grid.shape()));
        for t in &self.terms {
            out += &t.apply(psi)?;
        }
        Ok(psi.with_values(out))
    }

    /// `⟨ψ|Fψ⟩`.
    pub fn expectation(&self, psi: &XState) -> Result<Complex64> {
        psi.inner(&self.apply(psi)?)
    }

    fn scaled_terms(&self, a: f64) -> Vec<Term> {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Constant(c) => Term::Constant(c * a),
                Term::Multiplication(f) => Term::Multiplication(Arc::new(f.mapv(|v| v * a))),
                Term::Momentum { linear, quadratic, multiplier } => Term::Momentum {
                    linear: linear.iter().map(|v| v * a).collect(),
                    quadratic: quadratic.iter().map(|r| r.iter().map(|v| v * a).collect()).collect(),
                    multiplier: Arc::new(multiplier.mapv(|v| v * a)),
                },
                Term::PositionMomentum { position, momentum, coef } => {
                    Term::PositionMomentum { position: *position, momentum: *momentum, coef: coef * a }
                }
                Term::GridRoute { frame, samples, coef } => {
                    Term::GridRoute { frame: frame.clone(), samples: samples.clone(), coef: coef * a }
                }
                Term::Product { left, right, coef } => {
                    Term::Product { left: left.clone(), right: right.clone(), coef: coef * a }
                }
                Term::Dense(m) => Term::Dense(Arc::new(m.as_ref() * Complex64::new(a, 0.0))),
            })
            .collect()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.grid, self.scaled_terms(a), self.provenance.clone())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &QuantizedOperator, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("operators on different x-grids".into()));
        }
        let mut terms = self.scaled_terms(a);
        terms.extend(other.scaled_terms(b));
        let prov = Provenance {
            symbol: format!("{a}·({}) + {b}·({})", self.provenance.symbol, other.provenance.symbol),
            window: if self.provenance.window.is_empty() {
                other.provenance.window.clone()
            } else {
                self.provenance.window.clone()
            },
            route: if self.provenance.route == other.provenance.route {
                self.provenance.route.clone()
            } else {
                "assembled".into()
            },
        };
        Ok(Self::new(self.grid, terms, prov))
    }

    pub fn add(&self, other: &QuantizedOperator) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }
    pub fn sub(&self, other: &QuantizedOperator) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &QuantizedOperator) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("operators on different x-grids".into()));
        }
        Ok(Self::new(
            self.grid,
            vec![Term::Product { left: Arc::new(self.clone()), right: Arc::new(other.clone()), coef: 1.0 }],
            Provenance {
                symbol: format!("({})∘({})", self.provenance.symbol, other.provenance.symbol),
                window: self.provenance.window.clone(),
                route: "composite".into(),
            },
        ))
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &QuantizedOperator) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    /// `T(P) + V(x) + c` decomposition when every term is of that shape.
    pub fn split_form(&self) -> Option<SplitForm> {
        let shape = self.grid.shape();
        let mut kinetic = ArrayD::<f64>::zeros(IxDyn(&shape));
        let mut potential = ArrayD::<f64>::zeros(IxDyn(&shape));
        let mut constant = 0.0;
        for t in &self.terms {
            match t {
                Term::Constant(c) if c.im.abs() <= 1e-14 * c.re.abs().max(1.0) => constant += c.re,
                Term::Multiplication(f) => potential += f.as_ref(),
                Term::Momentum { multiplier, .. } => kinetic += multiplier.as_ref(),
                _ => return None,
            }
        }
        Some(SplitForm { kinetic, potential, constant })
    }

    pub fn is_splittable(&self) -> bool {
        self.split_form().is_some()
    }

    /// Matrix acting on grid values (row-major over the x-grid storage order).
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        let n = self.grid.len();
        if n > DENSE_LIMIT {
            return Err(Error::Capability(format!("dense assembly limited to {DENSE_LIMIT} points, grid has {n}")));
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        let mut e = XState::zeros(self.grid);
        for j in 0..n {
            e.values_mut().as_slice_mut().expect("standard layout")[j] = ONE;
            let col = self.apply(&e)?;
            for (i, v) in col.values().iter().enumerate() {
                m[(i, j)] = *v;
            }
            e.values_mut().as_slice_mut().expect("standard layout")[j] = Complex64::new(0.0, 0.0);
        }
        Ok(m)
    }

    /// `max|A − A†| / max|A|` of the dense form.
    pub fn hermiticity_residual(&self) -> Result<f64> {
        let m = self.to_dense()?;
        let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let diff = (&m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(diff / scale)
    }
}

/// Hermitian eigendecomposition, eigenvalues ascending. Real-symmetric
/// matrices take the real solver.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let imag = m.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let (vals, vecs): (Vec<f64>, DMatrix<Complex64>) = if imag <= 1e-14 * scale {
        let re = m.map(|v| v.re);
        let re = (&re + re.transpose()) * 0.5;
        let e = re.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|v| Complex64::new(v, 0.0)))
    } else {
        let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let e = h.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, order[c])]);
    (sorted_vals, sorted_vecs)
}

pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    hermitian_eigen(m).0
}

fn window_label(w: &Window) -> String {
    match w.family() {
        WindowFamily::Hermite1d { n } => format!("hermite1d(n={n}, λ={})", w.lambda()),
        WindowFamily::Planar2d { m } => format!("planar2d(m={m}, λ={})", w.lambda()),
        WindowFamily::Radial3d { s, m } => format!("radial3d(S={s}, m={m}, λ={})", w.lambda()),
    }
}

/// Fraction of the tapered symbol's spectral energy in the upper half of
/// the band of some axis.
pub fn aliasing_ratio(samples: &ArrayD<f64>, grid: &PhaseGrid) -> f64 {
    let d = grid.dim();
    let (pc, qc) = (grid.p_coords(), grid.q_coords());
    let (pe, qe) = (grid.p_extent(), grid.q_extent());
    let taper = |x: f64, lo: f64, hi: f64| {
        let c = 0.5 * (lo + hi);
        let s = (hi - lo) / 8.0;
        (-(x - c).powi(2) / (2.0 * s * s)).exp()
    };
    let tp: Vec<f64> = pc.iter().map(|&p| taper(p, pe.lo, pe.hi)).collect();
    let tq: Vec<f64> = qc.iter().map(|&q| taper(q, qe.lo, qe.hi)).collect();
    let mut v = samples.mapv(|x| Complex64::new(x, 0.0));
    for a in 0..d {
        let tpc: Vec<Complex64> = tp.iter().map(|&t| Complex64::new(t, 0.0)).collect();
        let tqc: Vec<Complex64> = tq.iter().map(|&t| Complex64::new(t, 0.0)).collect();
        fft::scale_axis(&mut v, grid.p_axis(a), &tpc);
        fft::scale_axis(&mut v, grid.q_axis(a), &tqc);
    }
    fft_all(&mut v, FftDirection::Forward);
    let shape = grid.shape();
    let mut high = 0.0;
    let mut total = 0.0;
    for (idx, x) in v.indexed_iter() {
        let e = x.norm_sqr();
        total += e;
        let upper = (0..2 * d).any(|a| {
            let n = shape[a];
            let j = idx[a];
            let jc = if j < n / 2 { j } else { n - j };
            jc > n / 4
        });
        if upper {
            high += e;
        }
    }
    if total > 0.0 {
        high / total
    } else {
        0.0
    }
}

/// Grid route `ψ ↦ W†(f · Wψ)`.
pub fn quantize_grid_route(f: &Symbol, frame: &FrameMaps) -> Result<QuantizedOperator> {
    let grid = frame.phase_grid();
    if f.dim() != grid.dim() {
        return Err(Error::GridMismatch("symbol and frame dimensions differ".into()));
    }
    let samples = f.sample(grid)?;
    let ratio = aliasing_ratio(&samples, grid);
    if ratio > ALIASING_TOLERANCE {
        return Err(Error::SymbolAliasing { ratio });
    }
    Ok(QuantizedOperator::new(
        *frame.x_grid(),
        vec![Term::GridRoute { frame: Arc::new(frame.clone()), samples: Arc::new(samples), coef: 1.0 }],
        Provenance { symbol: f.label().into(), window: window_label(frame.window()), route: "grid".into() },
    ))
}

/// Result of mollifying a potential with the window profile.
#[derive(Debug, Clone)]
pub struct MollifiedPotential {
    pub operator: QuantizedOperator,
    pub v_eff: ArrayD<f64>,
    pub v: ArrayD<f64>,
    /// `max |V_eff − V|` over the grid.
    pub correction: f64,
}

/// `V_eff(x) = Σ_u κ(u) V(x − u) Δx^d` with `κ(u) = h^d |Φ(u)|²` on the frame
/// offsets (unit mass by construction).
pub fn quantize_potential<V: Fn(&[f64]) -> f64>(v: V, frame: &FrameMaps) -> Result<MollifiedPotential> {
    let xg = *frame.x_grid();
    let d = xg.dim();
    let np = frame.n_p();
    let dx = xg.dx();
    let weight = xg.h().powi(d as i32) * xg.cell_volume();
    let kernel: Vec<(Vec<f64>, f64)> = frame
        .window_samples()
        .iter()
        .enumerate()
        .filter(|(_, w)| w.norm_sqr() > 0.0)
        .map(|(s, w)| {
            let idx = unflatten(s, np, d);
            let u: Vec<f64> = (0..d).map(|a| (idx[a] as f64 - (np / 2) as f64) * dx).collect();
            (u, w.norm_sqr() * weight)
        })
        .collect();
    let mut veff = Vec::with_capacity(xg.len());
    let mut vraw = Vec::with_capacity(xg.len());
    let mut y = vec![0.0; d];
    xg.for_each_point(|_, x| {
        let mut acc = 0.0;
        for (u, k) in &kernel {
            for a in 0..d {
                y[a] = x[a] - u[a];
            }
            acc += k * v(&y);
        }
        veff.push(acc);
        vraw.push(v(x));
    });
    let v_eff = ArrayD::from_shape_vec(IxDyn(&xg.shape()), veff).expect("shape");
    let v = ArrayD::from_shape_vec(IxDyn(&xg.shape()), vraw).expect("shape");
    if v_eff.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("potential is not finite on the mollification support".into()));
    }
    let correction = v_eff.iter().zip(v.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let operator = QuantizedOperator::multiplication(xg, v_eff.clone(), "V(q)")?
        .with_window(&window_label(frame.window()))
        .with_route("mollified");
    Ok(MollifiedPotential { operator, v_eff, v, correction })
}

/// Window-determined energy offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConstants {
    pub e0: f64,
    pub e1: f64,
    pub chi2: f64,
    pub eta2: f64,
    pub lambda: f64,
    pub mass: f64,
    pub omega: f64,
}

/// `E₀ = ħ²χ²/(2Mλ²)` with `χ² = λ² h^d ∫|∇Φ|²`, and `E₁ = ½Mω²λ²η²` with
/// `η² = h^d ∫|u|²|Φ|² / λ²`.
pub fn energy_constants(window: &Window, mass: f64, omega: f64) -> Result<EnergyConstants> {
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
    }
    let lam = window.lambda();
    let chi2 = window.gradient_energy()? * lam * lam;
    let eta2 = window.second_moment() / (lam * lam);
    let hbar = window.hbar();
    Ok(EnergyConstants {
        e0: hbar * hbar * chi2 / (2.0 * mass * lam * lam),
        e1: 0.5 * mass * omega * omega * lam * lam * eta2,
        chi2,
        eta2,
        lambda: lam,
        mass,
        omega,
    })
}

/// `H = −ħ²Δ/2M + E₀`.
pub fn free_hamiltonian(frame: &FrameMaps, mass: f64) -> Result<(QuantizedOperator, EnergyConstants)> {
    let c = energy_constants(frame.window(), mass, 0.0)?;
    let xg = *frame.x_grid();
    let op = QuantizedOperator::kinetic(xg, mass)
        .add(&QuantizedOperator::constant(xg, c.e0))?
        .with_symbol("p²/2M")
        .with_window(&window_label(frame.window()))
        .with_route("closed-form");
    Ok((op, c))
}

/// Free Hamiltonian plus the mollified potential.
pub fn potential_hamiltonian<V: Fn(&[f64]) -> f64>(
    frame: &FrameMaps,
    mass: f64,
    v: V,
) -> Result<(QuantizedOperator, MollifiedPotential, EnergyConstants)> {
    let (free, c) = free_hamiltonian(frame, mass)?;
    let pot = quantize_potential(v, frame)?;
    let op = free.add(&pot.operator)?.with_symbol("p²/2M + V(q)").with_route("closed-form");
    Ok((op, pot, c))
}

/// `H = P²/2M + ½Mω²x² + E₀ + E₁`, the potential taken through the
/// mollification (which supplies `E₁`).
pub fn harmonic_hamiltonian(frame: &FrameMaps, mass: f64, omega: f64) -> Result<(QuantizedOperator, EnergyConstants)> {
    let k = 0.5 * mass * omega * omega;
    let (op, _, _) = potential_hamiltonian(frame, mass, |x: &[f64]| k * x.iter().map(|v| v * v).sum::<f64>())?;
    Ok((op.with_symbol("p²/2M + ½Mω²q²"), energy_constants(frame.window(), mass, omega)?))
}

/// Window moments entering the closed-form route.
#[derive(Debug, Clone)]
pub struct WindowMoments {
    /// `h^d ∫ u_i |Φ|²`.
    pub position: Vec<f64>,
    /// `h^d ∫ Φ* (−iħ∂_j Φ)`.
    pub momentum: Vec<Complex64>,
    /// `h^d ∫ u_i Φ* (−iħ∂_j Φ)`.
    pub position_momentum: Vec<Vec<Complex64>>,
    /// `h^d ∫ ∂_jΦ* ∂_kΦ`.
    pub gradient: Vec<Vec<Complex64>>,
}

pub fn window_moments(window: &Window) -> WindowMoments {
    let d = window.dim();
    let hbar = window.hbar();
    let position = (0..d).map(|i| window.reduced_integral(|u, f, _| Complex64::new(u[i] * f.norm_sqr(), 0.0)).re).collect();
    let momentum = (0..d).map(|j| window.reduced_integral(|_, f, g| f.conj() * (-I * hbar) * g[j])).collect();
    let position_momentum = (0..d)
        .map(|i| (0..d).map(|j| window.reduced_integral(|u, f, g| f.conj() * (-I * hbar) * g[j] * u[i])).collect())
        .collect();
    let gradient =
        (0..d).map(|j| (0..d).map(|k| window.reduced_integral(|_, _, g| g[j].conj() * g[k])).collect()).collect();
    WindowMoments { position, momentum, position_momentum, gradient }
}

/// Closed-form reduction of a polynomial symbol:
/// `ΠV(q)Π = V_eff(x)`, `Π p_j Π = P_j`, `Π q_i p_j Π = x_i P_j − ⟨u_i p_j⟩_Φ`,
/// `Π p_j p_k Π = P_j P_k + ħ² ⟨∂_jΦ|∂_kΦ⟩`. Requires a centred window with
/// zero mean momentum.
pub fn quantize_closed_form(f: &Symbol, frame: &FrameMaps) -> Result<QuantizedOperator> {
    let poly = f
        .as_polynomial()
        .ok_or_else(|| Error::Capability("closed-form route needs a polynomial symbol".into()))?;
    let d = poly.dim();
    let xg = *frame.x_grid();
    if d != xg.dim() {
        return Err(Error::GridMismatch("symbol and frame dimensions differ".into()));
    }
    let mom = window_moments(frame.window());
    let centred = mom.position.iter().all(|v| v.abs() < 1e-10) && mom.momentum.iter().all(|v| v.norm() < 1e-10);
    if !centred {
        return Err(Error::Capability("closed-form route needs a centred window with zero mean momentum".into()));
    }
    let hbar = xg.hbar();
    let mut potential = Polynomial::zero(d);
    let mut linear = vec![0.0; d];
    let mut quadratic = vec![vec![0.0; d]; d];
    let mut constant = Complex64::new(0.0, 0.0);
    let mut terms = Vec::new();
    for (exps, &c) in poly.terms() {
        let (pe, qe) = exps.split_at(d);
        let p_deg: u32 = pe.iter().sum();
        let q_deg: u32 = qe.iter().sum();
        let p_vars: Vec<usize> = pe.iter().enumerate().flat_map(|(j, &e)| std::iter::repeat_n(j, e as usize)).collect();
        match (p_deg, q_deg) {
            (0, _) => potential = potential.add(&Polynomial::monomial(d, exps.clone(), c)),
            (1, 0) => linear[p_vars[0]] += c,
            (1, 1) => {
                let i = qe.iter().position(|&e| e == 1).expect("one position factor");
                let j = p_vars[0];
                terms.push(Term::PositionMomentum { position: i, momentum: j, coef: c });
                constant -= mom.position_momentum[i][j] * c;
            }
            (2, 0) => {
                let (j, k) = (p_vars[0], p_vars[1]);
                quadratic[j][k] += 0.5 * c;
                quadratic[k][j] += 0.5 * c;
                let g = 0.5 * (mom.gradient[j][k] + mom.gradient[k][j]);
                constant += g * (hbar * hbar * c);
            }
            _ => {
                return Err(Error::Capability(
                    "closed-form route covers degree ≤ 2 in p with constant quadratic and at most linear q-coefficients on momentum terms".into(),
                ))
            }
        }
    }
    if linear.iter().any(|v| *v != 0.0) || quadratic.iter().flatten().any(|v| *v != 0.0) {
        let multiplier = Arc::new(momentum_multiplier(&xg, &linear, &quadratic));
        terms.push(Term::Momentum { linear, quadratic, multiplier });
    }
    if !potential.is_zero() {
        let pot = quantize_potential(|x: &[f64]| potential.eval(&vec![0.0; d], x), frame)?;
        terms.extend(pot.operator.terms().iter().cloned());
    }
    if constant != Complex64::new(0.0, 0.0) {
        terms.push(Term::Constant(constant));
    }
    Ok(QuantizedOperator::new(
        xg,
        terms,
        Provenance { symbol: f.label().into(), window: window_label(frame.window()), route: "closed-form".into() },
    ))
}

// ---------------------------------------------------------------------------
// Spin

/// Standard `(2S+1)`-dimensional angular-momentum matrices in the basis
/// `m = S, S−1, …, −S`.
#[derive(Debug, Clone)]
pub struct SpinAlgebra {
    pub s: usize,
    pub hbar: f64,
    pub sx: DMatrix<Complex64>,
    pub sy: DMatrix<Complex64>,
    pub sz: DMatrix<Complex64>,
}

impl SpinAlgebra {
    pub fn new(s: usize, hbar: f64) -> Self {
        let dim = 2 * s + 1;
        let m_of = |i: usize| s as f64 - i as f64;
        let mut sp = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 1..dim {
            let m = m_of(i);
            let ss = s as f64;
            sp[(i - 1, i)] = Complex64::new(hbar * (ss * (ss + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
        let sm = sp.adjoint();
        let sx = (&sp + &sm) * Complex64::new(0.5, 0.0);
        let sy = (&sp - &sm) * Complex64::new(0.0, -0.5);
        let sz = DMatrix::from_fn(dim, dim, |r, c| if r == c { Complex64::new(hbar * m_of(r), 0.0) } else { ONE * 0.0 });
        Self { s, hbar, sx, sy, sz }
    }

    pub fn components(&self) -> [&DMatrix<Complex64>; 3] {
        [&self.sx, &self.sy, &self.sz]
    }

    /// `max_{ij} ‖[S_i, S_j] − iħ ε_ijk S_k‖_max`.
    pub fn commutator_residual(&self) -> f64 {
        let c = self.components();
        let mut worst: f64 = 0.0;
        for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let comm = c[i] * c[j] - c[j] * c[i];
            let want = c[k] * (I * self.hbar);
            worst = worst.max((comm - want).iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
        worst
    }

    /// `‖S² − ħ²S(S+1)·1‖_max`.
    pub fn casimir_residual(&self) -> f64 {
        let c = self.components();
        let s2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        let ss = self.s as f64;
        let want = DMatrix::<Complex64>::identity(2 * self.s + 1, 2 * self.s + 1) * Complex64::new(self.hbar * self.hbar * ss * (ss + 1.0), 0.0);
        (s2 - want).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Matrices `⟨Y_S^m| ℓ_i |Y_S^{m'}⟩` of the orbital angular momentum of the
/// window's angular factor, by sphere quadrature (basis `m = S..−S`). For
/// a window `Ψ(r)Y_S^m` these are the spin matrices appearing in
/// `Π q∧p Π = L − S`.
pub fn window_spin_matrices(s: usize, hbar: f64) -> [DMatrix<Complex64>; 3] {
    let dim = 2 * s + 1;
    let ms: Vec<i32> = (0..dim).map(|i| s as i32 - i as i32).collect();
    let quad = sphere_quadrature(2 * s + 8, 4 * s + 16);
    let mut out = [DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim)];
    for &(th, ph, w) in &quad {
        let ys: Vec<Complex64> = ms.iter().map(|&m| spherical_harmonic(s, m, th, ph)).collect();
        let dth: Vec<Complex64> = ms.iter().map(|&m| spherical_harmonic_dtheta(s, m, th, ph)).collect();
        let cot = th.cos() / th.sin();
        for (c, &m) in ms.iter().enumerate() {
            let dph = ys[c] * Complex64::new(0.0, m as f64);
            let lx = (dth[c] * ph.sin() + dph * (cot * ph.cos())) * (I * hbar);
            let ly = (-dth[c] * ph.cos() + dph * (cot * ph.sin())) * (I * hbar);
            let lz = dph * (-I * hbar);
            for r in 0..dim {
                let yr = ys[r].conj() * w;
                out[0][(r, c)] += yr * lx;
                out[1][(r, c)] += yr * ly;
                out[2][(r, c)] += yr * lz;
            }
        }
    }
    out
}

/// `h^d ⟨Φ| ℓ_z |Φ⟩`, the winding (or `m_S`) angular momentum carried by the
/// window.
pub fn window_spin_z(window: &Window) -> Result<f64> {
    if window.dim() < 2 {
        return Err(Error::UnsupportedDimension("spin needs dim ≥ 2".into()));
    }
    let hbar = window.hbar();
    Ok(window.reduced_integral(|u, f, g| f.conj() * (-I * hbar) * (g[1] * u[0] - g[0] * u[1])).re)
}

/// `(q∧p)_z = q₁p₂ − q₂p₁`.
pub fn orbital_symbol(dim: usize) -> Result<Symbol> {
    if dim < 2 {
        return Err(Error::UnsupportedDimension("orbital angular momentum needs dim ≥ 2".into()));
    }
    let mut e1 = vec![0u32; 2 * dim];
    e1[dim] = 1;
    e1[1] = 1;
    let mut e2 = vec![0u32; 2 * dim];
    e2[dim + 1] = 1;
    e2[0] = 1;
    let poly = Polynomial::monomial(dim, e1, 1.0).add(&Polynomial::monomial(dim, e2, -1.0));
    Ok(Symbol::polynomial(poly).labeled("(q∧p)_z"))
}

/// Angular-momentum operators of a frame and the grid-route image of the
/// classical orbital symbol.
#[derive(Debug, Clone)]
pub struct AngularSpinReport {
    pub l_z: QuantizedOperator,
    /// Grid-route `Π (q∧p)_z Π`.
    pub projected_orbital: QuantizedOperator,
    /// `Q₁P₂ − Q₂P₁` from grid-route `ΠqΠ` and `ΠpΠ`, the alternative ordering.
    pub ordered_product: QuantizedOperator,
    /// `S_z` of the subspace, `h^d⟨Φ|ℓ_z|Φ⟩`.
    pub spin_z: f64,
    pub j_z: QuantizedOperator,
}

impl AngularSpinReport {
    /// `‖(Π(q∧p)_zΠ − (L_z − S_z))ψ‖ / ‖ψ‖`.
    pub fn identity_residual(&self, psi: &XState) -> Result<f64> {
        let lhs = self.projected_orbital.apply(psi)?;
        let rhs = self.l_z.apply(psi)?.combine(ONE, psi, Complex64::new(-self.spin_z, 0.0))?;
        Ok(lhs.distance(&rhs)? / psi.norm())
    }

    /// `⟨ψ|(L_z − Π(q∧p)_zΠ)|ψ⟩ / ‖ψ‖²`, the measured spin.
    pub fn measured_spin(&self, psi: &XState) -> Result<f64> {
        let a = self.l_z.expectation(psi)?;
        let b = self.projected_orbital.expectation(psi)?;
        Ok((a - b).re / psi.norm_sq())
    }
}

pub fn angular_spin_operators(frame: &FrameMaps) -> Result<AngularSpinReport> {
    let d = frame.x_grid().dim();
    if d < 2 {
        return Err(Error::UnsupportedDimension("angular momentum needs dim ≥ 2".into()));
    }
    let xg = *frame.x_grid();
    let l_z = QuantizedOperator::angular_momentum_z(xg)?;
    let projected_orbital = quantize_grid_route(&orbital_symbol(d)?, frame)?;
    let q = |i| quantize_grid_route(&Symbol::q(d, i), frame);
    let p = |i| quantize_grid_route(&Symbol::p(d, i), frame);
    let ordered_product = q(0)?.compose(&p(1)?)?.sub(&q(1)?.compose(&p(0)?)?)?.with_symbol("Q₁P₂ − Q₂P₁");
    let spin_z = window_spin_z(frame.window())?;
    let j_z = l_z.add(&QuantizedOperator::constant(xg, spin_z))?.with_symbol("J_z");
    Ok(AngularSpinReport { l_z, projected_orbital, ordered_product, spin_z, j_z })
}

// ---------------------------------------------------------------------------
// Magnetic Hamiltonian

/// Out-of-plane magnetic field. Only uniform fields are accepted.
#[derive(Clone)]
pub enum MagneticField {
    Uniform(f64),
    Profile(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for MagneticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Uniform(b) => write!(f, "Uniform({b})"),
            Self::Profile(_) => write!(f, "Profile(..)"),
        }
    }
}

impl MagneticField {
    fn uniform_value(&self, grid: &XGrid) -> Result<f64> {
        match self {
            Self::Uniform(b) => Ok(*b),
            Self::Profile(f) => {
                let s = grid.sample_real(|x| f(x));
                let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi - lo > 1e-12 * hi.abs().max(lo.abs()).max(1.0) {
                    return Err(Error::NonUniformField);
                }
                Ok(lo)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MagneticHamiltonian {
    pub operator: QuantizedOperator,
    pub field: f64,
    /// `⟨L_z − Π(q∧p)_zΠ⟩` measured on a probe state.
    pub measured_spin: f64,
    /// `(e/2M) B s_z`.
    pub spin_term: f64,
    /// `−(g+1)(e/2M) B s_z` when a g-factor is configured.
    pub anomalous_term: Option<f64>,
    pub constants: EnergyConstants,
}

/// `H = P²/2M − (eB/2M)L_z + (e²B²/8M)|x|²_eff + (e/2M)B s_z + E₀`
/// (+ optional `H_I`), with `A = ½B∧q` and `s_z` read off the grid-route
/// quantization of `(q∧p)_z`.
pub fn magnetic_hamiltonian(
    frame: &FrameMaps,
    mass: f64,
    charge: f64,
    field: &MagneticField,
    g_factor: Option<f64>,
) -> Result<MagneticHamiltonian> {
    let xg = *frame.x_grid();
    if xg.dim() < 2 {
        return Err(Error::UnsupportedDimension("magnetic Hamiltonian needs dim ≥ 2".into()));
    }
    let b = field.uniform_value(&xg)?;
    let (free, constants) = free_hamiltonian(frame, mass)?;
    let report = angular_spin_operators(frame)?;
    let probe = sign_probe(&xg, frame.window().lambda());
    let measured_spin = report.measured_spin(&probe)?;
    let larmor = charge * b / (2.0 * mass);
    let k = charge * charge * b * b / (8.0 * mass);
    let diamagnetic = quantize_potential(|x: &[f64]| k * (x[0] * x[0] + x[1] * x[1]), frame)?;
    let spin_term = larmor * measured_spin;
    let mut op = free.add(&report.l_z.scaled(-larmor))?.add(&diamagnetic.operator)?;
    op = op.add(&QuantizedOperator::constant(xg, spin_term))?;
    let anomalous_term = g_factor.map(|g| -(g + 1.0) * larmor * measured_spin);
    if let Some(hi) = anomalous_term {
        op = op.add(&QuantizedOperator::constant(xg, hi))?;
    }
    let op = op
        .with_symbol("(p − eA)²/2M")
        .with_window(&window_label(frame.window()))
        .with_route("closed-form");
    Ok(MagneticHamiltonian { operator: op, field: b, measured_spin, spin_term, anomalous_term, constants })
}

/// `∫ f ρ dp dq` for a density supported in the frame's subspace. Components
/// leaking out of the subspace by more than [`SUBSPACE_TOLERANCE`] are
/// rejected.
pub fn semiclassical_expectation(f: &Symbol, density: &DensityModel, frame: &FrameMaps) -> Result<f64> {
    for (_, phi) in density.components() {
        let proj = frame.project(phi)?;
        let residual = proj.distance(phi)? / phi.norm();
        if residual > SUBSPACE_TOLERANCE {
            return Err(Error::OutOfSubspace { residual });
        }
    }
    expectation(density, f)
}

/// `h^{−d}` times the `(2S+1)` multiplicity: the trace density of a
/// subspace projector per unit phase-space volume.
pub fn state_density(window: &Window) -> f64 {
    let mult = match window.family() {
        WindowFamily::Radial3d { s, .. } => (2 * s + 1) as f64,
        _ => 1.0,
    };
    mult / (2.0 * PI * window.hbar()).powi(window.dim() as i32)
}
