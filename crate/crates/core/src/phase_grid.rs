//! Discretized phase space.
//!
//! A [`PhaseGrid`] is a periodic box in `(p, q)` with `dim` momentum axes
//! followed by `dim` position axes. Fields over it are complex arrays in that
//! axis order; quadrature is the plain Riemann sum with weight
//! `(Δp·Δq)^dim` per cell. Classical observables act diagonally, events act
//! as indicator projectors, and densities are finite mixtures of states.

use std::sync::Arc;

use ndarray::{ArrayD, IxDyn, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::symbol::Symbol;

/// Half-open interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// `[-half, half)`.
    pub fn symmetric(half: f64) -> Self {
        Self { lo: -half, hi: half }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_symmetric(&self) -> bool {
        (self.lo + self.hi).abs() <= 1e-12 * self.width().abs().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    dim: usize,
    p_extent: Interval,
    q_extent: Interval,
    n_p: usize,
    n_q: usize,
    hbar: f64,
}

/// Builds a phase grid; every momentum axis shares `p_extent`/`n_p` and every
/// position axis shares `q_extent`/`n_q`.
pub fn make_grid(
    dim: usize,
    p_extent: Interval,
    q_extent: Interval,
    n_p: usize,
    n_q: usize,
    hbar: f64,
) -> Result<PhaseGrid> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(format!("dim = {dim}")));
    }
    for n in [n_p, n_q] {
        if n % 2 == 1 {
            return Err(Error::OddGridCount(n));
        }
        if n < 8 {
            return Err(Error::GridTooSmall(n));
        }
    }
    for e in [p_extent, q_extent] {
        if !(e.hi > e.lo) || !e.lo.is_finite() || !e.hi.is_finite() {
            return Err(Error::EmptyExtent { lo: e.lo, hi: e.hi });
        }
    }
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::NonPositiveHbar(hbar));
    }
    Ok(PhaseGrid { dim, p_extent, q_extent, n_p, n_q, hbar })
}

impl PhaseGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    /// Planck's constant `h = 2πħ`.
    pub fn h(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.hbar
    }
    pub fn n_p(&self) -> usize {
        self.n_p
    }
    pub fn n_q(&self) -> usize {
        self.n_q
    }
    pub fn p_extent(&self) -> Interval {
        self.p_extent
    }
    pub fn q_extent(&self) -> Interval {
        self.q_extent
    }
    pub fn dp(&self) -> f64 {
        self.p_extent.width() / self.n_p as f64
    }
    pub fn dq(&self) -> f64 {
        self.q_extent.width() / self.n_q as f64
    }
    pub fn cell_volume(&self) -> f64 {
        (self.dp() * self.dq()).powi(self.dim as i32)
    }
    pub fn volume(&self) -> f64 {
        (self.p_extent.width() * self.q_extent.width()).powi(self.dim as i32)
    }
    pub fn p_coords(&self) -> Vec<f64> {
        (0..self.n_p).map(|j| self.p_extent.lo + j as f64 * self.dp()).collect()
    }
    pub fn q_coords(&self) -> Vec<f64> {
        (0..self.n_q).map(|j| self.q_extent.lo + j as f64 * self.dq()).collect()
    }
    /// Array axis of the `i`-th momentum component.
    pub fn p_axis(&self, i: usize) -> usize {
        i
    }
    /// Array axis of the `i`-th position component.
    pub fn q_axis(&self, i: usize) -> usize {
        self.dim + i
    }
    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.n_p; self.dim];
        s.extend(std::iter::repeat_n(self.n_q, self.dim));
        s
    }
    pub fn len(&self) -> usize {
        self.n_p.pow(self.dim as u32) * self.n_q.pow(self.dim as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn is_symmetric(&self) -> bool {
        self.p_extent.is_symmetric() && self.q_extent.is_symmetric()
    }
    /// Spectral frequencies conjugate to the momentum axes.
    pub fn p_wavenumbers(&self) -> Vec<f64> {
        fft::wavenumbers(self.n_p, self.dp())
    }
    /// Spectral frequencies conjugate to the position axes.
    pub fn q_wavenumbers(&self) -> Vec<f64> {
        fft::wavenumbers(self.n_q, self.dq())
    }

    /// Visits every cell in storage order with its coordinates.
    pub fn for_each_point<F: FnMut(usize, &[f64], &[f64])>(&self, mut f: F) {
        let ps = self.p_coords();
        let qs = self.q_coords();
        let shape = self.shape();
        let d = self.dim;
        let mut idx = vec![0usize; 2 * d];
        let mut p = vec![0.0; d];
        let mut q = vec![0.0; d];
        for flat in 0..self.len() {
            for i in 0..d {
                p[i] = ps[idx[i]];
                q[i] = qs[idx[d + i]];
            }
            f(flat, &p, &q);
            for ax in (0..2 * d).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
    }

    /// Samples a real function of `(p, q)` on the grid.
    pub fn sample_real<F: Fn(&[f64], &[f64]) -> f64>(&self, f: F) -> ArrayD<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_point(|_, p, q| out.push(f(p, q)));
        ArrayD::from_shape_vec(IxDyn(&self.shape()), out).expect("shape matches length")
    }

    pub(crate) fn check_same(&self, other: &PhaseGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch("fields live on different phase grids".into()));
        }
        Ok(())
    }
}

/// Whether a field is a wavefunction on phase space or a sampled observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    State,
    Symbol,
}

#[derive(Debug, Clone)]
pub struct PhaseField {
    grid: PhaseGrid,
    values: ArrayD<Complex64>,
    role: Role,
}

impl PhaseField {
    pub fn new(grid: PhaseGrid, values: ArrayD<Complex64>, role: Role) -> Result<Self> {
        if values.shape() != grid.shape().as_slice() {
            return Err(Error::GridMismatch(format!(
                "values of shape {:?} on a grid of shape {:?}",
                values.shape(),
                grid.shape()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        if role == Role::Symbol && values.iter().any(|v| v.im.abs() > 1e-12) {
            return Err(Error::InvalidArgument("symbol fields must be real".into()));
        }
        Ok(Self { grid, values, role })
    }

    pub(crate) fn from_parts(grid: PhaseGrid, values: ArrayD<Complex64>, role: Role) -> Self {
        debug_assert_eq!(values.shape(), grid.shape().as_slice());
        Self { grid, values, role }
    }

    pub fn zeros(grid: PhaseGrid, role: Role) -> Self {
        Self { grid, values: ArrayD::zeros(IxDyn(&grid.shape())), role }
    }

    pub fn from_fn<F: Fn(&[f64], &[f64]) -> Complex64>(grid: PhaseGrid, role: Role, f: F) -> Self {
        let mut out = Vec::with_capacity(grid.len());
        grid.for_each_point(|_, p, q| out.push(f(p, q)));
        let values = ArrayD::from_shape_vec(IxDyn(&grid.shape()), out).expect("shape matches length");
        Self { grid, values, role }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }
    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut ArrayD<Complex64> {
        &mut self.values
    }
    pub fn into_values(self) -> ArrayD<Complex64> {
        self.values
    }
    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_values(&self, values: ArrayD<Complex64>) -> Self {
        Self::from_parts(self.grid, values, self.role)
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &PhaseField) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        let s: Complex64 = Zip::from(&self.values)
            .and(&other.values)
            .fold(Complex64::new(0.0, 0.0), |acc, a, b| acc + a.conj() * b);
        Ok(s * self.grid.cell_volume())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.with_values(self.values.mapv(|v| v * c))
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &PhaseField, b: Complex64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let mut v = self.values.clone();
        Zip::from(&mut v).and(&other.values).for_each(|x, y| *x = a * *x + b * *y);
        Ok(self.with_values(v))
    }

    pub fn sub(&self, other: &PhaseField) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &PhaseField) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &PhaseField) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Pointwise product with a real array on the same grid.
    pub fn multiply_real(&self, f: &ArrayD<f64>) -> Self {
        let mut v = self.values.clone();
        Zip::from(&mut v).and(f).for_each(|x, &y| *x *= y);
        self.with_values(v)
    }

    /// Real part as an array (meaningful for symbols).
    pub fn real_values(&self) -> ArrayD<f64> {
        self.values.mapv(|v| v.re)
    }
}

/// Nonnegative density on a phase grid.
#[derive(Debug, Clone)]
pub struct DensityField {
    grid: PhaseGrid,
    values: ArrayD<f64>,
}

impl DensityField {
    pub fn new(grid: PhaseGrid, values: ArrayD<f64>) -> Result<Self> {
        if values.shape() != grid.shape().as_slice() {
            return Err(Error::GridMismatch("density shape".into()));
        }
        Ok(Self { grid, values })
    }
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }
    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.grid.cell_volume()
    }
    /// `∫ f ρ` for a real array sampled on the same grid.
    pub fn integrate_against(&self, f: &ArrayD<f64>) -> f64 {
        Zip::from(&self.values).and(f).fold(0.0, |acc, &r, &g| acc + r * g) * self.grid.cell_volume()
    }
    /// `∫ |ρ − σ|`.
    pub fn l1_distance(&self, other: &DensityField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(Zip::from(&self.values).and(&other.values).fold(0.0, |acc, a, b| acc + (a - b).abs())
            * self.grid.cell_volume())
    }
}

/// Indicator of a phase-space region.
#[derive(Clone)]
pub struct Region(Arc<dyn Fn(&[f64], &[f64]) -> bool + Send + Sync>);

impl std::fmt::Debug for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Region")
    }
}

impl Region {
    pub fn new<F: Fn(&[f64], &[f64]) -> bool + Send + Sync + 'static>(f: F) -> Self {
        Self(Arc::new(f))
    }
    pub fn full() -> Self {
        Self::new(|_, _| true)
    }
    pub fn empty() -> Self {
        Self::new(|_, _| false)
    }
    /// Product of half-open boxes `[p_lo, p_hi) × [q_lo, q_hi)` per component.
    pub fn boxed(p_lo: Vec<f64>, p_hi: Vec<f64>, q_lo: Vec<f64>, q_hi: Vec<f64>) -> Self {
        Self::new(move |p, q| {
            p.iter().enumerate().all(|(i, &x)| x >= p_lo[i] && x < p_hi[i])
                && q.iter().enumerate().all(|(i, &x)| x >= q_lo[i] && x < q_hi[i])
        })
    }
    pub fn contains(&self, p: &[f64], q: &[f64]) -> bool {
        (self.0)(p, q)
    }
    pub fn and(&self, other: &Region) -> Region {
        let (a, b) = (self.0.clone(), other.0.clone());
        Region::new(move |p, q| a(p, q) && b(p, q))
    }
    pub fn or(&self, other: &Region) -> Region {
        let (a, b) = (self.0.clone(), other.0.clone());
        Region::new(move |p, q| a(p, q) || b(p, q))
    }
    pub fn indicator(&self, grid: &PhaseGrid) -> ArrayD<f64> {
        grid.sample_real(|p, q| if self.contains(p, q) { 1.0 } else { 0.0 })
    }
}

/// Linear map on phase-space fields.
pub trait FieldOperator {
    fn apply(&self, field: &PhaseField) -> Result<PhaseField>;
}

/// Multiplication by the indicator of a region.
#[derive(Debug, Clone)]
pub struct EventProjector {
    grid: PhaseGrid,
    mask: ArrayD<f64>,
}

impl EventProjector {
    pub fn mask(&self) -> &ArrayD<f64> {
        &self.mask
    }
    pub fn compose(&self, other: &EventProjector) -> Result<EventProjector> {
        self.grid.check_same(&other.grid)?;
        Ok(EventProjector { grid: self.grid, mask: &self.mask * &other.mask })
    }
}

impl FieldOperator for EventProjector {
    fn apply(&self, field: &PhaseField) -> Result<PhaseField> {
        self.grid.check_same(field.grid())?;
        Ok(field.multiply_real(&self.mask))
    }
}

pub fn event_projector(grid: &PhaseGrid, region: &Region) -> EventProjector {
    EventProjector { grid: *grid, mask: region.indicator(grid) }
}

/// Finite convex mixture of normalized states.
#[derive(Debug, Clone)]
pub struct DensityModel {
    components: Vec<(f64, PhaseField)>,
}

impl DensityModel {
    pub fn new(components: Vec<(f64, PhaseField)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("density needs at least one component".into()));
        }
        let grid = *components[0].1.grid();
        let mut total = 0.0;
        for (w, s) in &components {
            grid.check_same(s.grid())?;
            if !(*w >= 0.0) {
                return Err(Error::InvalidArgument(format!("negative weight {w}")));
            }
            if (s.norm_sq() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidArgument(format!("component norm² {} is not 1", s.norm_sq())));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn pure(state: PhaseField) -> Result<Self> {
        Self::new(vec![(1.0, state)])
    }

    pub fn components(&self) -> &[(f64, PhaseField)] {
        &self.components
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.components[0].1.grid()
    }

    /// `ρ = Σ wᵢ|φᵢ|²`.
    pub fn density(&self) -> DensityField {
        let grid = *self.grid();
        let mut rho = ArrayD::<f64>::zeros(IxDyn(&grid.shape()));
        for (w, s) in &self.components {
            Zip::from(&mut rho).and(s.values()).for_each(|r, v| *r += w * v.norm_sqr());
        }
        DensityField { grid, values: rho }
    }

    /// The single state `√ρ` that no diagonal observable can tell apart from the mixture.
    pub fn equivalent_pure_state(&self) -> PhaseField {
        let rho = self.density();
        PhaseField::from_parts(*self.grid(), rho.values.mapv(|r| Complex64::new(r.sqrt(), 0.0)), Role::State)
    }
}

/// `Σᵢ wᵢ ∫ f |φᵢ|²`.
pub fn expectation(density: &DensityModel, f: &Symbol) -> Result<f64> {
    let grid = *density.grid();
    let fv = f.sample(&grid)?;
    let rho = density.density();
    let mut acc = 0.0;
    for (r, v) in rho.values.iter().zip(fv.iter()) {
        if *r > 0.0 {
            if !v.is_finite() {
                return Err(Error::NonFiniteSymbol);
            }
            acc += r * v;
        }
    }
    Ok(acc * grid.cell_volume())
}

/// Conditions a density on an event: components are cut to the region,
/// renormalized, and reweighted by their surviving mass.
pub fn collapse(density: &DensityModel, region: &Region) -> Result<DensityModel> {
    let proj = event_projector(density.grid(), region);
    let mut kept = Vec::new();
    let mut total = 0.0;
    for (w, s) in density.components() {
        let cut = proj.apply(s)?;
        let mass = cut.norm_sq();
        if mass > 0.0 && *w > 0.0 {
            total += w * mass;
            kept.push((w * mass, cut.scaled(Complex64::new(1.0 / mass.sqrt(), 0.0))));
        }
    }
    if !(total > 0.0) {
        return Err(Error::NullEvent);
    }
    let mut components: Vec<(f64, PhaseField)> = kept.into_iter().map(|(w, s)| (w / total, s)).collect();
    let sum: f64 = components.iter().map(|c| c.0).sum();
    for c in &mut components {
        c.0 /= sum;
    }
    DensityModel::new(components)
}

/// `ρ = |φ|²`.
pub fn density_from_state(phi: &PhaseField) -> DensityField {
    DensityField { grid: *phi.grid(), values: phi.values().mapv(|v| v.norm_sqr()) }
}
