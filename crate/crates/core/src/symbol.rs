//! Classical observables `f(p, q)`.
//!
//! Polynomials carry exact symbolic derivatives, separable Hamiltonians
//! `T(p) + V(q)` carry their two gradients, callables may carry analytic
//! gradients, and sampled symbols are differentiated spectrally on their grid.
//! Variables are ordered `p_1..p_d, q_1..q_d`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use ndarray::ArrayD;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::phase_grid::{PhaseField, PhaseGrid, Role};

/// Real polynomial in `(p, q)` stored as exponent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::monomial(dim, vec![0; 2 * dim], c)
    }

    pub fn monomial(dim: usize, exps: Vec<u32>, c: f64) -> Self {
        assert_eq!(exps.len(), 2 * dim);
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(exps, c);
        }
        Self { dim, terms }
    }

    pub fn p(dim: usize, i: usize) -> Self {
        let mut e = vec![0; 2 * dim];
        e[i] = 1;
        Self::monomial(dim, e, 1.0)
    }

    pub fn q(dim: usize, i: usize) -> Self {
        let mut e = vec![0; 2 * dim];
        e[dim + i] = 1;
        Self::monomial(dim, e, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, exps: Vec<u32>, c: f64) {
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = Self::zero(self.dim);
        if a != 0.0 {
            for (e, c) in &self.terms {
                out.terms.insert(e.clone(), a * c);
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(e, ca * cb);
            }
        }
        out
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut e2 = e.clone();
                e2[var] -= 1;
                out.insert(e2, c * e[var] as f64);
            }
        }
        out
    }

    pub fn eval(&self, p: &[f64], q: &[f64]) -> f64 {
        let d = self.dim;
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = *c;
                for i in 0..d {
                    v *= p[i].powi(e[i] as i32) * q[i].powi(e[d + i] as i32);
                }
                v
            })
            .sum()
    }

    pub fn grad_p(&self) -> Vec<Polynomial> {
        (0..self.dim).map(|i| self.derivative(i)).collect()
    }

    pub fn grad_q(&self) -> Vec<Polynomial> {
        (0..self.dim).map(|i| self.derivative(self.dim + i)).collect()
    }

    /// `{f, g} = ∇_p f·∇_q g − ∇_p g·∇_q f`.
    pub fn poisson_bracket(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zero(d);
        for i in 0..d {
            out = out
                .add(&self.derivative(i).mul(&other.derivative(d + i)))
                .sub(&other.derivative(i).mul(&self.derivative(d + i)));
        }
        out
    }

    pub fn degree_in_p(&self) -> u32 {
        self.terms.keys().map(|e| e[..self.dim].iter().sum()).max().unwrap_or(0)
    }

    /// True when no monomial mixes momenta and positions.
    pub fn is_separable(&self) -> bool {
        let d = self.dim;
        self.terms
            .keys()
            .all(|e| e[..d].iter().all(|&x| x == 0) || e[d..].iter().all(|&x| x == 0))
    }

    /// Splits a separable polynomial into its momentum part and its position
    /// part (the constant goes with the position part).
    pub fn split_separable(&self) -> Option<(Polynomial, Polynomial)> {
        if !self.is_separable() {
            return None;
        }
        let d = self.dim;
        let mut t = Self::zero(d);
        let mut v = Self::zero(d);
        for (e, c) in &self.terms {
            if e[..d].iter().any(|&x| x > 0) {
                t.insert(e.clone(), *c);
            } else {
                v.insert(e.clone(), *c);
            }
        }
        Some((t, v))
    }

    /// Largest coefficient difference against another polynomial.
    pub fn max_coefficient_difference(&self, other: &Self) -> f64 {
        self.sub(other).terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

type PhaseFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type PhaseGradFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type HalfFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type HalfGradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub enum SymbolKind {
    Polynomial(Polynomial),
    /// `T(p) + V(q)` with both gradients.
    Separable {
        kinetic: HalfFn,
        kinetic_grad: HalfGradFn,
        potential: HalfFn,
        potential_grad: HalfGradFn,
    },
    Callable {
        value: PhaseFn,
        grad_p: Option<PhaseGradFn>,
        grad_q: Option<PhaseGradFn>,
    },
    Sampled(PhaseField),
}

#[derive(Clone)]
pub struct Symbol {
    dim: usize,
    kind: SymbolKind,
    label: String,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({}, dim={})", self.label, self.dim)
    }
}

/// Gradient closures of a separable symbol, used by split-step integrators.
#[derive(Clone)]
pub struct SeparableParts {
    pub kinetic_grad: HalfGradFn,
    pub potential_grad: HalfGradFn,
}

impl Symbol {
    pub fn polynomial(poly: Polynomial) -> Self {
        let label = "polynomial".to_string();
        Self { dim: poly.dim(), kind: SymbolKind::Polynomial(poly), label }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::polynomial(Polynomial::constant(dim, c)).labeled(&format!("{c}"))
    }

    pub fn p(dim: usize, i: usize) -> Self {
        Self::polynomial(Polynomial::p(dim, i)).labeled(&format!("p{}", i + 1))
    }

    pub fn q(dim: usize, i: usize) -> Self {
        Self::polynomial(Polynomial::q(dim, i)).labeled(&format!("q{}", i + 1))
    }

    /// `|p|²/2M`.
    pub fn free(dim: usize, mass: f64) -> Self {
        let mut h = Polynomial::zero(dim);
        for i in 0..dim {
            h = h.add(&Polynomial::p(dim, i).mul(&Polynomial::p(dim, i)).scale(0.5 / mass));
        }
        Self::polynomial(h).labeled("free")
    }

    /// `|p|²/2M + ½Mω²|q|²`.
    pub fn harmonic(dim: usize, mass: f64, omega: f64) -> Self {
        let mut h = Self::free(dim, mass).as_polynomial().unwrap().clone();
        for i in 0..dim {
            h = h.add(&Polynomial::q(dim, i).mul(&Polynomial::q(dim, i)).scale(0.5 * mass * omega * omega));
        }
        Self::polynomial(h).labeled("harmonic")
    }

    /// `|p|²/2M + (c/4) Σ qᵢ⁴`.
    pub fn quartic(dim: usize, mass: f64, coupling: f64) -> Self {
        let mut h = Self::free(dim, mass).as_polynomial().unwrap().clone();
        for i in 0..dim {
            let mut e = vec![0; 2 * dim];
            e[dim + i] = 4;
            h = h.add(&Polynomial::monomial(dim, e, 0.25 * coupling));
        }
        Self::polynomial(h).labeled("quartic")
    }

    /// `p²/2 − cos q` in one dimension.
    pub fn pendulum() -> Self {
        Self::separable(
            1,
            |p| 0.5 * p[0] * p[0],
            |p| vec![p[0]],
            |q| -q[0].cos(),
            |q| vec![q[0].sin()],
        )
        .labeled("pendulum")
    }

    pub fn separable<T, TG, V, VG>(dim: usize, kinetic: T, kinetic_grad: TG, potential: V, potential_grad: VG) -> Self
    where
        T: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        TG: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        VG: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            kind: SymbolKind::Separable {
                kinetic: Arc::new(kinetic),
                kinetic_grad: Arc::new(kinetic_grad),
                potential: Arc::new(potential),
                potential_grad: Arc::new(potential_grad),
            },
            label: "separable".into(),
        }
    }

    /// Evaluator without gradients.
    pub fn callable<F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static>(dim: usize, f: F) -> Self {
        Self {
            dim,
            kind: SymbolKind::Callable { value: Arc::new(f), grad_p: None, grad_q: None },
            label: "callable".into(),
        }
    }

    /// Attaches analytic gradients to a callable symbol.
    pub fn with_gradients<GP, GQ>(mut self, gp: GP, gq: GQ) -> Self
    where
        GP: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        GQ: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if let SymbolKind::Callable { grad_p, grad_q, .. } = &mut self.kind {
            *grad_p = Some(Arc::new(gp));
            *grad_q = Some(Arc::new(gq));
        }
        self
    }

    pub fn sampled(field: PhaseField) -> Result<Self> {
        let field = PhaseField::new(*field.grid(), field.values().clone(), Role::Symbol)?;
        Ok(Self { dim: field.grid().dim(), kind: SymbolKind::Sampled(field), label: "sampled".into() })
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match &self.kind {
            SymbolKind::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    /// Pointwise value; `None` for sampled symbols, which only exist on their grid.
    pub fn evaluate(&self, p: &[f64], q: &[f64]) -> Option<f64> {
        match &self.kind {
            SymbolKind::Polynomial(poly) => Some(poly.eval(p, q)),
            SymbolKind::Separable { kinetic, potential, .. } => Some(kinetic(p) + potential(q)),
            SymbolKind::Callable { value, .. } => Some(value(p, q)),
            SymbolKind::Sampled(_) => None,
        }
    }

    /// Analytic `(∇_p f, ∇_q f)` where available.
    pub fn gradient(&self, p: &[f64], q: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            SymbolKind::Polynomial(poly) => Some((
                poly.grad_p().iter().map(|g| g.eval(p, q)).collect(),
                poly.grad_q().iter().map(|g| g.eval(p, q)).collect(),
            )),
            SymbolKind::Separable { kinetic_grad, potential_grad, .. } => Some((kinetic_grad(p), potential_grad(q))),
            SymbolKind::Callable { grad_p: Some(gp), grad_q: Some(gq), .. } => Some((gp(p, q), gq(p, q))),
            _ => None,
        }
    }

    pub fn has_analytic_gradient(&self) -> bool {
        matches!(
            self.kind,
            SymbolKind::Polynomial(_)
                | SymbolKind::Separable { .. }
                | SymbolKind::Callable { grad_p: Some(_), grad_q: Some(_), .. }
        )
    }

    pub fn is_differentiable(&self) -> bool {
        self.has_analytic_gradient() || matches!(self.kind, SymbolKind::Sampled(_))
    }

    /// Gradient closures when the symbol splits as `T(p) + V(q)`.
    pub fn separable_parts(&self) -> Option<SeparableParts> {
        match &self.kind {
            SymbolKind::Separable { kinetic_grad, potential_grad, .. } => Some(SeparableParts {
                kinetic_grad: kinetic_grad.clone(),
                potential_grad: potential_grad.clone(),
            }),
            SymbolKind::Polynomial(poly) => {
                let (t, v) = poly.split_separable()?;
                let (tg, vg) = (t.grad_p(), v.grad_q());
                let d = poly.dim();
                let zeros = vec![0.0; d];
                let zeros2 = zeros.clone();
                Some(SeparableParts {
                    kinetic_grad: Arc::new(move |p| tg.iter().map(|g| g.eval(p, &zeros)).collect()),
                    potential_grad: Arc::new(move |q| vg.iter().map(|g| g.eval(&zeros2, q)).collect()),
                })
            }
            _ => None,
        }
    }

    /// Real samples on a grid.
    pub fn sample(&self, grid: &PhaseGrid) -> Result<ArrayD<f64>> {
        self.check_dim(grid)?;
        match &self.kind {
            SymbolKind::Sampled(field) => {
                field.grid().check_same(grid)?;
                Ok(field.real_values())
            }
            _ => Ok(grid.sample_real(|p, q| self.evaluate(p, q).expect("pointwise symbol"))),
        }
    }

    pub fn sample_field(&self, grid: &PhaseGrid) -> Result<PhaseField> {
        let v = self.sample(grid)?;
        Ok(PhaseField::from_parts(*grid, v.mapv(|x| Complex64::new(x, 0.0)), Role::Symbol))
    }

    /// Sampled `(∇_p f, ∇_q f)`, analytic when available and spectral for
    /// sampled symbols.
    pub fn sample_gradients(&self, grid: &PhaseGrid) -> Result<(Vec<ArrayD<f64>>, Vec<ArrayD<f64>>)> {
        self.check_dim(grid)?;
        let d = self.dim;
        if let SymbolKind::Sampled(field) = &self.kind {
            field.grid().check_same(grid)?;
            let v = field.real_values();
            let gp = (0..d).map(|i| fft::derivative_real(&v, grid.p_axis(i), grid.dp(), 1)).collect();
            let gq = (0..d).map(|i| fft::derivative_real(&v, grid.q_axis(i), grid.dq(), 1)).collect();
            return Ok((gp, gq));
        }
        if !self.has_analytic_gradient() {
            return Err(Error::Undifferentiable(format!("{} has no gradient", self.label)));
        }
        let mut gp: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); d];
        let mut gq: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); d];
        grid.for_each_point(|_, p, q| {
            let (a, b) = self.gradient(p, q).expect("analytic gradient");
            for i in 0..d {
                gp[i].push(a[i]);
                gq[i].push(b[i]);
            }
        });
        let shape = grid.shape();
        let wrap = |v: Vec<f64>| ArrayD::from_shape_vec(ndarray::IxDyn(&shape), v).expect("shape");
        Ok((gp.into_iter().map(wrap).collect(), gq.into_iter().map(wrap).collect()))
    }

    /// Largest mismatch between analytic gradients and centered differences
    /// of the evaluator at a point.
    pub fn gradient_check(&self, p: &[f64], q: &[f64], step: f64) -> Option<f64> {
        let (gp, gq) = self.gradient(p, q)?;
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            let (mut pp, mut pm) = (p.to_vec(), p.to_vec());
            pp[i] += step;
            pm[i] -= step;
            let fd = (self.evaluate(&pp, q)? - self.evaluate(&pm, q)?) / (2.0 * step);
            worst = worst.max((fd - gp[i]).abs());
            let (mut qp, mut qm) = (q.to_vec(), q.to_vec());
            qp[i] += step;
            qm[i] -= step;
            let fd = (self.evaluate(p, &qp)? - self.evaluate(p, &qm)?) / (2.0 * step);
            worst = worst.max((fd - gq[i]).abs());
        }
        Some(worst)
    }

    /// `a·self + b·other`, kept symbolic for polynomials.
    pub fn linear_combination(&self, a: f64, other: &Symbol, b: f64) -> Result<Symbol> {
        if self.dim != other.dim {
            return Err(Error::InvalidArgument("symbol dimensions differ".into()));
        }
        if let (Some(x), Some(y)) = (self.as_polynomial(), other.as_polynomial()) {
            return Ok(Symbol::polynomial(x.scale(a).add(&y.scale(b))));
        }
        if let (SymbolKind::Sampled(x), SymbolKind::Sampled(y)) = (&self.kind, &other.kind) {
            let f = x.combine(Complex64::new(a, 0.0), y, Complex64::new(b, 0.0))?;
            return Symbol::sampled(f);
        }
        if matches!(self.kind, SymbolKind::Sampled(_)) || matches!(other.kind, SymbolKind::Sampled(_)) {
            return Err(Error::InvalidArgument("cannot mix sampled and pointwise symbols".into()));
        }
        let (s, o) = (self.clone(), other.clone());
        let value = move |p: &[f64], q: &[f64]| a * s.evaluate(p, q).unwrap() + b * o.evaluate(p, q).unwrap();
        let combined = Symbol::callable(self.dim, value);
        if self.has_analytic_gradient() && other.has_analytic_gradient() {
            let (s1, o1, s2, o2) = (self.clone(), other.clone(), self.clone(), other.clone());
            return Ok(combined.with_gradients(
                move |p, q| {
                    let (x, y) = (s1.gradient(p, q).unwrap().0, o1.gradient(p, q).unwrap().0);
                    x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect()
                },
                move |p, q| {
                    let (x, y) = (s2.gradient(p, q).unwrap().1, o2.gradient(p, q).unwrap().1);
                    x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect()
                },
            ));
        }
        Ok(combined)
    }

    fn check_dim(&self, grid: &PhaseGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch(format!("symbol dim {} on grid dim {}", self.dim, grid.dim())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_algebra() {
        let p = Polynomial::p(1, 0);
        let q = Polynomial::q(1, 0);
        let pq = p.mul(&q);
        assert_eq!(pq.eval(&[2.0], &[3.0]), 6.0);
        assert_eq!(pq.derivative(0), q);
        assert_eq!(p.poisson_bracket(&q), Polynomial::constant(1, 1.0));
        assert!(pq.sub(&pq).is_zero());
        assert_eq!(Symbol::harmonic(1, 1.0, 1.0).as_polynomial().unwrap().degree_in_p(), 2);
    }

    #[test]
    fn pendulum_gradient_matches_differences() {
        let s = Symbol::pendulum();
        let err = s.gradient_check(&[0.3], &[1.1], 1e-4).unwrap();
        assert!(err < 1e-7);
    }

    #[test]
    fn separable_split() {
        let h = Symbol::quartic(1, 2.0, 1.0);
        let parts = h.separable_parts().unwrap();
        assert_eq!((parts.kinetic_grad)(&[3.0]), vec![1.5]);
        assert_eq!((parts.potential_grad)(&[2.0]), vec![8.0]);
        let mixed = Symbol::polynomial(Polynomial::p(1, 0).mul(&Polynomial::q(1, 0)));
        assert!(mixed.separable_parts().is_none());
    }
}
