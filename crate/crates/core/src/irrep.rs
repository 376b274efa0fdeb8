//! Windows defining one irreducible subspace, the analysis/synthesis pair
//! between position wavefunctions and phase-space fields, coherent states and
//! the discrete-symmetry sign rules.
//!
//! Kernel convention: `⟨p,q|x⟩ = Φ(x − q) exp[−(i/ħ) p·(x − q)]`, so analysis is
//! a windowed Fourier transform and synthesis its exact discrete adjoint.
//!
//! Frame layout: the position axes of the phase grid coincide with the
//! x-grid, and each momentum axis carries `n_p` points with
//! `Δp = h/(n_p Δx)`. The window is sampled on the `n_p` offsets
//! `u_s = (s − n_p/2)Δx` and rescaled so `h^d Δx^d Σ|Φ(u_s)|² = 1`; with that
//! normalization `W†W = 1` holds to rounding.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::galileo_rep::{parity, time_reversal, SymplecticTransform};
use crate::phase_grid::{make_grid, Interval, PhaseField, PhaseGrid, Region, Role};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

// ---------------------------------------------------------------------------
// Position space

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XGrid {
    dim: usize,
    extent: Interval,
    n: usize,
    hbar: f64,
}

impl XGrid {
    pub fn new(dim: usize, extent: Interval, n: usize, hbar: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(format!("dim = {dim}")));
        }
        if n % 2 == 1 {
            return Err(Error::OddGridCount(n));
        }
        if n < 8 {
            return Err(Error::GridTooSmall(n));
        }
        if !(extent.hi > extent.lo) || !extent.lo.is_finite() || !extent.hi.is_finite() {
            return Err(Error::EmptyExtent { lo: extent.lo, hi: extent.hi });
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::NonPositiveHbar(hbar));
        }
        Ok(Self { dim, extent, n, hbar })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn extent(&self) -> Interval {
        self.extent
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn h(&self) -> f64 {
        2.0 * PI * self.hbar
    }
    pub fn dx(&self) -> f64 {
        self.extent.width() / self.n as f64
    }
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }
    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.extent.lo + j as f64 * self.dx()).collect()
    }
    pub fn wavenumbers(&self) -> Vec<f64> {
        fft::wavenumbers(self.n, self.dx())
    }
    pub fn shape(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn is_symmetric(&self) -> bool {
        self.extent.is_symmetric()
    }

    /// Symmetric grid whose spacing `Δx = λ·sqrt(2π/n)` balances the
    /// window's decay in position (`nΔx/2`) against the momentum range
    /// (`πħ/Δx`) of the frame built on it.
    pub fn balanced(dim: usize, n: usize, lambda: f64, hbar: f64) -> Result<Self> {
        let dx = lambda * (2.0 * PI / n as f64).sqrt();
        Self::new(dim, Interval::symmetric(0.5 * n as f64 * dx), n, hbar)
    }

    /// Visits every point in storage order.
    pub fn for_each_point<F: FnMut(usize, &[f64])>(&self, mut f: F) {
        let xs = self.coords();
        let d = self.dim;
        let mut x = vec![0.0; d];
        for flat in 0..self.len() {
            let idx = unflatten(flat, self.n, d);
            for a in 0..d {
                x[a] = xs[idx[a]];
            }
            f(flat, &x);
        }
    }

    pub fn sample_real<F: Fn(&[f64]) -> f64>(&self, f: F) -> ArrayD<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_point(|_, x| out.push(f(x)));
        ArrayD::from_shape_vec(IxDyn(&self.shape()), out).expect("shape matches length")
    }
}

pub(crate) fn unflatten(mut flat: usize, n: usize, d: usize) -> [usize; 3] {
    let mut idx = [0usize; 3];
    for a in (0..d).rev() {
        idx[a] = flat % n;
        flat /= n;
    }
    idx
}

/// Complex wavefunction on an [`XGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct XState {
    grid: XGrid,
    values: ArrayD<Complex64>,
}

impl XState {
    pub fn new(grid: XGrid, values: ArrayD<Complex64>) -> Result<Self> {
        if values.shape() != grid.shape().as_slice() {
            return Err(Error::GridMismatch(format!(
                "values shape {:?} does not match x-grid {:?}",
                values.shape(),
                grid.shape()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite wavefunction value".into()));
        }
        Ok(Self { grid, values: values.as_standard_layout().to_owned() })
    }

    pub(crate) fn from_parts(grid: XGrid, values: ArrayD<Complex64>) -> Self {
        Self { grid, values }
    }

    pub fn zeros(grid: XGrid) -> Self {
        Self { grid, values: ArrayD::zeros(IxDyn(&grid.shape())) }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(grid: XGrid, f: F) -> Self {
        let mut out = Vec::with_capacity(grid.len());
        grid.for_each_point(|_, x| out.push(f(x)));
        Self { grid, values: ArrayD::from_shape_vec(IxDyn(&grid.shape()), out).expect("shape") }
    }

    pub fn grid(&self) -> &XGrid {
        &self.grid
    }
    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut ArrayD<Complex64> {
        &mut self.values
    }
    pub fn with_values(&self, values: ArrayD<Complex64>) -> Self {
        Self { grid: self.grid, values }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &XState) -> Result<Complex64> {
        self.check_same(other)?;
        let s: Complex64 = self.values.iter().zip(other.values.iter()).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.with_values(self.values.mapv(|v| v / n))
    }
    pub fn scaled(&self, c: Complex64) -> Self {
        self.with_values(self.values.mapv(|v| v * c))
    }
    pub fn combine(&self, a: Complex64, other: &XState, b: Complex64) -> Result<Self> {
        self.check_same(other)?;
        let mut v = self.values.mapv(|x| x * a);
        v.zip_mut_with(&other.values, |x, y| *x += y * b);
        Ok(self.with_values(v))
    }
    pub fn sub(&self, other: &XState) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }
    pub fn add(&self, other: &XState) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }
    pub fn distance(&self, other: &XState) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }
    pub fn conj(&self) -> Self {
        self.with_values(self.values.mapv(|v| v.conj()))
    }
    /// `ψ(−x)` on a symmetric grid.
    pub fn reflected(&self) -> Result<Self> {
        if !self.grid.is_symmetric() {
            return Err(Error::AsymmetricGrid);
        }
        let n = self.grid.n;
        let v = &self.values;
        let out = ArrayD::from_shape_fn(IxDyn(&self.grid.shape()), |idx| {
            let mut src = idx.clone();
            for a in 0..self.grid.dim {
                src[a] = (n - idx[a]) % n;
            }
            v[src]
        });
        Ok(self.with_values(out))
    }
    pub fn multiply_real(&self, f: &ArrayD<f64>) -> Self {
        let mut v = self.values.clone();
        v.zip_mut_with(f, |x, y| *x *= *y);
        self.with_values(v)
    }

    pub(crate) fn check_same(&self, other: &XState) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("wavefunctions live on different x-grids".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Special functions and quadrature

/// Normalized Hermite functions `ψ_0..=ψ_n` at `t`.
pub fn hermite_functions(n: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(PI.powf(-0.25) * (-0.5 * t * t).exp());
    if n >= 1 {
        out.push(2f64.sqrt() * t * out[0]);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// `ψ_n(t)` and `ψ_n'(t)`.
pub fn hermite_function_and_derivative(n: usize, t: f64) -> (f64, f64) {
    let h = hermite_functions(n + 1, t);
    let lower = if n == 0 { 0.0 } else { (n as f64 / 2.0).sqrt() * h[n - 1] };
    (h[n], lower - ((n as f64 + 1.0) / 2.0).sqrt() * h[n + 1])
}

/// Associated Legendre `P_l^m(x)` for `0 ≤ m ≤ l`, without the
/// Condon–Shortley phase.
pub fn associated_legendre(l: usize, m: usize, x: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 0..m {
        pmm *= (2 * k + 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut prev = pmm;
    let mut cur = x * (2 * m + 1) as f64 * pmm;
    for ll in (m + 2)..=l {
        let next = (x * (2 * ll - 1) as f64 * cur - (ll + m - 1) as f64 * prev) / (ll - m) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Spherical harmonic `Y_l^m(θ, φ)` with the Condon–Shortley phase, so that
/// `conj(Y_l^m) = (−1)^m Y_l^{−m}`.
pub fn spherical_harmonic(l: usize, m: i32, theta: f64, phi: f64) -> Complex64 {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return ZERO;
    }
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
    let base = norm * associated_legendre(l, am, theta.cos());
    let cs = if am % 2 == 1 { -1.0 } else { 1.0 };
    let y = Complex64::from_polar(cs * base, am as f64 * phi);
    if m >= 0 {
        y
    } else {
        y.conj() * cs
    }
}

/// `∂_θ Y_l^m(θ, φ)`; requires `sin θ ≠ 0`.
pub fn spherical_harmonic_dtheta(l: usize, m: i32, theta: f64, phi: f64) -> Complex64 {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return ZERO;
    }
    let x = theta.cos();
    let s = theta.sin();
    let lower = if l > am { associated_legendre(l - 1, am, x) } else { 0.0 };
    let dp = (l as f64 * x * associated_legendre(l, am, x) - (l + am) as f64 * lower) / s;
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
    let cs = if am % 2 == 1 { -1.0 } else { 1.0 };
    let y = Complex64::from_polar(cs * norm * dp, am as f64 * phi);
    if m >= 0 {
        y
    } else {
        y.conj() * cs
    }
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = mid - half * z;
        nodes[n - 1 - i] = mid + half * z;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    (nodes, weights)
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ`, uniform in
/// `φ`. Returns `(θ, φ, weight)` triples.
pub fn sphere_quadrature(n_theta: usize, n_phi: usize) -> Vec<(f64, f64, f64)> {
    let (xs, ws) = gauss_legendre(n_theta, -1.0, 1.0);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (x, w) in xs.iter().zip(&ws) {
        for k in 0..n_phi {
            out.push((x.acos(), k as f64 * dphi, w * dphi));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Radial profile

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Dimensionless real radial profile `Ψ₀(u)` with `∫₀^∞ u²Ψ₀² du = 1`,
/// carried with its Gauss–Legendre rule on `[0, cutoff]`.
#[derive(Clone)]
pub struct RadialProfile {
    f: RealFn,
    df: RealFn,
    scale: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl std::fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialProfile").field("nodes", &self.nodes.len()).field("scale", &self.scale).finish()
    }
}

pub const RADIAL_CUTOFF: f64 = 12.0;
pub const RADIAL_NODES: usize = 240;

impl RadialProfile {
    /// Gaussian `N e^{−u²/2}`.
    pub fn gaussian() -> Self {
        Self::from_fn(|u| (-0.5 * u * u).exp(), Some(|u: f64| -u * (-0.5 * u * u).exp()))
            .expect("gaussian profile is valid")
    }

    /// Builds and normalizes a profile. Without an analytic derivative a
    /// centered difference is used.
    pub fn from_fn<F, D>(f: F, df: Option<D>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f: RealFn = Arc::new(f);
        let df: RealFn = match df {
            Some(d) => Arc::new(d),
            None => {
                let g = f.clone();
                Arc::new(move |u| {
                    let s = 1e-5;
                    (g(u + s) - g(u - s)) / (2.0 * s)
                })
            }
        };
        let (nodes, weights) = gauss_legendre(RADIAL_NODES, 0.0, RADIAL_CUTOFF);
        let mut out = Self { f, df, scale: 1.0, nodes, weights };
        let mut mass = 0.0;
        for (u, w) in out.nodes.iter().zip(&out.weights) {
            let v = (out.f)(*u);
            let d = (out.df)(*u);
            if !v.is_finite() || !d.is_finite() {
                return Err(Error::NonDifferentiableWindow(format!("profile or derivative not finite at u = {u}")));
            }
            mass += w * u * u * v * v;
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument("radial profile has zero mass".into()));
        }
        out.scale = mass.sqrt().recip();
        Ok(out)
    }

    /// Rejects profiles with a nonzero imaginary part; time reversal would not
    /// close on them.
    pub fn from_complex_fn<F>(f: F) -> Result<Self>
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        let (nodes, _) = gauss_legendre(RADIAL_NODES, 0.0, RADIAL_CUTOFF);
        for &u in &nodes {
            let v = f(u);
            if v.im.abs() > 1e-12 * v.re.abs().max(1.0) {
                return Err(Error::NonRealProfile);
            }
        }
        Self::from_fn(move |u| f(u).re, None::<fn(f64) -> f64>)
    }

    pub fn value(&self, u: f64) -> f64 {
        self.scale * (self.f)(u)
    }
    pub fn derivative(&self, u: f64) -> f64 {
        self.scale * (self.df)(u)
    }
    pub fn quadrature(&self) -> (&[f64], &[f64]) {
        (&self.nodes, &self.weights)
    }

    fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(u, w)| w * g(*u)).sum()
    }

    /// `∫ u²Ψ₀² du`.
    pub fn norm_integral(&self) -> f64 {
        self.integrate(|u| (u * self.value(u)).powi(2))
    }
    /// `∫ Ψ₀² du`.
    pub fn plain_integral(&self) -> f64 {
        self.integrate(|u| self.value(u).powi(2))
    }
    /// `χ² = ∫ {[(uΨ₀)′]² + S(S+1)Ψ₀²} du`.
    pub fn chi2(&self, s: usize) -> f64 {
        let ss = (s * (s + 1)) as f64;
        self.integrate(|u| {
            let d = self.value(u) + u * self.derivative(u);
            d * d + ss * self.value(u).powi(2)
        })
    }
    /// `η² = ∫ u⁴Ψ₀² du`, the mean square radius in units of `λ²`.
    pub fn eta2(&self) -> f64 {
        self.integrate(|u| u.powi(4) * self.value(u).powi(2))
    }
}

// ---------------------------------------------------------------------------
// Windows

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowFamily {
    /// Hermite function of index `n`.
    Hermite1d { n: usize },
    /// Planar Gaussian-Laguerre profile with winding `m`.
    Planar2d { m: i32 },
    /// Radial profile times `Y_S^{m}`.
    Radial3d { s: usize, m: i32 },
}

impl WindowFamily {
    pub fn dim(&self) -> usize {
        match self {
            Self::Hermite1d { .. } => 1,
            Self::Planar2d { .. } => 2,
            Self::Radial3d { .. } => 3,
        }
    }
}

/// Continuum window `Φ(u)` with reduced norm `h^d ∫|Φ|² = 1`.
#[derive(Debug, Clone)]
pub struct Window {
    family: WindowFamily,
    lambda: f64,
    hbar: f64,
    radial: Option<RadialProfile>,
}

pub fn build_window(family: WindowFamily, lambda: f64, hbar: f64) -> Result<Window> {
    let radial = match family {
        WindowFamily::Radial3d { .. } => Some(RadialProfile::gaussian()),
        _ => None,
    };
    Window::with_profile(family, lambda, hbar, radial)
}

impl Window {
    pub fn with_profile(family: WindowFamily, lambda: f64, hbar: f64, radial: Option<RadialProfile>) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("window length scale must be positive, got {lambda}")));
        }
        if !(hbar > 0.0) {
            return Err(Error::NonPositiveHbar(hbar));
        }
        if let WindowFamily::Radial3d { s, m } = family {
            if m.unsigned_abs() as usize > s {
                return Err(Error::InvalidArgument(format!("|m_S| = {} exceeds S = {s}", m.abs())));
            }
            if radial.is_none() {
                return Err(Error::InvalidArgument("radial window needs a profile".into()));
            }
        }
        Ok(Self { family, lambda, hbar, radial })
    }

    pub fn family(&self) -> WindowFamily {
        self.family
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn hbar(&self) -> f64 {
        self.hbar
    }
    pub fn h(&self) -> f64 {
        2.0 * PI * self.hbar
    }
    pub fn dim(&self) -> usize {
        self.family.dim()
    }
    pub fn radial_profile(&self) -> Option<&RadialProfile> {
        self.radial.as_ref()
    }

    /// Same profile and length scale, different family member.
    pub fn sibling(&self, family: WindowFamily) -> Result<Self> {
        if family.dim() != self.dim() {
            return Err(Error::GridMismatch("sibling window of another dimension".into()));
        }
        Self::with_profile(family, self.lambda, self.hbar, self.radial.clone())
    }

    /// Sign `s` with `Φ(−u) = s Φ(u)`.
    pub fn parity_sign(&self) -> f64 {
        let odd = match self.family {
            WindowFamily::Hermite1d { n } => n % 2 == 1,
            WindowFamily::Planar2d { m } => m.rem_euclid(2) == 1,
            WindowFamily::Radial3d { s, .. } => s % 2 == 1,
        };
        if odd {
            -1.0
        } else {
            1.0
        }
    }

    /// Family member `Φ'` and sign `c` with `conj(Φ) = c Φ'`.
    pub fn conjugate_partner(&self) -> (WindowFamily, f64) {
        match self.family {
            WindowFamily::Hermite1d { n } => (WindowFamily::Hermite1d { n }, 1.0),
            WindowFamily::Planar2d { m } => (WindowFamily::Planar2d { m: -m }, if m.rem_euclid(2) == 1 { -1.0 } else { 1.0 }),
            WindowFamily::Radial3d { s, m } => {
                (WindowFamily::Radial3d { s, m: -m }, if m.rem_euclid(2) == 1 { -1.0 } else { 1.0 })
            }
        }
    }

    fn planar_parts(&self, m: i32, u: &[f64]) -> (Complex64, f64, f64) {
        let am = m.unsigned_abs();
        let lam = self.lambda;
        let cs = if m > 0 && m % 2 == 1 { -1.0 } else { 1.0 };
        let c = cs / (self.h() * lam) / (PI * factorial(am as usize)).sqrt() / lam.powi(am as i32);
        let z = Complex64::new(u[0], m.signum() as f64 * u[1]);
        let g = (-(u[0] * u[0] + u[1] * u[1]) / (2.0 * lam * lam)).exp();
        (z, c, g)
    }

    pub fn eval(&self, u: &[f64]) -> Complex64 {
        let lam = self.lambda;
        match self.family {
            WindowFamily::Hermite1d { n } => {
                let t = u[0] / lam;
                Complex64::new(hermite_functions(n, t)[n] / (self.h() * lam).sqrt(), 0.0)
            }
            WindowFamily::Planar2d { m } => {
                let (z, c, g) = self.planar_parts(m, u);
                z.powu(m.unsigned_abs()) * (c * g)
            }
            WindowFamily::Radial3d { s, m } => {
                let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
                let theta = if r > 0.0 { (u[2] / r).clamp(-1.0, 1.0).acos() } else { 0.0 };
                let phi = u[1].atan2(u[0]);
                let prof = self.radial.as_ref().expect("radial window has a profile");
                spherical_harmonic(s, m, theta, phi) * (prof.value(r / lam) * (lam * self.h()).powf(-1.5))
            }
        }
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<Complex64> {
        let lam = self.lambda;
        match self.family {
            WindowFamily::Hermite1d { n } => {
                let (_, d) = hermite_function_and_derivative(n, u[0] / lam);
                vec![Complex64::new(d / ((self.h() * lam).sqrt() * lam), 0.0)]
            }
            WindowFamily::Planar2d { m } => {
                let (z, c, g) = self.planar_parts(m, u);
                let k = m.unsigned_abs();
                let zk = z.powu(k);
                let dzk = if k == 0 { ZERO } else { z.powu(k - 1) * k as f64 };
                let l2 = lam * lam;
                let dx = (dzk - zk * (u[0] / l2)) * (c * g);
                let dy = (dzk * Complex64::new(0.0, m.signum() as f64) - zk * (u[1] / l2)) * (c * g);
                vec![dx, dy]
            }
            WindowFamily::Radial3d { .. } => {
                let s = 1e-5 * lam;
                (0..3)
                    .map(|a| {
                        let mut up = u.to_vec();
                        let mut dn = u.to_vec();
                        up[a] += s;
                        dn[a] -= s;
                        (self.eval(&up) - self.eval(&dn)) / (2.0 * s)
                    })
                    .collect()
            }
        }
    }

    /// Half-width of the region holding all but a negligible part of the
    /// window mass.
    pub fn support_radius(&self) -> f64 {
        let order = match self.family {
            WindowFamily::Hermite1d { n } => n as f64,
            WindowFamily::Planar2d { m } => m.unsigned_abs() as f64,
            WindowFamily::Radial3d { s, .. } => s as f64,
        };
        self.lambda * (9.0 + (2.0 * order + 1.0).sqrt())
    }

    /// Trapezoid rule on a fine centered grid (spectrally accurate for these
    /// smooth decaying integrands). Only used for one and two dimensions.
    fn planar_quadrature<G: Fn(&[f64]) -> f64>(&self, g: G) -> f64 {
        let step = self.lambda / 16.0;
        let half = (self.support_radius() / step).ceil() as i64;
        let d = self.dim();
        let mut total = 0.0;
        if d == 1 {
            for i in -half..=half {
                total += g(&[i as f64 * step]);
            }
        } else {
            for i in -half..=half {
                for j in -half..=half {
                    total += g(&[i as f64 * step, j as f64 * step]);
                }
            }
        }
        total * step.powi(d as i32)
    }

    fn spherical_quadrature<G: Fn(&[f64]) -> Complex64>(&self, g: G) -> Complex64 {
        let prof = self.radial.as_ref().expect("radial window has a profile");
        let (rs, ws) = prof.quadrature();
        let angles = sphere_quadrature(24, 48);
        let mut total = ZERO;
        for (u, w) in rs.iter().zip(ws) {
            let r = u * self.lambda;
            for &(th, ph, wa) in &angles {
                let x = [r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()];
                total += g(&x) * (w * wa * r * r * self.lambda);
            }
        }
        total
    }

    /// `h^d ∫ g(u, Φ(u), ∇Φ(u)) du` for window moments.
    pub fn reduced_integral<G>(&self, g: G) -> Complex64
    where
        G: Fn(&[f64], Complex64, &[Complex64]) -> Complex64,
    {
        let hd = self.h().powi(self.dim() as i32);
        let eval = |u: &[f64]| g(u, self.eval(u), &self.gradient(u));
        let v = if self.dim() == 3 {
            self.spherical_quadrature(eval)
        } else {
            let re = self.planar_quadrature(|u| eval(u).re);
            let im = self.planar_quadrature(|u| eval(u).im);
            Complex64::new(re, im)
        };
        v * hd
    }

    /// Reduced scalar product `h^d ∫ conj(Φ_self) Φ_other`.
    pub fn reduced_inner(&self, other: &Window) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::GridMismatch("windows of different dimension".into()));
        }
        let hd = self.h().powi(self.dim() as i32);
        let v = if self.dim() == 3 {
            self.spherical_quadrature(|u| self.eval(u).conj() * other.eval(u))
        } else {
            let re = self.planar_quadrature(|u| (self.eval(u).conj() * other.eval(u)).re);
            let im = self.planar_quadrature(|u| (self.eval(u).conj() * other.eval(u)).im);
            Complex64::new(re, im)
        };
        Ok(v * hd)
    }

    /// `h^d ∫ |Φ|²`.
    pub fn reduced_norm(&self) -> f64 {
        self.reduced_inner(self).expect("same dimension").re
    }

    /// `h^d ∫ |∇Φ|²`; in three dimensions this is `χ²/λ²` from the radial
    /// formula.
    pub fn gradient_energy(&self) -> Result<f64> {
        let hd = self.h().powi(self.dim() as i32);
        match self.family {
            WindowFamily::Radial3d { s, .. } => {
                let prof = self.radial.as_ref().expect("radial window has a profile");
                Ok(prof.chi2(s) / (self.lambda * self.lambda))
            }
            _ => {
                let v = self.planar_quadrature(|u| self.gradient(u).iter().map(|g| g.norm_sqr()).sum());
                if !v.is_finite() {
                    return Err(Error::NonDifferentiableWindow("gradient integral not finite".into()));
                }
                Ok(hd * v)
            }
        }
    }

    /// `h^d ∫ |u|² |Φ|²`; in three dimensions `η² λ²`.
    pub fn second_moment(&self) -> f64 {
        match self.family {
            WindowFamily::Radial3d { .. } => {
                self.radial.as_ref().expect("radial window has a profile").eta2() * self.lambda * self.lambda
            }
            _ => {
                let hd = self.h().powi(self.dim() as i32);
                hd * self.planar_quadrature(|u| u.iter().map(|x| x * x).sum::<f64>() * self.eval(u).norm_sqr())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Frame maps

/// Relative p-tail mass above which analysis reports a bandwidth overflow.
pub const DEFAULT_BANDWIDTH_TOLERANCE: f64 = 1e-8;
/// Window mass allowed outside the offset box.
pub const WINDOW_TRUNCATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct FrameMaps {
    window: Window,
    xgrid: XGrid,
    grid: PhaseGrid,
    n_p: usize,
    offsets: Vec<Complex64>,
    scale: f64,
    truncation: f64,
    bandwidth_tolerance: f64,
}

impl FrameMaps {
    pub fn new(window: &Window, xgrid: &XGrid, n_p: usize) -> Result<Self> {
        let d = xgrid.dim();
        if window.dim() != d {
            return Err(Error::GridMismatch(format!("window dim {} vs x-grid dim {d}", window.dim())));
        }
        if (window.hbar() - xgrid.hbar()).abs() > 1e-15 * xgrid.hbar() {
            return Err(Error::GridMismatch("window and x-grid use different ħ".into()));
        }
        if n_p > xgrid.n() {
            return Err(Error::IncompatibleGrid(format!("n_p = {n_p} exceeds the x-grid count {}", xgrid.n())));
        }
        let dx = xgrid.dx();
        let h = xgrid.h();
        let p_half = h / (2.0 * dx);
        let grid = make_grid(d, Interval::symmetric(p_half), xgrid.extent(), n_p, xgrid.n(), xgrid.hbar())?;

        let sample = |count: usize| -> Vec<Complex64> {
            let total = count.pow(d as u32);
            let half = (count / 2) as f64;
            (0..total)
                .map(|s| {
                    let idx = unflatten(s, count, d);
                    let u: Vec<f64> = (0..d).map(|a| (idx[a] as f64 - half) * dx).collect();
                    window.eval(&u)
                })
                .collect()
        };
        let offsets = sample(n_p);
        let wide = sample(2 * n_p);
        let inner: f64 = offsets.iter().map(|v| v.norm_sqr()).sum();
        let outer: f64 = wide.iter().map(|v| v.norm_sqr()).sum();
        let truncation = ((outer - inner) / outer).max(0.0);
        if truncation > WINDOW_TRUNCATION_TOLERANCE {
            return Err(Error::WindowTruncation { mass: truncation });
        }
        let discrete_norm = h.powi(d as i32) * dx.powi(d as i32) * inner;
        let scale = discrete_norm.sqrt().recip();
        let offsets = offsets.into_iter().map(|v| v * scale).collect();
        Ok(Self {
            window: window.clone(),
            xgrid: *xgrid,
            grid,
            n_p,
            offsets,
            scale,
            truncation,
            bandwidth_tolerance: DEFAULT_BANDWIDTH_TOLERANCE,
        })
    }

    /// Same grids with another window.
    pub fn with_window(&self, window: &Window) -> Result<Self> {
        let mut f = Self::new(window, &self.xgrid, self.n_p)?;
        f.bandwidth_tolerance = self.bandwidth_tolerance;
        Ok(f)
    }

    pub fn with_bandwidth_tolerance(mut self, tol: f64) -> Self {
        self.bandwidth_tolerance = tol;
        self
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
    pub fn x_grid(&self) -> &XGrid {
        &self.xgrid
    }
    pub fn phase_grid(&self) -> &PhaseGrid {
        &self.grid
    }
    pub fn n_p(&self) -> usize {
        self.n_p
    }
    /// Window samples on the offset box, storage order.
    pub fn window_samples(&self) -> &[Complex64] {
        &self.offsets
    }
    /// Factor applied to the continuum window to make the frame exact.
    pub fn normalization_scale(&self) -> f64 {
        self.scale
    }
    /// Window mass outside the offset box, relative.
    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// Phase grid whose position axes keep every `stride`-th x point.
    pub fn decimated_grid(&self, stride: usize) -> Result<PhaseGrid> {
        let n = self.xgrid.n();
        if stride == 0 || n % stride != 0 {
            return Err(Error::InvalidArgument(format!("stride {stride} does not divide {n}")));
        }
        make_grid(self.grid.dim(), self.grid.p_extent(), self.xgrid.extent(), self.n_p, n / stride, self.xgrid.hbar())
    }

    fn gather(&self, psi: &XState, stride: usize, grid: PhaseGrid) -> PhaseField {
        let d = self.xgrid.dim();
        let n = self.xgrid.n();
        let nq = n / stride;
        let np = self.n_p;
        let half = np / 2;
        let n_s = np.pow(d as u32);
        let n_j = nq.pow(d as u32);
        let x_strides: Vec<usize> = (0..d).map(|a| n.pow((d - 1 - a) as u32)).collect();
        let j_idx: Vec<[usize; 3]> = (0..n_j).map(|j| unflatten(j, nq, d)).collect();
        let psi_v = psi.values().as_slice().expect("standard layout");
        let mut out = vec![ZERO; n_s * n_j];
        for s in 0..n_s {
            let w = self.offsets[s];
            if w == ZERO {
                continue;
            }
            let s_idx = unflatten(s, np, d);
            let row = &mut out[s * n_j..(s + 1) * n_j];
            for (j, jj) in j_idx.iter().enumerate() {
                let mut xf = 0;
                for a in 0..d {
                    xf += ((jj[a] * stride + s_idx[a] + n - half) % n) * x_strides[a];
                }
                row[j] = w * psi_v[xf];
            }
        }
        let mut v = ArrayD::from_shape_vec(IxDyn(&grid.shape()), out).expect("shape");
        for a in 0..d {
            fft::centered_fractional_dft(&mut v, grid.p_axis(a), 1, -1.0);
        }
        let c = self.xgrid.cell_volume();
        v.mapv_inplace(|x| x * c);
        PhaseField::from_parts(grid, v, Role::State)
    }

    /// Analysis without the bandwidth diagnostic.
    pub fn analyze_unchecked(&self, psi: &XState) -> Result<PhaseField> {
        self.check_x(psi)?;
        Ok(self.gather(psi, 1, self.grid))
    }

    /// `φ(p,q) = ∫ Φ(x−q) e^{−(i/ħ)p·(x−q)} ψ(x) dx`; rejects states whose
    /// image leaks into the outer quarter of the momentum range.
    pub fn analyze(&self, psi: &XState) -> Result<PhaseField> {
        let phi = self.analyze_unchecked(psi)?;
        let tail = self.momentum_tail(&phi);
        if tail > self.bandwidth_tolerance {
            return Err(Error::BandwidthOverflow { tail });
        }
        Ok(phi)
    }

    /// Analysis sampled on every `stride`-th position point.
    pub fn analyze_decimated(&self, psi: &XState, stride: usize) -> Result<PhaseField> {
        self.check_x(psi)?;
        let grid = self.decimated_grid(stride)?;
        Ok(self.gather(psi, stride, grid))
    }

    /// Fraction of `|φ|²` with some `|p_i|` above three quarters of the
    /// momentum range.
    pub fn momentum_tail(&self, phi: &PhaseField) -> f64 {
        let g = phi.grid();
        let pmax = g.p_extent().hi;
        let mut tail = 0.0;
        let mut total = 0.0;
        g.for_each_point(|flat, p, _| {
            let w = phi.values().as_slice().expect("standard layout")[flat].norm_sqr();
            total += w;
            if p.iter().any(|x| x.abs() > 0.75 * pmax) {
                tail += w;
            }
        });
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    /// Exact adjoint of [`FrameMaps::analyze`].
    pub fn synthesize(&self, phi: &PhaseField) -> Result<XState> {
        self.grid.check_same(phi.grid())?;
        let d = self.xgrid.dim();
        let n = self.xgrid.n();
        let np = self.n_p;
        let half = np / 2;
        let mut v = phi.values().clone();
        for a in 0..d {
            fft::centered_fractional_dft(&mut v, self.grid.p_axis(a), 1, 1.0);
        }
        let vs = v.as_slice().expect("standard layout");
        let n_s = np.pow(d as u32);
        let n_j = n.pow(d as u32);
        let x_strides: Vec<usize> = (0..d).map(|a| n.pow((d - 1 - a) as u32)).collect();
        let j_idx: Vec<[usize; 3]> = (0..n_j).map(|j| unflatten(j, n, d)).collect();
        let mut out = vec![ZERO; n_j];
        for s in 0..n_s {
            let w = self.offsets[s].conj();
            if w == ZERO {
                continue;
            }
            let s_idx = unflatten(s, np, d);
            let row = &vs[s * n_j..(s + 1) * n_j];
            for (j, jj) in j_idx.iter().enumerate() {
                let mut xf = 0;
                for a in 0..d {
                    xf += ((jj[a] + s_idx[a] + n - half) % n) * x_strides[a];
                }
                out[xf] += w * row[j];
            }
        }
        let c = self.grid.cell_volume();
        let values = ArrayD::from_shape_vec(IxDyn(&self.xgrid.shape()), out).expect("shape").mapv(|x| x * c);
        Ok(XState::from_parts(self.xgrid, values))
    }

    /// `Π = W W†`.
    pub fn project(&self, phi: &PhaseField) -> Result<PhaseField> {
        let psi = self.synthesize(phi)?;
        Ok(self.gather(&psi, 1, self.grid))
    }

    /// `‖W†φ‖ / ‖φ‖`, the fraction of a field retained by the subspace.
    pub fn projection_ratio(&self, phi: &PhaseField) -> Result<f64> {
        Ok(self.synthesize(phi)?.norm() / phi.norm())
    }

    fn check_x(&self, psi: &XState) -> Result<()> {
        if psi.grid() != &self.xgrid {
            return Err(Error::GridMismatch("wavefunction is not on the frame's x-grid".into()));
        }
        Ok(())
    }
}

/// `⟨x|ξ_{p,q}⟩ = conj Φ(x−q) e^{(i/ħ)p·(x−q)}` with the frame's normalization;
/// squared norm `h^{−d}`.
pub fn coherent_state(frame: &FrameMaps, p: &[f64], q: &[f64]) -> Result<XState> {
    let d = frame.xgrid.dim();
    if p.len() != d || q.len() != d {
        return Err(Error::InvalidArgument(format!("coherent state needs {d} momentum and position components")));
    }
    let hbar = frame.xgrid.hbar();
    let scale = frame.scale;
    let w = &frame.window;
    Ok(XState::from_fn(frame.xgrid, |x| {
        let u: Vec<f64> = (0..d).map(|a| x[a] - q[a]).collect();
        let phase: f64 = (0..d).map(|a| p[a] * u[a]).sum();
        w.eval(&u).conj() * Complex64::from_polar(scale, phase / hbar)
    }))
}

/// Phase-space image `W ξ_{p,q}`.
pub fn coherent_field(frame: &FrameMaps, p: &[f64], q: &[f64]) -> Result<PhaseField> {
    frame.analyze_unchecked(&coherent_state(frame, p, q)?)
}

/// `Tr Π(A) = ∫_A ‖ξ_{p,q}‖² dp dq` by cell quadrature on the frame grid.
pub fn quasi_projector_trace(frame: &FrameMaps, region: &Region) -> Result<f64> {
    let g = frame.phase_grid();
    let d = g.dim();
    let n = frame.xgrid.n();
    let qs = g.q_coords();
    // ‖ξ_{p,q}‖² does not depend on p; tabulate it per position cell.
    let n_j = n.pow(d as u32);
    let mut norms = vec![0.0; n_j];
    let zero_p = vec![0.0; d];
    for (j, slot) in norms.iter_mut().enumerate() {
        let idx = unflatten(j, n, d);
        let q: Vec<f64> = (0..d).map(|a| qs[idx[a]]).collect();
        *slot = coherent_state(frame, &zero_p, &q)?.norm_sq();
    }
    let cell = g.cell_volume();
    let mut total = 0.0;
    g.for_each_point(|flat, p, q| {
        if region.contains(p, q) {
            total += norms[flat % n_j] * cell;
        }
    });
    Ok(total)
}

/// Coefficient read off by projecting a transformed state onto its expected
/// image, with the norm of whatever is left over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignReading {
    pub coefficient: Complex64,
    pub residual: f64,
}

impl SignReading {
    fn read(image: &XState, target: &XState) -> Result<Self> {
        let tn = target.norm_sq();
        let c = target.inner(image)? / tn;
        let residual = image.combine(Complex64::new(1.0, 0.0), target, -c)?.norm() / tn.sqrt();
        Ok(Self { coefficient: c, residual })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrySigns {
    /// `W†K_P W ψ` against `ψ(−x)`.
    pub parity: SignReading,
    /// `W†K_S W ψ` against `ψ`.
    pub symplectic: SignReading,
    /// Window family receiving the time-reversed state.
    pub time_reversal_partner: WindowFamily,
    /// `W'†K_T W ψ` against `conj ψ`.
    pub time_reversal: SignReading,
}

/// Probe state used by the sign readings: a window-sized Gaussian, off
/// centre and kicked so none of the symmetries act trivially on it.
pub fn sign_probe(xgrid: &XGrid, lambda: f64) -> XState {
    let d = xgrid.dim();
    XState::from_fn(*xgrid, |x| {
        let mut e = 0.0;
        let mut ph = 0.0;
        for a in 0..d {
            let c = lambda * (0.3 + 0.2 * a as f64);
            e -= (x[a] - c).powi(2) / (2.0 * lambda * lambda);
            ph += 0.5 / (a as f64 + 1.0) / lambda * x[a];
        }
        Complex64::from_polar(e.exp(), ph)
    })
    .normalized()
}

/// Applies the phase-space parity, fundamental symplectic transform and time
/// reversal to an analyzed probe and reads each coefficient back in x-space.
pub fn discrete_symmetry_signs(frame: &FrameMaps) -> Result<SymmetrySigns> {
    let psi = sign_probe(&frame.xgrid, frame.window.lambda());
    let phi = frame.analyze_unchecked(&psi)?;

    let par = frame.synthesize(&parity(&phi)?)?;
    let parity = SignReading::read(&par, &psi.reflected()?)?;

    let ks = SymplecticTransform::fundamental(frame.phase_grid())?;
    let sym = frame.synthesize(&ks.apply(&phi)?)?;
    let symplectic = SignReading::read(&sym, &psi)?;

    let (partner, _) = frame.window.conjugate_partner();
    let partner_frame = frame.with_window(&frame.window.sibling(partner)?)?;
    let tr = partner_frame.synthesize(&time_reversal(&phi)?)?;
    let time_reversal = SignReading::read(&tr, &psi.conj())?;

    Ok(SymmetrySigns { parity, symplectic, time_reversal_partner: partner, time_reversal })
}
