//! Symplectic transforms, pre-quantum Galileo generators and discrete
//! symmetries acting on phase-space fields.
//!
//! `K_S(α, ξ) = U_G(ξ)† K_S(α) U_G(ξ)` with kernel
//! `(α/h)^d exp[(iα/ħ)(q·p₁ − p·q₁)]` and gauge `U_G(ξ) = exp[−(iξ/ħ) p·q]`.
//! The kernel sum is evaluated with centered fractional DFTs: the grid must be
//! symmetric, carry as many momentum as position points, and satisfy
//! `α·n·Δp·Δq = h/r` for a positive integer `r`. With `r = 1` the discrete
//! transform is an exact involution.

use std::f64::consts::PI;

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::phase_grid::{PhaseField, PhaseGrid};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone)]
pub struct SymplecticTransform {
    grid: PhaseGrid,
    alpha: f64,
    xi: f64,
    oversampling: usize,
}

impl SymplecticTransform {
    pub fn new(grid: &PhaseGrid, alpha: f64, xi: f64) -> Result<Self> {
        if !grid.is_symmetric() {
            return Err(Error::AsymmetricGrid);
        }
        if grid.n_p() != grid.n_q() {
            return Err(Error::IncompatibleGrid(format!(
                "symplectic transform needs n_p = n_q, got {} and {}",
                grid.n_p(),
                grid.n_q()
            )));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        let r = grid.h() / (alpha * grid.n_p() as f64 * grid.dp() * grid.dq());
        let ri = r.round();
        if ri < 1.0 || (r - ri).abs() > 1e-9 * r {
            return Err(Error::IncompatibleGrid(format!(
                "alpha·n·Δp·Δq = h/{r:.6}; the scaling must map the grid onto itself (integer ratio)"
            )));
        }
        Ok(Self { grid: *grid, alpha, xi, oversampling: ri as usize })
    }

    /// The fundamental transform `K_S(1/2, 1/2)`.
    pub fn fundamental(grid: &PhaseGrid) -> Result<Self> {
        Self::new(grid, 0.5, 0.5)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    /// Frequency oversampling `r` used by the fractional DFT.
    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn apply(&self, phi: &PhaseField) -> Result<PhaseField> {
        let g = &self.grid;
        g.check_same(phi.grid())?;
        let d = g.dim();
        let mut v = phi.values().clone();
        if self.xi != 0.0 {
            gauge_in_place(g, &mut v, self.xi);
        }
        for i in 0..d {
            fft::centered_fractional_dft(&mut v, g.p_axis(i), self.oversampling, 1.0);
        }
        for i in 0..d {
            fft::centered_fractional_dft(&mut v, g.q_axis(i), self.oversampling, -1.0);
        }
        let c = (self.alpha / g.h() * g.dp() * g.dq()).powi(d as i32);
        for i in 0..d {
            v.swap_axes(g.p_axis(i), g.q_axis(i));
        }
        let mut v = v.as_standard_layout().mapv(|x| x * c);
        if self.xi != 0.0 {
            gauge_in_place(g, &mut v, -self.xi);
        }
        Ok(phi.with_values(v))
    }
}

pub fn apply_symplectic(k: &SymplecticTransform, phi: &PhaseField) -> Result<PhaseField> {
    k.apply(phi)
}

fn gauge_in_place(g: &PhaseGrid, v: &mut ArrayD<Complex64>, xi: f64) {
    let d = g.dim();
    let (ps, qs) = (g.p_coords(), g.q_coords());
    let (np, nq) = (g.n_p(), g.n_q());
    // exp[−(iξ/ħ) p_i q_i] factorizes over components; one table serves all.
    let table: Vec<Complex64> = ps
        .iter()
        .flat_map(|p| qs.iter().map(move |q| Complex64::from_polar(1.0, -xi * p * q / g.hbar())))
        .collect();
    let shape = g.shape();
    let vs = v.as_slice_mut().expect("standard layout");
    let mut idx = vec![0usize; 2 * d];
    for x in vs.iter_mut() {
        let mut f = Complex64::new(1.0, 0.0);
        for i in 0..d {
            f *= table[idx[i] * nq + idx[d + i]];
        }
        *x *= f;
        for ax in (0..2 * d).rev() {
            idx[ax] += 1;
            if idx[ax] < shape[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
    debug_assert_eq!(table.len(), np * nq);
}

/// `U_G(ξ) φ = exp[−(iξ/ħ) p·q] φ`.
pub fn gauge_transform(phi: &PhaseField, xi: f64) -> PhaseField {
    let mut v = phi.values().clone();
    gauge_in_place(phi.grid(), &mut v, xi);
    phi.with_values(v)
}

/// Pre-quantum generators; `J`, `L`, `S` take a Cartesian component
/// (`2` is the only one available in two dimensions).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    P(usize),
    Q(usize),
    J(usize),
    L(usize),
    S(usize),
}

fn multiply_coordinate(g: &PhaseGrid, v: &ArrayD<Complex64>, axis: usize) -> ArrayD<Complex64> {
    let coords = if axis < g.dim() { g.p_coords() } else { g.q_coords() };
    let factors: Vec<Complex64> = coords.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut out = v.clone();
    fft::scale_axis(&mut out, axis, &factors);
    out
}

fn cross_pair(d: usize, k: usize) -> Result<(usize, usize)> {
    match (d, k) {
        (2, 2) => Ok((0, 1)),
        (3, 0..=2) => Ok(((k + 1) % 3, (k + 2) % 3)),
        _ => Err(Error::UnsupportedDimension(format!("component {k} of an axial generator in dim {d}"))),
    }
}

fn p_star(g: &PhaseGrid, v: &ArrayD<Complex64>, i: usize) -> ArrayD<Complex64> {
    fft::derivative(v, g.q_axis(i), g.dq(), 1).mapv(|x| -I * g.hbar() * x)
}

fn q_star(g: &PhaseGrid, v: &ArrayD<Complex64>, i: usize) -> ArrayD<Complex64> {
    let dp = fft::derivative(v, g.p_axis(i), g.dp(), 1);
    let mut out = multiply_coordinate(g, v, g.q_axis(i));
    out.zip_mut_with(&dp, |o, d| *o += I * g.hbar() * d);
    out
}

fn j_star(g: &PhaseGrid, v: &ArrayD<Complex64>, k: usize) -> Result<ArrayD<Complex64>> {
    let (i, j) = cross_pair(g.dim(), k)?;
    let term = |ax_i: usize, ax_j: usize, dx: f64| {
        let dj = fft::derivative(v, ax_j, dx, 1);
        let di = fft::derivative(v, ax_i, dx, 1);
        let mut a = multiply_coordinate(g, &dj, ax_i);
        a -= &multiply_coordinate(g, &di, ax_j);
        a
    };
    let mut out = term(g.q_axis(i), g.q_axis(j), g.dq());
    out += &term(g.p_axis(i), g.p_axis(j), g.dp());
    Ok(out.mapv(|x| -I * g.hbar() * x))
}

fn l_star(g: &PhaseGrid, v: &ArrayD<Complex64>, k: usize) -> Result<ArrayD<Complex64>> {
    let (i, j) = cross_pair(g.dim(), k)?;
    let mut out = q_star(g, &p_star(g, v, j), i);
    out -= &q_star(g, &p_star(g, v, i), j);
    Ok(out)
}

pub fn prequantum_apply(gen: Generator, phi: &PhaseField) -> Result<PhaseField> {
    let g = phi.grid();
    let v = phi.values();
    let check = |i: usize| {
        if i < g.dim() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("component {i} out of range")))
        }
    };
    let out = match gen {
        Generator::P(i) => {
            check(i)?;
            p_star(g, v, i)
        }
        Generator::Q(i) => {
            check(i)?;
            q_star(g, v, i)
        }
        Generator::J(k) => j_star(g, v, k)?,
        Generator::L(k) => l_star(g, v, k)?,
        Generator::S(k) => j_star(g, v, k)? - l_star(g, v, k)?,
    };
    Ok(phi.with_values(out))
}

/// Multiplication of a field by a phase-space coordinate.
pub fn multiply_by_p(phi: &PhaseField, i: usize) -> PhaseField {
    let g = phi.grid();
    phi.with_values(multiply_coordinate(g, phi.values(), g.p_axis(i)))
}

pub fn multiply_by_q(phi: &PhaseField, i: usize) -> PhaseField {
    let g = phi.grid();
    phi.with_values(multiply_coordinate(g, phi.values(), g.q_axis(i)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupAction {
    Translation(Vec<f64>),
    Boost(Vec<f64>),
    /// Angle in two dimensions, rotation vector in three.
    Rotation(Vec<f64>),
}

fn shift_axis(v: &mut ArrayD<Complex64>, axis: usize, dx: f64, by: f64) {
    fft::fourier_multiply(v, axis, dx, |k, _| Complex64::from_polar(1.0, -k * by));
}

/// `f(x_a, x_b) ↦ f(x_a − s·x_b, x_b)` by spectral shifts of each lane.
fn shear(v: &mut ArrayD<Complex64>, a: usize, b: usize, coords: &[f64], dx: f64, s: f64) {
    let n = v.shape()[a];
    let ks = fft::wavenumbers(n, dx);
    fft::fft_axis(v, a, rustfft::FftDirection::Forward);
    let inv = 1.0 / n as f64;
    for (idx, x) in v.indexed_iter_mut() {
        *x *= Complex64::from_polar(inv, -ks[idx[a]] * s * coords[idx[b]]);
    }
    fft::fft_axis(v, a, rustfft::FftDirection::Inverse);
}

/// Rotates the `(a, b)` plane by `theta` with three shears.
fn rotate_plane(v: &mut ArrayD<Complex64>, a: usize, b: usize, coords: &[f64], dx: f64, theta: f64) {
    if theta == 0.0 {
        return;
    }
    let t = -(0.5 * theta).tan();
    shear(v, a, b, coords, dx, t);
    shear(v, b, a, coords, dx, theta.sin());
    shear(v, a, b, coords, dx, t);
}

/// ZYZ Euler angles of the rotation with the given rotation vector.
fn euler_zyz(w: &[f64]) -> (f64, f64, f64) {
    let th = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    if th == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let (x, y, z) = (w[0] / th, w[1] / th, w[2] / th);
    let (s, c) = th.sin_cos();
    let t = 1.0 - c;
    let r = [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ];
    let beta = r[2][2].clamp(-1.0, 1.0).acos();
    if beta.sin().abs() < 1e-12 {
        let alpha = r[1][0].atan2(r[0][0]);
        return (alpha, beta, 0.0);
    }
    (r[1][2].atan2(r[0][2]), beta, r[2][1].atan2(-r[2][0]))
}

pub fn group_action(action: &GroupAction, phi: &PhaseField) -> Result<PhaseField> {
    let g = phi.grid();
    let d = g.dim();
    let mut v = phi.values().clone();
    match action {
        GroupAction::Translation(q0) => {
            check_len(q0, d)?;
            for i in 0..d {
                shift_axis(&mut v, g.q_axis(i), g.dq(), q0[i]);
            }
        }
        GroupAction::Boost(p0) => {
            check_len(p0, d)?;
            for i in 0..d {
                shift_axis(&mut v, g.p_axis(i), g.dp(), p0[i]);
            }
            let hbar = g.hbar();
            let mut k = 0;
            let vs = v.as_slice_mut().expect("standard layout");
            g.for_each_point(|_, _, q| {
                let ph: f64 = p0.iter().zip(q).map(|(a, b)| a * b).sum();
                vs[k] *= Complex64::from_polar(1.0, ph / hbar);
                k += 1;
            });
        }
        GroupAction::Rotation(w) => {
            let (pc, qc) = (g.p_coords(), g.q_coords());
            let planes: Vec<(usize, usize, f64)> = match d {
                1 => return Err(Error::UnsupportedDimension("rotation needs dim ≥ 2".into())),
                2 => {
                    check_len(w, 1)?;
                    vec![(0, 1, w[0])]
                }
                _ => {
                    check_len(w, 3)?;
                    let (al, be, ga) = euler_zyz(w);
                    vec![(0, 1, ga), (2, 0, be), (0, 1, al)]
                }
            };
            for (a, b, th) in planes {
                rotate_plane(&mut v, g.p_axis(a), g.p_axis(b), &pc, g.dp(), th);
                rotate_plane(&mut v, g.q_axis(a), g.q_axis(b), &qc, g.dq(), th);
            }
        }
    }
    Ok(phi.with_values(v))
}

fn check_len(v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidArgument(format!("expected {n} parameters, got {}", v.len())));
    }
    Ok(())
}

/// Reflects the given axes about the origin of a symmetric grid.
fn reflect(v: &ArrayD<Complex64>, axes: &[usize]) -> ArrayD<Complex64> {
    let shape = v.shape().to_vec();
    let rank = shape.len();
    let mut strides = vec![1usize; rank];
    for a in (0..rank.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    let flip: Vec<bool> = (0..rank).map(|a| axes.contains(&a)).collect();
    let src = v.as_standard_layout();
    let src = src.as_slice().expect("standard layout");
    let mut out = Vec::with_capacity(src.len());
    let mut idx = vec![0usize; rank];
    for _ in 0..src.len() {
        let mut from = 0;
        for a in 0..rank {
            let i = if flip[a] { (shape[a] - idx[a]) % shape[a] } else { idx[a] };
            from += i * strides[a];
        }
        out.push(src[from]);
        for a in (0..rank).rev() {
            idx[a] += 1;
            if idx[a] < shape[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    ArrayD::from_shape_vec(IxDyn(&shape), out).expect("shape")
}

/// `K_P φ(p, q) = φ(−p, −q)`.
pub fn parity(phi: &PhaseField) -> Result<PhaseField> {
    if !phi.grid().is_symmetric() {
        return Err(Error::AsymmetricGrid);
    }
    let axes: Vec<usize> = (0..2 * phi.grid().dim()).collect();
    Ok(phi.with_values(reflect(phi.values(), &axes)))
}

/// `K_T φ(p, q) = φ*(−p, q)`.
pub fn time_reversal(phi: &PhaseField) -> Result<PhaseField> {
    if !phi.grid().is_symmetric() {
        return Err(Error::AsymmetricGrid);
    }
    let axes: Vec<usize> = (0..phi.grid().dim()).collect();
    Ok(phi.with_values(reflect(phi.values(), &axes).mapv(|x| x.conj())))
}

/// Grid whose cell satisfies `n·Δp·Δq = h/α`, the setting in which the
/// transform is an exact DFT involution.
pub fn self_dual_grid(dim: usize, n: usize, alpha: f64, hbar: f64) -> Result<PhaseGrid> {
    let half = 0.5 * (n as f64 * 2.0 * PI * hbar / alpha).sqrt();
    let e = crate::phase_grid::Interval::symmetric(half);
    crate::phase_grid::make_grid(dim, e, e, n, n, hbar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_grid::Role;

    fn bump(g: PhaseGrid, p0: f64, q0: f64, s: f64) -> PhaseField {
        PhaseField::from_fn(g, Role::State, |p, q| {
            let e = -((p[0] - p0).powi(2) + (q[0] - q0).powi(2)) / (2.0 * s * s);
            Complex64::new(e.exp(), 0.3 * e.exp() * p[0])
        })
    }

    #[test]
    fn exact_involution_on_self_dual_grid() {
        let g = self_dual_grid(1, 64, 0.5, 1.0).unwrap();
        let k = SymplecticTransform::fundamental(&g).unwrap();
        assert_eq!(k.oversampling(), 1);
        let phi = bump(g, 0.5, -0.3, 1.3);
        let back = k.apply(&k.apply(&phi).unwrap()).unwrap();
        assert!(back.distance(&phi).unwrap() < 1e-12 * phi.norm());
    }

    #[test]
    fn rejects_bad_grids() {
        let e = crate::phase_grid::Interval::new(-4.0, 5.0);
        let g = crate::phase_grid::make_grid(1, e, e, 32, 32, 1.0).unwrap();
        assert_eq!(SymplecticTransform::fundamental(&g).unwrap_err(), Error::AsymmetricGrid);
        let e = crate::phase_grid::Interval::symmetric(3.0);
        let g = crate::phase_grid::make_grid(1, e, e, 32, 32, 1.0).unwrap();
        assert!(matches!(SymplecticTransform::fundamental(&g), Err(Error::IncompatibleGrid(_))));
    }

    #[test]
    fn parity_and_time_reversal_are_involutions() {
        let g = self_dual_grid(1, 32, 0.5, 1.0).unwrap();
        let phi = bump(g, 0.5, -0.3, 1.0);
        assert!(parity(&parity(&phi).unwrap()).unwrap().distance(&phi).unwrap() == 0.0);
        assert!(time_reversal(&time_reversal(&phi).unwrap()).unwrap().distance(&phi).unwrap() == 0.0);
    }

    #[test]
    fn euler_angles_reproduce_z_rotation() {
        let (a, b, c) = euler_zyz(&[0.0, 0.0, 0.7]);
        assert!((a + b + c - 0.7).abs() < 1e-12 && b.abs() < 1e-12);
    }
}
