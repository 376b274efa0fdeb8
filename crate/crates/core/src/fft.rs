//! Axis-wise FFT kernels shared by the field modules.
//!
//! Every routine treats the chosen axis as periodic with uniformly spaced
//! samples. Frequencies follow the `fftfreq` ordering, so the Nyquist bin of
//! an even-length axis carries the negative frequency.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{ArrayD, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

/// Angular wavenumbers of an `n`-point periodic axis with spacing `dx`.
pub fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let scale = 2.0 * PI / (n as f64 * dx);
    (0..n)
        .map(|j| {
            let j = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            j * scale
        })
        .collect()
}

/// Hands the lanes along `axis` to `f` in contiguous batches and writes the
/// results back. Standard-layout arrays are moved in tiles of neighbouring
/// lanes so reads and writes stay cache friendly.
pub(crate) fn with_lanes<F>(data: &mut ArrayD<Complex64>, axis: usize, mut f: F)
where
    F: FnMut(&mut [Complex64], usize),
{
    const TILE: usize = 64;
    let shape = data.shape().to_vec();
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    if let Some(slice) = data.as_slice_mut() {
        if inner == 1 {
            f(slice, n);
            return;
        }
        let block = n * inner;
        let mut buf = vec![Complex64::new(0.0, 0.0); n * TILE.min(inner)];
        for chunk in slice.chunks_mut(block) {
            let mut start = 0;
            while start < inner {
                let t = TILE.min(inner - start);
                for k in 0..n {
                    let row = &chunk[k * inner + start..k * inner + start + t];
                    for (i, v) in row.iter().enumerate() {
                        buf[i * n + k] = *v;
                    }
                }
                f(&mut buf[..t * n], n);
                for k in 0..n {
                    let row = &mut chunk[k * inner + start..k * inner + start + t];
                    for (i, v) in row.iter_mut().enumerate() {
                        *v = buf[i * n + k];
                    }
                }
                start += t;
            }
        }
        return;
    }
    let mut buf: Vec<Complex64> = Vec::with_capacity(data.len());
    for lane in data.lanes(Axis(axis)) {
        buf.extend(lane.iter());
    }
    f(&mut buf, n);
    for (mut lane, chunk) in data.lanes_mut(Axis(axis)).into_iter().zip(buf.chunks(n)) {
        for (dst, src) in lane.iter_mut().zip(chunk) {
            *dst = *src;
        }
    }
}

/// Unnormalized transform along one axis.
pub fn fft_axis(data: &mut ArrayD<Complex64>, axis: usize, direction: FftDirection) {
    let fft = plan(data.shape()[axis], direction);
    with_lanes(data, axis, |buf, _| fft.process(buf));
}

/// Multiplies every lane along `axis` elementwise by `factors`.
pub fn scale_axis(data: &mut ArrayD<Complex64>, axis: usize, factors: &[Complex64]) {
    let n = data.shape()[axis];
    let inner: usize = data.shape()[axis + 1..].iter().product();
    if let Some(slice) = data.as_slice_mut() {
        for block in slice.chunks_mut(n * inner) {
            for (row, f) in block.chunks_mut(inner).zip(factors) {
                for v in row {
                    *v *= *f;
                }
            }
        }
        return;
    }
    for mut lane in data.lanes_mut(Axis(axis)) {
        for (v, f) in lane.iter_mut().zip(factors) {
            *v *= *f;
        }
    }
}

/// Applies the Fourier multiplier `m(k)` along one axis.
pub fn fourier_multiply<M>(data: &mut ArrayD<Complex64>, axis: usize, dx: f64, m: M)
where
    M: Fn(f64, bool) -> Complex64,
{
    let n = data.shape()[axis];
    let ks = wavenumbers(n, dx);
    let inv_n = 1.0 / n as f64;
    let factors: Vec<Complex64> = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| m(k, j == n / 2) * inv_n)
        .collect();
    let (fwd, inv) = (plan(n, FftDirection::Forward), plan(n, FftDirection::Inverse));
    with_lanes(data, axis, |buf, n| {
        fwd.process(buf);
        for chunk in buf.chunks_mut(n) {
            for (v, f) in chunk.iter_mut().zip(&factors) {
                *v *= *f;
            }
        }
        inv.process(buf);
    });
}

/// Spectral derivative of the given order along one axis. Odd orders drop
/// the Nyquist bin so the operator stays anti-Hermitian.
pub fn derivative(data: &ArrayD<Complex64>, axis: usize, dx: f64, order: u32) -> ArrayD<Complex64> {
    let mut out = data.clone();
    derivative_in_place(&mut out, axis, dx, order);
    out
}

pub fn derivative_in_place(data: &mut ArrayD<Complex64>, axis: usize, dx: f64, order: u32) {
    fourier_multiply(data, axis, dx, |k, nyquist| {
        if nyquist && order % 2 == 1 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k).powu(order)
        }
    });
}

/// Real-valued spectral derivative.
pub fn derivative_real(data: &ArrayD<f64>, axis: usize, dx: f64, order: u32) -> ArrayD<f64> {
    let mut c = data.mapv(|v| Complex64::new(v, 0.0));
    derivative_in_place(&mut c, axis, dx, order);
    c.mapv(|v| v.re)
}

/// Centered fractional DFT along `axis`:
/// `y[b] = sum_k x[k] exp(sign * 2 pi i b k / (r n))` with `b, k` running over
/// `[-n/2, n/2)` and `r` a positive integer. Computed with `r` twisted FFTs
/// of length `n` per lane.
pub fn centered_fractional_dft(data: &mut ArrayD<Complex64>, axis: usize, r: usize, sign: f64) {
    let direction = if sign > 0.0 {
        FftDirection::Inverse
    } else {
        FftDirection::Forward
    };
    let n = data.shape()[axis];
    let half = (n / 2) as i64;
    let fft = plan(n, direction);
    let twists: Vec<Vec<Complex64>> = (0..r)
        .map(|s| {
            (0..n)
                .map(|k| {
                    let kc = k as i64 - half;
                    Complex64::from_polar(1.0, sign * 2.0 * PI * (s as f64) * kc as f64 / (r * n) as f64)
                })
                .collect()
        })
        .collect();
    // Output b = r c + s with b centered; the FFT index is c mod n and the
    // centering of k contributes (-1)^c.
    let routes: Vec<(usize, usize, f64)> = (0..n)
        .map(|b_idx| {
            let b = b_idx as i64 - half;
            let s = b.rem_euclid(r as i64);
            let c = (b - s) / r as i64;
            let sgn = if c.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            (s as usize, c.rem_euclid(n as i64) as usize, sgn)
        })
        .collect();
    let mut work = vec![Complex64::new(0.0, 0.0); n];
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    with_lanes(data, axis, |buf, n| {
        for lane in buf.chunks_mut(n) {
            for (s, twist) in twists.iter().enumerate() {
                for ((w, x), t) in work.iter_mut().zip(lane.iter()).zip(twist) {
                    *w = *x * *t;
                }
                fft.process(&mut work);
                for (o, &(rs, c, sgn)) in out.iter_mut().zip(&routes) {
                    if rs == s {
                        *o = work[c] * sgn;
                    }
                }
            }
            lane.copy_from_slice(&out);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::IxDyn;

    #[test]
    fn wavenumbers_follow_fftfreq() {
        let k = wavenumbers(8, 0.5);
        let s = 2.0 * PI / 4.0;
        assert_eq!(k[1], s);
        assert_eq!(k[4], -4.0 * s);
        assert_eq!(k[7], -s);
    }

    #[test]
    fn derivative_of_gaussian() {
        let n = 128;
        let dx = 20.0 / n as f64;
        let xs: Vec<f64> = (0..n).map(|j| -10.0 + j as f64 * dx).collect();
        let data = ArrayD::from_shape_fn(IxDyn(&[n]), |i| Complex64::new((-xs[i[0]] * xs[i[0]]).exp(), 0.0));
        let d = derivative(&data, 0, dx, 1);
        for (i, &x) in xs.iter().enumerate() {
            let exact = -2.0 * x * (-x * x).exp();
            assert!((d[[i]].re - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn fractional_dft_matches_direct_sum() {
        let n = 16;
        for r in 1..=3 {
            for &sign in &[1.0, -1.0] {
                let x: Vec<Complex64> = (0..n).map(|k| Complex64::new((k as f64).sin(), (0.3 * k as f64).cos())).collect();
                let mut data = ArrayD::from_shape_vec(IxDyn(&[n]), x.clone()).unwrap();
                centered_fractional_dft(&mut data, 0, r, sign);
                for b in 0..n {
                    let bc = b as f64 - (n / 2) as f64;
                    let direct: Complex64 = x
                        .iter()
                        .enumerate()
                        .map(|(k, v)| {
                            let kc = k as f64 - (n / 2) as f64;
                            v * Complex64::from_polar(1.0, sign * 2.0 * PI * bc * kc / (r * n) as f64)
                        })
                        .sum();
                    assert!((data[[b]] - direct).norm() < 1e-11, "r={r} b={b}");
                }
            }
        }
    }
}
