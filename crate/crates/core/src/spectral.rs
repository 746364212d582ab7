//! Fourier pseudospectral differentiation on the doubly periodic grid.
//!
//! Arrays are indexed `[θ, φ]`, nodes equispaced on `[0, 2π)` in both
//! directions. The Nyquist wavenumber is differentiated to zero, so the
//! derivative matrices are real and skew-symmetric.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
struct Line {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Line {
    fn new(planner: &mut FftPlanner<f64>, len: usize) -> Self {
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

/// Signed integer wavenumber of FFT bin `m` on a grid of `n` points.
pub fn wavenumber(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// FFT plans and wavenumber tables for one grid.
#[derive(Clone)]
pub struct Spectral {
    theta: Line,
    phi: Line,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral")
            .field("n_theta", &self.theta.len)
            .field("n_phi", &self.phi.len)
            .finish()
    }
}

impl Spectral {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            theta: Line::new(&mut planner, n_theta),
            phi: Line::new(&mut planner, n_phi),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.theta.len, self.phi.len)
    }

    /// Full 2D forward transform (unnormalized).
    pub fn forward(&self, a: &Array2<f64>) -> Array2<Complex64> {
        let mut c = a.mapv(|x| Complex64::new(x, 0.0));
        self.transform_axis(&mut c, 1, true);
        self.transform_axis(&mut c, 0, true);
        c
    }

    /// Inverse of [`Spectral::forward`], keeping the real part.
    pub fn inverse(&self, mut c: Array2<Complex64>) -> Array2<f64> {
        self.transform_axis(&mut c, 0, false);
        self.transform_axis(&mut c, 1, false);
        let scale = 1.0 / (self.theta.len * self.phi.len) as f64;
        c.mapv(|z| z.re * scale)
    }

    fn transform_axis(&self, c: &mut Array2<Complex64>, axis: usize, forward: bool) {
        let line = if axis == 0 { &self.theta } else { &self.phi };
        let plan = if forward { &line.forward } else { &line.inverse };
        let mut buf = vec![Complex64::new(0.0, 0.0); line.len];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for mut lane in c.lanes_mut(Axis(axis)) {
            for (b, x) in buf.iter_mut().zip(lane.iter()) {
                *b = *x;
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for (x, b) in lane.iter_mut().zip(buf.iter()) {
                *x = *b;
            }
        }
    }

    fn derivative_along(&self, a: &Array2<f64>, axis: usize, order: u32) -> Array2<f64> {
        let line = if axis == 0 { &self.theta } else { &self.phi };
        let n = line.len;
        let mut out = Array2::zeros(a.raw_dim());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![
            Complex64::new(0.0, 0.0);
            line.forward
                .get_inplace_scratch_len()
                .max(line.inverse.get_inplace_scratch_len())
        ];
        let factors: Vec<Complex64> = (0..n)
            .map(|m| {
                let k = wavenumber(m, n);
                if 2 * m == n {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(0.0, k as f64).powu(order) / n as f64
            })
            .collect();
        for (src, mut dst) in a.lanes(Axis(axis)).into_iter().zip(out.lanes_mut(Axis(axis))) {
            for (b, x) in buf.iter_mut().zip(src.iter()) {
                *b = Complex64::new(*x, 0.0);
            }
            line.forward.process_with_scratch(&mut buf, &mut scratch);
            for (b, f) in buf.iter_mut().zip(factors.iter()) {
                *b *= f;
            }
            line.inverse.process_with_scratch(&mut buf, &mut scratch);
            for (x, b) in dst.iter_mut().zip(buf.iter()) {
                *x = b.re;
            }
        }
        out
    }

    /// ∂/∂θ
    pub fn d_theta(&self, a: &Array2<f64>) -> Array2<f64> {
        self.derivative_along(a, 0, 1)
    }

    /// ∂/∂φ
    pub fn d_phi(&self, a: &Array2<f64>) -> Array2<f64> {
        self.derivative_along(a, 1, 1)
    }

    /// Partial derivative along chart direction `dir` (0 = θ, 1 = φ).
    pub fn d(&self, dir: usize, a: &Array2<f64>) -> Array2<f64> {
        self.derivative_along(a, dir, 1)
    }

    /// Zeroes every Fourier coefficient for which `keep(kθ, kφ)` is false.
    pub fn filter(&self, a: &Array2<f64>, keep: impl Fn(i64, i64) -> bool) -> Array2<f64> {
        let (nt, np) = self.shape();
        let mut c = self.forward(a);
        for ((m, l), z) in c.indexed_iter_mut() {
            if !keep(wavenumber(m, nt), wavenumber(l, np)) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse(c)
    }

    /// Two-thirds rule: drops modes with `|k| > N/3` in either direction.
    pub fn dealias(&self, a: &Array2<f64>) -> Array2<f64> {
        let (nt, np) = self.shape();
        let (ct, cp) = ((nt / 3) as i64, (np / 3) as i64);
        self.filter(a, |kt, kp| kt.abs() <= ct && kp.abs() <= cp)
    }

    /// Removes the Nyquist rows and columns of the spectrum.
    pub fn strip_nyquist(&self, a: &Array2<f64>) -> Array2<f64> {
        let (nt, np) = self.shape();
        let (ht, hp) = ((nt / 2) as i64, (np / 2) as i64);
        self.filter(a, |kt, kp| kt.abs() < ht && kp.abs() < hp)
    }
}

/// Node coordinate `2π i / n`.
pub fn node(i: usize, n: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}
