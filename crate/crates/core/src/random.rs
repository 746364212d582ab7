//! Seeded random smooth fields.
//!
//! Fourier coefficients are drawn from a ChaCha8 stream (`rand_chacha`),
//! normally distributed with variance `exp(−|k|²/8)`. Modes are visited in a
//! fixed order over `|k_θ|, |k_φ| ≤ 25` independent of the grid, so one seed
//! describes the same continuous field at every resolution that can carry
//! it. Modes at or above the grid's Nyquist wavenumber are drawn but not used.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::field::{TensorField, Variance, VectorField};
use crate::geometry::SurfaceChart;

/// Largest wavenumber drawn; `exp(−25²/16)` is below double precision.
const MAX_MODE: i64 = 25;

#[derive(Debug, Clone)]
pub struct SmoothFieldSampler {
    rng: ChaCha8Rng,
}

impl SmoothFieldSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Mean-free random trigonometric polynomial, free of Nyquist modes.
    pub fn scalar_field(&mut self, chart: &SurfaceChart) -> Array2<f64> {
        let (nt, np) = chart.grid_sizes();
        let (ct, cp) = ((nt / 2) as i64, (np / 2) as i64);
        let theta: Vec<f64> = (0..nt).map(|i| chart.coords(i, 0).0).collect();
        let phi: Vec<f64> = (0..np).map(|j| chart.coords(0, j).1).collect();
        let mut out = Array2::zeros((nt, np));
        for kt in 0..=MAX_MODE {
            for kp in -MAX_MODE..=MAX_MODE {
                if kt == 0 && kp <= 0 {
                    continue;
                }
                let sigma = (-((kt * kt + kp * kp) as f64) / 16.0).exp();
                let a = self.normal() * sigma;
                let b = self.normal() * sigma;
                if kt >= ct || kp.abs() >= cp {
                    continue;
                }
                let (ktf, kpf) = (kt as f64, kp as f64);
                let ct_: Vec<(f64, f64)> = theta.iter().map(|t| (ktf * t).sin_cos()).collect();
                let cp_: Vec<(f64, f64)> = phi.iter().map(|p| (kpf * p).sin_cos()).collect();
                for (i, &(st, ctv)) in ct_.iter().enumerate() {
                    for (j, &(sp, cpv)) in cp_.iter().enumerate() {
                        // cos(x+y), sin(x+y)
                        let c = ctv * cpv - st * sp;
                        let s = st * cpv + ctv * sp;
                        out[[i, j]] += a * c + b * s;
                    }
                }
            }
        }
        out
    }

    /// Random smooth vector field with independent components; not divergence-free.
    pub fn vector_field(&mut self, chart: &SurfaceChart) -> VectorField {
        let a = self.scalar_field(chart);
        let b = self.scalar_field(chart);
        let (ca, cb) = (self.normal(), self.normal());
        VectorField::new(a + ca, b + cb)
    }

    /// Random smooth divergence-free field `((∂_φψ + a)/√g, (−∂_θψ + b)/√g)`.
    ///
    /// The stream function `ψ` is a random scalar field and `(a, b)` set the
    /// harmonic part. The discrete divergence of the result vanishes to
    /// round-off because the Fourier derivatives commute.
    pub fn divfree_field(&mut self, chart: &SurfaceChart) -> VectorField {
        let psi = self.scalar_field(chart);
        let (a, b) = (self.normal(), self.normal());
        let s = chart.spectral();
        let w = chart.area_density();
        VectorField::new((s.d_phi(&psi) + a) / w, (-s.d_theta(&psi) + b) / w)
    }

    /// Random smooth symmetric covariant tensor.
    pub fn symmetric_tensor(&mut self, chart: &SurfaceChart) -> TensorField {
        let a = self.scalar_field(chart);
        let b = self.scalar_field(chart);
        let c = self.scalar_field(chart);
        TensorField { comps: [[a, b.clone()], [b, c]], variance: Variance::Covariant }
    }
}
