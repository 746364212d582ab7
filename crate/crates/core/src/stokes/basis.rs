use faer::{Mat, MatRef, Side};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::fieldcalc::lower;
use crate::geometry::SurfaceChart;

/// L²-orthonormal basis of the discrete divergence-free fields.
///
/// The span is `{((∂_φψ + a)/√g, (−∂_θψ + b)/√g)}` over stream functions
/// `ψ` without Nyquist content and constants `a, b`. Every member has zero
/// discrete divergence, and the span excludes the grid-scale fields that the
/// Fourier derivative cannot see (those would otherwise pose as extra
/// equilibria). Its dimension is `(N_θ−1)(N_φ−1) + 1`.
#[derive(Debug, Clone)]
pub struct DivFreeBasis {
    shape: (usize, usize),
    /// `2n × m`, component-major grid values of each member.
    columns: Mat<f64>,
    /// `W · columns`, so that `(u|b_a)_Σ = u · weighted[:, a]`.
    weighted: Mat<f64>,
}

/// `h² √g g_ij u^j`, flattened component-major.
pub(crate) fn weighted_vec(chart: &SurfaceChart, u: &VectorField) -> Vec<f64> {
    let (ht, hp) = chart.spacing();
    let w = chart.area_density() * (ht * hp);
    let low = lower(chart, u);
    let mut out = Vec::with_capacity(2 * w.len());
    for c in &low {
        out.extend(c.iter().zip(w.iter()).map(|(a, b)| a * b));
    }
    out
}

/// Builds a matrix column by column (columns evaluated in parallel).
pub(crate) fn columns_from<F>(rows: usize, cols: usize, f: F) -> Mat<f64>
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    let data: Vec<Vec<f64>> = (0..cols).into_par_iter().map(&f).collect();
    let mut m = Mat::<f64>::zeros(rows, cols);
    for (j, col) in data.into_iter().enumerate() {
        debug_assert_eq!(col.len(), rows);
        m.col_as_slice_mut(j).copy_from_slice(&col);
    }
    m
}

/// Real stream-function modes: `(k_θ, k_φ, is_sine)` over a half plane,
/// ordered by `|k|²`.
fn stream_modes(nt: usize, np: usize) -> Vec<(i64, i64, bool)> {
    let (ht, hp) = ((nt / 2) as i64, (np / 2) as i64);
    let mut modes = Vec::new();
    for kt in 0..ht {
        for kp in -(hp - 1)..hp {
            if kt == 0 && kp <= 0 {
                continue;
            }
            modes.push((kt, kp, false));
            modes.push((kt, kp, true));
        }
    }
    modes.sort_by_key(|&(kt, kp, s)| (kt * kt + kp * kp, kt, kp, s));
    modes
}

fn generator(chart: &SurfaceChart, index: usize, modes: &[(i64, i64, bool)]) -> VectorField {
    let w = chart.area_density();
    match index {
        0 => VectorField::new(w.mapv(|x| 1.0 / x), w.mapv(|_| 0.0)),
        1 => VectorField::new(w.mapv(|_| 0.0), w.mapv(|x| 1.0 / x)),
        _ => {
            let (kt, kp, sine) = modes[index - 2];
            let (ktf, kpf) = (kt as f64, kp as f64);
            let norm = (ktf * ktf + kpf * kpf).sqrt();
            // ψ = cos x  ⇒ (∂_φψ, −∂_θψ) = (−k_φ sin x,  k_θ sin x)
            // ψ = sin x  ⇒ (∂_φψ, −∂_θψ) = ( k_φ cos x, −k_θ cos x)
            let phase = chart.sample(|t, p| {
                let x = ktf * t + kpf * p;
                if sine {
                    x.cos()
                } else {
                    -x.sin()
                }
            });
            let u0 = &phase * (kpf / norm) / w;
            let u1 = &phase * (-ktf / norm) / w;
            VectorField::new(u0, u1)
        }
    }
}

/// `B ← B L⁻ᵀ` (and the same for `WB`) where `L Lᵀ = Bᵀ W B`.
fn cholesky_orthonormalize(columns: &mut Mat<f64>, weighted: &mut Mat<f64>) -> Result<()> {
    let gram = columns.transpose() * &*weighted;
    let gram = Mat::from_fn(gram.nrows(), gram.ncols(), |i, j| 0.5 * (gram[(i, j)] + gram[(j, i)]));
    let llt = gram.llt(Side::Lower).map_err(|e| {
        Error::RankDeficient(format!("Gram matrix is not positive definite ({e:?})"))
    })?;
    let l = llt.L();
    let (lo, hi) = (0..l.nrows()).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
        let d = l[(i, i)] * l[(i, i)];
        (lo.min(d), hi.max(d))
    });
    if lo < 1e-12 * hi {
        return Err(Error::RankDeficient(format!(
            "Gram pivot ratio {:e} below 1e-12",
            lo / hi
        )));
    }
    for m in [columns, weighted] {
        let mut t = m.transpose().to_owned();
        l.solve_lower_triangular_in_place(t.as_mut());
        *m = t.transpose().to_owned();
    }
    Ok(())
}

/// Orthonormal basis of the discrete divergence-free subspace.
///
/// `tol` bounds the Gram defect `max |(b_a|b_b)_Σ − δ_ab|` accepted after
/// orthonormalization (use `1e-10` or tighter).
pub fn divfree_basis(chart: &SurfaceChart, tol: f64) -> Result<DivFreeBasis> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let (nt, np) = chart.grid_sizes();
    let n = nt * np;
    let modes = stream_modes(nt, np);
    let m = modes.len() + 2;
    let mut columns = columns_from(2 * n, m, |a| {
        let mut u = generator(chart, a, &modes);
        let norm = crate::fieldcalc::l2_inner_unchecked(chart, &u, &u).sqrt();
        u = u.scale(1.0 / norm);
        u.to_vec()
    });
    let mut weighted = columns_from(2 * n, m, |a| {
        weighted_vec(chart, &VectorField::from_slice((nt, np), columns.col_as_slice(a)))
    });
    // two passes of Cholesky QR
    cholesky_orthonormalize(&mut columns, &mut weighted)?;
    cholesky_orthonormalize(&mut columns, &mut weighted)?;
    let basis = DivFreeBasis { shape: (nt, np), columns, weighted };
    let defect = basis.gram_defect();
    if defect > tol {
        return Err(Error::RankDeficient(format!(
            "Gram defect {defect:e} exceeds tolerance {tol:e}"
        )));
    }
    Ok(basis)
}

impl DivFreeBasis {
    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn grid_sizes(&self) -> (usize, usize) {
        self.shape
    }

    pub fn columns(&self) -> MatRef<'_, f64> {
        self.columns.as_ref()
    }

    pub fn weighted(&self) -> MatRef<'_, f64> {
        self.weighted.as_ref()
    }

    pub fn field(&self, a: usize) -> VectorField {
        VectorField::from_slice(self.shape, self.columns.col_as_slice(a))
    }

    pub fn fields(&self) -> Vec<VectorField> {
        (0..self.dim()).map(|a| self.field(a)).collect()
    }

    /// `c_a = (u|b_a)_Σ`
    pub fn coefficients(&self, u: &VectorField) -> Vec<f64> {
        let v = u.to_vec();
        (0..self.dim())
            .map(|a| {
                self.weighted
                    .col_as_slice(a)
                    .iter()
                    .zip(v.iter())
                    .map(|(x, y)| x * y)
                    .sum()
            })
            .collect()
    }

    /// `Σ_a c_a b_a`
    pub fn synthesize(&self, c: &[f64]) -> VectorField {
        assert_eq!(c.len(), self.dim());
        let mut out = vec![0.0; self.columns.nrows()];
        for (a, &ca) in c.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(self.columns.col_as_slice(a)) {
                *o += ca * x;
            }
        }
        VectorField::from_slice(self.shape, &out)
    }

    /// `max |(b_a|b_b)_Σ − δ_ab|`
    pub fn gram_defect(&self) -> f64 {
        let gram = self.columns.transpose() * &self.weighted;
        let mut worst = 0.0f64;
        for j in 0..gram.ncols() {
            for i in 0..gram.nrows() {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - id).abs());
            }
        }
        worst
    }
}
