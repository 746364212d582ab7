use faer::{Mat, MatRef};

use super::basis::{columns_from, DivFreeBasis};
use super::bochner_ricci;
use crate::error::{Error, Result};
use crate::field::{TensorField, Variance, VectorField};
use crate::fieldcalc::{covariant_unchecked, deformation_unchecked};
use crate::geometry::SurfaceChart;

/// Relative asymmetry above which assembly fails.
pub const ASYMMETRY_LIMIT: f64 = 1e-6;
/// Relative asymmetry below which the matrix is flagged symmetric.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Matrix of the Stokes operator in an orthonormal divergence-free basis.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    basis: DivFreeBasis,
    mu_s: f64,
    entries: Mat<f64>,
    asymmetry: f64,
    symmetric: bool,
}

impl OperatorMatrix {
    pub fn basis(&self) -> &DivFreeBasis {
        &self.basis
    }

    pub fn mu_s(&self) -> f64 {
        self.mu_s
    }

    /// `M_ab = (A b_b | b_a)_Σ`
    pub fn entries(&self) -> MatRef<'_, f64> {
        self.entries.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `‖M − Mᵀ‖_max / ‖M‖_max`
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `½(M + Mᵀ)`
    pub fn symmetric_part(&self) -> Mat<f64> {
        let m = &self.entries;
        Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// Applies `M` to basis coefficients.
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        let m = &self.entries;
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * c[j]).sum()).collect()
    }
}

fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].abs());
        }
    }
    worst
}

fn relative_asymmetry(m: MatRef<'_, f64>) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Assembles `M_ab = (A b_b | b_a)_Σ` with the Bochner form of `A`.
///
/// The basis lies in the range of the Helmholtz projection, which is the
/// orthogonal projection for the discrete inner product, so
/// `(P L b_b | b_a)_Σ = (L b_b | b_a)_Σ` and the projection is skipped.
pub fn assemble_operator(chart: &SurfaceChart, mu_s: f64, basis: &DivFreeBasis) -> Result<OperatorMatrix> {
    if !(mu_s > 0.0) {
        return Err(Error::InvalidArgument(format!("viscosity must be positive, got {mu_s}")));
    }
    chart.check_shape(basis.grid_sizes())?;
    let rows = basis.columns().nrows();
    let applied = columns_from(rows, basis.dim(), |b| {
        bochner_ricci(chart, &basis.field(b)).scale(-mu_s).to_vec()
    });
    let entries = basis.weighted().transpose() * &applied;
    let asymmetry = relative_asymmetry(entries.as_ref());
    if !asymmetry.is_finite() || asymmetry > ASYMMETRY_LIMIT {
        return Err(Error::Asymmetric(asymmetry));
    }
    Ok(OperatorMatrix {
        basis: basis.clone(),
        mu_s,
        entries,
        asymmetry,
        symmetric: asymmetry <= SYMMETRY_TOL,
    })
}

/// `h² √g · (contraction metric) · T`, flattened, so that `(S|T)_Σ = S · result`.
fn weighted_tensor(chart: &SurfaceChart, t: &TensorField) -> Vec<f64> {
    let g = chart.metric();
    let gi = chart.inv_metric();
    let (first, second) = match t.variance {
        Variance::Mixed => (g, gi),
        Variance::Covariant => (gi, gi),
    };
    let (ht, hp) = chart.spacing();
    let w = chart.area_density() * (ht * hp);
    let mut out = Vec::with_capacity(4 * w.len());
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = ndarray::Array2::<f64>::zeros(w.dim());
            for k in 0..2 {
                for l in 0..2 {
                    acc = acc + &(&first[i][k] * &second[j][l] * &t.comps[k][l]);
                }
            }
            out.extend((acc * &w).iter());
        }
    }
    out
}

fn flat_tensor(t: &TensorField) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            out.extend(t.comps[i][j].iter());
        }
    }
    out
}

fn tensor_gram<F>(chart: &SurfaceChart, basis: &DivFreeBasis, f: F) -> Result<Mat<f64>>
where
    F: Fn(&VectorField) -> TensorField + Sync,
{
    chart.check_shape(basis.grid_sizes())?;
    let rows = 4 * chart.node_count();
    let plain = columns_from(rows, basis.dim(), |a| flat_tensor(&f(&basis.field(a))));
    let weighted = columns_from(rows, basis.dim(), |a| weighted_tensor(chart, &f(&basis.field(a))));
    let gram = plain.transpose() * &weighted;
    Ok(Mat::from_fn(gram.nrows(), gram.ncols(), |i, j| 0.5 * (gram[(i, j)] + gram[(j, i)])))
}

/// `G_ab = (D_Σ b_a | D_Σ b_b)_Σ`
pub fn deformation_gram(chart: &SurfaceChart, basis: &DivFreeBasis) -> Result<Mat<f64>> {
    tensor_gram(chart, basis, |u| deformation_unchecked(chart, u))
}

/// `G_ab = (∇b_a | ∇b_b)_Σ`
pub fn gradient_gram(chart: &SurfaceChart, basis: &DivFreeBasis) -> Result<Mat<f64>> {
    tensor_gram(chart, basis, |u| covariant_unchecked(chart, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_flat_torus, build_torus_of_revolution};
    use crate::stokes::divfree_basis;
    use std::f64::consts::PI;

    #[test]
    fn flat_assembly_is_symmetric_and_matches_forms() {
        let c = build_flat_torus(2.0 * PI, 2.0 * PI, 8, 8).unwrap();
        let b = divfree_basis(&c, 1e-10).unwrap();
        let op = assemble_operator(&c, 1.5, &b).unwrap();
        assert!(op.is_symmetric());
        // (A u|u) = 2μ ‖D u‖² on the basis
        let dg = deformation_gram(&c, &b).unwrap();
        let m = op.entries();
        let scale = max_abs(m);
        for i in 0..op.dim() {
            for j in 0..op.dim() {
                assert!((m[(i, j)] - 3.0 * dg[(i, j)]).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn curved_quadratic_form_identity_on_smooth_fields() {
        let c = build_torus_of_revolution(2.0, 1.0, 32, 32).unwrap();
        let b = divfree_basis(&c, 1e-10).unwrap();
        let op = assemble_operator(&c, 1.0, &b).unwrap();
        assert!(op.is_symmetric(), "{:e}", op.asymmetry());
        let mut rng = crate::random::SmoothFieldSampler::new(11);
        for _ in 0..3 {
            let u = rng.divfree_field(&c);
            let coeffs = b.coefficients(&u);
            let au = op.apply(&coeffs);
            let form: f64 = au.iter().zip(&coeffs).map(|(x, y)| x * y).sum();
            let d = crate::fieldcalc::deformation_norm_sq(&c, &u).unwrap();
            assert!((form - 2.0 * d).abs() <= 1e-8 * form.abs(), "{form} {d}");
        }
    }

    #[test]
    fn rejects_bad_viscosity() {
        let c = build_flat_torus(1.0, 1.0, 8, 8).unwrap();
        let b = divfree_basis(&c, 1e-10).unwrap();
        assert!(assemble_operator(&c, -1.0, &b).is_err());
    }
}
