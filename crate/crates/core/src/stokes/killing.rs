use super::assembly::deformation_gram;
use super::basis::{divfree_basis, weighted_vec, DivFreeBasis};
use super::spectrum::{detect_kernel, symmetric_eigen, KernelSplit};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::geometry::SurfaceChart;

/// `d(d+1)/2` for `d = 2`.
pub const MAX_KILLING_DIM: usize = 3;

/// L²-orthonormal basis `z_1..z_m` of the Killing fields.
#[derive(Debug, Clone)]
pub struct KillingBasis {
    fields: Vec<VectorField>,
    /// `W z_j`, so that `(u|z_j)_Σ = u · weighted[j]`.
    weighted: Vec<Vec<f64>>,
    /// Values of `2‖D_Σ z_j‖²` (numerically zero).
    residuals: Vec<f64>,
    split: KernelSplit,
}

impl KillingBasis {
    /// Builds a basis from fields already orthonormal in `chart`'s inner product.
    pub fn from_fields(chart: &SurfaceChart, fields: Vec<VectorField>) -> Result<Self> {
        for z in &fields {
            chart.check_shape(z.dim())?;
        }
        let weighted = fields.iter().map(|z| weighted_vec(chart, z)).collect();
        let split = KernelSplit { dim: fields.len(), threshold: 0.0, gap_ratio: f64::INFINITY };
        Ok(Self { residuals: vec![0.0; fields.len()], fields, weighted, split })
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn split(&self) -> KernelSplit {
        self.split
    }

    /// `(u|z_j)_Σ` for each `j`.
    pub fn moments(&self, u: &VectorField) -> Result<Vec<f64>> {
        if let Some(z) = self.fields.first() {
            if z.dim() != u.dim() {
                return Err(Error::ShapeMismatch { expected: z.dim(), got: u.dim() });
            }
        }
        let v = u.to_vec();
        Ok(self
            .weighted
            .iter()
            .map(|w| w.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `max |(z_i|z_j)_Σ − δ_ij|`
    pub fn gram_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, z) in self.fields.iter().enumerate() {
            let m = self.moments(z).unwrap();
            for (j, x) in m.iter().enumerate() {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((x - id).abs());
            }
        }
        worst
    }
}

/// Killing fields as the null space of `u ↦ 2‖D_Σ u‖²` on the divergence-free
/// subspace.
///
/// `relative` sets the kernel threshold as a fraction of the top-decile
/// median eigenvalue (see [`detect_kernel`]); a gap smaller than
/// [`super::KERNEL_GAP`] is reported as [`Error::AmbiguousGap`].
pub fn killing_fields(chart: &SurfaceChart, relative: f64) -> Result<KillingBasis> {
    let basis = divfree_basis(chart, 1e-10)?;
    killing_fields_in(chart, &basis, relative)
}

/// As [`killing_fields`], reusing an existing divergence-free basis.
pub fn killing_fields_in(chart: &SurfaceChart, basis: &DivFreeBasis, relative: f64) -> Result<KillingBasis> {
    if !(relative > 0.0 && relative < 1.0) {
        return Err(Error::InvalidArgument(format!("relative threshold must lie in (0, 1), got {relative}")));
    }
    let mut gram = deformation_gram(chart, basis)?;
    gram *= faer::Scale(2.0);
    let (values, vectors) = symmetric_eigen(gram.as_ref())?;
    let split = detect_kernel(&values, relative)?;
    if split.dim > MAX_KILLING_DIM {
        return Err(Error::Eigen(format!(
            "{} Killing fields detected, more than the maximum {MAX_KILLING_DIM} in two dimensions",
            split.dim
        )));
    }
    let fields: Vec<VectorField> =
        (0..split.dim).map(|a| basis.synthesize(vectors.col_as_slice(a))).collect();
    let weighted = fields.iter().map(|z| weighted_vec(chart, z)).collect();
    Ok(KillingBasis { fields, weighted, residuals: values[..split.dim].to_vec(), split })
}

/// `P_E u = Σ_j (u|z_j)_Σ z_j`
pub fn project_onto_equilibria(u: &VectorField, kb: &KillingBasis) -> Result<VectorField> {
    let moments = kb.moments(u)?;
    let mut out = VectorField::zeros(u.dim());
    for (z, m) in kb.fields.iter().zip(moments) {
        out.axpy(m, z);
    }
    Ok(out)
}
