use faer::{Mat, MatRef, Side};

use super::assembly::OperatorMatrix;
use crate::error::{Error, Result};
use crate::field::VectorField;

/// Kernel threshold relative to the median of the top decile of eigenvalues.
pub const KERNEL_RELATIVE: f64 = 1e-6;
/// Required ratio between the first non-kernel eigenvalue and the kernel.
pub const KERNEL_GAP: f64 = 1e2;

/// Split of an ascending spectrum into a numerical kernel and the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSplit {
    /// Number of eigenvalues at or below `threshold`.
    pub dim: usize,
    pub threshold: f64,
    /// First eigenvalue above the threshold over the largest kernel magnitude
    /// (or over the threshold when the kernel is empty).
    pub gap_ratio: f64,
}

/// Splits `eigenvalues` (ascending) at `relative ×` the median of the top decile.
///
/// Fails when the split is not separated by a factor [`KERNEL_GAP`].
pub fn detect_kernel(eigenvalues: &[f64], relative: f64) -> Result<KernelSplit> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if eigenvalues.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("eigenvalues must be finite and ascending".into()));
    }
    let n = eigenvalues.len();
    let top = &eigenvalues[n - (n / 10).max(1)..];
    let median = top[top.len() / 2];
    if !(median > 0.0) {
        return Err(Error::Eigen("spectrum has no positive part".into()));
    }
    let threshold = relative * median;
    let dim = eigenvalues.iter().take_while(|&&x| x <= threshold).count();
    if dim == n {
        return Err(Error::Eigen("every eigenvalue lies below the kernel threshold".into()));
    }
    let kernel_scale = if dim == 0 {
        threshold
    } else {
        eigenvalues[..dim].iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE)
    };
    let gap_ratio = eigenvalues[dim] / kernel_scale;
    if gap_ratio < KERNEL_GAP {
        return Err(Error::AmbiguousGap { ratio: gap_ratio, required: KERNEL_GAP });
    }
    Ok(KernelSplit { dim, threshold, gap_ratio })
}

/// Symmetric eigen-decomposition `V diag(λ) Vᵀ`, eigenvalues ascending.
pub(crate) fn symmetric_eigen(m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = eig.S();
    let values: Vec<f64> = (0..m.nrows()).map(|i| s[i]).collect();
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    Ok((values, eig.U().to_owned()))
}

/// Eigen-decomposition of an assembled Stokes matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors in basis coefficients.
    pub eigenvectors: Mat<f64>,
    pub kernel: KernelSplit,
}

impl Spectrum {
    /// `s(−A) = −λ_min`
    pub fn spectral_bound(&self) -> f64 {
        -self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Smallest eigenvalue outside the kernel.
    pub fn gap(&self) -> f64 {
        self.eigenvalues[self.kernel.dim]
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel.dim
    }

    pub fn eigenvector(&self, a: usize) -> Vec<f64> {
        self.eigenvectors.col_as_slice(a).to_vec()
    }

    /// Eigenfield `a` as a grid field.
    pub fn eigenfield(&self, op: &OperatorMatrix, a: usize) -> VectorField {
        op.basis().synthesize(self.eigenvectors.col_as_slice(a))
    }

    /// Orthonormal fields spanning the numerical kernel.
    pub fn kernel_fields(&self, op: &OperatorMatrix) -> Vec<VectorField> {
        (0..self.kernel.dim).map(|a| self.eigenfield(op, a)).collect()
    }

    /// `ω = s(−A) + 0.1·gap`
    pub fn default_shift(&self) -> f64 {
        self.spectral_bound() + 0.1 * self.gap()
    }
}

/// Eigen-decomposition of the symmetric part of `op`, with the kernel split off.
pub fn spectrum(op: &OperatorMatrix) -> Result<Spectrum> {
    if !op.is_symmetric() {
        return Err(Error::Asymmetric(op.asymmetry()));
    }
    let (eigenvalues, eigenvectors) = symmetric_eigen(op.symmetric_part().as_ref())?;
    let kernel = detect_kernel(&eigenvalues, KERNEL_RELATIVE)?;
    Ok(Spectrum { eigenvalues, eigenvectors, kernel })
}
