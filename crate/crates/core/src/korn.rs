//! Numerical Korn inequality on the divergence-free subspace.
//!
//! The constant `C` in `‖v‖_{H¹} ≤ C ‖D_Σ(v)‖_{L₂}` for `v ⊥ E` is
//! `1/√λ_min` of the generalized eigenproblem `D c = λ H c`, where `D` and
//! `H = I + G` are the deformation and `H¹` Gram matrices over the
//! divergence-free basis restricted to the complement of the excluded fields.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::fieldcalc::{deformation_norm_sq, grad_norm_sq, l2_inner};
use crate::geometry::{integrate_scalar, SurfaceChart};
use crate::random::SmoothFieldSampler;
use crate::stokes::{deformation_gram, gradient_gram, project_onto_equilibria, DivFreeBasis, KillingBasis};

/// Smallest admissible Rayleigh quotient before the complement is declared
/// contaminated by a Killing field.
pub const LEAK_LIMIT: f64 = 1e-10;

/// Solution of the Korn eigenproblem.
#[derive(Debug, Clone)]
pub struct KornProblem {
    /// `min ‖D v‖² / ‖v‖²_{H¹}` over the complement.
    pub lambda_min: f64,
    pub constant: f64,
    /// Dimension of the complement the minimum was taken over.
    pub complement_dim: usize,
    /// Basis coefficients of the minimizer, normalized in `H¹`.
    pub minimizer: Vec<f64>,
}

/// Korn constant on the complement of `kb` within `basis`.
pub fn korn_constant(chart: &SurfaceChart, kb: &KillingBasis, basis: &DivFreeBasis) -> Result<f64> {
    Ok(korn_problem(chart, basis, kb.fields())?.constant)
}

/// Solves the Korn eigenproblem on the complement of `excluded` within `basis`.
pub fn korn_problem(chart: &SurfaceChart, basis: &DivFreeBasis, excluded: &[VectorField]) -> Result<KornProblem> {
    let m = basis.dim();
    let k = excluded.len();
    if k >= m {
        return Err(Error::InvalidArgument(format!("cannot exclude {k} fields from a {m}-dimensional space")));
    }
    // Complement of the excluded coefficient directions from a full QR.
    let mut coeffs = Mat::<f64>::zeros(m, k.max(1));
    for (j, z) in excluded.iter().enumerate() {
        chart.check_shape(z.dim())?;
        for (i, c) in basis.coefficients(z).into_iter().enumerate() {
            coeffs[(i, j)] = c;
        }
    }
    let comp: Mat<f64> = if k == 0 {
        Mat::identity(m, m)
    } else {
        let q = coeffs.qr().compute_Q();
        q.subcols(k, m - k).to_owned()
    };
    let dg = deformation_gram(chart, basis)?;
    let mut hg = gradient_gram(chart, basis)?;
    for i in 0..m {
        hg[(i, i)] += 1.0;
    }
    let dc = comp.transpose() * (&dg * &comp);
    let hc = comp.transpose() * (&hg * &comp);
    let hc = Mat::from_fn(hc.nrows(), hc.ncols(), |i, j| 0.5 * (hc[(i, j)] + hc[(j, i)]));
    let llt = hc
        .llt(Side::Lower)
        .map_err(|e| Error::Eigen(format!("H¹ Gram matrix is not positive definite ({e:?})")))?;
    let l = llt.L();
    // S = L⁻¹ D L⁻ᵀ
    let mut s = dc;
    l.solve_lower_triangular_in_place(s.as_mut());
    let mut st = s.transpose().to_owned();
    l.solve_lower_triangular_in_place(st.as_mut());
    let st = Mat::from_fn(st.nrows(), st.ncols(), |i, j| 0.5 * (st[(i, j)] + st[(j, i)]));
    let eig = st
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let lambda_min = eig.S()[0];
    if !(lambda_min > LEAK_LIMIT) {
        return Err(Error::KillingLeak(lambda_min));
    }
    // minimizer: c = C L⁻ᵀ y
    let y = eig.U().col(0).to_owned();
    let mut w = Mat::<f64>::from_fn(y.nrows(), 1, |i, _| y[i]);
    l.transpose().solve_upper_triangular_in_place(w.as_mut());
    let c = &comp * &w;
    Ok(KornProblem {
        lambda_min,
        constant: 1.0 / lambda_min.sqrt(),
        complement_dim: m - k,
        minimizer: (0..m).map(|i| c[(i, 0)]).collect(),
    })
}

/// Result of the sampled check of `‖u‖²_{H¹} ≤ C₂(‖D u‖² + ‖u‖²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KornReport {
    pub samples: usize,
    /// Largest `‖u‖²_{H¹} / (‖D u‖² + ‖u‖²)`.
    pub max_ratio: f64,
    /// Largest `|2‖D u‖² − ‖∇u‖² + ∫K|u|²| / ‖u‖²_{H¹}`.
    pub max_curvature_residual: f64,
}

/// Samples random smooth divergence-free fields and reports the Korn-1 ratio
/// together with the curvature identity residual.
pub fn korn_intermediate_check(chart: &SurfaceChart, sample_count: usize, seed: u64) -> Result<KornReport> {
    if sample_count < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 samples, got {sample_count}")));
    }
    let mut rng = SmoothFieldSampler::new(seed);
    let k = chart.gauss_curvature();
    let mut report = KornReport { samples: sample_count, max_ratio: 0.0, max_curvature_residual: 0.0 };
    for _ in 0..sample_count {
        let u = rng.divfree_field(chart);
        let l2 = l2_inner(chart, &u, &u)?;
        let grad = grad_norm_sq(chart, &u)?;
        let def = deformation_norm_sq(chart, &u)?;
        let h1 = l2 + grad;
        let g = chart.metric();
        let sq = &g[0][0] * &u.comps[0] * &u.comps[0]
            + &(&g[0][1] * &u.comps[0] * &u.comps[1] * 2.0)
            + &g[1][1] * &u.comps[1] * &u.comps[1];
        let curv = integrate_scalar(chart, &(k * &sq))?;
        report.max_ratio = report.max_ratio.max(h1 / (def + l2));
        report.max_curvature_residual =
            report.max_curvature_residual.max((2.0 * def - grad + curv).abs() / h1);
    }
    Ok(report)
}

/// Draws a random smooth divergence-free field orthogonal to `kb`.
pub fn random_complement_field(rng: &mut SmoothFieldSampler, chart: &SurfaceChart, kb: &KillingBasis) -> Result<VectorField> {
    let u = rng.divfree_field(chart);
    let pu = project_onto_equilibria(&u, kb)?;
    Ok(&u - &pu)
}
