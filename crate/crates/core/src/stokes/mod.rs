//! Surface Stokes operator, its discrete spectrum, and the equilibria.
//!
//! The operator is available in two algebraically independent forms,
//!
//! ```text
//! A u = −2μ_s P_H div_Σ D_Σ(u)          (deformation form)
//! A u = −μ_s P_H (Δ_Σ u + K u)          (Bochner form)
//! ```
//!
//! which agree on divergence-free fields. Dense work (assembly, spectra,
//! Killing fields) uses the Bochner form; the deformation form serves as a
//! cross-check.

mod assembly;
mod basis;
mod killing;
mod resolvent;
mod spectrum;

pub use assembly::{assemble_operator, deformation_gram, gradient_gram, OperatorMatrix};
pub use basis::{divfree_basis, DivFreeBasis};
pub use killing::{
    killing_fields, killing_fields_in, project_onto_equilibria, KillingBasis, MAX_KILLING_DIM,
};
pub use resolvent::{random_unit_vector, resolvent_probe, ResolventRow, ResolventTable};
pub use spectrum::{detect_kernel, spectrum, KernelSplit, Spectrum, KERNEL_GAP, KERNEL_RELATIVE};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{TensorField, Variance, VectorField};
use crate::fieldcalc::{bochner_unchecked, deformation_unchecked, l2_norm, raise};
use crate::geometry::SurfaceChart;
use crate::helmholtz::{HelmholtzSolver, DEFAULT_TOL};

/// Inputs to the Stokes operator must be divergence-free to this weak residual
/// (relative to `max(1, ‖u‖)`).
pub const DIVFREE_LIMIT: f64 = 1e-8;

/// `(div T)^i = g^{ij} g^{kl} ∇_k T_{lj}` for a symmetric covariant tensor.
///
/// Evaluated in flux form, which makes it the exact negative adjoint of
/// `v ↦ ∇v` paired against `T`:
/// `(div T | v)_Σ = −∫ T : ∇v dΣ`.
pub fn tensor_divergence(chart: &SurfaceChart, t: &TensorField) -> Result<VectorField> {
    chart.check_shape(t.dim())?;
    if t.variance != Variance::Covariant {
        return Err(Error::InvalidArgument("tensor_divergence expects a (0,2) tensor".into()));
    }
    Ok(tensor_divergence_unchecked(chart, t))
}

pub(crate) fn tensor_divergence_unchecked(chart: &SurfaceChart, t: &TensorField) -> VectorField {
    let s = chart.spectral();
    let gi = chart.inv_metric();
    let w = chart.area_density();
    let gamma = chart.christoffel();
    // flux[k][m] = √g g^{kj} T_jm
    let flux: [[Array2<f64>; 2]; 2] = std::array::from_fn(|k| {
        std::array::from_fn(|m| w * &(&gi[k][0] * &t.comps[0][m] + &gi[k][1] * &t.comps[1][m]))
    });
    // v_m = ∂_k flux[k][m] − Γ^a_{km} flux[k][a]
    let v: [Array2<f64>; 2] = std::array::from_fn(|m| {
        let mut acc = s.d(0, &flux[0][m]) + s.d(1, &flux[1][m]);
        for k in 0..2 {
            for a in 0..2 {
                acc = acc - &gamma[a][k][m] * &flux[k][a];
            }
        }
        acc / w
    });
    raise(chart, &v)
}

/// Matrix-free Stokes operator on one chart.
#[derive(Debug, Clone)]
pub struct StokesOperator<'a> {
    chart: &'a SurfaceChart,
    mu_s: f64,
    projector: HelmholtzSolver<'a>,
}

impl<'a> StokesOperator<'a> {
    pub fn new(chart: &'a SurfaceChart, mu_s: f64) -> Result<Self> {
        Self::with_tol(chart, mu_s, DEFAULT_TOL)
    }

    pub fn with_tol(chart: &'a SurfaceChart, mu_s: f64, tol: f64) -> Result<Self> {
        if !(mu_s > 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {mu_s}")));
        }
        Ok(Self { chart, mu_s, projector: HelmholtzSolver::new(chart, tol)? })
    }

    pub fn mu_s(&self) -> f64 {
        self.mu_s
    }

    pub fn projector(&self) -> &HelmholtzSolver<'a> {
        &self.projector
    }

    pub fn check_divergence_free(&self, u: &VectorField) -> Result<()> {
        let residual = self.projector.divergence_residual(u)?;
        let limit = DIVFREE_LIMIT * l2_norm(self.chart, u)?.max(1.0);
        if residual > limit {
            return Err(Error::NotDivergenceFree { residual, limit });
        }
        Ok(())
    }

    /// `−2μ_s P_H div_Σ D_Σ(u)`
    pub fn apply_div_form(&self, u: &VectorField) -> Result<VectorField> {
        self.check_divergence_free(u)?;
        let t = tensor_divergence_unchecked(self.chart, &deformation_unchecked(self.chart, u));
        Ok(self.projector.project(&t)?.field.scale(-2.0 * self.mu_s))
    }

    /// `−μ_s P_H (Δ_Σ u + K u)`
    pub fn apply_bochner_form(&self, u: &VectorField) -> Result<VectorField> {
        self.check_divergence_free(u)?;
        Ok(self.projector.project(&self.bochner_unprojected(u))?.field)
    }

    /// `−μ_s (Δ_Σ u + K u)` before projection.
    pub(crate) fn bochner_unprojected(&self, u: &VectorField) -> VectorField {
        bochner_ricci(self.chart, u).scale(-self.mu_s)
    }
}

/// `Δ_Σ u + K u`
pub(crate) fn bochner_ricci(chart: &SurfaceChart, u: &VectorField) -> VectorField {
    let mut l = bochner_unchecked(chart, u);
    let k = chart.gauss_curvature();
    for c in 0..2 {
        l.comps[c] = &l.comps[c] + &(k * &u.comps[c]);
    }
    l
}

/// Deformation form of the Stokes operator, `−2μ_s P_H div_Σ D_Σ(u)`.
pub fn apply_stokes_div_form(chart: &SurfaceChart, mu_s: f64, u: &VectorField) -> Result<VectorField> {
    chart.check_shape(u.dim())?;
    StokesOperator::new(chart, mu_s)?.apply_div_form(u)
}

/// Bochner form of the Stokes operator, `−μ_s P_H (Δ_Σ u + K u)`.
pub fn apply_stokes_bochner_form(
    chart: &SurfaceChart,
    mu_s: f64,
    u: &VectorField,
) -> Result<VectorField> {
    chart.check_shape(u.dim())?;
    StokesOperator::new(chart, mu_s)?.apply_bochner_form(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::{covariant_derivative, l2_inner, tensor_inner};
    use crate::geometry::{build_flat_torus, build_torus_of_revolution};
    use crate::random::SmoothFieldSampler;
    use std::f64::consts::PI;

    #[test]
    fn tensor_divergence_trivial_cases() {
        let c = build_flat_torus(2.0 * PI, 2.0 * PI, 16, 16).unwrap();
        let z = TensorField::zeros((16, 16), Variance::Covariant);
        assert!(tensor_divergence(&c, &z).unwrap().max_abs() == 0.0);
        let u = VectorField::from_fn(&c, |_, _| (0.4, 2.0));
        let d = deformation_unchecked(&c, &u);
        assert!(tensor_divergence(&c, &d).unwrap().max_abs() < 1e-13);
        let mixed = TensorField::zeros((16, 16), Variance::Mixed);
        assert!(tensor_divergence(&c, &mixed).is_err());
    }

    #[test]
    fn tensor_divergence_duality() {
        let c = build_torus_of_revolution(2.0, 1.0, 32, 32).unwrap();
        let mut rng = SmoothFieldSampler::new(8);
        for _ in 0..3 {
            let t = rng.symmetric_tensor(&c);
            let v = rng.vector_field(&c);
            let lhs = l2_inner(&c, &tensor_divergence(&c, &t).unwrap(), &v).unwrap();
            let nv = covariant_derivative(&c, &v).unwrap();
            let g = c.metric();
            let low: [[Array2<f64>; 2]; 2] = std::array::from_fn(|i| {
                std::array::from_fn(|j| &g[i][0] * &nv.comps[0][j] + &g[i][1] * &nv.comps[1][j])
            });
            // N_kl = g_la (∇v)^a_k
            let nv_cov = TensorField {
                comps: [[low[0][0].clone(), low[1][0].clone()], [low[0][1].clone(), low[1][1].clone()]],
                variance: Variance::Covariant,
            };
            let rhs = -tensor_inner(&c, &t, &nv_cov).unwrap();
            assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0), "{lhs} {rhs}");
        }
    }

    #[test]
    fn flat_eigenfield() {
        let c = build_flat_torus(2.0 * PI, 2.0 * PI, 16, 16).unwrap();
        let u = VectorField::from_fn(&c, |t, _| (0.0, t.sin()));
        for au in [
            apply_stokes_bochner_form(&c, 1.0, &u).unwrap(),
            apply_stokes_div_form(&c, 1.0, &u).unwrap(),
        ] {
            assert!((&au - &u).max_abs() < 1e-10);
        }
    }

    #[test]
    fn killing_field_in_kernel() {
        let c = build_torus_of_revolution(2.0, 1.0, 32, 32).unwrap();
        let z = VectorField::from_fn(&c, |_, _| (0.0, 1.0));
        let op = StokesOperator::new(&c, 1.0).unwrap();
        assert!(l2_norm(&c, &op.apply_bochner_form(&z).unwrap()).unwrap() <= 1e-8);
        assert!(l2_norm(&c, &op.apply_div_form(&z).unwrap()).unwrap() <= 1e-8);
    }

    #[test]
    fn rejects_divergent_input() {
        let c = build_torus_of_revolution(2.0, 1.0, 16, 16).unwrap();
        let u = VectorField::from_fn(&c, |_, _| (1.0, 0.0));
        assert!(matches!(
            apply_stokes_bochner_form(&c, 1.0, &u),
            Err(Error::NotDivergenceFree { .. })
        ));
        assert!(StokesOperator::new(&c, 0.0).is_err());
    }
}
