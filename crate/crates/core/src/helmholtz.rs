//! Surface Helmholtz (Leray) projection and pressure recovery.
//!
//! The gradient part `∇_Σψ_v` of a field `v` comes from the weak problem
//! `(∇_Σψ|∇_Σφ)_Σ = (v|∇_Σφ)_Σ` for all `φ`. Multiplied through by the area
//! density this is the symmetric system
//!
//! ```text
//! −∂_j(√g g^{jk} ∂_k ψ) = −∂_j(√g v^j)
//! ```
//!
//! solved by preconditioned conjugate gradients. The preconditioner is the
//! inverse of the same operator with `√g g^{jk}` replaced by its grid
//! average, which is diagonal in Fourier space and exact on flat tori.

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::fieldcalc::{deformation_unchecked, density_divergence, grad_unchecked};
use crate::geometry::{integrate_scalar, SurfaceChart};
use crate::spectral::wavenumber;

/// Absolute tolerance on the preconditioned residual.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Result of a projection: the divergence-free part and the potential.
#[derive(Debug, Clone)]
pub struct Projection {
    pub field: VectorField,
    /// Mean-free potential `ψ_v` with `v = field + ∇_Σψ_v`.
    pub potential: ScalarField,
    pub iterations: usize,
    pub residual: f64,
}

/// Reusable projector for one chart.
#[derive(Debug, Clone)]
pub struct HelmholtzSolver<'a> {
    chart: &'a SurfaceChart,
    /// `√g g^{jk}` per node
    coeff: [[Array2<f64>; 2]; 2],
    /// Fourier symbol of the preconditioner, zero on the kernel of ∂.
    precond: Array2<f64>,
    tol: f64,
    max_iter: usize,
}

impl<'a> HelmholtzSolver<'a> {
    pub fn new(chart: &'a SurfaceChart, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        let w = chart.area_density();
        let gi = chart.inv_metric();
        let coeff: [[Array2<f64>; 2]; 2] =
            std::array::from_fn(|j| std::array::from_fn(|k| w * &gi[j][k]));
        let mean = |a: &Array2<f64>| a.mean().unwrap_or(0.0);
        let (a00, a01, a11) = (mean(&coeff[0][0]), mean(&coeff[0][1]), mean(&coeff[1][1]));
        let (nt, np) = chart.grid_sizes();
        let eff = |m: usize, n: usize| if 2 * m == n { 0.0 } else { wavenumber(m, n) as f64 };
        let precond = Array2::from_shape_fn((nt, np), |(m, l)| {
            let (kt, kp) = (eff(m, nt), eff(l, np));
            let sym = a00 * kt * kt + 2.0 * a01 * kt * kp + a11 * kp * kp;
            if sym > 0.0 {
                1.0 / sym
            } else {
                0.0
            }
        });
        Ok(Self {
            chart,
            coeff,
            precond,
            tol,
            max_iter: 10 * nt,
        })
    }

    pub fn chart(&self) -> &SurfaceChart {
        self.chart
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `−∂_j(√g g^{jk} ∂_k ψ)`
    fn apply(&self, psi: &Array2<f64>) -> Array2<f64> {
        let s = self.chart.spectral();
        let d = [s.d(0, psi), s.d(1, psi)];
        let flux: [Array2<f64>; 2] = std::array::from_fn(|j| {
            &self.coeff[j][0] * &d[0] + &self.coeff[j][1] * &d[1]
        });
        -(s.d(0, &flux[0]) + s.d(1, &flux[1]))
    }

    fn precondition(&self, r: &Array2<f64>) -> Array2<f64> {
        let s = self.chart.spectral();
        let mut c = s.forward(r);
        Zip::from(&mut c).and(&self.precond).for_each(|z, p| *z *= Complex64::new(*p, 0.0));
        s.inverse(c)
    }

    fn dual_norm(&self, r: &Array2<f64>, z: &Array2<f64>) -> f64 {
        let (ht, hp) = self.chart.spacing();
        ((r * z).sum().max(0.0) * ht * hp).sqrt()
    }

    /// Weak (`H⁻¹`-type) norm of the divergence of `u`.
    pub fn divergence_residual(&self, u: &VectorField) -> Result<f64> {
        self.chart.check_shape(u.dim())?;
        let r = density_divergence(self.chart, u);
        let z = self.precondition(&r);
        Ok(self.dual_norm(&r, &z))
    }

    /// Solves the weak problem for `ψ_v` and returns `v − ∇_Σψ_v`.
    pub fn project(&self, v: &VectorField) -> Result<Projection> {
        self.chart.check_shape(v.dim())?;
        let b = -density_divergence(self.chart, v);
        let shape = b.dim();
        let mut psi = Array2::<f64>::zeros(shape);
        let mut r = b;
        let mut z = self.precondition(&r);
        let mut rz = (&r * &z).sum();
        let mut residual = self.dual_norm(&r, &z);
        let mut p = z.clone();
        let mut iterations = 0;
        while residual > self.tol {
            if iterations >= self.max_iter {
                return Err(Error::NoConvergence {
                    solver: "Helmholtz CG",
                    iterations,
                    residual,
                });
            }
            let ap = self.apply(&p);
            let pap = (&p * &ap).sum();
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            psi.scaled_add(alpha, &p);
            r.scaled_add(-alpha, &ap);
            z = self.precondition(&r);
            let rz_new = (&r * &z).sum();
            residual = self.dual_norm(&r, &z);
            p = &z + &(&p * (rz_new / rz));
            rz = rz_new;
            iterations += 1;
        }
        let mean = integrate_scalar(self.chart, &psi)? / self.chart.area();
        psi.mapv_inplace(|x| x - mean);
        let grad = grad_unchecked(self.chart, &psi);
        Ok(Projection {
            field: v - &grad,
            potential: psi,
            iterations,
            residual,
        })
    }
}

/// `P_{H,Σ} v = v − ∇_Σψ_v`; returns the projected field and `ψ_v`.
pub fn leray_project(chart: &SurfaceChart, v: &VectorField, tol: f64) -> Result<(VectorField, ScalarField)> {
    let p = HelmholtzSolver::new(chart, tol)?.project(v)?;
    Ok((p.field, p.potential))
}

/// Pressure `π = 2μ_s ψ_w` for `w = div_Σ D_Σ(u)`, normalized to zero mean.
pub fn recover_pressure(chart: &SurfaceChart, u: &VectorField, mu_s: f64) -> Result<ScalarField> {
    chart.check_shape(u.dim())?;
    let w = crate::stokes::tensor_divergence(chart, &deformation_unchecked(chart, u))?;
    let p = HelmholtzSolver::new(chart, DEFAULT_TOL)?.project(&w)?;
    Ok(p.potential * (2.0 * mu_s))
}
