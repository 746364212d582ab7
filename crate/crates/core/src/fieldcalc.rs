//! Differential operators and inner products on a chart.
//!
//! All operators work with collocation (pointwise) products and Fourier
//! derivatives. The second-order operators ([`bochner_laplacian`] and
//! [`crate::stokes::tensor_divergence`]) are written in flux form so that
//! they are, to round-off, the negative adjoints of the first-order
//! operators under the discrete `L₂(Σ)` inner product:
//!
//! ```text
//! (Δ_Σ u | v)_Σ = −(∇u | ∇v)_Σ,     (grad ψ | u)_Σ = −(ψ | div u)_Σ.
//! ```

use ndarray::Array2;

use crate::error::Result;
use crate::field::{ScalarField, TensorField, Variance, VectorField};
use crate::geometry::SurfaceChart;

fn check_vec(chart: &SurfaceChart, u: &VectorField) -> Result<()> {
    chart.check_shape(u.dim())
}

/// `(∇_Σ φ)^i = g^{ij} ∂_j φ`
pub fn grad_scalar(chart: &SurfaceChart, phi: &ScalarField) -> Result<VectorField> {
    chart.check_shape(phi.dim())?;
    Ok(grad_unchecked(chart, phi))
}

pub(crate) fn grad_unchecked(chart: &SurfaceChart, phi: &ScalarField) -> VectorField {
    let s = chart.spectral();
    let d = [s.d(0, phi), s.d(1, phi)];
    let gi = chart.inv_metric();
    VectorField::new(
        &gi[0][0] * &d[0] + &gi[0][1] * &d[1],
        &gi[1][0] * &d[0] + &gi[1][1] * &d[1],
    )
}

/// `div_Σ u = (1/√g) ∂_i(√g u^i)`
pub fn divergence(chart: &SurfaceChart, u: &VectorField) -> Result<ScalarField> {
    check_vec(chart, u)?;
    Ok(density_divergence(chart, u) / chart.area_density())
}

/// `∂_i(√g u^i)`, the divergence times the area density.
pub(crate) fn density_divergence(chart: &SurfaceChart, u: &VectorField) -> Array2<f64> {
    let s = chart.spectral();
    let w = chart.area_density();
    s.d(0, &(w * &u.comps[0])) + s.d(1, &(w * &u.comps[1]))
}

/// `(∇u)^i_j = ∂_j u^i + Γ^i_{jk} u^k`, stored as `comps[i][j]`.
pub fn covariant_derivative(chart: &SurfaceChart, u: &VectorField) -> Result<TensorField> {
    check_vec(chart, u)?;
    Ok(covariant_unchecked(chart, u))
}

pub(crate) fn covariant_unchecked(chart: &SurfaceChart, u: &VectorField) -> TensorField {
    let s = chart.spectral();
    let gamma = chart.christoffel();
    let comps = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            s.d(j, &u.comps[i]) + &gamma[i][j][0] * &u.comps[0] + &gamma[i][j][1] * &u.comps[1]
        })
    });
    TensorField { comps, variance: Variance::Mixed }
}

/// `(∇_u v)^i = u^j (∇v)^i_j`
pub fn advect(chart: &SurfaceChart, u: &VectorField, v: &VectorField) -> Result<VectorField> {
    check_vec(chart, u)?;
    check_vec(chart, v)?;
    Ok(advect_unchecked(chart, u, v))
}

pub(crate) fn advect_unchecked(chart: &SurfaceChart, u: &VectorField, v: &VectorField) -> VectorField {
    let t = covariant_unchecked(chart, v);
    contract_direction(&t, u)
}

/// `w^i = T^i_j u^j` for a mixed tensor.
fn contract_direction(t: &TensorField, u: &VectorField) -> VectorField {
    VectorField::new(
        &t.comps[0][0] * &u.comps[0] + &t.comps[0][1] * &u.comps[1],
        &t.comps[1][0] * &u.comps[0] + &t.comps[1][1] * &u.comps[1],
    )
}

/// `u_i = g_ij u^j`
pub fn lower(chart: &SurfaceChart, u: &VectorField) -> [Array2<f64>; 2] {
    let g = chart.metric();
    [
        &g[0][0] * &u.comps[0] + &g[0][1] * &u.comps[1],
        &g[1][0] * &u.comps[0] + &g[1][1] * &u.comps[1],
    ]
}

/// `u^i = g^{ij} u_j`
pub fn raise(chart: &SurfaceChart, u: &[Array2<f64>; 2]) -> VectorField {
    let g = chart.inv_metric();
    VectorField::new(
        &g[0][0] * &u[0] + &g[0][1] * &u[1],
        &g[1][0] * &u[0] + &g[1][1] * &u[1],
    )
}

/// Lowers the first index of a mixed tensor: `T_{ij} = g_{ik} T^k_j`.
fn lower_mixed(chart: &SurfaceChart, t: &TensorField) -> [[Array2<f64>; 2]; 2] {
    debug_assert_eq!(t.variance, Variance::Mixed);
    let g = chart.metric();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| &g[i][0] * &t.comps[0][j] + &g[i][1] * &t.comps[1][j])
    })
}

/// Surface rate-of-strain tensor `D_ij = ½(∇_i u_j + ∇_j u_i)`.
///
/// `∇_i u_j` is formed by lowering the upper index of `(∇u)^k_i`, which is
/// the covariant derivative of the one-form `u_j` by metric compatibility.
pub fn deformation(chart: &SurfaceChart, u: &VectorField) -> Result<TensorField> {
    check_vec(chart, u)?;
    Ok(deformation_unchecked(chart, u))
}

pub(crate) fn deformation_unchecked(chart: &SurfaceChart, u: &VectorField) -> TensorField {
    let t = covariant_unchecked(chart, u);
    let low = lower_mixed(chart, &t);
    // low[j][i] = g_jk (∇u)^k_i = ∇_i u_j
    let off = 0.5 * (&low[1][0] + &low[0][1]);
    let comps = [[low[0][0].clone(), off.clone()], [off, low[1][1].clone()]];
    TensorField { comps, variance: Variance::Covariant }
}

/// `g^{ij} T_ij` for a covariant tensor, or `T^i_i` for a mixed one.
pub fn trace(chart: &SurfaceChart, t: &TensorField) -> ScalarField {
    match t.variance {
        Variance::Mixed => &t.comps[0][0] + &t.comps[1][1],
        Variance::Covariant => {
            let gi = chart.inv_metric();
            let mut acc = Array2::zeros(t.dim());
            for i in 0..2 {
                for j in 0..2 {
                    acc = acc + &gi[i][j] * &t.comps[i][j];
                }
            }
            acc
        }
    }
}

/// Bochner Laplacian `(Δ_Σ u)^i = g^{jk} (∇²u)^i_{jk}`, evaluated as the
/// covariant divergence of `∇u` in flux form.
pub fn bochner_laplacian(chart: &SurfaceChart, u: &VectorField) -> Result<VectorField> {
    check_vec(chart, u)?;
    Ok(bochner_unchecked(chart, u))
}

pub(crate) fn bochner_unchecked(chart: &SurfaceChart, u: &VectorField) -> VectorField {
    let s = chart.spectral();
    let g = chart.metric();
    let gi = chart.inv_metric();
    let w = chart.area_density();
    let gamma = chart.christoffel();
    let t = covariant_unchecked(chart, u);
    let low = lower_mixed(chart, &t);
    // flux[a][j] = √g g_ak g^{jl} (∇u)^k_l
    let flux: [[Array2<f64>; 2]; 2] = std::array::from_fn(|a| {
        std::array::from_fn(|j| w * &(&gi[j][0] * &low[a][0] + &gi[j][1] * &low[a][1]))
    });
    // v_a = ∂_j flux[a][j] − Γ^i_{ja} flux[i][j]
    let v: [Array2<f64>; 2] = std::array::from_fn(|a| {
        let mut acc = s.d(0, &flux[a][0]) + s.d(1, &flux[a][1]);
        for i in 0..2 {
            for j in 0..2 {
                acc = acc - &gamma[i][j][a] * &flux[i][j];
            }
        }
        acc / w
    });
    let _ = g;
    raise(chart, &v)
}

/// `(u|v)_Σ = ∫ g_ij u^i v^j dΣ`
pub fn l2_inner(chart: &SurfaceChart, u: &VectorField, v: &VectorField) -> Result<f64> {
    check_vec(chart, u)?;
    check_vec(chart, v)?;
    Ok(l2_inner_unchecked(chart, u, v))
}

pub(crate) fn l2_inner_unchecked(chart: &SurfaceChart, u: &VectorField, v: &VectorField) -> f64 {
    let low = lower(chart, u);
    let (ht, hp) = chart.spacing();
    let w = chart.area_density();
    let mut acc = 0.0;
    for c in 0..2 {
        acc += ndarray::Zip::from(&low[c])
            .and(&v.comps[c])
            .and(w)
            .fold(0.0, |s, a, b, d| s + a * b * d);
    }
    acc * ht * hp
}

pub fn l2_norm(chart: &SurfaceChart, u: &VectorField) -> Result<f64> {
    Ok(l2_inner(chart, u, u)?.max(0.0).sqrt())
}

/// `(S|T)_Σ` for two tensors of the same variance, with the full metric contraction.
pub fn tensor_inner(chart: &SurfaceChart, s: &TensorField, t: &TensorField) -> Result<f64> {
    chart.check_shape(s.dim())?;
    chart.check_shape(t.dim())?;
    if s.variance != t.variance {
        return Err(crate::error::Error::InvalidArgument(
            "tensor inner product needs matching variance".into(),
        ));
    }
    Ok(tensor_inner_unchecked(chart, s, t))
}

pub(crate) fn tensor_inner_unchecked(chart: &SurfaceChart, s: &TensorField, t: &TensorField) -> f64 {
    let g = chart.metric();
    let gi = chart.inv_metric();
    // Mixed: g_ik g^{jl} S^i_j T^k_l ; Covariant: g^{ik} g^{jl} S_ij T_kl
    let (first, second) = match s.variance {
        Variance::Mixed => (g, gi),
        Variance::Covariant => (gi, gi),
    };
    let mut density = Array2::<f64>::zeros(s.dim());
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    ndarray::Zip::from(&mut density)
                        .and(&first[i][k])
                        .and(&second[j][l])
                        .and(&s.comps[i][j])
                        .and(&t.comps[k][l])
                        .for_each(|d, a, b, x, y| *d += a * b * x * y);
                }
            }
        }
    }
    let (ht, hp) = chart.spacing();
    (density * chart.area_density()).sum() * ht * hp
}

/// `‖∇u‖²_{L₂}` with the full metric contraction `g_ik g^{jl} (∇u)^i_j (∇u)^k_l`.
pub fn grad_norm_sq(chart: &SurfaceChart, u: &VectorField) -> Result<f64> {
    check_vec(chart, u)?;
    let t = covariant_unchecked(chart, u);
    Ok(tensor_inner_unchecked(chart, &t, &t))
}

/// `‖D_Σ(u)‖²_{L₂}`
pub fn deformation_norm_sq(chart: &SurfaceChart, u: &VectorField) -> Result<f64> {
    check_vec(chart, u)?;
    let d = deformation_unchecked(chart, u);
    Ok(tensor_inner_unchecked(chart, &d, &d))
}

/// `‖u‖_{H¹} = (‖u‖²_{L₂} + ‖∇u‖²_{L₂})^{1/2}`
pub fn h1_norm(chart: &SurfaceChart, u: &VectorField) -> Result<f64> {
    Ok((l2_inner(chart, u, u)? + grad_norm_sq(chart, u)?).max(0.0).sqrt())
}

/// `(φ|ψ)_Σ` for scalars.
pub fn scalar_inner(chart: &SurfaceChart, a: &ScalarField, b: &ScalarField) -> Result<f64> {
    chart.check_shape(a.dim())?;
    chart.check_shape(b.dim())?;
    crate::geometry::integrate_scalar(chart, &(a * b))
}

/// Applies the two-thirds dealiasing filter to both components.
pub fn dealias(chart: &SurfaceChart, u: &VectorField) -> VectorField {
    u.map(|c| chart.spectral().dealias(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_flat_torus, build_torus_of_revolution, integrate_scalar};
    use crate::random::SmoothFieldSampler;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn flat() -> SurfaceChart {
        build_flat_torus(2.0 * PI, 2.0 * PI, 16, 16).unwrap()
    }

    fn torus(n: usize) -> SurfaceChart {
        build_torus_of_revolution(2.0, 1.0, n, n).unwrap()
    }

    fn max_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        (a - b).fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    #[test]
    fn gradient_examples() {
        let c = flat();
        let g = grad_scalar(&c, &c.sample(|t, _| t.sin())).unwrap();
        assert!(max_diff(&g.comps[0], &c.sample(|t, _| t.cos())) < 1e-13);
        assert!(g.comps[1].iter().all(|x| x.abs() < 1e-13));
        let g = grad_scalar(&c, &Array2::from_elem((16, 16), 3.0)).unwrap();
        assert!(g.max_abs() < 1e-13);

        let c = torus(64);
        let g = grad_scalar(&c, &c.sample(|_, p| p.cos())).unwrap();
        // (θ, φ) = (0, π/2) is node (0, 16)
        assert_abs_diff_eq!(g.comps[1][[0, 16]], -1.0 / 9.0, epsilon = 1e-10);
    }

    #[test]
    fn divergence_examples() {
        let c = flat();
        let u = VectorField::from_fn(&c, |_, _| (0.3, -1.2));
        assert!(divergence(&c, &u).unwrap().iter().all(|x| x.abs() < 1e-13));

        let c = torus(64);
        let u = VectorField::from_fn(&c, |_, _| (1.0, 0.0));
        let d = divergence(&c, &u).unwrap();
        assert_abs_diff_eq!(d[[16, 5]], -0.5, epsilon = 1e-10);
    }

    #[test]
    fn covariant_derivative_examples() {
        let c = flat();
        let u = VectorField::from_fn(&c, |_, p| (p.sin(), 0.0));
        let t = covariant_derivative(&c, &u).unwrap();
        assert!(max_diff(&t.comps[0][1], &c.sample(|_, p| p.cos())) < 1e-13);
        for (i, j) in [(0, 0), (1, 0), (1, 1)] {
            assert!(t.comps[i][j].iter().all(|x| x.abs() < 1e-13));
        }

        let c = torus(32);
        let u = VectorField::from_fn(&c, |_, _| (0.0, 1.0));
        let t = covariant_derivative(&c, &u).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(max_diff(&t.comps[i][j], &c.christoffel()[i][j][1]) < 1e-12);
            }
        }
    }

    #[test]
    fn advection_examples() {
        let c = flat();
        let u = VectorField::from_fn(&c, |t, p| (t.sin() * p.cos(), 1.0 + t.cos()));
        let v = VectorField::from_fn(&c, |_, _| (2.0, -1.0));
        assert!(advect(&c, &u, &v).unwrap().max_abs() < 1e-13);
        let w = VectorField::from_fn(&c, |t, _| (0.0, t.sin()));
        assert!(advect(&c, &w, &w).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn deformation_examples() {
        let c = flat();
        let u = VectorField::from_fn(&c, |_, p| (p.sin(), 0.0));
        let d = deformation(&c, &u).unwrap();
        assert_eq!(d.variance, Variance::Covariant);
        let half_cos = c.sample(|_, p| 0.5 * p.cos());
        assert!(max_diff(&d.comps[0][1], &half_cos) < 1e-13);
        assert!(max_diff(&d.comps[1][0], &half_cos) < 1e-13);
        assert!(d.comps[0][0].iter().all(|x| x.abs() < 1e-13));
        assert!(d.comps[1][1].iter().all(|x| x.abs() < 1e-13));

        let c = torus(32);
        let u = VectorField::from_fn(&c, |_, _| (0.0, 2.5));
        assert!(deformation(&c, &u).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn bochner_examples() {
        let c = flat();
        let u = VectorField::from_fn(&c, |_, p| (p.sin(), 0.0));
        let l = bochner_laplacian(&c, &u).unwrap();
        assert!(max_diff(&l.comps[0], &c.sample(|_, p| -p.sin())) < 1e-12);
        assert!(l.comps[1].iter().all(|x| x.abs() < 1e-12));
        let k = VectorField::from_fn(&c, |_, _| (1.0, 1.0));
        assert!(bochner_laplacian(&c, &k).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn bochner_integration_by_parts() {
        let c = torus(32);
        let mut rng = SmoothFieldSampler::new(3);
        for _ in 0..5 {
            let u = rng.vector_field(&c);
            let lhs = l2_inner(&c, &bochner_laplacian(&c, &u).unwrap(), &u).unwrap();
            let rhs = -grad_norm_sq(&c, &u).unwrap();
            assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn trace_of_deformation_is_divergence() {
        let c = torus(64);
        let mut rng = SmoothFieldSampler::new(5);
        for _ in 0..3 {
            let u = rng.vector_field(&c);
            let tr = trace(&c, &deformation(&c, &u).unwrap());
            let div = divergence(&c, &u).unwrap();
            assert!(max_diff(&tr, &div) <= 1e-10, "{}", max_diff(&tr, &div));
        }
    }

    #[test]
    fn divergence_theorem_and_duality() {
        let c = torus(64);
        let mut rng = SmoothFieldSampler::new(11);
        for _ in 0..3 {
            let u = rng.vector_field(&c);
            let psi = rng.scalar_field(&c);
            let div = divergence(&c, &u).unwrap();
            assert!(integrate_scalar(&c, &div).unwrap().abs() <= 1e-10);
            let lhs = l2_inner(&c, &grad_scalar(&c, &psi).unwrap(), &u).unwrap();
            let rhs = -scalar_inner(&c, &psi, &div).unwrap();
            assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn metric_compatibility() {
        let c = torus(64);
        let mut rng = SmoothFieldSampler::new(17);
        for _ in 0..3 {
            let (u, v, w) = (rng.vector_field(&c), rng.vector_field(&c), rng.vector_field(&c));
            let uv = lower(&c, &u);
            let uv = &uv[0] * &v.comps[0] + &uv[1] * &v.comps[1];
            let s = c.spectral();
            let dw = &w.comps[0] * &s.d(0, &uv) + &w.comps[1] * &s.d(1, &uv);
            let a = lower(&c, &advect(&c, &w, &u).unwrap());
            let b = lower(&c, &advect(&c, &w, &v).unwrap());
            let terms = &a[0] * &v.comps[0] + &a[1] * &v.comps[1] + &b[0] * &u.comps[0]
                + &b[1] * &u.comps[1];
            let residual = integrate_scalar(&c, &(dw - terms)).unwrap();
            assert!(residual.abs() <= 1e-10, "{residual:e}");
        }
    }

    #[test]
    fn killing_antisymmetry_is_pointwise() {
        let c = torus(32);
        let z = VectorField::from_fn(&c, |_, _| (0.0, 1.0));
        let mut rng = SmoothFieldSampler::new(2);
        let v = rng.vector_field(&c);
        let a = lower(&c, &advect(&c, &v, &z).unwrap());
        let form = 2.0 * (&a[0] * &v.comps[0] + &a[1] * &v.comps[1]);
        assert!(form.iter().all(|x| x.abs() <= 1e-10));
    }

    #[test]
    fn inner_products() {
        let c = flat();
        let e0 = VectorField::from_fn(&c, |_, _| (1.0, 0.0));
        let e1 = VectorField::from_fn(&c, |_, _| (0.0, 1.0));
        assert_abs_diff_eq!(l2_inner(&c, &e0, &e1).unwrap(), 0.0);
        assert_abs_diff_eq!(l2_inner(&c, &e0, &e0).unwrap(), 4.0 * PI * PI, epsilon = 1e-11);
        let mut rng = SmoothFieldSampler::new(9);
        let c = torus(16);
        for _ in 0..10 {
            let (u, v) = (rng.vector_field(&c), rng.vector_field(&c));
            let uv = l2_inner(&c, &u, &v).unwrap();
            assert!(uv.abs() <= l2_norm(&c, &u).unwrap() * l2_norm(&c, &v).unwrap() * (1.0 + 1e-14));
        }
        let bad = VectorField::zeros((8, 8));
        assert!(l2_inner(&c, &bad, &bad).is_err());
    }
}
