use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::assembly::OperatorMatrix;
use crate::error::{Error, Result};

/// One resolvent solve `(λ + ω + A) x = f` with `‖f‖ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventRow {
    pub magnitude: f64,
    /// `+1` or `−1`: which of the two rays `arg λ = ±(π − φ)`.
    pub ray: i8,
    pub lambda_re: f64,
    pub lambda_im: f64,
    /// `‖x‖_{L₂}`
    pub x_norm: f64,
    /// `(|λ| + 1)‖x‖`
    pub q: f64,
    /// `(|λ| + 1)‖(λ + ω + A)⁻¹‖` from the eigenvalues.
    pub q_norm: f64,
    /// Relative residual `‖(λ + ω + A)x − f‖`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventTable {
    pub omega: f64,
    pub angle: f64,
    pub spectral_bound: f64,
    pub rows: Vec<ResolventRow>,
}

fn spread(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let hi = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.fold(f64::INFINITY, f64::min);
    (hi - lo) / lo
}

impl ResolventTable {
    /// Largest `q` over all probes.
    pub fn max_q(&self) -> f64 {
        self.rows.iter().map(|r| r.q).fold(0.0, f64::max)
    }

    /// `(max q − min q) / min q`
    pub fn q_variation(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.q))
    }

    /// `(max − min) / min` of the resolvent-norm bound.
    pub fn q_norm_variation(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.q_norm))
    }
}

/// Unit right-hand side in basis coefficients, seeded.
pub fn random_unit_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    f.iter_mut().for_each(|x| *x /= n);
    f
}

/// Probes `(λ + ω + A)⁻¹` along the rays `λ = m e^{±i(π−φ)}`.
///
/// Each solve is a dense complex LU of `(λ + ω)I + M` applied to the unit
/// vector `f` (basis coefficients, so Euclidean norms are L² norms).
pub fn resolvent_probe(
    op: &OperatorMatrix,
    omega: f64,
    angle: f64,
    magnitudes: &[f64],
    f: &[f64],
) -> Result<ResolventTable> {
    let n = op.dim();
    if f.len() != n {
        return Err(Error::InvalidArgument(format!("right-hand side has length {}, expected {n}", f.len())));
    }
    let f_norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(f_norm > 0.0) {
        return Err(Error::InvalidArgument("right-hand side must be nonzero".into()));
    }
    if !(angle > 0.0 && angle < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidArgument(format!("angle must lie in (0, π/2), got {angle}")));
    }
    if magnitudes.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::InvalidArgument("magnitudes must be positive".into()));
    }
    let m = op.symmetric_part();
    let eigenvalues = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let spectral_bound = -eigenvalues[0];
    if !(omega > spectral_bound) {
        return Err(Error::InvalidArgument(format!(
            "shift ω = {omega} must exceed the spectral bound {spectral_bound:e}"
        )));
    }
    let mut rows = Vec::with_capacity(2 * magnitudes.len());
    for &mag in magnitudes {
        for ray in [1i8, -1] {
            let arg = f64::from(ray) * (std::f64::consts::PI - angle);
            let lambda = c64::new(mag * arg.cos(), mag * arg.sin());
            let shift = lambda + c64::new(omega, 0.0);
            let shifted = Mat::<c64>::from_fn(n, n, |i, j| {
                let diag = if i == j { shift } else { c64::new(0.0, 0.0) };
                diag + c64::new(m[(i, j)], 0.0)
            });
            let lu = shifted.partial_piv_lu();
            let mut x = Mat::<c64>::from_fn(n, 1, |i, _| c64::new(f[i], 0.0));
            lu.solve_in_place(x.as_mut());
            if (0..n).any(|i| !x[(i, 0)].re.is_finite() || !x[(i, 0)].im.is_finite()) {
                return Err(Error::Eigen(format!("singular shifted matrix at λ = {lambda}")));
            }
            let r = &shifted * &x;
            let residual = (0..n)
                .map(|i| (r[(i, 0)] - c64::new(f[i], 0.0)).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / f_norm;
            let x_norm = (0..n).map(|i| x[(i, 0)].norm_sqr()).sum::<f64>().sqrt() / f_norm;
            let dist = eigenvalues
                .iter()
                .map(|&mu| (shift + c64::new(mu, 0.0)).norm())
                .fold(f64::INFINITY, f64::min);
            rows.push(ResolventRow {
                magnitude: mag,
                ray,
                lambda_re: lambda.re,
                lambda_im: lambda.im,
                x_norm,
                q: (mag + 1.0) * x_norm,
                q_norm: (mag + 1.0) / dist,
                residual,
            });
        }
    }
    Ok(ResolventTable { omega, angle, spectral_bound, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_flat_torus;
    use crate::stokes::{assemble_operator, divfree_basis, spectrum};
    use std::f64::consts::PI;

    #[test]
    fn eigenvector_rhs_is_exact() {
        let c = build_flat_torus(2.0 * PI, 2.0 * PI, 8, 8).unwrap();
        let b = divfree_basis(&c, 1e-10).unwrap();
        let op = assemble_operator(&c, 1.0, &b).unwrap();
        let sp = spectrum(&op).unwrap();
        let a = 5;
        let mu = sp.eigenvalues[a];
        let f = sp.eigenvector(a);
        let omega = 0.1;
        let t = resolvent_probe(&op, omega, PI / 4.0, &[1.0, 10.0], &f).unwrap();
        for row in &t.rows {
            let exact = 1.0 / (c64::new(row.lambda_re + omega + mu, row.lambda_im)).norm();
            assert!((row.x_norm - exact).abs() <= 1e-10 * exact);
            assert!(row.q <= row.q_norm * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = build_flat_torus(2.0 * PI, 2.0 * PI, 8, 8).unwrap();
        let b = divfree_basis(&c, 1e-10).unwrap();
        let op = assemble_operator(&c, 1.0, &b).unwrap();
        let f = random_unit_vector(op.dim(), 1);
        assert!(resolvent_probe(&op, -1.0, PI / 4.0, &[1.0], &f).is_err());
        assert!(resolvent_probe(&op, 0.1, PI / 2.0, &[1.0], &f).is_err());
        assert!(resolvent_probe(&op, 0.1, PI / 4.0, &[-1.0], &f).is_err());
        assert!(resolvent_probe(&op, 0.1, PI / 4.0, &[1.0], &f[1..]).is_err());
    }
}
