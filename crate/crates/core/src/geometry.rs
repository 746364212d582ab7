//! Doubly periodic metric charts and their derived geometry.
//!
//! A chart covers the surface with coordinates `(θ, φ) ∈ [0, 2π)²` and is
//! fully described by the metric samples `g_ij`. Everything else (inverse,
//! area density, Christoffel symbols, Gaussian curvature) is derived here
//! with spectral derivatives, so user supplied metrics are handled exactly
//! like the built-in tori.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectral::{node, Spectral};

/// `g[i][j]`, one array per component.
pub type Metric = [[Array2<f64>; 2]; 2];

/// `gamma[k][i][j] = Γ^k_ij`.
pub type Christoffel = [[[Array2<f64>; 2]; 2]; 2];

const MAX_CONDITION: f64 = 1e12;

/// Which surface a chart parametrizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceKind {
    /// Flat torus with side lengths `l1 × l2`.
    FlatTorus { l1: f64, l2: f64 },
    /// Torus of revolution with center-line radius `big_r` and tube radius `small_r`.
    TorusOfRevolution { big_r: f64, small_r: f64 },
    /// Metric supplied by the caller.
    Custom,
}

#[derive(Debug, Clone)]
pub struct SurfaceChart {
    kind: SurfaceKind,
    n_theta: usize,
    n_phi: usize,
    spectral: Spectral,
    metric: Metric,
    inv_metric: Metric,
    area_density: Array2<f64>,
    christoffel: Christoffel,
    gauss_curvature: Array2<f64>,
}

fn check_grid(n_theta: usize, n_phi: usize) -> Result<()> {
    for (name, n) in [("n_theta", n_theta), ("n_phi", n_phi)] {
        if n < 8 {
            return Err(Error::InvalidGrid(format!("{name} = {n} is below the minimum of 8")));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("{name} = {n} must be even")));
        }
    }
    Ok(())
}

fn sample(n_theta: usize, n_phi: usize, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
    Array2::from_shape_fn((n_theta, n_phi), |(i, j)| f(node(i, n_theta), node(j, n_phi)))
}

/// Flat torus `[0, L1) × [0, L2)` in normalized chart coordinates.
pub fn build_flat_torus(l1: f64, l2: f64, n_theta: usize, n_phi: usize) -> Result<SurfaceChart> {
    if !(l1 > 0.0 && l2 > 0.0) || !l1.is_finite() || !l2.is_finite() {
        return Err(Error::InvalidSurface(format!(
            "side lengths must be positive, got L1 = {l1}, L2 = {l2}"
        )));
    }
    check_grid(n_theta, n_phi)?;
    let a = (l1 / (2.0 * PI)).powi(2);
    let b = (l2 / (2.0 * PI)).powi(2);
    let g = [
        [Array2::from_elem((n_theta, n_phi), a), Array2::zeros((n_theta, n_phi))],
        [Array2::zeros((n_theta, n_phi)), Array2::from_elem((n_theta, n_phi), b)],
    ];
    SurfaceChart::with_kind(SurfaceKind::FlatTorus { l1, l2 }, g)
}

/// Torus of revolution: `θ` runs around the tube, `φ` around the axis.
pub fn build_torus_of_revolution(
    big_r: f64,
    small_r: f64,
    n_theta: usize,
    n_phi: usize,
) -> Result<SurfaceChart> {
    if !(small_r > 0.0) || !small_r.is_finite() || !big_r.is_finite() {
        return Err(Error::InvalidSurface(format!(
            "radii must be positive and finite, got R = {big_r}, r = {small_r}"
        )));
    }
    if big_r <= small_r {
        return Err(Error::InvalidSurface(format!(
            "R = {big_r} must exceed r = {small_r}; the surface would self-intersect"
        )));
    }
    check_grid(n_theta, n_phi)?;
    let g = [
        [
            Array2::from_elem((n_theta, n_phi), small_r * small_r),
            Array2::zeros((n_theta, n_phi)),
        ],
        [
            Array2::zeros((n_theta, n_phi)),
            sample(n_theta, n_phi, |t, _| (big_r + small_r * t.cos()).powi(2)),
        ],
    ];
    SurfaceChart::with_kind(SurfaceKind::TorusOfRevolution { big_r, small_r }, g)
}

fn check_metric(g: &Metric) -> Result<()> {
    let shape = g[0][0].dim();
    for row in g {
        for c in row {
            if c.dim() != shape {
                return Err(Error::ShapeMismatch { expected: shape, got: c.dim() });
            }
        }
    }
    for ((i, j), &a) in g[0][0].indexed_iter() {
        let b = g[0][1][[i, j]];
        let b2 = g[1][0][[i, j]];
        let c = g[1][1][[i, j]];
        let fail = |reason: String| Error::DegenerateMetric { i, j, reason };
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(fail("non-finite entry".into()));
        }
        if (b - b2).abs() > 1e-14 * (a.abs() + c.abs()) {
            return Err(fail(format!("not symmetric: g_01 = {b}, g_10 = {b2}")));
        }
        let tr = 0.5 * (a + c);
        let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        let (lo, hi) = (tr - disc, tr + disc);
        if lo <= 0.0 {
            return Err(fail(format!("not positive definite (eigenvalues {lo}, {hi})")));
        }
        if hi / lo > MAX_CONDITION {
            return Err(fail(format!("condition number {:e} exceeds {MAX_CONDITION:e}", hi / lo)));
        }
    }
    Ok(())
}

fn invert(g: &Metric) -> (Metric, Array2<f64>) {
    let det = &g[0][0] * &g[1][1] - &g[0][1] * &g[1][0];
    let inv = [
        [&g[1][1] / &det, -(&g[0][1] / &det)],
        [-(&g[1][0] / &det), &g[0][0] / &det],
    ];
    (inv, det.mapv(f64::sqrt))
}

/// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)` with Fourier derivatives.
pub fn christoffel_from_metric(g: &Metric) -> Result<Christoffel> {
    check_metric(g)?;
    let (nt, np) = g[0][0].dim();
    let spectral = Spectral::new(nt, np);
    let (inv, _) = invert(g);
    Ok(christoffel_with(&spectral, g, &inv))
}

fn christoffel_with(spectral: &Spectral, g: &Metric, inv: &Metric) -> Christoffel {
    // dg[l][i][j] = ∂_l g_ij
    let dg: [[[Array2<f64>; 2]; 2]; 2] = std::array::from_fn(|l| {
        std::array::from_fn(|i| std::array::from_fn(|j| spectral.d(l, &g[i][j])))
    });
    // first kind, lowered: Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let first: [[[Array2<f64>; 2]; 2]; 2] = std::array::from_fn(|l| {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| 0.5 * (&dg[i][j][l] + &dg[j][i][l] - &dg[l][i][j]))
        })
    });
    let mut gamma: Christoffel = std::array::from_fn(|k| {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| &inv[k][0] * &first[0][i][j] + &inv[k][1] * &first[1][i][j])
        })
    });
    // enforce exact symmetry in the lower indices
    for k in 0..2 {
        let sym = 0.5 * (&gamma[k][0][1] + &gamma[k][1][0]);
        gamma[k][0][1] = sym.clone();
        gamma[k][1][0] = sym;
    }
    gamma
}

/// Gaussian curvature from the Riemann tensor, `K = R_0101 / det g`.
fn curvature_with(spectral: &Spectral, g: &Metric, gamma: &Christoffel) -> Array2<f64> {
    // R^a_{101} = ∂_0 Γ^a_{11} − ∂_1 Γ^a_{01} + Γ^a_{0e} Γ^e_{11} − Γ^a_{1e} Γ^e_{01}
    let riemann_up: [Array2<f64>; 2] = std::array::from_fn(|a| {
        let mut r = spectral.d(0, &gamma[a][1][1]) - spectral.d(1, &gamma[a][0][1]);
        for e in 0..2 {
            r = r + &gamma[a][0][e] * &gamma[e][1][1] - &gamma[a][1][e] * &gamma[e][0][1];
        }
        r
    });
    let r0101 = &g[0][0] * &riemann_up[0] + &g[0][1] * &riemann_up[1];
    let det = &g[0][0] * &g[1][1] - &g[0][1] * &g[1][0];
    r0101 / det
}

impl SurfaceChart {
    /// Builds a chart from arbitrary metric samples (shape `(N_θ, N_φ)`).
    pub fn from_metric(g: Metric) -> Result<Self> {
        Self::with_kind(SurfaceKind::Custom, g)
    }

    fn with_kind(kind: SurfaceKind, g: Metric) -> Result<Self> {
        check_metric(&g)?;
        let (n_theta, n_phi) = g[0][0].dim();
        check_grid(n_theta, n_phi)?;
        let spectral = Spectral::new(n_theta, n_phi);
        let (inv_metric, area_density) = invert(&g);
        let christoffel = christoffel_with(&spectral, &g, &inv_metric);
        let gauss_curvature = curvature_with(&spectral, &g, &christoffel);
        Ok(Self {
            kind,
            n_theta,
            n_phi,
            spectral,
            metric: g,
            inv_metric,
            area_density,
            christoffel,
            gauss_curvature,
        })
    }

    /// Same surface resampled on another grid. Custom charts cannot be resampled.
    pub fn refined(&self, n_theta: usize, n_phi: usize) -> Result<Self> {
        match self.kind {
            SurfaceKind::FlatTorus { l1, l2 } => build_flat_torus(l1, l2, n_theta, n_phi),
            SurfaceKind::TorusOfRevolution { big_r, small_r } => {
                build_torus_of_revolution(big_r, small_r, n_theta, n_phi)
            }
            SurfaceKind::Custom => Err(Error::InvalidArgument(
                "custom charts carry no analytic metric to resample".into(),
            )),
        }
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn grid_sizes(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    pub fn node_count(&self) -> usize {
        self.n_theta * self.n_phi
    }

    /// Grid spacing `(2π/N_θ, 2π/N_φ)`.
    pub fn spacing(&self) -> (f64, f64) {
        (2.0 * PI / self.n_theta as f64, 2.0 * PI / self.n_phi as f64)
    }

    /// Coordinates `(θ, φ)` of node `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (node(i, self.n_theta), node(j, self.n_phi))
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn inv_metric(&self) -> &Metric {
        &self.inv_metric
    }

    /// `√det g` per node.
    pub fn area_density(&self) -> &Array2<f64> {
        &self.area_density
    }

    pub fn christoffel(&self) -> &Christoffel {
        &self.christoffel
    }

    pub fn gauss_curvature(&self) -> &Array2<f64> {
        &self.gauss_curvature
    }

    /// Samples a function of the chart coordinates on the grid.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        sample(self.n_theta, self.n_phi, f)
    }

    /// Total area `∫ dΣ`.
    pub fn area(&self) -> f64 {
        let (ht, hp) = self.spacing();
        self.area_density.sum() * ht * hp
    }

    /// Smallest physical distance between neighbouring nodes along a coordinate line.
    pub fn min_spacing(&self) -> f64 {
        let (ht, hp) = self.spacing();
        let a = self.metric[0][0].fold(f64::INFINITY, |m, &x| m.min(x.sqrt() * ht));
        let b = self.metric[1][1].fold(f64::INFINITY, |m, &x| m.min(x.sqrt() * hp));
        a.min(b)
    }

    pub(crate) fn check_shape(&self, got: (usize, usize)) -> Result<()> {
        if got != (self.n_theta, self.n_phi) {
            return Err(Error::ShapeMismatch {
                expected: (self.n_theta, self.n_phi),
                got,
            });
        }
        Ok(())
    }
}

/// Gaussian curvature samples of the chart.
pub fn gaussian_curvature(chart: &SurfaceChart) -> Array2<f64> {
    chart.gauss_curvature.clone()
}

/// `∫_Σ f dΣ` by the periodic rectangle rule.
pub fn integrate_scalar(chart: &SurfaceChart, f: &Array2<f64>) -> Result<f64> {
    chart.check_shape(f.dim())?;
    let (ht, hp) = chart.spacing();
    Ok((f * chart.area_density()).sum() * ht * hp)
}
