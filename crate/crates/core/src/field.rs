//! Grid-sampled fields in chart components.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use ndarray::Array2;

use crate::geometry::SurfaceChart;

/// Scalar samples indexed `[θ, φ]`.
pub type ScalarField = Array2<f64>;

/// Tangent vector field stored by its contravariant components `u^0 = u^θ`, `u^1 = u^φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub comps: [Array2<f64>; 2],
}

/// Index placement of a rank-two tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    /// `T^i_j`: first index up, second (derivative) index down.
    Mixed,
    /// `T_ij`: both indices down.
    Covariant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub comps: [[Array2<f64>; 2]; 2],
    pub variance: Variance,
}

impl VectorField {
    pub fn new(u0: Array2<f64>, u1: Array2<f64>) -> Self {
        assert_eq!(u0.dim(), u1.dim(), "component grids differ");
        Self { comps: [u0, u1] }
    }

    pub fn zeros(shape: (usize, usize)) -> Self {
        Self::new(Array2::zeros(shape), Array2::zeros(shape))
    }

    /// Samples `f(θ, φ) = (u^θ, u^φ)` on the chart grid.
    pub fn from_fn(chart: &SurfaceChart, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let u0 = chart.sample(|t, p| f(t, p).0);
        let u1 = chart.sample(|t, p| f(t, p).1);
        Self::new(u0, u1)
    }

    pub fn dim(&self) -> (usize, usize) {
        self.comps[0].dim()
    }

    /// Component-major flattening: all of `u^0` in row-major order, then `u^1`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.comps[0].len());
        for c in &self.comps {
            v.extend(c.iter().copied());
        }
        v
    }

    /// Inverse of [`VectorField::to_vec`].
    pub fn from_slice(shape: (usize, usize), data: &[f64]) -> Self {
        let n = shape.0 * shape.1;
        assert_eq!(data.len(), 2 * n, "expected {} values", 2 * n);
        let u0 = Array2::from_shape_vec(shape, data[..n].to_vec()).expect("shape");
        let u1 = Array2::from_shape_vec(shape, data[n..].to_vec()).expect("shape");
        Self::new(u0, u1)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(&self.comps[0] * s, &self.comps[1] * s)
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &VectorField) {
        for (a, b) in self.comps.iter_mut().zip(other.comps.iter()) {
            a.scaled_add(s, b);
        }
    }

    pub fn map(&self, f: impl Fn(&Array2<f64>) -> Array2<f64>) -> Self {
        Self::new(f(&self.comps[0]), f(&self.comps[1]))
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        VectorField::new(&self.comps[0] + &rhs.comps[0], &self.comps[1] + &rhs.comps[1])
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        VectorField::new(&self.comps[0] - &rhs.comps[0], &self.comps[1] - &rhs.comps[1])
    }
}

impl Add for VectorField {
    type Output = VectorField;
    fn add(self, rhs: VectorField) -> VectorField {
        &self + &rhs
    }
}

impl Sub for VectorField {
    type Output = VectorField;
    fn sub(self, rhs: VectorField) -> VectorField {
        &self - &rhs
    }
}

impl AddAssign<&VectorField> for VectorField {
    fn add_assign(&mut self, rhs: &VectorField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&VectorField> for VectorField {
    fn sub_assign(&mut self, rhs: &VectorField) {
        self.axpy(-1.0, rhs);
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, s: f64) -> VectorField {
        self.scale(s)
    }
}

impl Mul<f64> for VectorField {
    type Output = VectorField;
    fn mul(self, s: f64) -> VectorField {
        self.scale(s)
    }
}

impl Neg for VectorField {
    type Output = VectorField;
    fn neg(self) -> VectorField {
        self.scale(-1.0)
    }
}

impl TensorField {
    pub fn zeros(shape: (usize, usize), variance: Variance) -> Self {
        Self {
            comps: std::array::from_fn(|_| std::array::from_fn(|_| Array2::zeros(shape))),
            variance,
        }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.comps[0][0].dim()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .flat_map(|c| c.iter())
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    /// Largest `|T_01 − T_10|` over the grid.
    pub fn asymmetry(&self) -> f64 {
        (&self.comps[0][1] - &self.comps[1][0]).fold(0.0, |m: f64, x| m.max(x.abs()))
    }
}
