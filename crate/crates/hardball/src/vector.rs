//! Dense real vectors of runtime dimension.
//!
//! One type serves both roles that show up in the model: the spatial
//! position/velocity of a single ball (dimension `d`) and the phase vector of
//! the whole system (dimension `d * n`, the per-ball vectors concatenated in
//! index order).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

/// A finite real vector. Construction from raw floats does not validate
/// finiteness; state constructors do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        self.sub(other).norm()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + c * other`, the ballistic update primitive.
    pub fn add_scaled(&self, c: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * c).collect())
    }

    pub fn neg(&self) -> Vector {
        self.scale(-1.0)
    }

    /// Unit vector in the direction of `self`; `ZeroVector` below `tol::ZERO`.
    pub fn unit(&self) -> Result<Vector> {
        let n = self.norm();
        if n < tol::ZERO {
            return Err(Error::ZeroVector);
        }
        Ok(self.scale(1.0 / n))
    }

    /// Concatenate per-ball vectors into one phase vector.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Vector>) -> Vector {
        let mut out = Vec::new();
        for p in parts {
            out.extend_from_slice(&p.0);
        }
        Vector(out)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Angle in `[0, pi]` between two nonzero vectors: arccos of the normalized
/// dot product, clamped to `[-1, 1]` so roundoff at (anti)parallel inputs
/// cannot produce NaN. Near 0 and pi the result carries the usual
/// `O(sqrt(ulp))` arccos error; monotonicity tolerances are chosen for that.
pub fn angle_between(a: &Vector, b: &Vector) -> Result<f64> {
    let na = a.norm();
    let nb = b.norm();
    if na < tol::ZERO || nb < tol::ZERO {
        return Err(Error::ZeroVector);
    }
    let cos = (a.dot(b) / (na * nb)).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_of_orthogonal_vectors_is_right() -> Result<()> {
        let a = Vector::from(vec![1.0, 0.0]);
        let b = Vector::from(vec![0.0, 1.0]);
        let alpha = angle_between(&a, &b)?;
        assert!((alpha - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        Ok(())
    }

    #[test]
    fn angle_is_scale_invariant_and_symmetric() -> Result<()> {
        let a = Vector::from(vec![3.0, -1.0, 2.0]);
        let b = Vector::from(vec![-0.5, 4.0, 1.0]);
        let ab = angle_between(&a, &b)?;
        let ba = angle_between(&b, &a)?;
        let scaled = angle_between(&a.scale(7.25), &b.scale(0.003))?;
        assert!((ab - ba).abs() < 1e-15);
        assert!((ab - scaled).abs() < 1e-12);
        Ok(())
    }

    #[test]
    fn angle_clamps_at_parallel_and_antiparallel() -> Result<()> {
        let a = Vector::from(vec![0.1, 0.2, 0.3]);
        assert!(angle_between(&a, &a.scale(2.0))?.abs() < 1e-7);
        assert!((angle_between(&a, &a.scale(-3.0))? - std::f64::consts::PI).abs() < 1e-7);
        Ok(())
    }

    #[test]
    fn negating_one_argument_reflects_the_angle() -> Result<()> {
        let a = Vector::from(vec![1.0, 2.0]);
        let b = Vector::from(vec![-2.0, 0.5]);
        let alpha = angle_between(&a, &b)?;
        let beta = angle_between(&a, &b.neg())?;
        assert!((alpha + beta - std::f64::consts::PI).abs() < 1e-12);
        Ok(())
    }

    #[test]
    fn zero_vector_is_rejected() {
        let z = Vector::zeros(3);
        let a = Vector::from(vec![1.0, 0.0, 0.0]);
        assert!(matches!(angle_between(&z, &a), Err(Error::ZeroVector)));
        assert!(matches!(z.unit(), Err(Error::ZeroVector)));
    }
}
