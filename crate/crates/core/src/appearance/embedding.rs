use crate::error::{Error, Result};

/// Unit-norm appearance vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// L2-normalizes `values`. Fails on empty, zero or non-finite input.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("embedding must be non-empty and finite".into()));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Shape("cannot normalize a zero embedding".into()));
        }
        Ok(Self(values.into_iter().map(|v| v / norm).collect()))
    }

    /// Keeps `values` bit-for-bit when already unit length (within 1e-9),
    /// otherwise normalizes.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if values.iter().all(|v| v.is_finite()) && !values.is_empty() && (norm - 1.0).abs() <= 1e-9 {
            return Ok(Self(values));
        }
        Self::normalized(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Cosine similarity of two unit vectors, clamped to `[-1, 1]`.
///
/// # Panics
/// If the dimensions differ.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    assert_eq!(a.dim(), b.dim(), "embedding dimensions differ");
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_orthogonal_antipodal() {
        let e = EmbeddingVector::normalized(vec![3.0, 4.0]).unwrap();
        assert!((cosine_similarity(&e, &e) - 1.0).abs() < 1e-12);
        let o = EmbeddingVector::normalized(vec![-4.0, 3.0]).unwrap();
        assert!(cosine_similarity(&e, &o).abs() < 1e-12);
        let neg = EmbeddingVector::normalized(vec![-3.0, -4.0]).unwrap();
        assert!((cosine_similarity(&e, &neg) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_and_nan() {
        assert!(EmbeddingVector::normalized(vec![0.0, 0.0]).is_err());
        assert!(EmbeddingVector::normalized(vec![f64::NAN, 1.0]).is_err());
        assert!(EmbeddingVector::normalized(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn normalized_vectors_have_unit_norm(v in prop::collection::vec(-10.0..10.0f64, 1..64)) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            let e = EmbeddingVector::normalized(v).unwrap();
            prop_assert!((e.norm() - 1.0).abs() < 1e-6);
            prop_assert!((cosine_similarity(&e, &e) - 1.0).abs() < 1e-6);
        }
    }
}
