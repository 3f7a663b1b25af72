use crate::retrieval::{cosine, Embedder, RetrievalError};
use crate::scalar::Real;

/// Cosine similarity of the two embeddings; 0 if either is all zeros.
pub fn semantic_sim<T: Real, E: Embedder<T> + ?Sized>(
    gen: &str,
    truth: &str,
    embedder: &E,
) -> Result<T, RetrievalError> {
    let a = embedder.embed(gen)?;
    let b = embedder.embed(truth)?;
    if a.len() != b.len() {
        return Err(RetrievalError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(cosine(&a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::HashedTrigramEmbedder;

    struct Axis;
    impl Embedder<f64> for Axis {
        fn dim(&self) -> usize {
            2
        }
        fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
            Ok(if text.starts_with('x') { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
        }
    }

    #[test]
    fn identity_and_orthogonal() {
        let e = HashedTrigramEmbedder::default();
        let s: f64 = semantic_sim("some text here", "some text here", &e).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(semantic_sim("x1", "y1", &Axis).unwrap(), 0.0);
    }
}
