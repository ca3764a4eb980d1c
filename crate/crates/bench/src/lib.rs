//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use compser_core::{Basis, CompSerLabel, ModelVector, WeightLabel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn spherical_basis(d: usize, s: f64, cutoff: i64) -> Arc<Basis> {
    let label = CompSerLabel::standard(d, WeightLabel::trivial(d), s).expect("valid label");
    Basis::new(&label, cutoff).expect("valid basis")
}

/// Seeded random vector on every K-type of the basis.
pub fn random_vector(basis: &Arc<Basis>, seed: u64) -> ModelVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ModelVector::random(basis, &basis.ktypes(), &mut rng).expect("nonempty basis")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        let b = spherical_basis(2, 1.4, 3);
        assert_eq!(random_vector(&b, 1).coeffs, random_vector(&b, 1).coeffs);
        assert_ne!(random_vector(&b, 1).coeffs, random_vector(&b, 2).coeffs);
    }
}
