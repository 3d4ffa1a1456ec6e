//! Seeded instance generators for the benchmarks.

use netclear_core::{DynamicInstance, LiabilityMatrix, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random network of `n` banks plus an external sink that every bank owes,
/// with `horizon` periods of inflows covering roughly `stress` of the
/// nominal out-flows.
pub fn random_network(seed: u64, n: usize, horizon: usize, alpha: f64, stress: f64) -> DynamicInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = n + 1;
    let sink = n;
    let mut m = Matrix::square_zeros(size);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.4) {
                m[(i, j)] = rng.gen_range(1.0..100.0);
            }
        }
        m[(i, sink)] = rng.gen_range(10.0..100.0);
    }
    let owed = m.row_sums();
    let inflows = (0..horizon)
        .map(|_| {
            (0..size)
                .map(|i| if i == sink { 0.0 } else { owed[i] * stress * rng.gen_range(0.0..2.0) / horizon as f64 })
                .collect()
        })
        .collect();
    let liabilities = LiabilityMatrix::new(m, Some(sink)).expect("valid by construction");
    DynamicInstance::new(liabilities, inflows, alpha, 0.0).expect("valid by construction")
}
