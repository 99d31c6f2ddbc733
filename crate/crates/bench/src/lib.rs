//! Shared fixtures for the criterion benches.

use geoguide::random::{stream_rng, BoxMuller};
use geoguide::{extract_subspace, Matrix, SubspaceBasis};

pub fn gaussian(n: usize, d: usize, seed: u64) -> Matrix {
    let mut g = BoxMuller::new(stream_rng(seed, 0));
    Matrix::from_fn(n, d, |_, _| g.sample())
}

/// Two PCA subspaces of independent Gaussian batches.
pub fn subspace_pair(n: usize, d: usize, k: usize) -> (SubspaceBasis, SubspaceBasis) {
    (
        extract_subspace(&gaussian(n, d, 1), k).expect("full-rank batch"),
        extract_subspace(&gaussian(n, d, 2), k).expect("full-rank batch"),
    )
}
