//! Shared generators for unit tests.

use crate::linalg::spectral_radius;
use crate::lti::{Plant, StateSpace};
use crate::Matrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Random A matrix rescaled to a spectral radius drawn from (0.3, 0.95).
pub fn random_stable_a(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    let target = rng.random_range(0.3..0.95);
    let a = random_matrix(rng, n, n);
    let sr = spectral_radius(&a);
    if sr < 1e-12 {
        return Matrix::zeros(n, n);
    }
    a * (target / sr)
}

pub fn random_stable_system(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> StateSpace {
    StateSpace::new(
        random_stable_a(rng, n),
        random_matrix(rng, n, m),
        random_matrix(rng, p, n),
        random_matrix(rng, p, m),
    )
    .unwrap()
}

pub fn random_plant(
    rng: &mut ChaCha8Rng,
    n: usize,
    m_w: usize,
    m_u: usize,
    p_z: usize,
    p_y: usize,
) -> Plant {
    Plant::new(
        random_matrix(rng, n, n),
        random_matrix(rng, n, m_w),
        random_matrix(rng, n, m_u),
        random_matrix(rng, p_z, n),
        random_matrix(rng, p_y, n),
        random_matrix(rng, p_z, m_w),
        random_matrix(rng, p_z, m_u),
    )
    .unwrap()
}
