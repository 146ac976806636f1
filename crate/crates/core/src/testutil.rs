//! Random fixtures shared by unit tests.

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::ComplexMatrix;

pub fn random_matrix(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = random_matrix(rng, dim);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// G†G normalized to unit trace.
pub fn random_density(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = random_matrix(rng, dim);
    let p = &g.adjoint() * &g;
    let tr = p.trace().re;
    p.scale_real(1.0 / tr)
}
