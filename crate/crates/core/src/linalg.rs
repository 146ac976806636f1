//! Dense complex linear algebra for small qubit registers.
//!
//! Site ordering convention used throughout the crate: site 0 is the leftmost
//! Kronecker factor, i.e. the most significant bit of a basis index.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_CLAMP` are rounded up to zero in [`psd_sqrt`].
pub const PSD_CLAMP: f64 = 1e-12;
/// Eigenvalues below `-PSD_REJECT` are treated as a genuine positivity violation.
pub const PSD_REJECT: f64 = 1e-9;

const EIG_MAX_SWEEPS: usize = 10_000;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Square complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim(), self.dim())?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        ComplexMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        ComplexMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        ComplexMatrix(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from row-major entries; the entry count must be a perfect square.
    pub fn from_row_major(entries: &[Complex64]) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entries.len() {
            return Err(Error::Dimension(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        Ok(ComplexMatrix(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { c(diag[i], 0.0) } else { c(0.0, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Number of qubits when the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        ComplexMatrix(self.0.transpose())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in comparison");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max-abs deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.0[(i, j)] == c(0.0, 0.0)))
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let n = self.dim();
        (0..n * n).map(|k| self.0[(k / n, k % n)]).collect()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.0[idx]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in product");
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in sum");
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in difference");
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self - &rhs
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self + &rhs
    }
}

pub mod pauli {
    use super::{c, ComplexMatrix};

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        })
    }

    /// diag(1, -1): index 0 is spin-up.
    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    /// Raising operator |↑⟩⟨↓|.
    pub fn plus() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |i, j| if (i, j) == (0, 1) { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    /// Lowering operator |↓⟩⟨↑|.
    pub fn minus() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |i, j| if (i, j) == (1, 0) { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Places a single-qubit operator at `site` of an `n_sites` register.
pub fn embed(op: &ComplexMatrix, site: usize, n_sites: usize) -> Result<ComplexMatrix> {
    if op.dim() != 2 {
        return Err(Error::Dimension(format!(
            "embedded operator must be 2x2, got {0}x{0}",
            op.dim()
        )));
    }
    if site >= n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    let left = ComplexMatrix::identity(1 << site);
    let right = ComplexMatrix::identity(1 << (n_sites - site - 1));
    Ok(kron(&kron(&left, op), &right))
}

/// Embeds the product `op_a ⊗ op_b` acting on two distinct sites.
pub fn embed_pair(
    op_a: &ComplexMatrix,
    site_a: usize,
    op_b: &ComplexMatrix,
    site_b: usize,
    n_sites: usize,
) -> Result<ComplexMatrix> {
    if site_a == site_b {
        return Err(Error::InvalidParameter(format!(
            "pair operator needs two distinct sites, got {site_a} twice"
        )));
    }
    Ok(&embed(op_a, site_a, n_sites)? * &embed(op_b, site_b, n_sites)?)
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the normalized eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// Rebuilds `V f(Λ) V†` for a scalar function of the spectrum.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let v = &self.eigenvectors.0;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fk = f(lambda);
            for i in 0..n {
                scaled[(i, k)] *= fk;
            }
        }
        ComplexMatrix(scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply(|l| c(l, 0.0))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

pub fn herm_eig(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    let err = a.hermiticity_error();
    if err > HERMITIAN_TOL {
        return Err(Error::NotHermitian(err));
    }
    // Symmetrize so round-off below the tolerance does not leak into the solver.
    let sym = (&a.0 + a.0.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIG_MAX_SWEEPS).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = a.dim();
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending.
pub fn herm_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(herm_eig(a)?.eigenvalues)
}

/// `exp(-i h t)` for Hermitian `h`.
pub fn expm_unitary(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(Propagator::new(h)?.at(t))
}

/// Diagonalized generator, reusable across many evolution times.
#[derive(Clone, Debug)]
pub struct Propagator {
    eig: EigenDecomposition,
}

impl Propagator {
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        Ok(Propagator { eig: herm_eig(h)? })
    }

    pub fn at(&self, t: f64) -> ComplexMatrix {
        self.eig.apply(|lambda| Complex64::from_polar(1.0, -lambda * t))
    }
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(a)?;
    let min = eig.min_eigenvalue();
    if min < -PSD_REJECT {
        return Err(Error::NotPositive(min));
    }
    Ok(eig.apply(|lambda| {
        if lambda < PSD_CLAMP {
            c(0.0, 0.0)
        } else {
            c(lambda.sqrt(), 0.0)
        }
    }))
}

/// Reduces an `n_sites` register onto the sites in `keep` (output in ascending site order).
pub fn partial_trace(rho: &ComplexMatrix, n_sites: usize, keep: &[usize]) -> Result<ComplexMatrix> {
    if rho.dim() != 1usize << n_sites {
        return Err(Error::Dimension(format!(
            "matrix of dim {} is not a {}-qubit operator",
            rho.dim(),
            n_sites
        )));
    }
    if keep.is_empty() {
        return Err(Error::InvalidParameter("partial trace needs at least one kept site".into()));
    }
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() {
        return Err(Error::InvalidParameter("duplicate site in partial-trace keep set".into()));
    }
    if let Some(&bad) = kept.iter().find(|&&s| s >= n_sites) {
        return Err(Error::SiteOutOfRange { site: bad, n_sites });
    }
    let traced: Vec<usize> = (0..n_sites).filter(|s| !kept.contains(s)).collect();

    // Bit masks within the full index for each kept and traced site, most significant first.
    let bit = |site: usize| 1usize << (n_sites - 1 - site);
    let scatter = |value: usize, sites: &[usize]| -> usize {
        let len = sites.len();
        sites
            .iter()
            .enumerate()
            .filter(|(k, _)| value & (1 << (len - 1 - k)) != 0)
            .map(|(_, &s)| bit(s))
            .sum()
    };
    let kept_offsets: Vec<usize> = (0..1usize << kept.len()).map(|v| scatter(v, &kept)).collect();
    let traced_offsets: Vec<usize> = (0..1usize << traced.len()).map(|v| scatter(v, &traced)).collect();

    let d = kept_offsets.len();
    let mut out = ComplexMatrix::zeros(d);
    for (r, &row) in kept_offsets.iter().enumerate() {
        for (q, &col) in kept_offsets.iter().enumerate() {
            out.0[(r, q)] = traced_offsets
                .iter()
                .map(|&t| rho.0[(row | t, col | t)])
                .sum();
        }
    }
    Ok(out)
}

/// Computes `V ρ V†` for a rectangular `V` given as its nalgebra form.
pub(crate) fn sandwich(v: &DMatrix<Complex64>, rho: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(v * &rho.0 * v.adjoint())
}

pub(crate) fn wrap(m: DMatrix<Complex64>) -> ComplexMatrix {
    debug_assert_eq!(m.nrows(), m.ncols());
    ComplexMatrix(m)
}
