//! Qubit states and the scalar figures of merit tracked during a run.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, herm_eigenvalues, kron, partial_trace, pauli, psd_sqrt, ComplexMatrix};

pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Eigenvalues below this are treated as exact zeros in entropies.
pub const ENTROPY_FLOOR: f64 = 1e-14;
const IMAG_REJECT: f64 = 1e-8;
const FIDELITY_CLAMP: f64 = 1e-9;

/// Pure qubit state cos(θ/2)|↑⟩ + e^{iφ} sin(θ/2)|↓⟩.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureBlochState {
    theta: f64,
    phi: f64,
}

impl PureBlochState {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidParameter(format!("bloch theta {theta} outside [0, pi]")));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::InvalidParameter(format!("bloch phi {phi} outside [0, 2pi)")));
        }
        Ok(PureBlochState { theta, phi })
    }

    pub fn up() -> Self {
        PureBlochState { theta: 0.0, phi: 0.0 }
    }

    pub fn down() -> Self {
        PureBlochState { theta: PI, phi: 0.0 }
    }

    pub fn plus() -> Self {
        PureBlochState {
            theta: PI / 2.0,
            phi: 0.0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Amplitudes on (|↑⟩, |↓⟩).
    pub fn amplitudes(&self) -> [Complex64; 2] {
        let half = self.theta / 2.0;
        [c(half.cos(), 0.0), Complex64::from_polar(half.sin(), self.phi)]
    }

    /// True for the two poles of the sphere.
    pub fn is_pointer_state(&self) -> bool {
        self.theta == 0.0 || self.theta == PI
    }
}

/// Valid density operator on an `n_sites` qubit register.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n_sites: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n_sites = matrix.n_qubits().ok_or_else(|| {
            Error::Dimension(format!("density matrix dim {} is not a power of two", matrix.dim()))
        })?;
        validate(&matrix)?;
        Ok(DensityMatrix { n_sites, matrix })
    }

    /// Wraps a matrix produced by a trace-preserving map without re-validating.
    pub(crate) fn trusted(matrix: ComplexMatrix) -> Self {
        let n_sites = matrix.n_qubits().expect("qubit register");
        DensityMatrix { n_sites, matrix }
    }

    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state vector norm² {norm} is not 1")));
        }
        let m = ComplexMatrix::from_fn(amplitudes.len(), |i, j| amplitudes[i] * amplitudes[j].conj());
        DensityMatrix::new(m)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Re-checks the density-matrix invariants, e.g. after propagation.
    pub fn validate(&self) -> Result<()> {
        validate(&self.matrix)
    }

    pub fn reduce(&self, keep: &[usize]) -> Result<DensityMatrix> {
        Ok(DensityMatrix::trusted(partial_trace(&self.matrix, self.n_sites, keep)?))
    }

    /// Population of basis state `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }
}

fn validate(m: &ComplexMatrix) -> Result<()> {
    let herm = m.hermiticity_error();
    if herm > TRACE_TOL {
        return Err(Error::InvalidState(format!("hermiticity error {herm:.3e}")));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    let min = herm_eigenvalues(m)?[0];
    if min < -POSITIVITY_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Observable {
    name: String,
    matrix: ComplexMatrix,
}

impl Observable {
    pub fn new(name: impl Into<String>, matrix: ComplexMatrix) -> Result<Self> {
        let err = matrix.hermiticity_error();
        if err > TRACE_TOL {
            return Err(Error::NotHermitian(err));
        }
        Ok(Observable {
            name: name.into(),
            matrix,
        })
    }

    pub fn sigma_x() -> Self {
        Observable {
            name: "sigma_x".into(),
            matrix: pauli::x(),
        }
    }

    pub fn sigma_y() -> Self {
        Observable {
            name: "sigma_y".into(),
            matrix: pauli::y(),
        }
    }

    pub fn sigma_z() -> Self {
        Observable {
            name: "sigma_z".into(),
            matrix: pauli::z(),
        }
    }

    /// Projector onto |↑⟩.
    pub fn projector_up() -> Self {
        Observable {
            name: "p_up".into(),
            matrix: ComplexMatrix::from_real_diagonal(&[1.0, 0.0]),
        }
    }

    pub fn projector_down() -> Self {
        Observable {
            name: "p_down".into(),
            matrix: ComplexMatrix::from_real_diagonal(&[0.0, 1.0]),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

pub fn bloch_pure(s: PureBlochState) -> DensityMatrix {
    let [a, b] = s.amplitudes();
    let amps = [a, b];
    DensityMatrix::trusted(ComplexMatrix::from_fn(2, |i, j| amps[i] * amps[j].conj()))
}

pub fn product_state(factors: &[DensityMatrix]) -> Result<DensityMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("product state needs at least one factor".into()))?;
    let m = rest.iter().fold(first.matrix.clone(), |acc, f| kron(&acc, &f.matrix));
    Ok(DensityMatrix::trusted(m))
}

fn real_trace(product: &ComplexMatrix) -> Result<f64> {
    let tr = product.trace();
    if tr.im.abs() > IMAG_REJECT {
        return Err(Error::InvalidState(format!(
            "expectation value has imaginary part {:.3e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

fn check_dims(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

/// Tr[ρ O].
pub fn expectation(rho: &DensityMatrix, obs: &Observable) -> Result<f64> {
    check_dims(rho.dim(), obs.matrix.dim(), "expectation")?;
    real_trace(&(&rho.matrix * &obs.matrix))
}

/// Tr √(√ρ σ √ρ).
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim(), "fidelity")?;
    let root = psd_sqrt(&rho.matrix)?;
    let inner = &(&root * &sigma.matrix) * &root;
    let f = real_trace(&psd_sqrt(&inner)?)?;
    if !(-FIDELITY_CLAMP..=1.0 + FIDELITY_CLAMP).contains(&f) {
        return Err(Error::InvalidState(format!("fidelity {f} outside [0, 1]")));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Sum of the moduli of all off-diagonal entries.
pub fn l1_coherence(rho: &DensityMatrix) -> f64 {
    let n = rho.dim();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += rho.matrix[(i, j)].norm();
            }
        }
    }
    total
}

/// −Tr ρ ln ρ in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&herm_eigenvalues(&rho.matrix)?))
}

pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > ENTROPY_FLOOR)
        .map(|&l| -l * l.ln())
        .sum::<f64>()
        .max(0.0)
}

/// Tr[ρ H].
pub fn internal_energy(rho: &DensityMatrix, h: &ComplexMatrix) -> Result<f64> {
    check_dims(rho.dim(), h.dim(), "internal energy")?;
    real_trace(&(&rho.matrix * h))
}

/// S(A) + S(B) − S(AB), without clamping.
pub fn mutual_information_raw(rho: &DensityMatrix, sites_a: &[usize], sites_b: &[usize]) -> Result<f64> {
    let n = rho.n_sites;
    let mut seen = vec![false; n];
    for &s in sites_a.iter().chain(sites_b) {
        if s >= n {
            return Err(Error::SiteOutOfRange { site: s, n_sites: n });
        }
        if seen[s] {
            return Err(Error::InvalidParameter(format!("site {s} appears in both partitions")));
        }
        seen[s] = true;
    }
    if seen.iter().any(|&covered| !covered) || sites_a.is_empty() || sites_b.is_empty() {
        return Err(Error::InvalidParameter(
            "mutual information partitions must be nonempty and cover every site".into(),
        ));
    }
    let s_a = von_neumann_entropy(&rho.reduce(sites_a)?)?;
    let s_b = von_neumann_entropy(&rho.reduce(sites_b)?)?;
    let s_ab = von_neumann_entropy(rho)?;
    Ok(s_a + s_b - s_ab)
}

pub fn mutual_information(rho: &DensityMatrix, sites_a: &[usize], sites_b: &[usize]) -> Result<f64> {
    Ok(mutual_information_raw(rho, sites_a, sites_b)?.max(0.0))
}
