//! Choi representation of a single Markovian collision.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, herm_eigenvalues, partial_trace, ComplexMatrix};
use crate::network::{QnnTopology, ReservoirSpec};

use super::collision::CollisionChannel;

/// C = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|), input index first; unnormalized so Tr C = d.
pub fn collision_channel_choi(t: &QnnTopology, specs: &[ReservoirSpec], tau: f64) -> Result<ComplexMatrix> {
    let channel = CollisionChannel::new(t, specs, tau, true)?;
    Ok(choi_of(&channel))
}

pub(crate) fn choi_of(channel: &CollisionChannel) -> ComplexMatrix {
    let d = channel.system_dim();
    let mut choi = ComplexMatrix::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut unit = ComplexMatrix::zeros(d);
            unit[(i, j)] = c(1.0, 0.0);
            let image = channel.apply_matrix(&unit);
            for a in 0..d {
                for b in 0..d {
                    choi[(i * d + a, j * d + b)] = image[(a, b)];
                }
            }
        }
    }
    choi
}

/// Φ(ρ) = Tr_in[(ρᵀ ⊗ I) C].
pub fn apply_choi(choi: &ComplexMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = rho.dim();
    if choi.dim() != d * d {
        return Err(Error::Dimension(format!(
            "Choi matrix dim {} does not match state dim {d}",
            choi.dim()
        )));
    }
    Ok(ComplexMatrix::from_fn(d, |a, b| {
        let mut z = c(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                z += rho[(i, j)] * choi[(i * d + a, j * d + b)];
            }
        }
        z
    }))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChoiDiagnostics {
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
    /// Max-abs distance of Tr_out C from the identity.
    pub trace_preservation_error: f64,
}

impl ChoiDiagnostics {
    pub fn is_cptp(&self, tol: f64) -> bool {
        self.hermiticity_error <= tol && self.min_eigenvalue >= -tol && self.trace_preservation_error <= tol
    }
}

pub fn choi_diagnostics(choi: &ComplexMatrix) -> Result<ChoiDiagnostics> {
    let n = choi
        .n_qubits()
        .filter(|n| n % 2 == 0)
        .ok_or_else(|| Error::Dimension(format!("Choi dim {} is not d²", choi.dim())))?;
    let half = n / 2;
    let input_sites: Vec<usize> = (0..half).collect();
    let reduced = partial_trace(choi, n, &input_sites)?;
    let hermiticity_error = choi.hermiticity_error();
    let sym = (choi + &choi.adjoint()).scale_real(0.5);
    Ok(ChoiDiagnostics {
        hermiticity_error,
        min_eigenvalue: herm_eigenvalues(&sym)?[0],
        trace_preservation_error: reduced.max_abs_diff(&ComplexMatrix::identity(1 << half)),
    })
}
