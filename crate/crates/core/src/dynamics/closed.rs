use crate::error::{Error, Result};
use crate::linalg::{sandwich, ComplexMatrix, Propagator};
use crate::state::DensityMatrix;

use super::metrics::Tracker;
use super::trace::TraceRecord;

/// Unitary evolution ρ(t) = U_t ρ0 U_t† sampled on `times`.
///
/// The last site of `rho0` is taken as the output node.
pub fn evolve_closed(
    rho0: &DensityMatrix,
    h: &ComplexMatrix,
    times: &[f64],
    tracker: &Tracker,
) -> Result<TraceRecord> {
    if rho0.dim() != h.dim() {
        return Err(Error::Dimension(format!(
            "state dim {} vs Hamiltonian dim {}",
            rho0.dim(),
            h.dim()
        )));
    }
    match times.first() {
        Some(&t0) if t0 == 0.0 => {}
        _ => return Err(Error::InvalidParameter("time grid must start at 0".into())),
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("time grid must be strictly ascending".into()));
    }
    tracker.check_network(rho0.n_sites() - 1, false)?;

    let propagator = Propagator::new(h)?;
    let mut trace = TraceRecord::new(tracker.labels())?;
    for (k, &t) in times.iter().enumerate() {
        let u = propagator.at(t);
        let rho = DensityMatrix::trusted(sandwich(u.as_nalgebra(), rho0.matrix()));
        rho.validate()?;
        trace.push(k, t, tracker.evaluate(&rho, None)?)?;
    }
    Ok(trace)
}
