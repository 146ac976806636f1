//! Collision model with memory: after colliding with the system, each unit
//! partially swaps with the forthcoming unit before it is discarded.
//!
//! The register holds the system plus at most two units. Per cycle:
//! system–unit collision for τ, unit–unit collision for τ_uu between the just
//! used unit and a freshly appended one, then the used unit is traced out.

use crate::error::{Error, Result};
use crate::linalg::{expm_unitary, kron, sandwich, ComplexMatrix};
use crate::network::{build_collision_hamiltonian_with, build_unit_unit_hamiltonian_with, QnnTopology, ReservoirSpec};
use crate::state::{bloch_pure, DensityMatrix};

use super::collision::fresh_unit_view;
use super::metrics::{Tracker, UnitView};
use super::trace::TraceRecord;
use super::{finish, CollisionMode, CollisionSchedule, RunOutcome, SteadyParams};

pub fn run_non_markov(
    t: &QnnTopology,
    spec: &ReservoirSpec,
    schedule: &CollisionSchedule,
    rho0: &DensityMatrix,
    tracker: &Tracker,
    steady: SteadyParams,
) -> Result<RunOutcome> {
    schedule.validate()?;
    let CollisionMode::NonMarkov { j_uu, tau_uu } = schedule.mode else {
        return Err(Error::InvalidParameter("run_non_markov needs a non_markov schedule".into()));
    };
    if t.n_inputs() != 1 {
        return Err(Error::InvalidParameter(format!(
            "non-Markovian runs support exactly one input node, got {}",
            t.n_inputs()
        )));
    }
    let n_sys = t.n_system_sites();
    if rho0.n_sites() != n_sys {
        return Err(Error::Dimension(format!(
            "system state spans {} sites, network has {n_sys}",
            rho0.n_sites()
        )));
    }
    rho0.validate()?;
    tracker.check_network(t.n_inputs(), true)?;

    let h_su = build_collision_hamiltonian_with(t, std::slice::from_ref(spec), schedule.free_terms)?;
    let u_su = expm_unitary(&h_su, schedule.tau)?;
    let u_uu = expm_unitary(
        &build_unit_unit_hamiltonian_with(t.omega(), j_uu, schedule.free_terms),
        tau_uu,
    )?;
    let u_units = kron(&ComplexMatrix::identity(1 << n_sys), &u_uu);
    let fresh = bloch_pure(spec.unit_state);

    let sys_sites: Vec<usize> = (0..n_sys).collect();
    let used = n_sys;
    let keep_after_swap: Vec<usize> = (0..n_sys).chain([n_sys + 1]).collect();

    let mut trace = TraceRecord::new(tracker.labels())?;
    trace.push(0, 0.0, tracker.evaluate(rho0, Some(&fresh_unit_view(rho0, spec)?))?)?;

    // System plus the unit that collides next.
    let mut register = kron(rho0.matrix(), fresh.matrix());
    let mut system = rho0.clone();
    for step in 1..=schedule.n_collisions {
        let collided = DensityMatrix::trusted(sandwich(u_su.as_nalgebra(), &register));
        let view = UnitView {
            unit: collided.reduce(&[used])?,
            joint_out_unit: collided.reduce(&[t.output_site(), used])?,
        };

        let extended = kron(collided.matrix(), fresh.matrix());
        let swapped = DensityMatrix::trusted(sandwich(u_units.as_nalgebra(), &extended));
        let next = swapped.reduce(&keep_after_swap)?;
        next.validate()?;

        system = next.reduce(&sys_sites)?;
        trace.push(step, step as f64 * schedule.tau, tracker.evaluate(&system, Some(&view))?)?;
        register = next.into_matrix();
    }
    finish(trace, steady, system)
}
