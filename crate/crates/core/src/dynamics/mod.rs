//! Closed, Markovian and non-Markovian evolution of the network.

mod choi;
mod closed;
mod collision;
mod metrics;
mod non_markov;
mod trace;

pub use choi::{apply_choi, choi_diagnostics, collision_channel_choi, ChoiDiagnostics};
pub use closed::evolve_closed;
pub use collision::{markov_collision_step, run_markov, unit_post_state, CollisionChannel};
pub use metrics::{Metric, Tracker, UnitView};
pub use non_markov::run_non_markov;
pub use trace::{detect_steady_state, SteadyReport, TraceRecord, TraceRow, DEFAULT_TOL, DEFAULT_WINDOW};

use crate::error::{Error, Result};
use crate::state::DensityMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CollisionMode {
    Markov,
    /// Each used unit collides with the forthcoming one for `tau_uu` under coupling `j_uu`.
    NonMarkov { j_uu: f64, tau_uu: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionSchedule {
    pub mode: CollisionMode,
    /// Node–unit interaction time.
    pub tau: f64,
    pub n_collisions: usize,
    /// Keep the (ω/2)σ_z terms active during collisions.
    pub free_terms: bool,
}

impl CollisionSchedule {
    pub fn new(mode: CollisionMode, tau: f64, n_collisions: usize) -> Result<Self> {
        let s = CollisionSchedule {
            mode,
            tau,
            n_collisions,
            free_terms: true,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn markov(tau: f64, n_collisions: usize) -> Result<Self> {
        Self::new(CollisionMode::Markov, tau, n_collisions)
    }

    pub fn non_markov(tau: f64, n_collisions: usize, j_uu: f64, tau_uu: f64) -> Result<Self> {
        Self::new(CollisionMode::NonMarkov { j_uu, tau_uu }, tau, n_collisions)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if self.n_collisions == 0 {
            return Err(Error::InvalidParameter("n_collisions must be at least 1".into()));
        }
        if let CollisionMode::NonMarkov { j_uu, tau_uu } = self.mode {
            if !j_uu.is_finite() {
                return Err(Error::InvalidParameter(format!("j_uu must be finite, got {j_uu}")));
            }
            if !(tau_uu.is_finite() && tau_uu > 0.0) {
                return Err(Error::InvalidParameter(format!("tau_uu must be positive, got {tau_uu}")));
            }
        }
        Ok(())
    }
}

/// Knobs for steady-state detection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyParams {
    pub window: usize,
    pub tol: f64,
}

impl Default for SteadyParams {
    fn default() -> Self {
        SteadyParams {
            window: DEFAULT_WINDOW,
            tol: DEFAULT_TOL,
        }
    }
}

/// Trace plus its steady-state analysis.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trace: TraceRecord,
    pub steady: SteadyReport,
    /// System state after the last recorded step.
    pub final_system: DensityMatrix,
}

pub(crate) fn finish(trace: TraceRecord, steady: SteadyParams, final_system: DensityMatrix) -> Result<RunOutcome> {
    // Short runs cannot fill the requested window; shrink it rather than fail.
    let window = steady.window.min(trace.len()).max(2);
    let steady = detect_steady_state(&trace, window, steady.tol)?;
    Ok(RunOutcome {
        trace,
        steady,
        final_system,
    })
}
