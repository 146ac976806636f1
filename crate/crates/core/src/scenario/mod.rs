//! Scenario files, figure presets, runs and parameter sweeps.

mod emit;
mod format;
mod presets;
mod run;
mod sweep;

pub use emit::{emit_csv, emit_svg, format_value, write_csv, write_svg};
pub use format::{parse_number, parse_scenario, serialize_scenario};
pub use presets::{preset, preset_names, preset_sweeps, PRESET_NAMES};
pub use run::{run_scenario, simulate, RunReport};
pub use sweep::{run_sweep, SweepParam, SweepReport, SweepRow, SweepSpec};

use std::collections::BTreeMap;

use crate::dynamics::{CollisionMode, CollisionSchedule, Metric, SteadyParams, Tracker};
use crate::error::{Error, Result};
use crate::network::{check_reservoirs, target_density, QnnTopology, ReservoirSpec, TargetState};
use crate::state::PureBlochState;

/// Closed evolution samples at `k·dt` for `k = 0..=round(t_max/dt)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
}

const MAX_SAMPLES: f64 = 1e7;

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        let n = (self.t_max / self.dt).round() as usize;
        (0..=n).map(|k| k as f64 * self.dt).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Schedule {
    Closed(TimeGrid),
    Collision(CollisionSchedule),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub topology: QnnTopology,
    /// One state per site: inputs in order, then the output node.
    pub initial_states: Vec<PureBlochState>,
    pub reservoirs: Vec<ReservoirSpec>,
    pub schedule: Schedule,
    pub targets: BTreeMap<String, TargetState>,
    pub tracked: Vec<Metric>,
    pub steady: SteadyParams,
}

impl ScenarioConfig {
    /// Checks every cross-field invariant; errors carry the offending key path.
    pub fn validate(&self) -> Result<()> {
        if !valid_name(&self.name) {
            return Err(Error::semantic(
                "scenario.name",
                format!("{:?} must be non-empty and use only letters, digits, '_', '-' or '.'", self.name),
            ));
        }
        let n_sites = self.topology.n_system_sites();
        if self.initial_states.len() != n_sites {
            return Err(Error::semantic(
                "state",
                format!("expected {n_sites} site states, got {}", self.initial_states.len()),
            ));
        }
        check_reservoirs(&self.topology, &self.reservoirs).map_err(|e| Error::semantic("reservoir", msg(e)))?;

        match &self.schedule {
            Schedule::Closed(grid) => {
                if !self.reservoirs.is_empty() {
                    return Err(Error::semantic("reservoir", "closed evolution takes no reservoirs"));
                }
                if !(grid.dt.is_finite() && grid.dt > 0.0) {
                    return Err(Error::semantic("schedule.dt", "must be positive"));
                }
                if !(grid.t_max.is_finite() && grid.t_max > 0.0) {
                    return Err(Error::semantic("schedule.t_max", "must be positive"));
                }
                if grid.t_max / grid.dt > MAX_SAMPLES {
                    return Err(Error::semantic("schedule.dt", "time grid has too many samples"));
                }
            }
            Schedule::Collision(s) => {
                s.validate().map_err(|e| Error::semantic("schedule", msg(e)))?;
                if self.reservoirs.is_empty() {
                    return Err(Error::semantic("reservoir", "collision runs need at least one reservoir"));
                }
                if let CollisionMode::NonMarkov { .. } = s.mode {
                    if self.reservoirs.len() != 1 || self.topology.n_inputs() != 1 {
                        return Err(Error::semantic(
                            "schedule.mode",
                            "non_markov runs take exactly one input node and one reservoir",
                        ));
                    }
                }
            }
        }

        if self.steady.window < 2 {
            return Err(Error::semantic("observe.window", "must be at least 2"));
        }
        if !(self.steady.tol.is_finite() && self.steady.tol > 0.0) {
            return Err(Error::semantic("observe.tol", "must be positive"));
        }
        for name in self.targets.keys() {
            if !valid_target_name(name) {
                return Err(Error::semantic(format!("target.{name}"), "bad target name"));
            }
        }
        let tracker = self.tracker().map_err(|e| Error::semantic("observe.metrics", msg(e)))?;
        let has_units = matches!(self.schedule, Schedule::Collision(_));
        tracker
            .check_network(self.topology.n_inputs(), has_units)
            .map_err(|e| Error::semantic("observe.metrics", msg(e)))?;
        Ok(())
    }

    pub fn tracker(&self) -> Result<Tracker> {
        let mut targets = BTreeMap::new();
        for (name, t) in &self.targets {
            targets.insert(name.clone(), target_density(t)?);
        }
        Tracker::new(self.tracked.clone(), targets, self.topology.omega())
    }
}

fn msg(e: Error) -> String {
    match e {
        Error::InvalidParameter(m) => m,
        other => other.to_string(),
    }
}

pub(crate) fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

pub(crate) fn valid_target_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '+'))
}
