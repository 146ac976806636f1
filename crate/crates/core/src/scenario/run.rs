use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::dynamics::{
    evolve_closed, finish, run_markov, run_non_markov, CollisionMode, RunOutcome, SteadyReport,
};
use crate::error::{Error, Result};
use crate::linalg::{sandwich, Propagator};
use crate::network::{build_system_hamiltonian, target_density};
use crate::state::{bloch_pure, fidelity, product_state, DensityMatrix};

use super::emit::{emit_csv, emit_svg};
use super::{ScenarioConfig, Schedule};

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub steady: SteadyReport,
    /// F(target, ρ_out) after the last step, per named target.
    pub final_fidelities: BTreeMap<String, f64>,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
}

/// Runs the engine selected by the schedule without touching the filesystem.
pub fn simulate(config: &ScenarioConfig) -> Result<RunOutcome> {
    config.validate()?;
    let tracker = config.tracker()?;
    let rho0 = product_state(&config.initial_states.iter().map(|&s| bloch_pure(s)).collect::<Vec<_>>())?;
    let t = &config.topology;
    match &config.schedule {
        Schedule::Closed(grid) => {
            let h = build_system_hamiltonian(t);
            let times = grid.times();
            let trace = evolve_closed(&rho0, &h, &times, &tracker)?;
            let u = Propagator::new(&h)?.at(*times.last().expect("grid is never empty"));
            let last = DensityMatrix::new(sandwich(u.as_nalgebra(), rho0.matrix()))?;
            finish(trace, config.steady, last)
        }
        Schedule::Collision(s) => match s.mode {
            CollisionMode::Markov => run_markov(t, &config.reservoirs, s, &rho0, &tracker, config.steady),
            CollisionMode::NonMarkov { .. } => {
                run_non_markov(t, &config.reservoirs[0], s, &rho0, &tracker, config.steady)
            }
        },
    }
}

pub(crate) fn final_fidelities(config: &ScenarioConfig, outcome: &RunOutcome) -> Result<BTreeMap<String, f64>> {
    let out = outcome.final_system.reduce(&[config.topology.output_site()])?;
    let mut map = BTreeMap::new();
    for (name, t) in &config.targets {
        map.insert(name.clone(), fidelity(&target_density(t)?, &out)?);
    }
    Ok(map)
}

/// Files written so far; removed again unless the run commits.
pub(crate) struct Staging {
    files: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
}

impl Staging {
    pub(crate) fn new(out_dir: &Path) -> Result<Self> {
        let created_dir = if out_dir.exists() {
            None
        } else {
            fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
            Some(out_dir.to_path_buf())
        };
        Ok(Staging {
            files: Vec::new(),
            created_dir,
        })
    }

    pub(crate) fn write(&mut self, path: PathBuf, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let existed = path.exists();
        let result = f(&path);
        if result.is_ok() || (!existed && path.exists()) {
            self.files.push(path);
        }
        result
    }

    pub(crate) fn files(&self) -> &[PathBuf] {
        &self.files
    }

    pub(crate) fn rollback(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if let Some(dir) = &self.created_dir {
            let _ = fs::remove_dir(dir);
        }
    }
}

pub(crate) fn file_stem(label: &str) -> String {
    label.replace(':', "-")
}

/// Executes `config` and writes `<name>.csv`, optional `<name>.<metric>.svg`
/// plots and `<name>.summary.json` into `out_dir`.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path, svg: bool) -> Result<RunReport> {
    let start = Instant::now();
    let outcome = simulate(config)?;
    let final_fidelities = final_fidelities(config, &outcome)?;

    let mut staging = Staging::new(out_dir)?;
    let result = (|| {
        let name = &config.name;
        staging.write(out_dir.join(format!("{name}.csv")), |p| emit_csv(&outcome.trace, p))?;
        if svg {
            for label in outcome.trace.labels() {
                let path = out_dir.join(format!("{name}.{}.svg", file_stem(label)));
                staging.write(path, |p| emit_svg(&outcome.trace, label, p))?;
            }
        }
        let summary = out_dir.join(format!("{name}.summary.json"));
        let mut files = staging.files().to_vec();
        files.push(summary.clone());
        let report = RunReport {
            scenario: name.clone(),
            steady: outcome.steady.clone(),
            final_fidelities,
            wall_time_s: start.elapsed().as_secs_f64(),
            files,
        };
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        staging.write(summary, |p| {
            fs::write(p, json + "\n").map_err(|e| Error::io(format!("writing {}", p.display()), e))
        })?;
        Ok(report)
    })();
    if result.is_err() {
        staging.rollback();
    }
    result
}
