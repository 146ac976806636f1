use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::CollisionMode;
use crate::error::{Error, Result};
use crate::network::QnnTopology;
use crate::state::PureBlochState;

use super::emit::format_value;
use super::run::{simulate, Staging};
use super::{ScenarioConfig, Schedule};

/// Config field addressed by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    /// `reservoir.<k>.j_su_ratio`: j_su = (configured j_su)·value.
    JSuRatio(usize),
    JSu(usize),
    /// Polar angle of the reservoir's unit state; φ is kept.
    UnitTheta(usize),
    Coupling(usize),
    /// `topology.coupling_offset.<i>`: J_i = (configured J_i) − value.
    CouplingOffset(usize),
    Omega,
    Tau,
    JUu,
    TauUu,
}

impl SweepParam {
    pub fn parse(path: &str) -> Result<Self> {
        let bad = || Error::semantic(path, "unknown sweep parameter");
        let parts: Vec<&str> = path.split('.').collect();
        let index = |s: &str| s.parse::<usize>().map_err(|_| bad());
        Ok(match parts.as_slice() {
            ["reservoir", k, "j_su_ratio"] => SweepParam::JSuRatio(index(k)?),
            ["reservoir", k, "j_su"] => SweepParam::JSu(index(k)?),
            ["reservoir", k, "theta"] => SweepParam::UnitTheta(index(k)?),
            ["topology", "coupling", i] => SweepParam::Coupling(index(i)?),
            ["topology", "coupling_offset", i] => SweepParam::CouplingOffset(index(i)?),
            ["topology", "omega"] => SweepParam::Omega,
            ["schedule", "tau"] => SweepParam::Tau,
            ["schedule", "j_uu"] => SweepParam::JUu,
            ["schedule", "tau_uu"] => SweepParam::TauUu,
            _ => return Err(bad()),
        })
    }

    /// Copy of `config` with the parameter set to `value`, re-validated.
    pub fn apply(&self, config: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = config.clone();
        let path = self.to_string();
        let missing = |what: &str| Error::semantic(path.clone(), format!("scenario has no {what}"));
        match *self {
            SweepParam::JSuRatio(k) | SweepParam::JSu(k) | SweepParam::UnitTheta(k) => {
                let r = c.reservoirs.get_mut(k).ok_or_else(|| missing("such reservoir"))?;
                match *self {
                    SweepParam::JSuRatio(_) => r.j_su *= value,
                    SweepParam::JSu(_) => r.j_su = value,
                    _ => r.unit_state = PureBlochState::new(value, r.unit_state.phi())?,
                }
            }
            SweepParam::Coupling(_) | SweepParam::CouplingOffset(_) | SweepParam::Omega => {
                let mut couplings = c.topology.couplings().to_vec();
                let mut omega = c.topology.omega();
                match *self {
                    SweepParam::Coupling(i) => *couplings.get_mut(i).ok_or_else(|| missing("such input"))? = value,
                    SweepParam::CouplingOffset(i) => {
                        *couplings.get_mut(i).ok_or_else(|| missing("such input"))? -= value
                    }
                    _ => omega = value,
                }
                c.topology = QnnTopology::new(omega, couplings)?;
            }
            SweepParam::Tau | SweepParam::JUu | SweepParam::TauUu => {
                let Schedule::Collision(s) = &mut c.schedule else {
                    return Err(missing("collision schedule"));
                };
                match (*self, &mut s.mode) {
                    (SweepParam::Tau, _) => s.tau = value,
                    (SweepParam::JUu, CollisionMode::NonMarkov { j_uu, .. }) => *j_uu = value,
                    (SweepParam::TauUu, CollisionMode::NonMarkov { tau_uu, .. }) => *tau_uu = value,
                    _ => return Err(missing("unit-unit coupling")),
                }
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepParam::JSuRatio(k) => write!(f, "reservoir.{k}.j_su_ratio"),
            SweepParam::JSu(k) => write!(f, "reservoir.{k}.j_su"),
            SweepParam::UnitTheta(k) => write!(f, "reservoir.{k}.theta"),
            SweepParam::Coupling(i) => write!(f, "topology.coupling.{i}"),
            SweepParam::CouplingOffset(i) => write!(f, "topology.coupling_offset.{i}"),
            SweepParam::Omega => f.write_str("topology.omega"),
            SweepParam::Tau => f.write_str("schedule.tau"),
            SweepParam::JUu => f.write_str("schedule.j_uu"),
            SweepParam::TauUu => f.write_str("schedule.tau_uu"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Steady values to collect; empty means every tracked metric.
    pub reduce: Vec<String>,
}

impl SweepSpec {
    pub fn new(param: SweepParam, values: Vec<f64>, reduce: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one value".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("sweep value {v} is not finite")));
        }
        Ok(SweepSpec { param, values, reduce })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub converged: bool,
    /// Empty when the run failed.
    pub steady_values: BTreeMap<String, f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub scenario: String,
    pub param: String,
    pub rows: Vec<SweepRow>,
    /// Largest distance of each reduced metric from the chord joining the
    /// smallest-value and largest-value rows.
    pub chord_deviation: BTreeMap<String, f64>,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
}

impl SweepReport {
    pub fn series(&self, label: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.steady_values.get(label).map(|&y| (r.value, y)))
            .collect()
    }
}

pub(crate) fn chord_deviation(points: &[(f64, f64)]) -> f64 {
    let lo = points.iter().min_by(|a, b| a.0.total_cmp(&b.0));
    let hi = points.iter().max_by(|a, b| a.0.total_cmp(&b.0));
    let (Some(&(xa, ya)), Some(&(xb, yb))) = (lo, hi) else {
        return 0.0;
    };
    if xb <= xa {
        return 0.0;
    }
    points
        .iter()
        .map(|&(x, y)| (y - (ya + (yb - ya) * (x - xa) / (xb - xa))).abs())
        .fold(0.0, f64::max)
}

fn sweep_rows(config: &ScenarioConfig, sweep: &SweepSpec, labels: &[String]) -> Vec<Result<SweepRow>> {
    sweep
        .values
        .par_iter()
        .map(|&value| {
            let outcome = simulate(&sweep.param.apply(config, value)?)?;
            let mut steady_values = BTreeMap::new();
            for l in labels {
                let v = outcome
                    .steady
                    .value(l)
                    .ok_or_else(|| Error::semantic("sweep.reduce", format!("{l:?} is not tracked")))?;
                steady_values.insert(l.clone(), v);
            }
            Ok(SweepRow {
                value,
                converged: outcome.steady.converged,
                steady_values,
                error: None,
            })
        })
        .collect()
}

/// One independent run per value; rows keep the order of `sweep.values`.
pub fn run_sweep(config: &ScenarioConfig, sweep: &SweepSpec, out_dir: &Path) -> Result<SweepReport> {
    let start = Instant::now();
    config.validate()?;
    let labels = if sweep.reduce.is_empty() {
        config.tracked.iter().map(|m| m.to_string()).collect()
    } else {
        sweep.reduce.clone()
    };
    let results = sweep_rows(config, sweep, &labels);
    if results.iter().all(|r| r.is_err()) {
        return Err(results.into_iter().find_map(|r| r.err()).expect("at least one value"));
    }
    let rows: Vec<SweepRow> = results
        .into_iter()
        .zip(&sweep.values)
        .map(|(r, &value)| {
            r.unwrap_or_else(|e| SweepRow {
                value,
                converged: false,
                steady_values: BTreeMap::new(),
                error: Some(e.to_string()),
            })
        })
        .collect();

    let mut report = SweepReport {
        scenario: config.name.clone(),
        param: sweep.param.to_string(),
        chord_deviation: BTreeMap::new(),
        rows,
        wall_time_s: 0.0,
        files: Vec::new(),
    };
    for l in &labels {
        let d = chord_deviation(&report.series(l));
        report.chord_deviation.insert(l.clone(), d);
    }

    let mut csv = format!("value,status");
    for l in &labels {
        csv.push(',');
        csv.push_str(l);
    }
    csv.push('\n');
    for r in &report.rows {
        let status = match (&r.error, r.converged) {
            (Some(_), _) => "failed",
            (None, true) => "converged",
            (None, false) => "unsettled",
        };
        csv.push_str(&format!("{},{status}", format_value(r.value)));
        for l in &labels {
            csv.push(',');
            if let Some(v) = r.steady_values.get(l) {
                csv.push_str(&format_value(*v));
            }
        }
        csv.push('\n');
    }

    let mut staging = Staging::new(out_dir)?;
    let csv_path = out_dir.join(format!("{}.sweep.csv", config.name));
    let json_path = out_dir.join(format!("{}.sweep.json", config.name));
    let result = (|| {
        staging.write(csv_path.clone(), |p| {
            fs::write(p, &csv).map_err(|e| Error::io(format!("writing {}", p.display()), e))
        })?;
        report.files = vec![csv_path, json_path.clone()];
        report.wall_time_s = start.elapsed().as_secs_f64();
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        staging.write(json_path, |p| {
            fs::write(p, json + "\n").map_err(|e| Error::io(format!("writing {}", p.display()), e))
        })
    })();
    if let Err(e) = result {
        staging.rollback();
        return Err(e);
    }
    Ok(report)
}
