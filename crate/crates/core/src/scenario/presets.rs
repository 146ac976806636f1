//! Built-in scenarios for the figures of the QNN collision-model study.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::dynamics::{CollisionSchedule, Metric, SteadyParams};
use crate::error::{Error, Result};
use crate::network::{QnnTopology, ReservoirSpec, TargetState};
use crate::state::PureBlochState;

use super::sweep::{SweepParam, SweepSpec};
use super::{ScenarioConfig, Schedule, TimeGrid};

pub const PRESET_NAMES: [&str; 9] = [
    "fig1a", "fig1c", "fig2b", "fig2e", "fig2fg", "fig3b", "fig3d", "fig3e", "fig4",
];

const MARKOV_COLLISIONS: usize = 4000;

pub fn preset_names() -> &'static [&'static str] {
    &PRESET_NAMES
}

fn up() -> PureBlochState {
    PureBlochState::up()
}

fn down() -> PureBlochState {
    PureBlochState::down()
}

fn metrics(names: &[&str]) -> Vec<Metric> {
    names.iter().map(|n| Metric::parse(n).expect("preset metric")).collect()
}

fn closed(name: &str, inputs: [PureBlochState; 2]) -> Result<ScenarioConfig> {
    Ok(ScenarioConfig {
        name: name.into(),
        topology: QnnTopology::uniform(2, 1.0, 0.05)?,
        initial_states: vec![inputs[0], inputs[1], PureBlochState::plus()],
        reservoirs: Vec::new(),
        schedule: Schedule::Closed(TimeGrid { t_max: 300.0, dt: 0.5 }),
        targets: BTreeMap::new(),
        tracked: metrics(&["sigma_x_out", "sigma_y_out", "sigma_z_out"]),
        steady: SteadyParams::default(),
    })
}

/// Markov run with one reservoir per input node, all couplings equal to `j`.
fn markov(
    name: &str,
    j: f64,
    units: &[PureBlochState],
    initial: PureBlochState,
    targets: BTreeMap<String, TargetState>,
    tracked: &[&str],
) -> Result<ScenarioConfig> {
    let n = units.len();
    Ok(ScenarioConfig {
        name: name.into(),
        topology: QnnTopology::uniform(n, 1.0, j)?,
        initial_states: vec![initial; n + 1],
        reservoirs: units
            .iter()
            .enumerate()
            .map(|(k, &s)| ReservoirSpec::new(k, s, j))
            .collect::<Result<_>>()?,
        schedule: Schedule::Collision(CollisionSchedule::markov(0.1 * PI / j, MARKOV_COLLISIONS)?),
        targets,
        tracked: metrics(tracked),
        steady: SteadyParams::default(),
    })
}

fn mixture_of(units: &[PureBlochState]) -> Result<BTreeMap<String, TargetState>> {
    Ok(BTreeMap::from([("mix".to_string(), TargetState::equal_mixture(units)?)]))
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let plus = PureBlochState::plus();
    match name {
        "fig1a" => closed(name, [up(), up()]),
        "fig1c" => closed(name, [up(), down()]),
        "fig2b" => markov(
            name,
            0.05,
            &[up()],
            plus,
            BTreeMap::from([("up".to_string(), TargetState::pure(up()))]),
            &[
                "fidelity:up",
                "sigma_x_out",
                "sigma_y_out",
                "sigma_z_out",
                "mutual_info_out_unit",
                "entropy_unit",
                "energy_unit",
            ],
        ),
        "fig2e" => markov(
            name,
            0.06,
            &[up(), down()],
            plus,
            BTreeMap::new(),
            &["p_up_out", "sigma_z_out", "coherence_out"],
        ),
        "fig2fg" => markov(name, 0.06, &[up(), down()], plus, BTreeMap::new(), &["sigma_z_out", "p_up_out"]),
        "fig3b" | "fig3d" => {
            let units = if name == "fig3b" {
                [up(), up(), down()]
            } else {
                [down(), down(), up()]
            };
            markov(
                name,
                0.05,
                &units,
                plus,
                mixture_of(&units)?,
                &["p_up_out", "sigma_z_out", "coherence_out", "fidelity:mix"],
            )
        }
        "fig3e" => {
            let units = [up(), PureBlochState::new(PI / 6.0, 0.0)?, down()];
            markov(
                name,
                0.05,
                &units,
                up(),
                mixture_of(&units)?,
                &["fidelity:mix", "coherence_out", "p_up_out"],
            )
        }
        "fig4" => {
            let (j, j_uu) = (0.5, 0.25);
            Ok(ScenarioConfig {
                name: name.into(),
                topology: QnnTopology::uniform(1, 1.0, j)?,
                initial_states: vec![plus; 2],
                reservoirs: vec![ReservoirSpec::new(0, up(), j)?],
                schedule: Schedule::Collision(CollisionSchedule::non_markov(0.05 / j, 600, j_uu, (PI / 4.0) / j_uu)?),
                targets: BTreeMap::from([("unit".to_string(), TargetState::pure(up()))]),
                tracked: metrics(&["mutual_info_out_unit", "fidelity:unit", "sigma_z_out", "entropy_unit"]),
                steady: SteadyParams::default(),
            })
        }
        _ => Err(Error::InvalidParameter(format!(
            "unknown preset {name:?}; valid presets: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// Parameter sweeps that accompany a preset, keyed by panel label.
pub fn preset_sweeps(name: &str) -> Result<Vec<(String, SweepSpec)>> {
    preset(name)?;
    let eps = || vec![0.0, 0.015, 0.03, 0.045, 0.06];
    Ok(match name {
        "fig2e" => vec![(
            "e".into(),
            SweepSpec::new(
                SweepParam::JSuRatio(1),
                vec![0.0, 0.25, 0.5, 0.75, 1.0],
                vec!["p_up_out".into()],
            )?,
        )],
        "fig2fg" => vec![
            (
                "f".into(),
                SweepSpec::new(SweepParam::CouplingOffset(1), eps(), vec!["sigma_z_out".into()])?,
            ),
            (
                "g".into(),
                SweepSpec::new(SweepParam::CouplingOffset(0), eps(), vec!["sigma_z_out".into()])?,
            ),
        ],
        _ => Vec::new(),
    })
}
