//! Tracked-metric vocabulary and its evaluation on simulated states.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::pauli;
use crate::state::{
    expectation, fidelity, internal_energy, l1_coherence, mutual_information, von_neumann_entropy, DensityMatrix,
    Observable,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    SigmaXOut,
    SigmaYOut,
    SigmaZOut,
    PUpOut,
    CoherenceOut,
    /// F(target, ρ_out).
    Fidelity(String),
    /// F(target, ρ_node) for any node of the network, output included.
    FidelityNode(usize, String),
    /// I(ρ_out : ρ_unit) for the unit that just collided.
    MutualInfoOutUnit,
    EntropyUnit,
    EnergyUnit,
}

impl Metric {
    pub fn parse(s: &str) -> Result<Metric> {
        let s = s.trim();
        let fixed = match s {
            "sigma_x_out" => Some(Metric::SigmaXOut),
            "sigma_y_out" => Some(Metric::SigmaYOut),
            "sigma_z_out" => Some(Metric::SigmaZOut),
            "p_up_out" => Some(Metric::PUpOut),
            "coherence_out" => Some(Metric::CoherenceOut),
            "mutual_info_out_unit" => Some(Metric::MutualInfoOutUnit),
            "entropy_unit" => Some(Metric::EntropyUnit),
            "energy_unit" => Some(Metric::EnergyUnit),
            _ => None,
        };
        if let Some(m) = fixed {
            return Ok(m);
        }
        let unknown = || Error::InvalidParameter(format!("unknown metric {s:?}"));
        let (head, target) = s.split_once(':').ok_or_else(unknown)?;
        if target.is_empty() || !target.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '+') {
            return Err(Error::InvalidParameter(format!("bad target name in metric {s:?}")));
        }
        if head == "fidelity" {
            return Ok(Metric::Fidelity(target.to_string()));
        }
        let node = head
            .strip_prefix("fidelity_node")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(unknown)?;
        Ok(Metric::FidelityNode(node, target.to_string()))
    }

    pub fn needs_unit(&self) -> bool {
        matches!(self, Metric::MutualInfoOutUnit | Metric::EntropyUnit | Metric::EnergyUnit)
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            Metric::Fidelity(t) | Metric::FidelityNode(_, t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::SigmaXOut => f.write_str("sigma_x_out"),
            Metric::SigmaYOut => f.write_str("sigma_y_out"),
            Metric::SigmaZOut => f.write_str("sigma_z_out"),
            Metric::PUpOut => f.write_str("p_up_out"),
            Metric::CoherenceOut => f.write_str("coherence_out"),
            Metric::Fidelity(t) => write!(f, "fidelity:{t}"),
            Metric::FidelityNode(n, t) => write!(f, "fidelity_node{n}:{t}"),
            Metric::MutualInfoOutUnit => f.write_str("mutual_info_out_unit"),
            Metric::EntropyUnit => f.write_str("entropy_unit"),
            Metric::EnergyUnit => f.write_str("energy_unit"),
        }
    }
}

/// Post-collision view of one environment unit.
#[derive(Clone, Debug)]
pub struct UnitView {
    pub unit: DensityMatrix,
    /// Two-site state ordered (output, unit).
    pub joint_out_unit: DensityMatrix,
}

/// Resolved metric list plus the target states they reference.
#[derive(Clone, Debug)]
pub struct Tracker {
    metrics: Vec<Metric>,
    targets: BTreeMap<String, DensityMatrix>,
    omega: f64,
}

impl Tracker {
    pub fn new(metrics: Vec<Metric>, targets: BTreeMap<String, DensityMatrix>, omega: f64) -> Result<Self> {
        if metrics.is_empty() {
            return Err(Error::InvalidParameter("at least one metric must be tracked".into()));
        }
        for m in &metrics {
            if let Some(t) = m.target() {
                let rho = targets
                    .get(t)
                    .ok_or_else(|| Error::InvalidParameter(format!("metric {m} refers to unknown target {t:?}")))?;
                if rho.n_sites() != 1 {
                    return Err(Error::InvalidParameter(format!("target {t:?} is not a single-qubit state")));
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = metrics.iter().find(|m| !seen.insert(*m)) {
            return Err(Error::InvalidParameter(format!("metric {dup} tracked twice")));
        }
        Ok(Tracker {
            metrics,
            targets,
            omega,
        })
    }

    pub fn metrics(&self) -> &[Metric] {
        &self.metrics
    }

    pub fn labels(&self) -> Vec<String> {
        self.metrics.iter().map(|m| m.to_string()).collect()
    }

    pub fn needs_unit(&self) -> bool {
        self.metrics.iter().any(Metric::needs_unit)
    }

    /// Rejects metrics that cannot be evaluated on a network of `n_inputs` inputs.
    pub fn check_network(&self, n_inputs: usize, has_units: bool) -> Result<()> {
        for m in &self.metrics {
            if let Metric::FidelityNode(n, _) = m {
                if *n > n_inputs {
                    return Err(Error::InvalidParameter(format!(
                        "metric {m}: node {n} does not exist (output is node {n_inputs})"
                    )));
                }
            }
            if m.needs_unit() && !has_units {
                return Err(Error::InvalidParameter(format!("metric {m} needs a reservoir unit")));
            }
        }
        Ok(())
    }

    /// Evaluates every metric; `system` spans inputs followed by the output node.
    pub fn evaluate(&self, system: &DensityMatrix, unit: Option<&UnitView>) -> Result<Vec<f64>> {
        let out_site = system.n_sites() - 1;
        let out = system.reduce(&[out_site])?;
        let unit_view = || unit.ok_or_else(|| Error::InvalidParameter("unit metrics need a collision".into()));
        self.metrics
            .iter()
            .map(|m| match m {
                Metric::SigmaXOut => expectation(&out, &Observable::sigma_x()),
                Metric::SigmaYOut => expectation(&out, &Observable::sigma_y()),
                Metric::SigmaZOut => expectation(&out, &Observable::sigma_z()),
                Metric::PUpOut => Ok(out.population(0)),
                Metric::CoherenceOut => Ok(l1_coherence(&out)),
                Metric::Fidelity(t) => fidelity(&self.targets[t], &out),
                Metric::FidelityNode(n, t) => fidelity(&self.targets[t], &system.reduce(&[*n])?),
                Metric::MutualInfoOutUnit => mutual_information(&unit_view()?.joint_out_unit, &[0], &[1]),
                Metric::EntropyUnit => von_neumann_entropy(&unit_view()?.unit),
                Metric::EnergyUnit => internal_energy(&unit_view()?.unit, &pauli::z().scale_real(self.omega / 2.0)),
            })
            .collect()
    }
}
