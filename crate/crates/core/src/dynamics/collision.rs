//! Markovian collision model: every step couples each input node to a fresh
//! unit of its reservoir, evolves jointly for τ, then discards the units.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{expm_unitary, kron, sandwich, wrap, ComplexMatrix};
use crate::network::{
    build_collision_hamiltonian, build_collision_hamiltonian_with, check_reservoirs, QnnTopology, ReservoirSpec,
};
use crate::state::{bloch_pure, product_state, DensityMatrix};

use super::metrics::{Tracker, UnitView};
use super::trace::TraceRecord;
use super::{finish, CollisionMode, CollisionSchedule, RunOutcome, SteadyParams};

/// One collision as a linear map on the system, stored as its Stinespring
/// isometry `V = U (I ⊗ |units⟩)` and the Kraus operators sliced from it.
#[derive(Clone, Debug)]
pub struct CollisionChannel {
    n_sys_sites: usize,
    n_units: usize,
    isometry: DMatrix<Complex64>,
    kraus: Vec<DMatrix<Complex64>>,
}

impl CollisionChannel {
    pub fn new(t: &QnnTopology, specs: &[ReservoirSpec], tau: f64, free_terms: bool) -> Result<Self> {
        let h = build_collision_hamiltonian_with(t, specs, free_terms)?;
        let u = expm_unitary(&h, tau)?;
        let n_sys_sites = t.n_system_sites();
        let d_sys = 1usize << n_sys_sites;
        let d_units = 1usize << specs.len();

        let units: Vec<Complex64> = specs.iter().fold(vec![Complex64::new(1.0, 0.0)], |acc, s| {
            let amps = s.unit_state.amplitudes();
            acc.iter().flat_map(|a| amps.iter().map(move |b| a * b)).collect()
        });

        let full = u.as_nalgebra();
        let isometry = DMatrix::from_fn(d_sys * d_units, d_sys, |row, s| {
            (0..d_units).map(|k| full[(row, s * d_units + k)] * units[k]).sum()
        });
        let kraus = (0..d_units)
            .map(|k| DMatrix::from_fn(d_sys, d_sys, |i, s| isometry[(i * d_units + k, s)]))
            .collect();
        Ok(CollisionChannel {
            n_sys_sites,
            n_units: specs.len(),
            isometry,
            kraus,
        })
    }

    pub fn system_dim(&self) -> usize {
        1 << self.n_sys_sites
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    /// Applies the map to an arbitrary operator (not necessarily a state).
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.dim(), self.system_dim(), "operator does not act on the system");
        let d = self.system_dim();
        let mut out = DMatrix::zeros(d, d);
        for k in &self.kraus {
            out += k * x.as_nalgebra() * k.adjoint();
        }
        wrap(out)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_system(rho, self.n_sys_sites)?;
        let next = DensityMatrix::trusted(self.apply_matrix(rho.matrix()));
        next.validate()?;
        Ok(next)
    }

    /// Joint system-plus-units state right after the collision.
    pub fn dilate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_system(rho, self.n_sys_sites)?;
        Ok(DensityMatrix::trusted(sandwich(&self.isometry, rho.matrix())))
    }
}

fn check_system(rho: &DensityMatrix, n_sys_sites: usize) -> Result<()> {
    if rho.n_sites() != n_sys_sites {
        return Err(Error::Dimension(format!(
            "system state spans {} sites, network has {}",
            rho.n_sites(),
            n_sys_sites
        )));
    }
    Ok(())
}

fn joint_after_collision(
    rho_sys: &DensityMatrix,
    t: &QnnTopology,
    specs: &[ReservoirSpec],
    tau: f64,
) -> Result<DensityMatrix> {
    check_system(rho_sys, t.n_system_sites())?;
    let u = expm_unitary(&build_collision_hamiltonian(t, specs)?, tau)?;
    let mut factors = vec![rho_sys.clone()];
    factors.extend(specs.iter().map(|s| bloch_pure(s.unit_state)));
    let joint = product_state(&factors)?;
    Ok(DensityMatrix::trusted(sandwich(u.as_nalgebra(), joint.matrix())))
}

/// ρ_s(t+τ) = Tr_u[U (ρ_s ⊗ units) U†], built literally on the full register.
pub fn markov_collision_step(
    rho_sys: &DensityMatrix,
    t: &QnnTopology,
    specs: &[ReservoirSpec],
    tau: f64,
) -> Result<DensityMatrix> {
    let joint = joint_after_collision(rho_sys, t, specs, tau)?;
    let sys: Vec<usize> = (0..t.n_system_sites()).collect();
    let next = joint.reduce(&sys)?;
    next.validate()?;
    Ok(next)
}

/// State of the unit after one collision and the joint (output, unit) state.
pub fn unit_post_state(
    rho_sys: &DensityMatrix,
    t: &QnnTopology,
    spec: &ReservoirSpec,
    tau: f64,
) -> Result<(DensityMatrix, DensityMatrix)> {
    let joint = joint_after_collision(rho_sys, t, std::slice::from_ref(spec), tau)?;
    let unit_site = t.n_system_sites();
    Ok((joint.reduce(&[unit_site])?, joint.reduce(&[t.output_site(), unit_site])?))
}

/// View used before the first collision: a fresh, uncorrelated unit.
pub(crate) fn fresh_unit_view(system: &DensityMatrix, spec: &ReservoirSpec) -> Result<UnitView> {
    let unit = bloch_pure(spec.unit_state);
    let out = system.reduce(&[system.n_sites() - 1])?;
    Ok(UnitView {
        joint_out_unit: DensityMatrix::trusted(kron(out.matrix(), unit.matrix())),
        unit,
    })
}

pub fn run_markov(
    t: &QnnTopology,
    specs: &[ReservoirSpec],
    schedule: &CollisionSchedule,
    rho0: &DensityMatrix,
    tracker: &Tracker,
    steady: SteadyParams,
) -> Result<RunOutcome> {
    schedule.validate()?;
    if schedule.mode != CollisionMode::Markov {
        return Err(Error::InvalidParameter("run_markov needs a markov schedule".into()));
    }
    check_reservoirs(t, specs)?;
    check_system(rho0, t.n_system_sites())?;
    rho0.validate()?;
    tracker.check_network(t.n_inputs(), !specs.is_empty())?;

    let channel = CollisionChannel::new(t, specs, schedule.tau, schedule.free_terms)?;
    let n_sys = t.n_system_sites();
    let sys_sites: Vec<usize> = (0..n_sys).collect();
    let with_unit = tracker.needs_unit();

    let mut trace = TraceRecord::new(tracker.labels())?;
    let initial_view = if with_unit {
        Some(fresh_unit_view(rho0, &specs[0])?)
    } else {
        None
    };
    trace.push(0, 0.0, tracker.evaluate(rho0, initial_view.as_ref())?)?;

    let mut rho = rho0.clone();
    for step in 1..=schedule.n_collisions {
        let view = if with_unit {
            let joint = channel.dilate(&rho)?;
            rho = joint.reduce(&sys_sites)?;
            rho.validate()?;
            Some(UnitView {
                unit: joint.reduce(&[n_sys])?,
                joint_out_unit: joint.reduce(&[t.output_site(), n_sys])?,
            })
        } else {
            rho = channel.apply(&rho)?;
            None
        };
        trace.push(step, step as f64 * schedule.tau, tracker.evaluate(&rho, view.as_ref())?)?;
    }
    finish(trace, steady, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Metric;
    use crate::network::{predict_pointer_steady_state, TargetState, target_density};
    use crate::state::{fidelity, l1_coherence, von_neumann_entropy, PureBlochState};
    use crate::testutil::random_density;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use std::collections::BTreeMap;
    use std::f64::consts::{LN_2, PI};

    const J: f64 = 0.05;

    fn tau() -> f64 {
        0.1 * PI / J
    }

    fn plus_system(n_inputs: usize) -> DensityMatrix {
        product_state(&vec![bloch_pure(PureBlochState::plus()); n_inputs + 1]).unwrap()
    }

    fn spec(node: usize, s: PureBlochState) -> ReservoirSpec {
        ReservoirSpec::new(node, s, J).unwrap()
    }

    #[test]
    fn all_up_is_a_fixed_point() {
        let t = QnnTopology::uniform(2, 1.0, J).unwrap();
        let up = product_state(&vec![bloch_pure(PureBlochState::up()); 3]).unwrap();
        let specs = [spec(0, PureBlochState::up()), spec(1, PureBlochState::up())];
        let next = markov_collision_step(&up, &t, &specs, tau()).unwrap();
        assert!(next.matrix().max_abs_diff(up.matrix()) < 1e-12);
    }

    #[test]
    fn kraus_route_matches_literal_step() {
        let mut rng = StdRng::seed_from_u64(53);
        let t = QnnTopology::new(1.0, vec![0.05, 0.08]).unwrap();
        let specs = [
            spec(0, PureBlochState::new(0.9, 2.0).unwrap()),
            spec(1, PureBlochState::down()),
        ];
        let channel = CollisionChannel::new(&t, &specs, 3.3, true).unwrap();
        for _ in 0..5 {
            let rho = DensityMatrix::new(random_density(&mut rng, 8)).unwrap();
            let literal = markov_collision_step(&rho, &t, &specs, 3.3).unwrap();
            let fast = channel.apply(&rho).unwrap();
            assert!(fast.matrix().max_abs_diff(literal.matrix()) < 1e-12);
            assert!((literal.matrix().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node_reaches_reservoir_state() {
        let t = QnnTopology::uniform(1, 1.0, J).unwrap();
        let specs = [spec(0, PureBlochState::up())];
        let up = bloch_pure(PureBlochState::up());
        let mut rho = plus_system(1);
        let mut last = 0.0;
        let mut reached = None;
        for step in 1..=5000 {
            rho = markov_collision_step(&rho, &t, &specs, tau()).unwrap();
            let f = fidelity(&up, &rho.reduce(&[1]).unwrap()).unwrap();
            assert!(f >= last - 1e-12, "fidelity fell at step {step}");
            last = f;
            if f >= 0.999 {
                reached = Some(step);
                break;
            }
        }
        assert!(reached.is_some());
    }

    #[test]
    fn unit_post_state_bounds_and_fixed_point() {
        let t = QnnTopology::uniform(1, 1.0, J).unwrap();
        let up_spec = spec(0, PureBlochState::up());
        let all_up = product_state(&vec![bloch_pure(PureBlochState::up()); 2]).unwrap();
        let (unit, _) = unit_post_state(&all_up, &t, &ReservoirSpec { j_su: 0.7, ..up_spec }, tau()).unwrap();
        assert!(unit.matrix().max_abs_diff(bloch_pure(PureBlochState::up()).matrix()) < 1e-12);

        let (unit, joint) = unit_post_state(&plus_system(1), &t, &up_spec, tau()).unwrap();
        let s = von_neumann_entropy(&unit).unwrap();
        assert!((0.0..=LN_2).contains(&s));
        assert_eq!(joint.n_sites(), 2);
        joint.validate().unwrap();
    }

    #[test]
    fn unit_energy_saturates_faster_than_entropy_changes() {
        let t = QnnTopology::uniform(1, 1.0, J).unwrap();
        let schedule = CollisionSchedule::markov(tau(), 600).unwrap();
        let tracker = Tracker::new(vec![Metric::EnergyUnit, Metric::EntropyUnit], BTreeMap::new(), 1.0).unwrap();
        let out = run_markov(
            &t,
            &[spec(0, PureBlochState::up())],
            &schedule,
            &plus_system(1),
            &tracker,
            SteadyParams::default(),
        )
        .unwrap();
        let e = out.trace.series("energy_unit").unwrap();
        let s = out.trace.series("entropy_unit").unwrap();
        let n = e.len();
        let tail = &e[n - 50..];
        let (lo, hi) = tail.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        assert!((hi - lo) / hi.abs() < 0.01);
        assert!(s[n - 1] >= 0.0 && s[n - 1] < 0.1);
        // Per-collision increments over the tail: energy changes far less than entropy.
        let de: f64 = (n - 50..n).map(|k| (e[k] - e[k - 1]).abs()).sum();
        let ds: f64 = (n - 50..n).map(|k| (s[k] - s[k - 1]).abs()).sum();
        assert!(de / ds < 0.1, "dE/dS = {}", de / ds);
    }

    fn pointer_run(ups: usize, downs: usize) -> RunOutcome {
        let n = ups + downs;
        let t = QnnTopology::uniform(n, 1.0, J).unwrap();
        let specs: Vec<_> = (0..n)
            .map(|k| spec(k, if k < ups { PureBlochState::up() } else { PureBlochState::down() }))
            .collect();
        let schedule = CollisionSchedule::markov(tau(), 3000).unwrap();
        let tracker = Tracker::new(vec![Metric::PUpOut, Metric::CoherenceOut], BTreeMap::new(), 1.0).unwrap();
        run_markov(&t, &specs, &schedule, &plus_system(n), &tracker, SteadyParams::default()).unwrap()
    }

    #[test]
    fn pointer_steady_states_follow_reservoir_counts() {
        // Mixed 2:1 and 1:2 sets are covered by the acceptance suite.
        for (ups, downs) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (0, 3)] {
            let out = pointer_run(ups, downs);
            assert!(out.steady.converged, "({ups},{downs}) did not settle");
            let predicted = predict_pointer_steady_state(ups, downs).unwrap().population(0);
            let p = out.steady.value("p_up_out").unwrap();
            assert!((p - predicted).abs() < 0.01, "({ups},{downs}): {p} vs {predicted}");
            assert!(out.steady.value("coherence_out").unwrap() < 1e-6);
        }
    }

    #[test]
    fn mutual_information_envelope_decays_after_peak() {
        let t = QnnTopology::uniform(1, 1.0, J).unwrap();
        let schedule = CollisionSchedule::markov(tau(), 1500).unwrap();
        let tracker = Tracker::new(vec![Metric::MutualInfoOutUnit], BTreeMap::new(), 1.0).unwrap();
        let out = run_markov(
            &t,
            &[spec(0, PureBlochState::up())],
            &schedule,
            &plus_system(1),
            &tracker,
            SteadyParams::default(),
        )
        .unwrap();
        let mi = out.trace.series("mutual_info_out_unit").unwrap();
        let peak = mi
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap();
        assert!(mi[peak] > 0.0);
        // The exchange with the output oscillates, so compare block maxima.
        let blocks: Vec<f64> = mi[peak..]
            .chunks(20)
            .map(|c| c.iter().cloned().fold(f64::MIN, f64::max))
            .collect();
        assert!(blocks.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{blocks:?}");
        assert!(mi[mi.len() - 1] < 1e-3 * mi[peak]);
    }

    #[test]
    fn run_markov_rejects_mismatched_inputs() {
        let t = QnnTopology::uniform(1, 1.0, J).unwrap();
        let tracker = Tracker::new(vec![Metric::SigmaZOut], BTreeMap::new(), 1.0).unwrap();
        let nm = CollisionSchedule::non_markov(1.0, 10, 0.1, 1.0).unwrap();
        let specs = [spec(0, PureBlochState::up())];
        assert!(run_markov(&t, &specs, &nm, &plus_system(1), &tracker, SteadyParams::default()).is_err());
        let m = CollisionSchedule::markov(1.0, 10).unwrap();
        assert!(run_markov(&t, &specs, &m, &plus_system(2), &tracker, SteadyParams::default()).is_err());
        let unit_tracker = Tracker::new(vec![Metric::EntropyUnit], BTreeMap::new(), 1.0).unwrap();
        assert!(run_markov(&t, &[], &m, &plus_system(1), &unit_tracker, SteadyParams::default()).is_err());
    }

    #[test]
    fn coherent_target_fidelity_is_tracked() {
        let t = QnnTopology::uniform(1, 1.0, J).unwrap();
        let tilted = PureBlochState::new(PI / 6.0, 0.0).unwrap();
        let mut targets = BTreeMap::new();
        targets.insert("unit".to_string(), target_density(&TargetState::pure(tilted)).unwrap());
        let tracker = Tracker::new(
            vec![Metric::Fidelity("unit".into()), Metric::CoherenceOut],
            targets,
            1.0,
        )
        .unwrap();
        let schedule = CollisionSchedule::markov(tau(), 1500).unwrap();
        let out = run_markov(&t, &[spec(0, tilted)], &schedule, &plus_system(1), &tracker, SteadyParams::default())
            .unwrap();
        let f = out.trace.series("fidelity:unit").unwrap();
        assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(l1_coherence(&bloch_pure(tilted)) > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn step_is_linear_and_valid(seed in any::<u64>(), alpha in 0.0f64..1.0, theta in 0.0..PI, tau in 0.1f64..20.0) {
            let mut rng = StdRng::seed_from_u64(seed);
            let t = QnnTopology::new(1.0, vec![0.05, 0.2]).unwrap();
            let specs = [
                spec(0, PureBlochState::new(theta, 1.0).unwrap()),
                ReservoirSpec::new(1, PureBlochState::down(), 0.3).unwrap(),
            ];
            let r1 = DensityMatrix::new(random_density(&mut rng, 8)).unwrap();
            let r2 = DensityMatrix::new(random_density(&mut rng, 8)).unwrap();
            let mix = DensityMatrix::new(r1.matrix().scale_real(alpha) + r2.matrix().scale_real(1.0 - alpha)).unwrap();
            let lhs = markov_collision_step(&mix, &t, &specs, tau).unwrap();
            let s1 = markov_collision_step(&r1, &t, &specs, tau).unwrap();
            let s2 = markov_collision_step(&r2, &t, &specs, tau).unwrap();
            let rhs = s1.matrix().scale_real(alpha) + s2.matrix().scale_real(1.0 - alpha);
            prop_assert!(lhs.matrix().max_abs_diff(&rhs) < 1e-10);
            prop_assert!((lhs.matrix().trace().re - 1.0).abs() < 1e-10);
            prop_assert!(lhs.matrix().hermiticity_error() < 1e-10);
            prop_assert!(crate::linalg::herm_eigenvalues(lhs.matrix()).unwrap()[0] > -1e-9);
        }
    }
}
