//! Star-shaped qubit perceptron: N input nodes flip-flop coupled to one output
//! node, plus the environment units that collide with the inputs.
//!
//! Register layout: inputs occupy sites `0..n_inputs`, the output node sits at
//! `n_inputs`, and environment units are appended after it in reservoir order.

use crate::error::{Error, Result};
use crate::linalg::{embed, embed_pair, pauli, ComplexMatrix};
use crate::state::{bloch_pure, DensityMatrix, PureBlochState};

#[derive(Clone, Debug, PartialEq)]
pub struct QnnTopology {
    n_inputs: usize,
    omega: f64,
    couplings: Vec<f64>,
}

impl QnnTopology {
    pub fn new(omega: f64, couplings: Vec<f64>) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::InvalidParameter("topology needs at least one input node".into()));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        for (i, &j) in couplings.iter().enumerate() {
            if !j.is_finite() || j.abs() > omega {
                return Err(Error::InvalidParameter(format!(
                    "coupling J_{i} = {j} must be finite with |J| <= omega"
                )));
            }
        }
        Ok(QnnTopology {
            n_inputs: couplings.len(),
            omega,
            couplings,
        })
    }

    /// All inputs share the same coupling to the output.
    pub fn uniform(n_inputs: usize, omega: f64, j: f64) -> Result<Self> {
        Self::new(omega, vec![j; n_inputs])
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn output_site(&self) -> usize {
        self.n_inputs
    }

    pub fn n_system_sites(&self) -> usize {
        self.n_inputs + 1
    }
}

/// One information reservoir attached to an input node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReservoirSpec {
    pub node: usize,
    pub unit_state: PureBlochState,
    pub j_su: f64,
}

impl ReservoirSpec {
    pub fn new(node: usize, unit_state: PureBlochState, j_su: f64) -> Result<Self> {
        if !j_su.is_finite() {
            return Err(Error::InvalidParameter(format!("j_su must be finite, got {j_su}")));
        }
        Ok(ReservoirSpec { node, unit_state, j_su })
    }
}

pub fn check_reservoirs(topology: &QnnTopology, specs: &[ReservoirSpec]) -> Result<()> {
    let mut used = vec![false; topology.n_inputs];
    for (k, spec) in specs.iter().enumerate() {
        if spec.node >= topology.n_inputs {
            return Err(Error::InvalidParameter(format!(
                "reservoir {k} attached to node {} but there are {} inputs",
                spec.node, topology.n_inputs
            )));
        }
        if used[spec.node] {
            return Err(Error::InvalidParameter(format!(
                "node {} has more than one reservoir",
                spec.node
            )));
        }
        if !spec.j_su.is_finite() {
            return Err(Error::InvalidParameter(format!("reservoir {k} has non-finite j_su")));
        }
        used[spec.node] = true;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    Mixture,
    Superposition,
}

/// Reference state built from reservoir-like pure states.
///
/// For a mixture the weights are probabilities; for a superposition they are
/// real amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetState {
    kind: TargetKind,
    components: Vec<(PureBlochState, f64)>,
}

impl TargetState {
    pub fn new(kind: TargetKind, components: Vec<(PureBlochState, f64)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("target state needs at least one component".into()));
        }
        match kind {
            TargetKind::Mixture => {
                if components.iter().any(|(_, p)| !(*p >= 0.0)) {
                    return Err(Error::InvalidParameter("mixture weights must be non-negative".into()));
                }
                let total: f64 = components.iter().map(|(_, p)| p).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!("mixture weights sum to {total}, not 1")));
                }
            }
            TargetKind::Superposition => {
                let total: f64 = components.iter().map(|(_, a)| a * a).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "superposition amplitudes have squared norm {total}, not 1"
                    )));
                }
            }
        }
        Ok(TargetState { kind, components })
    }

    /// Equal-weight mixture of the given states.
    pub fn equal_mixture(states: &[PureBlochState]) -> Result<Self> {
        let p = 1.0 / states.len() as f64;
        Self::new(TargetKind::Mixture, states.iter().map(|&s| (s, p)).collect())
    }

    pub fn pure(state: PureBlochState) -> Self {
        TargetState {
            kind: TargetKind::Mixture,
            components: vec![(state, 1.0)],
        }
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn components(&self) -> &[(PureBlochState, f64)] {
        &self.components
    }
}

fn flip_flop(site_a: usize, site_b: usize, n_sites: usize, j: f64) -> Result<ComplexMatrix> {
    let raise_lower = embed_pair(&pauli::plus(), site_a, &pauli::minus(), site_b, n_sites)?;
    Ok((&raise_lower + &raise_lower.adjoint()).scale_real(j))
}

fn free_term(site: usize, n_sites: usize, omega: f64) -> Result<ComplexMatrix> {
    Ok(embed(&pauli::z(), site, n_sites)?.scale_real(omega / 2.0))
}

/// System Hamiltonian embedded in a register of `n_sites >= n_inputs + 1`.
fn system_terms(t: &QnnTopology, n_sites: usize, free_terms: bool) -> Result<ComplexMatrix> {
    let out = t.output_site();
    let mut h = ComplexMatrix::zeros(1 << n_sites);
    if free_terms {
        for site in 0..t.n_system_sites() {
            h = h + free_term(site, n_sites, t.omega)?;
        }
    }
    for (i, &j) in t.couplings.iter().enumerate() {
        h = h + flip_flop(i, out, n_sites, j)?;
    }
    Ok(h)
}

/// (ω/2) Σ σ_z over every node plus Σ J_i (σ_i⁺ σ_out⁻ + h.c.).
pub fn build_system_hamiltonian(t: &QnnTopology) -> ComplexMatrix {
    system_terms(t, t.n_system_sites(), true).expect("topology sites are in range")
}

/// Hamiltonian active while every reservoir's unit collides with its node.
pub fn build_collision_hamiltonian(t: &QnnTopology, specs: &[ReservoirSpec]) -> Result<ComplexMatrix> {
    build_collision_hamiltonian_with(t, specs, true)
}

/// As [`build_collision_hamiltonian`]; `free_terms = false` drops every (ω/2)σ_z term.
pub fn build_collision_hamiltonian_with(
    t: &QnnTopology,
    specs: &[ReservoirSpec],
    free_terms: bool,
) -> Result<ComplexMatrix> {
    check_reservoirs(t, specs)?;
    let n_sites = t.n_system_sites() + specs.len();
    let mut h = system_terms(t, n_sites, free_terms)?;
    for (k, spec) in specs.iter().enumerate() {
        let unit = t.n_system_sites() + k;
        if free_terms {
            h = h + free_term(unit, n_sites, t.omega)?;
        }
        h = h + flip_flop(spec.node, unit, n_sites, spec.j_su)?;
    }
    Ok(h)
}

/// Two-unit Hamiltonian: free terms on both plus J_uu (σ⁺⊗σ⁻ + h.c.).
pub fn build_unit_unit_hamiltonian(omega: f64, j_uu: f64) -> ComplexMatrix {
    build_unit_unit_hamiltonian_with(omega, j_uu, true)
}

pub fn build_unit_unit_hamiltonian_with(omega: f64, j_uu: f64, free_terms: bool) -> ComplexMatrix {
    let mut h = flip_flop(0, 1, 2, j_uu).expect("two-site register");
    if free_terms {
        for site in 0..2 {
            h = h + free_term(site, 2, omega).expect("two-site register");
        }
    }
    h
}

/// diag(N↑/N, N↓/N): the output state expected when only pole-state reservoirs act.
pub fn predict_pointer_steady_state(n_up: usize, n_down: usize) -> Result<DensityMatrix> {
    let n = n_up + n_down;
    if n == 0 {
        return Err(Error::InvalidParameter("at least one reservoir is required".into()));
    }
    DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[
        n_up as f64 / n as f64,
        n_down as f64 / n as f64,
    ]))
}

pub fn target_density(t: &TargetState) -> Result<DensityMatrix> {
    match t.kind {
        TargetKind::Mixture => {
            let m = t
                .components
                .iter()
                .map(|(s, p)| bloch_pure(*s).into_matrix().scale_real(*p))
                .reduce(|a, b| a + b)
                .expect("nonempty target");
            DensityMatrix::new(m)
        }
        TargetKind::Superposition => {
            let mut psi = [num_complex::Complex64::new(0.0, 0.0); 2];
            for (s, amp) in &t.components {
                let a = s.amplitudes();
                psi[0] += a[0] * amp;
                psi[1] += a[1] * amp;
            }
            let norm = (psi[0].norm_sqr() + psi[1].norm_sqr()).sqrt();
            if norm < 1e-12 {
                return Err(Error::InvalidParameter("superposition target has vanishing norm".into()));
            }
            DensityMatrix::from_pure(&[psi[0] / norm, psi[1] / norm])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, expm_unitary, kron};
    use crate::state::{l1_coherence, PureBlochState};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn total_sz(n_sites: usize) -> ComplexMatrix {
        (0..n_sites)
            .map(|s| embed(&pauli::z(), s, n_sites).unwrap())
            .reduce(|a, b| a + b)
            .unwrap()
    }

    #[test]
    fn topology_validation() {
        assert!(QnnTopology::new(1.0, vec![]).is_err());
        assert!(QnnTopology::new(0.0, vec![0.1]).is_err());
        assert!(QnnTopology::new(1.0, vec![1.5]).is_err());
        assert!(QnnTopology::new(1.0, vec![f64::NAN]).is_err());
        let t = QnnTopology::uniform(3, 1.0, 0.05).unwrap();
        assert_eq!(t.output_site(), 3);
        assert_eq!(t.n_system_sites(), 4);
    }

    #[test]
    fn single_input_hamiltonian_matches_closed_form() {
        let t = QnnTopology::uniform(1, 1.0, 0.05).unwrap();
        let h = build_system_hamiltonian(&t);
        let free = (kron(&pauli::z(), &pauli::identity()) + kron(&pauli::identity(), &pauli::z())).scale_real(0.5);
        let hop = (kron(&pauli::plus(), &pauli::minus()) + kron(&pauli::minus(), &pauli::plus())).scale_real(0.05);
        assert!(h.max_abs_diff(&(free + hop)) < 1e-15);
        assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn system_hamiltonian_conserves_excitations() {
        let t = QnnTopology::new(1.0, vec![0.05, -0.03, 0.07]).unwrap();
        let h = build_system_hamiltonian(&t);
        assert!(h.commutator(&total_sz(4)).max_abs() < 1e-12);
        assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn decoupled_system_is_diagonal() {
        let t = QnnTopology::uniform(2, 1.0, 0.0).unwrap();
        assert!(build_system_hamiltonian(&t).is_diagonal());
    }

    #[test]
    fn collision_hamiltonian_examples() {
        let t = QnnTopology::uniform(2, 1.0, 0.05).unwrap();
        let h = build_collision_hamiltonian(&t, &[]).unwrap();
        assert!(h.max_abs_diff(&build_system_hamiltonian(&t)) < 1e-15);

        let t1 = QnnTopology::uniform(1, 1.0, 0.05).unwrap();
        let spec = ReservoirSpec::new(0, PureBlochState::up(), 0.05).unwrap();
        let h = build_collision_hamiltonian(&t1, &[spec]).unwrap();
        assert_eq!(h.dim(), 8);
        assert!(h.is_hermitian(1e-12));
        assert!(h.commutator(&total_sz(3)).max_abs() < 1e-12);

        // |↑↑↑⟩ = basis index 0 is an eigenvector: column 0 has only a diagonal entry.
        for i in 1..8 {
            assert_eq!(h[(i, 0)], c(0.0, 0.0));
        }
    }

    #[test]
    fn collision_hamiltonian_rejects_bad_specs() {
        let t = QnnTopology::uniform(2, 1.0, 0.05).unwrap();
        let s0 = ReservoirSpec::new(0, PureBlochState::up(), 0.05).unwrap();
        assert!(build_collision_hamiltonian(&t, &[s0, s0]).is_err());
        let far = ReservoirSpec::new(2, PureBlochState::up(), 0.05).unwrap();
        assert!(build_collision_hamiltonian(&t, &[far]).is_err());
    }

    #[test]
    fn collision_hamiltonian_without_free_terms() {
        let t = QnnTopology::uniform(1, 1.0, 0.05).unwrap();
        let spec = ReservoirSpec::new(0, PureBlochState::up(), 0.05).unwrap();
        let with = build_collision_hamiltonian_with(&t, &[spec], true).unwrap();
        let without = build_collision_hamiltonian_with(&t, &[spec], false).unwrap();
        let diff = &with - &without;
        assert!(diff.max_abs_diff(&total_sz(3).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn unit_unit_hamiltonian() {
        assert!(build_unit_unit_hamiltonian(1.0, 0.0)
            .max_abs_diff(&total_sz(2).scale_real(0.5))
            < 1e-15);
        let h = build_unit_unit_hamiltonian(1.0, 0.25);
        assert!(h.is_hermitian(1e-12));
        assert!(h.commutator(&total_sz(2)).max_abs() < 1e-12);
    }

    #[test]
    fn unit_unit_partial_swap_moves_half_the_population() {
        let j_uu = 0.25;
        let interaction = build_unit_unit_hamiltonian_with(1.0, j_uu, false);
        let u = expm_unitary(&interaction, (PI / 4.0) / j_uu).unwrap();
        // |↑↓⟩ is basis index 1, |↓↑⟩ index 2.
        assert!((u[(2, 1)].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((u[(1, 1)].norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pointer_predictions() {
        let a = predict_pointer_steady_state(2, 1).unwrap();
        assert!((a.population(0) - 2.0 / 3.0).abs() < 1e-15);
        let b = predict_pointer_steady_state(1, 2).unwrap();
        assert!((b.population(0) - 1.0 / 3.0).abs() < 1e-15);
        let c1 = predict_pointer_steady_state(1, 0).unwrap();
        assert_eq!(c1.population(0), 1.0);
        assert!(predict_pointer_steady_state(0, 0).is_err());
        for (u, d) in [(1, 0), (0, 1), (2, 1), (1, 2), (3, 0)] {
            assert_eq!(l1_coherence(&predict_pointer_steady_state(u, d).unwrap()), 0.0);
        }
    }

    #[test]
    fn target_examples() {
        let half = TargetState::equal_mixture(&[PureBlochState::up(), PureBlochState::down()]).unwrap();
        let rho = target_density(&half).unwrap();
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);

        let s = 1.0 / 2f64.sqrt();
        let sup = TargetState::new(
            TargetKind::Superposition,
            vec![(PureBlochState::up(), s), (PureBlochState::down(), s)],
        )
        .unwrap();
        let plus = target_density(&sup).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((plus.matrix()[(i, j)] - c(0.5, 0.0)).norm() < 1e-12);
            }
        }

        let tilted = PureBlochState::new(PI / 6.0, 0.0).unwrap();
        let mix = TargetState::equal_mixture(&[PureBlochState::up(), tilted, PureBlochState::down()]).unwrap();
        let rho = target_density(&mix).unwrap();
        // Weighted-sum oracle: only the tilted state contributes off-diagonal weight.
        let oracle_off = (1.0 / 3.0) * (PI / 12.0).cos() * (PI / 12.0).sin();
        assert!((rho.matrix()[(0, 1)].re - oracle_off).abs() < 1e-15);
        assert!((oracle_off - 0.083_333_333_333_333_33).abs() < 1e-15);
        let p_up = (1.0 + (PI / 12.0).cos().powi(2)) / 3.0;
        assert!((rho.population(0) - p_up).abs() < 1e-15);
    }

    #[test]
    fn target_validation() {
        assert!(TargetState::new(TargetKind::Mixture, vec![]).is_err());
        assert!(TargetState::new(TargetKind::Mixture, vec![(PureBlochState::up(), 0.7)]).is_err());
        assert!(TargetState::new(
            TargetKind::Mixture,
            vec![(PureBlochState::up(), 1.5), (PureBlochState::down(), -0.5)]
        )
        .is_err());
        let s = 1.0 / 2f64.sqrt();
        let degenerate = TargetState::new(
            TargetKind::Superposition,
            vec![(PureBlochState::up(), s), (PureBlochState::up(), -s)],
        )
        .unwrap();
        assert!(target_density(&degenerate).is_err());
    }

    proptest! {
        #[test]
        fn hamiltonian_linear_in_couplings(j1 in -0.5f64..0.5, j2 in -0.5f64..0.5, k in 0.0f64..2.0) {
            let base = build_system_hamiltonian(&QnnTopology::new(1.0, vec![0.0, 0.0]).unwrap());
            let h1 = build_system_hamiltonian(&QnnTopology::new(1.0, vec![j1, j2]).unwrap());
            let hk = build_system_hamiltonian(&QnnTopology::new(1.0, vec![k * j1, k * j2]).unwrap());
            let lhs = &hk - &base;
            let rhs = (&h1 - &base).scale_real(k);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn collision_hamiltonians_conserve_excitations(j in -1.0f64..1.0, js in -1.0f64..1.0, th in 0.0..PI) {
            let t = QnnTopology::new(1.0, vec![j, -j / 2.0]).unwrap();
            let specs = [
                ReservoirSpec::new(0, PureBlochState::new(th, 0.0).unwrap(), js).unwrap(),
                ReservoirSpec::new(1, PureBlochState::down(), 0.3).unwrap(),
            ];
            let h = build_collision_hamiltonian(&t, &specs).unwrap();
            prop_assert!(h.is_hermitian(1e-12));
            prop_assert!(h.commutator(&total_sz(5)).max_abs() < 1e-12);
        }
    }
}
