//! The two operational worlds Alice and Bob might inhabit.
//!
//! * **ER**: their boundary qubits are directly identified; the pair they
//!   receive is an exact singlet and no environment qubits exist.
//! * **EPR**: the singlet is carried by channel qubits `Q` inside an
//!   environment `E = Q ∪ Q̄`, evolved for a fixed time under
//!   `H_E = H_Q ⊗ I + I ⊗ H_Q̄ + λ H_QQ̄`, and the boundary pair is what is
//!   left after tracing out `E`.
//!
//! Channel qubit `Q0` is Alice's end of the pair and `Q1` is Bob's. The
//! coupling is `H_QQ̄ = Σ_{i ∈ Q, i ≠ 0} Σ_{j ∈ Q̄} Z_i Z_j`: Alice's end sits at
//! her boundary and does not interact with `Q̄`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    evolve, local_operator, partial_trace, pauli, purity, tensor_product, ComplexMatrix,
    DensityMatrix, HermitianOperator, PureState, SubsystemLayout, C64, MAX_DIMENSION,
};
use crate::protocol::{ALICE_QUBIT, BOB_QUBIT};
use crate::rng::domain_rng;

/// Default evolution time of the environment.
pub const DEFAULT_EVOLUTION_TIME: f64 = 1.0;

const HAMILTONIAN_DOMAIN: u64 = 0x48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WorldMode {
    #[serde(rename = "ER")]
    Er,
    #[serde(rename = "EPR")]
    Epr,
}

impl std::fmt::Display for WorldMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WorldMode::Er => "ER",
            WorldMode::Epr => "EPR",
        })
    }
}

pub fn channel_label(i: usize) -> String {
    format!("Q{i}")
}

pub fn rest_label(j: usize) -> String {
    format!("Qbar{j}")
}

/// `H_E` split into channel, rest-of-environment and coupling parts, all
/// acting on the environment layout `Q0 … Q{n-1} Qbar0 … Qbar{m-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianDecomposition {
    pub h_q: HermitianOperator,
    pub h_qbar: HermitianOperator,
    pub h_coupling: HermitianOperator,
    pub lambda: f64,
}

impl HamiltonianDecomposition {
    pub fn layout(&self) -> &SubsystemLayout {
        self.h_q.layout()
    }

    /// `H_Q + H_Q̄ + λ H_QQ̄`; the coupling contributes exactly nothing at λ = 0.
    pub fn total(&self) -> HermitianOperator {
        let base = self.h_q.add(&self.h_qbar).expect("parts share a layout");
        if self.lambda == 0.0 {
            return base;
        }
        base.add(&self.h_coupling.scale(self.lambda))
            .expect("parts share a layout")
    }

    /// The coupling term as it enters `H_E`.
    pub fn scaled_coupling(&self) -> HermitianOperator {
        if self.lambda == 0.0 {
            HermitianOperator::zero(self.layout().clone())
        } else {
            self.h_coupling.scale(self.lambda)
        }
    }
}

/// Parameters of an EPR world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EprParams {
    pub q_dim: usize,
    pub qbar_dim: usize,
    pub lambda: f64,
    /// Seeds the random single-qubit terms of `H_Q̄`.
    pub seed: u64,
    pub evolution_time: f64,
}

impl Default for EprParams {
    fn default() -> Self {
        Self {
            q_dim: 2,
            qbar_dim: 1,
            lambda: 0.0,
            seed: 0,
            evolution_time: DEFAULT_EVOLUTION_TIME,
        }
    }
}

impl EprParams {
    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_q_dim(self, q_dim: usize) -> Self {
        Self { q_dim, ..self }
    }

    pub fn build(&self) -> Result<World> {
        build_epr_world(self.q_dim, self.qbar_dim, self.lambda, self.seed)?
            .with_evolution_time(self.evolution_time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    mode: WorldMode,
    q_dim: usize,
    qbar_dim: usize,
    decomposition: Option<HamiltonianDecomposition>,
    evolution_time: f64,
    seed: u64,
    locations: (String, String),
}

impl World {
    pub fn mode(&self) -> WorldMode {
        self.mode
    }

    pub fn q_dim(&self) -> usize {
        self.q_dim
    }

    pub fn qbar_dim(&self) -> usize {
        self.qbar_dim
    }

    pub fn decomposition(&self) -> Option<&HamiltonianDecomposition> {
        self.decomposition.as_ref()
    }

    pub fn evolution_time(&self) -> f64 {
        self.evolution_time
    }

    pub fn lambda(&self) -> f64 {
        self.decomposition.as_ref().map_or(0.0, |d| d.lambda)
    }

    /// Opaque labels for the locations where Alice and Bob measure.
    pub fn locations(&self) -> (&str, &str) {
        (&self.locations.0, &self.locations.1)
    }

    pub fn with_locations(mut self, x_a: impl Into<String>, x_b: impl Into<String>) -> Self {
        self.locations = (x_a.into(), x_b.into());
        self
    }

    pub fn with_evolution_time(mut self, t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::arg(format!(
                "evolution time must be positive, got {t}"
            )));
        }
        self.evolution_time = t;
        Ok(self)
    }

    /// Dimension of the full modelled system: boundary pair plus environment.
    pub fn total_dimension(&self) -> usize {
        1 << (2 + self.q_dim + self.qbar_dim)
    }

    /// Layout of the boundary pair followed by the environment factors.
    pub fn full_layout(&self) -> SubsystemLayout {
        full_layout(self.q_dim, self.qbar_dim).expect("checked at construction")
    }

    fn provenance(&self) -> String {
        match self.mode {
            WorldMode::Er => "ER".to_string(),
            WorldMode::Epr => format!(
                "EPR(q_dim={}, qbar_dim={}, lambda={}, seed={}, t={})",
                self.q_dim,
                self.qbar_dim,
                self.lambda(),
                self.seed,
                self.evolution_time
            ),
        }
    }
}

fn environment_labels(q_dim: usize, qbar_dim: usize) -> Vec<String> {
    (0..q_dim)
        .map(channel_label)
        .chain((0..qbar_dim).map(rest_label))
        .collect()
}

fn full_layout(q_dim: usize, qbar_dim: usize) -> Result<SubsystemLayout> {
    let mut labels = vec![ALICE_QUBIT.to_string(), BOB_QUBIT.to_string()];
    labels.extend(environment_labels(q_dim, qbar_dim));
    SubsystemLayout::qubits(&labels)
}

pub fn build_er_world() -> World {
    World {
        mode: WorldMode::Er,
        q_dim: 0,
        qbar_dim: 0,
        decomposition: None,
        evolution_time: DEFAULT_EVOLUTION_TIME,
        seed: 0,
        locations: ("x_A".into(), "x_B".into()),
    }
}

/// Random single-qubit Hermitian term with real parameters in `[-1, 1]`.
fn random_qubit_hamiltonian<R: Rng>(rng: &mut R) -> ComplexMatrix {
    let mut u = || rng.random_range(-1.0..=1.0);
    let (a, b, c, d) = (u(), u(), u(), u());
    ComplexMatrix::from_row_major(
        2,
        2,
        vec![
            C64::new(a, 0.0),
            C64::new(b, -c),
            C64::new(b, c),
            C64::new(d, 0.0),
        ],
    )
    .expect("finite entries")
}

pub fn build_epr_world(q_dim: usize, qbar_dim: usize, lambda: f64, seed: u64) -> Result<World> {
    if q_dim < 2 {
        return Err(Error::arg(format!(
            "q_dim must be at least 2 to carry the pair, got {q_dim}"
        )));
    }
    if qbar_dim < 1 {
        return Err(Error::arg("qbar_dim must be at least 1"));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::arg(format!(
            "lambda must be finite and non-negative, got {lambda}"
        )));
    }
    let requested = 1u128
        .checked_shl((2 + q_dim + qbar_dim) as u32)
        .unwrap_or(u128::MAX);
    if requested > MAX_DIMENSION as u128 {
        return Err(Error::Capacity {
            requested,
            limit: MAX_DIMENSION,
        });
    }
    full_layout(q_dim, qbar_dim)?;

    let env = SubsystemLayout::qubits(&environment_labels(q_dim, qbar_dim))?;
    let h_q = HermitianOperator::zero(env.clone());

    let mut rng = domain_rng(seed, HAMILTONIAN_DOMAIN);
    let mut h_qbar = HermitianOperator::zero(env.clone());
    for j in 0..qbar_dim {
        let term = local_operator(&random_qubit_hamiltonian(&mut rng), &env, &[rest_label(j)])?;
        h_qbar = h_qbar.add(&term)?;
    }

    let zz = pauli::z().kron(&pauli::z());
    let mut h_coupling = HermitianOperator::zero(env.clone());
    for i in 1..q_dim {
        for j in 0..qbar_dim {
            let term = local_operator(&zz, &env, &[channel_label(i), rest_label(j)])?;
            h_coupling = h_coupling.add(&term)?;
        }
    }

    Ok(World {
        mode: WorldMode::Epr,
        q_dim,
        qbar_dim,
        decomposition: Some(HamiltonianDecomposition {
            h_q,
            h_qbar,
            h_coupling,
            lambda,
        }),
        evolution_time: DEFAULT_EVOLUTION_TIME,
        seed,
        locations: ("x_A".into(), "x_B".into()),
    })
}

/// The two-qubit state a world presents on `(q_A, q_B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPair {
    pub state: DensityMatrix,
    pub provenance: String,
}

pub fn pair_layout() -> SubsystemLayout {
    SubsystemLayout::qubits(&[ALICE_QUBIT, BOB_QUBIT]).expect("two distinct labels")
}

pub fn singlet_pair() -> DensityMatrix {
    DensityMatrix::from_pure(&PureState::singlet(pair_layout()).expect("two-qubit layout"))
}

/// Initial environment state `|Ψ⁻⟩_{Q0 Q1} ⊗ |0…0⟩ ⊗ |+…+⟩`.
pub fn initial_environment(q_dim: usize, qbar_dim: usize) -> Result<PureState> {
    let mut state = PureState::singlet(SubsystemLayout::qubits(&[
        channel_label(0),
        channel_label(1),
    ])?)?;
    for i in 2..q_dim {
        state = tensor_product(
            &state,
            &PureState::basis(SubsystemLayout::qubits(&[channel_label(i)])?, 0)?,
        )?;
    }
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for j in 0..qbar_dim {
        let plus = PureState::new(vec![h, h], SubsystemLayout::qubits(&[rest_label(j)])?)?;
        state = tensor_product(&state, &plus)?;
    }
    Ok(state)
}

pub fn deliver_pair(world: &World) -> Result<BoundaryPair> {
    let state = match &world.decomposition {
        None => singlet_pair(),
        Some(decomp) => {
            let env0 = DensityMatrix::from_pure(&initial_environment(world.q_dim, world.qbar_dim)?);
            let env_t = evolve(&env0, &decomp.total(), world.evolution_time)?;
            partial_trace(&env_t, &[channel_label(0), channel_label(1)])?
                .relabel(&[ALICE_QUBIT, BOB_QUBIT])?
        }
    };
    Ok(BoundaryPair {
        state,
        provenance: world.provenance(),
    })
}

/// Pair purity for each coupling strength on an ascending grid, with every
/// other parameter taken from `family`.
///
/// For the dephasing coupling used here the purity falls monotonically while
/// `λ·t ≤ π/4`; beyond that the environment can partially refocus.
pub fn channel_purity_profile(family: &EprParams, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if grid.is_empty() {
        return Err(Error::arg("lambda grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("lambda grid must be strictly ascending"));
    }
    grid.iter()
        .map(|&lambda| {
            let pair = deliver_pair(&family.with_lambda(lambda).build()?)?;
            Ok((lambda, purity(&pair.state)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_distance;

    #[test]
    fn er_world_delivers_singlet() {
        let w = build_er_world();
        assert_eq!(w.mode(), WorldMode::Er);
        assert_eq!(w.q_dim(), 0);
        let pair = deliver_pair(&w).unwrap();
        assert!((purity(&pair.state) - 1.0).abs() < 1e-12);
        assert_eq!(trace_distance(&pair.state, &singlet_pair()).unwrap(), 0.0);
        assert_eq!(pair.provenance, "ER");
    }

    #[test]
    fn zero_lambda_has_zero_coupling() {
        let w = build_epr_world(2, 1, 0.0, 5).unwrap();
        let d = w.decomposition().unwrap();
        let zero = ComplexMatrix::zeros(8, 8);
        assert_eq!(d.scaled_coupling().matrix().max_abs_diff(&zero), 0.0);
        assert_eq!(d.h_q.matrix().max_abs_diff(&zero), 0.0);
        assert!(d.h_qbar.matrix().max_abs_diff(&zero) > 0.0);
    }

    #[test]
    fn total_dimension_counts_boundary_pair() {
        assert_eq!(build_epr_world(2, 2, 0.5, 1).unwrap().total_dimension(), 64);
        assert_eq!(build_er_world().total_dimension(), 4);
    }

    #[test]
    fn assembled_hamiltonian_is_hermitian() {
        for seed in 0..10 {
            let w = build_epr_world(3, 2, 0.7, seed).unwrap();
            let h = w.decomposition().unwrap().total();
            let m = h.matrix();
            // oracle: entry-wise comparison with the explicit conjugate transpose
            let adj = m.adjoint();
            assert!(m.max_abs_diff(&adj) <= 1e-10);
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            build_epr_world(1, 1, 0.0, 0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            build_epr_world(2, 0, 0.0, 0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            build_epr_world(2, 1, -0.1, 0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            build_epr_world(2, 1, f64::NAN, 0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            build_epr_world(8, 8, 0.1, 0),
            Err(Error::Capacity { .. })
        ));
        assert!(build_er_world().with_evolution_time(0.0).is_err());
    }

    #[test]
    fn coupling_skips_alice_end() {
        let w = build_epr_world(3, 1, 1.0, 0).unwrap();
        let env = w.decomposition().unwrap().layout().clone();
        let zz = pauli::z().kron(&pauli::z());
        let expected = &local_operator(&zz, &env, &["Q1", "Qbar0"])
            .unwrap()
            .matrix()
            .clone()
            + local_operator(&zz, &env, &["Q2", "Qbar0"])
                .unwrap()
                .matrix();
        assert_eq!(
            w.decomposition()
                .unwrap()
                .h_coupling
                .matrix()
                .max_abs_diff(&expected),
            0.0
        );
    }

    #[test]
    fn zero_coupling_pair_is_singlet_for_any_q_dim() {
        for q in 2..=4 {
            let pair = deliver_pair(&build_epr_world(q, 1, 0.0, 9).unwrap()).unwrap();
            assert!(
                trace_distance(&pair.state, &singlet_pair()).unwrap() <= 1e-10,
                "q_dim={q}"
            );
        }
    }

    #[test]
    fn purity_profile_examples() {
        let fam = EprParams::default();
        let single = channel_purity_profile(&fam, &[0.0]).unwrap();
        assert_eq!(single.len(), 1);
        assert!((single[0].1 - 1.0).abs() < 1e-10);
        assert!(channel_purity_profile(&fam, &[]).is_err());
        assert!(channel_purity_profile(&fam, &[0.4, 0.2]).is_err());
    }

    #[test]
    fn relabelled_locations_do_not_change_numbers() {
        let w = build_epr_world(2, 2, 0.6, 4).unwrap();
        let moved = w.clone().with_locations("here", "there");
        assert_eq!(moved.locations(), ("here", "there"));
        let a = deliver_pair(&w).unwrap();
        let b = deliver_pair(&moved).unwrap();
        assert_eq!(a.state, b.state);
    }
}
