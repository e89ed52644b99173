//! Quantum instruments: finite families of completely positive branch maps
//! whose sum is trace preserving.
//!
//! Branch maps are stored in Kraus form. A branch may additionally carry
//! *subtracted* terms, so that `ℰ(ρ) = Σ K ρ K† − Σ F ρ F†`. Such maps are
//! Hermiticity preserving but not necessarily completely positive; they
//! exist so that the Choi-based validator has something to reject.

mod builtin;
pub mod format;

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::linalg::{
    embed_operator, ComplexMatrix, DensityMatrix, SubsystemLayout, Tolerances, C64,
};

pub use builtin::{
    amplitude_damping, chsh_setting_instrument, dephasing, depolarizing, identity, measure_angle,
    measure_x, measure_z, projective, resolve_builtin, trine, weak_z, BUILTIN_NAMES, CHSH_ALICE,
    CHSH_BOB,
};

/// One outcome of an instrument and its branch map.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    outcome: String,
    kraus: Vec<ComplexMatrix>,
    subtracted: Vec<ComplexMatrix>,
}

impl Branch {
    pub fn new(outcome: impl Into<String>, kraus: Vec<ComplexMatrix>) -> Self {
        Self::with_subtracted(outcome, kraus, Vec::new())
    }

    pub fn with_subtracted(
        outcome: impl Into<String>,
        kraus: Vec<ComplexMatrix>,
        subtracted: Vec<ComplexMatrix>,
    ) -> Self {
        Self {
            outcome: outcome.into(),
            kraus,
            subtracted,
        }
    }

    pub fn outcome(&self) -> &str {
        &self.outcome
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn subtracted(&self) -> &[ComplexMatrix] {
        &self.subtracted
    }

    /// True when the branch is a plain Kraus sum, which is CP by construction.
    pub fn is_kraus_positive(&self) -> bool {
        self.subtracted.is_empty()
    }

    fn terms(&self) -> impl Iterator<Item = (f64, &ComplexMatrix)> {
        self.kraus
            .iter()
            .map(|k| (1.0, k))
            .chain(self.subtracted.iter().map(|k| (-1.0, k)))
    }

    /// Applies the branch map to an operator of matching dimension.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let n = x.rows();
        self.terms()
            .fold(ComplexMatrix::zeros(n, n), |acc, (sign, k)| {
                &acc + &k.conjugate(x).scale_real(sign)
            })
    }

    /// The effect operator `Σ K†K − Σ F†F`.
    pub fn effect(&self) -> ComplexMatrix {
        let n = self
            .kraus
            .first()
            .or(self.subtracted.first())
            .map_or(0, |k| k.cols());
        self.terms()
            .fold(ComplexMatrix::zeros(n, n), |acc, (sign, k)| {
                &acc + &(&k.adjoint() * k).scale_real(sign)
            })
    }

    /// Unnormalized Choi matrix `Σ_ij |i⟩⟨j| ⊗ ℰ(|i⟩⟨j|)`.
    pub fn choi(&self, dim: usize) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(dim * dim, dim * dim);
        for (sign, k) in self.terms() {
            // vec(K) with the input index most significant: v[i*d + r] = K[r, i]
            let v: Vec<C64> = (0..dim * dim)
                .map(|idx| k.get(idx % dim, idx / dim))
                .collect();
            out = &out + &ComplexMatrix::outer(&v, &v).scale_real(sign);
        }
        out
    }

    fn term_count(&self) -> usize {
        self.kraus.len() + self.subtracted.len()
    }
}

/// A finite family of branch maps acting on a `dimension`-dimensional space.
///
/// Construction only checks shapes and labels; complete positivity and trace
/// preservation are checked by [`validate_instrument`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumInstrument {
    dimension: usize,
    branches: Vec<Branch>,
}

impl QuantumInstrument {
    pub fn new(dimension: usize, branches: Vec<Branch>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::arg("instrument dimension must be positive"));
        }
        if branches.is_empty() {
            return Err(Error::arg("instrument needs at least one branch"));
        }
        let mut seen = HashSet::new();
        for b in &branches {
            if b.outcome.is_empty() || b.outcome.chars().any(char::is_whitespace) {
                return Err(Error::arg(format!(
                    "outcome label '{}' must be nonempty and free of whitespace",
                    b.outcome
                )));
            }
            if !seen.insert(b.outcome.as_str()) {
                return Err(Error::arg(format!(
                    "duplicate outcome label '{}'",
                    b.outcome
                )));
            }
            if b.term_count() == 0 {
                return Err(Error::arg(format!(
                    "branch '{}' has no Kraus operators",
                    b.outcome
                )));
            }
            for (_, k) in b.terms() {
                if k.rows() != dimension || k.cols() != dimension {
                    return Err(Error::arg(format!(
                        "branch '{}' has a {}x{} operator in a {dimension}-dimensional instrument",
                        b.outcome,
                        k.rows(),
                        k.cols()
                    )));
                }
            }
        }
        Ok(Self {
            dimension,
            branches,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &str> {
        self.branches.iter().map(|b| b.outcome.as_str())
    }

    pub fn branch(&self, outcome: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.outcome == outcome)
    }
}

/// A trace-preserving CP map given by labelled Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    operators: Vec<(String, ComplexMatrix)>,
}

impl KrausSet {
    /// Checks shapes and completeness `Σ K†K = I` (default tolerance).
    pub fn new(operators: Vec<(String, ComplexMatrix)>) -> Result<Self> {
        let set = Self::new_unchecked(operators)?;
        let defect = set.completeness_defect();
        if defect > Tolerances::default().completeness {
            return Err(Error::Contract(format!(
                "Kraus set is not trace preserving (completeness defect {defect:.3e})"
            )));
        }
        Ok(set)
    }

    /// Checks shapes only.
    pub fn new_unchecked(operators: Vec<(String, ComplexMatrix)>) -> Result<Self> {
        let Some((_, first)) = operators.first() else {
            return Err(Error::arg("Kraus set needs at least one operator"));
        };
        let d = first.rows();
        if operators
            .iter()
            .any(|(_, k)| k.rows() != d || k.cols() != d)
        {
            return Err(Error::arg(
                "Kraus operators must all be square of equal dimension",
            ));
        }
        Ok(Self { operators })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            operators: vec![("id".into(), ComplexMatrix::identity(dim))],
        }
    }

    pub fn dimension(&self) -> usize {
        self.operators[0].1.rows()
    }

    pub fn operators(&self) -> &[(String, ComplexMatrix)] {
        &self.operators
    }

    /// Operator norm of `Σ K†K − I`.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.dimension();
        let sum = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, (_, k)| {
                &acc + &(&k.adjoint() * k)
            });
        (&sum - &ComplexMatrix::identity(d)).hermitian_norm()
    }

    /// The channel viewed as a one-outcome instrument.
    pub fn to_instrument(&self, outcome: &str) -> Result<QuantumInstrument> {
        QuantumInstrument::new(
            self.dimension(),
            vec![Branch::new(
                outcome,
                self.operators.iter().map(|(_, k)| k.clone()).collect(),
            )],
        )
    }
}

/// A problem found by [`validate_instrument`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// The branch's Choi matrix has an eigenvalue below `-τ_psd`.
    NotCompletelyPositive {
        branch: String,
        min_choi_eigenvalue: f64,
    },
    /// `‖Σ_j Σ K†K − I‖` exceeds the completeness tolerance.
    NotTracePreserving { defect: f64 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn completeness_defect(&self) -> Option<f64> {
        self.violations.iter().find_map(|v| match v {
            Violation::NotTracePreserving { defect } => Some(*defect),
            _ => None,
        })
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_pass() {
            return write!(f, "pass");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v {
                Violation::NotCompletelyPositive {
                    branch,
                    min_choi_eigenvalue,
                } => format!(
                    "branch '{branch}' not CP (min Choi eigenvalue {min_choi_eigenvalue:.3e})"
                ),
                Violation::NotTracePreserving { defect } => {
                    format!("not trace preserving (completeness defect {defect:.3e})")
                }
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

pub fn validate_instrument(inst: &QuantumInstrument) -> ValidationReport {
    validate_instrument_with(inst, &Tolerances::default())
}

pub fn validate_instrument_with(inst: &QuantumInstrument, tol: &Tolerances) -> ValidationReport {
    let d = inst.dimension;
    let mut report = ValidationReport::default();
    let mut total = ComplexMatrix::zeros(d, d);
    for b in &inst.branches {
        if !b.is_kraus_positive() {
            let min = b.choi(d).hermitian_eigenvalues()[0];
            if min < -tol.psd {
                report.violations.push(Violation::NotCompletelyPositive {
                    branch: b.outcome.clone(),
                    min_choi_eigenvalue: min,
                });
            }
        }
        total = &total + &b.effect();
    }
    let defect = (&total - &ComplexMatrix::identity(d)).hermitian_norm();
    if defect > tol.completeness {
        report
            .violations
            .push(Violation::NotTracePreserving { defect });
    }
    report
}

/// Choi-matrix CP test for every branch, including plain Kraus branches.
pub fn choi_positive(inst: &QuantumInstrument, tol: &Tolerances) -> bool {
    inst.branches
        .iter()
        .all(|b| b.choi(inst.dimension).hermitian_eigenvalues()[0] >= -tol.psd)
}

/// One classical outcome of applying an instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentOutcomeRecord {
    pub outcome: String,
    pub probability: f64,
    /// `None` when the probability is at or below the probability floor.
    pub post_state: Option<DensityMatrix>,
}

fn ensure_valid(inst: &QuantumInstrument) -> Result<()> {
    let report = validate_instrument(inst);
    if report.is_pass() {
        Ok(())
    } else {
        Err(Error::Contract(format!("invalid instrument: {report}")))
    }
}

/// Applies `inst` to the factors `target` of `rho` (identity elsewhere).
///
/// Returns one record per branch, in branch order, with
/// `p_j = Tr ℰ_j(ρ)` and post-state `ℰ_j(ρ)/p_j` on the full layout.
pub fn apply_instrument<S: AsRef<str>>(
    inst: &QuantumInstrument,
    rho: &DensityMatrix,
    target: &[S],
) -> Result<Vec<InstrumentOutcomeRecord>> {
    let layout = rho.layout();
    let positions = layout.positions(target)?;
    let target_dim: usize = positions.iter().map(|&p| layout.factors()[p].dim).product();
    if target_dim != inst.dimension {
        return Err(Error::arg(format!(
            "instrument dimension {} does not match target dimension {target_dim}",
            inst.dimension
        )));
    }
    ensure_valid(inst)?;
    apply_unchecked(inst, rho, target)
}

pub(crate) fn apply_unchecked<S: AsRef<str>>(
    inst: &QuantumInstrument,
    rho: &DensityMatrix,
    target: &[S],
) -> Result<Vec<InstrumentOutcomeRecord>> {
    let floor = Tolerances::default().probability_floor;
    let layout = rho.layout();
    let whole = target.len() == layout.len()
        && layout
            .positions(target)?
            .iter()
            .enumerate()
            .all(|(i, &p)| i == p);
    let mut records = Vec::with_capacity(inst.branches.len());
    for b in &inst.branches {
        let image = if whole {
            b.apply(rho.matrix())
        } else {
            let lifted = Branch::with_subtracted(
                b.outcome.clone(),
                b.kraus
                    .iter()
                    .map(|k| embed_operator(k, layout, target))
                    .collect::<Result<_>>()?,
                b.subtracted
                    .iter()
                    .map(|k| embed_operator(k, layout, target))
                    .collect::<Result<_>>()?,
            );
            lifted.apply(rho.matrix())
        };
        let p = image.trace().re.max(0.0);
        let post_state = (p > floor).then(|| {
            DensityMatrix::from_parts_unchecked(image.scale_real(1.0 / p), layout.clone())
        });
        records.push(InstrumentOutcomeRecord {
            outcome: b.outcome.clone(),
            probability: p,
            post_state,
        });
    }
    Ok(records)
}

/// Builds the joint instrument `⊗_{j≠k} 𝒯_j ⊗ ℰ_k` on `layout`, where party
/// `k` applies `local` and every other factor applies its trace-preserving
/// map from `others` (identity when absent).
pub fn one_way_local_instrument(
    layout: &SubsystemLayout,
    party: &str,
    local: &QuantumInstrument,
    others: &BTreeMap<String, KrausSet>,
) -> Result<QuantumInstrument> {
    let party_pos = layout
        .position(party)
        .ok_or_else(|| Error::arg(format!("unknown party factor '{party}'")))?;
    if layout.factors()[party_pos].dim != local.dimension {
        return Err(Error::arg(format!(
            "local instrument dimension {} does not match factor '{party}'",
            local.dimension
        )));
    }
    ensure_valid(local)?;
    for (label, map) in others {
        let pos = layout
            .position(label)
            .ok_or_else(|| Error::arg(format!("unknown factor '{label}'")))?;
        if pos == party_pos {
            return Err(Error::arg(format!(
                "factor '{label}' is the acting party and cannot also carry a channel"
            )));
        }
        if map.dimension() != layout.factors()[pos].dim {
            return Err(Error::arg(format!(
                "channel on '{label}' has the wrong dimension"
            )));
        }
        let defect = map.completeness_defect();
        if defect > Tolerances::default().completeness {
            return Err(Error::Contract(format!(
                "channel on '{label}' is not trace preserving (defect {defect:.3e})"
            )));
        }
    }

    let factor_ops: Vec<Vec<ComplexMatrix>> = layout
        .factors()
        .iter()
        .enumerate()
        .filter(|(p, _)| *p != party_pos)
        .map(|(_, f)| match others.get(&f.label) {
            Some(map) => map.operators.iter().map(|(_, k)| k.clone()).collect(),
            None => vec![ComplexMatrix::identity(f.dim)],
        })
        .collect();

    let lift = |local_op: &ComplexMatrix| -> Vec<ComplexMatrix> {
        // cartesian product over factors, in layout order
        let mut partial = vec![ComplexMatrix::identity(1)];
        let mut other_idx = 0;
        for p in 0..layout.len() {
            let choices: &[ComplexMatrix] = if p == party_pos {
                std::slice::from_ref(local_op)
            } else {
                other_idx += 1;
                &factor_ops[other_idx - 1]
            };
            partial = partial
                .iter()
                .flat_map(|acc| choices.iter().map(move |c| acc.kron(c)))
                .collect();
        }
        partial
    };

    let branches = local
        .branches
        .iter()
        .map(|b| {
            Branch::with_subtracted(
                b.outcome.clone(),
                b.kraus.iter().flat_map(&lift).collect(),
                b.subtracted.iter().flat_map(&lift).collect(),
            )
        })
        .collect();
    QuantumInstrument::new(layout.total_dim(), branches)
}

/// A partition of outcome labels into labelled groups.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGrainingPartition {
    groups: Vec<(String, Vec<String>)>,
}

impl CoarseGrainingPartition {
    pub fn new(groups: Vec<(String, Vec<String>)>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::arg("partition needs at least one group"));
        }
        let mut labels = HashSet::new();
        let mut members = HashSet::new();
        for (label, group) in &groups {
            if !labels.insert(label.as_str()) {
                return Err(Error::arg(format!("duplicate group label '{label}'")));
            }
            if group.is_empty() {
                return Err(Error::arg(format!("group '{label}' is empty")));
            }
            for m in group {
                if !members.insert(m.as_str()) {
                    return Err(Error::arg(format!("outcome '{m}' appears in two groups")));
                }
            }
        }
        Ok(Self { groups })
    }

    /// Every outcome in its own group, labelled by itself.
    pub fn singletons(inst: &QuantumInstrument) -> Self {
        Self {
            groups: inst
                .outcomes()
                .map(|o| (o.to_string(), vec![o.to_string()]))
                .collect(),
        }
    }

    pub fn groups(&self) -> &[(String, Vec<String>)] {
        &self.groups
    }

    fn check_covers<'a>(&self, outcomes: impl Iterator<Item = &'a str>) -> Result<()> {
        let outcomes: HashSet<&str> = outcomes.collect();
        let members: HashSet<&str> = self
            .groups
            .iter()
            .flat_map(|(_, g)| g.iter().map(String::as_str))
            .collect();
        if let Some(extra) = members.difference(&outcomes).next() {
            return Err(Error::arg(format!(
                "partition names unknown outcome '{extra}'"
            )));
        }
        if let Some(missing) = outcomes.difference(&members).next() {
            return Err(Error::arg(format!(
                "partition does not cover outcome '{missing}'"
            )));
        }
        Ok(())
    }
}

/// Merges branches group by group; each group's branch map is the sum of its
/// members' maps, represented by concatenating their Kraus lists.
pub fn coarse_grain(
    inst: &QuantumInstrument,
    partition: &CoarseGrainingPartition,
) -> Result<QuantumInstrument> {
    partition.check_covers(inst.outcomes())?;
    let branches = partition
        .groups
        .iter()
        .map(|(label, members)| {
            let mut kraus = Vec::new();
            let mut subtracted = Vec::new();
            for b in inst
                .branches
                .iter()
                .filter(|b| members.contains(&b.outcome))
            {
                kraus.extend(b.kraus.iter().cloned());
                subtracted.extend(b.subtracted.iter().cloned());
            }
            Branch::with_subtracted(label.clone(), kraus, subtracted)
        })
        .collect();
    QuantumInstrument::new(inst.dimension, branches)
}

/// Merges outcome records according to `partition`: probabilities add and
/// post-states combine as probability-weighted mixtures.
pub fn merge_records(
    records: &[InstrumentOutcomeRecord],
    partition: &CoarseGrainingPartition,
) -> Result<Vec<InstrumentOutcomeRecord>> {
    partition.check_covers(records.iter().map(|r| r.outcome.as_str()))?;
    let floor = Tolerances::default().probability_floor;
    partition
        .groups
        .iter()
        .map(|(label, members)| {
            let group: Vec<&InstrumentOutcomeRecord> = records
                .iter()
                .filter(|r| members.contains(&r.outcome))
                .collect();
            let p: f64 = group.iter().map(|r| r.probability).sum();
            let post_state = if p > floor {
                let mut acc: Option<(ComplexMatrix, SubsystemLayout)> = None;
                for r in &group {
                    if let Some(s) = &r.post_state {
                        let weighted = s.matrix().scale_real(r.probability / p);
                        acc = Some(match acc {
                            Some((m, l)) => (&m + &weighted, l),
                            None => (weighted, s.layout().clone()),
                        });
                    }
                }
                acc.map(|(m, l)| DensityMatrix::from_parts_unchecked(m, l))
            } else {
                None
            };
            Ok(InstrumentOutcomeRecord {
                outcome: label.clone(),
                probability: p,
                post_state,
            })
        })
        .collect()
}
