//! Seeded generators for random states, Hamiltonians and instruments.
//!
//! Used by the property and acceptance suites; entries are drawn uniformly
//! from `[-1, 1]` so everything is reproducible from a `u64` seed.

use rand::Rng;

use crate::instruments::{Branch, QuantumInstrument};
use crate::linalg::{ComplexMatrix, DensityMatrix, HermitianOperator, SubsystemLayout, C64};

fn uniform_entry<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| uniform_entry(rng))
}

/// Hermitian matrix with entries bounded by one in modulus scale.
pub fn random_hermitian_matrix<R: Rng>(rng: &mut R, n: usize) -> ComplexMatrix {
    let m = random_matrix(rng, n, n);
    (&m + &m.adjoint()).scale_real(0.5)
}

pub fn random_hermitian<R: Rng>(rng: &mut R, layout: &SubsystemLayout) -> HermitianOperator {
    let m = random_hermitian_matrix(rng, layout.total_dim());
    HermitianOperator::new(m, layout.clone()).expect("symmetrized matrix is Hermitian")
}

/// Random mixed state `G G† / Tr(G G†)` with `G` of the given rank.
pub fn random_density_with_rank<R: Rng>(
    rng: &mut R,
    layout: &SubsystemLayout,
    rank: usize,
) -> DensityMatrix {
    let d = layout.total_dim();
    let g = random_matrix(rng, d, rank.max(1));
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr), layout.clone()).expect("Gram matrix is a state")
}

pub fn random_density<R: Rng>(rng: &mut R, layout: &SubsystemLayout) -> DensityMatrix {
    let rank = rng.random_range(1..=layout.total_dim());
    random_density_with_rank(rng, layout, rank)
}

/// `S^{-1/2}` for a positive definite Hermitian `S`.
fn inverse_sqrt(s: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = s.hermitian_eigen();
    let diag: Vec<C64> = values
        .iter()
        .map(|&v| C64::new(v.sqrt().recip(), 0.0))
        .collect();
    vectors.conjugate(&ComplexMatrix::diagonal(&diag))
}

/// Random valid instrument: `outcomes` branches of `kraus_per_branch`
/// operators each, normalized jointly so `Σ K†K = I`.
pub fn random_instrument<R: Rng>(
    rng: &mut R,
    dim: usize,
    outcomes: usize,
    kraus_per_branch: usize,
) -> QuantumInstrument {
    let raw: Vec<Vec<ComplexMatrix>> = (0..outcomes)
        .map(|_| {
            (0..kraus_per_branch)
                .map(|_| random_matrix(rng, dim, dim))
                .collect()
        })
        .collect();
    let sum = raw
        .iter()
        .flatten()
        .fold(ComplexMatrix::zeros(dim, dim), |acc, k| {
            &acc + &(&k.adjoint() * k)
        });
    let norm = inverse_sqrt(&sum);
    let branches = raw
        .into_iter()
        .enumerate()
        .map(|(j, ks)| Branch::new(format!("o{j}"), ks.iter().map(|k| k * &norm).collect()))
        .collect();
    QuantumInstrument::new(dim, branches).expect("generated instrument is well formed")
}

/// Flips the sign of one Kraus term's contribution in branch `branch`.
///
/// With linearly independent Kraus operators the result is not CP, and the
/// completeness sum drops by `2 K†K`, so it is not TP either.
pub fn sign_flip_term(inst: &QuantumInstrument, branch: usize, term: usize) -> QuantumInstrument {
    let branches = inst
        .branches()
        .iter()
        .enumerate()
        .map(|(j, b)| {
            if j != branch {
                return b.clone();
            }
            let mut kraus = b.kraus().to_vec();
            let mut subtracted = b.subtracted().to_vec();
            subtracted.push(kraus.remove(term));
            Branch::with_subtracted(b.outcome(), kraus, subtracted)
        })
        .collect();
    QuantumInstrument::new(inst.dimension(), branches).expect("shapes unchanged")
}

/// Scales every Kraus operator of branch `branch` by `factor`; CP is kept
/// but trace preservation breaks for `factor != 1`.
pub fn rescale_branch(inst: &QuantumInstrument, branch: usize, factor: f64) -> QuantumInstrument {
    let branches = inst
        .branches()
        .iter()
        .enumerate()
        .map(|(j, b)| {
            if j != branch {
                return b.clone();
            }
            Branch::new(
                b.outcome(),
                b.kraus().iter().map(|k| k.scale_real(factor)).collect(),
            )
        })
        .collect();
    QuantumInstrument::new(inst.dimension(), branches).expect("shapes unchanged")
}
