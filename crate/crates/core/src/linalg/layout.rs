use std::collections::HashSet;

use serde::Serialize;

use super::tolerance::MAX_DIMENSION;
use crate::error::{Error, Result};

/// One tensor factor of a Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered tensor decomposition of a Hilbert space.
///
/// Factor 0 is the most significant digit of the flattened basis index, so
/// `|a b⟩` on `[A, B]` sits at index `a * dim(B) + b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SubsystemLayout {
    factors: Vec<Factor>,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        Self::with_limit(factors, MAX_DIMENSION)
    }

    pub fn with_limit<S: Into<String>>(
        factors: impl IntoIterator<Item = (S, usize)>,
        limit: usize,
    ) -> Result<Self> {
        let factors: Vec<Factor> = factors
            .into_iter()
            .map(|(label, dim)| Factor {
                label: label.into(),
                dim,
            })
            .collect();
        if factors.is_empty() {
            return Err(Error::arg("layout needs at least one factor"));
        }
        let mut seen = HashSet::new();
        for f in &factors {
            if f.dim < 2 {
                return Err(Error::arg(format!(
                    "factor '{}' has dimension {} (minimum is 2)",
                    f.label, f.dim
                )));
            }
            if f.label.is_empty() {
                return Err(Error::arg("factor labels must be nonempty"));
            }
            if !seen.insert(f.label.as_str()) {
                return Err(Error::arg(format!("duplicate factor label '{}'", f.label)));
            }
        }
        let requested = factors
            .iter()
            .try_fold(1u128, |acc, f| acc.checked_mul(f.dim as u128))
            .unwrap_or(u128::MAX);
        if requested > limit as u128 {
            return Err(Error::Capacity { requested, limit });
        }
        Ok(Self { factors })
    }

    /// Layout of qubits with the given labels.
    pub fn qubits<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        Self::new(labels.iter().map(|l| (l.as_ref().to_string(), 2)))
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|f| f.label.as_str())
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    /// Positions of `labels`, in the order given.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            let p = self
                .position(l)
                .ok_or_else(|| Error::arg(format!("unknown factor label '{l}'")))?;
            if out.contains(&p) {
                return Err(Error::arg(format!("factor label '{l}' listed twice")));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        self.concat_with_limit(other, MAX_DIMENSION)
    }

    pub fn concat_with_limit(&self, other: &Self, limit: usize) -> Result<Self> {
        Self::with_limit(
            self.factors
                .iter()
                .chain(other.factors.iter())
                .map(|f| (f.label.clone(), f.dim)),
            limit,
        )
    }

    /// Sub-layout made of the factors at `positions`, kept in layout order.
    pub(crate) fn select(&self, positions: &[usize]) -> Self {
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        Self {
            factors: sorted.iter().map(|&p| self.factors[p].clone()).collect(),
        }
    }

    /// Mixed-radix digits of a flattened index, most significant first.
    pub(crate) fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, f) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % f.dim;
            index /= f.dim;
        }
        out
    }

    /// Flattened index of the digits at `positions`, in the order of `positions`.
    pub(crate) fn sub_index(&self, digits: &[usize], positions: &[usize]) -> usize {
        positions
            .iter()
            .fold(0, |acc, &p| acc * self.factors[p].dim + digits[p])
    }

    /// Same factors with new labels.
    pub fn relabel<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.factors.len() {
            return Err(Error::arg(format!(
                "relabel needs {} labels, got {}",
                self.factors.len(),
                labels.len()
            )));
        }
        Self::new(
            labels
                .iter()
                .zip(&self.factors)
                .map(|(l, f)| (l.as_ref().to_string(), f.dim)),
        )
    }
}
