use super::layout::SubsystemLayout;
use super::matrix::{ComplexMatrix, ZERO};
use super::state::{DensityMatrix, HermitianOperator, PureState};
use super::tolerance::MAX_DIMENSION;
use crate::error::{Error, Result};

/// Values that combine under the tensor product.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl Tensor for ComplexMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        for (a, b) in [(self.rows(), other.rows()), (self.cols(), other.cols())] {
            let requested = a as u128 * b as u128;
            if requested > MAX_DIMENSION as u128 {
                return Err(Error::Capacity {
                    requested,
                    limit: MAX_DIMENSION,
                });
            }
        }
        Ok(self.kron(other))
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout().concat(other.layout())?;
        Ok(DensityMatrix::from_parts_unchecked(
            self.matrix().kron(other.matrix()),
            layout,
        ))
    }
}

impl Tensor for HermitianOperator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout().concat(other.layout())?;
        Ok(HermitianOperator::from_parts_unchecked(
            self.matrix().kron(other.matrix()),
            layout,
        ))
    }
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout().concat(other.layout())?;
        let mut amps = Vec::with_capacity(layout.total_dim());
        for a in self.amplitudes() {
            for b in other.amplitudes() {
                amps.push(a * b);
            }
        }
        Ok(PureState::from_parts_unchecked(amps, layout))
    }
}

/// `a ⊗ b`, with `a` as the more significant factor.
pub fn tensor_product<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Traces out every factor not named in `keep`.
///
/// The result keeps the surviving factors in their original layout order,
/// whatever order `keep` lists them in.
pub fn partial_trace<S: AsRef<str>>(rho: &DensityMatrix, keep: &[S]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::arg("partial trace must keep at least one factor"));
    }
    let layout = rho.layout();
    let mut kept = layout.positions(keep)?;
    kept.sort_unstable();
    let traced: Vec<usize> = (0..layout.len()).filter(|p| !kept.contains(p)).collect();
    let out_layout = layout.select(&kept);
    if traced.is_empty() {
        return Ok(rho.clone());
    }

    let dk = out_layout.total_dim();
    let dt = layout.total_dim() / dk;
    // full[k * dt + t] = flattened index with kept digits k and traced digits t
    let mut full = vec![0usize; dk * dt];
    for i in 0..layout.total_dim() {
        let digits = layout.digits(i);
        let k = layout.sub_index(&digits, &kept);
        let t = layout.sub_index(&digits, &traced);
        full[k * dt + t] = i;
    }
    let m = rho.matrix();
    let out = ComplexMatrix::from_fn(dk, dk, |r, c| {
        (0..dt).fold(ZERO, |acc, t| {
            acc + m.get(full[r * dt + t], full[c * dt + t])
        })
    });
    Ok(DensityMatrix::from_parts_unchecked(out, out_layout))
}

/// Unitary evolution `ρ ↦ U ρ U†` with `U = exp(−i H t)`.
pub fn evolve(rho: &DensityMatrix, h: &HermitianOperator, t: f64) -> Result<DensityMatrix> {
    if rho.layout() != h.layout() {
        return Err(Error::arg("state and Hamiltonian have different layouts"));
    }
    if !t.is_finite() {
        return Err(Error::arg("evolution time must be finite"));
    }
    let u = h.propagator(t);
    Ok(DensityMatrix::from_parts_unchecked(
        u.conjugate(rho.matrix()),
        rho.layout().clone(),
    ))
}

/// `½‖a − b‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::arg(format!(
            "trace distance between dimensions {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let diff = a.matrix() - b.matrix();
    let d: f64 = diff.hermitian_eigenvalues().iter().map(|v| v.abs()).sum();
    Ok((0.5 * d).clamp(0.0, 1.0))
}

/// `Tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().trace_product(rho.matrix()).re
}

/// `Tr(ρ O)`.
pub fn expectation(rho: &DensityMatrix, observable: &HermitianOperator) -> Result<f64> {
    if rho.layout() != observable.layout() {
        return Err(Error::arg("state and observable have different layouts"));
    }
    Ok(rho.matrix().trace_product(observable.matrix()).re)
}

/// Lifts `op`, acting on the factors `targets` (in that order), to the whole
/// of `layout` with identity on every other factor.
pub fn embed_operator<S: AsRef<str>>(
    op: &ComplexMatrix,
    layout: &SubsystemLayout,
    targets: &[S],
) -> Result<ComplexMatrix> {
    let positions = layout.positions(targets)?;
    let target_dim: usize = positions.iter().map(|&p| layout.factors()[p].dim).product();
    if !op.is_square() || op.rows() != target_dim {
        return Err(Error::arg(format!(
            "operator of size {}x{} does not match target dimension {target_dim}",
            op.rows(),
            op.cols()
        )));
    }
    let rest: Vec<usize> = (0..layout.len())
        .filter(|p| !positions.contains(p))
        .collect();
    let d = layout.total_dim();
    let split: Vec<(usize, usize)> = (0..d)
        .map(|i| {
            let digits = layout.digits(i);
            (
                layout.sub_index(&digits, &positions),
                layout.sub_index(&digits, &rest),
            )
        })
        .collect();
    Ok(ComplexMatrix::from_fn(d, d, |r, c| {
        let (tr, rr) = split[r];
        let (tc, rc) = split[c];
        if rr == rc {
            op.get(tr, tc)
        } else {
            ZERO
        }
    }))
}

/// Hermitian operator acting as `op` on `targets` and identity elsewhere.
pub fn local_operator<S: AsRef<str>>(
    op: &ComplexMatrix,
    layout: &SubsystemLayout,
    targets: &[S],
) -> Result<HermitianOperator> {
    HermitianOperator::new(embed_operator(op, layout, targets)?, layout.clone())
}
