use super::layout::SubsystemLayout;
use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use super::tolerance::Tolerances;
use crate::error::{Error, Result};

fn check_shape(matrix: &ComplexMatrix, layout: &SubsystemLayout, what: &str) -> Result<()> {
    if !matrix.is_square() {
        return Err(Error::arg(format!(
            "{what} must be square, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    if matrix.rows() != layout.total_dim() {
        return Err(Error::arg(format!(
            "{what} has dimension {} but layout has total dimension {}",
            matrix.rows(),
            layout.total_dim()
        )));
    }
    Ok(())
}

/// A mixed quantum state on a labelled tensor-product space.
///
/// Always square, Hermitian, unit-trace and positive semidefinite within the
/// tolerances it was validated against.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    layout: SubsystemLayout,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, layout: SubsystemLayout) -> Result<Self> {
        Self::new_with(matrix, layout, &Tolerances::default())
    }

    pub fn new_with(
        matrix: ComplexMatrix,
        layout: SubsystemLayout,
        tol: &Tolerances,
    ) -> Result<Self> {
        check_shape(&matrix, &layout, "density matrix")?;
        let herm = matrix.hermiticity_defect();
        if herm > tol.hermitian {
            return Err(Error::Invariant(format!(
                "density matrix is not Hermitian (defect {herm:.3e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > tol.trace {
            return Err(Error::Invariant(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let min = matrix.hermitian_eigenvalues()[0];
        if min < -tol.psd {
            return Err(Error::Invariant(format!(
                "density matrix has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { matrix, layout })
    }

    /// Skips validation; for states produced by operations that preserve the invariants.
    pub(crate) fn from_parts_unchecked(matrix: ComplexMatrix, layout: SubsystemLayout) -> Self {
        debug_assert_eq!(matrix.rows(), layout.total_dim());
        Self { matrix, layout }
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self {
            matrix: ComplexMatrix::outer(&state.amplitudes, &state.amplitudes),
            layout: state.layout.clone(),
        }
    }

    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        Self {
            matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
            layout,
        }
    }

    /// Projector onto the computational basis state with flattened `index`.
    pub fn basis(layout: SubsystemLayout, index: usize) -> Result<Self> {
        Ok(Self::from_pure(&PureState::basis(layout, index)?))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn into_parts(self) -> (ComplexMatrix, SubsystemLayout) {
        (self.matrix, self.layout)
    }

    /// Same state with factor labels replaced (dimensions must match).
    pub fn relabel<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        Ok(Self {
            matrix: self.matrix.clone(),
            layout: self.layout.relabel(labels)?,
        })
    }

    /// Re-runs the invariant checks against `tol`.
    pub fn check(&self, tol: &Tolerances) -> Result<()> {
        Self::new_with(self.matrix.clone(), self.layout.clone(), tol).map(|_| ())
    }
}

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    layout: SubsystemLayout,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>, layout: SubsystemLayout) -> Result<Self> {
        Self::new_with(amplitudes, layout, &Tolerances::default())
    }

    pub fn new_with(
        amplitudes: Vec<C64>,
        layout: SubsystemLayout,
        tol: &Tolerances,
    ) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::arg(format!(
                "state vector has {} amplitudes but layout has total dimension {}",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::arg("non-finite amplitude"));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol.norm {
            return Err(Error::Invariant(format!(
                "state vector norm is {norm}, expected 1"
            )));
        }
        Ok(Self { amplitudes, layout })
    }

    pub fn basis(layout: SubsystemLayout, index: usize) -> Result<Self> {
        let d = layout.total_dim();
        if index >= d {
            return Err(Error::arg(format!(
                "basis index {index} out of range for dimension {d}"
            )));
        }
        let mut amplitudes = vec![ZERO; d];
        amplitudes[index] = ONE;
        Ok(Self { amplitudes, layout })
    }

    /// The singlet `(|01⟩ − |10⟩)/√2` on two qubits.
    pub fn singlet(layout: SubsystemLayout) -> Result<Self> {
        if layout.factors().len() != 2 || layout.factors().iter().any(|f| f.dim != 2) {
            return Err(Error::arg("singlet needs a two-qubit layout"));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(
            vec![ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO],
            layout,
        )
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub(crate) fn from_parts_unchecked(amplitudes: Vec<C64>, layout: SubsystemLayout) -> Self {
        Self { amplitudes, layout }
    }
}

/// A Hermitian operator (Hamiltonian or observable) on a labelled space.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
    layout: SubsystemLayout,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix, layout: SubsystemLayout) -> Result<Self> {
        Self::new_with(matrix, layout, &Tolerances::default())
    }

    pub fn new_with(
        matrix: ComplexMatrix,
        layout: SubsystemLayout,
        tol: &Tolerances,
    ) -> Result<Self> {
        check_shape(&matrix, &layout, "Hermitian operator")?;
        let defect = matrix.hermiticity_defect();
        if defect > tol.hermitian {
            return Err(Error::Invariant(format!(
                "operator is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self { matrix, layout })
    }

    pub fn zero(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        Self {
            matrix: ComplexMatrix::zeros(d, d),
            layout,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    /// `exp(−i H t)`, computed through the eigendecomposition of `H`.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        let (values, vectors) = self.matrix.hermitian_eigen();
        let phases: Vec<C64> = values
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * t))
            .collect();
        vectors.conjugate(&ComplexMatrix::diagonal(&phases))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale_real(factor),
            layout: self.layout.clone(),
        }
    }

    /// Sum of two operators on the same layout.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.layout != other.layout {
            return Err(Error::arg("cannot add operators on different layouts"));
        }
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
            layout: self.layout.clone(),
        })
    }

    pub(crate) fn from_parts_unchecked(matrix: ComplexMatrix, layout: SubsystemLayout) -> Self {
        Self { matrix, layout }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::pauli;

    fn qubit() -> SubsystemLayout {
        SubsystemLayout::qubits(&["q"]).unwrap()
    }

    #[test]
    fn density_validation() {
        let bad_trace = ComplexMatrix::identity(2);
        assert!(matches!(
            DensityMatrix::new(bad_trace, qubit()),
            Err(Error::Invariant(_))
        ));
        let negative = ComplexMatrix::real_square(2, &[1.5, 0.0, 0.0, -0.5]).unwrap();
        assert!(DensityMatrix::new(negative, qubit()).is_err());
        let nonherm = ComplexMatrix::real_square(2, &[0.5, 0.2, 0.0, 0.5]).unwrap();
        assert!(DensityMatrix::new(nonherm, qubit()).is_err());
        let wrong_dim = ComplexMatrix::identity(4).scale_real(0.25);
        assert!(matches!(
            DensityMatrix::new(wrong_dim, qubit()),
            Err(Error::Argument(_))
        ));
        assert!(DensityMatrix::new(ComplexMatrix::identity(2).scale_real(0.5), qubit()).is_ok());
    }

    #[test]
    fn pure_state_norm_checked() {
        assert!(PureState::new(vec![ONE, ONE], qubit()).is_err());
        assert!(PureState::basis(qubit(), 2).is_err());
        let s = PureState::singlet(SubsystemLayout::qubits(&["a", "b"]).unwrap()).unwrap();
        assert!(DensityMatrix::from_pure(&s)
            .check(&Tolerances::default())
            .is_ok());
    }

    #[test]
    fn propagator_of_x_at_half_pi_is_minus_i_x() {
        let h = HermitianOperator::new(pauli::x(), qubit()).unwrap();
        let u = h.propagator(std::f64::consts::FRAC_PI_2);
        let expected = pauli::x().scale(C64::new(0.0, -1.0));
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn hermitian_check() {
        assert!(HermitianOperator::new(pauli::y(), qubit()).is_ok());
        let not = &pauli::x() * &pauli::y();
        assert!(HermitianOperator::new(not, qubit()).is_err());
    }
}
