/// Largest total Hilbert-space dimension any layout may reach by default.
pub const MAX_DIMENSION: usize = 1 << 14;

/// Numerical tolerances used by every validity check in the crate.
///
/// The defaults suit double-precision dense algebra on systems of at most
/// a few hundred dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum entry-wise deviation from Hermiticity.
    pub hermitian: f64,
    /// Maximum deviation of a trace from its expected value.
    pub trace: f64,
    /// Maximum deviation of a state vector's 2-norm from one.
    pub norm: f64,
    /// Smallest eigenvalue accepted as non-negative is `-psd`.
    pub psd: f64,
    /// Maximum operator-norm defect of a Kraus completeness sum.
    pub completeness: f64,
    /// Outcomes at or below this probability carry no post-measurement state.
    pub probability_floor: f64,
    /// Upper bound on the total dimension of any layout.
    pub max_dimension: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            trace: 1e-10,
            norm: 1e-10,
            psd: 1e-9,
            completeness: 1e-9,
            probability_floor: 1e-12,
            max_dimension: MAX_DIMENSION,
        }
    }
}
