//! Dense complex linear algebra over labelled tensor-product spaces.
//!
//! Everything here is a pure function of immutable values; states and
//! operators can be shared freely across threads.

mod layout;
mod matrix;
mod ops;
mod state;
mod tolerance;

pub use layout::{Factor, SubsystemLayout};
pub use matrix::{pauli, ComplexMatrix, C64};
pub use ops::{
    embed_operator, evolve, expectation, local_operator, partial_trace, purity, tensor_product,
    trace_distance, Tensor,
};
pub use state::{DensityMatrix, HermitianOperator, PureState};
pub use tolerance::{Tolerances, MAX_DIMENSION};

pub(crate) use matrix::ZERO;
