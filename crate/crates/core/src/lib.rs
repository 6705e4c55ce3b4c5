//! Classically simulated variational solver for 1D second-order differential
//! equations.
//!
//! A trial function is encoded as the amplitudes of a small real-valued
//! ansatz register. The equation becomes an operator on that register, and
//! its expectation value is assembled from single control-qubit statistics
//! (Hadamard tests against a cyclic grid shift, SWAP tests against diagonal
//! mixed states). A Gaussian-process root finder then searches the ansatz
//! angles for states whose total expectation vanishes, and the classical
//! oracles in [`oracle`] check the resulting candidates.

pub mod ansatz;
pub mod error;
pub mod expectation;
pub mod gpr;
pub mod operator;
pub mod oracle;
pub mod pde;
pub mod state;

pub use error::{QuvaError, Result};
