//! Finite-dimensional toolkit for discrete quantum observables (POVMs).
//!
//! * [`linalg`]: Hermitian eigensolver, positivity and Loewner order.
//! * [`observable`]: the POVM model and classification of its range.
//! * [`boolalg`]: finite Boolean algebras of commuting projections.
//! * [`dilation`]: minimal Naimark dilations and the `R₁` construction.
//! * [`funcrel`]: function-of relations and functional coexistence.
//! * [`cli`]: the file-based `povm` front end.

pub mod boolalg;
pub mod cli;
pub mod dilation;
pub mod error;
pub mod funcrel;
pub mod linalg;
pub mod observable;
pub mod subset;

pub use error::{Error, Result};
pub use funcrel::Limits;
pub use linalg::{CMatrix, Tolerance, C64};
pub use observable::DiscreteObservable;
pub use subset::Subset;
