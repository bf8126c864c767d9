pub mod bump;
pub mod commutators;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod field;
pub mod grid;
pub mod initial;
pub mod oracle;
pub mod quadrature;
pub mod registry;
pub mod solver;
pub mod spectral;
pub mod suite;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::GridSpec;
