pub mod arith;
pub mod dirichlet;
pub mod eigencurve;
pub mod error;
pub mod hecke;
pub mod qseries;
pub mod shimura;
pub mod spaces;

pub use arith::{CycloElem, Field, Matrix, Poly, Rational};
pub use error::{Error, Result};
