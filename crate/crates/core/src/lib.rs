//! Certified computation engine for a three-layer implicitly-defined norm on
//! finitely supported sequences, together with its supporting combinatorics:
//! a dense generating set `H` of functionals, a coding injection `sigma` with
//! controlled growth, layered norming sets built from admissible tuples, a
//! fixed-point norm iteration with certified enclosures, and a witness suite
//! of finite inequality checkers and certificate validators.
//!
//! Every inequality decision flows through exact expression arithmetic with
//! adaptive dyadic enclosures; nothing is ever decided by floating point.

pub mod cert;
pub mod coding;
pub mod config;
pub mod dyadic;
pub mod engine;
pub mod error;
pub mod normset;
pub mod reference;
pub mod rng;
pub mod scalar;
pub mod suite;
pub mod vec00;
pub mod witness;

// pub use config::RunConfig;
pub use dyadic::Dyadic;
pub use error::{CodingError, EngineError, ScalarError, Violation};
pub use scalar::{Enclosure, Scalar};
pub use vec00::{IndexInterval, Vec00};
