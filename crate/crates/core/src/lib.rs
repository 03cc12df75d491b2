//! Partial automorphisms of finite structures: normal forms and amalgamation
//! for partial automorphisms of finite Boolean algebras, measured and metric
//! variants, tree automorphisms, bounded class checking and step-by-step
//! approximations of generic automorphisms.

pub mod algebra;
pub mod builder;
pub mod cap;
pub mod checkers;
pub mod chains;
pub mod derivation;
pub mod enumerate;
pub mod error;
pub mod exec;
pub mod grid;
pub mod measured;
pub mod metric;
pub mod random;
pub mod rational;
pub mod refine;
pub mod shift;
pub mod system;
pub mod trees;

pub use algebra::{AmbientAlgebra, AtomId, Block, Subalgebra};
pub use error::{Error, Result};
pub use rational::Rational;
pub use system::{AlgebraEmbedding, PartialIso, PartialIsoSystem, SystemEmbedding};
