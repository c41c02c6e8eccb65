//! Verification of untyped serialized values against closed type schemes.

pub mod check;
pub mod cli;
pub mod defs;
pub mod graph;
pub mod linearize;
pub mod oracles;
pub mod syntax;
pub mod types;
pub mod value;
pub mod wire;
