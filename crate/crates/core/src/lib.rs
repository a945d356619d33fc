//! Mutation-driven test generation over a small imperative language:
//! mutant generation, forking symbolic execution over a meta-mutant,
//! constraint solving and concrete kill analysis.

pub mod expr;
pub mod lang;
pub mod solver;
pub mod mutation;
pub mod exec;
pub mod symex;
pub mod cli;
