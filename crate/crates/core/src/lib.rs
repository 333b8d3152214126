//! Hashing-based approximate model counting and almost-uniform sampling for
//! CNF formulas.
//!
//! Random XOR constraints drawn from a 3-universal family cut the solution
//! space into cells; a CDCL solver measures or enumerates cells. On top of
//! that sit an (ε, δ) approximate counter, almost-uniform samplers (single
//! and multi-sample, with parallel rounds), independent-support
//! minimization, a weighted-to-unweighted reduction, and brute-force oracles
//! used to check all of it at small scale.

pub mod cli;
pub mod counter;
pub mod formula;
pub mod hashing;
pub mod indsupport;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod solver;
pub mod weighted;
