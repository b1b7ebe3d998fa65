//! Brute-force and second-implementation oracles.
//!
//! Nothing here depends on the engine crates. Every function works on plain
//! vectors and strings so that tests can check engine output against a route
//! that shares no code with it.

pub mod counting;
pub mod generative;
pub mod porter;
pub mod scoring;
