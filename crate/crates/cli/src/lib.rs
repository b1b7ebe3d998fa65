//! Command line and HTTP service for topic modelling workflows.

pub mod cli;
pub mod service;
