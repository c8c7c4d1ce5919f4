#![allow(dead_code)]

pub mod checks;
pub mod fixtures;
pub mod oracle;

/// Absolute tolerance for comparisons against the reference aggregators.
pub const ORACLE_TOL: f64 = 1e-6;
