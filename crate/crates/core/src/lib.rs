//! Distributionally robust batch objectives for debiasing small masked-token
//! encoders, with StereoSet-, SEAT- and CrowS-style bias metrics.

pub mod cli;
pub mod corpus;
pub mod dro;
pub mod error;
pub mod eval;
pub mod model;
pub mod numkit;
pub mod seed;

pub use error::{Error, Result};
