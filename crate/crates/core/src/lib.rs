//! Thermodynamic formalism on one-sided shifts of finite type and their
//! one-block factors: fiber-sum pressure sequences, Gibbs data, defect
//! profiles, and compensation-function detection.

pub mod cli;
pub mod detect;
pub mod error;
pub mod exact;
pub mod factor;
pub mod gibbs;
pub mod par;
pub mod potential;
pub mod seq;
pub mod shift;
pub mod trend;

pub use error::{Error, Result};
