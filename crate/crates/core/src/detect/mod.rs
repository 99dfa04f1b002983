//! Decision procedures for compensation functions: sup-norm fitting of a
//! finite-range `h`, uniform and periodic defects, periodic certificates,
//! and the aggregated verdict.

mod candidate;
mod certificate;
mod defects;
mod fit;
pub mod lp;
mod verdict;

pub use candidate::{Candidate, CandidateDoc, CandidateValue};
pub use certificate::{c2_certificate, C2Certificate, C2Entry};
pub use defects::{periodic_defect, periodic_limit, power_word, uniform_defect, PeriodicDefect, PeriodicLimit, UniformDefect};
pub use fit::{chebyshev_defect, exact_identity, fit_h, FitResult};
pub use verdict::{compensation_verdict, compensation_verdict_for, Coverage, OrbitReport, Scope, VerdictOptions, VerdictReport};
