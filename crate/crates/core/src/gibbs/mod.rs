//! Transfer operators, Markov measures, Kingman integrals and weak-Gibbs
//! constants.

mod measure;
mod transfer;
mod weak;

pub use measure::{MarkovMeasure, MarkovMeasureDoc, Prob, StateKey};
pub use transfer::{transfer_pressure, weighted_matrix, GibbsData, GibbsSummary};
pub use weak::{
    integrate_table, pushforward_sandwich, weak_gibbs_constants, GibbsVerdict, IntegralReport,
    SandwichEntry, SandwichReport, WeakGibbsEntry, WeakGibbsReport,
};

use num::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::OneBlockFactor;
use crate::seq::PressureEstimate;

/// Anything that assigns masses to cylinders of a table's alphabet.
pub trait CylinderMass: Sync {
    fn alphabet(&self) -> &[String];
    fn mass(&self, y: &[usize]) -> f64;
    /// `None` when the measure has no exact rational data.
    fn mass_exact(&self, y: &[usize]) -> Option<BigRational>;
}

impl CylinderMass for MarkovMeasure {
    fn alphabet(&self) -> &[String] {
        MarkovMeasure::alphabet(self)
    }

    fn mass(&self, y: &[usize]) -> f64 {
        self.cylinder(y)
    }

    fn mass_exact(&self, y: &[usize]) -> Option<BigRational> {
        self.cylinder_exact(y).ok()
    }
}

/// `πμ` on cylinders of the image.
pub struct Pushforward<'a> {
    measure: &'a MarkovMeasure,
    factor: &'a OneBlockFactor,
}

impl<'a> Pushforward<'a> {
    pub fn new(measure: &'a MarkovMeasure, factor: &'a OneBlockFactor) -> Result<Self> {
        if measure.alphabet() != factor.domain().alphabet() {
            return Err(Error::AlphabetMismatch(
                "measure alphabet differs from the factor's domain".into(),
            ));
        }
        Ok(Pushforward { measure, factor })
    }
}

impl CylinderMass for Pushforward<'_> {
    fn alphabet(&self) -> &[String] {
        self.factor.target_alphabet()
    }

    fn mass(&self, y: &[usize]) -> f64 {
        self.factor
            .pushforward_cylinder(self.measure, y)
            .expect("alphabets checked on construction")
    }

    fn mass_exact(&self, y: &[usize]) -> Option<BigRational> {
        self.factor.pushforward_cylinder_exact(self.measure, y).ok()
    }
}

/// The pressure used by a report, with where it came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Pressure {
    /// `P = ln(base)` exactly: `Z_n = base^n` at every stored depth.
    Exact { base: u64, value: f64 },
    /// Perron eigenvalue of the transfer matrix.
    Transfer { value: f64 },
    /// `min_n (1/n) log Z_n` of a subadditive table.
    FeketeUpper { value: f64 },
    Given { value: f64 },
}

impl Pressure {
    pub fn value(&self) -> f64 {
        match *self {
            Pressure::Exact { value, .. }
            | Pressure::Transfer { value }
            | Pressure::FeketeUpper { value }
            | Pressure::Given { value } => value,
        }
    }

    pub fn exact_base(&self) -> Option<u64> {
        match *self {
            Pressure::Exact { base, .. } => Some(base),
            _ => None,
        }
    }

    pub fn from_estimate(est: &PressureEstimate) -> Pressure {
        match est.exact_base {
            Some(base) => Pressure::Exact {
                base,
                value: (base as f64).ln(),
            },
            None => Pressure::FeketeUpper {
                value: est.fekete_upper,
            },
        }
    }
}
