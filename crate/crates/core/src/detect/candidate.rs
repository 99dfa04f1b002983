use std::collections::BTreeMap;

use num::BigRational;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::LogMonomial;
use crate::potential::LocallyConstantPotential;
use crate::shift::{format_symbols, parse_symbols, Word};

/// A value in a candidate document: a float, or an exact expression such
/// as `"ln(2)"` or `"ln(3) - 1/2*ln(5)"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CandidateValue {
    Float(f64),
    Exact(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CandidateDoc {
    pub range: usize,
    pub values: BTreeMap<String, CandidateValue>,
}

/// A locally constant `h` on the image shift, optionally with exact values.
#[derive(Clone, Debug)]
pub struct Candidate {
    h: LocallyConstantPotential,
    exact: Option<BTreeMap<Word, LogMonomial>>,
}

impl Candidate {
    pub fn from_potential(h: LocallyConstantPotential) -> Self {
        Candidate { h, exact: None }
    }

    /// Exact values; the float potential is derived from them.
    pub fn exact(alphabet: Vec<String>, range: usize, values: BTreeMap<Word, LogMonomial>) -> Result<Self> {
        let h = LocallyConstantPotential::on_words(
            alphabet,
            range,
            values.iter().map(|(w, m)| (w.clone(), m.to_f64())),
        )?;
        Ok(Candidate { h, exact: Some(values) })
    }

    pub fn potential(&self) -> &LocallyConstantPotential {
        &self.h
    }

    pub fn range(&self) -> usize {
        self.h.range()
    }

    pub fn alphabet(&self) -> &[String] {
        self.h.alphabet()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_value(&self, window: &[usize]) -> Option<&LogMonomial> {
        self.exact.as_ref()?.get(&window[..self.range()])
    }

    pub fn window_sum(&self, z: &[usize], n: usize) -> Result<f64> {
        let r = self.range();
        let mut s = 0.0;
        for i in 0..n {
            s += self.window(&z[i..i + r])?;
        }
        Ok(s)
    }

    fn window(&self, w: &[usize]) -> Result<f64> {
        self.h.try_value(w).ok_or_else(|| {
            Error::InvalidPotential(format!(
                "candidate undefined on `{}`",
                format_symbols(self.alphabet(), w)
            ))
        })
    }

    /// `S_q h` on `block^∞`.
    pub fn periodic_sum(&self, block: &[usize]) -> Result<f64> {
        let q = block.len();
        let r = self.range();
        let mut s = 0.0;
        for i in 0..q {
            let w: Vec<usize> = (0..r).map(|j| block[(i + j) % q]).collect();
            s += self.window(&w)?;
        }
        Ok(s)
    }

    pub fn periodic_sum_exact(&self, block: &[usize]) -> Option<LogMonomial> {
        let q = block.len();
        let r = self.range();
        let mut s = LogMonomial::zero();
        for i in 0..q {
            let w: Vec<usize> = (0..r).map(|j| block[(i + j) % q]).collect();
            s = s.add(self.exact_value(&w)?);
        }
        Some(s)
    }

    /// Exact `S_n h` of a word of length `n + r - 1`.
    pub fn window_sum_exact(&self, z: &[usize], n: usize) -> Option<LogMonomial> {
        let r = self.range();
        let mut counts: BTreeMap<&[usize], i64> = BTreeMap::new();
        for i in 0..n {
            *counts.entry(&z[i..i + r]).or_default() += 1;
        }
        let mut s = LogMonomial::zero();
        for (w, c) in counts {
            s = s.add(&self.exact_value(w)?.scale(&BigRational::from_integer(c.into())));
        }
        Some(s)
    }

    pub fn to_doc(&self) -> CandidateDoc {
        let values = match &self.exact {
            Some(ex) => ex
                .iter()
                .map(|(w, m)| (format_symbols(self.alphabet(), w), CandidateValue::Exact(m.to_expr())))
                .collect(),
            None => self
                .h
                .entries()
                .map(|(w, v)| (format_symbols(self.alphabet(), &w), CandidateValue::Float(v)))
                .collect(),
        };
        CandidateDoc {
            range: self.range(),
            values,
        }
    }

    /// Exact when every value is an expression string.
    pub fn from_doc(doc: &CandidateDoc, alphabet: &[String]) -> Result<Self> {
        let mut floats = Vec::new();
        let mut exact = BTreeMap::new();
        let mut all_exact = true;
        for (key, v) in &doc.values {
            let w = Word(parse_symbols(alphabet, key)?);
            match v {
                CandidateValue::Float(x) => {
                    all_exact = false;
                    floats.push((w, *x));
                }
                CandidateValue::Exact(text) => {
                    let m = LogMonomial::parse_expr(text).ok_or_else(|| {
                        Error::InvalidPotential(format!("cannot parse value `{text}` on `{key}`"))
                    })?;
                    floats.push((w.clone(), m.to_f64()));
                    exact.insert(w, m);
                }
            }
        }
        let h = LocallyConstantPotential::on_words(alphabet.to_vec(), doc.range, floats)?;
        Ok(Candidate {
            h,
            exact: all_exact.then_some(exact),
        })
    }
}

impl Serialize for Candidate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}
