//! Stationary Markov measures of any order, stored as one-step chains on
//! `k`-block states.

use std::collections::BTreeMap;

use num::{BigRational, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{parse_rational, rational_to_f64};
use crate::shift::{format_symbols, parse_symbols, Sft, Word};

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

/// A state given either as a concatenated string (`"ab"`) or as symbol names.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateKey {
    Symbols(Vec<String>),
    Text(String),
}

/// A probability given as a JSON number or as an exact `"p/q"` string.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prob {
    Number(f64),
    Text(String),
}

/// JSON form: `{ "order": k, "states": [...], "P": [[...]], "pi": [...], "exact": bool }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkovMeasureDoc {
    pub order: usize,
    pub states: Vec<StateKey>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<Prob>>,
    pub pi: Vec<Prob>,
    #[serde(default)]
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
struct ExactData {
    p: Vec<Vec<BigRational>>,
    pi: Vec<BigRational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovMeasure {
    alphabet: Vec<String>,
    order: usize,
    states: Vec<Word>,
    p: Vec<Vec<f64>>,
    pi: Vec<f64>,
    exact: Option<ExactData>,
    pred: Vec<Vec<usize>>,
    index: BTreeMap<Word, usize>,
}

/// Neumaier-compensated sum.
fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn overlaps(s: &[usize], t: &[usize]) -> bool {
    s[1..] == t[..t.len() - 1]
}

impl MarkovMeasure {
    fn validate_states(alphabet: &[String], order: usize, states: &[Word]) -> Result<()> {
        if order == 0 {
            return Err(Error::InvalidMeasure("order must be >= 1".into()));
        }
        if states.is_empty() {
            return Err(Error::InvalidMeasure("no states".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for s in states {
            if s.len() != order || s.iter().any(|&a| a >= alphabet.len()) {
                return Err(Error::InvalidMeasure(format!(
                    "state {:?} is not a {order}-block over the alphabet",
                    s.0
                )));
            }
            if !seen.insert(s.clone()) {
                return Err(Error::InvalidMeasure(format!(
                    "duplicate state `{}`",
                    format_symbols(alphabet, s)
                )));
            }
        }
        Ok(())
    }

    fn assemble(
        alphabet: Vec<String>,
        order: usize,
        states: Vec<Word>,
        p: Vec<Vec<f64>>,
        pi: Vec<f64>,
        exact: Option<ExactData>,
    ) -> Result<Self> {
        let n = states.len();
        if p.len() != n || p.iter().any(|row| row.len() != n) || pi.len() != n {
            return Err(Error::InvalidMeasure("matrix and vector sizes must match the state list".into()));
        }
        let mut pred = vec![Vec::new(); n];
        for (s, row) in p.iter().enumerate() {
            for (t, &x) in row.iter().enumerate() {
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(Error::InvalidMeasure(format!("bad transition probability {x}")));
                }
                if x > 0.0 {
                    if !overlaps(&states[s], &states[t]) {
                        return Err(Error::InvalidMeasure(format!(
                            "positive transition between non-overlapping states `{}` -> `{}`",
                            format_symbols(&alphabet, &states[s]),
                            format_symbols(&alphabet, &states[t])
                        )));
                    }
                    pred[t].push(s);
                }
            }
        }
        if let Some(ex) = &exact {
            for (s, row) in ex.p.iter().enumerate() {
                if row.iter().any(|x| x.is_negative()) {
                    return Err(Error::InvalidMeasure("negative probability".into()));
                }
                let sum: BigRational = row.iter().sum();
                if !sum.is_one() {
                    return Err(Error::InvalidMeasure(format!("row {s} sums to {sum}, not 1")));
                }
            }
            if ex.pi.iter().any(|x| x.is_negative()) || !ex.pi.iter().sum::<BigRational>().is_one() {
                return Err(Error::InvalidMeasure("stationary vector is not a probability vector".into()));
            }
            for t in 0..n {
                let lhs: BigRational = (0..n).map(|s| &ex.pi[s] * &ex.p[s][t]).sum();
                if lhs != ex.pi[t] {
                    return Err(Error::InvalidMeasure("pi is not stationary (exact check)".into()));
                }
            }
        } else {
            for (s, row) in p.iter().enumerate() {
                let sum = compensated_sum(row.iter().copied());
                if (sum - 1.0).abs() > ROW_TOL {
                    return Err(Error::InvalidMeasure(format!("row {s} sums to {sum}, not 1")));
                }
            }
            if pi.iter().any(|&x| !(x >= 0.0)) || (compensated_sum(pi.iter().copied()) - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidMeasure("stationary vector is not a probability vector".into()));
            }
            for t in 0..n {
                let lhs = compensated_sum((0..n).map(|s| pi[s] * p[s][t]));
                if (lhs - pi[t]).abs() > STATIONARY_TOL {
                    return Err(Error::InvalidMeasure(format!(
                        "pi is not stationary: residual {:e} at state {t}",
                        (lhs - pi[t]).abs()
                    )));
                }
            }
        }
        let index = states.iter().cloned().zip(0..).collect();
        Ok(MarkovMeasure {
            alphabet,
            order,
            states,
            p,
            pi,
            exact,
            pred,
            index,
        })
    }

    /// Floating-point chain with a given stationary vector.
    pub fn new(
        alphabet: Vec<String>,
        order: usize,
        states: Vec<Word>,
        p: Vec<Vec<f64>>,
        pi: Vec<f64>,
    ) -> Result<Self> {
        Self::validate_states(&alphabet, order, &states)?;
        Self::assemble(alphabet, order, states, p, pi, None)
    }

    /// Rational chain; every check is exact.
    pub fn new_exact(
        alphabet: Vec<String>,
        order: usize,
        states: Vec<Word>,
        p: Vec<Vec<BigRational>>,
        pi: Vec<BigRational>,
    ) -> Result<Self> {
        Self::validate_states(&alphabet, order, &states)?;
        let pf = p.iter().map(|r| r.iter().map(rational_to_f64).collect()).collect();
        let pif = pi.iter().map(rational_to_f64).collect();
        Self::assemble(alphabet, order, states, pf, pif, Some(ExactData { p, pi }))
    }

    /// Chain whose stationary vector is solved for; the chain must have a
    /// unique stationary law.
    pub fn from_transition(alphabet: Vec<String>, order: usize, states: Vec<Word>, p: Vec<Vec<f64>>) -> Result<Self> {
        let pi = stationary_f64(&p)?;
        Self::new(alphabet, order, states, p, pi)
    }

    pub fn from_transition_exact(
        alphabet: Vec<String>,
        order: usize,
        states: Vec<Word>,
        p: Vec<Vec<BigRational>>,
    ) -> Result<Self> {
        let pi = stationary_exact(&p)?;
        Self::new_exact(alphabet, order, states, p, pi)
    }

    pub fn bernoulli(alphabet: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let states = (0..alphabet.len()).map(|a| Word(vec![a])).collect();
        let p = vec![weights.clone(); weights.len()];
        Self::new(alphabet, 1, states, p, weights)
    }

    pub fn bernoulli_exact(alphabet: Vec<String>, weights: Vec<BigRational>) -> Result<Self> {
        let states = (0..alphabet.len()).map(|a| Word(vec![a])).collect();
        let p = vec![weights.clone(); weights.len()];
        Self::new_exact(alphabet, 1, states, p, weights)
    }

    pub fn from_doc(doc: &MarkovMeasureDoc, alphabet: &[String]) -> Result<Self> {
        let states = doc
            .states
            .iter()
            .map(|k| match k {
                StateKey::Text(t) => parse_symbols(alphabet, t).map(Word),
                StateKey::Symbols(names) => names
                    .iter()
                    .map(|n| {
                        alphabet
                            .iter()
                            .position(|a| a == n)
                            .ok_or_else(|| Error::UnknownSymbol(n.clone()))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Word),
            })
            .collect::<Result<Vec<_>>>()?;
        if doc.exact {
            let conv = |x: &Prob| -> Result<BigRational> {
                let text = match x {
                    Prob::Number(v) => v.to_string(),
                    Prob::Text(t) => t.clone(),
                };
                parse_rational(&text)
                    .ok_or_else(|| Error::InvalidMeasure(format!("`{text}` is not an exact rational")))
            };
            let p = doc
                .p
                .iter()
                .map(|r| r.iter().map(conv).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let pi = doc.pi.iter().map(conv).collect::<Result<Vec<_>>>()?;
            Self::new_exact(alphabet.to_vec(), doc.order, states, p, pi)
        } else {
            let conv = |x: &Prob| -> Result<f64> {
                match x {
                    Prob::Number(v) => Ok(*v),
                    Prob::Text(t) => parse_rational(t)
                        .map(|r| rational_to_f64(&r))
                        .ok_or_else(|| Error::InvalidMeasure(format!("`{t}` is not a number"))),
                }
            };
            let p = doc
                .p
                .iter()
                .map(|r| r.iter().map(conv).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            let pi = doc.pi.iter().map(conv).collect::<Result<Vec<_>>>()?;
            Self::new(alphabet.to_vec(), doc.order, states, p, pi)
        }
    }

    pub fn to_doc(&self) -> MarkovMeasureDoc {
        let states = self
            .states
            .iter()
            .map(|s| StateKey::Symbols(s.iter().map(|&a| self.alphabet[a].clone()).collect()))
            .collect();
        match &self.exact {
            Some(ex) => MarkovMeasureDoc {
                order: self.order,
                states,
                p: ex
                    .p
                    .iter()
                    .map(|r| r.iter().map(|x| Prob::Text(x.to_string())).collect())
                    .collect(),
                pi: ex.pi.iter().map(|x| Prob::Text(x.to_string())).collect(),
                exact: true,
            },
            None => MarkovMeasureDoc {
                order: self.order,
                states,
                p: self
                    .p
                    .iter()
                    .map(|r| r.iter().map(|&x| Prob::Number(x)).collect())
                    .collect(),
                pi: self.pi.iter().map(|&x| Prob::Number(x)).collect(),
                exact: false,
            },
        }
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn states(&self) -> &[Word] {
        &self.states
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Positive-mass states and transitions are allowable in `sft`.
    pub fn check_support(&self, sft: &Sft) -> Result<()> {
        if sft.alphabet() != self.alphabet.as_slice() {
            return Err(Error::AlphabetMismatch("measure and shift alphabets differ".into()));
        }
        for (s, st) in self.states.iter().enumerate() {
            if self.pi[s] > 0.0 && !sft.is_allowable(st) {
                return Err(Error::InvalidMeasure(format!(
                    "state `{}` carries mass but is not allowable",
                    sft.format_word(st)
                )));
            }
            for (t, &x) in self.p[s].iter().enumerate() {
                let last = *self.states[t].last().expect("states are nonempty");
                if x > 0.0 && !sft.allowed(*st.last().expect("states are nonempty"), last) {
                    return Err(Error::InvalidMeasure(format!(
                        "transition `{}` -> `{}` leaves the shift",
                        sft.format_word(st),
                        sft.format_word(&self.states[t])
                    )));
                }
            }
        }
        Ok(())
    }

    /// Mass of the set of words whose `i`-th symbol lies in `sets[i]`.
    pub fn mass_over(&self, sets: &[&[usize]]) -> f64 {
        let n = sets.len();
        if n == 0 {
            return 1.0;
        }
        let k = self.order;
        let fits = |s: &Word, upto: usize| (0..upto).all(|i| sets[i].contains(&s[i]));
        if n <= k {
            return compensated_sum(
                self.states
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| fits(s, n))
                    .map(|(i, _)| self.pi[i]),
            );
        }
        let mut alpha: Vec<f64> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| if fits(s, k) { self.pi[i] } else { 0.0 })
            .collect();
        for set in &sets[k..] {
            alpha = (0..self.states.len())
                .map(|t| {
                    if !set.contains(self.states[t].last().expect("nonempty")) {
                        return 0.0;
                    }
                    compensated_sum(self.pred[t].iter().map(|&s| alpha[s] * self.p[s][t]))
                })
                .collect();
        }
        compensated_sum(alpha)
    }

    /// Exact version of [`mass_over`](Self::mass_over); needs rational data.
    pub fn mass_over_exact(&self, sets: &[&[usize]]) -> Result<BigRational> {
        let ex = self
            .exact
            .as_ref()
            .ok_or_else(|| Error::InvalidMeasure("measure has no exact rational data".into()))?;
        let n = sets.len();
        if n == 0 {
            return Ok(BigRational::one());
        }
        let k = self.order;
        let fits = |s: &Word, upto: usize| (0..upto).all(|i| sets[i].contains(&s[i]));
        if n <= k {
            return Ok(self
                .states
                .iter()
                .enumerate()
                .filter(|(_, s)| fits(s, n))
                .map(|(i, _)| ex.pi[i].clone())
                .sum());
        }
        let mut alpha: Vec<BigRational> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| if fits(s, k) { ex.pi[i].clone() } else { BigRational::zero() })
            .collect();
        for set in &sets[k..] {
            alpha = (0..self.states.len())
                .map(|t| {
                    if !set.contains(self.states[t].last().expect("nonempty")) {
                        return BigRational::zero();
                    }
                    self.pred[t].iter().map(|&s| &alpha[s] * &ex.p[s][t]).sum()
                })
                .collect();
        }
        Ok(alpha.into_iter().sum())
    }

    pub fn cylinder(&self, u: &[usize]) -> f64 {
        if u.iter().any(|&a| a >= self.alphabet.len()) {
            return 0.0;
        }
        let sets: Vec<[usize; 1]> = u.iter().map(|&a| [a]).collect();
        let refs: Vec<&[usize]> = sets.iter().map(|s| s.as_slice()).collect();
        self.mass_over(&refs)
    }

    pub fn cylinder_exact(&self, u: &[usize]) -> Result<BigRational> {
        if u.iter().any(|&a| a >= self.alphabet.len()) {
            return Ok(BigRational::zero());
        }
        let k = self.order;
        let Some(ex) = self.exact.as_ref().filter(|_| u.len() >= k) else {
            let sets: Vec<[usize; 1]> = u.iter().map(|&a| [a]).collect();
            let refs: Vec<&[usize]> = sets.iter().map(|s| s.as_slice()).collect();
            return self.mass_over_exact(&refs);
        };
        // π(first block) · Π P along the word, reduced once at the end.
        let Some(mut s) = self.index.get(&u[..k]).copied() else {
            return Ok(BigRational::zero());
        };
        let mut numer = ex.pi[s].numer().clone();
        let mut denom = ex.pi[s].denom().clone();
        for i in 1..=u.len() - k {
            let Some(t) = self.index.get(&u[i..i + k]).copied() else {
                return Ok(BigRational::zero());
            };
            let x = &ex.p[s][t];
            if x.is_zero() {
                return Ok(BigRational::zero());
            }
            numer *= x.numer();
            denom *= x.denom();
            s = t;
        }
        Ok(BigRational::new(numer, denom))
    }

    /// Entropy rate `-Σ_i π_i Σ_j P_ij log P_ij`.
    pub fn entropy(&self) -> f64 {
        let h = compensated_sum(self.p.iter().enumerate().map(|(i, row)| {
            let inner = compensated_sum(row.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()));
            self.pi[i] * inner
        }));
        (-h).max(0.0)
    }
}

/// Solves `π P = π`, `Σ π = 1` by Gaussian elimination with partial pivoting.
fn stationary_f64(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = p.len();
    // rows: (P^T - I) with the last equation replaced by normalization
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| p[j][i] - if i == j { 1.0 } else { 0.0 }).collect();
            row.push(0.0);
            row
        })
        .collect();
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty range");
        if a[piv][col].abs() < 1e-13 {
            return Err(Error::InvalidMeasure("stationary distribution is not unique".into()));
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let factor = a[r][col] / a[col][col];
                if factor != 0.0 {
                    for c in col..=n {
                        a[r][c] -= factor * a[col][c];
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| (a[i][n] / a[i][i]).max(0.0)).collect())
}

fn stationary_exact(p: &[Vec<BigRational>]) -> Result<Vec<BigRational>> {
    let n = p.len();
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..n)
                .map(|j| {
                    let mut x = p[j][i].clone();
                    if i == j {
                        x -= BigRational::one();
                    }
                    x
                })
                .collect();
            row.push(BigRational::zero());
            row
        })
        .collect();
    a[n - 1] = vec![BigRational::one(); n + 1];
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::InvalidMeasure("stationary distribution is not unique".into()))?;
        a.swap(col, piv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = &a[r][col] / &a[col][col];
                for c in col..=n {
                    let sub = &factor * &a[col][c];
                    a[r][c] -= sub;
                }
            }
        }
    }
    Ok((0..n).map(|i| &a[i][n] / &a[i][i]).collect())
}
