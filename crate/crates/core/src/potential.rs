//! Locally constant potentials, their Birkhoff sums on cylinders, and the
//! variation constants `M_n`.
//!
//! Values are natural logarithms: the multiplicative sequence is
//! `f_n = exp(S_n f)`, and everything here is stored in log-space.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::shift::{format_symbols, parse_symbols, Sft, Word};

/// JSON form: `{ "range": r, "values": {"ab": -0.3, ...} }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialDoc {
    pub range: usize,
    pub values: BTreeMap<String, f64>,
}

/// `f(x) = values[x_1 … x_r]`, defined on a fixed set of `r`-words.
#[derive(Clone, Debug, PartialEq)]
pub struct LocallyConstantPotential {
    alphabet: Vec<String>,
    range: usize,
    radix: usize,
    values: Vec<f64>,
    defined: Vec<bool>,
}

fn code_of(radix: usize, word: &[usize]) -> usize {
    word.iter().fold(0, |acc, &s| acc * radix + s)
}

impl LocallyConstantPotential {
    /// Potential defined on exactly the given `r`-words.
    pub fn on_words(
        alphabet: Vec<String>,
        range: usize,
        entries: impl IntoIterator<Item = (Word, f64)>,
    ) -> Result<Self> {
        if range == 0 {
            return Err(Error::InvalidPotential("range must be >= 1".into()));
        }
        let radix = alphabet.len().max(1);
        let size = radix
            .checked_pow(range as u32)
            .filter(|&s| s <= 1 << 24)
            .ok_or_else(|| Error::CapExceeded(format!("potential range {range} too large")))?;
        let mut values = vec![0.0; size];
        let mut defined = vec![false; size];
        for (word, v) in entries {
            if word.len() != range || word.iter().any(|&s| s >= alphabet.len()) {
                return Err(Error::InvalidPotential(format!(
                    "word {:?} is not a {range}-word over the alphabet",
                    word.0
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidPotential(format!(
                    "non-finite value on `{}`",
                    format_symbols(&alphabet, &word)
                )));
            }
            let c = code_of(radix, &word);
            if defined[c] {
                return Err(Error::InvalidPotential(format!(
                    "duplicate value on `{}`",
                    format_symbols(&alphabet, &word)
                )));
            }
            values[c] = v;
            defined[c] = true;
        }
        Ok(LocallyConstantPotential {
            alphabet,
            range,
            radix,
            values,
            defined,
        })
    }

    /// Potential on `B_r(X)`; every allowable `r`-word must be given, and nothing else.
    pub fn on_sft(sft: &Sft, range: usize, entries: BTreeMap<Word, f64>) -> Result<Self> {
        if range == 0 {
            return Err(Error::InvalidPotential("range must be >= 1".into()));
        }
        let blocks = sft.enumerate_blocks(range);
        if blocks.len() != entries.len() || blocks.iter().any(|w| !entries.contains_key(w)) {
            let missing: Vec<String> = blocks
                .iter()
                .filter(|w| !entries.contains_key(*w))
                .map(|w| sft.format_word(w))
                .collect();
            return Err(Error::InvalidPotential(format!(
                "values must be given on exactly B_{range}(X); missing {missing:?}, {} extra",
                entries.keys().filter(|w| !sft.is_allowable(w)).count()
            )));
        }
        Self::on_words(sft.alphabet().to_vec(), range, entries)
    }

    pub fn from_fn(sft: &Sft, range: usize, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let entries = sft
            .enumerate_blocks(range)
            .into_iter()
            .map(|w| {
                let v = f(&w);
                (w, v)
            })
            .collect();
        Self::on_sft(sft, range, entries)
    }

    /// `f ≡ 0` with range 1.
    pub fn zero(sft: &Sft) -> Self {
        Self::from_fn(sft, 1, |_| 0.0).expect("zero potential is valid")
    }

    pub fn from_doc(doc: &PotentialDoc, sft: &Sft) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (key, &v) in &doc.values {
            let w = Word(parse_symbols(sft.alphabet(), key)?);
            if entries.insert(w, v).is_some() {
                return Err(Error::InvalidPotential(format!("duplicate key `{key}`")));
            }
        }
        Self::on_sft(sft, doc.range, entries)
    }

    pub fn to_doc(&self) -> PotentialDoc {
        PotentialDoc {
            range: self.range,
            values: self
                .entries()
                .map(|(w, v)| (format_symbols(&self.alphabet, &w), v))
                .collect(),
        }
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn range(&self) -> usize {
        self.range
    }

    /// Defined words with their values, in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (Word, f64)> + '_ {
        (0..self.values.len()).filter(|&c| self.defined[c]).map(|c| {
            let mut w = vec![0; self.range];
            let mut rest = c;
            for i in (0..self.range).rev() {
                w[i] = rest % self.radix;
                rest /= self.radix;
            }
            (Word(w), self.values[c])
        })
    }

    pub fn is_zero(&self) -> bool {
        self.entries().all(|(_, v)| v == 0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.entries().map(|(_, v)| v).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.entries().map(|(_, v)| v).fold(f64::INFINITY, f64::min)
    }

    /// Value on an `r`-window. Panics on undefined windows.
    pub fn value(&self, window: &[usize]) -> f64 {
        let c = code_of(self.radix, &window[..self.range]);
        assert!(self.defined[c], "potential undefined on window {window:?}");
        self.values[c]
    }

    pub fn try_value(&self, window: &[usize]) -> Option<f64> {
        if window.len() < self.range || window.iter().any(|&s| s >= self.alphabet.len()) {
            return None;
        }
        let c = code_of(self.radix, &window[..self.range]);
        self.defined[c].then(|| self.values[c])
    }

    /// `S_n f` on a point whose first `n + r - 1` symbols are `z`.
    pub fn window_sum(&self, z: &[usize], n: usize) -> f64 {
        assert!(z.len() + 1 >= n + self.range, "word too short for S_{n}");
        (0..n).map(|i| self.value(&z[i..i + self.range])).sum()
    }

    /// `S_q f` on the periodic point `block^∞`.
    pub fn periodic_sum(&self, block: &[usize]) -> f64 {
        let q = block.len();
        (0..q)
            .map(|i| {
                let w: Vec<usize> = (0..self.range).map(|j| block[(i + j) % q]).collect();
                self.value(&w)
            })
            .sum()
    }

    fn check_compatible(&self, sft: &Sft) -> Result<()> {
        if self.alphabet != sft.alphabet() {
            return Err(Error::AlphabetMismatch(
                "potential and shift use different alphabets".into(),
            ));
        }
        Ok(())
    }

    fn extremal_sum(&self, sft: &Sft, u: &[usize], pick_max: bool) -> Result<f64> {
        self.check_compatible(sft)?;
        if u.is_empty() {
            return Ok(0.0);
        }
        if !sft.is_allowable(u) {
            return Err(Error::NotAllowable(sft.format_word(u)));
        }
        let n = u.len();
        let mut best: Option<f64> = None;
        sft.for_each_extension(u, n + self.range - 1, |z| {
            let s = self.window_sum(z, n);
            best = Some(match best {
                None => s,
                Some(b) if pick_max => b.max(s),
                Some(b) => b.min(s),
            });
        });
        Ok(best.expect("one-step shifts extend every allowable word"))
    }

    /// `sup { S_n f(x) : x ∈ [u] }` with `n = |u|`.
    pub fn birkhoff_sup(&self, sft: &Sft, u: &[usize]) -> Result<f64> {
        self.extremal_sum(sft, u, true)
    }

    pub fn birkhoff_inf(&self, sft: &Sft, u: &[usize]) -> Result<f64> {
        self.extremal_sum(sft, u, false)
    }

    /// Sup and inf of the `r - 1` windows that run past a word ending in `state`,
    /// where `state` is that word's last `r - 1` symbols. Zero when `r = 1`.
    pub fn tail_bounds(&self, sft: &Sft, state: &[usize]) -> (f64, f64) {
        let k = self.range - 1;
        if k == 0 {
            return (0.0, 0.0);
        }
        debug_assert_eq!(state.len(), k);
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        sft.for_each_extension(state, 2 * k, |z| {
            let s = self.window_sum(z, k);
            hi = hi.max(s);
            lo = lo.min(s);
        });
        (hi, lo)
    }

    pub fn cylinder_sums(&self, sft: &Sft, n: usize) -> Result<CylinderSumTable> {
        self.check_compatible(sft)?;
        if n == 0 {
            return Err(Error::InvalidArgument("cylinder depth must be >= 1".into()));
        }
        let words = sft.enumerate_blocks(n);
        let bounds = par::map(&words, |u| {
            let hi = self.birkhoff_sup(sft, u).expect("enumerated words are allowable");
            let lo = self.birkhoff_inf(sft, u).expect("enumerated words are allowable");
            (hi, lo)
        });
        let (sup, inf) = bounds.into_iter().unzip();
        Ok(CylinderSumTable {
            depth: n,
            words,
            sup,
            inf,
        })
    }

    /// `log M_n`. For `n >= r - 1` the spread on a cylinder depends only on the
    /// last `r - 1` symbols, so the tail table decides it; shorter depths go
    /// through the full cylinder table.
    pub fn log_variation(&self, sft: &Sft, n: usize) -> Result<f64> {
        self.check_compatible(sft)?;
        if n == 0 {
            return Err(Error::InvalidArgument("variation depth must be >= 1".into()));
        }
        let k = self.range - 1;
        if k == 0 {
            return Ok(0.0);
        }
        if n < k {
            return Ok(self.cylinder_sums(sft, n)?.log_variation());
        }
        let states = sft.enumerate_blocks(k);
        Ok(states
            .iter()
            .map(|s| {
                let (hi, lo) = self.tail_bounds(sft, s);
                hi - lo
            })
            .fold(0.0, f64::max))
    }

    /// `log M_n` for `n = 1..=depth`.
    pub fn log_variation_profile(&self, sft: &Sft, depth: usize) -> Result<Vec<f64>> {
        (1..=depth).map(|n| self.log_variation(sft, n)).collect()
    }

    /// Smallest `S_i f` over `0 <= i <= k` and all points (with `S_0 f = 0`).
    pub fn min_partial_sum(&self, sft: &Sft, k: usize) -> f64 {
        let mut best = 0.0f64;
        for i in 1..=k {
            sft.for_each_block(i + self.range - 1, |z| {
                best = best.min(self.window_sum(z, i));
            });
        }
        best
    }
}

/// Per-cylinder sup/inf of `S_n f` (log-space).
#[derive(Clone, Debug)]
pub struct CylinderSumTable {
    pub depth: usize,
    pub words: Vec<Word>,
    pub sup: Vec<f64>,
    pub inf: Vec<f64>,
}

impl CylinderSumTable {
    pub fn log_variation(&self) -> f64 {
        self.sup
            .iter()
            .zip(&self.inf)
            .map(|(s, i)| s - i)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r2_on_full2() -> (Sft, LocallyConstantPotential) {
        let sft = Sft::full(2);
        let values = [0.3, -0.7, 1.1, 0.2];
        let f = LocallyConstantPotential::from_fn(&sft, 2, |w| values[w[0] * 2 + w[1]]).unwrap();
        (sft, f)
    }

    #[test]
    fn zero_potential_sums() {
        let g = Sft::golden_mean();
        let f = LocallyConstantPotential::zero(&g);
        for u in g.enumerate_blocks(4) {
            assert_eq!(f.birkhoff_sup(&g, &u).unwrap(), 0.0);
        }
        assert_eq!(f.log_variation(&g, 5).unwrap(), 0.0);
    }

    #[test]
    fn range_one_is_additive() {
        let g = Sft::golden_mean();
        let ln2 = std::f64::consts::LN_2;
        let f = LocallyConstantPotential::from_fn(&g, 1, |w| if w[0] == 0 { ln2 } else { 0.0 })
            .unwrap();
        let aba = g.parse_word("aba").unwrap();
        assert_eq!(f.birkhoff_sup(&g, &aba).unwrap(), 2.0 * ln2);
        assert!(f.birkhoff_sup(&g, &g.parse_word("abb").unwrap()).is_err());
        for n in 1..6 {
            assert_eq!(f.log_variation(&g, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn range_two_single_symbol_takes_max_over_extensions() {
        let (sft, f) = r2_on_full2();
        // u = "1": extensions 11 -> 0.3, 12 -> -0.7
        assert_eq!(f.birkhoff_sup(&sft, &[0]).unwrap(), 0.3);
        assert_eq!(f.birkhoff_inf(&sft, &[0]).unwrap(), -0.7);
        // u = "2": 21 -> 1.1, 22 -> 0.2
        assert_eq!(f.birkhoff_sup(&sft, &[1]).unwrap(), 1.1);
        // M_1 = exp(max spread) = exp(1.0)
        let table = f.cylinder_sums(&sft, 1).unwrap();
        assert!((table.log_variation() - 1.0).abs() < 1e-15);
        assert!((f.log_variation(&sft, 1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fast_variation_matches_cylinder_table() {
        let sft = Sft::golden_mean();
        let f = LocallyConstantPotential::from_fn(&sft, 3, |w| {
            (w[0] as f64) * 0.4 - (w[1] as f64) * 0.25 + (w[2] as f64) * 0.9
        })
        .unwrap();
        for n in 1..7 {
            let direct = f.cylinder_sums(&sft, n).unwrap().log_variation();
            let fast = f.log_variation(&sft, n).unwrap();
            assert!((direct - fast).abs() < 1e-12, "n={n}: {direct} vs {fast}");
            // bounded variation: log M_n <= (r - 1) (max f - min f)
            assert!(fast <= 2.0 * (f.max_value() - f.min_value()) + 1e-12);
        }
    }

    #[test]
    fn rejects_incomplete_or_extra_values() {
        let g = Sft::golden_mean();
        let mut entries = BTreeMap::new();
        entries.insert(Word(vec![0, 0]), 1.0);
        entries.insert(Word(vec![0, 1]), 1.0);
        assert!(LocallyConstantPotential::on_sft(&g, 2, entries.clone()).is_err());
        entries.insert(Word(vec![1, 0]), 1.0);
        assert!(LocallyConstantPotential::on_sft(&g, 2, entries.clone()).is_ok());
        entries.insert(Word(vec![1, 1]), 1.0);
        assert!(LocallyConstantPotential::on_sft(&g, 2, entries).is_err());
    }

    #[test]
    fn doc_round_trip() {
        let (sft, f) = r2_on_full2();
        let doc = f.to_doc();
        assert_eq!(doc.values["21"], 1.1);
        let back = LocallyConstantPotential::from_doc(&doc, &sft).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn periodic_sums() {
        let (_, f) = r2_on_full2();
        // (12)^∞: windows 12, 21
        assert!((f.periodic_sum(&[0, 1]) - (-0.7 + 1.1)).abs() < 1e-15);
        assert_eq!(f.window_sum(&[0, 1, 0], 2), -0.7 + 1.1);
    }
}
