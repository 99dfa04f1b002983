//! Per-depth tables of a sequence `{log f_n}` on cylinders, and the
//! sequence-level analyses run on them.

mod analysis;
mod build;

pub use analysis::{
    check_d2, check_subadditive, defect_profile, partition_sum, partition_sum_exact, pressure_estimate,
    D2Entry, D2Report, DefectEntry, DefectProfile, GrowthFlag, PressureEstimate, SplitWitness, SubadditivityReport,
};
pub use build::{additive_table, build_g_table, build_g_table_with, NumericMode, MAX_TABLE_WORDS};

use std::collections::BTreeMap;

use num::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shift::{format_symbols, parse_symbols, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    /// Fiber sums `g_n` of a factor map and potential.
    Relative,
    /// `exp(sup S_n f)` of a potential on its own shift.
    Additive,
    /// Supplied directly.
    Custom,
}

/// Words of one length, sorted by code, with their log values.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub codes: Vec<u64>,
    pub logs: Vec<f64>,
    pub counts: Option<Vec<BigUint>>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn find(&self, code: u64) -> Option<usize> {
        self.codes.binary_search(&code).ok()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeqTable {
    kind: TableKind,
    alphabet: Vec<String>,
    radix: u64,
    levels: Vec<Level>,
    log_variation: Vec<f64>,
}

/// JSON form: `{ "alphabet", "kind", "tables": {depth: {word: log}}, "counts"?, "log_variation"? }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableDoc {
    pub alphabet: Vec<String>,
    pub kind: TableKind,
    pub tables: BTreeMap<usize, BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<usize, BTreeMap<String, String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log_variation: Vec<f64>,
}

pub(crate) fn radix_for(alphabet_len: usize) -> u64 {
    alphabet_len.max(2) as u64
}

pub(crate) fn check_code_width(radix: u64, depth: usize) -> Result<()> {
    let fits = (0..depth).try_fold(1u128, |acc, _| {
        let next = acc * radix as u128;
        (next <= u64::MAX as u128).then_some(next)
    });
    if fits.is_none() {
        return Err(Error::CapExceeded(format!(
            "words of length {depth} over {radix} symbols do not fit a 64-bit code"
        )));
    }
    Ok(())
}

impl SeqTable {
    pub(crate) fn from_levels(
        kind: TableKind,
        alphabet: Vec<String>,
        levels: Vec<Level>,
        log_variation: Vec<f64>,
    ) -> Self {
        let radix = radix_for(alphabet.len());
        SeqTable {
            kind,
            alphabet,
            radix,
            levels,
            log_variation,
        }
    }

    /// Table from explicit per-depth entries. Depth `n` entries must be
    /// words of length `n`; every depth from 1 to the maximum must appear.
    pub fn from_words(
        kind: TableKind,
        alphabet: Vec<String>,
        depths: Vec<Vec<(Word, f64)>>,
        counts: Option<Vec<Vec<BigUint>>>,
    ) -> Result<Self> {
        let radix = radix_for(alphabet.len());
        check_code_width(radix, depths.len())?;
        if counts.as_ref().is_some_and(|c| c.len() != depths.len()) {
            return Err(Error::InvalidArgument("counts must cover every depth".into()));
        }
        let mut levels = Vec::with_capacity(depths.len());
        for (i, entries) in depths.into_iter().enumerate() {
            let n = i + 1;
            let level_counts = counts.as_ref().map(|c| &c[i]);
            if level_counts.is_some_and(|c| c.len() != entries.len()) {
                return Err(Error::InvalidArgument(format!("count list at depth {n} has the wrong length")));
            }
            let mut rows: Vec<(u64, f64, Option<BigUint>)> = Vec::with_capacity(entries.len());
            for (j, (w, v)) in entries.into_iter().enumerate() {
                if w.len() != n || w.iter().any(|&s| s >= alphabet.len()) {
                    return Err(Error::InvalidArgument(format!("entry {:?} does not belong at depth {n}", w.0)));
                }
                if v.is_nan() || v == f64::INFINITY {
                    return Err(Error::InvalidArgument(format!("bad log value {v} at depth {n}")));
                }
                let code = w.iter().fold(0u64, |acc, &s| acc * radix + s as u64);
                rows.push((code, v, level_counts.map(|c| c[j].clone())));
            }
            rows.sort_by_key(|r| r.0);
            if rows.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidArgument(format!("duplicate word at depth {n}")));
            }
            let codes = rows.iter().map(|r| r.0).collect();
            let logs = rows.iter().map(|r| r.1).collect();
            let cs = level_counts.map(|_| rows.into_iter().map(|r| r.2.expect("present")).collect());
            levels.push(Level { codes, logs, counts: cs });
        }
        Ok(SeqTable {
            kind,
            alphabet,
            radix,
            levels,
            log_variation: Vec::new(),
        })
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn radix(&self) -> u64 {
        self.radix
    }

    pub fn depth_max(&self) -> usize {
        self.levels.len()
    }

    /// `log M_n` of the underlying potential, `n = 1..`, when known.
    pub fn log_variation(&self) -> &[f64] {
        &self.log_variation
    }

    pub fn log_variation_at(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.log_variation.get(n - 1).copied().unwrap_or(0.0)
    }

    pub fn set_log_variation(&mut self, v: Vec<f64>) {
        self.log_variation = v;
    }

    /// Counts are present at every depth.
    pub fn is_exact(&self) -> bool {
        !self.levels.is_empty() && self.levels.iter().all(|l| l.counts.is_some())
    }

    pub fn level(&self, n: usize) -> Result<&Level> {
        if n == 0 || n > self.levels.len() {
            return Err(Error::DepthUnavailable {
                requested: n,
                available: self.levels.len(),
            });
        }
        Ok(&self.levels[n - 1])
    }

    pub fn code(&self, word: &[usize]) -> Option<u64> {
        if word.iter().any(|&s| s >= self.alphabet.len()) {
            return None;
        }
        Some(word.iter().fold(0u64, |acc, &s| acc * self.radix + s as u64))
    }

    pub fn decode(&self, mut code: u64, n: usize) -> Word {
        let mut w = vec![0; n];
        for slot in w.iter_mut().rev() {
            *slot = (code % self.radix) as usize;
            code /= self.radix;
        }
        Word(w)
    }

    pub fn words(&self, n: usize) -> Result<Vec<Word>> {
        Ok(self.level(n)?.codes.iter().map(|&c| self.decode(c, n)).collect())
    }

    pub fn index(&self, word: &[usize]) -> Option<usize> {
        let level = self.levels.get(word.len().checked_sub(1)?)?;
        level.find(self.code(word)?)
    }

    pub fn log_value(&self, word: &[usize]) -> Option<f64> {
        let i = self.index(word)?;
        Some(self.levels[word.len() - 1].logs[i])
    }

    pub fn count(&self, word: &[usize]) -> Option<&BigUint> {
        let i = self.index(word)?;
        self.levels[word.len() - 1].counts.as_ref().map(|c| &c[i])
    }

    /// Contiguous index range of depth-`m` words that start with the depth-`n`
    /// word of code `prefix` (`m >= n`).
    pub(crate) fn extension_range(&self, prefix: u64, n: usize, m: usize) -> std::ops::Range<usize> {
        let level = &self.levels[m - 1];
        let span = self.radix.pow((m - n) as u32);
        let lo = prefix * span;
        let hi = lo + span;
        let a = level.codes.partition_point(|&c| c < lo);
        let b = level.codes.partition_point(|&c| c < hi);
        a..b
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        parse_symbols(&self.alphabet, text).map(Word)
    }

    pub fn format_word(&self, word: &[usize]) -> String {
        format_symbols(&self.alphabet, word)
    }

    /// Copy truncated to depth `n`.
    pub fn truncated(&self, n: usize) -> SeqTable {
        let mut t = self.clone();
        t.levels.truncate(n);
        t.log_variation.truncate(n);
        t
    }

    pub fn to_doc(&self) -> TableDoc {
        let mut tables = BTreeMap::new();
        let mut counts = BTreeMap::new();
        for (i, level) in self.levels.iter().enumerate() {
            let n = i + 1;
            let mut t = BTreeMap::new();
            let mut c = BTreeMap::new();
            for (j, &code) in level.codes.iter().enumerate() {
                let key = self.format_word(&self.decode(code, n));
                if let Some(cs) = &level.counts {
                    c.insert(key.clone(), cs[j].to_string());
                }
                t.insert(key, level.logs[j]);
            }
            tables.insert(n, t);
            if level.counts.is_some() {
                counts.insert(n, c);
            }
        }
        TableDoc {
            alphabet: self.alphabet.clone(),
            kind: self.kind,
            tables,
            counts: self.is_exact().then_some(counts),
            log_variation: self.log_variation.clone(),
        }
    }

    pub fn from_doc(doc: &TableDoc) -> Result<Self> {
        let depth = doc.tables.keys().copied().max().unwrap_or(0);
        if doc.tables.keys().copied().ne(1..=depth) {
            return Err(Error::InvalidArgument("table depths must run 1..=N without gaps".into()));
        }
        let mut depths = Vec::with_capacity(depth);
        let mut all_counts = Vec::with_capacity(depth);
        for (&n, entries) in &doc.tables {
            let mut level = Vec::with_capacity(entries.len());
            let mut cs = Vec::with_capacity(entries.len());
            for (key, &v) in entries {
                let w = Word(parse_symbols(&doc.alphabet, key)?);
                if let Some(counts) = &doc.counts {
                    let text = counts
                        .get(&n)
                        .and_then(|m| m.get(key))
                        .ok_or_else(|| Error::InvalidArgument(format!("missing count for `{key}`")))?;
                    let c: BigUint = text
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad count `{text}`")))?;
                    cs.push(c);
                }
                level.push((w, v));
            }
            depths.push(level);
            all_counts.push(cs);
        }
        let mut t = SeqTable::from_words(
            doc.kind,
            doc.alphabet.clone(),
            depths,
            doc.counts.as_ref().map(|_| all_counts),
        )?;
        t.log_variation = doc.log_variation.clone();
        Ok(t)
    }
}
