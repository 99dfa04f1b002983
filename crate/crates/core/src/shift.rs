//! One-step shifts of finite type: language enumeration, periodic points and
//! the structural constants used by the detectors (irreducibility, weak
//! specification number, bridging words).

use std::collections::VecDeque;
use std::fmt;
use std::ops::Deref;

use num::{BigUint, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// A finite word over an alphabet, stored as symbol indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn concat(&self, other: &[usize]) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(other);
        Word(v)
    }
}

impl Deref for Word {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl std::borrow::Borrow<[usize]> for Word {
    fn borrow(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl From<&[usize]> for Word {
    fn from(v: &[usize]) -> Self {
        Word(v.to_vec())
    }
}

/// The point `(block)^∞`, with `block` in canonical (least-rotation) form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PeriodicPoint {
    pub block: Word,
}

impl PeriodicPoint {
    pub fn period(&self) -> usize {
        self.block.len()
    }

    /// The first `n` symbols of the point.
    pub fn prefix(&self, n: usize) -> Word {
        let q = self.block.len();
        Word((0..n).map(|i| self.block[i % q]).collect())
    }
}

/// Smallest `d` dividing `block.len()` such that `block` is a power of its
/// length-`d` prefix.
pub fn primitive_period(block: &[usize]) -> usize {
    let q = block.len();
    (1..=q)
        .find(|&d| q.is_multiple_of(d) && (d..q).all(|i| block[i] == block[i - d]))
        .unwrap_or(q)
}

pub fn is_least_rotation(block: &[usize]) -> bool {
    let q = block.len();
    (1..q).all(|s| {
        let rotated = block[s..].iter().chain(&block[..s]);
        block.iter().cmp(rotated) != std::cmp::Ordering::Greater
    })
}

/// Parses a word written as concatenated symbol names (greedy longest match).
pub fn parse_symbols(alphabet: &[String], text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let best = alphabet
            .iter()
            .enumerate()
            .filter(|(_, name)| !name.is_empty() && rest.starts_with(name.as_str()))
            .max_by_key(|(_, name)| name.len());
        match best {
            Some((i, name)) => {
                out.push(i);
                rest = &rest[name.len()..];
            }
            None => return Err(Error::UnknownSymbol(rest.to_string())),
        }
    }
    Ok(out)
}

pub fn format_symbols(alphabet: &[String], word: &[usize]) -> String {
    word.iter().map(|&s| alphabet[s].as_str()).collect()
}

/// JSON form: `{ "alphabet": [...], "transitions": [[0|1, ...], ...] }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SftDoc {
    pub alphabet: Vec<String>,
    pub transitions: Vec<Vec<u8>>,
}

/// A one-step shift of finite type given by a 0/1 transition matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct Sft {
    alphabet: Vec<String>,
    allowed: Vec<Vec<bool>>,
    successors: Vec<Vec<usize>>,
}

impl fmt::Debug for Sft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sft")
            .field("alphabet", &self.alphabet)
            .field("successors", &self.successors)
            .finish()
    }
}

impl Sft {
    pub fn new(alphabet: Vec<String>, transitions: Vec<Vec<u8>>) -> Result<Self> {
        let k = alphabet.len();
        if k == 0 {
            return Err(Error::InvalidSft("empty alphabet".into()));
        }
        for (i, name) in alphabet.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidSft("empty symbol name".into()));
            }
            if alphabet[..i].contains(name) {
                return Err(Error::InvalidSft(format!("duplicate symbol `{name}`")));
            }
        }
        if transitions.len() != k || transitions.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidSft(format!(
                "transition matrix must be {k}x{k}"
            )));
        }
        let mut allowed = vec![vec![false; k]; k];
        for (i, row) in transitions.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                allowed[i][j] = match e {
                    0 => false,
                    1 => true,
                    other => {
                        return Err(Error::InvalidSft(format!(
                            "transition entry {other} is not 0 or 1"
                        )))
                    }
                };
            }
        }
        for s in 0..k {
            let out = (0..k).any(|t| allowed[s][t]);
            let inc = (0..k).any(|t| allowed[t][s]);
            if !out || !inc {
                return Err(Error::InvalidSft(format!(
                    "symbol `{}` is stranded",
                    alphabet[s]
                )));
            }
        }
        let successors = allowed
            .iter()
            .map(|row| (0..k).filter(|&j| row[j]).collect())
            .collect();
        Ok(Sft {
            alphabet,
            allowed,
            successors,
        })
    }

    pub fn from_doc(doc: &SftDoc) -> Result<Self> {
        Sft::new(doc.alphabet.clone(), doc.transitions.clone())
    }

    pub fn to_doc(&self) -> SftDoc {
        SftDoc {
            alphabet: self.alphabet.clone(),
            transitions: self
                .allowed
                .iter()
                .map(|row| row.iter().map(|&b| b as u8).collect())
                .collect(),
        }
    }

    /// Full shift on symbols named `"1"`, `"2"`, ...
    pub fn full(k: usize) -> Self {
        let alphabet = (1..=k).map(|i| i.to_string()).collect();
        Sft::new(alphabet, vec![vec![1; k]; k]).expect("full shift is valid")
    }

    /// Alphabet `{a, b}` with `bb` forbidden.
    pub fn golden_mean() -> Self {
        Sft::new(
            vec!["a".into(), "b".into()],
            vec![vec![1, 1], vec![1, 0]],
        )
        .expect("golden mean shift is valid")
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphabet.is_empty()
    }

    pub fn allowed(&self, a: usize, b: usize) -> bool {
        self.allowed[a][b]
    }

    pub fn successors(&self, a: usize) -> &[usize] {
        &self.successors[a]
    }

    pub fn symbol(&self, name: &str) -> Result<usize> {
        self.alphabet
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        parse_symbols(&self.alphabet, text).map(Word)
    }

    pub fn format_word(&self, word: &[usize]) -> String {
        format_symbols(&self.alphabet, word)
    }

    pub fn is_allowable(&self, word: &[usize]) -> bool {
        word.iter().all(|&s| s < self.len()) && word.windows(2).all(|w| self.allowed[w[0]][w[1]])
    }

    /// Calls `visit` on every allowable word of length `n` in lexicographic order.
    pub fn for_each_block(&self, n: usize, mut visit: impl FnMut(&[usize])) {
        if n == 0 {
            visit(&[]);
            return;
        }
        let mut buf = Vec::with_capacity(n);
        for a in 0..self.len() {
            buf.push(a);
            self.extend_dfs(&mut buf, n, &mut visit);
            buf.pop();
        }
    }

    fn extend_dfs(&self, buf: &mut Vec<usize>, n: usize, visit: &mut impl FnMut(&[usize])) {
        if buf.len() == n {
            visit(buf);
            return;
        }
        let last = *buf.last().expect("nonempty prefix");
        for &b in &self.successors[last] {
            buf.push(b);
            self.extend_dfs(buf, n, visit);
            buf.pop();
        }
    }

    /// Allowable extensions of `prefix` to total length `n`, in lexicographic order.
    pub fn for_each_extension(&self, prefix: &[usize], n: usize, mut visit: impl FnMut(&[usize])) {
        if prefix.is_empty() {
            self.for_each_block(n, visit);
            return;
        }
        let mut buf = prefix.to_vec();
        if buf.len() >= n {
            visit(&buf[..n]);
            return;
        }
        self.extend_dfs(&mut buf, n, &mut visit);
    }

    /// `B_n(X)` in lexicographic order of symbol indices; `B_0 = {ε}`.
    pub fn enumerate_blocks(&self, n: usize) -> Vec<Word> {
        if n <= 1 {
            let mut out = Vec::new();
            self.for_each_block(n, |w| out.push(Word(w.to_vec())));
            return out;
        }
        let firsts: Vec<usize> = (0..self.len()).collect();
        par::map(&firsts, |&a| {
            let mut out = Vec::new();
            self.for_each_extension(&[a], n, |w| out.push(Word(w.to_vec())));
            out
        })
        .into_iter()
        .flatten()
        .collect()
    }

    pub fn adjacency_biguint(&self) -> Vec<Vec<BigUint>> {
        self.allowed
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&b| if b { BigUint::one() } else { BigUint::zero() })
                    .collect()
            })
            .collect()
    }

    /// `|B_n(X)|` as the entry sum of `A^(n-1)`.
    pub fn count_blocks(&self, n: usize) -> BigUint {
        if n == 0 {
            return BigUint::one();
        }
        let p = mat_pow(&self.adjacency_biguint(), n - 1);
        p.iter().flatten().sum()
    }

    /// `trace(A^q)`: number of points of period dividing `q`.
    pub fn trace_power(&self, q: usize) -> BigUint {
        let p = mat_pow(&self.adjacency_biguint(), q);
        (0..self.len()).map(|i| p[i][i].clone()).sum()
    }

    /// Shortest edge count `>= 1` from `a` to every symbol; `None` if unreachable.
    fn distances_from(&self, a: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        for &b in &self.successors[a] {
            if dist[b].is_none() {
                dist[b] = Some(1);
                queue.push_back(b);
            }
        }
        while let Some(s) = queue.pop_front() {
            let d = dist[s].expect("queued symbols have a distance");
            for &t in &self.successors[s] {
                if dist[t].is_none() {
                    dist[t] = Some(d + 1);
                    queue.push_back(t);
                }
            }
        }
        dist
    }

    /// Strong connectivity of the transition digraph.
    pub fn is_irreducible(&self) -> bool {
        (0..self.len()).all(|a| self.distances_from(a).iter().all(Option::is_some))
    }

    /// Smallest `p` such that any two allowable words can be joined by a
    /// bridge of length `<= p`; `None` iff the shift is reducible.
    pub fn weak_spec_number(&self) -> Option<usize> {
        let mut p = 0;
        for a in 0..self.len() {
            for d in self.distances_from(a) {
                p = p.max(d? - 1);
            }
        }
        Some(p)
    }

    /// Shortest `w` with `|w| <= max_gap` and `uwv` allowable, ties broken
    /// lexicographically.
    pub fn bridge(&self, u: &[usize], v: &[usize], max_gap: usize) -> Option<Word> {
        let (Some(&a), Some(&b)) = (u.last(), v.first()) else {
            return Some(Word::empty());
        };
        let k = self.len();
        // reach[t][s]: some path with exactly t edges leads from s to b
        let mut reach = vec![vec![false; k]; max_gap + 2];
        reach[0][b] = true;
        for t in 1..=max_gap + 1 {
            for s in 0..k {
                reach[t][s] = self.successors[s].iter().any(|&x| reach[t - 1][x]);
            }
        }
        let q = (0..=max_gap).find(|&q| reach[q + 1][a])?;
        let mut w = Vec::with_capacity(q);
        let mut cur = a;
        for remaining in (1..=q).rev() {
            let next = *self.successors[cur]
                .iter()
                .find(|&&x| reach[remaining][x])
                .expect("reachability table guarantees a successor");
            w.push(next);
            cur = next;
        }
        Some(Word(w))
    }

    /// All periodic orbits of primitive period `<= max_period`, one canonical
    /// block per orbit, sorted by period then block.
    pub fn periodic_points(&self, max_period: usize) -> Vec<PeriodicPoint> {
        let mut out = Vec::new();
        for q in 1..=max_period {
            self.for_each_block(q, |w| {
                if self.allowed[w[q - 1]][w[0]] && primitive_period(w) == q && is_least_rotation(w)
                {
                    out.push(PeriodicPoint {
                        block: Word(w.to_vec()),
                    });
                }
            });
        }
        out
    }
}

pub fn mat_mul(a: &[Vec<BigUint>], b: &[Vec<BigUint>]) -> Vec<Vec<BigUint>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut out = vec![vec![BigUint::zero(); m]; n];
    for i in 0..n {
        for (k, aik) in a[i].iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[k][j].is_zero() {
                    out[i][j] += aik * &b[k][j];
                }
            }
        }
    }
    out
}

pub fn mat_pow(a: &[Vec<BigUint>], mut e: usize) -> Vec<Vec<BigUint>> {
    let n = a.len();
    let mut result: Vec<Vec<BigUint>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigUint::one() } else { BigUint::zero() })
                .collect()
        })
        .collect();
    let mut base = a.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = mat_mul(&result, &base);
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul(&base, &base);
        }
    }
    result
}
