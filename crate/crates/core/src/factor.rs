//! One-block factor maps `π: X → Y`. The image `Y` is never given on its own;
//! its language is read off `π(B_n(X))` through the subset construction.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use num::{BigRational, BigUint, One};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::MarkovMeasure;
use crate::par;
use crate::shift::{
    format_symbols, is_least_rotation, parse_symbols, primitive_period, PeriodicPoint, Sft,
    SftDoc, Word,
};

/// JSON form: `{ "domain": <Sft doc>, "map": {"1": "a", "2": "a", "3": "b"} }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorDoc {
    pub domain: SftDoc,
    pub map: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneBlockFactor {
    domain: Sft,
    map: Vec<usize>,
    target: Vec<String>,
    preimages: Vec<Vec<usize>>,
}

/// Domain symbols that can be current after reading an image word.
pub type Frontier = Vec<usize>;

impl OneBlockFactor {
    pub fn new(domain: Sft, map: Vec<usize>, target: Vec<String>) -> Result<Self> {
        if map.len() != domain.len() {
            return Err(Error::InvalidArgument(format!(
                "symbol map has {} entries for {} domain symbols",
                map.len(),
                domain.len()
            )));
        }
        let mut preimages = vec![Vec::new(); target.len()];
        for (s, &t) in map.iter().enumerate() {
            let slot = preimages.get_mut(t).ok_or_else(|| {
                Error::InvalidArgument(format!("image index {t} outside target alphabet"))
            })?;
            slot.push(s);
        }
        if let Some(t) = preimages.iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!(
                "symbol map is not onto: `{}` has no preimage",
                target[t]
            )));
        }
        Ok(OneBlockFactor {
            domain,
            map,
            target,
            preimages,
        })
    }

    pub fn identity(domain: Sft) -> Self {
        let target = domain.alphabet().to_vec();
        let map = (0..domain.len()).collect();
        OneBlockFactor::new(domain, map, target).expect("identity is onto")
    }

    /// Map given by symbol names; the target alphabet is the sorted set of images.
    pub fn from_names(domain: Sft, names: &BTreeMap<String, String>) -> Result<Self> {
        let target: Vec<String> = names.values().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let mut map = vec![usize::MAX; domain.len()];
        for (src, dst) in names {
            let s = domain.symbol(src)?;
            map[s] = target.iter().position(|t| t == dst).expect("target built from map");
        }
        if let Some(s) = map.iter().position(|&t| t == usize::MAX) {
            return Err(Error::InvalidArgument(format!(
                "symbol map misses domain symbol `{}`",
                domain.alphabet()[s]
            )));
        }
        OneBlockFactor::new(domain, map, target)
    }

    pub fn from_doc(doc: &FactorDoc) -> Result<Self> {
        Self::from_names(Sft::from_doc(&doc.domain)?, &doc.map)
    }

    pub fn to_doc(&self) -> FactorDoc {
        FactorDoc {
            domain: self.domain.to_doc(),
            map: self
                .map
                .iter()
                .enumerate()
                .map(|(s, &t)| (self.domain.alphabet()[s].clone(), self.target[t].clone()))
                .collect(),
        }
    }

    pub fn domain(&self) -> &Sft {
        &self.domain
    }

    pub fn target_alphabet(&self) -> &[String] {
        &self.target
    }

    pub fn symbol_map(&self) -> &[usize] {
        &self.map
    }

    pub fn preimages(&self, target_symbol: usize) -> &[usize] {
        &self.preimages[target_symbol]
    }

    pub fn project(&self, word: &[usize]) -> Word {
        Word(word.iter().map(|&s| self.map[s]).collect())
    }

    pub fn parse_image_word(&self, text: &str) -> Result<Word> {
        parse_symbols(&self.target, text).map(Word)
    }

    pub fn format_image_word(&self, word: &[usize]) -> String {
        format_symbols(&self.target, word)
    }

    pub fn start_frontier(&self, b: usize) -> Frontier {
        self.preimages[b].clone()
    }

    pub fn step_frontier(&self, frontier: &[usize], b: usize) -> Frontier {
        self.preimages[b]
            .iter()
            .copied()
            .filter(|&t| frontier.iter().any(|&s| self.domain.allowed(s, t)))
            .collect()
    }

    /// Frontier after reading `y`; empty iff `y ∉ B(Y)`.
    pub fn frontier(&self, y: &[usize]) -> Frontier {
        let Some((&first, rest)) = y.split_first() else {
            return (0..self.domain.len()).collect();
        };
        if first >= self.target.len() {
            return Vec::new();
        }
        let mut f = self.start_frontier(first);
        for &b in rest {
            if b >= self.target.len() || f.is_empty() {
                return Vec::new();
            }
            f = self.step_frontier(&f, b);
        }
        f
    }

    pub fn image_contains(&self, y: &[usize]) -> bool {
        y.is_empty() || !self.frontier(y).is_empty()
    }

    fn image_dfs(&self, buf: &mut Vec<usize>, frontier: &[usize], n: usize, visit: &mut impl FnMut(&[usize])) {
        if buf.len() == n {
            visit(buf);
            return;
        }
        for b in 0..self.target.len() {
            let next = self.step_frontier(frontier, b);
            if !next.is_empty() {
                buf.push(b);
                self.image_dfs(buf, &next, n, visit);
                buf.pop();
            }
        }
    }

    /// Visits `B_n(Y)` in lexicographic order.
    pub fn for_each_image_block(&self, n: usize, mut visit: impl FnMut(&[usize])) {
        if n == 0 {
            visit(&[]);
            return;
        }
        let mut buf = Vec::with_capacity(n);
        for b in 0..self.target.len() {
            let f = self.start_frontier(b);
            buf.push(b);
            self.image_dfs(&mut buf, &f, n, &mut visit);
            buf.pop();
        }
    }

    /// `B_n(Y) = π(B_n(X))`, deduplicated and sorted.
    pub fn image_blocks(&self, n: usize) -> Vec<Word> {
        let mut out = Vec::new();
        self.for_each_image_block(n, |w| out.push(Word(w.to_vec())));
        out
    }

    /// `|B_n(Y)|` for `n = 0..=depth`, by counting paths in the subset automaton.
    pub fn count_image_blocks(&self, depth: usize) -> Vec<BigUint> {
        let mut out = vec![BigUint::one()];
        let mut layer: HashMap<Frontier, BigUint> = HashMap::new();
        for b in 0..self.target.len() {
            *layer.entry(self.start_frontier(b)).or_default() += 1u32;
        }
        for n in 1..=depth {
            out.push(layer.values().sum());
            if n == depth {
                break;
            }
            let mut next: HashMap<Frontier, BigUint> = HashMap::new();
            for (f, c) in &layer {
                for b in 0..self.target.len() {
                    let g = self.step_frontier(f, b);
                    if !g.is_empty() {
                        *next.entry(g).or_default() += c;
                    }
                }
            }
            layer = next;
        }
        out
    }

    /// All `u ∈ B_n(X)` with `π(u) = y`, lexicographic; empty iff `y ∉ B_n(Y)`.
    pub fn fiber_words(&self, y: &[usize]) -> Vec<Word> {
        let mut out = Vec::new();
        if y.iter().any(|&b| b >= self.target.len()) {
            return out;
        }
        if y.is_empty() {
            out.push(Word::empty());
            return out;
        }
        let mut buf = Vec::with_capacity(y.len());
        fn dfs(pi: &OneBlockFactor, y: &[usize], buf: &mut Vec<usize>, out: &mut Vec<Word>) {
            let t = buf.len();
            if t == y.len() {
                out.push(Word(buf.clone()));
                return;
            }
            for &s in pi.preimages(y[t]) {
                if buf.last().is_none_or(|&p| pi.domain.allowed(p, s)) {
                    buf.push(s);
                    dfs(pi, y, buf, out);
                    buf.pop();
                }
            }
        }
        dfs(self, y, &mut buf, &mut out);
        out
    }

    /// Groups `B_n(X)` by image word.
    pub fn fiber_table(&self, n: usize) -> FiberTable {
        let firsts: Vec<usize> = (0..self.domain.len()).collect();
        let chunks = par::map(&firsts, |&a| {
            let mut local: BTreeMap<Word, Vec<Word>> = BTreeMap::new();
            if n == 0 {
                return local;
            }
            self.domain.for_each_extension(&[a], n, |u| {
                local.entry(self.project(u)).or_default().push(Word(u.to_vec()));
            });
            local
        });
        let mut fibers: BTreeMap<Word, Vec<Word>> = BTreeMap::new();
        if n == 0 {
            fibers.insert(Word::empty(), vec![Word::empty()]);
        }
        // chunks come in first-symbol order, so each fiber list stays sorted
        for chunk in chunks {
            for (y, us) in chunk {
                fibers.entry(y).or_default().extend(us);
            }
        }
        FiberTable { depth: n, fibers }
    }

    /// Whether `block^∞ ∈ Y`.
    pub fn image_contains_periodic(&self, block: &[usize]) -> bool {
        if block.is_empty() || block.iter().any(|&b| b >= self.target.len()) {
            return false;
        }
        let mut f = self.frontier(block);
        let mut seen: HashSet<Frontier> = HashSet::new();
        while !f.is_empty() {
            if !seen.insert(f.clone()) {
                return true;
            }
            for &b in block {
                f = self.step_frontier(&f, b);
                if f.is_empty() {
                    return false;
                }
            }
        }
        false
    }

    /// Periodic orbits of `Y` with primitive period `<= max_period`, one
    /// least-rotation block per orbit.
    pub fn image_periodic_points(&self, max_period: usize) -> Vec<PeriodicPoint> {
        let mut out = Vec::new();
        for q in 1..=max_period {
            self.for_each_image_block(q, |b| {
                if primitive_period(b) == q && is_least_rotation(b) && self.image_contains_periodic(b) {
                    out.push(PeriodicPoint {
                        block: Word(b.to_vec()),
                    });
                }
            });
        }
        out
    }

    fn check_measure(&self, mu: &MarkovMeasure) -> Result<()> {
        if mu.alphabet() != self.domain.alphabet() {
            return Err(Error::AlphabetMismatch(
                "measure alphabet differs from the factor's domain".into(),
            ));
        }
        Ok(())
    }

    /// `πμ[y] = Σ_{π(u) = y} μ[u]`, floating point with compensated sums.
    pub fn pushforward_cylinder(&self, mu: &MarkovMeasure, y: &[usize]) -> Result<f64> {
        self.check_measure(mu)?;
        if y.iter().any(|&b| b >= self.target.len()) {
            return Ok(0.0);
        }
        let sets: Vec<&[usize]> = y.iter().map(|&b| self.preimages(b)).collect();
        Ok(mu.mass_over(&sets))
    }

    /// Exact `πμ[y]`; requires rational measure data.
    pub fn pushforward_cylinder_exact(&self, mu: &MarkovMeasure, y: &[usize]) -> Result<BigRational> {
        self.check_measure(mu)?;
        if y.iter().any(|&b| b >= self.target.len()) {
            return Ok(num::Zero::zero());
        }
        let sets: Vec<&[usize]> = y.iter().map(|&b| self.preimages(b)).collect();
        mu.mass_over_exact(&sets)
    }
}

/// `E_n`-style fiber lists: every `u ∈ B_n(X)` grouped by `π(u)`.
#[derive(Clone, Debug)]
pub struct FiberTable {
    pub depth: usize,
    pub fibers: BTreeMap<Word, Vec<Word>>,
}

impl FiberTable {
    pub fn fiber(&self, y: &[usize]) -> &[Word] {
        self.fibers.get(&Word(y.to_vec())).map_or(&[], Vec::as_slice)
    }

    pub fn image_words(&self) -> impl Iterator<Item = &Word> {
        self.fibers.keys()
    }

    pub fn total_words(&self) -> usize {
        self.fibers.values().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn collapse() -> OneBlockFactor {
        OneBlockFactor::new(Sft::full(3), vec![0, 0, 1], vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn image_blocks_examples() {
        let id = OneBlockFactor::identity(Sft::golden_mean());
        assert_eq!(id.image_blocks(2).len(), 3);
        let c = collapse();
        assert_eq!(c.image_blocks(2).len(), 4);
        let to_point = OneBlockFactor::new(Sft::full(2), vec![0, 0], vec!["a".into()]).unwrap();
        assert_eq!(to_point.image_blocks(5), vec![Word(vec![0; 5])]);
    }

    #[test]
    fn image_blocks_match_projection_of_domain_language() {
        let sft = Sft::new(
            (1..=4).map(|i| i.to_string()).collect(),
            vec![
                vec![0, 1, 1, 0],
                vec![1, 0, 0, 1],
                vec![0, 1, 0, 1],
                vec![1, 1, 1, 0],
            ],
        )
        .unwrap();
        let pi = OneBlockFactor::new(sft.clone(), vec![0, 1, 0, 1], vec!["x".into(), "y".into()]).unwrap();
        for n in 0..7 {
            let brute: BTreeSet<Word> = sft.enumerate_blocks(n).iter().map(|u| pi.project(u)).collect();
            assert_eq!(pi.image_blocks(n), brute.into_iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn fibers() {
        let c = collapse();
        let ab = c.parse_image_word("ab").unwrap();
        let fib = c.fiber_words(&ab);
        assert_eq!(fib, vec![Word(vec![0, 2]), Word(vec![1, 2])]);
        assert_eq!(c.fiber_words(&[0; 6]).len(), 64);
        let id = OneBlockFactor::identity(Sft::golden_mean());
        assert_eq!(id.fiber_words(&[0, 1, 0]), vec![Word(vec![0, 1, 0])]);
        assert!(id.fiber_words(&[1, 1]).is_empty());
    }

    #[test]
    fn fiber_table_partitions_domain_language() {
        let c = collapse();
        for n in 0..6 {
            let t = c.fiber_table(n);
            assert_eq!(t.total_words(), 3usize.pow(n as u32));
            for y in t.image_words() {
                assert_eq!(t.fiber(y), c.fiber_words(y).as_slice());
            }
        }
    }

    #[test]
    fn periodic_images() {
        let c = collapse();
        // image is the full 2-shift: orbits of period <= 3 are 2 + 1 + 2
        assert_eq!(c.image_periodic_points(3).len(), 5);
        let g = OneBlockFactor::identity(Sft::golden_mean());
        assert!(!g.image_contains_periodic(&[1]));
        assert!(g.image_contains_periodic(&[0, 1]));
        // a 2-cycle mapped onto a single symbol yields a fixed point
        let cyc = Sft::new(vec!["p".into(), "q".into()], vec![vec![0, 1], vec![1, 0]]).unwrap();
        let onto = OneBlockFactor::new(cyc, vec![0, 0], vec!["a".into()]).unwrap();
        assert_eq!(onto.image_periodic_points(2).len(), 1);
    }

    #[test]
    fn image_counts_match_enumeration() {
        let sft = Sft::golden_mean();
        let pi = OneBlockFactor::new(sft, vec![0, 0], vec!["a".into()]).unwrap();
        assert!(pi.count_image_blocks(5).iter().all(|c| *c == BigUint::one()));
        let c = collapse();
        let counts = c.count_image_blocks(6);
        for (n, k) in counts.iter().enumerate() {
            assert_eq!(*k, BigUint::from(c.image_blocks(n).len()));
        }
    }

    #[test]
    fn rejects_non_surjective_maps() {
        assert!(OneBlockFactor::new(Sft::full(2), vec![0, 0], vec!["a".into(), "b".into()]).is_err());
        let mut names = BTreeMap::new();
        names.insert("1".to_string(), "a".to_string());
        assert!(OneBlockFactor::from_names(Sft::full(2), &names).is_err());
    }
}
