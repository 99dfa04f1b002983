//! Construction of fiber-sum tables
//! `g_n(y) = Σ_{u ∈ B_n(X), π(u) = y} exp(sup_{[u]} S_n f)`.
//!
//! The sup over a cylinder splits into the windows inside `u`, which a
//! forward recursion over `(r-1)`-block states accumulates one symbol at a
//! time, and the `r - 1` windows running past its end, which depend only on
//! the final state. So each image word costs one matrix-vector step from its
//! parent in the image trie, and no domain word is ever listed.

use std::collections::{BTreeMap, HashMap};

use num::{BigUint, Zero};

use crate::error::{Error, Result};
use crate::exact::ln_biguint;
use crate::factor::OneBlockFactor;
use crate::par;
use crate::potential::LocallyConstantPotential;
use crate::seq::{check_code_width, radix_for, Level, SeqTable, TableKind};
use crate::shift::Word;

/// Upper bound on the number of image words a table may hold.
pub const MAX_TABLE_WORDS: u64 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NumericMode {
    /// Exact counting when `f ≡ 0`, floating point otherwise.
    #[default]
    Auto,
    Exact,
    Float,
}

#[derive(Clone)]
enum Alpha {
    Float { vals: Vec<f64>, scale: f64 },
    Exact(Vec<BigUint>),
}

struct Engine<'a> {
    pi: &'a OneBlockFactor,
    f: &'a LocallyConstantPotential,
    exact: bool,
    radix: u64,
    /// Transitions grouped by the image of the appended symbol: `(s, t, e^w)`.
    steps: Vec<Vec<(usize, usize, f64)>>,
    tail: Vec<f64>,
    n_states: usize,
}

type Row = (u64, f64, Option<BigUint>);

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let ts: Vec<f64> = terms.collect();
    let m = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ts.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

impl Engine<'_> {
    fn value(&self, alpha: &Alpha) -> (f64, Option<BigUint>) {
        match alpha {
            Alpha::Float { vals, scale } => {
                let l = log_sum_exp(
                    vals.iter()
                        .zip(&self.tail)
                        .filter(|(v, _)| **v > 0.0)
                        .map(|(v, t)| v.ln() + t),
                );
                (scale + l, None)
            }
            Alpha::Exact(c) => {
                let total: BigUint = c.iter().sum();
                (ln_biguint(&total), Some(total))
            }
        }
    }

    fn step(&self, alpha: &Alpha, b: usize) -> Option<Alpha> {
        match alpha {
            Alpha::Float { vals, scale } => {
                let mut next = vec![0.0; self.n_states];
                for &(s, t, w) in &self.steps[b] {
                    if vals[s] > 0.0 {
                        next[t] += vals[s] * w;
                    }
                }
                let m = next.iter().copied().fold(0.0, f64::max);
                if m == 0.0 {
                    return None;
                }
                next.iter_mut().for_each(|v| *v /= m);
                Some(Alpha::Float {
                    vals: next,
                    scale: scale + m.ln(),
                })
            }
            Alpha::Exact(c) => {
                let mut next = vec![BigUint::zero(); self.n_states];
                let mut any = false;
                for &(s, t, _) in &self.steps[b] {
                    if !c[s].is_zero() {
                        next[t] += &c[s];
                        any = true;
                    }
                }
                any.then_some(Alpha::Exact(next))
            }
        }
    }

    /// Records descendants of `(code, alpha)` at depths `d+1..=depth` into
    /// `out[depth_index]`, in code order.
    fn dfs(&self, code: u64, alpha: &Alpha, d: usize, depth: usize, base: usize, out: &mut [Vec<Row>]) {
        if d == depth {
            return;
        }
        for b in 0..self.pi.target_alphabet().len() {
            if let Some(next) = self.step(alpha, b) {
                let c = code * self.radix + b as u64;
                let (l, cnt) = self.value(&next);
                out[d + 1 - base].push((c, l, cnt));
                self.dfs(c, &next, d + 1, depth, base, out);
            }
        }
    }
}

fn rows_to_level(mut rows: Vec<Row>, exact: bool) -> Level {
    rows.sort_by_key(|r| r.0);
    let codes = rows.iter().map(|r| r.0).collect();
    let logs = rows.iter().map(|r| r.1).collect();
    let counts = exact.then(|| rows.into_iter().map(|r| r.2.expect("exact rows carry counts")).collect());
    Level { codes, logs, counts }
}

pub fn build_g_table(pi: &OneBlockFactor, f: &LocallyConstantPotential, depth: usize) -> Result<SeqTable> {
    build_g_table_with(pi, f, depth, NumericMode::Auto)
}

pub fn build_g_table_with(
    pi: &OneBlockFactor,
    f: &LocallyConstantPotential,
    depth: usize,
    mode: NumericMode,
) -> Result<SeqTable> {
    let sft = pi.domain();
    if f.alphabet() != sft.alphabet() {
        return Err(Error::AlphabetMismatch(
            "potential is not defined on the factor's domain".into(),
        ));
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be >= 1".into()));
    }
    let exact = match mode {
        NumericMode::Auto => f.is_zero(),
        NumericMode::Float => false,
        NumericMode::Exact if f.is_zero() => true,
        NumericMode::Exact => {
            return Err(Error::InvalidArgument(
                "exact mode needs f = 0 (counting path)".into(),
            ))
        }
    };
    let target = pi.target_alphabet();
    let radix = radix_for(target.len());
    check_code_width(radix, depth)?;
    let counts = pi.count_image_blocks(depth);
    let total: BigUint = counts.iter().skip(1).sum();
    if total > BigUint::from(MAX_TABLE_WORDS) {
        return Err(Error::CapExceeded(format!(
            "{total} image words up to depth {depth} exceed the cap of {MAX_TABLE_WORDS}"
        )));
    }

    let r = f.range();
    let k = r.saturating_sub(1).max(1);
    let states = sft.enumerate_blocks(k);
    let index: HashMap<&[usize], usize> = states.iter().enumerate().map(|(i, s)| (s.as_ref(), i)).collect();
    let mut steps = vec![Vec::new(); target.len()];
    for (i, s) in states.iter().enumerate() {
        for &a in sft.successors(*s.last().expect("k >= 1")) {
            let ext = s.concat(&[a]);
            let t = index[&ext[1..]];
            let w = f.value(&ext[ext.len() - r..]).exp();
            steps[pi.symbol_map()[a]].push((i, t, w));
        }
    }
    let tail: Vec<f64> = if r >= 2 {
        states.iter().map(|s| f.tail_bounds(sft, s).0).collect()
    } else {
        vec![0.0; states.len()]
    };
    let engine = Engine {
        pi,
        f,
        exact,
        radix,
        steps,
        tail,
        n_states: states.len(),
    };

    let mut levels: Vec<Vec<Row>> = vec![Vec::new(); depth];

    // depths below the state length: direct fiber enumeration
    for n in 1..k.min(depth + 1) {
        pi.for_each_image_block(n, |y| {
            let fiber = pi.fiber_words(y);
            let code = y.iter().fold(0u64, |acc, &b| acc * radix + b as u64);
            let row = if exact {
                let c = BigUint::from(fiber.len());
                (code, ln_biguint(&c), Some(c))
            } else {
                let l = log_sum_exp(fiber.iter().map(|u| {
                    engine.f.birkhoff_sup(sft, u).expect("fiber words are allowable")
                }));
                (code, l, None)
            };
            levels[n - 1].push(row);
        });
    }
    if k > depth {
        return finish(engine, levels, depth);
    }

    // roots: image words of length k with the states over them
    let mut groups: BTreeMap<Word, Vec<usize>> = BTreeMap::new();
    for (i, s) in states.iter().enumerate() {
        groups.entry(pi.project(s)).or_default().push(i);
    }
    let mut nodes: Vec<(u64, Alpha)> = groups
        .into_iter()
        .map(|(y, members)| {
            let code = y.iter().fold(0u64, |acc, &b| acc * radix + b as u64);
            let alpha = if exact {
                let mut v = vec![BigUint::zero(); states.len()];
                members.iter().for_each(|&i| v[i] = BigUint::from(1u32));
                Alpha::Exact(v)
            } else {
                let mut v = vec![0.0; states.len()];
                for &i in &members {
                    v[i] = if r == 1 { f.value(&states[i]).exp() } else { 1.0 };
                }
                let m = v.iter().copied().fold(0.0, f64::max);
                v.iter_mut().for_each(|x| *x /= m);
                Alpha::Float { vals: v, scale: m.ln() }
            };
            (code, alpha)
        })
        .collect();
    let record = |nodes: &[(u64, Alpha)], out: &mut Vec<Row>| {
        for (code, alpha) in nodes {
            let (l, c) = engine.value(alpha);
            out.push((*code, l, c));
        }
    };
    record(&nodes, &mut levels[k - 1]);

    // breadth-first until there is enough independent work to fan out
    let target_width = 16 * par::threads().max(1);
    let mut d = k;
    while d < depth && nodes.len() < target_width {
        let mut next = Vec::new();
        for (code, alpha) in &nodes {
            for b in 0..target.len() {
                if let Some(a) = engine.step(alpha, b) {
                    next.push((code * radix + b as u64, a));
                }
            }
        }
        nodes = next;
        d += 1;
        record(&nodes, &mut levels[d - 1]);
    }

    if d < depth {
        let subtrees = par::map(&nodes, |(code, alpha)| {
            let mut out: Vec<Vec<Row>> = vec![Vec::new(); depth - d];
            engine.dfs(*code, alpha, d, depth, d + 1, &mut out);
            out
        });
        for sub in subtrees {
            for (i, rows) in sub.into_iter().enumerate() {
                levels[d + i].extend(rows);
            }
        }
    }
    finish(engine, levels, depth)
}

fn finish(engine: Engine<'_>, levels: Vec<Vec<Row>>, depth: usize) -> Result<SeqTable> {
    let levels = levels
        .into_iter()
        .map(|rows| rows_to_level(rows, engine.exact))
        .collect();
    let variation = engine.f.log_variation_profile(engine.pi.domain(), depth)?;
    let kind = if engine.pi.symbol_map().iter().enumerate().all(|(i, &t)| i == t)
        && engine.pi.target_alphabet() == engine.pi.domain().alphabet()
    {
        TableKind::Additive
    } else {
        TableKind::Relative
    };
    Ok(SeqTable::from_levels(
        kind,
        engine.pi.target_alphabet().to_vec(),
        levels,
        variation,
    ))
}

/// `exp(sup_{[u]} S_n f)` on `B_n(X)`: the table of the identity factor.
pub fn additive_table(
    sft: &crate::shift::Sft,
    f: &LocallyConstantPotential,
    depth: usize,
) -> Result<SeqTable> {
    build_g_table(&OneBlockFactor::identity(sft.clone()), f, depth)
}
