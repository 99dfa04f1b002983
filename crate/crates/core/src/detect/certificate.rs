//! Periodic lower-bound certificates `g_{j(n+q)}(y*) >= (K · g_n(u))^j`.
//!
//! Among the fiber words of `u`, group them by first and last symbol and
//! keep the heaviest group `(a, b)`; bridge `b` back to `a` in the domain
//! with a word `w`, and set `y* = (u π(w))^∞`. Concatenating `j` copies of
//! the group with `w` in between gives at least `(K g_n(u))^j` worth of
//! fiber over `(u π(w))^j`, where `K = e^m / (L_1 L_2 M_n(f)^2)`, `L_1`, `L_2`
//! are the preimage counts of the first and last symbols of `u`, and `m`
//! is the smallest partial Birkhoff sum of length up to the specification
//! number.

use std::collections::BTreeMap;

use num::BigUint;
use serde::Serialize;

use crate::detect::defects::power_word;
use crate::error::{Error, Result};
use crate::exact::ln_biguint;
use crate::factor::OneBlockFactor;
use crate::potential::LocallyConstantPotential;
use crate::seq::SeqTable;

#[derive(Clone, Debug, Serialize)]
pub struct C2Entry {
    pub j: usize,
    pub n: usize,
    pub log_g: f64,
    pub log_rhs: f64,
    pub slack: f64,
    /// Integer comparison on the counting path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_holds: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct C2Certificate {
    pub u: String,
    pub n: usize,
    /// Heaviest `(first, last)` preimage pair.
    pub pair: (String, String),
    pub log_pair_sum: f64,
    /// Domain bridge `w` with `b w a` allowable.
    pub bridge: String,
    pub q: usize,
    /// Repeating block `u π(w)` of `y*`.
    pub point: String,
    pub l1: usize,
    pub l2: usize,
    pub log_min_partial_sum: f64,
    pub log_variation: f64,
    /// `log K`.
    pub log_bound: f64,
    pub log_g_u: f64,
    pub entries: Vec<C2Entry>,
    pub holds: bool,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Builds and checks the certificate for `u` for `j = 1..=multiples`.
pub fn c2_certificate(
    t: &SeqTable,
    pi: &OneBlockFactor,
    f: &LocallyConstantPotential,
    u: &[usize],
    max_gap: usize,
    multiples: usize,
) -> Result<C2Certificate> {
    let sft = pi.domain();
    if !sft.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    if t.alphabet() != pi.target_alphabet() {
        return Err(Error::AlphabetMismatch("table and factor image differ".into()));
    }
    let n = u.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty source word".into()));
    }
    let log_g_u = t.log_value(u).ok_or_else(|| Error::NotAllowable(t.format_word(u)))?;
    let exact = f.is_zero() && t.is_exact();

    // (first, last) -> (log-weights, count)
    let mut groups: BTreeMap<(usize, usize), (Vec<f64>, BigUint)> = BTreeMap::new();
    for x in pi.fiber_words(u) {
        let w = f.birkhoff_sup(sft, &x)?;
        let slot = groups.entry((x[0], x[n - 1])).or_default();
        slot.0.push(w);
        slot.1 += 1u32;
    }
    let ((a, b), (log_pair_sum, _)) = groups
        .into_iter()
        .map(|(k, (ws, c))| (k, (log_sum_exp(&ws), c)))
        .fold(None, |best: Option<((usize, usize), (f64, BigUint))>, cur| match best {
            Some(b) if (exact && b.1 .1 >= cur.1 .1) || (!exact && b.1 .0 >= cur.1 .0) => Some(b),
            _ => Some(cur),
        })
        .ok_or_else(|| Error::NotAllowable(t.format_word(u)))?;

    let w = sft.bridge(&[b], &[a], max_gap).ok_or(Error::NoBridge(max_gap))?;
    let q = w.len();
    let mut block = u.to_vec();
    block.extend(pi.project(&w).iter());
    let period = n + q;
    if multiples == 0 || multiples * period > t.depth_max() {
        return Err(Error::DepthUnavailable {
            requested: multiples.max(1) * period,
            available: t.depth_max(),
        });
    }

    let l1 = pi.preimages(u[0]).len();
    let l2 = pi.preimages(u[n - 1]).len();
    let spec = sft.weak_spec_number().expect("irreducible");
    let m = f.min_partial_sum(sft, spec);
    let log_mn = f.log_variation(sft, n)?;
    let log_bound = m - ((l1 * l2) as f64).ln() - 2.0 * log_mn;
    let l12 = BigUint::from(l1 * l2);

    let mut entries = Vec::with_capacity(multiples);
    for j in 1..=multiples {
        let word = power_word(&block, j);
        let log_g = t.log_value(&word).ok_or_else(|| Error::NotAllowable(t.format_word(&word)))?;
        let log_rhs = j as f64 * (log_bound + log_g_u);
        let exact_holds = if exact {
            let g = t.count(&word).expect("exact table");
            let gu = t.count(u).expect("exact table");
            Some(g * num::pow(l12.clone(), j) >= num::pow(gu.clone(), j))
        } else {
            None
        };
        let mut slack = log_g - log_rhs;
        if exact {
            // Recompute from integers so that equality lands on exactly 0.
            let g = t.count(&word).expect("exact table") * num::pow(l12.clone(), j);
            let rhs = num::pow(t.count(u).expect("exact table").clone(), j);
            slack = if g == rhs { 0.0 } else { ln_biguint(&g) - ln_biguint(&rhs) };
        }
        entries.push(C2Entry {
            j,
            n: j * period,
            log_g,
            log_rhs,
            slack,
            exact_holds,
        });
    }
    let holds = entries
        .iter()
        .all(|e| e.exact_holds.unwrap_or(e.slack >= -1e-12));
    Ok(C2Certificate {
        u: t.format_word(u),
        n,
        pair: (
            sft.alphabet()[a].clone(),
            sft.alphabet()[b].clone(),
        ),
        log_pair_sum,
        bridge: sft.format_word(&w),
        q,
        point: t.format_word(&block),
        l1,
        l2,
        log_min_partial_sum: m,
        log_variation: log_mn,
        log_bound,
        log_g_u,
        entries,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::build_g_table;
    use crate::shift::Sft;

    fn table(pi: &OneBlockFactor, depth: usize) -> SeqTable {
        build_g_table(pi, &LocallyConstantPotential::zero(pi.domain()), depth).unwrap()
    }

    #[test]
    fn identity_full_shift_is_tight() {
        let pi = OneBlockFactor::identity(Sft::full(2));
        let t = table(&pi, 8);
        let f = LocallyConstantPotential::zero(pi.domain());
        let c = c2_certificate(&t, &pi, &f, &[0, 1, 1], 2, 2).unwrap();
        assert_eq!(c.q, 0);
        assert_eq!(c.log_bound, 0.0);
        assert!(c.holds);
        assert!(c.entries.iter().all(|e| e.slack == 0.0));
    }

    #[test]
    fn collapse_certificates_hold() {
        let pi = OneBlockFactor::new(Sft::full(3), vec![0, 0, 1], vec!["a".into(), "b".into()]).unwrap();
        let t = table(&pi, 12);
        let f = LocallyConstantPotential::zero(pi.domain());
        for n in 1..=4 {
            for u in t.words(n).unwrap() {
                let c = c2_certificate(&t, &pi, &f, &u, 2, 12 / n).unwrap();
                assert!(c.log_bound >= -(4f64.ln()) - 1e-15);
                assert!(c.holds, "{}", c.u);
                assert!(c.entries.iter().all(|e| e.slack >= 0.0 && e.exact_holds == Some(true)));
            }
        }
    }

    #[test]
    fn golden_mean_bridges_through_a() {
        let sft = Sft::golden_mean();
        let pi = OneBlockFactor::identity(sft.clone());
        let t = table(&pi, 12);
        let f = LocallyConstantPotential::zero(&sft);
        let u = sft.parse_word("bab").unwrap();
        let c = c2_certificate(&t, &pi, &f, &u, 1, 3).unwrap();
        assert_eq!(c.bridge, "a");
        assert_eq!(c.point, "baba");
        assert!(c.holds);
        assert!(matches!(
            c2_certificate(&t, &pi, &f, &u, 0, 1),
            Err(Error::NoBridge(0))
        ));
    }

    #[test]
    fn reducible_domains_are_rejected() {
        let sft = Sft::new(vec!["a".into(), "b".into()], vec![vec![1, 1], vec![0, 1]]).unwrap();
        let pi = OneBlockFactor::identity(sft.clone());
        let t = table(&pi, 4);
        let f = LocallyConstantPotential::zero(&sft);
        assert!(matches!(
            c2_certificate(&t, &pi, &f, &[0], 3, 1),
            Err(Error::NotIrreducible)
        ));
    }
}
