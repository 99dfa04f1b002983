//! Uniform and periodic defects of a candidate `h` against a table.

use std::cmp::Ordering;

use num::{BigRational, BigUint, One, Zero};
use serde::Serialize;

use crate::detect::candidate::Candidate;
use crate::error::{Error, Result};
use crate::exact::{ln_biguint, LogMonomial};
use crate::factor::OneBlockFactor;
use crate::par;
use crate::seq::SeqTable;
use crate::shift::{mat_mul, Word};

const CHUNK: usize = 4096;

#[derive(Clone, Debug, Serialize)]
pub struct UniformDefect {
    pub n: usize,
    /// `max_y (1/n) |log g_n(y) - sup_{[y]} S_n h|`.
    pub value: f64,
    pub witness: String,
    /// `log M_n(h)`: largest spread of `S_n h` inside one depth-`n` cylinder.
    pub log_variation_h: f64,
}

/// Uniform defect at depth `n`, with `S_n h` maximised over the stored
/// extensions of each `y` by `r - 1` symbols.
pub fn uniform_defect(t: &SeqTable, h: &Candidate, n: usize) -> Result<UniformDefect> {
    let r = h.range();
    let level = t.level(n)?;
    t.level(n + r - 1)?;
    let chunks: Vec<usize> = (0..level.len()).step_by(CHUNK).collect();
    let parts = par::map(&chunks, |&start| -> Result<(f64, usize, f64)> {
        let mut worst = (f64::NEG_INFINITY, start, 0.0f64);
        for i in start..(start + CHUNK).min(level.len()) {
            let ext = t.extension_range(level.codes[i], n, n + r - 1);
            let long = t.level(n + r - 1)?;
            let mut hi = f64::NEG_INFINITY;
            let mut lo = f64::INFINITY;
            for &code in &long.codes[ext] {
                let s = h.window_sum(&t.decode(code, n + r - 1), n)?;
                hi = hi.max(s);
                lo = lo.min(s);
            }
            if hi == f64::NEG_INFINITY {
                // No stored extension: the word cannot be continued.
                continue;
            }
            let d = (level.logs[i] - hi).abs();
            if d > worst.0 {
                worst.0 = d;
                worst.1 = i;
            }
            worst.2 = worst.2.max(hi - lo);
        }
        Ok(worst)
    });
    let mut best = (f64::NEG_INFINITY, 0usize, 0.0f64);
    for part in parts {
        let (d, i, v) = part?;
        if d > best.0 {
            best.0 = d;
            best.1 = i;
        }
        best.2 = best.2.max(v);
    }
    if best.0 == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!("no word of depth {n} extends in the table")));
    }
    Ok(UniformDefect {
        n,
        value: best.0 / n as f64,
        witness: t.format_word(&t.decode(level.codes[best.1], n)),
        log_variation_h: best.2,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicDefect {
    pub j: usize,
    /// `j q`.
    pub n: usize,
    /// `(1/(jq)) (log g_{jq}(block^j) - S_{jq} h(block^∞))`.
    pub value: f64,
    /// Exact sign when both table and candidate are exact.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_sign: Option<i8>,
}

fn sign_of(o: Ordering) -> i8 {
    match o {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

/// Defects along `block^∞` for `j = 1..=multiples`.
pub fn periodic_defect(t: &SeqTable, h: &Candidate, block: &[usize], multiples: usize) -> Result<Vec<PeriodicDefect>> {
    let q = block.len();
    if q == 0 {
        return Err(Error::InvalidArgument("empty periodic block".into()));
    }
    if multiples * q > t.depth_max() {
        return Err(Error::DepthUnavailable {
            requested: multiples * q,
            available: t.depth_max(),
        });
    }
    let r = h.range();
    let s_exact = h.periodic_sum_exact(block);
    let mut out = Vec::with_capacity(multiples);
    let mut word = Vec::with_capacity(multiples * q);
    for j in 1..=multiples {
        word.extend_from_slice(block);
        let g = t
            .log_value(&word)
            .ok_or_else(|| Error::NotAllowable(t.format_word(&word)))?;
        // Summed window by window, as in the uniform defect, so the two
        // agree to the last bit on the same word.
        let ext: Vec<usize> = word.iter().chain(block.iter().cycle().take(r - 1)).copied().collect();
        let s = h.window_sum(&ext, j * q)?;
        let mut value = (g - s) / (j * q) as f64;
        let exact_sign = match (t.count(&word), &s_exact) {
            (Some(c), Some(s)) => {
                let d = LogMonomial::ln_uint(c).sub(&s.scale(&BigRational::from_integer(j.into())));
                d.signum().map(sign_of)
            }
            _ => None,
        };
        if exact_sign == Some(0) {
            value = 0.0;
        }
        out.push(PeriodicDefect {
            j,
            n: j * q,
            value,
            exact_sign,
        });
    }
    Ok(out)
}

/// Exact two-sided information about `lim_j d_{y,j}` on the counting path.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicLimit {
    /// `(1/(kq)) log max_s (N^k)_{ss}`, a lower bound on `q`-normalised growth.
    pub lower: f64,
    pub lower_k: usize,
    /// `(1/(jq)) log g_{jq}(block^j)`, the best Fekete upper bound seen.
    pub upper: f64,
    pub upper_j: usize,
    /// Limit defect proved positive (+1) or negative (-1) exactly.
    pub refuted_sign: Option<i8>,
    #[serde(skip)]
    pub witness: Option<String>,
}

/// Fiber transfer matrix of a block: `(N)_{st}` counts domain paths
/// `s = x_1 … x_q` over `block` followed by a step to `t`.
fn block_matrix(pi: &OneBlockFactor, block: &[usize]) -> Vec<Vec<BigUint>> {
    let sft = pi.domain();
    let k = sft.len();
    let step = |b: usize| -> Vec<Vec<BigUint>> {
        (0..k)
            .map(|s| {
                (0..k)
                    .map(|t| {
                        if pi.symbol_map()[s] == b && sft.allowed(s, t) {
                            BigUint::one()
                        } else {
                            BigUint::zero()
                        }
                    })
                    .collect()
            })
            .collect()
    };
    block
        .iter()
        .skip(1)
        .fold(step(block[0]), |acc, &b| mat_mul(&acc, &step(b)))
}

/// Bounds the limit of the periodic defect along `block^∞` for an exact
/// candidate on an exact table. Upper bounds use `g_{jq}(block^j)` for
/// `j <= multiples`, lower bounds the diagonal of `N^k` for `k <= multiples`.
pub fn periodic_limit(
    pi: &OneBlockFactor,
    t: &SeqTable,
    h: &Candidate,
    block: &[usize],
    multiples: usize,
) -> Result<Option<PeriodicLimit>> {
    let Some(s_q) = h.periodic_sum_exact(block) else {
        return Ok(None);
    };
    let q = block.len();
    let mut upper = (f64::INFINITY, 0usize);
    let mut refuted: Option<(i8, String)> = None;
    let mut word: Vec<usize> = Vec::new();
    for j in 1..=multiples {
        word.extend_from_slice(block);
        let Some(c) = t.count(&word) else {
            return Ok(None);
        };
        let v = ln_biguint(c) / (j * q) as f64;
        if v < upper.0 {
            upper = (v, j);
        }
        let d = LogMonomial::ln_uint(c).sub(&s_q.scale(&BigRational::from_integer(j.into())));
        if refuted.is_none() && d.signum() == Some(Ordering::Less) {
            refuted = Some((-1, format!("g_{}(block^{j}) < exp(S_{} h)", j * q, j * q)));
        }
    }
    let n = block_matrix(pi, block);
    let mut power = n.clone();
    let mut lower = (f64::NEG_INFINITY, 0usize);
    for k in 1..=multiples {
        if k > 1 {
            power = mat_mul(&power, &n);
        }
        let diag = (0..power.len()).map(|s| power[s][s].clone()).max().unwrap_or_default();
        if diag.is_zero() {
            continue;
        }
        let v = ln_biguint(&diag) / (k * q) as f64;
        if v > lower.0 {
            lower = (v, k);
        }
        let d = LogMonomial::ln_uint(&diag).sub(&s_q.scale(&BigRational::from_integer(k.into())));
        if refuted.is_none() && d.signum() == Some(Ordering::Greater) {
            refuted = Some((1, format!("max diag N^{k} > exp({k} S_{q} h)")));
        }
    }
    let s = s_q.to_f64() / q as f64;
    Ok(Some(PeriodicLimit {
        lower: lower.0 - s,
        lower_k: lower.1,
        upper: upper.0 - s,
        upper_j: upper.1,
        refuted_sign: refuted.as_ref().map(|r| r.0),
        witness: refuted.map(|r| r.1),
    }))
}

/// Repeats a block `j` times.
pub fn power_word(block: &[usize], j: usize) -> Word {
    Word(block.iter().copied().cycle().take(block.len() * j).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::fit::fit_h;
    use crate::potential::LocallyConstantPotential;
    use crate::seq::build_g_table;
    use crate::shift::Sft;
    use std::collections::BTreeMap;

    fn collapse() -> OneBlockFactor {
        OneBlockFactor::new(Sft::full(3), vec![0, 0, 1], vec!["a".into(), "b".into()]).unwrap()
    }

    fn zero_h(alphabet: &[String]) -> Candidate {
        let values: BTreeMap<Word, LogMonomial> =
            (0..alphabet.len()).map(|s| (Word(vec![s]), LogMonomial::zero())).collect();
        Candidate::exact(alphabet.to_vec(), 1, values).unwrap()
    }

    #[test]
    fn collapse_defects_vanish_for_the_fit() {
        let pi = collapse();
        let t = build_g_table(&pi, &LocallyConstantPotential::zero(pi.domain()), 10).unwrap();
        let h = fit_h(&t, 1, 10).unwrap().candidate;
        for n in 1..=10 {
            assert_eq!(uniform_defect(&t, &h, n).unwrap().value, 0.0);
        }
        for p in pi.image_periodic_points(5) {
            let q = p.period();
            for d in periodic_defect(&t, &h, &p.block, 10 / q).unwrap() {
                assert_eq!(d.exact_sign, Some(0));
                assert_eq!(d.value, 0.0);
            }
        }
    }

    #[test]
    fn zero_candidate_on_collapse_is_off_by_log_two() {
        let pi = collapse();
        let t = build_g_table(&pi, &LocallyConstantPotential::zero(pi.domain()), 8).unwrap();
        let h = zero_h(t.alphabet());
        for n in 1..=8 {
            let u = uniform_defect(&t, &h, n).unwrap();
            assert!((u.value - 2f64.ln()).abs() < 1e-15);
            assert_eq!(u.witness, "a".repeat(n));
        }
        for d in periodic_defect(&t, &h, &[0], 8).unwrap() {
            assert!((d.value - 2f64.ln()).abs() < 1e-15);
            assert_eq!(d.exact_sign, Some(1));
        }
        let lim = periodic_limit(&pi, &t, &h, &[0], 8).unwrap().unwrap();
        assert_eq!(lim.refuted_sign, Some(1));
        assert!(lim.lower <= 2f64.ln() + 1e-15 && lim.upper >= 2f64.ln() - 1e-15);
    }

    #[test]
    fn block_matrix_growth_matches_counts() {
        let pi = collapse();
        let t = build_g_table(&pi, &LocallyConstantPotential::zero(pi.domain()), 9).unwrap();
        let n = block_matrix(&pi, &[0, 1, 1]);
        let mut p = n.clone();
        for j in 1..=3 {
            if j > 1 {
                p = mat_mul(&p, &n);
            }
            // Every fiber path extends by one of at most three symbols.
            let total: BigUint = p.iter().flatten().sum();
            let c = t.count(&power_word(&[0, 1, 1], j)).unwrap();
            assert!(c <= &total && total <= c * 3u32);
        }
    }

    #[test]
    fn periodic_defect_needs_depth_and_language() {
        let pi = OneBlockFactor::identity(Sft::golden_mean());
        let t = build_g_table(&pi, &LocallyConstantPotential::zero(pi.domain()), 6).unwrap();
        let h = zero_h(t.alphabet());
        assert!(matches!(periodic_defect(&t, &h, &[1], 2), Err(Error::NotAllowable(_))));
        assert!(matches!(periodic_defect(&t, &h, &[0, 1], 4), Err(Error::DepthUnavailable { .. })));
        assert!(periodic_defect(&t, &h, &[0, 1], 3).unwrap().iter().all(|d| d.exact_sign == Some(0)));
    }
}
