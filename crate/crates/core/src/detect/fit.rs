//! Sup-norm fitting of a finite-range `h` to a table:
//! `min_h max_z |log g_n(z_1…z_n) - S_n h(z)|` over image words `z` of
//! length `n + r - 1`.

use std::collections::BTreeMap;

use num::{BigRational, BigUint, Zero};
use serde::Serialize;

use crate::detect::candidate::Candidate;
use crate::detect::lp;
use crate::error::{Error, Result};
use crate::exact::LogMonomial;
use crate::par;
use crate::seq::SeqTable;
use crate::shift::Word;

const CHUNK: usize = 4096;

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub range: usize,
    pub n_fit: usize,
    pub candidate: Candidate,
    /// Achieved `max_z |log g_n - S_n h|` of the returned `h`.
    pub t_star: f64,
    pub t_star_per_n: f64,
    /// `t* = 0` established in exact arithmetic.
    pub exact: bool,
    /// Distinct constraint rows after merging words with equal window counts.
    pub rows: usize,
    pub lp_iterations: usize,
}

/// Right-hand side of a constraint: the exact count on counting tables,
/// otherwise the bits of the stored log.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Target {
    Count(BigUint),
    Log(u64),
}

/// How often each `r`-word occurs among the first `n` windows, with the
/// target value; words agreeing on both give the same constraint.
type RowKey = (Vec<u32>, Target);

/// Distinct constraints, each with the smallest depth-`n` index supplying it.
fn collect_rows(t: &SeqTable, r: usize, n: usize) -> Result<Vec<(Vec<u32>, usize)>> {
    let vars = t.level(r)?;
    let long = t.level(n + r - 1)?;
    let short = t.level(n)?;
    let radix = t.radix();
    let prefix_span = radix.pow((r - 1) as u32);
    let window_mod = radix.pow(r as u32);
    let len = n + r - 1;
    let chunks: Vec<usize> = (0..long.len()).step_by(CHUNK).collect();
    let parts = par::map(&chunks, |&start| -> Result<BTreeMap<RowKey, usize>> {
        let mut out = BTreeMap::new();
        for &code in &long.codes[start..(start + CHUNK).min(long.len())] {
            let mut counts = vec![0u32; vars.len()];
            for i in 0..n {
                let shift = radix.pow((len - i - r) as u32);
                let w = (code / shift) % window_mod;
                let j = vars.find(w).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "window `{}` of a stored word is missing from the table",
                        t.format_word(&t.decode(w, r))
                    ))
                })?;
                counts[j] += 1;
            }
            let p = short.find(code / prefix_span).ok_or_else(|| {
                Error::InvalidArgument("prefix of a stored word is missing from the table".into())
            })?;
            let target = match &short.counts {
                Some(c) => Target::Count(c[p].clone()),
                None => Target::Log(short.logs[p].to_bits()),
            };
            let slot = out.entry((counts, target)).or_insert(p);
            *slot = (*slot).min(p);
        }
        Ok(out)
    });
    let mut rows: BTreeMap<RowKey, usize> = BTreeMap::new();
    for part in parts {
        for (k, p) in part? {
            let slot = rows.entry(k).or_insert(p);
            *slot = (*slot).min(p);
        }
    }
    Ok(rows.into_iter().map(|((a, _), p)| (a, p)).collect())
}

/// Solves `Σ_j a_j x_j = b` for all rows in exact arithmetic. `None` if the
/// system is inconsistent or a sign could not be decided.
fn solve_exact(rows: &[(Vec<u32>, LogMonomial)], dim: usize) -> Option<Vec<LogMonomial>> {
    // Reduced rows: pivot column, coefficients with 1 at the pivot, rhs.
    let mut basis: Vec<(usize, Vec<BigRational>, LogMonomial)> = Vec::new();
    for (a, b) in rows {
        let mut a: Vec<BigRational> = a.iter().map(|&c| BigRational::from_integer(c.into())).collect();
        let mut b = b.clone();
        for (p, row, rb) in &basis {
            if !a[*p].is_zero() {
                let c = a[*p].clone();
                for (x, y) in a.iter_mut().zip(row) {
                    *x -= &c * y;
                }
                b = b.sub(&rb.scale(&c));
            }
        }
        let Some(p) = a.iter().position(|x| !x.is_zero()) else {
            if b.is_zero()? {
                continue;
            }
            return None;
        };
        let inv = a[p].recip();
        for x in a.iter_mut() {
            *x *= &inv;
        }
        b = b.scale(&inv);
        for (_, row, rb) in basis.iter_mut() {
            if !row[p].is_zero() {
                let c = row[p].clone();
                for (x, y) in row.iter_mut().zip(&a) {
                    *x -= &c * y;
                }
                *rb = rb.sub(&b.scale(&c));
            }
        }
        basis.push((p, a, b));
    }
    let mut x = vec![LogMonomial::zero(); dim];
    for (p, _, b) in basis {
        x[p] = b;
    }
    Some(x)
}

/// Best range-`r` candidate at depth `n_fit`.
///
/// On counting tables an exact solve is tried first; when the words are
/// consistent with some `h` this returns it with `t* = 0` certified.
/// Otherwise the Chebyshev program is solved in floating point.
pub fn fit_h(t: &SeqTable, r: usize, n_fit: usize) -> Result<FitResult> {
    if r == 0 || r > n_fit {
        return Err(Error::InvalidArgument(format!(
            "range {r} must lie in 1..=n_fit ({n_fit})"
        )));
    }
    let needed = n_fit + r - 1;
    if needed > t.depth_max() {
        return Err(Error::DepthUnavailable {
            requested: needed,
            available: t.depth_max(),
        });
    }
    let vars = t.words(r)?;
    let keys = collect_rows(t, r, n_fit)?;
    let short = t.level(n_fit)?;

    if let Some(counts) = &short.counts {
        let rows: Vec<(Vec<u32>, LogMonomial)> = keys
            .iter()
            .map(|(a, p)| (a.clone(), LogMonomial::ln_uint(&counts[*p])))
            .collect();
        if let Some(x) = solve_exact(&rows, vars.len()) {
            let values: BTreeMap<Word, LogMonomial> = vars.iter().cloned().zip(x).collect();
            let candidate = Candidate::exact(t.alphabet().to_vec(), r, values)?;
            return Ok(FitResult {
                range: r,
                n_fit,
                candidate,
                t_star: 0.0,
                t_star_per_n: 0.0,
                exact: true,
                rows: keys.len(),
                lp_iterations: 0,
            });
        }
    }

    let rows: Vec<Vec<f64>> = keys
        .iter()
        .map(|(a, _)| a.iter().map(|&c| c as f64).collect())
        .collect();
    let rhs: Vec<f64> = keys.iter().map(|(_, p)| short.logs[*p]).collect();
    let sol = lp::chebyshev(&rows, &rhs, vars.len())?;
    let h = crate::potential::LocallyConstantPotential::on_words(
        t.alphabet().to_vec(),
        r,
        vars.iter().cloned().zip(sol.x.iter().copied()),
    )?;
    let candidate = Candidate::from_potential(h);
    let t_star = chebyshev_defect(t, &candidate, n_fit)?;
    Ok(FitResult {
        range: r,
        n_fit,
        candidate,
        t_star,
        t_star_per_n: t_star / n_fit as f64,
        exact: false,
        rows: keys.len(),
        lp_iterations: sol.iterations,
    })
}

/// `max_z |log g_n(z_1…z_n) - S_n h(z)|` over stored `z` of length `n + r - 1`.
pub fn chebyshev_defect(t: &SeqTable, h: &Candidate, n: usize) -> Result<f64> {
    let r = h.range();
    let long = t.level(n + r - 1)?;
    let span = t.radix().pow((r - 1) as u32);
    let chunks: Vec<usize> = (0..long.len()).step_by(CHUNK).collect();
    let parts = par::map(&chunks, |&start| -> Result<f64> {
        let mut worst = 0.0f64;
        for &code in &long.codes[start..(start + CHUNK).min(long.len())] {
            let z = t.decode(code, n + r - 1);
            let g = t
                .log_value(&z[..n])
                .ok_or_else(|| Error::InvalidArgument("prefix missing from the table".into()))?;
            debug_assert_eq!(t.code(&z[..n]), Some(code / span));
            worst = worst.max((g - h.window_sum(&z, n)?).abs());
        }
        Ok(worst)
    });
    parts.into_iter().try_fold(0.0f64, |a, b| Ok(a.max(b?)))
}

/// Whether `log g_n(z_1…z_n) = S_n h(z)` holds exactly for every stored `z`.
/// `None` when the table or the candidate is not exact, or a sign is
/// undecidable within the size limits.
pub fn exact_identity(t: &SeqTable, h: &Candidate, n: usize) -> Result<Option<bool>> {
    let r = h.range();
    let short = t.level(n)?;
    let (Some(counts), true) = (&short.counts, h.is_exact()) else {
        return Ok(None);
    };
    let vars = t.words(r)?;
    let mut values = Vec::with_capacity(vars.len());
    for w in &vars {
        match h.exact_value(w) {
            Some(v) => values.push(v.clone()),
            None => {
                return Err(Error::InvalidPotential(format!(
                    "candidate undefined on `{}`",
                    t.format_word(w)
                )))
            }
        }
    }
    for (a, p) in collect_rows(t, r, n)? {
        let mut s = LogMonomial::ln_uint(&counts[p]);
        for (c, v) in a.iter().zip(&values) {
            if *c > 0 {
                s = s.sub(&v.scale(&BigRational::from_integer((*c).into())));
            }
        }
        match s.is_zero() {
            Some(true) => {}
            Some(false) => return Ok(Some(false)),
            None => return Ok(None),
        }
    }
    Ok(Some(true))
}
