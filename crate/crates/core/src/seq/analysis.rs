//! Partition sums, pressure estimates, and the splitting checks on tables.

use num::{BigUint, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::ln_biguint;
use crate::par;
use crate::seq::SeqTable;
use crate::trend::{self, LinearFit};

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let mut s = 0.0;
    let mut c = 0.0;
    for x in xs {
        let y = (x - m).exp() - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    m + s.ln()
}

/// `ln(a) - ln(b)`, exactly zero when `a == b`.
fn ln_ratio(a: &BigUint, b: &BigUint) -> f64 {
    if a == b {
        0.0
    } else {
        ln_biguint(a) - ln_biguint(b)
    }
}

/// `log Z_n`.
pub fn partition_sum(t: &SeqTable, n: usize) -> Result<f64> {
    Ok(log_sum_exp(&t.level(n)?.logs))
}

/// `Z_n` as an integer on the counting path.
pub fn partition_sum_exact(t: &SeqTable, n: usize) -> Result<Option<BigUint>> {
    Ok(t.level(n)?.counts.as_ref().map(|c| c.iter().sum()))
}

#[derive(Clone, Debug, Serialize)]
pub struct PressureEstimate {
    /// `log Z_n`, `n = 1..=N`.
    pub log_z: Vec<f64>,
    /// `(1/n) log Z_n`.
    pub per_n: Vec<f64>,
    pub fekete_upper: f64,
    pub fekete_depth: usize,
    /// `log Z_{n+1} - log Z_n`, `n = 1..N-1`.
    pub increments: Vec<f64>,
    pub extrapolated: f64,
    /// `λ` when `Z_n = λ^n` holds exactly at every stored depth.
    pub exact_base: Option<u64>,
}

fn aitken(x0: f64, x1: f64, x2: f64) -> f64 {
    let d1 = x2 - x1;
    let denom = x2 - 2.0 * x1 + x0;
    if d1.abs() <= 1e-15 * x2.abs().max(1.0) || denom.abs() <= 1e-300 {
        return x2;
    }
    let acc = x2 - d1 * d1 / denom;
    if acc.is_finite() {
        acc
    } else {
        x2
    }
}

/// Reports the finite sequence `(1/n) log Z_n`, its minimum (an upper bound on
/// the limit for subadditive tables), and an Aitken-accelerated estimate built
/// from the last three increments of `log Z_n`.
pub fn pressure_estimate(t: &SeqTable) -> Result<PressureEstimate> {
    let depth = t.depth_max();
    if depth < 3 {
        return Err(Error::DepthUnavailable {
            requested: 3,
            available: depth,
        });
    }
    let log_z: Vec<f64> = (1..=depth).map(|n| partition_sum(t, n)).collect::<Result<_>>()?;
    let per_n: Vec<f64> = log_z.iter().enumerate().map(|(i, z)| z / (i + 1) as f64).collect();
    let (fekete_depth, fekete_upper) = per_n
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i + 1, v) } else { best });
    let increments: Vec<f64> = log_z.windows(2).map(|w| w[1] - w[0]).collect();
    let extrapolated = match increments.as_slice() {
        [.., x0, x1, x2] => aitken(*x0, *x1, *x2),
        [.., last] => *last,
        [] => unreachable!("depth >= 3"),
    };

    let mut exact_base = None;
    if t.is_exact() {
        let z: Vec<BigUint> = (1..=depth)
            .map(|n| partition_sum_exact(t, n).map(|c| c.expect("exact table")))
            .collect::<Result<_>>()?;
        if let Some(base) = z[0].to_u64() {
            let b = BigUint::from(base);
            if z.windows(2).all(|w| w[1] == &w[0] * &b) {
                exact_base = Some(base);
            }
        }
    }
    let (fekete_upper, extrapolated) = match exact_base {
        Some(b) => ((b as f64).ln(), (b as f64).ln()),
        None => (fekete_upper, extrapolated),
    };
    Ok(PressureEstimate {
        log_z,
        per_n,
        fekete_upper,
        fekete_depth: if exact_base.is_some() { 1 } else { fekete_depth },
        increments,
        extrapolated,
        exact_base,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitWitness {
    pub word: String,
    pub n: usize,
    pub m: usize,
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityReport {
    pub holds: bool,
    pub tolerance: f64,
    /// `max (log f_{n+m}(y) - log f_n(y) - log f_m(σ^n y))`; ≤ tolerance iff `holds`.
    pub worst_slack: f64,
    pub witness: Option<SplitWitness>,
    /// Integer check of `c_{n+m}(y) ≤ c_n(y) c_m(σ^n y)` on the counting path.
    pub exact_holds: Option<bool>,
    /// `log Z_{n+m} ≤ log Z_n + log Z_m` for every stored split.
    pub partition_sums_subadditive: bool,
}

pub const SUBADDITIVE_TOL: f64 = 1e-12;

struct Worst {
    slack: f64,
    total: usize,
    idx: usize,
    split: usize,
}

pub fn check_subadditive(t: &SeqTable) -> Result<SubadditivityReport> {
    let depth = t.depth_max();
    if depth < 2 {
        return Err(Error::DepthUnavailable {
            requested: 2,
            available: depth,
        });
    }
    let exact = t.is_exact();
    let mut best: Option<Worst> = None;
    let mut exact_ok = true;
    const CHUNK: usize = 4096;
    for total in 2..=depth {
        let level = t.level(total)?;
        let parts = par::map_range(level.len().div_ceil(CHUNK), |c| {
            let mut worst: Option<Worst> = None;
            let mut ok = true;
            for idx in c * CHUNK..((c + 1) * CHUNK).min(level.len()) {
                let code = level.codes[idx];
                for n in 1..total {
                    let m = total - n;
                    let span = t.radix().pow(m as u32);
                    let (pl, sl) = (t.level(n).expect("n < total"), t.level(m).expect("m < total"));
                    let slack = match (pl.find(code / span), sl.find(code % span)) {
                        (Some(i), Some(j)) => {
                            if let (Some(cw), Some(cp), Some(cs)) = (&level.counts, &pl.counts, &sl.counts) {
                                let parts = &cp[i] * &cs[j];
                                ok &= cw[idx] <= parts;
                                ln_ratio(&cw[idx], &parts)
                            } else {
                                level.logs[idx] - pl.logs[i] - sl.logs[j]
                            }
                        }
                        _ => {
                            ok = false;
                            f64::INFINITY
                        }
                    };
                    if worst.as_ref().is_none_or(|w| slack > w.slack) {
                        worst = Some(Worst { slack, total, idx, split: n });
                    }
                }
            }
            (worst, ok)
        });
        for (w, ok) in parts {
            exact_ok &= ok;
            if let Some(w) = w {
                if best.as_ref().is_none_or(|b| w.slack > b.slack) {
                    best = Some(w);
                }
            }
        }
    }
    let best = best.expect("depth >= 2 has at least one split");
    let witness = (best.slack > 0.0).then(|| {
        let code = t.level(best.total).expect("stored").codes[best.idx];
        SplitWitness {
            word: t.format_word(&t.decode(code, best.total)),
            n: best.split,
            m: best.total - best.split,
            slack: best.slack,
        }
    });
    let log_z: Vec<f64> = (1..=depth).map(|n| partition_sum(t, n)).collect::<Result<_>>()?;
    let partition_sums_subadditive = (2..=depth).all(|total| {
        (1..total).all(|n| log_z[total - 1] <= log_z[n - 1] + log_z[total - n - 1] + SUBADDITIVE_TOL)
    });
    Ok(SubadditivityReport {
        holds: best.slack <= SUBADDITIVE_TOL,
        tolerance: SUBADDITIVE_TOL,
        worst_slack: best.slack,
        witness,
        exact_holds: exact.then_some(exact_ok),
        partition_sums_subadditive,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct D2Entry {
    pub n: usize,
    pub m: usize,
    /// `log D_{n,m}`: the worst best-bridge ratio over all pairs.
    pub log_d: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct D2Report {
    pub gap: usize,
    pub entries: Vec<D2Entry>,
    pub all_bridged: bool,
    /// First pair (in scan order) with no bridge, as `(u, v)`.
    pub unbridged: Option<(String, String)>,
    /// Per-`n` least-squares fit of `log D_{n,m}` against `m` over the tail.
    pub fits: Vec<(usize, LinearFit)>,
    /// No fit shows exponential decay of `D_{n,m}`; evidence only.
    pub sublinear_evidence: bool,
}

/// For every pair `(u, v)` with `|u| + |v| + gap ≤ N`, the best bridge `w`
/// with `|w| ≤ gap` maximizing `f(uwv) / (f(u) f(v))`.
pub fn check_d2(t: &SeqTable, gap: usize) -> Result<D2Report> {
    let depth = t.depth_max();
    if depth < gap + 2 {
        return Err(Error::DepthUnavailable {
            requested: gap + 2,
            available: depth,
        });
    }
    let radix = t.radix();
    let a = t.alphabet().len() as u64;
    let mut entries = Vec::new();
    let mut unbridged = None;
    for total in 2..=depth - gap {
        for n in 1..total {
            let m = total - n;
            let (lu, lv) = (t.level(n)?, t.level(m)?);
            let rows = par::map_range(lu.len(), |i| {
                let u = lu.codes[i];
                let mut worst = f64::INFINITY;
                let mut missing = None;
                for (j, &v) in lv.codes.iter().enumerate() {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_count: Option<&BigUint> = None;
                    for k in 0..=gap {
                        let lw = t.level(n + m + k).expect("within depth");
                        for w in 0..a.pow(k as u32) {
                            let code = ((u * radix.pow(k as u32) + w) * radix.pow(m as u32)) + v;
                            if let Some(x) = lw.find(code) {
                                best = best.max(lw.logs[x]);
                                if let Some(c) = &lw.counts {
                                    best_count = Some(best_count.map_or(&c[x], |b| b.max(&c[x])));
                                }
                            }
                        }
                    }
                    let ratio = match (best_count, &lu.counts, &lv.counts) {
                        (Some(c), Some(cu), Some(cv)) => ln_ratio(c, &(&cu[i] * &cv[j])),
                        _ => best - lu.logs[i] - lv.logs[j],
                    };
                    if best == f64::NEG_INFINITY && missing.is_none() {
                        missing = Some(j);
                    }
                    worst = worst.min(ratio);
                }
                (worst, missing)
            });
            let mut log_d = f64::INFINITY;
            for (i, (w, miss)) in rows.iter().enumerate() {
                log_d = log_d.min(*w);
                if let (Some(j), None) = (miss, &unbridged) {
                    unbridged = Some((
                        t.format_word(&t.decode(lu.codes[i], n)),
                        t.format_word(&t.decode(lv.codes[*j], m)),
                    ));
                }
            }
            entries.push(D2Entry { n, m, log_d });
        }
    }
    entries.sort_by_key(|e| (e.n, e.m));
    let mut fits = Vec::new();
    for n in 1..=depth {
        let ys: Vec<f64> = entries.iter().filter(|e| e.n == n).map(|e| e.log_d).collect();
        if ys.iter().any(|y| !y.is_finite()) {
            continue;
        }
        if let Some(fit) = trend::tail_fit(1, &ys) {
            fits.push((n, fit));
        }
    }
    let sublinear_evidence = fits
        .iter()
        .all(|(_, f)| !(f.slope < -trend::DEFAULT_SLOPE_THRESHOLD && f.r2 >= trend::MIN_R2));
    Ok(D2Report {
        gap,
        all_bridged: unbridged.is_none(),
        unbridged,
        entries,
        fits,
        sublinear_evidence,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectEntry {
    pub n: usize,
    pub m: usize,
    pub log_c: f64,
    pub witness: String,
    /// Exact `C_{n,m}` as a reduced fraction on the counting path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_c: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFlag {
    pub fired: bool,
    pub slope_threshold: f64,
    /// The `n` whose tail fit of `log C_{n,m}` against `m` has the largest slope.
    pub n: Option<usize>,
    pub fit: Option<LinearFit>,
    /// `(n, m)` at the largest stored `m` for that `n`.
    pub witness: Option<(usize, usize)>,
    pub witness_log_c: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectProfile {
    pub entries: Vec<DefectEntry>,
    pub growth: GrowthFlag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<D2Report>,
}

impl DefectProfile {
    pub fn log_c(&self, n: usize, m: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.n == n && e.m == m).map(|e| e.log_c)
    }

    /// CSV with header `n,m,logC,D`; `D` is `log D_{n,m}` when the bridge
    /// search ran, empty otherwise.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,m,logC,D\n");
        for e in &self.entries {
            let d = self
                .d2
                .as_ref()
                .and_then(|r| r.entries.iter().find(|x| x.n == e.n && x.m == e.m))
                .map(|x| format!("{}", x.log_d))
                .unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", e.n, e.m, e.log_c, d));
        }
        out
    }
}

fn reduced_fraction(num: &BigUint, den: &BigUint) -> String {
    let g = num::Integer::gcd(num, den);
    format!("{}/{}", num / &g, den / &g)
}

/// `log C_{n,m} = max_y |log f_{n+m}(y) - log f_n(y) - log f_m(σ^n y)|` over
/// stored words, with the exponential-growth flag on `m ↦ log C_{n,m}`.
pub fn defect_profile(t: &SeqTable, slope_threshold: f64) -> Result<DefectProfile> {
    let depth = t.depth_max();
    if depth < 2 {
        return Err(Error::DepthUnavailable {
            requested: 2,
            available: depth,
        });
    }
    let exact = t.is_exact();
    let pairs: Vec<(usize, usize)> = (2..=depth)
        .flat_map(|total| (1..total).map(move |n| (n, total - n)))
        .collect();
    let entries = par::map(&pairs, |&(n, m)| {
        let level = t.level(n + m).expect("stored");
        let (pl, sl) = (t.level(n).expect("stored"), t.level(m).expect("stored"));
        let span = t.radix().pow(m as u32);
        let mut best = (f64::NEG_INFINITY, 0usize);
        let mut best_frac: Option<(BigUint, BigUint)> = None;
        for (idx, &code) in level.codes.iter().enumerate() {
            let (Some(i), Some(j)) = (pl.find(code / span), sl.find(code % span)) else {
                best = (f64::INFINITY, idx);
                best_frac = None;
                break;
            };
            if exact {
                let whole = level.counts.as_ref().expect("exact")[idx].clone();
                let parts = &pl.counts.as_ref().expect("exact")[i] * &sl.counts.as_ref().expect("exact")[j];
                let (hi, lo) = if whole >= parts { (whole, parts) } else { (parts, whole) };
                if best_frac.as_ref().is_none_or(|(bh, bl)| &hi * bl > bh * &lo) {
                    best = (ln_ratio(&hi, &lo), idx);
                    best_frac = Some((hi, lo));
                }
            } else {
                let d = (level.logs[idx] - pl.logs[i] - sl.logs[j]).abs();
                if d > best.0 {
                    best = (d, idx);
                }
            }
        }
        DefectEntry {
            n,
            m,
            log_c: best.0,
            witness: t.format_word(&t.decode(level.codes[best.1], n + m)),
            exact_c: best_frac.map(|(a, b)| {
                if b.is_zero() {
                    "inf".to_string()
                } else {
                    reduced_fraction(&a, &b)
                }
            }),
        }
    });
    let mut entries = entries;
    entries.sort_by_key(|e| (e.n, e.m));

    let mut growth = GrowthFlag {
        fired: false,
        slope_threshold,
        n: None,
        fit: None,
        witness: None,
        witness_log_c: None,
    };
    for n in 1..depth {
        let row: Vec<&DefectEntry> = entries.iter().filter(|e| e.n == n).collect();
        let last = row.last().expect("every n < depth has a row");
        let ys: Vec<f64> = row.iter().map(|e| e.log_c).collect();
        if ys.iter().any(|y| !y.is_finite()) {
            // a split into words missing from the table: not a valid sequence table
            growth = GrowthFlag {
                fired: true,
                slope_threshold,
                n: Some(n),
                fit: None,
                witness: Some((n, last.m)),
                witness_log_c: Some(f64::INFINITY),
            };
            break;
        }
        let Some(fit) = trend::tail_fit(1, &ys) else {
            continue;
        };
        let fires = trend::grows_linearly(Some(&fit), slope_threshold);
        let steeper = growth.fit.is_none_or(|g| fit.slope > g.slope);
        if (fires && (!growth.fired || steeper)) || (!growth.fired && steeper) {
            growth = GrowthFlag {
                fired: fires || growth.fired,
                slope_threshold,
                n: Some(n),
                fit: Some(fit),
                witness: Some((n, last.m)),
                witness_log_c: Some(last.log_c),
            };
        }
    }
    Ok(DefectProfile {
        entries,
        growth,
        d2: None,
    })
}
