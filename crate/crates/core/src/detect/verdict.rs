//! Three-valued verdict on whether `log g_n` is realised by Birkhoff sums of
//! a candidate `h`, i.e. whether `f - h∘π` compensates the factor.
//!
//! * CERTIFIED: `log g_n = S_n h` exactly on every stored word at every
//!   depth checked.
//! * REFUTED: the `C_{n,m}` profile grows linearly in `m` (no finite-range
//!   or continuous `h` can work), or a periodic defect of the candidate has
//!   a limit proved nonzero in exact arithmetic (this candidate cannot work).
//! * EVIDENCE: neither; the report carries the decay statistics.

use serde::Serialize;

use crate::detect::candidate::Candidate;
use crate::detect::defects::{periodic_defect, periodic_limit, uniform_defect, PeriodicDefect, PeriodicLimit, UniformDefect};
use crate::detect::fit::exact_identity;
use crate::error::Result;
use crate::factor::OneBlockFactor;
use crate::gibbs::Pressure;
use crate::par;
use crate::potential::LocallyConstantPotential;
use crate::seq::{build_g_table, defect_profile, pressure_estimate, GrowthFlag, SeqTable};
use crate::shift::{is_least_rotation, primitive_period};
use crate::trend::{tail_fit, LinearFit, Verdict, DEFAULT_SLOPE_THRESHOLD};

#[derive(Clone, Debug)]
pub struct VerdictOptions {
    /// Largest primitive period of the orbits checked.
    pub p_max: usize,
    /// Cap on the multiples `j`; otherwise every `j` with `jq <= depth`.
    pub multiples: Option<usize>,
    pub slope_threshold: f64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        VerdictOptions {
            p_max: 6,
            multiples: None,
            slope_threshold: DEFAULT_SLOPE_THRESHOLD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Rules out the given candidate only.
    Candidate,
    /// Rules out every continuous `h`.
    AllContinuous,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitReport {
    pub block: String,
    pub period: usize,
    pub defects: Vec<PeriodicDefect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<PeriodicLimit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Coverage {
    pub depth: usize,
    pub range: usize,
    /// Depths at which the exact identity was checked.
    pub identity_depths: usize,
    pub uniform_depths: usize,
    pub max_period: usize,
    pub orbits_checked: usize,
    pub max_multiple: usize,
    pub profile_pairs: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scope: Option<Scope>,
    pub reasons: Vec<String>,
    pub candidate: Candidate,
    pub pressure: Pressure,
    /// `None` when exact arithmetic was unavailable.
    pub exact_identity: Option<bool>,
    pub uniform: Vec<UniformDefect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform_fit: Option<LinearFit>,
    pub orbits: Vec<OrbitReport>,
    pub growth: GrowthFlag,
    /// `(n, m)` of the profile entry cited by a refutation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(usize, usize)>,
    pub coverage: Coverage,
}

/// Least-rotation primitive blocks of period `<= p_max` whose powers are
/// stored up to the table depth.
fn table_orbits(t: &SeqTable, p_max: usize) -> Result<Vec<Vec<usize>>> {
    let depth = t.depth_max();
    let mut out = Vec::new();
    for q in 1..=p_max.min(depth) {
        for w in t.words(q)? {
            if primitive_period(&w) != q || !is_least_rotation(&w) {
                continue;
            }
            let reps = depth / q;
            let full: Vec<usize> = w.iter().copied().cycle().take(reps * q).collect();
            let tail_len = depth - reps * q;
            let longest: Vec<usize> = full.iter().chain(&w[..tail_len]).copied().collect();
            if t.index(&longest).is_some() {
                out.push(w.0);
            }
        }
    }
    Ok(out)
}

/// Verdict for a candidate against a stored table. With the factor, orbits
/// come from the image shift and exact periodic limits are bounded.
pub fn compensation_verdict(
    t: &SeqTable,
    factor: Option<&OneBlockFactor>,
    h: &Candidate,
    opts: &VerdictOptions,
) -> Result<VerdictReport> {
    let depth = t.depth_max();
    let r = h.range();
    let top = (depth + 1).saturating_sub(r);
    let mut reasons = Vec::new();

    let mut identity = Some(true);
    let mut identity_depths = 0;
    for n in 1..=top {
        identity_depths = n;
        match exact_identity(t, h, n)? {
            Some(true) => {}
            Some(false) => {
                reasons.push(format!("exact identity fails at depth {n}"));
                identity = Some(false);
                break;
            }
            None => {
                identity = None;
                break;
            }
        }
    }

    let uniform: Vec<UniformDefect> = (1..=top)
        .map(|n| uniform_defect(t, h, n))
        .collect::<Result<_>>()?;
    let uniform_fit = tail_fit(1, &uniform.iter().map(|u| u.value).collect::<Vec<_>>());

    let blocks = match factor {
        Some(pi) => pi
            .image_periodic_points(opts.p_max.min(depth))
            .into_iter()
            .map(|p| p.block.0)
            .collect(),
        None => table_orbits(t, opts.p_max)?,
    };
    let orbits: Vec<Result<OrbitReport>> = par::map(&blocks, |block| {
        let q = block.len();
        let multiples = opts.multiples.map_or(depth / q, |j| j.min(depth / q));
        let defects = periodic_defect(t, h, block, multiples)?;
        let limit = match factor {
            Some(pi) if t.is_exact() && h.is_exact() => periodic_limit(pi, t, h, block, multiples)?,
            _ => None,
        };
        Ok(OrbitReport {
            block: t.format_word(block),
            period: q,
            defects,
            limit,
        })
    });
    let orbits: Vec<OrbitReport> = orbits.into_iter().collect::<Result<_>>()?;

    let profile = defect_profile(t, opts.slope_threshold)?;
    let growth = profile.growth.clone();

    let mut verdict = Verdict::Evidence;
    let mut scope = None;
    let mut witness = None;
    if growth.fired {
        verdict = Verdict::Refuted;
        scope = Some(Scope::AllContinuous);
        witness = growth.witness;
        let (n, m) = growth.witness.expect("fired flag has a witness");
        reasons.push(format!(
            "log C_{{{n},m}} grows linearly in m (slope {:.4}); largest at m = {m}: {:.6}",
            growth.fit.as_ref().map_or(f64::INFINITY, |f| f.slope),
            growth.witness_log_c.unwrap_or(f64::INFINITY),
        ));
    }
    for o in &orbits {
        if let Some(l) = &o.limit {
            if let Some(s) = l.refuted_sign {
                if verdict != Verdict::Refuted {
                    verdict = Verdict::Refuted;
                    scope = Some(Scope::Candidate);
                }
                reasons.push(format!(
                    "periodic defect along ({})^inf has a {} limit: {}",
                    o.block,
                    if s > 0 { "positive" } else { "negative" },
                    l.witness.as_deref().unwrap_or("")
                ));
                break;
            }
        }
    }
    if verdict == Verdict::Evidence && identity == Some(true) && top > 0 {
        verdict = Verdict::Certified;
        reasons.push(format!("log g_n = S_n h exactly for n = 1..={top}"));
    }
    if verdict == Verdict::Evidence {
        if let Some(u) = uniform.last() {
            reasons.push(format!("uniform defect {:.3e} at depth {}", u.value, u.n));
        }
    }

    let max_multiple = orbits
        .iter()
        .map(|o| o.defects.len())
        .max()
        .unwrap_or(0);
    let coverage = Coverage {
        depth,
        range: r,
        identity_depths: if identity.is_some() { identity_depths } else { 0 },
        uniform_depths: uniform.len(),
        max_period: opts.p_max.min(depth),
        orbits_checked: orbits.len(),
        max_multiple,
        profile_pairs: profile.entries.len(),
    };
    Ok(VerdictReport {
        verdict,
        scope,
        reasons,
        candidate: h.clone(),
        pressure: Pressure::from_estimate(&pressure_estimate(t)?),
        exact_identity: identity,
        uniform,
        uniform_fit,
        orbits,
        growth,
        witness,
        coverage,
    })
}

/// Builds the table of `(π, f)` to `depth` and runs the verdict for `h`.
pub fn compensation_verdict_for(
    pi: &OneBlockFactor,
    f: &LocallyConstantPotential,
    h: &Candidate,
    depth: usize,
    opts: &VerdictOptions,
) -> Result<VerdictReport> {
    let t = build_g_table(pi, f, depth)?;
    compensation_verdict(&t, Some(pi), h, opts)
}
