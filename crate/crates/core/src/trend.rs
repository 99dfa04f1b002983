//! Finite-depth trend verdicts.
//!
//! No finite computation decides a limit, so verdicts are three-valued:
//! `Certified` only for exact identities at every depth checked, `Refuted`
//! for exact witnesses (or a fired growth flag), `Evidence` otherwise.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Certified,
    Evidence,
    Refuted,
}

/// Growth threshold (nats per step) above which a log-profile counts as
/// exponential growth.
pub const DEFAULT_SLOPE_THRESHOLD: f64 = 0.05;

/// Minimum coefficient of determination for a trend fit to count.
pub const MIN_R2: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`. A perfectly flat series
/// has `r2 = 1`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy <= f64::EPSILON * f64::EPSILON * nf {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some(LinearFit {
        slope,
        intercept,
        r2,
        points: n,
    })
}

/// Fit over the upper half of a profile indexed from `first_index`, so that
/// transients at small depth do not drive the verdict. Needs three points.
pub fn tail_fit(first_index: usize, ys: &[f64]) -> Option<LinearFit> {
    let start = ys.len() / 2;
    let tail = &ys[start..];
    if tail.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = (0..tail.len()).map(|i| (first_index + start + i) as f64).collect();
    linear_fit(&xs, tail)
}

/// Whether a tail fit shows linear growth of a log-quantity.
pub fn grows_linearly(fit: Option<&LinearFit>, threshold: f64) -> bool {
    fit.is_some_and(|f| f.slope > threshold && f.r2 >= MIN_R2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [0.5, 1.0, 1.5, 2.0];
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-15);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(grows_linearly(Some(&fit), 0.05));
    }

    #[test]
    fn flat_series_does_not_grow() {
        let ys = [0.3; 10];
        let fit = tail_fit(1, &ys).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert!(!grows_linearly(Some(&fit), DEFAULT_SLOPE_THRESHOLD));
        assert!(tail_fit(1, &[1.0, 2.0, 3.0, 4.0]).is_none());
    }
}
