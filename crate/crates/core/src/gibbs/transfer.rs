//! Perron data of the weighted transfer matrix of a locally constant potential.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::MarkovMeasure;
use crate::potential::LocallyConstantPotential;
use crate::shift::{Sft, Word};

const CONVERGENCE_TOL: f64 = 1e-14;
const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 2_000_000;

#[derive(Clone, Debug)]
pub struct GibbsData {
    pub pressure: f64,
    pub eigenvalue: f64,
    pub states: Vec<Word>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub measure: MarkovMeasure,
}

#[derive(Clone, Debug, Serialize)]
pub struct GibbsSummary {
    pub pressure: f64,
    pub eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
    pub entropy: f64,
}

impl GibbsData {
    pub fn summary(&self) -> GibbsSummary {
        GibbsSummary {
            pressure: self.pressure,
            eigenvalue: self.eigenvalue,
            residual: self.residual,
            iterations: self.iterations,
            entropy: self.measure.entropy(),
        }
    }
}

/// States (`max(r-1,1)`-blocks) and the weighted matrix `W[s][t] = e^{f(s·a)}`
/// for `t = σ(s)·a`.
pub fn weighted_matrix(sft: &Sft, f: &LocallyConstantPotential) -> Result<(Vec<Word>, Vec<Vec<f64>>)> {
    if f.alphabet() != sft.alphabet() {
        return Err(Error::AlphabetMismatch("potential and shift use different alphabets".into()));
    }
    let r = f.range();
    let k = r.saturating_sub(1).max(1);
    let states = sft.enumerate_blocks(k);
    let index: HashMap<&[usize], usize> = states.iter().enumerate().map(|(i, s)| (s.as_ref(), i)).collect();
    let n = states.len();
    let mut w = vec![vec![0.0; n]; n];
    for (i, s) in states.iter().enumerate() {
        for &a in sft.successors(*s.last().expect("k >= 1")) {
            let ext = s.concat(&[a]);
            let t = index[&ext[1..]];
            w[i][t] = f.value(&ext[ext.len() - r..]).exp();
        }
    }
    Ok((states, w))
}

fn apply(w: &[Vec<f64>], x: &[f64], transpose: bool) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if transpose { w[j][i] * x[j] } else { w[i][j] * x[j] })
                .sum()
        })
        .collect()
}

/// Power iteration on `W + I` from the uniform vector. The shift by the
/// identity keeps periodic matrices from oscillating; it moves every
/// eigenvalue by one and leaves eigenvectors unchanged.
fn perron_vector(w: &[Vec<f64>], transpose: bool) -> Result<(Vec<f64>, usize)> {
    let n = w.len();
    let mut x = vec![1.0 / n as f64; n];
    for it in 1..=MAX_ITERATIONS {
        let wx = apply(w, &x, transpose);
        let mut y: Vec<f64> = wx.iter().zip(&x).map(|(a, b)| a + b).collect();
        let norm: f64 = y.iter().sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical("power iteration lost positivity".into()));
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let diff: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        if diff < CONVERGENCE_TOL {
            return Ok((x, it));
        }
    }
    Ok((x, MAX_ITERATIONS))
}

pub fn transfer_pressure(sft: &Sft, f: &LocallyConstantPotential) -> Result<GibbsData> {
    if !sft.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let (states, w) = weighted_matrix(sft, f)?;
    let (right, it_r) = perron_vector(&w, false)?;
    let (left, it_l) = perron_vector(&w, true)?;
    let wr = apply(&w, &right, false);
    let lambda: f64 = wr.iter().sum();
    let residual = wr
        .iter()
        .zip(&right)
        .map(|(a, b)| (a - lambda * b).abs())
        .fold(0.0, f64::max);
    if residual > RESIDUAL_TOL {
        return Err(Error::Numerical(format!("eigen-residual {residual:e} above tolerance")));
    }
    if right.iter().any(|&v| v <= 0.0) || left.iter().any(|&v| v <= 0.0) {
        return Err(Error::Numerical("Perron vector is not strictly positive".into()));
    }
    let n = states.len();
    let p: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| w[i][j] * right[j] / (lambda * right[i])).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect();
    let z: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
    let pi: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l * r / z).collect();
    let measure = MarkovMeasure::new(sft.alphabet().to_vec(), states[0].len(), states.clone(), p, pi)?;
    Ok(GibbsData {
        pressure: lambda.ln(),
        eigenvalue: lambda,
        states,
        left,
        right,
        residual,
        iterations: it_r.max(it_l),
        measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shift_gives_uniform_bernoulli() {
        let sft = Sft::full(2);
        let g = transfer_pressure(&sft, &LocallyConstantPotential::zero(&sft)).unwrap();
        assert!((g.eigenvalue - 2.0).abs() < 1e-12);
        assert!((g.pressure - 2f64.ln()).abs() < 1e-12);
        assert!((g.measure.cylinder(&[0, 1, 1]) - 0.125).abs() < 1e-12);
        assert!(g.right.iter().all(|&v| (v - 0.5).abs() < 1e-12));
    }

    #[test]
    fn golden_mean_parry_measure() {
        let sft = Sft::golden_mean();
        let g = transfer_pressure(&sft, &LocallyConstantPotential::zero(&sft)).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((g.pressure - phi.ln()).abs() < 1e-12);
        assert!((g.measure.entropy() - phi.ln()).abs() < 1e-12);
        // Parry: μ[a] = φ²/(1+φ²)
        assert!((g.measure.cylinder(&[0]) - phi * phi / (1.0 + phi * phi)).abs() < 1e-12);
    }

    #[test]
    fn constant_shift_moves_pressure_only() {
        let sft = Sft::golden_mean();
        let f = LocallyConstantPotential::from_fn(&sft, 2, |w| 0.3 * w[0] as f64 - 0.1 * w[1] as f64).unwrap();
        let g = LocallyConstantPotential::from_fn(&sft, 2, |w| 0.3 * w[0] as f64 - 0.1 * w[1] as f64 + 0.7).unwrap();
        let a = transfer_pressure(&sft, &f).unwrap();
        let b = transfer_pressure(&sft, &g).unwrap();
        assert!((b.pressure - a.pressure - 0.7).abs() < 1e-12);
        for u in [vec![0], vec![0, 1], vec![1, 0, 0]] {
            assert!((a.measure.cylinder(&u) - b.measure.cylinder(&u)).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_matrix_converges() {
        let cyc = Sft::new(vec!["p".into(), "q".into()], vec![vec![0, 1], vec![1, 0]]).unwrap();
        let g = transfer_pressure(&cyc, &LocallyConstantPotential::zero(&cyc)).unwrap();
        assert!(g.pressure.abs() < 1e-12);
    }

    #[test]
    fn reducible_is_rejected() {
        let two = Sft::new(vec!["a".into(), "b".into()], vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert!(matches!(
            transfer_pressure(&two, &LocallyConstantPotential::zero(&two)),
            Err(Error::NotIrreducible)
        ));
    }
}
