//! Minimax (Chebyshev) fitting: `min_x max_z |a_z·x - b_z|`.
//!
//! Solved through its dual
//!
//! ```text
//! max  Σ_z b_z (u_z - v_z)
//! s.t. Σ_z a_z (u_z - v_z) = 0,   Σ_z (u_z + v_z) = 1,   u, v >= 0
//! ```
//!
//! which has only `dim + 1` rows however many words are fitted. A revised
//! simplex with an explicit basis inverse runs two phases over it; the
//! optimal simplex multipliers are `(-x, -t)`.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const MAX_ITERATIONS: usize = 200_000;
const REFACTOR_EVERY: usize = 64;
/// Degenerate pivots in a row before pricing switches to Bland's rule.
const STALL_LIMIT: usize = 50;

#[derive(Clone, Debug)]
pub struct ChebyshevSolution {
    pub x: Vec<f64>,
    /// Optimal objective `max_z |a_z·x - b_z|` as reported by the dual.
    pub t: f64,
    pub iterations: usize,
}

struct Problem<'a> {
    rows: &'a [Vec<f64>],
    rhs: &'a [f64],
    dim: usize,
}

impl Problem<'_> {
    fn m(&self) -> usize {
        self.dim + 1
    }

    fn n_real(&self) -> usize {
        2 * self.rows.len()
    }

    /// Column `j`: real columns first (`u_z`, `v_z` interleaved), then one
    /// artificial per row.
    fn column(&self, j: usize) -> Vec<f64> {
        let m = self.m();
        if j >= self.n_real() {
            let mut e = vec![0.0; m];
            e[j - self.n_real()] = 1.0;
            return e;
        }
        let z = j / 2;
        let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut col: Vec<f64> = self.rows[z].iter().map(|a| s * a).collect();
        col.push(1.0);
        col
    }

    fn cost(&self, j: usize, phase_one: bool) -> f64 {
        match (phase_one, j >= self.n_real()) {
            (true, true) => 1.0,
            (true, false) | (false, true) => 0.0,
            // Minimize the negated dual objective.
            (false, false) => {
                let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
                -s * self.rhs[j / 2]
            }
        }
    }
}

struct Tableau<'a> {
    p: Problem<'a>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<Vec<f64>>,
    xb: Vec<f64>,
    iterations: usize,
}

fn invert(mut a: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty");
        if a[piv][col].abs() < 1e-14 {
            return Err(Error::Numerical("singular simplex basis".into()));
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for k in 0..n {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for k in 0..n {
                    a[r][k] -= f * a[col][k];
                    inv[r][k] -= f * inv[col][k];
                }
            }
        }
    }
    Ok(inv)
}

impl<'a> Tableau<'a> {
    fn new(p: Problem<'a>) -> Self {
        let m = p.m();
        let n_real = p.n_real();
        let basis: Vec<usize> = (n_real..n_real + m).collect();
        let mut in_basis = vec![false; n_real + m];
        for &b in &basis {
            in_basis[b] = true;
        }
        let binv = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        // rhs of the dual: zeros, then the normalisation row.
        let mut xb = vec![0.0; m];
        xb[m - 1] = 1.0;
        Tableau {
            p,
            basis,
            in_basis,
            binv,
            xb,
            iterations: 0,
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.p.m();
        let cols: Vec<Vec<f64>> = self.basis.iter().map(|&j| self.p.column(j)).collect();
        let mut b = vec![vec![0.0; m]; m];
        for (c, col) in cols.iter().enumerate() {
            for r in 0..m {
                b[r][c] = col[r];
            }
        }
        self.binv = invert(b)?;
        self.xb = (0..m).map(|i| self.binv[i][m - 1]).collect();
        for x in &mut self.xb {
            if *x < 0.0 && *x > -1e-12 {
                *x = 0.0;
            }
        }
        Ok(())
    }

    fn multipliers(&self, phase_one: bool) -> Vec<f64> {
        let m = self.p.m();
        let mut y = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = self.p.cost(j, phase_one);
            if c != 0.0 {
                for (yi, bi) in y.iter_mut().zip(&self.binv[r]) {
                    *yi += c * bi;
                }
            }
        }
        y
    }

    fn ftran(&self, col: &[f64]) -> Vec<f64> {
        self.binv
            .iter()
            .map(|row| row.iter().zip(col).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn pivot(&mut self, leave: usize, enter: usize, w: &[f64]) {
        let m = self.p.m();
        let d = w[leave];
        let theta = self.xb[leave] / d;
        for k in 0..m {
            self.binv[leave][k] /= d;
        }
        let lead = self.binv[leave].clone();
        for r in 0..m {
            if r != leave && w[r] != 0.0 {
                for k in 0..m {
                    self.binv[r][k] -= w[r] * lead[k];
                }
                self.xb[r] -= w[r] * theta;
                if self.xb[r] < 0.0 && self.xb[r] > -1e-12 {
                    self.xb[r] = 0.0;
                }
            }
        }
        self.xb[leave] = theta;
        self.in_basis[self.basis[leave]] = false;
        self.in_basis[enter] = true;
        self.basis[leave] = enter;
    }

    fn run(&mut self, phase_one: bool) -> Result<()> {
        let n_real = self.p.n_real();
        let n_cols = if phase_one { n_real + self.p.m() } else { n_real };
        let scale = 1.0 + self.p.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let tol = 1e-12 * scale;
        let mut stall = 0;
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(Error::Numerical("simplex iteration limit".into()));
            }
            if self.iterations % REFACTOR_EVERY == REFACTOR_EVERY - 1 {
                self.refactor()?;
            }
            let y = self.multipliers(phase_one);
            let bland = stall >= STALL_LIMIT;
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..n_cols {
                if self.in_basis[j] {
                    continue;
                }
                let col = self.p.column(j);
                let d = self.p.cost(j, phase_one) - y.iter().zip(&col).map(|(a, b)| a * b).sum::<f64>();
                if d < -tol {
                    if bland {
                        enter = Some((j, d));
                        break;
                    }
                    if enter.is_none_or(|(_, best)| d < best) {
                        enter = Some((j, d));
                    }
                }
            }
            let Some((enter, _)) = enter else {
                return Ok(());
            };
            let w = self.ftran(&self.p.column(enter));
            let mut leave: Option<(usize, f64)> = None;
            for (r, &wr) in w.iter().enumerate() {
                if wr > PIVOT_TOL {
                    let ratio = self.xb[r] / wr;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            if ratio < best - 1e-14 {
                                true
                            } else if ratio <= best + 1e-14 {
                                if bland {
                                    self.basis[r] < self.basis[l]
                                } else {
                                    wr > w[l]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((leave, ratio)) = leave else {
                return Err(Error::Numerical("dual program unbounded".into()));
            };
            stall = if ratio <= 1e-14 { stall + 1 } else { 0 };
            self.pivot(leave, enter, &w);
            self.iterations += 1;
        }
    }

    /// Pushes zero-valued artificials out of the basis where a real column can
    /// replace them; the rest sit on redundant rows.
    fn drive_out_artificials(&mut self) {
        let n_real = self.p.n_real();
        for r in 0..self.p.m() {
            if self.basis[r] < n_real {
                continue;
            }
            let row = self.binv[r].clone();
            let found = (0..n_real).filter(|&j| !self.in_basis[j]).find(|&j| {
                let col = self.p.column(j);
                let v: f64 = row.iter().zip(&col).map(|(a, b)| a * b).sum();
                v.abs() > 1e-9
            });
            if let Some(j) = found {
                let w = self.ftran(&self.p.column(j));
                self.xb[r] = 0.0;
                self.pivot(r, j, &w);
            }
        }
    }
}

/// Minimises `max_z |rows[z]·x - rhs[z]|` over `x ∈ R^dim`.
pub fn chebyshev(rows: &[Vec<f64>], rhs: &[f64], dim: usize) -> Result<ChebyshevSolution> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to fit".into()));
    }
    if rows.len() != rhs.len() || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidArgument("ragged fitting system".into()));
    }
    let mut tab = Tableau::new(Problem { rows, rhs, dim });
    tab.run(true)?;
    let infeasibility: f64 = tab
        .basis
        .iter()
        .zip(&tab.xb)
        .filter(|(&j, _)| j >= tab.p.n_real())
        .map(|(_, &x)| x)
        .sum();
    if infeasibility > 1e-9 {
        return Err(Error::Numerical(format!(
            "phase one left infeasibility {infeasibility:e}"
        )));
    }
    tab.drive_out_artificials();
    tab.refactor()?;
    tab.run(false)?;
    tab.refactor()?;
    let y = tab.multipliers(false);
    // Dual feasibility reads `y_t <= -|a_z·(-y_x) - b_z|` for every z.
    let x: Vec<f64> = y[..dim].iter().map(|v| -v).collect();
    let t = -y[dim];
    Ok(ChebyshevSolution {
        x,
        t,
        iterations: tab.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defect(rows: &[Vec<f64>], rhs: &[f64], x: &[f64]) -> f64 {
        rows.iter()
            .zip(rhs)
            .map(|(a, b)| (a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_fit_is_midrange() {
        let rows = vec![vec![1.0]; 3];
        let rhs = [0.0, 4.0, 1.0];
        let s = chebyshev(&rows, &rhs, 1).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12);
        assert!((s.t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn line_fit_matches_equioscillation() {
        // Best line through (0,0), (1,1), (2,0): slope 0, level 1/2.
        let rows = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]];
        let rhs = [0.0, 1.0, 0.0];
        let s = chebyshev(&rows, &rhs, 2).unwrap();
        assert!((s.t - 0.5).abs() < 1e-12);
        assert!((defect(&rows, &rhs, &s.x) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn consistent_system_fits_exactly() {
        let rows = vec![vec![2.0, 1.0], vec![1.0, 2.0], vec![3.0, 3.0], vec![0.0, 1.0]];
        let x = [0.7, -0.2];
        let rhs: Vec<f64> = rows.iter().map(|r| r[0] * x[0] + r[1] * x[1]).collect();
        let s = chebyshev(&rows, &rhs, 2).unwrap();
        assert!(s.t.abs() < 1e-12);
        assert!((s.x[0] - 0.7).abs() < 1e-12 && (s.x[1] + 0.2).abs() < 1e-12);
    }

    #[test]
    fn unused_variables_are_harmless() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let rhs = [1.0, 3.0];
        let s = chebyshev(&rows, &rhs, 2).unwrap();
        assert!((s.t - 1.0).abs() < 1e-12);
        assert!((defect(&rows, &rhs, &s.x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_systems_beat_perturbations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let dim = rng.random_range(1..4);
            let n = rng.random_range(dim + 1..12);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(0..4) as f64).collect())
                .collect();
            let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s = chebyshev(&rows, &rhs, dim).unwrap();
            let achieved = defect(&rows, &rhs, &s.x);
            assert!((achieved - s.t).abs() < 1e-9, "{achieved} vs {}", s.t);
            for _ in 0..50 {
                let x: Vec<f64> = s.x.iter().map(|v| v + rng.random_range(-0.1..0.1)).collect();
                assert!(defect(&rows, &rhs, &x) >= achieved - 1e-12);
            }
        }
    }
}
