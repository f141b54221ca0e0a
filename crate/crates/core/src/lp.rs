//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `min cᵀx  s.t.  Ax = b, x ≥ 0` on small dense instances. Bland's
//! smallest-index rule rules out cycling, so degenerate transportation
//! polytopes terminate.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Constraint rows, each of length `c.len()`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    /// rows × (cols + 1); last column is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        self.basis[r] = col;
    }

    /// Runs Bland's rule over the columns allowed by `active`.
    fn optimize(&mut self, cost: &[f64], active: usize) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..active).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .zip(&self.rows)
                        .map(|(&bj, row)| cost[bj] * row[j])
                        .sum::<f64>();
                reduced < -COST_TOL
            });
            let Some(col) = entering else {
                return Ok(());
            };
            let rhs = self.cols;
            let leaving = (0..self.rows.len())
                .filter(|&i| self.rows[i][col] > PIVOT_TOL)
                .min_by(|&i, &k| {
                    let ri = self.rows[i][rhs] / self.rows[i][col];
                    let rk = self.rows[k][rhs] / self.rows[k][col];
                    ri.total_cmp(&rk).then(self.basis[i].cmp(&self.basis[k]))
                });
            let Some(r) = leaving else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, col);
        }
        Err(Error::NoConvergence(MAX_PIVOTS))
    }
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.c.len();
        let m = self.a.len();
        if self.b.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: self.b.len() });
        }
        if let Some(row) = self.a.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: row.len() });
        }

        // phase 1: one artificial per row, rows flipped so b ≥ 0
        let cols = n + m;
        let rows = self
            .a
            .iter()
            .zip(&self.b)
            .enumerate()
            .map(|(i, (row, &b))| {
                let s = if b < 0.0 { -1.0 } else { 1.0 };
                let mut t: Vec<f64> = row.iter().map(|v| s * v).collect();
                t.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
                t.push(s * b);
                t
            })
            .collect();
        let mut tab = Tableau { rows, basis: (n..cols).collect(), cols };
        let phase1_cost: Vec<f64> = (0..cols).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
        tab.optimize(&phase1_cost, cols)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.rows)
            .filter(|(&bj, _)| bj >= n)
            .map(|(_, row)| row[cols])
            .sum();
        let scale = 1.0 + self.b.iter().map(|v| v.abs()).sum::<f64>();
        if infeasibility > FEAS_TOL * scale {
            return Err(Error::Infeasible);
        }

        // drive artificials out of the basis; rows that cannot pivot are redundant
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= n {
                let col = (0..n).find(|&j| tab.rows[r][j].abs() > PIVOT_TOL);
                match col {
                    Some(j) => tab.pivot(r, j),
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }

        // phase 2 on the original columns
        for row in &mut tab.rows {
            let rhs = row[cols];
            row.truncate(n);
            row.push(rhs);
        }
        tab.cols = n;
        tab.optimize(&self.c, n)?;

        let mut x = vec![0.0; n];
        for (&bj, row) in tab.basis.iter().zip(&tab.rows) {
            x[bj] = row[n].max(0.0);
        }
        let objective = x.iter().zip(&self.c).map(|(xi, ci)| xi * ci).sum();
        Ok(LpSolution { objective, x })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let lp = LinearProgram {
            a: vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            b: vec![4.0, 6.0],
            c: vec![-1.0, -1.0, 0.0, 0.0],
        };
        let s = lp.solve().unwrap();
        assert!((s.objective + 2.8).abs() < 1e-12, "{}", s.objective);
        assert!((s.x[0] - 1.6).abs() < 1e-12 && (s.x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        // x + y = 1 stated twice, once negated
        let lp = LinearProgram {
            a: vec![vec![1.0, 1.0], vec![-1.0, -1.0]],
            b: vec![1.0, -1.0],
            c: vec![2.0, 1.0],
        };
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = LinearProgram { a: vec![vec![1.0], vec![1.0]], b: vec![1.0, 2.0], c: vec![0.0] };
        assert!(matches!(lp.solve(), Err(Error::Infeasible)));
        let lp = LinearProgram { a: vec![vec![1.0, -1.0]], b: vec![1.0], c: vec![-1.0, 0.0] };
        assert!(matches!(lp.solve(), Err(Error::Unbounded)));
    }
}
