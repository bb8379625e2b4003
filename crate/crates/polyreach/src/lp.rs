//! Linear-program feasibility and optimization over systems `Hx <= b`.
//!
//! A two-phase dense simplex with Bland's rule. Variables are free, so the
//! solver internally splits `x = u - w` with `u, w >= 0`, adds one slack per
//! row, and uses artificials for rows with negative right-hand side. All
//! polytope predicates in this crate reduce to these two entry points.

use crate::error::{Error, Result};
use crate::matrix::{check_finite, dot, Matrix, Vector};

/// Absolute feasibility tolerance: a point is accepted when `Hx <= b + TOL`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Threshold below which a pivot element or reduced cost is treated as zero.
const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Outcome of an LP call.
///
/// `lp_feasible` reports `Feasible`/`Infeasible`; `lp_optimize` reports
/// `Optimal`/`Unbounded`/`Infeasible`.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible(Vector),
    Infeasible,
    Optimal { value: f64, point: Vector },
    Unbounded,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible(_) | LpOutcome::Optimal { .. })
    }

    pub fn witness(&self) -> Option<&Vector> {
        match self {
            LpOutcome::Feasible(x) => Some(x),
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }
}

fn check_system(h: &Matrix, b: &[f64]) -> Result<()> {
    if h.cols() == 0 {
        return Err(Error::DimensionMismatch(
            "LP requires at least one variable".into(),
        ));
    }
    if h.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "H has {} rows but b has {} entries",
            h.rows(),
            b.len()
        )));
    }
    check_finite(b, "right-hand side")
}

/// Decide whether `{x | Hx <= b}` is non-empty; on success the witness
/// satisfies every row within [`FEASIBILITY_TOL`].
pub fn lp_feasible(h: &Matrix, b: &[f64]) -> Result<LpOutcome> {
    check_system(h, b)?;
    let mut s = Simplex::new(h, b);
    Ok(match s.phase_one()? {
        PhaseOne::Feasible => LpOutcome::Feasible(s.extract_point()),
        PhaseOne::Infeasible => LpOutcome::Infeasible,
    })
}

/// Optimize `c . x` over `{x | Hx <= b}`.
pub fn lp_optimize(c: &[f64], h: &Matrix, b: &[f64], sense: Sense) -> Result<LpOutcome> {
    check_system(h, b)?;
    check_finite(c, "objective")?;
    if c.len() != h.cols() {
        return Err(Error::DimensionMismatch(format!(
            "objective has {} entries but H has {} columns",
            c.len(),
            h.cols()
        )));
    }
    let mut s = Simplex::new(h, b);
    if let PhaseOne::Infeasible = s.phase_one()? {
        return Ok(LpOutcome::Infeasible);
    }
    match s.phase_two(c, sense)? {
        PhaseTwo::Unbounded => Ok(LpOutcome::Unbounded),
        PhaseTwo::Optimal => {
            let point = s.extract_point();
            let value = dot(c, &point);
            Ok(LpOutcome::Optimal { value, point })
        }
    }
}

/// Farkas certificate of infeasibility: `y >= 0` with `yᵀH = 0` and
/// `yᵀb < 0`. Returns `None` when no certificate is found (for a feasible
/// system, or at the numerical margin).
pub fn infeasibility_certificate(h: &Matrix, b: &[f64]) -> Result<Option<Vector>> {
    check_system(h, b)?;
    let m = h.rows();
    if m == 0 {
        return Ok(None);
    }
    let ht = h.transpose();
    let mut rows: Vec<Vector> = Vec::with_capacity(2 * h.cols() + 1 + m);
    let mut rhs: Vector = Vec::new();
    for j in 0..ht.rows() {
        rows.push(ht.row_vec(j));
        rhs.push(0.0);
        rows.push(ht.row(j).iter().map(|v| -v).collect());
        rhs.push(0.0);
    }
    rows.push(b.to_vec());
    rhs.push(-1.0);
    for i in 0..m {
        let mut r = vec![0.0; m];
        r[i] = -1.0;
        rows.push(r);
        rhs.push(0.0);
    }
    let sys = Matrix::from_rows(m, &rows)?;
    match lp_feasible(&sys, &rhs)? {
        LpOutcome::Feasible(y) => Ok(Some(y)),
        _ => Ok(None),
    }
}

enum PhaseOne {
    Feasible,
    Infeasible,
}

enum PhaseTwo {
    Optimal,
    Unbounded,
}

enum LoopEnd {
    Optimal,
    Unbounded,
}

/// Full-tableau simplex state. Columns are laid out as
/// `[u_0..u_n, w_0..w_n, s_0..s_m, artificials...]`.
struct Simplex {
    t: Vec<Vector>,
    rhs: Vector,
    basis: Vec<usize>,
    n_vars: usize,
    n_structural: usize,
    n_total: usize,
    max_iter: usize,
}

impl Simplex {
    fn new(h: &Matrix, b: &[f64]) -> Self {
        let (m, n) = (h.rows(), h.cols());
        let n_structural = 2 * n + m;
        let n_art = b.iter().filter(|&&v| v < 0.0).count();
        let n_total = n_structural + n_art;
        let mut t = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n_structural;
        for i in 0..m {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; n_total];
            for j in 0..n {
                row[j] = sign * h.get(i, j);
                row[n + j] = -sign * h.get(i, j);
            }
            row[2 * n + i] = sign;
            if sign < 0.0 {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(2 * n + i);
            }
            t.push(row);
            rhs.push(sign * b[i]);
        }
        let max_iter = 100 + 10 * (m + n) * (m + n);
        Simplex {
            t,
            rhs,
            basis,
            n_vars: n,
            n_structural,
            n_total,
            max_iter,
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= pivot;
        }
        self.rhs[row] /= pivot;
        for r in 0..self.t.len() {
            if r == row {
                continue;
            }
            let factor = self.t[r][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..self.n_total {
                let delta = factor * self.t[row][j];
                self.t[r][j] -= delta;
            }
            self.t[r][col] = 0.0;
            self.rhs[r] -= factor * self.rhs[row];
            if self.rhs[r] < 0.0 && self.rhs[r] > -FEASIBILITY_TOL {
                self.rhs[r] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vector {
        let mut r = cost.to_vec();
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = cost[bi];
            if cb == 0.0 {
                continue;
            }
            for j in 0..self.n_total {
                r[j] -= cb * self.t[i][j];
            }
        }
        r
    }

    /// Bland's rule minimization loop. Only columns `< col_limit` may enter.
    fn run(&mut self, cost: &[f64], col_limit: usize) -> Result<LoopEnd> {
        let mut reduced = self.reduced_costs(cost);
        for _ in 0..self.max_iter {
            let entering = (0..col_limit).find(|&j| reduced[j] < -PIVOT_TOL);
            let Some(col) = entering else {
                return Ok(LoopEnd::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let coeff = self.t[i][col];
                if coeff <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[i] / coeff;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Ok(LoopEnd::Unbounded);
            };
            self.pivot(row, col);
            let scale = reduced[col];
            for j in 0..self.n_total {
                reduced[j] -= scale * self.t[row][j];
            }
            reduced[col] = 0.0;
        }
        Err(Error::SolverFailure {
            iterations: self.max_iter,
        })
    }

    fn phase_one(&mut self) -> Result<PhaseOne> {
        if self.n_structural == self.n_total {
            // No artificials: the all-slack basis is already feasible.
            return Ok(PhaseOne::Feasible);
        }
        let mut cost = vec![0.0; self.n_total];
        for j in self.n_structural..self.n_total {
            cost[j] = 1.0;
        }
        // Artificials start basic and are never allowed back in.
        self.run(&cost, self.n_structural)?;
        let residual: f64 = self
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= self.n_structural)
            .map(|(i, _)| self.rhs[i])
            .sum();
        if residual > FEASIBILITY_TOL {
            return Ok(PhaseOne::Infeasible);
        }
        self.evict_artificials();
        Ok(PhaseOne::Feasible)
    }

    /// Pivot still-basic artificials out (they sit at zero); rows where no
    /// structural pivot exists are redundant and dropped.
    fn evict_artificials(&mut self) {
        let mut row = 0;
        while row < self.t.len() {
            if self.basis[row] < self.n_structural {
                row += 1;
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n_structural {
                let mag = self.t[row][j].abs();
                if mag > PIVOT_TOL && best.is_none_or(|(_, m)| mag > m) {
                    best = Some((j, mag));
                }
            }
            match best {
                Some((col, _)) => {
                    self.pivot(row, col);
                    row += 1;
                }
                None => {
                    self.t.remove(row);
                    self.rhs.remove(row);
                    self.basis.remove(row);
                }
            }
        }
    }

    fn phase_two(&mut self, c: &[f64], sense: Sense) -> Result<PhaseTwo> {
        let flip = match sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; self.n_total];
        for j in 0..self.n_vars {
            cost[j] = flip * c[j];
            cost[self.n_vars + j] = -flip * c[j];
        }
        match self.run(&cost, self.n_structural)? {
            LoopEnd::Optimal => Ok(PhaseTwo::Optimal),
            LoopEnd::Unbounded => Ok(PhaseTwo::Unbounded),
        }
    }

    fn extract_point(&self) -> Vector {
        let mut x = vec![0.0; self.n_vars];
        for (i, &col) in self.basis.iter().enumerate() {
            if col < self.n_vars {
                x[col] += self.rhs[i];
            } else if col < 2 * self.n_vars {
                x[col - self.n_vars] -= self.rhs[i];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(cols: usize, rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(cols, rows).unwrap()
    }

    #[test]
    fn unit_interval_is_feasible() {
        let h = mat(1, &[vec![1.0], vec![-1.0]]);
        let out = lp_feasible(&h, &[1.0, 1.0]).unwrap();
        let w = out.witness().expect("feasible");
        assert!(w[0] >= -1.0 - FEASIBILITY_TOL && w[0] <= 1.0 + FEASIBILITY_TOL);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        // x <= -2 and x >= -1
        let h = mat(1, &[vec![1.0], vec![-1.0]]);
        let out = lp_feasible(&h, &[-2.0, 1.0]).unwrap();
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn empty_constraint_set_is_feasible_at_origin() {
        let h = Matrix::zeros(0, 3);
        let out = lp_feasible(&h, &[]).unwrap();
        assert_eq!(out, LpOutcome::Feasible(vec![0.0, 0.0, 0.0]));
    }

    #[test]
    fn optimize_interval_max() {
        let h = mat(1, &[vec![1.0], vec![-1.0]]);
        let out = lp_optimize(&[1.0], &h, &[1.0, 1.0], Sense::Maximize).unwrap();
        match out {
            LpOutcome::Optimal { value, point } => {
                assert!((value - 1.0).abs() < 1e-9);
                assert!((point[0] - 1.0).abs() < 1e-9);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn optimize_detects_unbounded() {
        // max x subject to -x <= 0
        let h = mat(1, &[vec![-1.0]]);
        let out = lp_optimize(&[1.0], &h, &[0.0], Sense::Maximize).unwrap();
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn box_support_function() {
        // max x1 + x2 over the unit box
        let h = mat(
            2,
            &[
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
        );
        let b = [1.0, 1.0, 1.0, 1.0];
        let out = lp_optimize(&[1.0, 1.0], &h, &b, Sense::Maximize).unwrap();
        match out {
            LpOutcome::Optimal { value, point } => {
                assert!((value - 2.0).abs() < 1e-9);
                assert!((point[0] - 1.0).abs() < 1e-9);
                assert!((point[1] - 1.0).abs() < 1e-9);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn optimize_infeasible_system() {
        let h = mat(1, &[vec![1.0], vec![-1.0]]);
        let out = lp_optimize(&[1.0], &h, &[-2.0, 1.0], Sense::Minimize).unwrap();
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let h = mat(2, &[vec![1.0, 0.0]]);
        assert!(lp_feasible(&h, &[1.0, 2.0]).is_err());
        assert!(lp_optimize(&[1.0], &h, &[1.0], Sense::Minimize).is_err());
    }

    #[test]
    fn unconstrained_optimization() {
        let h = Matrix::zeros(0, 2);
        assert_eq!(
            lp_optimize(&[1.0, 0.0], &h, &[], Sense::Maximize).unwrap(),
            LpOutcome::Unbounded
        );
        match lp_optimize(&[0.0, 0.0], &h, &[], Sense::Maximize).unwrap() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, 0.0),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn witness_respects_tolerance() {
        // Thin wedge: x1 + x2 <= 1e-3, x1 - x2 <= 1e-3, -x1 <= 0.01
        let h = mat(2, &[vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 0.0]]);
        let b = [1e-3, 1e-3, 0.01];
        let out = lp_feasible(&h, &b).unwrap();
        let w = out.witness().expect("feasible");
        for i in 0..h.rows() {
            assert!(dot(h.row(i), w) <= b[i] + FEASIBILITY_TOL);
        }
    }

    #[test]
    fn certificate_exists_for_infeasible_system() {
        let h = mat(1, &[vec![1.0], vec![-1.0]]);
        let b = [-2.0, 1.0];
        let y = infeasibility_certificate(&h, &b).unwrap().expect("farkas");
        assert!(y.iter().all(|&v| v >= -1e-9));
        let yh: f64 = y[0] * 1.0 + -y[1];
        assert!(yh.abs() <= 1e-7);
        assert!(y[0] * b[0] + y[1] * b[1] < 0.0);
    }

    #[test]
    fn certificate_absent_for_feasible_system() {
        let h = mat(1, &[vec![1.0], vec![-1.0]]);
        assert!(infeasibility_certificate(&h, &[1.0, 1.0])
            .unwrap()
            .is_none());
    }

    #[test]
    fn degenerate_equalities_terminate() {
        // x = 0.5 written as inequality pair, plus redundant copies.
        let h = mat(
            1,
            &[vec![1.0], vec![-1.0], vec![1.0], vec![-1.0], vec![1.0]],
        );
        let b = [0.5, -0.5, 0.5, -0.5, 0.5];
        let out = lp_optimize(&[1.0], &h, &b, Sense::Maximize).unwrap();
        match out {
            LpOutcome::Optimal { value, .. } => assert!((value - 0.5).abs() < 1e-9),
            other => panic!("expected optimal, got {other:?}"),
        }
    }
}
