//! Phase-I simplex feasibility solver for small dense linear programs.
//!
//! Finds a free vector `x` with `A_eq x = b_eq` and `A_ub x <= b_ub`, or
//! reports infeasibility. Free variables are split into positive parts,
//! inequalities get slacks, and every row receives an artificial variable;
//! the artificial sum is driven to zero with Bland's rule, which cannot
//! cycle. Problem sizes here are tiny (a handful of contact forces), so a
//! dense tableau is the right tool.

/// Feasibility problem over `n` free variables.
#[derive(Debug, Clone, Default)]
pub struct FeasibilityProblem {
    pub n: usize,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
}

impl FeasibilityProblem {
    pub fn new(n: usize) -> Self {
        FeasibilityProblem {
            n,
            ..Default::default()
        }
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.n);
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn add_ub(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.n);
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }
}

const TOL: f64 = 1e-9;

/// Solve the feasibility problem; returns a witness `x` or `None`.
pub fn solve_feasibility(p: &FeasibilityProblem) -> Option<Vec<f64>> {
    let m = p.a_eq.len() + p.a_ub.len();
    if m == 0 {
        return Some(vec![0.0; p.n]);
    }
    let n_split = 2 * p.n;
    let n_slack = p.a_ub.len();
    let n_total = n_split + n_slack + m;

    // rows: [A(+x|-x) | slacks | artificials | b], b normalized nonnegative
    let mut tab = vec![vec![0.0; n_total + 1]; m];
    for (i, (row, &rhs)) in p
        .a_eq
        .iter()
        .chain(&p.a_ub)
        .zip(p.b_eq.iter().chain(&p.b_ub))
        .enumerate()
    {
        for (j, &a) in row.iter().enumerate() {
            tab[i][j] = a;
            tab[i][p.n + j] = -a;
        }
        if i >= p.a_eq.len() {
            tab[i][n_split + (i - p.a_eq.len())] = 1.0;
        }
        tab[i][n_total] = rhs;
        if tab[i][n_total] < 0.0 {
            for v in tab[i].iter_mut() {
                *v = -*v;
            }
        }
        tab[i][n_split + n_slack + i] = 1.0;
    }

    let mut basis: Vec<usize> = (0..m).map(|i| n_split + n_slack + i).collect();

    // Phase-I objective: minimize the artificial sum. Reduced costs are the
    // negated column sums over rows whose basic variable is artificial.
    loop {
        let mut reduced = vec![0.0; n_total];
        let mut objective = 0.0;
        for (i, &bv) in basis.iter().enumerate() {
            if bv >= n_split + n_slack {
                for j in 0..n_total {
                    reduced[j] -= tab[i][j];
                }
                objective += tab[i][n_total];
            }
        }

        // Bland: first improving non-artificial column by index
        let entering = (0..n_split + n_slack).find(|&j| reduced[j] < -TOL);
        let Some(col) = entering else {
            if objective > TOL {
                return None;
            }
            break;
        };

        // ratio test, ties broken by smallest basic variable index
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if tab[i][col] > TOL {
                let ratio = tab[i][n_total] / tab[i][col];
                let better = match leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - TOL || (ratio < lr + TOL && basis[i] < basis[li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((pivot_row, _)) = leave else {
            // unbounded entering column cannot raise artificial sum to zero
            return None;
        };

        let pivot = tab[pivot_row][col];
        for v in tab[pivot_row].iter_mut() {
            *v /= pivot;
        }
        for i in 0..m {
            if i != pivot_row && tab[i][col].abs() > 0.0 {
                let factor = tab[i][col];
                let (pr, cur) = if i < pivot_row {
                    let (a, b) = tab.split_at_mut(pivot_row);
                    (&b[0], &mut a[i])
                } else {
                    let (a, b) = tab.split_at_mut(i);
                    (&a[pivot_row], &mut b[0])
                };
                for (v, pv) in cur.iter_mut().zip(pr) {
                    *v -= factor * pv;
                }
            }
        }
        basis[pivot_row] = col;
    }

    let mut x = vec![0.0; p.n];
    for (i, &bv) in basis.iter().enumerate() {
        let val = tab[i][n_total];
        if bv < p.n {
            x[bv] += val;
        } else if bv < n_split {
            x[bv - p.n] -= val;
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_witness(p: &FeasibilityProblem, x: &[f64], tol: f64) {
        for (row, &rhs) in p.a_eq.iter().zip(&p.b_eq) {
            let v: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            assert!((v - rhs).abs() <= tol, "eq residual {v} vs {rhs}");
        }
        for (row, &rhs) in p.a_ub.iter().zip(&p.b_ub) {
            let v: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            assert!(v <= rhs + tol, "ub violated: {v} > {rhs}");
        }
    }

    #[test]
    fn trivial_cases() {
        let p = FeasibilityProblem::new(2);
        assert_eq!(solve_feasibility(&p), Some(vec![0.0, 0.0]));

        // x = 1 and x <= 0 conflict
        let mut p = FeasibilityProblem::new(1);
        p.add_eq(vec![1.0], 1.0);
        p.add_ub(vec![1.0], 0.0);
        assert!(solve_feasibility(&p).is_none());

        // x1 + x2 = 1 with both nonnegative
        let mut p = FeasibilityProblem::new(2);
        p.add_eq(vec![1.0, 1.0], 1.0);
        p.add_ub(vec![-1.0, 0.0], 0.0);
        p.add_ub(vec![0.0, -1.0], 0.0);
        let x = solve_feasibility(&p).unwrap();
        check_witness(&p, &x, 1e-9);
    }

    #[test]
    fn negative_rhs_and_free_variables() {
        // x <= -3 and x >= -5 (free variable must go negative)
        let mut p = FeasibilityProblem::new(1);
        p.add_ub(vec![1.0], -3.0);
        p.add_ub(vec![-1.0], 5.0);
        let x = solve_feasibility(&p).unwrap();
        assert!(x[0] <= -3.0 + 1e-9 && x[0] >= -5.0 - 1e-9);

        let mut p = FeasibilityProblem::new(1);
        p.add_ub(vec![1.0], -3.0);
        p.add_ub(vec![-1.0], 2.0); // x >= -2: empty
        assert!(solve_feasibility(&p).is_none());
    }

    #[test]
    fn constructed_feasible_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let n = rng.random_range(2..6);
            let me = rng.random_range(0..3.min(n));
            let mu = rng.random_range(1..6);
            let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut p = FeasibilityProblem::new(n);
            for _ in 0..me {
                let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let rhs: f64 = row.iter().zip(&x0).map(|(a, b)| a * b).sum();
                p.add_eq(row, rhs);
            }
            for _ in 0..mu {
                let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let rhs: f64 = row.iter().zip(&x0).map(|(a, b)| a * b).sum::<f64>()
                    + rng.random_range(0.0..1.0);
                p.add_ub(row, rhs);
            }
            let x = solve_feasibility(&p).expect("constructed instance is feasible");
            check_witness(&p, &x, 1e-7);
        }
    }

    #[test]
    fn contradictory_equalities_are_infeasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..100 {
            let n = rng.random_range(2..5);
            let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut p = FeasibilityProblem::new(n);
            p.add_eq(row.clone(), 1.0);
            p.add_eq(row, 1.5);
            assert!(solve_feasibility(&p).is_none());
        }
    }

    #[test]
    fn degenerate_rows_terminate() {
        // redundant constraints exercise Bland's anti-cycling pivot choice
        let mut p = FeasibilityProblem::new(2);
        p.add_eq(vec![1.0, 1.0], 1.0);
        p.add_eq(vec![2.0, 2.0], 2.0);
        p.add_ub(vec![1.0, 0.0], 1.0);
        p.add_ub(vec![1.0, 0.0], 1.0);
        p.add_ub(vec![-1.0, 0.0], 0.0);
        p.add_ub(vec![0.0, -1.0], 0.0);
        let x = solve_feasibility(&p).unwrap();
        check_witness(&p, &x, 1e-9);
    }
}
