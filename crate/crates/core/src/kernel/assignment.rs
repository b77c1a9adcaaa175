//! Rectangular max-weight matching with must-match columns.
//!
//! Rows are neighbors, columns are communications. A column is either matched
//! to exactly one row (always, when `must_match`), or left open and paid
//! `unmatched_payoff`. Each row takes at most one column. Solved as a square
//! assignment problem with dummy rows (open columns) and dummy columns (idle
//! rows) by the potential-based Hungarian method.

use crate::error::{Error, Result};
use crate::state::NEG_INF;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingProblem {
    /// `weights[row][col]`, finite or `NEG_INF`.
    pub weights: Vec<Vec<f64>>,
    pub must_match: Vec<bool>,
    /// Payoff of leaving a column open; ignored for must-match columns.
    pub unmatched_payoff: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult {
    /// Column taken by each row.
    pub assignment: Vec<Option<usize>>,
    pub value: f64,
}

impl MatchingProblem {
    pub fn new(weights: Vec<Vec<f64>>, must_match: Vec<bool>, unmatched_payoff: Vec<f64>) -> Self {
        MatchingProblem { weights, must_match, unmatched_payoff }
    }

    pub fn rows(&self) -> usize {
        self.weights.len()
    }

    pub fn cols(&self) -> usize {
        self.must_match.len()
    }

    /// Value of an assignment, `NEG_INF` if it breaks a constraint.
    pub fn evaluate(&self, assignment: &[Option<usize>]) -> f64 {
        let mut taken = vec![false; self.cols()];
        let mut v = 0.0;
        for (r, a) in assignment.iter().enumerate() {
            if let Some(c) = *a {
                if taken[c] {
                    return NEG_INF;
                }
                taken[c] = true;
                v += self.weights[r][c];
            }
        }
        for c in 0..self.cols() {
            if !taken[c] {
                if self.must_match[c] {
                    return NEG_INF;
                }
                v += self.unmatched_payoff[c];
            }
        }
        v
    }
}

/// Square gain matrix of the augmented problem; `fixed[r]` pins real rows.
fn augmented(p: &MatchingProblem, fixed: &[Option<Option<usize>>]) -> Vec<Vec<f64>> {
    let (r, c) = (p.rows(), p.cols());
    let n = r + c;
    let mut g = vec![vec![NEG_INF; n]; n];
    for row in 0..r {
        for col in 0..c {
            g[row][col] = p.weights[row][col];
        }
        g[row][c + row] = 0.0;
    }
    for col in 0..c {
        if !p.must_match[col] {
            g[r + col][col] = p.unmatched_payoff[col];
        }
        for dummy in 0..r {
            g[r + col][c + dummy] = 0.0;
        }
    }
    for (row, f) in fixed.iter().enumerate() {
        let Some(choice) = *f else { continue };
        let keep = match choice {
            Some(col) => col,
            None => c + row,
        };
        for x in 0..n {
            if x != keep {
                g[row][x] = NEG_INF;
            }
        }
        if let Some(col) = choice {
            for (y, gy) in g.iter_mut().enumerate() {
                if y != row {
                    gy[col] = NEG_INF;
                }
            }
        }
    }
    g
}

/// Min-cost perfect assignment (rows -> columns) of a square cost matrix.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Best assignment under the pins in `fixed`, or `None` if infeasible.
fn solve_pinned(p: &MatchingProblem, fixed: &[Option<Option<usize>>]) -> Option<(Vec<Option<usize>>, f64)> {
    let g = augmented(p, fixed);
    let n = g.len();
    if n == 0 {
        return Some((Vec::new(), 0.0));
    }
    let maxabs = g.iter().flatten().filter(|x| x.is_finite()).fold(0.0f64, |m, x| m.max(x.abs()));
    let big = 2.0 * n as f64 * maxabs + 1.0;
    let cost: Vec<Vec<f64>> = g
        .iter()
        .map(|row| row.iter().map(|&x| if x == NEG_INF { big } else { -x }).collect())
        .collect();
    let a = hungarian(&cost);
    if (0..n).any(|row| g[row][a[row]] == NEG_INF) {
        return None;
    }
    let cols = p.cols();
    let assignment: Vec<Option<usize>> = (0..p.rows()).map(|row| (a[row] < cols).then_some(a[row])).collect();
    let value = p.evaluate(&assignment);
    Some((assignment, value))
}

/// Maximum-weight matching; among optimal assignments the lexicographically
/// smallest one (row by row, lowest column first, "unmatched" last) is returned.
pub fn max_weight_matching(problem: &MatchingProblem) -> Result<MatchingResult> {
    let rows = problem.rows();
    if problem.weights.iter().any(|r| r.len() != problem.cols()) || problem.unmatched_payoff.len() != problem.cols() {
        return Err(Error::Argument("matching problem has inconsistent dimensions".into()));
    }
    let mut fixed: Vec<Option<Option<usize>>> = vec![None; rows];
    let (_, best) = solve_pinned(problem, &fixed)
        .ok_or_else(|| Error::InfeasibleMatching("a must-match column cannot be covered".into()))?;
    let tol = 1e-9 * (1.0 + best.abs());
    for r in 0..rows {
        let options = (0..problem.cols()).map(Some).chain(std::iter::once(None));
        for choice in options {
            if let Some(c) = choice {
                if problem.weights[r][c] == NEG_INF || fixed.iter().any(|f| *f == Some(Some(c))) {
                    continue;
                }
            }
            fixed[r] = Some(choice);
            if let Some((_, v)) = solve_pinned(problem, &fixed) {
                if v >= best - tol {
                    break;
                }
            }
            fixed[r] = None;
        }
        debug_assert!(fixed[r].is_some());
    }
    let assignment: Vec<Option<usize>> = fixed.iter().map(|f| f.flatten()).collect();
    let value = problem.evaluate(&assignment);
    Ok(MatchingResult { assignment, value })
}

#[cfg(test)]
pub(crate) fn brute_force(p: &MatchingProblem) -> (Option<Vec<Option<usize>>>, f64) {
    fn rec(p: &MatchingProblem, r: usize, cur: &mut Vec<Option<usize>>, best: &mut (Option<Vec<Option<usize>>>, f64)) {
        if r == p.rows() {
            let v = p.evaluate(cur);
            if v > best.1 {
                *best = (Some(cur.clone()), v);
            }
            return;
        }
        for choice in (0..p.cols()).map(Some).chain(std::iter::once(None)) {
            if let Some(c) = choice {
                if cur.contains(&Some(c)) {
                    continue;
                }
            }
            cur.push(choice);
            rec(p, r + 1, cur, best);
            cur.pop();
        }
    }
    let mut best = (None, NEG_INF);
    rec(p, 0, &mut Vec::new(), &mut best);
    best
}
