//! Optimal one-to-one assignment between two entity sets (the Hungarian
//! method), plus a brute-force reference evaluator for cross-checking.

use crate::error::{Error, Result};

/// A maximum-score assignment: `pairs` holds min(m, n) disjoint (row, col)
/// matches sorted by row; `total` sums their scores in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

fn validate(scores: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = scores.first() else {
        return Ok(0);
    };
    let n = first.len();
    for (i, row) in scores.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Invalid(format!(
                "score matrix is ragged: row {i} has {} columns, row 0 has {n}",
                row.len()
            )));
        }
        for (j, &s) in row.iter().enumerate() {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::Invalid(format!(
                    "score[{i}][{j}] = {s}; scores must be finite and nonnegative"
                )));
            }
        }
    }
    Ok(n)
}

/// Minimum-cost perfect matching on a square matrix via shortest augmenting
/// paths with potentials, O(n^3). Returns col assigned to each row.
fn min_cost_square(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // row matched to each column, 1-based; 0 = free
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
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
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Finds min(m, n) disjoint (row, col) pairs maximizing the summed score.
/// Rectangular matrices are squared up with zero padding and the padded
/// matches discarded. An empty matrix yields an empty assignment.
pub fn hungarian_match(scores: &[Vec<f64>]) -> Result<Assignment> {
    let n = validate(scores)?;
    let m = scores.len();
    if m == 0 || n == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            total: 0.0,
        });
    }
    let side = m.max(n);
    // Maximize by minimizing negated scores; padding costs 0.
    let mut cost = vec![vec![0.0f64; side]; side];
    for (i, row) in scores.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            cost[i][j] = -s;
        }
    }
    let row_to_col = min_cost_square(&cost);
    let mut pairs: Vec<(usize, usize)> = row_to_col
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < m && j < n)
        .map(|(i, &j)| (i, j))
        .collect();
    pairs.sort_unstable();
    let total = pairs.iter().map(|&(i, j)| scores[i][j]).sum();
    Ok(Assignment { pairs, total })
}

/// Exhaustive reference evaluator: tries every injection of the smaller side
/// into the larger one and keeps the best. Exponential; only for matrices
/// with min(m, n) ≤ 9.
pub fn brute_force_match(scores: &[Vec<f64>]) -> Result<Assignment> {
    let n = validate(scores)?;
    let m = scores.len();
    if m == 0 || n == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            total: 0.0,
        });
    }
    if m.min(n) > 9 {
        return Err(Error::Invalid(
            "brute-force assignment is limited to min(m, n) <= 9".into(),
        ));
    }
    // Recurse over rows of the smaller orientation; transposing preserves
    // the optimal value and pair set.
    let transposed = m > n;
    let work: Vec<Vec<f64>> = if transposed {
        (0..n)
            .map(|i| (0..m).map(|j| scores[j][i]).collect())
            .collect()
    } else {
        scores.to_vec()
    };
    let (rows, cols) = (work.len(), work[0].len());

    let mut best_total = f64::NEG_INFINITY;
    let mut best_cols: Vec<usize> = Vec::new();
    let mut chosen = vec![usize::MAX; rows];
    let mut used = vec![false; cols];
    fn recurse(
        row: usize,
        work: &[Vec<f64>],
        chosen: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best_total: &mut f64,
        best_cols: &mut Vec<usize>,
    ) {
        if row == work.len() {
            let total: f64 = chosen.iter().enumerate().map(|(i, &c)| work[i][c]).sum();
            if total > *best_total {
                *best_total = total;
                *best_cols = chosen.clone();
            }
            return;
        }
        for c in 0..used.len() {
            if used[c] {
                continue;
            }
            used[c] = true;
            chosen[row] = c;
            recurse(row + 1, work, chosen, used, best_total, best_cols);
            used[c] = false;
        }
    }
    recurse(
        0,
        &work,
        &mut chosen,
        &mut used,
        &mut best_total,
        &mut best_cols,
    );

    let mut pairs: Vec<(usize, usize)> = best_cols
        .iter()
        .enumerate()
        .map(|(i, &c)| if transposed { (c, i) } else { (i, c) })
        .collect();
    pairs.sort_unstable();
    let total = pairs.iter().map(|&(i, j)| scores[i][j]).sum();
    Ok(Assignment { pairs, total })
}
