//! Maximum-weight bipartite matching (Kuhn–Munkres with potentials).

use super::MatchError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchedEdge {
    /// Row index (contract of the first DApp).
    pub a: usize,
    /// Column index (contract of the second DApp).
    pub b: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchResult {
    /// Sorted by row. Padding assignments are never included.
    pub matched_edges: Vec<MatchedEdge>,
    pub total_weight: f64,
}

/// Finds a matching of maximum total weight. Rectangular inputs are padded
/// with zero-weight dummy rows or columns.
pub fn km_match(weights: &[Vec<f64>]) -> Result<MatchResult, MatchError> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(MatchError::EmptyMatching);
    }
    for (i, row) in weights.iter().enumerate() {
        if row.len() != cols {
            return Err(MatchError::Ragged {
                row: i,
                len: row.len(),
                expected: cols,
            });
        }
        if let Some(&w) = row.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(MatchError::InvalidWeight(w));
        }
    }

    let n = rows.max(cols);
    // cost[i][j] for 1-based i, j; dummies cost 0
    let cost = |i: usize, j: usize| -> f64 {
        if i <= rows && j <= cols {
            -weights[i - 1][j - 1]
        } else {
            0.0
        }
    };

    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    // p[j]: row matched to column j (0 = none)
    let mut p = vec![0usize; n + 1];
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
                let cur = cost(i0, j) - u[i0] - v[j];
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

    let mut matched_edges: Vec<MatchedEdge> = (1..=n)
        .filter(|&j| p[j] != 0 && p[j] <= rows && j <= cols)
        .map(|j| MatchedEdge {
            a: p[j] - 1,
            b: j - 1,
            weight: weights[p[j] - 1][j - 1],
        })
        .collect();
    matched_edges.sort_by_key(|e| e.a);
    let total_weight = matched_edges.iter().map(|e| e.weight).sum();
    Ok(MatchResult {
        matched_edges,
        total_weight,
    })
}
