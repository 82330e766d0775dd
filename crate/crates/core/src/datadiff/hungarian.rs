//! Minimum-cost perfect matching on a square matrix whose entries may be
//! `+inf` (forbidden). Among optimal matchings the lexicographically
//! smallest column sequence is returned, so ties resolve to the lowest
//! index pairs.

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `cols[i]` is the column assigned to row `i`.
    pub cols: Vec<usize>,
    pub cost: f64,
}

/// Returns `None` when every perfect matching uses a forbidden entry.
pub fn solve(cost: &[Vec<f64>]) -> Option<Assignment> {
    let n = cost.len();
    if n == 0 {
        return Some(Assignment {
            cols: Vec::new(),
            cost: 0.0,
        });
    }
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");

    let finite_sum: f64 = cost.iter().flatten().filter(|c| c.is_finite()).map(|c| c.abs()).sum();
    let big = finite_sum + 1.0;
    let a: Vec<Vec<f64>> = cost
        .iter()
        .map(|r| r.iter().map(|&c| if c.is_finite() { c } else { big }).collect())
        .collect();

    let (u, v) = potentials(&a);
    let tight = |i: usize, j: usize| a[i][j] - u[i + 1] - v[j + 1] <= TOL;
    let cols = lexicographic_matching(n, &tight);

    if cols.iter().enumerate().any(|(i, &j)| !cost[i][j].is_finite()) {
        return None;
    }
    let total = cols.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Some(Assignment { cols, cost: total })
}

/// Shortest-augmenting-path Hungarian method; returns optimal dual
/// potentials (1-based, index 0 unused).
fn potentials(a: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
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
    (u, v)
}

/// Lexicographically smallest perfect matching in the bipartite graph
/// given by `edge`, which must admit at least one perfect matching.
fn lexicographic_matching(n: usize, edge: &dyn Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut row_of: Vec<Option<usize>> = vec![None; n];
    let mut col_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        augment(i, edge, &mut seen, &mut row_of, &mut col_of, 0);
    }
    debug_assert!(
        col_of.iter().all(Option::is_some),
        "equality subgraph lacks a perfect matching"
    );

    // Fix rows in order, each to the smallest column that still leaves a
    // perfect matching on the remaining rows.
    for i in 0..n {
        let current = col_of[i].unwrap();
        for j in 0..current {
            if !edge(i, j) {
                continue;
            }
            let r = row_of[j].unwrap();
            if r < i {
                continue;
            }
            // Tentatively give j to i; row r must reach the freed column
            // `current` through an alternating path over unfixed rows.
            let (saved_rows, saved_cols) = (row_of.clone(), col_of.clone());
            row_of[j] = Some(i);
            col_of[i] = Some(j);
            row_of[current] = None;
            col_of[r] = None;
            let mut seen = vec![false; n];
            seen[j] = true;
            if augment(r, edge, &mut seen, &mut row_of, &mut col_of, i + 1) {
                break;
            }
            row_of = saved_rows;
            col_of = saved_cols;
        }
    }
    col_of.into_iter().map(Option::unwrap).collect()
}

/// Kuhn's augmenting step restricted to rows `>= min_row` for re-routing.
fn augment(
    i: usize,
    edge: &dyn Fn(usize, usize) -> bool,
    seen: &mut [bool],
    row_of: &mut [Option<usize>],
    col_of: &mut [Option<usize>],
    min_row: usize,
) -> bool {
    for j in 0..seen.len() {
        if seen[j] || !edge(i, j) {
            continue;
        }
        seen[j] = true;
        let free = match row_of[j] {
            None => true,
            Some(r) => r >= min_row && augment(r, edge, seen, row_of, col_of, min_row),
        };
        if free {
            row_of[j] = Some(i);
            col_of[i] = Some(j);
            return true;
        }
    }
    false
}
