//! Gated minimum-cost one-to-one assignment.

const FORBIDDEN: f64 = 1e12;
const TIE_EPS: f64 = 1e-9;

/// Minimum-cost perfect matching on a square matrix (O(n^3), potentials form).
/// Returns the column chosen for each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
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

fn total(cost: &[Vec<f64>], cols: &[usize]) -> f64 {
    cols.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}

/// Square `(rows + cols)` matrix whose optimum is the best gated partial
/// matching: a real pair costs `c - gate`, leaving a row or column unmatched
/// costs nothing.
fn expand(costs: &[Vec<f64>], cols: usize, gate: f64) -> Vec<Vec<f64>> {
    let rows = costs.len();
    let n = rows + cols;
    let mut m = vec![vec![FORBIDDEN; n]; n];
    for (i, row) in costs.iter().enumerate() {
        for (j, &c) in row.iter().enumerate().take(cols) {
            if admissible(c, gate) {
                m[i][j] = c - gate;
            }
        }
        m[i][cols + i] = 0.0;
    }
    for j in 0..cols {
        m[rows + j][j] = 0.0;
        for i in 0..rows {
            m[rows + j][cols + i] = 0.0;
        }
    }
    m
}

fn admissible(c: f64, gate: f64) -> bool {
    c.is_finite() && c <= gate
}

/// Globally minimum-cost one-to-one matching between rows and columns.
///
/// Pairs whose cost exceeds `gate` are never matched; every matched pair saves
/// `gate - cost` over leaving both sides unmatched. Among optimal matchings the
/// lexicographically smallest one is returned (rows in order, each preferring
/// lower column indices, then no match), so callers that order rows and
/// columns by identifier get identifier-ordered tie breaking.
pub fn assign(costs: &[Vec<f64>], cols: usize, gate: f64) -> Vec<(usize, usize)> {
    let rows = costs.len();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let mut m = expand(costs, cols, gate);
    let best = total(&m, &hungarian(&m));
    for i in 0..rows {
        let choices = (0..cols).filter(|&j| m[i][j] < FORBIDDEN).chain([cols + i]);
        for j in choices.collect::<Vec<_>>() {
            let mut trial = m.clone();
            for (k, row) in trial.iter_mut().enumerate() {
                if k == i {
                    for (c, x) in row.iter_mut().enumerate() {
                        if c != j {
                            *x = FORBIDDEN;
                        }
                    }
                } else {
                    row[j] = FORBIDDEN;
                }
            }
            let value = total(&trial, &hungarian(&trial));
            if value <= best + TIE_EPS * (1.0 + best.abs()) {
                m = trial;
                break;
            }
        }
    }
    hungarian(&m)
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| i < rows && j < cols)
        .collect()
}
