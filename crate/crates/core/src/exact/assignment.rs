//! Minimum-cost perfect assignment on a square matrix (Hungarian method with
//! row/column potentials, `O(n^3)`).

/// Returns `(total_cost, col_of_row)` for a square cost matrix given row-major.
/// Costs must be finite.
pub fn solve_assignment(cost: &[f64], size: usize) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), size * size, "cost matrix must be square");
    if size == 0 {
        return (0.0, Vec::new());
    }
    // 1-based internally; index 0 is the virtual source column.
    let mut u = vec![0.0; size + 1];
    let mut v = vec![0.0; size + 1];
    let mut row_of_col = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=size {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * size + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; size];
    for j in 1..=size {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    let total = col_of_row
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * size + j])
        .sum();
    (total, col_of_row)
}
