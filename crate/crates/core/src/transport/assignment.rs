//! Dense linear assignment by shortest augmenting paths with dual potentials.
//!
//! Rows are inserted one at a time; each insertion runs a Dijkstra-like search over reduced
//! costs `c[i][j] - u[i] - v[j]` and augments along the shortest alternating path. Total work
//! is `O(n^3)`. Ties are resolved by the column scan order, so the result is deterministic.

use crate::scalar::Scalar;

/// Minimum-cost perfect assignment for a square `n x n` row-major cost matrix.
///
/// Returns `assignment` with `assignment[row] = column`.
pub fn solve<S: Scalar>(costs: &[S], n: usize) -> Vec<usize> {
    assert_eq!(costs.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return Vec::new();
    }
    let inf = S::infinity();
    // 1-based internally; column 0 is the virtual source.
    let mut u = vec![S::zero(); n + 1];
    let mut v = vec![S::zero(); n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|f| *f = false);

        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = &costs[(i0 - 1) * n..i0 * n];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = row[j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            // j1 == 0 only if every remaining reduced cost is infinite or NaN
            assert!(j1 != 0, "assignment costs must be finite");
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }

        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Total cost of an assignment.
pub fn assignment_cost<S: Scalar>(costs: &[S], n: usize, assignment: &[usize]) -> S {
    assignment.iter().enumerate().map(|(i, &j)| costs[i * n + j]).sum()
}
