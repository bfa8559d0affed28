//! Hungarian algorithm for the square linear assignment problem.
//!
//! O(n^3) shortest augmenting path formulation with dual potentials. Costs
//! are `i64`; the minimal matching distance only ever needs integer agreement
//! counts, and integer arithmetic keeps the solver exact.

/// Solve min-cost perfect assignment on a square cost matrix.
///
/// Returns `(assignment, total_cost)` where `assignment[row] = column`.
pub fn solve_min(cost: &[Vec<i64>]) -> (Vec<usize>, i64) {
    let n = cost.len();
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    if n == 0 {
        return (Vec::new(), 0);
    }

    const INF: i64 = i64::MAX / 4;
    // 1-based arrays per the classical formulation; index 0 is a sentinel.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1]; // p[col] = row matched to col
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
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

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    let total = (0..n).map(|i| cost[i][assignment[i]]).sum();
    (assignment, total)
}

/// Maximize total profit instead of minimizing cost.
///
/// Returns `(assignment, total_profit)`.
pub fn solve_max(profit: &[Vec<i64>]) -> (Vec<usize>, i64) {
    let n = profit.len();
    if n == 0 {
        return (Vec::new(), 0);
    }
    let top = profit
        .iter()
        .flat_map(|r| r.iter().copied())
        .max()
        .unwrap_or(0);
    let cost: Vec<Vec<i64>> = profit
        .iter()
        .map(|r| r.iter().map(|&x| top - x).collect())
        .collect();
    let (assignment, _) = solve_min(&cost);
    let total = (0..n).map(|i| profit[i][assignment[i]]).sum();
    (assignment, total)
}

/// Brute-force oracle: enumerate all permutations (use only for n <= 8).
pub fn brute_force_max(profit: &[Vec<i64>]) -> i64 {
    let n = profit.len();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut best = i64::MIN;
    permute(&mut cols, 0, &mut |perm| {
        let s: i64 = (0..n).map(|i| profit[i][perm[i]]).sum();
        if s > best {
            best = s;
        }
    });
    if n == 0 {
        0
    } else {
        best
    }
}

fn permute<F: FnMut(&[usize])>(items: &mut Vec<usize>, k: usize, f: &mut F) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f);
        items.swap(k, i);
    }
}
