//! Maximum-weight bipartite assignment (Hungarian method, O(k^3)).

/// Solves the maximum-weight assignment on a rectangular non-negative
/// weight matrix. Returns, for each row, the matched column (if any) and the
/// optimal total weight. Rows or columns left unmatched contribute nothing.
pub fn max_weight_assignment(weights: &[Vec<u64>]) -> (Vec<Option<usize>>, u64) {
    let rows = weights.len();
    let cols = weights.iter().map(Vec::len).max().unwrap_or(0);
    if rows == 0 || cols == 0 {
        return (vec![None; rows], 0);
    }
    let k = rows.max(cols);
    let top = weights.iter().flatten().copied().max().unwrap_or(0) as i64;
    // Pad to a square cost matrix; padded cells have weight zero.
    let cost = |i: usize, j: usize| -> i64 {
        let w = weights.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as i64;
        top - w
    };

    let inf = i64::MAX / 4;
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    // col_owner[j] = row (1-based) assigned to column j (1-based); 0 = free
    let mut col_owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];

    for i in 1..=k {
        col_owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![None; rows];
    let mut total = 0u64;
    for j in 1..=k {
        let i = col_owner[j];
        if i == 0 || i > rows || j > weights[i - 1].len() {
            continue;
        }
        let w = weights[i - 1][j - 1];
        if w > 0 {
            assignment[i - 1] = Some(j - 1);
            total += w;
        }
    }
    (assignment, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square() {
        let w = vec![vec![1, 4, 2], vec![3, 0, 5], vec![2, 2, 2]];
        let (a, t) = max_weight_assignment(&w);
        assert_eq!(t, 4 + 5 + 2);
        assert_eq!(a, vec![Some(1), Some(2), Some(0)]);
    }

    #[test]
    fn rectangular() {
        let (_, t) = max_weight_assignment(&[vec![2, 1], vec![0, 1], vec![0, 0]]);
        assert_eq!(t, 3);
        let (a, t) = max_weight_assignment(&[vec![1, 1, 1, 1]]);
        assert_eq!(t, 1);
        assert!(a[0].is_some());
        assert_eq!(max_weight_assignment(&[]).1, 0);
    }
}
