//! Exhaustive minimum-cost assignment.

/// Minimum total cost over all one-to-one assignments of min(M, N) pairs.
pub fn brute_force_min_cost(cost: &[Vec<f64>]) -> f64 {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows <= cols {
        let mut used = vec![false; cols];
        search(cost, 0, &mut used, 0.0)
    } else {
        let transposed: Vec<Vec<f64>> = (0..cols)
            .map(|c| (0..rows).map(|r| cost[r][c]).collect())
            .collect();
        brute_force_min_cost(&transposed)
    }
}

fn search(cost: &[Vec<f64>], row: usize, used: &mut [bool], acc: f64) -> f64 {
    if row == cost.len() {
        return acc;
    }
    let mut best = f64::INFINITY;
    for c in 0..used.len() {
        if !used[c] {
            used[c] = true;
            best = best.min(search(cost, row + 1, used, acc + cost[row][c]));
            used[c] = false;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(brute_force_min_cost(&[vec![5.0]]), 5.0);
        let m = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        assert_eq!(brute_force_min_cost(&m), 5.0);
        let wide = vec![vec![9.0, 1.0, 7.0]];
        assert_eq!(brute_force_min_cost(&wide), 1.0);
        let tall = vec![vec![9.0], vec![2.0], vec![7.0]];
        assert_eq!(brute_force_min_cost(&tall), 2.0);
    }
}
