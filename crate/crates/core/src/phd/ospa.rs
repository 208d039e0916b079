use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::Vector;

/// Order `p` and cutoff `c` of the OSPA metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OspaParams {
    pub p: f64,
    pub c: f64,
}

impl Default for OspaParams {
    fn default() -> Self {
        Self { p: 1.0, c: 100.0 }
    }
}

/// Minimum-cost assignment of every row to a distinct column.
///
/// `cost` is row-major with `rows ≤ cols`. Returns the column assigned to
/// each row and the total cost.
pub fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let m = cost[0].len();
    assert!(n <= m, "hungarian needs rows <= cols");
    // Potentials formulation, 1-indexed with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut owner = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
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
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=m {
        if owner[j] > 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (assign, total)
}

fn cut_cost(xs: &[Vector], ys: &[Vector], params: &OspaParams) -> Vec<Vec<f64>> {
    xs.iter()
        .map(|x| {
            ys.iter()
                .map(|y| (x - y).norm().min(params.c).powf(params.p))
                .collect()
        })
        .collect()
}

fn finish(assigned: f64, m: usize, n: usize, params: &OspaParams) -> f64 {
    let total = assigned + params.c.powf(params.p) * (n - m) as f64;
    (total / n as f64).powf(1.0 / params.p)
}

/// Optimal subpattern assignment distance between two finite sets.
pub fn ospa(x: &[Vector], y: &[Vector], params: &OspaParams) -> f64 {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    if large.is_empty() {
        return 0.0;
    }
    if small.is_empty() {
        return params.c;
    }
    let (_, assigned) = hungarian(&cut_cost(small, large, params));
    finish(assigned, small.len(), large.len(), params)
}

/// OSPA by enumerating every injection of the smaller set. Only practical
/// for a handful of points.
pub fn ospa_brute_force(x: &[Vector], y: &[Vector], params: &OspaParams) -> f64 {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    if large.is_empty() {
        return 0.0;
    }
    if small.is_empty() {
        return params.c;
    }
    let cost = cut_cost(small, large, params);
    let mut used = vec![false; large.len()];
    let mut best = f64::INFINITY;
    search(&cost, 0, 0.0, &mut used, &mut best);
    finish(best, small.len(), large.len(), params)
}

fn search(cost: &[Vec<f64>], row: usize, acc: f64, used: &mut [bool], best: &mut f64) {
    if row == cost.len() {
        if acc < *best {
            *best = acc;
        }
        return;
    }
    for j in 0..used.len() {
        if !used[j] {
            used[j] = true;
            search(cost, row + 1, acc + cost[row][j], used, best);
            used[j] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_assignment() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let (a, t) = hungarian(&c);
        assert_eq!(t, 5.0);
        assert_eq!(a, vec![1, 0, 2]);
    }

    #[test]
    fn rectangular_assignment() {
        let c = vec![vec![10.0, 1.0, 7.0, 3.0], vec![1.0, 9.0, 9.0, 2.0]];
        let (_, t) = hungarian(&c);
        assert_eq!(t, 2.0);
    }
}
