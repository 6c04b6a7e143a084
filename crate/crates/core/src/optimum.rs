//! Offline maximum-weight matching (each advertiser used at most once).

use std::collections::VecDeque;

use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineMatching {
    pub value: f64,
    /// `matched[i]` is the advertiser impression `i` gets, `None` if it is
    /// left unmatched (only possible when impressions outnumber advertisers).
    pub matched: Vec<Option<usize>>,
}

/// Maximum-weight matching with ties broken toward the lexicographically
/// smallest match vector on the square-padded instance.
pub fn offline_optimum(instance: &Instance) -> OfflineMatching {
    let m = instance.num_impressions();
    let n = instance.num_advertisers();
    let k = m.max(n);
    if m == 0 {
        return OfflineMatching {
            value: 0.0,
            matched: vec![],
        };
    }
    let w = |i: usize, j: usize| {
        if i < m && j < n {
            instance.weight(i, j)
        } else {
            0.0
        }
    };
    let (mut row_to_col, u, v) = hungarian(k, |i, j| -w(i, j));

    let scale = instance.weights().iter().fold(1.0f64, |acc, &x| acc.max(x));
    let tol = 1e-9 * scale;
    let tight = |i: usize, j: usize| (-w(i, j) - u[i] - v[j]).abs() <= tol;
    lex_smallest(k, &mut row_to_col, tight);

    let mut value = 0.0;
    let matched = (0..m)
        .map(|i| {
            let j = row_to_col[i];
            if j < n {
                value += w(i, j);
                Some(j)
            } else {
                None
            }
        })
        .collect();
    OfflineMatching { value, matched }
}

/// Square assignment minimising `cost`; returns the row→column map and the
/// dual potentials (reduced cost `cost(i,j) - u[i] - v[j]` is nonnegative and
/// zero on every matched edge).
fn hungarian(k: usize, cost: impl Fn(usize, usize) -> f64) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let inf = f64::INFINITY;
    // 1-based with a sentinel column 0
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
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
            }
            for j in 0..=k {
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
    let mut row_to_col = vec![0; k];
    for j in 1..=k {
        row_to_col[p[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Every optimal matching lives on the tight edges of an optimal dual, so
/// walking rows in order and taking the smallest column that still admits a
/// perfect tight matching yields the lexicographically smallest optimum.
fn lex_smallest(k: usize, row_to_col: &mut [usize], tight: impl Fn(usize, usize) -> bool) {
    let mut owner = vec![0usize; k];
    for (i, &j) in row_to_col.iter().enumerate() {
        owner[j] = i;
    }
    for i in 0..k {
        let c0 = row_to_col[i];
        for c in 0..c0 {
            if !tight(i, c) || owner[c] < i {
                continue;
            }
            // row owner[c] must move; search an alternating path that ends in c0
            let start = owner[c];
            let mut prev_row: Vec<Option<usize>> = vec![None; k]; // column -> row that reached it
            let mut seen_row = vec![false; k];
            let mut queue = VecDeque::from([start]);
            seen_row[start] = true;
            let mut found = false;
            'bfs: while let Some(r) = queue.pop_front() {
                for j in 0..k {
                    if j == c || prev_row[j].is_some() || !tight(r, j) {
                        continue;
                    }
                    if j != c0 && owner[j] <= i {
                        continue;
                    }
                    prev_row[j] = Some(r);
                    if j == c0 {
                        found = true;
                        break 'bfs;
                    }
                    let nr = owner[j];
                    if !seen_row[nr] {
                        seen_row[nr] = true;
                        queue.push_back(nr);
                    }
                }
            }
            if !found {
                continue;
            }
            // unwind: each row on the path takes the column that reached it
            let mut j = c0;
            loop {
                let r = prev_row[j].expect("path");
                let old = row_to_col[r];
                row_to_col[r] = j;
                owner[j] = r;
                if r == start {
                    break;
                }
                j = old;
            }
            row_to_col[i] = c;
            owner[c] = i;
            break;
        }
    }
}
