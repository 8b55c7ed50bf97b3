//! Sharing a component's samples between the two halves of a split.
//!
//! Samples are linked in a graph of minimal distances: an edge joins `i` and
//! `j` whenever one is the other's nearest neighbour. Connected sub-graphs form
//! the initial groups, and the two groups with the closest centroids are fused
//! until exactly two remain.

use super::linalg::squared_distance;

/// Nearest neighbour of every point (ties to the lowest index).
pub fn nearest_neighbors(points: &[&[f64]]) -> Vec<usize> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let mut best = (usize::MAX, f64::INFINITY);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = squared_distance(points[i], points[j]);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best.0
        })
        .collect()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Connected components of the symmetric 1-NN graph, each listed in
/// ascending index order, groups ordered by their smallest member.
pub fn minimal_distance_groups(points: &[&[f64]]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    if n >= 2 {
        for (i, j) in nearest_neighbors(points).into_iter().enumerate() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

fn centroid(points: &[&[f64]], members: &[usize]) -> Vec<f64> {
    let dim = points[members[0]].len();
    let mut c = vec![0.0; dim];
    for &m in members {
        for (acc, v) in c.iter_mut().zip(points[m]) {
            *acc += v;
        }
    }
    let n = members.len() as f64;
    c.iter_mut().for_each(|v| *v /= n);
    c
}

/// Splits `points` into two disjoint index groups covering every point, or
/// `None` when the graph is connected (or there are fewer than two points),
/// which cancels the split.
pub fn partition_for_split(points: &[&[f64]]) -> Option<(Vec<usize>, Vec<usize>)> {
    if points.len() < 2 {
        return None;
    }
    let mut groups = minimal_distance_groups(points);
    if groups.len() < 2 {
        return None;
    }
    let mut centroids: Vec<Vec<f64>> = groups.iter().map(|g| centroid(points, g)).collect();
    while groups.len() > 2 {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                let d = squared_distance(&centroids[a], &centroids[b]);
                if d < best.2 {
                    best = (a, b, d);
                }
            }
        }
        let (a, b, _) = best;
        let absorbed = groups.remove(b);
        centroids.remove(b);
        groups[a].extend(absorbed);
        groups[a].sort_unstable();
        centroids[a] = centroid(points, &groups[a]);
    }
    let second = groups.pop().expect("two groups");
    let first = groups.pop().expect("two groups");
    Some((first, second))
}
