//! Density-based clustering with a Euclidean metric.

use std::collections::VecDeque;

const UNVISITED: usize = usize::MAX;

/// Labels each point with its cluster id (`1..`), or `0` for noise.
///
/// A point is a core point when at least `min_pts` points, itself
/// included, lie within `eps`. Clusters are discovered and expanded in
/// index order, so the output is deterministic for a given input order.
pub fn dbscan<P: AsRef<[f64]>>(points: &[P], eps: f64, min_pts: usize) -> Vec<usize> {
    let n = points.len();
    let eps2 = eps * eps;
    let region = |i: usize| -> Vec<usize> {
        let a = points[i].as_ref();
        (0..n)
            .filter(|&j| {
                let b = points[j].as_ref();
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() <= eps2
            })
            .collect()
    };

    let mut labels = vec![UNVISITED; n];
    let mut cluster = 0;
    let mut queue = VecDeque::new();
    for i in 0..n {
        if labels[i] != UNVISITED {
            continue;
        }
        let seeds = region(i);
        if seeds.len() < min_pts {
            labels[i] = 0;
            continue;
        }
        cluster += 1;
        labels[i] = cluster;
        queue.extend(seeds);
        while let Some(j) = queue.pop_front() {
            if labels[j] == 0 {
                labels[j] = cluster;
            }
            if labels[j] != UNVISITED {
                continue;
            }
            labels[j] = cluster;
            let nbrs = region(j);
            if nbrs.len() >= min_pts {
                queue.extend(nbrs);
            }
        }
    }
    labels
}
