//! Exact k-nearest-neighbor search by Euclidean distance.
//!
//! A point is its own nearest neighbor. Equal distances are ordered by
//! ascending index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::math::squared_distance;

#[derive(Clone, Copy, Debug)]
struct Candidate {
    dist: f64,
    index: usize,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

/// Indices of the `k` points of `points` closest to `query`, nearest first.
pub fn k_nearest(points: &[Vec<f64>], query: &[f64], k: usize) -> Vec<usize> {
    // Max-heap holding the best k seen so far.
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
    for (index, p) in points.iter().enumerate() {
        let cand = Candidate { dist: squared_distance(p, query), index };
        if heap.len() < k {
            heap.push(cand);
        } else if let Some(worst) = heap.peek() {
            if cand < *worst {
                heap.pop();
                heap.push(cand);
            }
        }
    }
    heap.into_sorted_vec().into_iter().map(|c| c.index).collect()
}

/// Neighborhoods of every point within the set, self included.
pub fn neighborhoods(points: &[Vec<f64>], k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > points.len() {
        return Err(Error::Parameter(format!(
            "k must lie in [1, {}], got {k}",
            points.len()
        )));
    }
    Ok(points.iter().map(|q| k_nearest(points, q, k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_is_first() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0]];
        let nb = neighborhoods(&pts, 2).unwrap();
        assert_eq!(nb, vec![vec![0, 1], vec![1, 0], vec![2, 1]]);
    }

    #[test]
    fn ties_break_by_index() {
        let pts = vec![vec![1.0], vec![0.0], vec![-1.0], vec![1.0]];
        assert_eq!(k_nearest(&pts, &[0.0], 3), vec![1, 0, 2]);
        // duplicates of the query point: lower index wins
        assert_eq!(k_nearest(&pts, &[1.0], 2), vec![0, 3]);
    }

    #[test]
    fn k_bounds() {
        let pts = vec![vec![0.0]; 3];
        assert!(neighborhoods(&pts, 0).is_err());
        assert!(neighborhoods(&pts, 4).is_err());
        assert_eq!(neighborhoods(&pts, 3).unwrap()[2], vec![0, 1, 2]);
    }
}
