//! Exact k-th nearest-neighbour distances in the max-norm.
//!
//! Two interchangeable backends are registered: an O(n²) scan and a 2-d
//! kd-tree. Both return the same distance values bit for bit, because the
//! k-th smallest of a fixed multiset of `max(|dx|, |dy|)` values does not
//! depend on the order in which candidates are visited.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};

use crate::strategy::{Named, StrategyError, StrategyRegistry};

/// Max-norm distance between two points.
#[inline]
pub fn chebyshev(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

pub trait NeighborSearch: Named + Send + Sync {
    /// For every point, the max-norm distance to its k-th nearest other point.
    ///
    /// Requires `1 <= k < points.len()`.
    fn kth_distances(&self, points: &[(f64, f64)], k: usize) -> Vec<f64>;
}

pub struct BruteForce;

impl Named for BruteForce {
    fn name(&self) -> &'static str {
        "brute"
    }
}

impl NeighborSearch for BruteForce {
    fn kth_distances(&self, points: &[(f64, f64)], k: usize) -> Vec<f64> {
        assert!(k >= 1 && k < points.len());
        let mut scratch = Vec::with_capacity(points.len());
        points
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                scratch.clear();
                scratch.extend(
                    points
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &q)| chebyshev(p, q)),
                );
                *scratch.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b)).1
            })
            .collect()
    }
}

pub struct KdTreeSearch;

impl Named for KdTreeSearch {
    fn name(&self) -> &'static str {
        "kdtree"
    }
}

impl NeighborSearch for KdTreeSearch {
    fn kth_distances(&self, points: &[(f64, f64)], k: usize) -> Vec<f64> {
        assert!(k >= 1 && k < points.len());
        let tree = KdTree::build(points);
        let mut best = Vec::with_capacity(k + 1);
        (0..points.len())
            .map(|i| {
                best.clear();
                tree.search(0, i, k, &mut best);
                best[k - 1]
            })
            .collect()
    }
}

static SEARCHES: LazyLock<StrategyRegistry<dyn NeighborSearch>> = LazyLock::new(|| {
    StrategyRegistry::new("neighbour search")
        .with(Arc::new(BruteForce) as Arc<dyn NeighborSearch>)
        .with(Arc::new(KdTreeSearch) as Arc<dyn NeighborSearch>)
});

pub fn search_registry() -> &'static StrategyRegistry<dyn NeighborSearch> {
    &SEARCHES
}

/// Configuration-level name of a neighbour-search backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    Brute,
    #[default]
    Kdtree,
}

impl SearchMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchMethod::Brute => "brute",
            SearchMethod::Kdtree => "kdtree",
        }
    }

    pub fn strategy(self) -> Arc<dyn NeighborSearch> {
        search_registry()
            .get(self.as_str())
            .expect("built-in search registered")
    }
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SearchMethod {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "brute" => Ok(SearchMethod::Brute),
            "kdtree" => Ok(SearchMethod::Kdtree),
            other => Err(StrategyError::Unknown {
                kind: "neighbour search",
                name: other.to_string(),
                available: search_registry().names().join(", "),
            }),
        }
    }
}

const LEAF_SIZE: usize = 8;

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

struct KdTree<'a> {
    points: &'a [(f64, f64)],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[inline]
fn coord(p: (f64, f64), axis: usize) -> f64 {
    if axis == 0 {
        p.0
    } else {
        p.1
    }
}

impl<'a> KdTree<'a> {
    fn build(points: &'a [(f64, f64)]) -> Self {
        let mut tree = KdTree {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1),
        };
        tree.build_range(0, points.len());
        tree
    }

    fn build_range(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis with the larger spread
        let slice = &self.order[start..end];
        let spread = |axis: usize| {
            let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let c = coord(self.points[i], axis);
                (lo.min(c), hi.max(c))
            });
            hi - lo
        };
        let axis = if spread(0) >= spread(1) { 0 } else { 1 };
        let mid = (end - start) / 2;
        let points = self.points;
        self.order[start..end]
            .select_nth_unstable_by(mid, |&a, &b| coord(points[a], axis).total_cmp(&coord(points[b], axis)));
        let value = coord(points[self.order[start + mid]], axis);

        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_range(start, start + mid);
        let right = self.build_range(start + mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Keeps the k smallest distances from `query` (excluding itself) in `best`, ascending.
    fn search(&self, node: usize, query: usize, k: usize, best: &mut Vec<f64>) {
        let q = self.points[query];
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if j == query {
                        continue;
                    }
                    let d = chebyshev(q, self.points[j]);
                    if best.len() < k {
                        let pos = best.partition_point(|&b| b <= d);
                        best.insert(pos, d);
                    } else if d < best[k - 1] {
                        let pos = best.partition_point(|&b| b <= d);
                        best.insert(pos, d);
                        best.pop();
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let c = coord(q, axis);
                let (near, far) = if c < value { (left, right) } else { (right, left) };
                self.search(near, query, k, best);
                let plane = (c - value).abs();
                if best.len() < k || plane < best[k - 1] {
                    self.search(far, query, k, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tiny_example() {
        let pts = [(0.0, 0.0), (1.0, 0.5), (3.0, 3.0), (0.2, 2.0)];
        // from (0,0): distances 1.0, 3.0, 2.0 → k=2 gives 2.0
        for search in [SearchMethod::Brute, SearchMethod::Kdtree] {
            let d = search.strategy().kth_distances(&pts, 2);
            assert_eq!(d[0], 2.0);
        }
    }

    #[test]
    fn duplicates_give_zero_distance() {
        let pts = vec![(1.0, 1.0); 5];
        assert_eq!(KdTreeSearch.kth_distances(&pts, 3), vec![0.0; 5]);
        assert_eq!(BruteForce.kth_distances(&pts, 3), vec![0.0; 5]);
    }

    proptest! {
        #[test]
        fn kdtree_matches_brute_force(
            pts in prop::collection::vec((-50i32..50, -50i32..50), 2..120),
            k in 1usize..7,
        ) {
            // integer grid produces plenty of exact ties
            let pts: Vec<(f64, f64)> = pts.into_iter().map(|(a, b)| (a as f64 / 4.0, b as f64 / 8.0)).collect();
            prop_assume!(k < pts.len());
            prop_assert_eq!(KdTreeSearch.kth_distances(&pts, k), BruteForce.kth_distances(&pts, k));
        }

        #[test]
        fn kdtree_matches_brute_force_continuous(
            pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 7..300),
            k in 1usize..7,
        ) {
            prop_assert_eq!(KdTreeSearch.kth_distances(&pts, k), BruteForce.kth_distances(&pts, k));
        }
    }
}
