//! 2-d tree for exact k-nearest-predecessor queries.
//!
//! Every point carries a rank (its position in the conditioning order) and
//! every subtree records its smallest rank, so a query restricted to
//! `rank < limit` prunes subtrees that hold only later points.

use super::squared_distance;

#[derive(Debug, Clone)]
struct Node {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
    min_rank: usize,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    coords: Vec<[f64; 2]>,
    rank: Vec<usize>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

impl KdTree {
    /// `rank[i]` is the ordering position of point `i`.
    pub fn new(coords: &[[f64; 2]], rank: &[usize]) -> Self {
        assert_eq!(coords.len(), rank.len());
        let mut tree = Self {
            coords: coords.to_vec(),
            rank: rank.to_vec(),
            nodes: Vec::with_capacity(coords.len()),
            root: None,
        };
        let mut idx: Vec<usize> = (0..coords.len()).collect();
        tree.root = tree.build(&mut idx, 0);
        tree
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let axis = depth % 2;
        let mid = idx.len() / 2;
        let coords = &self.coords;
        idx.select_nth_unstable_by(mid, |&a, &b| {
            coords[a][axis].total_cmp(&coords[b][axis]).then(a.cmp(&b))
        });
        let point = idx[mid];
        let min_rank = idx.iter().map(|&i| self.rank[i]).min().unwrap();
        let (lo, rest) = idx.split_at_mut(mid);
        let left = self.build(lo, depth + 1);
        let right = self.build(&mut rest[1..], depth + 1);
        self.nodes.push(Node {
            point,
            axis,
            left,
            right,
            min_rank,
        });
        Some(self.nodes.len() - 1)
    }

    /// The `k` points with `rank < rank_limit` closest to `target`, sorted by
    /// (distance, rank).
    pub fn nearest_before(&self, target: [f64; 2], k: usize, rank_limit: usize) -> Vec<usize> {
        let mut best: Vec<(f64, usize, usize)> = Vec::with_capacity(k + 1);
        if k > 0 {
            if let Some(root) = self.root {
                self.search(root, &target, k, rank_limit, &mut best);
            }
        }
        best.into_iter().map(|(_, _, i)| i).collect()
    }

    fn search(&self, node: usize, target: &[f64; 2], k: usize, limit: usize, best: &mut Vec<(f64, usize, usize)>) {
        let nd = &self.nodes[node];
        if nd.min_rank >= limit {
            return;
        }
        let p = nd.point;
        if self.rank[p] < limit {
            let cand = (squared_distance(&self.coords[p], target), self.rank[p], p);
            offer(best, cand, k);
        }
        let diff = target[nd.axis] - self.coords[p][nd.axis];
        let (near, far) = if diff < 0.0 {
            (nd.left, nd.right)
        } else {
            (nd.right, nd.left)
        };
        if let Some(c) = near {
            self.search(c, target, k, limit, best);
        }
        if let Some(c) = far {
            if best.len() < k || diff * diff <= best[best.len() - 1].0 {
                self.search(c, target, k, limit, best);
            }
        }
    }
}

fn offer(best: &mut Vec<(f64, usize, usize)>, cand: (f64, usize, usize), k: usize) {
    let key = |c: &(f64, usize, usize)| (c.0, c.1);
    if best.len() == k {
        let worst = &best[k - 1];
        if key(&cand).partial_cmp(&key(worst)) != Some(std::cmp::Ordering::Less) {
            return;
        }
        best.pop();
    }
    let pos = best
        .iter()
        .position(|b| key(&cand).partial_cmp(&key(b)) == Some(std::cmp::Ordering::Less))
        .unwrap_or(best.len());
    best.insert(pos, cand);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(coords: &[[f64; 2]], rank: &[usize], target: [f64; 2], k: usize, limit: usize) -> Vec<usize> {
        let mut c: Vec<(f64, usize, usize)> = (0..coords.len())
            .filter(|&i| rank[i] < limit)
            .map(|i| (squared_distance(&coords[i], &target), rank[i], i))
            .collect();
        c.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
        c.truncate(k);
        c.into_iter().map(|x| x.2).collect()
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 5, 37, 300] {
            let coords: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut rank = vec![0; n];
            for (pos, &i) in order.iter().enumerate() {
                rank[i] = pos;
            }
            let tree = KdTree::new(&coords, &rank);
            for i in 0..n {
                for k in [1usize, 4, 15] {
                    assert_eq!(
                        tree.nearest_before(coords[i], k, rank[i]),
                        brute(&coords, &rank, coords[i], k, rank[i])
                    );
                }
            }
        }
    }

    #[test]
    fn grid_ties_broken_by_rank() {
        let coords: Vec<[f64; 2]> = (0..25).map(|i| [(i % 5) as f64, (i / 5) as f64]).collect();
        let rank: Vec<usize> = (0..25).collect();
        let tree = KdTree::new(&coords, &rank);
        for i in 0..25 {
            assert_eq!(
                tree.nearest_before(coords[i], 4, i),
                brute(&coords, &rank, coords[i], 4, i)
            );
        }
    }
}
