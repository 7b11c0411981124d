//! Insert-only kd-tree for exact Euclidean nearest-neighbour queries.

use alloc::vec::Vec;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
struct Node {
    left: usize,
    right: usize,
}

/// Points are identified by insertion index. Ties in distance resolve to the
/// lowest index.
#[derive(Clone, Debug)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        Self {
            dim,
            coords: Vec::new(),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn insert(&mut self, p: &[f64]) -> usize {
        assert_eq!(p.len(), self.dim);
        let id = self.nodes.len();
        self.coords.extend_from_slice(p);
        self.nodes.push(Node {
            left: NONE,
            right: NONE,
        });
        if id == 0 {
            return id;
        }
        let mut at = 0;
        let mut depth = 0;
        loop {
            let axis = depth % self.dim;
            let go_left = p[axis] < self.coords[at * self.dim + axis];
            let slot = if go_left {
                &mut self.nodes[at].left
            } else {
                &mut self.nodes[at].right
            };
            if *slot == NONE {
                *slot = id;
                return id;
            }
            at = *slot;
            depth += 1;
        }
    }

    /// Index and squared distance of the nearest point.
    pub fn nearest(&self, p: &[f64]) -> Option<(usize, f64)> {
        assert_eq!(p.len(), self.dim);
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (NONE, f64::INFINITY);
        let mut stack = Vec::with_capacity(64);
        stack.push((0usize, 0usize, 0.0f64));
        while let Some((at, depth, bound)) = stack.pop() {
            if bound > best.1 {
                continue;
            }
            let d2: f64 = self
                .point(at)
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 < best.1 || (d2 == best.1 && at < best.0) {
                best = (at, d2);
            }
            let axis = depth % self.dim;
            let diff = p[axis] - self.coords[at * self.dim + axis];
            let (near, far) = if diff < 0.0 {
                (self.nodes[at].left, self.nodes[at].right)
            } else {
                (self.nodes[at].right, self.nodes[at].left)
            };
            // far side pushed first so the near side is searched first
            if far != NONE {
                stack.push((far, depth + 1, diff * diff));
            }
            if near != NONE {
                stack.push((near, depth + 1, 0.0));
            }
        }
        Some(best)
    }
}
