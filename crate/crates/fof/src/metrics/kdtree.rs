//! Static 3D kd-tree for exact nearest-neighbor queries.

use nalgebra::Point3;

/// Balanced kd-tree over a fixed point set. Built once by recursive median
/// partition; queries prune subtrees whose splitting plane is farther than
/// the best squared distance found so far, so results equal brute force
/// exactly.
pub struct KdTree {
    points: Vec<Point3<f64>>,
    nodes: Vec<Node>,
    root: i32,
}

struct Node {
    point: u32,
    axis: u8,
    left: i32,
    right: i32,
}

impl KdTree {
    pub fn build(points: impl IntoIterator<Item = Point3<f64>>) -> Self {
        let points: Vec<Point3<f64>> = points.into_iter().collect();
        let mut indices: Vec<u32> = (0..points.len() as u32).collect();
        let mut tree = KdTree {
            points,
            nodes: Vec::new(),
            root: -1,
        };
        tree.nodes.reserve(tree.points.len());
        tree.root = tree.build_recursive(&mut indices, 0);
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_recursive(&mut self, indices: &mut [u32], depth: usize) -> i32 {
        if indices.is_empty() {
            return -1;
        }
        let axis = (depth % 3) as u8;
        let mid = indices.len() / 2;
        indices.select_nth_unstable_by(mid, |&a, &b| {
            let pa = self.points[a as usize][axis as usize];
            let pb = self.points[b as usize][axis as usize];
            pa.partial_cmp(&pb).expect("finite coordinates")
        });
        let point = indices[mid];
        let node_index = self.nodes.len() as i32;
        self.nodes.push(Node {
            point,
            axis,
            left: -1,
            right: -1,
        });
        let (lo, rest) = indices.split_at_mut(mid);
        let hi = &mut rest[1..];
        let left = self.build_recursive(lo, depth + 1);
        let right = self.build_recursive(hi, depth + 1);
        self.nodes[node_index as usize].left = left;
        self.nodes[node_index as usize].right = right;
        node_index
    }

    /// Squared distance to the nearest stored point.
    pub fn nearest_sq(&self, query: &Point3<f64>) -> f64 {
        assert!(!self.points.is_empty(), "empty kd-tree");
        let mut best = f64::INFINITY;
        self.search(self.root, query, &mut best);
        best
    }

    pub fn nearest(&self, query: &Point3<f64>) -> f64 {
        self.nearest_sq(query).sqrt()
    }

    fn search(&self, node: i32, query: &Point3<f64>, best: &mut f64) {
        if node < 0 {
            return;
        }
        let node = &self.nodes[node as usize];
        let point = &self.points[node.point as usize];
        let d = (point - query).norm_squared();
        if d < *best {
            *best = d;
        }
        let delta = query[node.axis as usize] - point[node.axis as usize];
        let (near, far) = if delta < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.search(near, query, best);
        if delta * delta < *best {
            self.search(far, query, best);
        }
    }
}
