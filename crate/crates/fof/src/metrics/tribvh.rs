//! Bounding-volume hierarchy over mesh triangles for exact point-to-surface
//! distance queries.

use nalgebra::{Point3, Vector3};

use crate::geometry::TriangleMesh;

const LEAF_SIZE: usize = 8;

/// Median-split AABB tree. Distance queries are branch-and-bound: a subtree
/// is visited only when its box is closer than the best exact distance
/// found so far, which never discards the true minimum.
pub struct TriangleBvh {
    triangles: Vec<[Point3<f64>; 3]>,
    nodes: Vec<BvhNode>,
}

struct BvhNode {
    min: Point3<f64>,
    max: Point3<f64>,
    // leaves store a triangle range; inner nodes store child indices
    start: u32,
    count: u32,
    left: i32,
    right: i32,
}

impl TriangleBvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let triangles: Vec<[Point3<f64>; 3]> =
            (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
        let mut bvh = TriangleBvh {
            triangles: Vec::new(),
            nodes: Vec::new(),
        };
        if triangles.is_empty() {
            return bvh;
        }
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let centroids: Vec<Point3<f64>> = triangles
            .iter()
            .map(|t| Point3::from((t[0].coords + t[1].coords + t[2].coords) / 3.0))
            .collect();
        bvh.split(&triangles, &centroids, &mut order, 0);
        // leaf ranges index the reordered triangle array
        bvh.triangles = order.iter().map(|&i| triangles[i as usize]).collect();
        bvh
    }

    fn split(
        &mut self,
        triangles: &[[Point3<f64>; 3]],
        centroids: &[Point3<f64>],
        order: &mut [u32],
        offset: u32,
    ) -> i32 {
        let mut min = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &t in order.iter() {
            for v in &triangles[t as usize] {
                for axis in 0..3 {
                    min[axis] = min[axis].min(v[axis]);
                    max[axis] = max[axis].max(v[axis]);
                }
            }
        }
        let node_index = self.nodes.len() as i32;
        self.nodes.push(BvhNode {
            min,
            max,
            start: offset,
            count: order.len() as u32,
            left: -1,
            right: -1,
        });

        if order.len() <= LEAF_SIZE {
            return node_index;
        }

        // widest centroid axis
        let mut cmin = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut cmax = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &t in order.iter() {
            let c = centroids[t as usize];
            for axis in 0..3 {
                cmin[axis] = cmin[axis].min(c[axis]);
                cmax[axis] = cmax[axis].max(c[axis]);
            }
        }
        let extent = cmax - cmin;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };

        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            centroids[a as usize][axis]
                .partial_cmp(&centroids[b as usize][axis])
                .expect("finite centroids")
        });
        let (lo, hi) = order.split_at_mut(mid);
        let left = self.split(triangles, centroids, lo, offset);
        let right = self.split(triangles, centroids, hi, offset + mid as u32);
        self.nodes[node_index as usize].left = left;
        self.nodes[node_index as usize].right = right;
        node_index
    }

    /// Exact distance from `query` to the nearest triangle.
    pub fn distance(&self, query: &Point3<f64>) -> f64 {
        self.distance_sq(query).sqrt()
    }

    pub fn distance_sq(&self, query: &Point3<f64>) -> f64 {
        assert!(!self.triangles.is_empty(), "empty surface");
        let mut best = f64::INFINITY;
        self.visit(0, query, &mut best);
        best
    }

    fn visit(&self, node: i32, query: &Point3<f64>, best: &mut f64) {
        let node = &self.nodes[node as usize];
        if aabb_distance_sq(&node.min, &node.max, query) >= *best {
            return;
        }
        if node.left < 0 {
            let start = node.start as usize;
            for tri in &self.triangles[start..start + node.count as usize] {
                let d = point_triangle_distance_sq(query, &tri[0], &tri[1], &tri[2]);
                if d < *best {
                    *best = d;
                }
            }
            return;
        }
        // nearer child first tightens the bound sooner
        let dl = aabb_distance_sq(
            &self.nodes[node.left as usize].min,
            &self.nodes[node.left as usize].max,
            query,
        );
        let dr = aabb_distance_sq(
            &self.nodes[node.right as usize].min,
            &self.nodes[node.right as usize].max,
            query,
        );
        if dl <= dr {
            self.visit(node.left, query, best);
            self.visit(node.right, query, best);
        } else {
            self.visit(node.right, query, best);
            self.visit(node.left, query, best);
        }
    }
}

fn aabb_distance_sq(min: &Point3<f64>, max: &Point3<f64>, p: &Point3<f64>) -> f64 {
    let mut d = 0.0;
    for axis in 0..3 {
        let v = p[axis];
        let delta = if v < min[axis] {
            min[axis] - v
        } else if v > max[axis] {
            v - max[axis]
        } else {
            0.0
        };
        d += delta * delta;
    }
    d
}

/// Squared distance from a point to a triangle (closest-point region
/// classification).
pub fn point_triangle_distance_sq(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm_squared(); // vertex a
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm_squared(); // vertex b
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).norm_squared(); // edge ab
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm_squared(); // vertex c
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm_squared(); // edge ac
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        let bc = c - b;
        return (bp - bc * w).norm_squared(); // edge bc
    }

    // interior: project onto the plane
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let closest: Vector3<f64> = ab * v + ac * w;
    (ap - closest).norm_squared()
}
