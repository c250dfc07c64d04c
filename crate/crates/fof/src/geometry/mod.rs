//! Triangle-mesh data model: indexed surfaces in canonical-cube coordinates,
//! OBJ/PLY file I/O, normalization and area-uniform surface sampling.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

mod io;

pub use io::{load_mesh, save_mesh};

/// An indexed triangle surface.
///
/// Vertices are unitless; after [`normalize_mesh`] every coordinate lies in
/// `[-1, 1]`. Faces index into `vertices` counter-clockwise when viewed from
/// outside.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[u32; 3]>,
}

/// A point on a mesh surface, with the unit normal of the face it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSample {
    pub position: Point3<f64>,
    pub normal: Option<Vector3<f64>>,
}

impl PointSample {
    /// A bare position sample without a normal.
    pub fn at(position: Point3<f64>) -> Self {
        PointSample {
            position,
            normal: None,
        }
    }
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let mesh = TriangleMesh { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks the structural invariants: in-range face indices, finite
    /// coordinates.
    pub fn validate(&self) -> Result<()> {
        for v in &self.vertices {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(Error::InvalidParameter(
                    "mesh contains non-finite coordinates".into(),
                ));
            }
        }
        let n = self.vertices.len();
        for face in &self.faces {
            for &idx in face {
                if idx as usize >= n {
                    return Err(Error::FaceIndexOutOfRange {
                        index: idx as usize,
                        vertices: n,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() || self.faces.is_empty()
    }

    /// Axis-aligned bounding box, or `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.vertices.first()?;
        let mut min = first;
        let mut max = first;
        for v in &self.vertices[1..] {
            for axis in 0..3 {
                min[axis] = min[axis].min(v[axis]);
                max[axis] = max[axis].max(v[axis]);
            }
        }
        Some((min, max))
    }

    /// Corner positions of face `f`.
    pub fn triangle(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unit face normal from the winding order; `None` for degenerate faces.
    pub fn face_normal(&self, f: usize) -> Option<Vector3<f64>> {
        let [a, b, c] = self.triangle(f);
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len > 0.0 {
            Some(n / len)
        } else {
            None
        }
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a)).norm() * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed volume via the divergence theorem. Positive for a closed mesh
    /// with outward-facing normals.
    pub fn signed_volume(&self) -> f64 {
        let mut six_v = 0.0;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.triangle(f);
            six_v += a.coords.dot(&b.coords.cross(&c.coords));
        }
        six_v / 6.0
    }

    pub fn translate(&mut self, offset: Vector3<f64>) {
        for v in &mut self.vertices {
            *v += offset;
        }
    }

    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        let mut out = self.clone();
        out.translate(offset);
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.vertices {
            v.coords *= factor;
        }
    }

    /// True when every undirected edge is shared by exactly two faces with
    /// opposite orientation.
    pub fn is_watertight(&self) -> bool {
        if self.is_empty() {
            return false;
        }
        // count directed edges; watertight + consistently oriented means each
        // undirected edge appears once per direction
        let mut directed: HashMap<(u32, u32), i32> = HashMap::new();
        for face in &self.faces {
            for k in 0..3 {
                let a = face[k];
                let b = face[(k + 1) % 3];
                if a == b {
                    return false;
                }
                *directed.entry((a, b)).or_insert(0) += 1;
            }
        }
        directed
            .iter()
            .all(|(&(a, b), &count)| count == 1 && directed.get(&(b, a)) == Some(&1))
    }
}

/// Uniformly scales and translates the mesh so its bounding box is centered
/// at the origin and the longest axis spans `2 * (1 - margin)`.
pub fn normalize_mesh(mesh: &TriangleMesh, margin: f64) -> Result<TriangleMesh> {
    if mesh.vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::InvalidParameter(format!(
            "margin {margin} outside [0, 1)"
        )));
    }
    let (min, max) = mesh.bounds().expect("nonempty mesh");
    let extent = max - min;
    let longest = extent.x.max(extent.y).max(extent.z);
    if longest <= 0.0 {
        return Err(Error::DegenerateBounds);
    }
    let center = nalgebra::center(&min, &max);
    let scale = 2.0 * (1.0 - margin) / longest;
    let vertices = mesh
        .vertices
        .iter()
        .map(|v| Point3::from((v - center) * scale))
        .collect();
    Ok(TriangleMesh {
        vertices,
        faces: mesh.faces.clone(),
    })
}

/// Default normalization margin; keeps geometry clear of the cube faces so
/// iso-surface extraction never clips it.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Draws `count` points area-uniformly on the mesh surface.
///
/// Triangles are chosen proportionally to area through a cumulative table,
/// positions are barycentric-uniform within the triangle, and normals come
/// from the face winding. Deterministic for a given seed.
pub fn sample_surface_points(
    mesh: &TriangleMesh,
    count: usize,
    seed: u64,
) -> Result<Vec<PointSample>> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::ZeroSurfaceArea);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let t = rng.gen_range(0.0..total);
        let f = cumulative.partition_point(|&acc| acc <= t);
        let f = f.min(mesh.faces.len() - 1);
        let [a, b, c] = mesh.triangle(f);

        // square-root trick for uniform barycentric coordinates
        let r1: f64 = rng.gen();
        let r2: f64 = rng.gen();
        let s = r1.sqrt();
        let u = 1.0 - s;
        let v = r2 * s;
        let position = Point3::from(a.coords * u + b.coords * v + c.coords * (1.0 - u - v));
        samples.push(PointSample {
            position,
            normal: mesh.face_normal(f),
        });
    }
    Ok(samples)
}
