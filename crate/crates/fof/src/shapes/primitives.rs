//! Built-in shape generators.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;

use super::{append_mesh, point, positive, ShapeGenerator, ShapeParams};

/// Icosphere: subdivided icosahedron projected onto the requested radius.
pub struct Sphere;

impl ShapeGenerator for Sphere {
    fn name(&self) -> &'static str {
        "sphere"
    }

    fn usage(&self) -> &'static str {
        "sphere:r=0.6,level=4 (icosphere, 20*4^level faces)"
    }

    fn generate(&self, params: &ShapeParams) -> Result<TriangleMesh> {
        params.check_known(&["r", "level"])?;
        let r = positive(params.get_or("r", 0.6), "sphere radius")?;
        let level = params.get_or("level", 4.0);
        if !(0.0..=7.0).contains(&level) || level.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sphere level must be an integer in [0, 7], got {level}"
            )));
        }
        Ok(icosphere(r, level as u32))
    }
}

/// Axis-aligned box given by half-extents and an optional center.
pub struct BoxShape;

impl ShapeGenerator for BoxShape {
    fn name(&self) -> &'static str {
        "box"
    }

    fn usage(&self) -> &'static str {
        "box:hx=0.5,hy=0.5,hz=0.5,cx=0,cy=0,cz=0 (half-extents and center)"
    }

    fn generate(&self, params: &ShapeParams) -> Result<TriangleMesh> {
        params.check_known(&["hx", "hy", "hz", "cx", "cy", "cz"])?;
        let hx = positive(params.get_or("hx", 0.5), "box hx")?;
        let hy = positive(params.get_or("hy", 0.5), "box hy")?;
        let hz = positive(params.get_or("hz", 0.5), "box hz")?;
        let center = Vector3::new(
            params.get_or("cx", 0.0),
            params.get_or("cy", 0.0),
            params.get_or("cz", 0.0),
        );
        Ok(boxmesh(Vector3::new(hx, hy, hz), center))
    }
}

/// Thin plate spanning x and y: the failure-mode solid for truncated
/// reconstructions (small duty cycle along the view direction).
pub struct Slab;

impl ShapeGenerator for Slab {
    fn name(&self) -> &'static str {
        "slab"
    }

    fn usage(&self) -> &'static str {
        "slab:t=0.02,extent=0.8,z=0 (thickness t along z)"
    }

    fn generate(&self, params: &ShapeParams) -> Result<TriangleMesh> {
        params.check_known(&["t", "extent", "z"])?;
        let t = positive(params.get_or("t", 0.02), "slab thickness")?;
        let extent = positive(params.get_or("extent", 0.8), "slab extent")?;
        let z = params.get_or("z", 0.0);
        Ok(boxmesh(
            Vector3::new(extent, extent, t / 2.0),
            Vector3::new(0.0, 0.0, z),
        ))
    }
}

/// Torus around the view axis (ring in the xy-plane).
pub struct Torus;

impl ShapeGenerator for Torus {
    fn name(&self) -> &'static str {
        "torus"
    }

    fn usage(&self) -> &'static str {
        "torus:major=0.5,minor=0.2,rings=64,sides=32"
    }

    fn generate(&self, params: &ShapeParams) -> Result<TriangleMesh> {
        params.check_known(&["major", "minor", "rings", "sides"])?;
        let major = positive(params.get_or("major", 0.5), "torus major radius")?;
        let minor = positive(params.get_or("minor", 0.2), "torus minor radius")?;
        if minor >= major {
            return Err(Error::InvalidParameter(format!(
                "torus minor radius {minor} must be smaller than major radius {major}"
            )));
        }
        let rings = params.get_or("rings", 64.0) as usize;
        let sides = params.get_or("sides", 32.0) as usize;
        if rings < 3 || sides < 3 || rings > 4096 || sides > 4096 {
            return Err(Error::InvalidParameter(
                "torus tessellation must be in [3, 4096]".into(),
            ));
        }
        Ok(torus(major, minor, rings, sides))
    }
}

/// Multi-layer stand-in for a scanned subject: disjoint primitives stacked
/// along the view direction so interior rays cross up to six inside
/// intervals.
pub struct Figure;

impl ShapeGenerator for Figure {
    fn name(&self) -> &'static str {
        "figure"
    }

    fn usage(&self) -> &'static str {
        "figure:scale=1 (layered union of primitives, k up to 6)"
    }

    fn generate(&self, params: &ShapeParams) -> Result<TriangleMesh> {
        params.check_known(&["scale"])?;
        let scale = positive(params.get_or("scale", 1.0), "figure scale")?;
        if scale > 1.0 {
            return Err(Error::InvalidParameter(
                "figure scale must be at most 1".into(),
            ));
        }

        let mut mesh = TriangleMesh::default();
        // six z-layers over the central column, plus two arms
        append_mesh(
            &mut mesh,
            &boxmesh(
                Vector3::new(0.35, 0.35, 0.06) * scale,
                Vector3::new(0.0, 0.0, -0.78) * scale,
            ),
        );
        append_mesh(&mut mesh, &{
            let mut s = icosphere(0.28 * scale, 3);
            for v in &mut s.vertices {
                v.z += -0.30 * scale;
            }
            s
        });
        append_mesh(
            &mut mesh,
            &boxmesh(
                Vector3::new(0.30, 0.42, 0.09) * scale,
                Vector3::new(0.0, 0.0, 0.16) * scale,
            ),
        );
        append_mesh(&mut mesh, &{
            let mut s = icosphere(0.09 * scale, 3);
            for v in &mut s.vertices {
                v.z += 0.38 * scale;
            }
            s
        });
        append_mesh(
            &mut mesh,
            &boxmesh(
                Vector3::new(0.26, 0.26, 0.05) * scale,
                Vector3::new(0.0, 0.0, 0.58) * scale,
            ),
        );
        append_mesh(
            &mut mesh,
            &boxmesh(
                Vector3::new(0.20, 0.20, 0.04) * scale,
                Vector3::new(0.0, 0.0, 0.78) * scale,
            ),
        );
        for side in [-1.0, 1.0] {
            append_mesh(
                &mut mesh,
                &boxmesh(
                    Vector3::new(0.08, 0.30, 0.08) * scale,
                    Vector3::new(0.62 * side, 0.0, -0.30) * scale,
                ),
            );
        }
        Ok(mesh)
    }
}

fn boxmesh(half: Vector3<f64>, center: Vector3<f64>) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(8);
    for z in [-half.z, half.z] {
        for y in [-half.y, half.y] {
            for x in [-half.x, half.x] {
                vertices.push(Point3::from(Vector3::new(x, y, z) + center));
            }
        }
    }
    // corner k = x_bit + 2*y_bit + 4*z_bit; quads wound CCW from outside
    let faces = vec![
        [0, 2, 3],
        [0, 3, 1], // z = -hz
        [4, 5, 7],
        [4, 7, 6], // z = +hz
        [0, 1, 5],
        [0, 5, 4], // y = -hy
        [2, 6, 7],
        [2, 7, 3], // y = +hy
        [0, 4, 6],
        [0, 6, 2], // x = -hx
        [1, 3, 7],
        [1, 7, 5], // x = +hx
    ];
    TriangleMesh { vertices, faces }
}

fn icosphere(radius: f64, level: u32) -> TriangleMesh {
    let t = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let mut vertices: Vec<Point3<f64>> = raw
        .iter()
        .map(|&(x, y, z)| {
            let v = Vector3::new(x, y, z).normalize() * radius;
            Point3::from(v)
        })
        .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..level {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Point3<f64>>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = nalgebra::center(&vertices[a as usize], &vertices[b as usize]);
                let v = m.coords.normalize() * radius;
                vertices.push(Point3::from(v));
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }

    TriangleMesh { vertices, faces }
}

fn torus(major: f64, minor: f64, rings: usize, sides: usize) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(rings * sides);
    for i in 0..rings {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / rings as f64;
        let (sin_t, cos_t) = theta.sin_cos();
        for j in 0..sides {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / sides as f64;
            let (sin_p, cos_p) = phi.sin_cos();
            let d = major + minor * cos_p;
            vertices.push(point(d * cos_t, d * sin_t, minor * sin_p));
        }
    }
    let mut faces = Vec::with_capacity(rings * sides * 2);
    let index = |i: usize, j: usize| ((i % rings) * sides + (j % sides)) as u32;
    for i in 0..rings {
        for j in 0..sides {
            let v00 = index(i, j);
            let v10 = index(i + 1, j);
            let v11 = index(i + 1, j + 1);
            let v01 = index(i, j + 1);
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    TriangleMesh { vertices, faces }
}
