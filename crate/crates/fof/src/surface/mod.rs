//! Sampled occupancy volumes and iso-surface extraction back to triangle
//! meshes.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::codec::{decode_occupancy, resize_fof, FofGrid};
use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;

mod tables;

/// A `width x height x depth` scalar volume sampled from a coefficient
/// field: x and y follow the pixel-center convention, z is an
/// endpoint-inclusive linspace over `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    depth: usize,
    values: Vec<f64>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, depth: usize, values: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 || depth < 2 {
            return Err(Error::InvalidParameter(
                "occupancy grid needs at least 2 samples per axis".into(),
            ));
        }
        if values.len() != width * height * depth {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values, got {}",
                width * height * depth,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "occupancy grid contains non-finite values".into(),
            ));
        }
        Ok(OccupancyGrid {
            width,
            height,
            depth,
            values,
        })
    }

    /// Samples an analytic occupancy function on the grid lattice.
    pub fn from_fn(
        width: usize,
        height: usize,
        depth: usize,
        f: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<Self> {
        let map = GridCoordsMap::new(width, height, depth);
        let mut values = Vec::with_capacity(width * height * depth);
        for j in 0..height {
            for i in 0..width {
                for k in 0..depth {
                    let p = map.to_world(Point3::new(i as f64, j as f64, k as f64));
                    values.push(f(p.x, p.y, p.z));
                }
            }
        }
        Self::new(width, height, depth, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(j * self.width + i) * self.depth + k]
    }

    pub fn coords_map(&self) -> GridCoordsMap {
        GridCoordsMap::new(self.width, self.height, self.depth)
    }
}

/// Invertible axis-aligned affine map from index space to the canonical
/// cube: `x = 2(i+0.5)/W - 1`, `y = 1 - 2(j+0.5)/H`, `z = -1 + 2k/(K-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCoordsMap {
    scale: Vector3<f64>,
    offset: Vector3<f64>,
}

impl GridCoordsMap {
    pub fn new(width: usize, height: usize, depth: usize) -> Self {
        let w = width as f64;
        let h = height as f64;
        let d = depth as f64;
        GridCoordsMap {
            scale: Vector3::new(2.0 / w, -2.0 / h, 2.0 / (d - 1.0)),
            offset: Vector3::new(1.0 / w - 1.0, 1.0 - 1.0 / h, -1.0),
        }
    }

    pub fn to_world(&self, index: Point3<f64>) -> Point3<f64> {
        Point3::new(
            self.scale.x * index.x + self.offset.x,
            self.scale.y * index.y + self.offset.y,
            self.scale.z * index.z + self.offset.z,
        )
    }

    pub fn to_index(&self, world: Point3<f64>) -> Point3<f64> {
        Point3::new(
            (world.x - self.offset.x) / self.scale.x,
            (world.y - self.offset.y) / self.scale.y,
            (world.z - self.offset.z) / self.scale.z,
        )
    }
}

// cell-local corner offsets matching the lookup tables
const CORNER_OFFSETS: [(usize, usize, usize); 8] = [
    (0, 0, 0),
    (1, 0, 0),
    (1, 1, 0),
    (0, 1, 0),
    (0, 0, 1),
    (1, 0, 1),
    (1, 1, 1),
    (0, 1, 1),
];

const EDGE_CORNERS: [(usize, usize); 12] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 0),
    (4, 5),
    (5, 6),
    (6, 7),
    (7, 4),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Standard 256-case marching cubes with linear edge interpolation.
///
/// Vertices are deduplicated by lattice edge, so the output is an indexed
/// mesh; for a strict inside/outside volume whose boundary stays away from
/// the cube faces, it is watertight. Triangles are wound so normals point
/// toward lower occupancy. No post-processing is applied.
pub fn marching_cubes(grid: &OccupancyGrid, iso: f64) -> Result<TriangleMesh> {
    let (w, h, d) = (grid.width, grid.height, grid.depth);

    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    // vertex per crossed lattice edge: key = (lower lattice point, axis)
    let mut edge_vertices: HashMap<(u64, u8), u32> = HashMap::new();
    let lattice_id = |ix: usize, iy: usize, iz: usize| ((iy * w + ix) * d + iz) as u64;
    let map = grid.coords_map();

    let mut corner_values = [0.0f64; 8];
    for j in 0..h - 1 {
        for i in 0..w - 1 {
            for k in 0..d - 1 {
                let mut cube_index = 0usize;
                for (bit, &(dx, dy, dz)) in CORNER_OFFSETS.iter().enumerate() {
                    let v = grid.value(i + dx, j + dy, k + dz);
                    corner_values[bit] = v;
                    if v < iso {
                        cube_index |= 1 << bit;
                    }
                }
                if cube_index == 0 || cube_index == 255 {
                    continue;
                }

                let triangulation = &tables::TRI_TABLE[cube_index];
                let mut t = 0;
                while triangulation[t] >= 0 {
                    let mut tri = [0u32; 3];
                    for (slot, &edge) in triangulation[t..t + 3].iter().enumerate() {
                        let edge = edge as usize;
                        let (ca, cb) = EDGE_CORNERS[edge];
                        let (ax, ay, az) = CORNER_OFFSETS[ca];
                        let (bx, by, bz) = CORNER_OFFSETS[cb];
                        let pa = (i + ax, j + ay, k + az);
                        let pb = (i + bx, j + by, k + bz);
                        // canonical key: the lower lattice endpoint plus axis
                        let (lo, hi, va, vb) = if pa <= pb {
                            (pa, pb, corner_values[ca], corner_values[cb])
                        } else {
                            (pb, pa, corner_values[cb], corner_values[ca])
                        };
                        let axis = if lo.0 != hi.0 {
                            0u8
                        } else if lo.1 != hi.1 {
                            1
                        } else {
                            2
                        };
                        let key = (lattice_id(lo.0, lo.1, lo.2), axis);
                        let index = *edge_vertices.entry(key).or_insert_with(|| {
                            let t_interp = (iso - va) / (vb - va);
                            let mut p = Point3::new(lo.0 as f64, lo.1 as f64, lo.2 as f64);
                            p[axis as usize] += t_interp;
                            vertices.push(map.to_world(p));
                            (vertices.len() - 1) as u32
                        });
                        tri[slot] = index;
                    }
                    // the index-to-world map mirrors the y axis, which would
                    // mirror the winding; swap two corners to compensate
                    faces.push([tri[0], tri[2], tri[1]]);
                    t += 3;
                }
            }
        }
    }

    Ok(TriangleMesh { vertices, faces })
}

/// Full decode pipeline: optional resize to `width x height`, z sampling at
/// `depth`, then marching cubes at the 0.5 iso level.
pub fn extract_mesh(fof: &FofGrid, resolution: (usize, usize, usize)) -> Result<TriangleMesh> {
    let (width, height, depth) = resolution;
    let resized;
    let fof = if width != fof.width() || height != fof.height() {
        resized = resize_fof(fof, width, height)?;
        &resized
    } else {
        fof
    };
    let occupancy = decode_occupancy(fof, depth)?;
    marching_cubes(&occupancy, 0.5)
}
