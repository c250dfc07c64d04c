//! Orthographic conversion of a triangle mesh into per-pixel layered depth
//! intervals.
//!
//! Every pixel center shoots a ray along +z through the canonical cube. All
//! ray/triangle crossing depths are collected, deduplicated, sorted and
//! paired even-odd into inside intervals. Faces are binned by their
//! projected bounding box so each ray only tests nearby triangles.
//!
//! Points exactly on a shared edge or vertex are claimed by exactly one of
//! the adjacent triangles (a fill-rule tie-break on the projected edge
//! direction), so interior crossings are counted exactly once per surface
//! sheet.

use nalgebra::Point3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;

/// Hits closer than this along z collapse into one crossing.
pub const HIT_DEDUP_EPS: f64 = 1e-9;

/// Tolerated coordinate overshoot outside the canonical cube.
const CUBE_EPS: f64 = 1e-6;

/// Sorted, pairwise-disjoint inside intervals of one view ray.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    /// Builds a set from `(z_in, z_out)` pairs, enforcing the invariants:
    /// each pair strictly increasing, pairs sorted and disjoint.
    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Result<Self> {
        for &(z_in, z_out) in &pairs {
            if !(z_in.is_finite() && z_out.is_finite() && z_in < z_out) {
                return Err(Error::InvalidParameter(format!(
                    "bad interval ({z_in}, {z_out})"
                )));
            }
        }
        for window in pairs.windows(2) {
            if window[0].1 > window[1].0 {
                return Err(Error::InvalidParameter(format!(
                    "intervals ({}, {}) and ({}, {}) overlap or are unsorted",
                    window[0].0, window[0].1, window[1].0, window[1].1
                )));
            }
        }
        Ok(IntervalSet { intervals: pairs })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    /// Total length of the inside region.
    pub fn inside_length(&self) -> f64 {
        self.intervals.iter().map(|(z0, z1)| z1 - z0).sum()
    }
}

/// Per-pixel interval sets for a `width x height` view grid.
#[derive(Debug, Clone)]
pub struct LayeredIntervalGrid {
    width: usize,
    height: usize,
    cells: Vec<IntervalSet>,
    warnings: u64,
}

impl LayeredIntervalGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels whose rays produced an odd crossing count; the
    /// stray hit is dropped rather than treated as a hard error.
    pub fn warnings(&self) -> u64 {
        self.warnings
    }

    pub fn cell(&self, i: usize, j: usize) -> &IntervalSet {
        &self.cells[j * self.width + i]
    }

    pub fn cells(&self) -> &[IntervalSet] {
        &self.cells
    }

    /// Interior volume implied by the intervals (each pixel covers an area
    /// of `4 / (W * H)` in the canonical cube cross-section).
    pub fn volume(&self) -> f64 {
        let pixel_area = 4.0 / (self.width as f64 * self.height as f64);
        self.cells
            .iter()
            .map(|set| set.inside_length())
            .sum::<f64>()
            * pixel_area
    }

    /// Debug dump: one `i,j,k,z_in,z_out` row per interval, background
    /// pixels omitted.
    pub fn debug_csv(&self) -> String {
        let mut out = String::from("i,j,k,z_in,z_out\n");
        for j in 0..self.height {
            for i in 0..self.width {
                for (k, (z_in, z_out)) in self.cell(i, j).intervals().iter().enumerate() {
                    out.push_str(&format!("{i},{j},{k},{z_in},{z_out}\n"));
                }
            }
        }
        out
    }
}

/// Maps a pixel index to its center in `[-1,1]^2`; row 0 is the top of the
/// image, so y decreases with j.
pub fn pixel_to_xy(i: usize, j: usize, width: usize, height: usize) -> (f64, f64) {
    debug_assert!(i < width && j < height);
    let x = 2.0 * (i as f64 + 0.5) / width as f64 - 1.0;
    let y = 1.0 - 2.0 * (j as f64 + 0.5) / height as f64;
    (x, y)
}

/// Exact 1D occupancy of a ray: 1 strictly inside an interval, 0.5 on an
/// endpoint, 0 outside.
pub fn interval_occupancy(set: &IntervalSet, z: f64) -> f64 {
    for &(z_in, z_out) in &set.intervals {
        if z == z_in || z == z_out {
            return 0.5;
        }
        if z > z_in && z < z_out {
            return 1.0;
        }
        if z < z_in {
            break;
        }
    }
    0.0
}

struct ProjectedFace {
    a: Point3<f64>,
    b: Point3<f64>,
    c: Point3<f64>,
    min_x: f64,
    max_x: f64,
    /// Projected orientation: true when the doubled signed area is negative.
    flipped: bool,
}

/// Casts a +z ray through every pixel center and pairs the crossings into
/// inside intervals.
pub fn rasterize_intervals(
    mesh: &TriangleMesh,
    width: usize,
    height: usize,
) -> Result<LayeredIntervalGrid> {
    // crossing parity is only meaningful for geometry inside the cube
    for v in &mesh.vertices {
        if v.x.abs() > 1.0 + CUBE_EPS || v.y.abs() > 1.0 + CUBE_EPS || v.z.abs() > 1.0 + CUBE_EPS {
            return Err(Error::InvalidParameter(format!(
                "mesh is not normalized: vertex ({}, {}, {}) outside the canonical cube",
                v.x, v.y, v.z
            )));
        }
    }
    let (faces, rows) = bin_faces(mesh, width, height)?;

    let row_results: Vec<(Vec<IntervalSet>, u64)> = (0..height)
        .into_par_iter()
        .map(|j| {
            let (_, y) = pixel_to_xy(0, j, width, height);
            let mut hits: Vec<Vec<f64>> = vec![Vec::new(); width];
            for &face_idx in &rows[j] {
                let face = &faces[face_idx as usize];
                let (i_lo, i_hi) = column_span(face.min_x, face.max_x, width);
                for (i, pixel) in hits.iter_mut().enumerate().take(i_hi + 1).skip(i_lo) {
                    let (x, _) = pixel_to_xy(i, j, width, height);
                    if let Some(z) = ray_hit(face, x, y) {
                        pixel.push(z);
                    }
                }
            }

            let mut warnings = 0u64;
            let cells = hits
                .into_iter()
                .map(|h| pair_hits(h, &mut warnings))
                .collect();
            (cells, warnings)
        })
        .collect();

    let mut cells = Vec::with_capacity(width * height);
    let mut warnings = 0;
    for (row, row_warnings) in row_results {
        cells.extend(row);
        warnings += row_warnings;
    }
    Ok(LayeredIntervalGrid {
        width,
        height,
        cells,
        warnings,
    })
}

/// Front-most crossing per pixel: depth and face index, or `None` for
/// background pixels.
#[derive(Debug, Clone)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub hits: Vec<Option<(f64, u32)>>,
}

impl DepthImage {
    pub fn hit(&self, i: usize, j: usize) -> Option<(f64, u32)> {
        self.hits[j * self.width + i]
    }
}

/// Rasterizes only the nearest surface per pixel (smallest z).
pub fn rasterize_first_hit(mesh: &TriangleMesh, width: usize, height: usize) -> Result<DepthImage> {
    let (faces, rows) = bin_faces(mesh, width, height)?;
    let face_ids = face_id_table(mesh);

    let row_results: Vec<Vec<Option<(f64, u32)>>> = (0..height)
        .into_par_iter()
        .map(|j| {
            let (_, y) = pixel_to_xy(0, j, width, height);
            let mut best: Vec<Option<(f64, u32)>> = vec![None; width];
            for &face_idx in &rows[j] {
                let face = &faces[face_idx as usize];
                let id = face_ids[face_idx as usize];
                let (i_lo, i_hi) = column_span(face.min_x, face.max_x, width);
                for (i, pixel) in best.iter_mut().enumerate().take(i_hi + 1).skip(i_lo) {
                    let (x, _) = pixel_to_xy(i, j, width, height);
                    if let Some(z) = ray_hit(face, x, y) {
                        let candidate = (z, id);
                        if pixel.is_none_or(|cur| candidate < cur) {
                            *pixel = Some(candidate);
                        }
                    }
                }
            }
            best
        })
        .collect();

    Ok(DepthImage {
        width,
        height,
        hits: row_results.into_iter().flatten().collect(),
    })
}

/// Original mesh face index for each non-degenerate projected face.
fn face_id_table(mesh: &TriangleMesh) -> Vec<u32> {
    let mut ids = Vec::new();
    for f in 0..mesh.faces.len() {
        let [a, b, c] = mesh.triangle(f);
        if doubled_area(&a, &b, &c) != 0.0 {
            ids.push(f as u32);
        }
    }
    ids
}

fn bin_faces(
    mesh: &TriangleMesh,
    width: usize,
    height: usize,
) -> Result<(Vec<ProjectedFace>, Vec<Vec<u32>>)> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(
            "grid dimensions must be positive".into(),
        ));
    }

    let mut faces = Vec::with_capacity(mesh.faces.len());
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); height];
    for f in 0..mesh.faces.len() {
        let [a, b, c] = mesh.triangle(f);
        let area2 = doubled_area(&a, &b, &c);
        if area2 == 0.0 {
            // view-parallel or degenerate: a +z ray can only graze it
            continue;
        }
        let min_x = a.x.min(b.x).min(c.x);
        let max_x = a.x.max(b.x).max(c.x);
        let min_y = a.y.min(b.y).min(c.y);
        let max_y = a.y.max(b.y).max(c.y);

        let idx = faces.len() as u32;
        faces.push(ProjectedFace {
            a,
            b,
            c,
            min_x,
            max_x,
            flipped: area2 < 0.0,
        });

        let (j_lo, j_hi) = row_span(min_y, max_y, height);
        for row in rows.iter_mut().take(j_hi + 1).skip(j_lo) {
            row.push(idx);
        }
    }
    Ok((faces, rows))
}

fn doubled_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Pixel columns whose centers may fall in `[min_x, max_x]`, padded one
/// pixel so float rounding at the boundary cannot drop candidates.
fn column_span(min_x: f64, max_x: f64, width: usize) -> (usize, usize) {
    let w = width as f64;
    let lo = ((min_x + 1.0) * w / 2.0 - 0.5).floor() as isize - 1;
    let hi = ((max_x + 1.0) * w / 2.0 - 0.5).ceil() as isize + 1;
    (
        lo.clamp(0, width as isize - 1) as usize,
        hi.clamp(0, width as isize - 1) as usize,
    )
}

/// Pixel rows whose centers may fall in `[min_y, max_y]`; row index grows
/// downward in y.
fn row_span(min_y: f64, max_y: f64, height: usize) -> (usize, usize) {
    let h = height as f64;
    let lo = ((1.0 - max_y) * h / 2.0 - 0.5).floor() as isize - 1;
    let hi = ((1.0 - min_y) * h / 2.0 - 0.5).ceil() as isize + 1;
    (
        lo.clamp(0, height as isize - 1) as usize,
        hi.clamp(0, height as isize - 1) as usize,
    )
}

fn edge_function(px: f64, py: f64, qx: f64, qy: f64, sx: f64, sy: f64) -> f64 {
    (qx - px) * (sy - py) - (qy - py) * (sx - px)
}

/// Edge function evaluated in a canonical vertex order, so the two
/// triangles sharing an edge compute bit-identical magnitudes and see
/// exactly complementary signs; anchoring each triangle at its own vertex
/// would let rounding hand a near-edge ray to both triangles or to
/// neither, breaking crossing parity.
fn oriented_edge(p: &Point3<f64>, q: &Point3<f64>, sx: f64, sy: f64) -> f64 {
    if (p.x, p.y) <= (q.x, q.y) {
        edge_function(p.x, p.y, q.x, q.y, sx, sy)
    } else {
        -edge_function(q.x, q.y, p.x, p.y, sx, sy)
    }
}

/// Fill-rule ownership for a point exactly on a directed edge `(dx, dy)`:
/// an edge owns its points when it heads downward, or horizontally to the
/// right. Opposite directions never both own, so two triangles sharing an
/// edge claim an on-edge ray exactly once.
fn edge_owns(dx: f64, dy: f64) -> bool {
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

fn ray_hit(face: &ProjectedFace, x: f64, y: f64) -> Option<f64> {
    let (a, b, c) = (&face.a, &face.b, &face.c);
    let mut e0 = oriented_edge(b, c, x, y);
    let mut e1 = oriented_edge(c, a, x, y);
    let mut e2 = oriented_edge(a, b, x, y);
    let sign = if face.flipped { -1.0 } else { 1.0 };
    e0 *= sign;
    e1 *= sign;
    e2 *= sign;

    if e0 < 0.0 || e1 < 0.0 || e2 < 0.0 {
        return None;
    }
    if e0 == 0.0 || e1 == 0.0 || e2 == 0.0 {
        // boundary: every zero edge must own the point, with the directed
        // edge taken in normalized (counter-clockwise) orientation
        let edges = [
            (e0, c.x - b.x, c.y - b.y),
            (e1, a.x - c.x, a.y - c.y),
            (e2, b.x - a.x, b.y - a.y),
        ];
        for (e, dx, dy) in edges {
            if e == 0.0 && !edge_owns(sign * dx, sign * dy) {
                return None;
            }
        }
    }

    let denom = e0 + e1 + e2;
    if denom <= 0.0 {
        return None;
    }
    Some((e0 * a.z + e1 * b.z + e2 * c.z) / denom)
}

/// Sorts, deduplicates and even-odd pairs raw crossing depths.
fn pair_hits(mut hits: Vec<f64>, warnings: &mut u64) -> IntervalSet {
    if hits.is_empty() {
        return IntervalSet::empty();
    }
    hits.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite depths"));

    let mut deduped = Vec::with_capacity(hits.len());
    for z in hits {
        match deduped.last() {
            Some(&last) if z - last < HIT_DEDUP_EPS => {}
            _ => deduped.push(z),
        }
    }

    if deduped.len() % 2 == 1 {
        deduped.pop();
        *warnings += 1;
    }
    let intervals = deduped.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    IntervalSet { intervals }
}
