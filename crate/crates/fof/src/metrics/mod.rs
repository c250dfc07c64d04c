//! Reconstruction-quality metrics: symmetric Chamfer distance between
//! surface samples, mean point-to-surface distance, and the L1 error
//! between orthographic normal images. All distances are in canonical-cube
//! units.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{sample_surface_points, PointSample, TriangleMesh};
use crate::raster::rasterize_first_hit;

mod kdtree;
mod tribvh;

pub use kdtree::KdTree;
pub use tribvh::TriangleBvh;

/// One metric evaluation, serializable as a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub chamfer: f64,
    pub p2s: f64,
    pub normal_error: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "chamfer,p2s,normal_error,sample_count,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.chamfer, self.p2s, self.normal_error, self.sample_count, self.seed
        )
    }
}

/// Translates `pred` along z so both clouds share the same mean z; returns
/// the aligned points and the applied offset.
pub fn z_align(pred: &[PointSample], gt: &[PointSample]) -> Result<(Vec<PointSample>, f64)> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::InvalidParameter(
            "z alignment needs nonempty point sets".into(),
        ));
    }
    let mean = |points: &[PointSample]| {
        points.iter().map(|p| p.position.z).sum::<f64>() / points.len() as f64
    };
    let offset = mean(gt) - mean(pred);
    let aligned = pred
        .iter()
        .map(|p| {
            let mut moved = *p;
            moved.position.z += offset;
            moved
        })
        .collect();
    Ok((aligned, offset))
}

/// Symmetric mean squared nearest-neighbor distance, before the reporting
/// transform: `mean_pred min |x-y|^2 + mean_gt min |x-y|^2`.
pub fn chamfer_raw(pred: &[PointSample], gt: &[PointSample]) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::InvalidParameter(
            "chamfer needs nonempty point sets".into(),
        ));
    }
    let pred_tree = KdTree::build(pred.iter().map(|p| p.position));
    let gt_tree = KdTree::build(gt.iter().map(|p| p.position));

    let forward: Vec<f64> = pred
        .par_iter()
        .map(|p| gt_tree.nearest_sq(&p.position))
        .collect();
    let backward: Vec<f64> = gt
        .par_iter()
        .map(|p| pred_tree.nearest_sq(&p.position))
        .collect();
    let mean = |d: &[f64]| d.iter().sum::<f64>() / d.len() as f64;
    Ok(mean(&forward) + mean(&backward))
}

/// Chamfer distance as reported: the square root of half the symmetric
/// mean squared distance.
pub fn chamfer(pred: &[PointSample], gt: &[PointSample]) -> Result<f64> {
    Ok((chamfer_raw(pred, gt)? / 2.0).sqrt())
}

/// Aggregates per-pair raw Chamfer values over a test set: average first,
/// then take the square root of half.
pub fn aggregate_chamfer(raw_values: &[f64]) -> f64 {
    if raw_values.is_empty() {
        return 0.0;
    }
    let mean = raw_values.iter().sum::<f64>() / raw_values.len() as f64;
    (mean / 2.0).sqrt()
}

/// Mean exact distance from sampled points on `pred_mesh` to the surface of
/// `gt_mesh`.
pub fn p2s(
    pred_mesh: &TriangleMesh,
    gt_mesh: &TriangleMesh,
    count: usize,
    seed: u64,
) -> Result<f64> {
    let samples = sample_surface_points(pred_mesh, count, seed)?;
    p2s_from_points(&samples, gt_mesh)
}

/// Point-to-surface distance using the literal mesh vertices instead of
/// surface samples.
pub fn p2s_vertices(pred_mesh: &TriangleMesh, gt_mesh: &TriangleMesh) -> Result<f64> {
    if pred_mesh.vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let points: Vec<PointSample> = pred_mesh
        .vertices
        .iter()
        .map(|&position| PointSample {
            position,
            normal: None,
        })
        .collect();
    p2s_from_points(&points, gt_mesh)
}

fn p2s_from_points(points: &[PointSample], gt_mesh: &TriangleMesh) -> Result<f64> {
    if gt_mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("no query points".into()));
    }
    let bvh = TriangleBvh::build(gt_mesh);
    let distances: Vec<f64> = points
        .par_iter()
        .map(|p| bvh.distance(&p.position))
        .collect();
    Ok(distances.iter().sum::<f64>() / distances.len() as f64)
}

/// Orthographic face-normal image of a mesh: `None` on background pixels.
pub fn render_normal_image(
    mesh: &TriangleMesh,
    width: usize,
    height: usize,
) -> Result<Vec<Option<Vector3<f64>>>> {
    let depth = rasterize_first_hit(mesh, width, height)?;
    Ok(depth
        .hits
        .iter()
        .map(|hit| hit.and_then(|(_, face)| mesh.face_normal(face as usize)))
        .collect())
}

/// Mean L1 difference between two normal images over the pixels covered by
/// either; a pixel covered by only one image contributes the L1 norm of
/// that normal against the zero vector.
pub fn normal_image_l1(a: &[Option<Vector3<f64>>], b: &[Option<Vector3<f64>>]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch("normal image size".into()));
    }
    let mut covered = 0usize;
    let mut total = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        let l1 = match (pa, pb) {
            (None, None) => continue,
            (Some(na), None) => na.abs().sum(),
            (None, Some(nb)) => nb.abs().sum(),
            (Some(na), Some(nb)) => (na - nb).abs().sum(),
        };
        covered += 1;
        total += l1;
    }
    if covered == 0 {
        return Ok(0.0);
    }
    Ok(total / covered as f64)
}

/// Renders both meshes as face-normal maps along the view direction and
/// compares them.
pub fn normal_image_error(
    pred_mesh: &TriangleMesh,
    gt_mesh: &TriangleMesh,
    width: usize,
    height: usize,
) -> Result<f64> {
    if pred_mesh.is_empty() || gt_mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let pred = render_normal_image(pred_mesh, width, height)?;
    let gt = render_normal_image(gt_mesh, width, height)?;
    normal_image_l1(&pred, &gt)
}

/// Options for [`evaluate`].
#[derive(Debug, Clone, Copy)]
pub struct MetricOptions {
    pub sample_count: usize,
    pub seed: u64,
    /// Resolution of the normal-image comparison.
    pub normal_grid: (usize, usize),
    /// Use mesh vertices for P2S instead of surface samples.
    pub p2s_vertices: bool,
    /// Remove the mean depth offset before measuring. Meant for
    /// predictions with a depth ambiguity; reconstructions that share the
    /// ground truth's frame skip it, since the offset estimate carries
    /// sampling noise of its own.
    pub z_align: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            sample_count: 100_000,
            seed: 1,
            normal_grid: (512, 512),
            p2s_vertices: false,
            z_align: true,
        }
    }
}

/// The full metric suite: optionally z-aligns the prediction against the
/// ground truth, then computes Chamfer, P2S and normal-image error.
pub fn evaluate(
    pred_mesh: &TriangleMesh,
    gt_mesh: &TriangleMesh,
    options: &MetricOptions,
) -> Result<MetricReport> {
    if pred_mesh.is_empty() || gt_mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let pred_samples = sample_surface_points(pred_mesh, options.sample_count, options.seed)?;
    let gt_samples = sample_surface_points(gt_mesh, options.sample_count, options.seed)?;
    let (aligned_samples, offset) = if options.z_align {
        z_align(&pred_samples, &gt_samples)?
    } else {
        (pred_samples, 0.0)
    };
    let aligned_mesh = pred_mesh.translated(Vector3::new(0.0, 0.0, offset));

    let chamfer = chamfer(&aligned_samples, &gt_samples)?;
    let p2s = if options.p2s_vertices {
        p2s_vertices(&aligned_mesh, gt_mesh)?
    } else {
        p2s_from_points(&aligned_samples, gt_mesh)?
    };
    let (nw, nh) = options.normal_grid;
    let normal_error = normal_image_error(&aligned_mesh, gt_mesh, nw, nh)?;

    Ok(MetricReport {
        chamfer,
        p2s,
        normal_error,
        sample_count: options.sample_count,
        seed: options.seed,
    })
}
