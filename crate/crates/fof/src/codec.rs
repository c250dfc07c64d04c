//! The coefficient-field codec.
//!
//! Each pixel of a [`FofGrid`] holds the first `2N+1` Fourier coefficients
//! `[a0, a1, b1, ..., aN, bN]` of its ray's 1D occupancy signal over
//! z in `[-1, 1]`. Encoding from layered depth intervals is closed-form:
//! the occupancy signal is an indicator function, so every coefficient is a
//! sum of sine/cosine differences at the interval endpoints. Decoding is a
//! dot product with the trigonometric basis, evaluated at any z without
//! re-encoding.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{IntervalSet, LayeredIntervalGrid};
use crate::surface::OccupancyGrid;

use std::f64::consts::PI;

/// A `width x height` field of truncated Fourier coefficient vectors.
///
/// Channel layout per pixel is `[a0, a1, b1, ..., aN, bN]`, pixels stored
/// row-major and channel-fastest. Background pixels (rays that never enter
/// the solid) are exactly all-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FofGrid {
    width: usize,
    height: usize,
    order: usize,
    channels: Vec<f64>,
}

impl FofGrid {
    pub fn new(width: usize, height: usize, order: usize, channels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(
                "field dimensions must be positive".into(),
            ));
        }
        if order < 1 {
            return Err(Error::InvalidParameter("order must be at least 1".into()));
        }
        if channels.len() != width * height * (2 * order + 1) {
            return Err(Error::DimensionMismatch(format!(
                "expected {} channel values, got {}",
                width * height * (2 * order + 1),
                channels.len()
            )));
        }
        if channels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "field contains non-finite values".into(),
            ));
        }
        Ok(FofGrid {
            width,
            height,
            order,
            channels,
        })
    }

    pub fn zeros(width: usize, height: usize, order: usize) -> Result<Self> {
        Self::new(
            width,
            height,
            order,
            vec![0.0; width * height * (2 * order + 1)],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Truncation order N.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of channels, `2N + 1`.
    pub fn channel_count(&self) -> usize {
        2 * self.order + 1
    }

    /// Coefficient vector of pixel `(i, j)`.
    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        let c = self.channel_count();
        let base = (j * self.width + i) * c;
        &self.channels[base..base + c]
    }

    pub fn pixel_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let c = self.channel_count();
        let base = (j * self.width + i) * c;
        &mut self.channels[base..base + c]
    }

    pub fn channels(&self) -> &[f64] {
        &self.channels
    }
}

/// The first `2N+1` basis functions sampled at one z:
/// `[1/2, cos(pi z), sin(pi z), ..., cos(N pi z), sin(N pi z)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisVector {
    pub values: Vec<f64>,
}

impl BasisVector {
    pub fn dot(&self, coefficients: &[f64]) -> f64 {
        debug_assert_eq!(self.values.len(), coefficients.len());
        self.values
            .iter()
            .zip(coefficients)
            .map(|(b, c)| b * c)
            .sum()
    }
}

/// Evaluates the basis at `z`. Values of z outside `[-1, 1]` follow the
/// periodic extension of the signal.
pub fn basis_vector(z: f64, order: usize) -> BasisVector {
    let mut values = Vec::with_capacity(2 * order + 1);
    values.push(0.5);
    for n in 1..=order {
        let angle = n as f64 * PI * z;
        values.push(angle.cos());
        values.push(angle.sin());
    }
    BasisVector { values }
}

/// Closed-form coefficients of one interval set.
///
/// `a0` is the total inside length; for n >= 1,
/// `a_n = sum_i (sin(n pi z_i') - sin(n pi z_i)) / (n pi)` and
/// `b_n = sum_i (cos(n pi z_i) - cos(n pi z_i')) / (n pi)`.
pub fn encode_set(set: &IntervalSet, order: usize) -> Vec<f64> {
    let mut coeffs = vec![0.0; 2 * order + 1];
    for &(z_in, z_out) in set.intervals() {
        coeffs[0] += z_out - z_in;
        for n in 1..=order {
            let npi = n as f64 * PI;
            coeffs[2 * n - 1] += ((npi * z_out).sin() - (npi * z_in).sin()) / npi;
            coeffs[2 * n] += ((npi * z_in).cos() - (npi * z_out).cos()) / npi;
        }
    }
    coeffs
}

/// Encodes every pixel of an interval grid. Empty sets stay exactly zero.
pub fn encode_intervals(grid: &LayeredIntervalGrid, order: usize) -> Result<FofGrid> {
    if order < 1 {
        return Err(Error::InvalidParameter("order must be at least 1".into()));
    }
    let (width, height) = (grid.width(), grid.height());
    let c = 2 * order + 1;
    let mut channels = vec![0.0; width * height * c];
    channels
        .par_chunks_mut(c)
        .zip(grid.cells().par_iter())
        .for_each(|(out, set)| {
            if !set.is_empty() {
                out.copy_from_slice(&encode_set(set, order));
            }
        });
    FofGrid::new(width, height, order, channels)
}

/// Truncated-series value of one coefficient vector at `z`.
pub fn series_value(coefficients: &[f64], z: f64) -> f64 {
    let order = (coefficients.len() - 1) / 2;
    basis_vector(z, order).dot(coefficients)
}

/// Continuous pixel-space coordinate for bilinear lookups, clamped at the
/// border pixels: `(low index, high index, blend)`.
fn bilinear_axis(continuous: f64, size: usize) -> (usize, usize, f64) {
    let clamped = continuous.clamp(0.0, (size - 1) as f64);
    let i0 = clamped.floor() as usize;
    let i1 = (i0 + 1).min(size - 1);
    (i0, i1, clamped - i0 as f64)
}

fn interpolate_pixel(fof: &FofGrid, x: f64, y: f64, out: &mut [f64]) {
    let fx = (x + 1.0) * fof.width as f64 / 2.0 - 0.5;
    let fy = (1.0 - y) * fof.height as f64 / 2.0 - 0.5;
    let (i0, i1, tx) = bilinear_axis(fx, fof.width);
    let (j0, j1, ty) = bilinear_axis(fy, fof.height);

    let p00 = fof.pixel(i0, j0);
    let p10 = fof.pixel(i1, j0);
    let p01 = fof.pixel(i0, j1);
    let p11 = fof.pixel(i1, j1);
    for ch in 0..out.len() {
        let top = p00[ch] * (1.0 - tx) + p10[ch] * tx;
        let bottom = p01[ch] * (1.0 - tx) + p11[ch] * tx;
        out[ch] = top * (1.0 - ty) + bottom * ty;
    }
}

/// Decodes the field at a continuous point: bilinear interpolation of the
/// coefficient vectors over pixel centers, then a dot product with the
/// basis at `z`.
pub fn decode_at(fof: &FofGrid, x: f64, y: f64, z: f64) -> f64 {
    let mut coeffs = vec![0.0; fof.channel_count()];
    interpolate_pixel(fof, x, y, &mut coeffs);
    series_value(&coeffs, z)
}

/// Samples every ray at `k_samples` z values (an endpoint-inclusive
/// linspace over `[-1, 1]`), as one field-by-basis tensor contraction.
pub fn decode_occupancy(fof: &FofGrid, k_samples: usize) -> Result<OccupancyGrid> {
    if k_samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 z samples".into()));
    }
    let c = fof.channel_count();
    // basis matrix, one row per z sample
    let basis: Vec<f64> = (0..k_samples)
        .flat_map(|k| {
            let z = -1.0 + 2.0 * k as f64 / (k_samples - 1) as f64;
            basis_vector(z, fof.order).values
        })
        .collect();

    let mut values = vec![0.0; fof.width * fof.height * k_samples];
    values
        .par_chunks_mut(k_samples)
        .enumerate()
        .for_each(|(pixel, column)| {
            let coeffs = &fof.channels[pixel * c..(pixel + 1) * c];
            for (k, out) in column.iter_mut().enumerate() {
                let row = &basis[k * c..(k + 1) * c];
                *out = row.iter().zip(coeffs).map(|(b, cf)| b * cf).sum();
            }
        });

    OccupancyGrid::new(fof.width, fof.height, k_samples, values)
}

/// Keeps the first `2N'+1` channels. Bitwise-identical to encoding at the
/// lower order directly.
pub fn truncate_channels(fof: &FofGrid, new_order: usize) -> Result<FofGrid> {
    if new_order < 1 || new_order > fof.order {
        return Err(Error::InvalidParameter(format!(
            "target order {} outside [1, {}]",
            new_order, fof.order
        )));
    }
    let old_c = fof.channel_count();
    let new_c = 2 * new_order + 1;
    let mut channels = Vec::with_capacity(fof.width * fof.height * new_c);
    for pixel in fof.channels.chunks_exact(old_c) {
        channels.extend_from_slice(&pixel[..new_c]);
    }
    FofGrid::new(fof.width, fof.height, new_order, channels)
}

/// Bilinear per-channel resampling onto a new pixel grid; the order is
/// unchanged. Constant fields stay constant.
pub fn resize_fof(fof: &FofGrid, new_width: usize, new_height: usize) -> Result<FofGrid> {
    if new_width == 0 || new_height == 0 {
        return Err(Error::InvalidParameter(
            "field dimensions must be positive".into(),
        ));
    }
    let c = fof.channel_count();
    let mut channels = vec![0.0; new_width * new_height * c];
    channels
        .par_chunks_mut(new_width * c)
        .enumerate()
        .for_each(|(j, row)| {
            for i in 0..new_width {
                let (x, y) = crate::raster::pixel_to_xy(i, j, new_width, new_height);
                interpolate_pixel(fof, x, y, &mut row[i * c..(i + 1) * c]);
            }
        });
    FofGrid::new(new_width, new_height, fof.order, channels)
}

/// Foreground pixels of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct ForegroundMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl ForegroundMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.width + i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Default foreground threshold; encoded background pixels are exactly zero.
pub const FOREGROUND_THRESHOLD: f64 = 1e-9;

/// Marks pixels whose coefficient vector has any entry above `threshold`
/// in magnitude.
pub fn foreground_mask(fof: &FofGrid, threshold: f64) -> ForegroundMask {
    let c = fof.channel_count();
    let bits = fof
        .channels
        .chunks_exact(c)
        .map(|pixel| pixel.iter().any(|v| v.abs() > threshold))
        .collect();
    ForegroundMask {
        width: fof.width,
        height: fof.height,
        bits,
    }
}

/// Mean, over masked pixels, of the L1 distance between coefficient
/// vectors.
pub fn fof_l1(pred: &FofGrid, gt: &FofGrid, mask: &ForegroundMask) -> Result<f64> {
    if pred.width != gt.width || pred.height != gt.height || pred.order != gt.order {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} order {} vs {}x{} order {}",
            pred.width, pred.height, pred.order, gt.width, gt.height, gt.order
        )));
    }
    if mask.width != pred.width || mask.height != pred.height {
        return Err(Error::DimensionMismatch("mask size".into()));
    }
    let foreground = mask.count();
    if foreground == 0 {
        return Err(Error::EmptyMask);
    }
    let c = pred.channel_count();
    let mut total = 0.0;
    for (pixel, keep) in pred
        .channels
        .chunks_exact(c)
        .zip(gt.channels.chunks_exact(c))
        .zip(&mask.bits)
    {
        if *keep {
            let (p, g) = pixel;
            total += p.iter().zip(g).map(|(a, b)| (a - b).abs()).sum::<f64>();
        }
    }
    Ok(total / foreground as f64)
}

/// Adds zero-mean Gaussian noise to masked pixels. The per-channel standard
/// deviation is `level` times that channel's RMS over the masked pixels, so
/// the perturbation is relative to the signal it corrupts. Deterministic
/// for a given seed.
pub fn add_relative_noise(
    fof: &FofGrid,
    level: f64,
    seed: u64,
    mask: &ForegroundMask,
) -> Result<FofGrid> {
    if level < 0.0 || !level.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise level must be non-negative, got {level}"
        )));
    }
    if mask.width != fof.width || mask.height != fof.height {
        return Err(Error::DimensionMismatch("mask size".into()));
    }
    if level == 0.0 {
        return Ok(fof.clone());
    }

    let c = fof.channel_count();
    let masked = mask.count();
    if masked == 0 {
        return Ok(fof.clone());
    }

    let mut sq_sums = vec![0.0f64; c];
    for (pixel, keep) in fof.channels.chunks_exact(c).zip(&mask.bits) {
        if *keep {
            for (sum, v) in sq_sums.iter_mut().zip(pixel) {
                *sum += v * v;
            }
        }
    }
    let sigmas: Vec<f64> = sq_sums
        .iter()
        .map(|&s| level * (s / masked as f64).sqrt())
        .collect();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = fof.clone();
    for (pixel, keep) in out.channels.chunks_exact_mut(c).zip(&mask.bits) {
        if *keep {
            for (v, sigma) in pixel.iter_mut().zip(&sigmas) {
                let g: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * g;
            }
        }
    }
    Ok(out)
}

const FOF_MAGIC: &[u8; 4] = b"FOF1";
const MAX_ELEMENTS: u64 = 1 << 31;

/// Writes the field: magic `FOF1`, little-endian u32 width/height/channel
/// count, then row-major channel-fastest float32 values.
pub fn write_fof(fof: &FofGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        out.write_all(FOF_MAGIC)?;
        out.write_all(&(fof.width as u32).to_le_bytes())?;
        out.write_all(&(fof.height as u32).to_le_bytes())?;
        out.write_all(&(fof.channel_count() as u32).to_le_bytes())?;
        for &v in &fof.channels {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

/// Reads a field written by [`write_fof`]. The stored float32 values load
/// losslessly, so write-then-read round trips are bitwise stable.
pub fn read_fof(path: impl AsRef<Path>) -> Result<FofGrid> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for header".into()))?;
    if &magic != FOF_MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let mut word = [0u8; 4];
    let mut read_u32 = |reader: &mut BufReader<File>| -> Result<u32> {
        reader
            .read_exact(&mut word)
            .map_err(|_| Error::Format("truncated header".into()))?;
        Ok(u32::from_le_bytes(word))
    };
    let width = read_u32(&mut reader)? as usize;
    let height = read_u32(&mut reader)? as usize;
    let channel_count = read_u32(&mut reader)? as usize;

    if width == 0 || height == 0 {
        return Err(Error::Format("zero dimension".into()));
    }
    if channel_count < 3 || channel_count.is_multiple_of(2) {
        return Err(Error::Format(format!(
            "channel count {channel_count} is not an odd number >= 3"
        )));
    }
    let elements = width as u64 * height as u64 * channel_count as u64;
    if elements > MAX_ELEMENTS {
        return Err(Error::Format("dimension overflow".into()));
    }

    let mut payload = Vec::new();
    reader
        .read_to_end(&mut payload)
        .map_err(|e| Error::io(path, e))?;
    if payload.len() as u64 != elements * 4 {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            elements * 4,
            payload.len()
        )));
    }
    let channels: Vec<f64> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    if channels.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite values in payload".into()));
    }

    FofGrid::new(width, height, (channel_count - 1) / 2, channels)
}

/// Analytic L2 error of the order-N reconstruction of one interval set,
/// from the energy identity: the truncated series is an orthogonal
/// projection, so the residual is the signal energy minus the captured
/// energy `a0^2/2 + sum (a_n^2 + b_n^2)`.
pub fn l2_truncation_error(set: &IntervalSet, order: usize) -> f64 {
    let coeffs = encode_set(set, order);
    let signal_energy = set.inside_length();
    let mut captured = coeffs[0] * coeffs[0] / 2.0;
    for n in 1..=order {
        captured += coeffs[2 * n - 1] * coeffs[2 * n - 1] + coeffs[2 * n] * coeffs[2 * n];
    }
    signal_energy - captured
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::rasterize_intervals;
    use crate::shapes::make_shape;

    fn set(pairs: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::from_pairs(pairs.to_vec()).unwrap()
    }

    fn grid_1x1(pairs: &[(f64, f64)], order: usize) -> FofGrid {
        FofGrid::new(1, 1, order, encode_set(&set(pairs), order)).unwrap()
    }

    #[test]
    fn full_occupancy_line_is_pure_dc() {
        let coeffs = encode_set(&set(&[(-1.0, 1.0)]), 8);
        assert!((coeffs[0] - 2.0).abs() < 1e-15);
        for &c in &coeffs[1..] {
            assert!(c.abs() < 1e-15, "harmonic {c}");
        }
        // decode is constantly one
        let fof = grid_1x1(&[(-1.0, 1.0)], 8);
        for z in [-1.0, -0.3, 0.0, 0.77, 1.0] {
            assert!((decode_at(&fof, 0.0, 0.0, z) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_set_encodes_to_zero() {
        let coeffs = encode_set(&IntervalSet::empty(), 5);
        assert!(coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn half_interval_first_harmonics() {
        // intervals {(0, 0.5)}: a0 = 0.5, a1 = b1 = 1/pi
        let coeffs = encode_set(&set(&[(0.0, 0.5)]), 1);
        assert!((coeffs[0] - 0.5).abs() < 1e-15);
        assert!((coeffs[1] - 1.0 / PI).abs() < 1e-15);
        assert!((coeffs[2] - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn basis_vector_quarter_period_values() {
        assert_eq!(basis_vector(0.0, 2).values, vec![0.5, 1.0, 0.0, 1.0, 0.0]);
        let b = basis_vector(1.0, 1);
        assert!((b.values[0] - 0.5).abs() == 0.0);
        assert!((b.values[1] + 1.0).abs() < 1e-15);
        assert!(b.values[2].abs() < 1e-15);
        let b = basis_vector(0.5, 2);
        let expected = [0.5, 0.0, 1.0, -1.0, 0.0];
        for (got, want) in b.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn dc_channel_equals_inside_length_exactly() {
        let s = set(&[(-0.73, -0.21), (0.05, 0.44), (0.62, 0.91)]);
        let coeffs = encode_set(&s, 4);
        assert_eq!(coeffs[0], s.inside_length());
    }

    #[test]
    fn decode_jump_midpoint_behavior() {
        let fof = grid_1x1(&[(-0.5, 0.5)], 15);
        let center = decode_at(&fof, 0.0, 0.0, 0.0);
        assert!((0.95..=1.05).contains(&center), "center {center}");
        for z in [-0.5, 0.5] {
            let v = decode_at(&fof, 0.0, 0.0, z);
            assert!((v - 0.5).abs() < 0.05, "jump value {v} at {z}");
        }
    }

    #[test]
    fn decode_matches_column_sampling() {
        let mesh = make_shape("sphere:r=0.6,level=3").unwrap();
        let grid = rasterize_intervals(&mesh, 32, 32).unwrap();
        let fof = encode_intervals(&grid, 7).unwrap();
        let k = 17;
        let occ = decode_occupancy(&fof, k).unwrap();
        for (i, j) in [(16, 16), (10, 20), (0, 0), (31, 5)] {
            let (x, y) = crate::raster::pixel_to_xy(i, j, 32, 32);
            for kk in 0..k {
                let z = -1.0 + 2.0 * kk as f64 / (k - 1) as f64;
                let direct = decode_at(&fof, x, y, z);
                let sampled = occ.value(i, j, kk);
                assert!(
                    (direct - sampled).abs() < 1e-12,
                    "pixel ({i},{j}) z {z}: {direct} vs {sampled}"
                );
            }
        }
    }

    #[test]
    fn decode_is_linear_in_the_field() {
        let f1 = grid_1x1(&[(-0.4, 0.1)], 6);
        let f2 = grid_1x1(&[(0.3, 0.8)], 6);
        let (alpha, beta) = (0.7, -1.3);
        let mixed = FofGrid::new(
            1,
            1,
            6,
            f1.channels
                .iter()
                .zip(&f2.channels)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        )
        .unwrap();
        for z in [-0.9, -0.2, 0.33, 0.9] {
            let lhs = decode_at(&mixed, 0.0, 0.0, z);
            let rhs = alpha * decode_at(&f1, 0.0, 0.0, z) + beta * decode_at(&f2, 0.0, 0.0, z);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_equals_direct_encode_bitwise() {
        let mesh = make_shape("figure").unwrap();
        let grid = rasterize_intervals(&mesh, 48, 48).unwrap();
        let full = encode_intervals(&grid, 31).unwrap();
        for lower in [1, 7, 15, 31] {
            let truncated = truncate_channels(&full, lower).unwrap();
            let direct = encode_intervals(&grid, lower).unwrap();
            assert_eq!(truncated, direct, "order {lower}");
        }
        assert!(truncate_channels(&full, 32).is_err());
        assert!(truncate_channels(&full, 0).is_err());
    }

    #[test]
    fn resize_identity_and_constancy() {
        let mesh = make_shape("sphere:r=0.6,level=3").unwrap();
        let grid = rasterize_intervals(&mesh, 64, 64).unwrap();
        let fof = encode_intervals(&grid, 7).unwrap();
        let same = resize_fof(&fof, 64, 64).unwrap();
        let max_delta = fof
            .channels
            .iter()
            .zip(&same.channels)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_delta < 1e-12, "identity resample delta {max_delta}");

        let constant = FofGrid::new(4, 4, 1, vec![2.0; 4 * 4 * 3]).unwrap();
        let resized = resize_fof(&constant, 9, 5).unwrap();
        assert!(resized.channels.iter().all(|&v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn resize_down_up_stays_close_on_smooth_fields() {
        let mesh = make_shape("sphere:r=0.6").unwrap();
        let grid = rasterize_intervals(&mesh, 512, 512).unwrap();
        let fof = encode_intervals(&grid, 15).unwrap();
        let down_up = resize_fof(&resize_fof(&fof, 256, 256).unwrap(), 512, 512).unwrap();

        let rms =
            (fof.channels.iter().map(|v| v * v).sum::<f64>() / fof.channels.len() as f64).sqrt();
        // individual silhouette pixels see O(signal) changes when the pixel
        // grid shifts under them, so the bound is on the error RMS
        let err_rms = (fof
            .channels
            .iter()
            .zip(&down_up.channels)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / fof.channels.len() as f64)
            .sqrt();
        assert!(err_rms <= 0.05 * rms, "resize error rms {err_rms} vs {rms}");
    }

    #[test]
    fn foreground_masks_follow_the_silhouette() {
        let zeros = FofGrid::zeros(8, 8, 2).unwrap();
        assert_eq!(foreground_mask(&zeros, FOREGROUND_THRESHOLD).count(), 0);

        let mesh = make_shape("box:hx=0.4,hy=0.3,hz=0.5").unwrap();
        let grid = rasterize_intervals(&mesh, 64, 64).unwrap();
        let fof = encode_intervals(&grid, 3).unwrap();
        let mask = foreground_mask(&fof, FOREGROUND_THRESHOLD);
        for j in 0..64 {
            for i in 0..64 {
                assert_eq!(mask.get(i, j), !grid.cell(i, j).is_empty());
            }
        }
    }

    #[test]
    fn l1_metric_basics() {
        let mesh = make_shape("sphere:r=0.5,level=2").unwrap();
        let grid = rasterize_intervals(&mesh, 32, 32).unwrap();
        let fof = encode_intervals(&grid, 3).unwrap();
        let mask = foreground_mask(&fof, FOREGROUND_THRESHOLD);
        assert_eq!(fof_l1(&fof, &fof, &mask).unwrap(), 0.0);

        // +0.1 on one channel of one masked pixel, mask of exactly that pixel
        let mut bumped = fof.clone();
        let (mut pi, mut pj) = (0, 0);
        'outer: for j in 0..32 {
            for i in 0..32 {
                if mask.get(i, j) {
                    (pi, pj) = (i, j);
                    break 'outer;
                }
            }
        }
        bumped.pixel_mut(pi, pj)[2] += 0.1;
        let single = ForegroundMask {
            width: 32,
            height: 32,
            bits: (0..32 * 32).map(|p| p == pj * 32 + pi).collect(),
        };
        let err = fof_l1(&bumped, &fof, &single).unwrap();
        assert!((err - 0.1).abs() < 1e-12);

        let empty = ForegroundMask {
            width: 32,
            height: 32,
            bits: vec![false; 32 * 32],
        };
        assert!(matches!(fof_l1(&fof, &fof, &empty), Err(Error::EmptyMask)));
    }

    #[test]
    fn noise_level_zero_is_identity_and_seeds_are_deterministic() {
        let mesh = make_shape("sphere:r=0.6,level=3").unwrap();
        let grid = rasterize_intervals(&mesh, 64, 64).unwrap();
        let fof = encode_intervals(&grid, 7).unwrap();
        let mask = foreground_mask(&fof, FOREGROUND_THRESHOLD);

        let clean = add_relative_noise(&fof, 0.0, 9, &mask).unwrap();
        assert_eq!(clean, fof);

        let a = add_relative_noise(&fof, 0.05, 9, &mask).unwrap();
        let b = add_relative_noise(&fof, 0.05, 9, &mask).unwrap();
        assert_eq!(a, b);
        let c = add_relative_noise(&fof, 0.05, 10, &mask).unwrap();
        assert_ne!(a, c);
        // background stays exactly zero
        for (pixel, keep) in a.channels.chunks_exact(a.channel_count()).zip(mask.bits()) {
            if !keep {
                assert!(pixel.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn noise_std_tracks_channel_rms() {
        let mesh = make_shape("sphere:r=0.7,level=4").unwrap();
        let grid = rasterize_intervals(&mesh, 256, 256).unwrap();
        let fof = encode_intervals(&grid, 7).unwrap();
        let mask = foreground_mask(&fof, FOREGROUND_THRESHOLD);
        let noisy = add_relative_noise(&fof, 0.05, 3, &mask).unwrap();

        let c = fof.channel_count();
        let masked = mask.count() as f64;
        for ch in 0..c {
            let mut rms = 0.0;
            let mut delta_sq = 0.0;
            for ((clean, dirty), keep) in fof
                .channels
                .chunks_exact(c)
                .zip(noisy.channels.chunks_exact(c))
                .zip(mask.bits())
            {
                if *keep {
                    rms += clean[ch] * clean[ch];
                    let d = dirty[ch] - clean[ch];
                    delta_sq += d * d;
                }
            }
            let rms = (rms / masked).sqrt();
            let measured = (delta_sq / masked).sqrt();
            let expected = 0.05 * rms;
            assert!(
                (measured - expected).abs() <= 0.03 * expected,
                "channel {ch}: std {measured} vs {expected}"
            );
        }
    }

    #[test]
    fn file_roundtrip_and_size() {
        let mesh = make_shape("torus:major=0.5,minor=0.2").unwrap();
        let grid = rasterize_intervals(&mesh, 32, 32).unwrap();
        let fof = encode_intervals(&grid, 15).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.fof");
        write_fof(&fof, &path).unwrap();
        let size = std::fs::metadata(&path).unwrap().len();
        assert_eq!(size, 16 + 4 * 32 * 32 * 31);

        // one write quantizes to f32; after that the round trip is bitwise
        let first = read_fof(&path).unwrap();
        write_fof(&first, &path).unwrap();
        let second = read_fof(&path).unwrap();
        assert_eq!(first, second);
        // quantization stays within f32 relative precision
        for (a, b) in fof.channels.iter().zip(&first.channels) {
            assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0));
        }
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.fof");
        let fof = FofGrid::zeros(4, 4, 1).unwrap();
        write_fof(&fof, &path).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_fof(&path), Err(Error::Format(_))));

        write_fof(&fof, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(read_fof(&path), Err(Error::Format(_))));
    }

    #[test]
    fn parseval_error_is_monotone_in_order() {
        let sets = [
            set(&[(-0.8, -0.2)]),
            set(&[(-0.6, -0.1), (0.2, 0.3), (0.5, 0.9)]),
            set(&[(-0.05, 0.05)]),
        ];
        for s in &sets {
            let mut previous = f64::INFINITY;
            for order in 1..=64 {
                let err = l2_truncation_error(s, order);
                assert!(err <= previous + 1e-12, "order {order}");
                assert!(err >= -1e-12, "projection exceeded signal energy");
                previous = err;
            }
        }
    }
}
