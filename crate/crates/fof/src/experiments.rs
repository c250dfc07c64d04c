//! Experiment harness: order ablations, noise sweeps, 1D approximation
//! curves and timing runs, each emitting deterministic CSV-ready rows.

use std::time::Instant;

use crate::codec::{
    add_relative_noise, decode_occupancy, encode_intervals, encode_set, foreground_mask,
    series_value, truncate_channels, FOREGROUND_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::geometry::TriangleMesh;
use crate::metrics::{evaluate, MetricOptions};
use crate::raster::{interval_occupancy, rasterize_intervals, IntervalSet};
use crate::surface::extract_mesh;

/// Shared sweep settings. `orders` and `noise_levels` must be ascending;
/// grid and z-sample sizes must stay within `[2, 4096]`.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub grid: (usize, usize),
    pub zsamples: usize,
    pub orders: Vec<usize>,
    pub noise_levels: Vec<f64>,
    pub sample_count: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid: (256, 256),
            zsamples: 256,
            orders: vec![3, 7, 15, 31],
            noise_levels: vec![0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30],
            sample_count: 100_000,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let dim_ok = |d: usize| (2..=4096).contains(&d);
        if !dim_ok(self.grid.0) || !dim_ok(self.grid.1) || !dim_ok(self.zsamples) {
            return Err(Error::InvalidParameter(
                "grid and z-sample sizes must be in [2, 4096]".into(),
            ));
        }
        if self.orders.is_empty() || self.orders[0] < 1 {
            return Err(Error::InvalidParameter(
                "need at least one order >= 1".into(),
            ));
        }
        if !self.orders.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("orders must be ascending".into()));
        }
        if self.noise_levels.iter().any(|&l| l < 0.0 || !l.is_finite()) {
            return Err(Error::InvalidParameter(
                "noise levels must be non-negative".into(),
            ));
        }
        if !self.noise_levels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "noise levels must be ascending".into(),
            ));
        }
        if self.sample_count == 0 {
            return Err(Error::InvalidParameter(
                "sample count must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One sweep result. Metric fields are infinite when the reconstruction
/// produced no surface (recorded as a failure row rather than an error).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: f64,
    pub chamfer: f64,
    pub p2s: f64,
    pub normal_error: f64,
}

impl SweepRow {
    fn failure(parameter: f64) -> Self {
        SweepRow {
            parameter,
            chamfer: f64::INFINITY,
            p2s: f64::INFINITY,
            normal_error: f64::INFINITY,
        }
    }
}

/// Serializes sweep rows with the given name for the parameter column.
pub fn sweep_csv(parameter_name: &str, rows: &[SweepRow]) -> String {
    let mut out = format!("{parameter_name},chamfer,p2s,normal_error\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.parameter, row.chamfer, row.p2s, row.normal_error
        ));
    }
    out
}

fn metric_options(config: &ExperimentConfig) -> MetricOptions {
    MetricOptions {
        sample_count: config.sample_count,
        seed: config.seed,
        normal_grid: config.grid,
        p2s_vertices: false,
        // sweep reconstructions share the ground truth's frame exactly
        z_align: false,
    }
}

fn measure(
    pred: &TriangleMesh,
    gt: &TriangleMesh,
    parameter: f64,
    config: &ExperimentConfig,
) -> Result<SweepRow> {
    if pred.is_empty() {
        return Ok(SweepRow::failure(parameter));
    }
    let report = evaluate(pred, gt, &metric_options(config))?;
    Ok(SweepRow {
        parameter,
        chamfer: report.chamfer,
        p2s: report.p2s,
        normal_error: report.normal_error,
    })
}

/// Encodes the mesh once at the largest requested order, truncates down to
/// every other order (exact by the channel-nesting property), reconstructs
/// and measures each against the input mesh.
pub fn ablate_orders(gt_mesh: &TriangleMesh, config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let (width, height) = config.grid;
    let raster = rasterize_intervals(gt_mesh, width, height)?;
    let max_order = *config.orders.last().expect("validated nonempty");
    let full = encode_intervals(&raster, max_order)?;

    let mut rows = Vec::with_capacity(config.orders.len());
    for &order in &config.orders {
        let fof = truncate_channels(&full, order)?;
        let mesh = extract_mesh(&fof, (width, height, config.zsamples))?;
        rows.push(measure(&mesh, gt_mesh, order as f64, config)?);
    }
    Ok(rows)
}

/// Encodes the mesh at the largest configured order, then perturbs the
/// foreground coefficients per noise level and measures each
/// reconstruction. Level index `i` uses sub-seed `seed ^ i`, so adding a
/// level never changes the others.
pub fn noise_sweep(gt_mesh: &TriangleMesh, config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let (width, height) = config.grid;
    let order = *config.orders.last().expect("validated nonempty");
    let raster = rasterize_intervals(gt_mesh, width, height)?;
    let fof = encode_intervals(&raster, order)?;
    let mask = foreground_mask(&fof, FOREGROUND_THRESHOLD);

    let mut rows = Vec::with_capacity(config.noise_levels.len());
    for (index, &level) in config.noise_levels.iter().enumerate() {
        let sub_seed = config.seed ^ index as u64;
        let noisy = add_relative_noise(&fof, level, sub_seed, &mask)?;
        let mesh = extract_mesh(&noisy, (width, height, config.zsamples))?;
        rows.push(measure(&mesh, gt_mesh, level, config)?);
    }
    Ok(rows)
}

/// Exact and truncated occupancy values of one interval set, sampled
/// uniformly over z.
pub struct CurveTable {
    pub orders: Vec<usize>,
    /// `(z, exact, one value per order)`
    pub rows: Vec<(f64, f64, Vec<f64>)>,
}

impl CurveTable {
    pub fn csv(&self) -> String {
        let mut out = String::from("z,f_exact");
        for order in &self.orders {
            out.push_str(&format!(",fhat_{order}"));
        }
        out.push('\n');
        for (z, exact, approx) in &self.rows {
            out.push_str(&format!("{z},{exact}"));
            for v in approx {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Largest approximated value over `[z_lo, z_hi]` for the given order.
    pub fn max_in_range(&self, order: usize, z_lo: f64, z_hi: f64) -> Option<f64> {
        let column = self.orders.iter().position(|&o| o == order)?;
        self.rows
            .iter()
            .filter(|(z, _, _)| (z_lo..=z_hi).contains(z))
            .map(|(_, _, approx)| approx[column])
            .max_by(|a, b| a.partial_cmp(b).expect("finite curve values"))
    }
}

/// Samples the exact 1D occupancy of `set` and its truncated
/// reconstructions at every requested order.
pub fn curves(set: &IntervalSet, orders: &[usize], samples: usize) -> Result<CurveTable> {
    if orders.is_empty() || orders.iter().any(|&o| o < 1) {
        return Err(Error::InvalidParameter(
            "need at least one order >= 1".into(),
        ));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let coefficient_sets: Vec<Vec<f64>> =
        orders.iter().map(|&order| encode_set(set, order)).collect();
    let rows = (0..samples)
        .map(|k| {
            let z = -1.0 + 2.0 * k as f64 / (samples - 1) as f64;
            let exact = interval_occupancy(set, z);
            let approx = coefficient_sets
                .iter()
                .map(|coeffs| series_value(coeffs, z))
                .collect();
            (z, exact, approx)
        })
        .collect();
    Ok(CurveTable {
        orders: orders.to_vec(),
        rows,
    })
}

/// Parses `z0:z1[,z0:z1...]` into an interval set.
pub fn parse_intervals(spec: &str) -> Result<IntervalSet> {
    let mut pairs = Vec::new();
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (lo, hi) = part
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("expected z_in:z_out, got `{part}`")))?;
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad number `{s}`")))
        };
        pairs.push((parse(lo)?, parse(hi)?));
    }
    IntervalSet::from_pairs(pairs)
}

/// One timing measurement.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub stage: &'static str,
    pub order: usize,
    pub channels: usize,
    pub seconds: f64,
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("stage,order,channels,seconds\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.stage, row.order, row.channels, row.seconds
        ));
    }
    out
}

fn median_seconds(mut times: Vec<f64>) -> f64 {
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times[times.len() / 2]
}

/// Times the encode and decode stages across the configured orders at the
/// configured grid and z resolution. `repeats` runs are taken per stage and
/// the median reported.
pub fn bench(
    gt_mesh: &TriangleMesh,
    config: &ExperimentConfig,
    repeats: usize,
) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let repeats = repeats.max(1);
    let (width, height) = config.grid;
    let raster = rasterize_intervals(gt_mesh, width, height)?;

    let mut rows = Vec::new();
    for &order in &config.orders {
        let mut encode_times = Vec::with_capacity(repeats);
        let mut fof = None;
        for _ in 0..repeats {
            let start = Instant::now();
            fof = Some(encode_intervals(&raster, order)?);
            encode_times.push(start.elapsed().as_secs_f64());
        }
        let fof = fof.expect("at least one repeat");
        rows.push(BenchRow {
            stage: "encode",
            order,
            channels: 2 * order + 1,
            seconds: median_seconds(encode_times),
        });

        let mut decode_times = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let start = Instant::now();
            let occupancy = decode_occupancy(&fof, config.zsamples)?;
            decode_times.push(start.elapsed().as_secs_f64());
            drop(occupancy);
        }
        rows.push(BenchRow {
            stage: "decode",
            order,
            channels: 2 * order + 1,
            seconds: median_seconds(decode_times),
        });
    }
    Ok(rows)
}

/// Ordinary least squares fit `y = slope * x + intercept`, returning
/// `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, intercept, r2)
}
