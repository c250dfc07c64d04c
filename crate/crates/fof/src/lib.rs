//! Fourier occupancy field geometry codec.
//!
//! A watertight triangle mesh, normalized into the `[-1,1]^3` cube and
//! viewed orthographically along +z, is reduced to a 2D multi-channel
//! image: each pixel stores the first `2N+1` Fourier coefficients of its
//! ray's 1D inside/outside occupancy signal. The coefficients follow in
//! closed form from the ray's entry/exit depths, and decoding back to an
//! occupancy volume at any z resolution is a single tensor contraction
//! with the trigonometric basis, followed by marching cubes at the 0.5
//! level to recover a mesh.
//!
//! Pipeline stages map onto the modules:
//!
//! - [`geometry`]: mesh representation, OBJ/PLY I/O, normalization,
//!   surface sampling
//! - [`shapes`]: synthetic watertight test solids behind a runtime
//!   registry
//! - [`raster`]: mesh to per-pixel layered depth intervals
//! - [`codec`]: intervals to coefficient fields and back, field file
//!   format, masks, noise
//! - [`surface`]: sampled occupancy volumes and marching-cubes extraction
//! - [`metrics`]: Chamfer / point-to-surface / normal-image error
//! - [`experiments`]: sweep and timing harnesses used by the CLI

pub mod codec;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod metrics;
pub mod raster;
pub mod shapes;
pub mod surface;

pub use codec::{BasisVector, FofGrid, ForegroundMask};
pub use error::{Error, Result};
pub use geometry::{PointSample, TriangleMesh};
pub use metrics::MetricReport;
pub use raster::{IntervalSet, LayeredIntervalGrid};
pub use shapes::{ShapeRegistry, ShapeSpec};
pub use surface::OccupancyGrid;

/// Caps rayon's global thread pool from the `FOF_THREADS` environment
/// variable. Call once at startup; later calls (or an already-initialized
/// pool) are ignored.
pub fn configure_threads_from_env() {
    if let Ok(value) = std::env::var("FOF_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}
