//! Command-line pipeline and experiment harness for Fourier occupancy
//! fields.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use fof::codec::{encode_intervals, read_fof, write_fof};
use fof::experiments::{
    ablate_orders, bench, bench_csv, curves, linear_fit, noise_sweep, parse_intervals, sweep_csv,
    ExperimentConfig,
};
use fof::geometry::{load_mesh, normalize_mesh, save_mesh, TriangleMesh, DEFAULT_MARGIN};
use fof::metrics::{evaluate, MetricOptions, MetricReport};
use fof::raster::rasterize_intervals;
use fof::shapes::ShapeRegistry;
use fof::surface::extract_mesh;

#[derive(Parser)]
#[command(
    name = "fof",
    about = "Fourier occupancy field codec: convert watertight meshes to compact \
             coefficient fields and back, and run the reconstruction experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a mesh to a coefficient field file
    Encode(EncodeArgs),
    /// Reconstruct a mesh from a coefficient field file
    Decode(DecodeArgs),
    /// Sweep the truncation order and measure reconstruction quality
    AblateN(AblateArgs),
    /// Sweep relative coefficient noise and measure reconstruction quality
    NoiseSweep(NoiseArgs),
    /// Sample exact and truncated 1D occupancy curves to CSV
    Curves(CurvesArgs),
    /// Compare two meshes: Chamfer, point-to-surface, normal-image error
    Metrics(MetricsArgs),
    /// Time the encode and decode stages across truncation orders
    Bench(BenchArgs),
}

#[derive(Args)]
struct MeshSource {
    /// Input mesh file (OBJ or PLY); normalized into the canonical cube
    #[arg(long, conflicts_with = "shape")]
    input: Option<PathBuf>,
    /// Synthetic shape spec, e.g. sphere:r=0.6 box:hx=0.5 slab:t=0.02
    /// torus:major=0.5,minor=0.2 figure (already in canonical coordinates)
    #[arg(long)]
    shape: Option<String>,
    /// Normalization margin for --input meshes
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
}

impl MeshSource {
    fn load(&self) -> Result<TriangleMesh> {
        match (&self.input, &self.shape) {
            (Some(path), None) => {
                let mesh = load_mesh(path)?;
                if mesh.is_empty() {
                    bail!("{}: mesh is empty", path.display());
                }
                Ok(normalize_mesh(&mesh, self.margin)?)
            }
            (None, Some(spec)) => Ok(ShapeRegistry::with_builtin().generate_str(spec)?),
            _ => bail!("exactly one of --input or --shape is required"),
        }
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    source: MeshSource,
    /// Field resolution as WxH
    #[arg(long, default_value = "256x256")]
    grid: String,
    /// Truncation order N (2N+1 channels)
    #[arg(long, default_value_t = 15)]
    order: usize,
    /// Output field file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input field file
    #[arg(long)]
    input: PathBuf,
    /// Optional resample resolution as WxH before decoding
    #[arg(long)]
    grid: Option<String>,
    /// Number of z samples
    #[arg(long, default_value_t = 256)]
    zsamples: usize,
    /// Output OBJ mesh
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    source: MeshSource,
    /// Ascending truncation orders
    #[arg(long, value_delimiter = ',', default_value = "3,7,15,31")]
    orders: Vec<usize>,
    #[arg(long, default_value = "256x256")]
    grid: String,
    #[arg(long, default_value_t = 256)]
    zsamples: usize,
    /// Surface samples per metric evaluation
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    #[command(flatten)]
    source: MeshSource,
    /// Truncation order of the clean field
    #[arg(long, default_value_t = 15)]
    order: usize,
    /// Ascending relative noise levels
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3"
    )]
    levels: Vec<f64>,
    #[arg(long, default_value = "256x256")]
    grid: String,
    #[arg(long, default_value_t = 256)]
    zsamples: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurvesArgs {
    /// Inside intervals as z_in:z_out[,z_in:z_out...]
    #[arg(long, allow_hyphen_values = true)]
    intervals: String,
    #[arg(long, value_delimiter = ',', default_value = "7,15,31")]
    orders: Vec<usize>,
    /// Number of z samples
    #[arg(long, default_value_t = 512)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Predicted mesh
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth mesh
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Normal-image resolution as WxH
    #[arg(long, default_value = "512x512")]
    grid: String,
    /// Use mesh vertices for P2S instead of surface samples
    #[arg(long)]
    p2s_vertices: bool,
    /// Optional CSV output path (the report is always printed)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Synthetic shape spec to encode (defaults to sphere:r=0.6)
    #[arg(long, default_value = "sphere:r=0.6")]
    shape: String,
    #[arg(long, value_delimiter = ',', default_value = "7,15,31,63")]
    orders: Vec<usize>,
    #[arg(long, default_value = "256x256")]
    grid: String,
    #[arg(long, default_value_t = 256)]
    zsamples: usize,
    /// Timing repetitions per stage (median reported)
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_grid(spec: &str) -> Result<(usize, usize)> {
    let (w, h) = spec
        .split_once(['x', 'X'])
        .with_context(|| format!("expected WxH, got `{spec}`"))?;
    Ok((
        w.trim()
            .parse()
            .with_context(|| format!("bad width `{w}`"))?,
        h.trim()
            .parse()
            .with_context(|| format!("bad height `{h}`"))?,
    ))
}

fn write_text(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Meshes already inside the cube pass through untouched; anything larger
/// is normalized with the default margin so the metrics stay comparable.
fn normalize_if_needed(mesh: TriangleMesh) -> Result<TriangleMesh> {
    if mesh.is_empty() {
        bail!("mesh is empty");
    }
    let inside = mesh
        .vertices
        .iter()
        .all(|v| v.x.abs() <= 1.0 && v.y.abs() <= 1.0 && v.z.abs() <= 1.0);
    if inside {
        Ok(mesh)
    } else {
        Ok(normalize_mesh(&mesh, DEFAULT_MARGIN)?)
    }
}

fn run() -> Result<()> {
    fof::configure_threads_from_env();
    let cli = Cli::parse();
    match cli.command {
        Command::Encode(args) => {
            let mesh = args.source.load()?;
            let (width, height) = parse_grid(&args.grid)?;
            let raster = rasterize_intervals(&mesh, width, height)?;
            if raster.warnings() > 0 {
                eprintln!(
                    "warning: {} pixels had unpaired crossings (dropped)",
                    raster.warnings()
                );
            }
            let field = encode_intervals(&raster, args.order)?;
            write_fof(&field, &args.out)?;
            println!(
                "encoded {}x{} order {} ({} channels), warnings {}",
                width,
                height,
                args.order,
                field.channel_count(),
                raster.warnings()
            );
            Ok(())
        }
        Command::Decode(args) => {
            let field = read_fof(&args.input)?;
            let (width, height) = match &args.grid {
                Some(grid) => parse_grid(grid)?,
                None => (field.width(), field.height()),
            };
            let mesh = extract_mesh(&field, (width, height, args.zsamples))?;
            if mesh.is_empty() {
                eprintln!("warning: no iso-surface found, writing an empty mesh");
            }
            save_mesh(&mesh, &args.out)?;
            println!(
                "decoded {} vertices, {} faces at {}x{}x{}",
                mesh.vertices.len(),
                mesh.faces.len(),
                width,
                height,
                args.zsamples
            );
            Ok(())
        }
        Command::AblateN(args) => {
            let mesh = args.source.load()?;
            let (width, height) = parse_grid(&args.grid)?;
            let config = ExperimentConfig {
                grid: (width, height),
                zsamples: args.zsamples,
                orders: args.orders,
                noise_levels: vec![],
                sample_count: args.samples,
                seed: args.seed,
            };
            let rows = ablate_orders(&mesh, &config)?;
            write_text(&args.out, &sweep_csv("order", &rows))?;
            println!("wrote {} rows to {}", rows.len(), args.out.display());
            Ok(())
        }
        Command::NoiseSweep(args) => {
            let mesh = args.source.load()?;
            let (width, height) = parse_grid(&args.grid)?;
            let config = ExperimentConfig {
                grid: (width, height),
                zsamples: args.zsamples,
                orders: vec![args.order],
                noise_levels: args.levels,
                sample_count: args.samples,
                seed: args.seed,
            };
            let rows = noise_sweep(&mesh, &config)?;
            write_text(&args.out, &sweep_csv("noise_level", &rows))?;
            println!("wrote {} rows to {}", rows.len(), args.out.display());
            Ok(())
        }
        Command::Curves(args) => {
            let set = parse_intervals(&args.intervals)?;
            let table = curves(&set, &args.orders, args.samples)?;
            write_text(&args.out, &table.csv())?;
            println!(
                "wrote {} samples x {} orders to {}",
                args.samples,
                args.orders.len(),
                args.out.display()
            );
            Ok(())
        }
        Command::Metrics(args) => {
            let pred = normalize_if_needed(load_mesh(&args.pred)?)?;
            let gt = normalize_if_needed(load_mesh(&args.gt)?)?;
            let (width, height) = parse_grid(&args.grid)?;
            let options = MetricOptions {
                sample_count: args.samples,
                seed: args.seed,
                normal_grid: (width, height),
                p2s_vertices: args.p2s_vertices,
                z_align: true,
            };
            let report = evaluate(&pred, &gt, &options)?;
            println!("{}", MetricReport::CSV_HEADER);
            println!("{}", report.csv_row());
            if let Some(out) = &args.out {
                write_text(
                    out,
                    &format!("{}\n{}\n", MetricReport::CSV_HEADER, report.csv_row()),
                )?;
            }
            Ok(())
        }
        Command::Bench(args) => {
            let mesh = ShapeRegistry::with_builtin().generate_str(&args.shape)?;
            let (width, height) = parse_grid(&args.grid)?;
            let config = ExperimentConfig {
                grid: (width, height),
                zsamples: args.zsamples,
                orders: args.orders,
                noise_levels: vec![],
                sample_count: 1,
                seed: 0,
            };
            let rows = bench(&mesh, &config, args.reps)?;
            write_text(&args.out, &bench_csv(&rows))?;
            let decode: Vec<&fof::experiments::BenchRow> =
                rows.iter().filter(|r| r.stage == "decode").collect();
            if decode.len() >= 2 {
                let xs: Vec<f64> = decode.iter().map(|r| r.channels as f64).collect();
                let ys: Vec<f64> = decode.iter().map(|r| r.seconds).collect();
                let (slope, _, r2) = linear_fit(&xs, &ys);
                println!(
                    "decode time vs channels: {:.3} ms/channel, r^2 = {:.4}",
                    slope * 1e3,
                    r2
                );
            }
            println!("wrote {} rows to {}", rows.len(), args.out.display());
            Ok(())
        }
    }
}

fn main() {
    if let Err(error) = run() {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}
