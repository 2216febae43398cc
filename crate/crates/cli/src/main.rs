//! `roict`: simulate truncated fan-beam acquisitions of the Shepp-Logan
//! phantom and reconstruct the ROI with scaled-gradient-projection solvers.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use roict_cli::config::ExperimentConfig;
use roict_cli::experiment::{run_experiment, write_iteration_log, SummaryRow};
use roict_cli::render;
use roict_core::geometry::{paper_geometry, FanBeamGeometry, GeometryConfig};
use roict_core::metrics::merit_report;
use roict_core::objective::{Formulation, ObjectiveSpec, Regularizer};
use roict_core::phantom::{generate_phantom, Image};
use roict_core::projector::{assemble, Sinogram};
use roict_core::roi::{build_mask, roi_pixels, truncate, RoiDisk};
use roict_core::sgp::{sgp_solve, RoiMonitor, SgpParams};
use roict_core::transforms::shearlet::ShearletSystem;
use roict_core::io;

#[derive(Parser)]
#[command(name = "roict", about = "ROI fan-beam CT reconstruction toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GeometryArgs {
    /// Built-in micro-CT geometry (182 views, 130 cells, 0.8 mm pitch).
    #[arg(long, conflicts_with = "geometry")]
    paper_geometry: bool,
    /// JSON file with keys views, cells, pitch_mm, sdd_mm, sad_mm, offset_cells.
    #[arg(long)]
    geometry: Option<PathBuf>,
}

impl GeometryArgs {
    fn build(&self) -> anyhow::Result<FanBeamGeometry> {
        if let Some(path) = &self.geometry {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            return Ok(GeometryConfig::from_json(&text)?.build()?);
        }
        if self.paper_geometry {
            return Ok(paper_geometry());
        }
        bail!("specify --paper-geometry or --geometry <file.json>");
    }
}

#[derive(Args, Clone)]
struct RoiArgs {
    /// ROI center in pixel units relative to the isocenter, as "X,Y".
    #[arg(long)]
    roi_center_px: Option<String>,
    /// ROI radius in pixel units.
    #[arg(long)]
    roi_radius_px: Option<f64>,
    /// ROI center in mm, as "X,Y".
    #[arg(long)]
    roi_center_mm: Option<String>,
    /// ROI radius in mm.
    #[arg(long)]
    roi_radius_mm: Option<f64>,
}

fn parse_pair(s: &str) -> anyhow::Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("expected \"X,Y\", got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

impl RoiArgs {
    fn build(&self, pixel_size: f64) -> anyhow::Result<RoiDisk> {
        match (&self.roi_center_mm, self.roi_radius_mm, &self.roi_center_px, self.roi_radius_px)
        {
            (Some(c), Some(r), _, _) => Ok(RoiDisk::new(parse_pair(c)?, r)?),
            (_, _, Some(c), Some(r)) => {
                Ok(RoiDisk::from_pixel_units(parse_pair(c)?, r, pixel_size)?)
            }
            _ => bail!(
                "specify the ROI as --roi-center-px X,Y --roi-radius-px R (or the mm variants)"
            ),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the modified Shepp-Logan phantom.
    Phantom {
        #[arg(long, default_value_t = 128)]
        n: usize,
        /// Raw f64 output (ROII header, row-major).
        #[arg(long)]
        out: PathBuf,
        /// Optional 8-bit PNG ([0,1] mapped to [0,255]).
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Forward-project an image through the distance-driven system matrix.
    Project {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Input image (raw f64, must be square).
        #[arg(long)]
        image: PathBuf,
        /// Output sinogram (raw f64, rows = views, cols = cells).
        #[arg(long)]
        out: PathBuf,
        /// Also dump the sparse system matrix triplets.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Build the ROI projection mask and export it as a 0/1 grid.
    Mask {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[command(flatten)]
        roi: RoiArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Reconstruct the ROI from truncated projections.
    Reconstruct {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[command(flatten)]
        roi: RoiArgs,
        /// implicit (image only) or explicit (image + full sinogram).
        #[arg(long, default_value = "implicit")]
        formulation: String,
        /// shearlet, wavelet or none.
        #[arg(long, default_value = "shearlet")]
        regularizer: String,
        #[arg(long, default_value_t = 5e-4)]
        lambda: f64,
        #[arg(long, default_value_t = 0.01)]
        rho: f64,
        /// TV smoothing parameter.
        #[arg(long, default_value_t = 1e-2)]
        delta: f64,
        /// Shearlet scales.
        #[arg(long, default_value_t = 3)]
        scales: usize,
        #[arg(long, default_value_t = 3000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-7)]
        stop_tol: f64,
        /// Nonmonotone line-search memory.
        #[arg(long, default_value_t = 10)]
        mu: usize,
        /// Upper pixel bound L (default: only f >= 0).
        #[arg(long)]
        upper: Option<f64>,
        /// Truncated sinogram to reconstruct from (raw f64). Samples outside
        /// the ROI projection are zeroed on load.
        #[arg(long, conflicts_with = "simulate")]
        sino: Option<PathBuf>,
        /// Simulate the data: project the phantom and truncate it.
        #[arg(long)]
        simulate: bool,
        /// Ground-truth image for ROI metrics (implied by --simulate).
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Reconstructed full sinogram output (explicit formulation).
        #[arg(long)]
        sino_out: Option<PathBuf>,
        /// Per-iteration CSV log.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Score a reconstruction inside the ROI.
    Metrics {
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        roi: RoiArgs,
        /// Maximum pixel value for PSNR (default: max of the truth image).
        #[arg(long)]
        mpv: Option<f64>,
    },
    /// Run a (gamma, lambda, rho) experiment grid from a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Override the configured iteration cap.
        #[arg(long)]
        max_iter: Option<usize>,
        /// Override the configured image size.
        #[arg(long)]
        n: Option<usize>,
    },
}

fn load_image(path: &PathBuf, pixel_size: f64) -> anyhow::Result<Image> {
    let arr = io::read_array(path).with_context(|| format!("reading {}", path.display()))?;
    let (rows, cols) = arr.dim();
    if rows != cols {
        bail!("{} is {rows}x{cols}, expected a square image", path.display());
    }
    Ok(Image::new(rows, pixel_size, arr)?)
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Phantom { n, out, png } => {
            let img = generate_phantom(n)?;
            io::write_array(&out, &img.values)?;
            if let Some(p) = png {
                render::render_unit_scale(&img.values, p)?;
            }
            println!("wrote {n}x{n} phantom to {}", out.display());
        }
        Command::Project { geometry, image, out, matrix, png } => {
            let g = geometry.build()?;
            let arr = io::read_array(&image)?;
            let n = arr.nrows();
            if arr.ncols() != n {
                bail!("projection input must be square");
            }
            let w = assemble(&g, n)?;
            let f = Image::new(n, w.pixel_size, arr)?;
            let sino = w.forward(&f)?;
            io::write_array(&out, &sino.values)?;
            if let Some(path) = matrix {
                io::write_system_matrix(&path, &w)?;
                println!("wrote system matrix ({} nnz) to {}", w.nnz(), path.display());
            }
            if let Some(p) = png {
                render::render_array(&sino.values, p)?;
            }
            println!(
                "projected {n}x{n} image to {}x{} sinogram at {}",
                g.num_views,
                g.num_cells,
                out.display()
            );
        }
        Command::Mask { geometry, n, roi, out, png } => {
            let g = geometry.build()?;
            let disk = roi.build(g.fov_pixel_size(n))?;
            let mask = build_mask(&g, &disk);
            let grid = mask.to_array();
            io::write_array(&out, &grid)?;
            if let Some(p) = png {
                render::render_array(&grid, p)?;
            }
            println!(
                "mask: {} of {} rays meet the ROI ({:.1}%)",
                mask.count_ones(),
                mask.len(),
                100.0 * mask.count_ones() as f64 / mask.len() as f64
            );
        }
        Command::Reconstruct {
            geometry,
            n,
            roi,
            formulation,
            regularizer,
            lambda,
            rho,
            delta,
            scales,
            max_iter,
            stop_tol,
            mu,
            upper,
            sino,
            simulate,
            truth,
            out,
            sino_out,
            log,
            png,
        } => {
            let g = geometry.build()?;
            let w = assemble(&g, n)?;
            let disk = roi.build(w.pixel_size)?;
            let mask = build_mask(&g, &disk);

            let formulation = match formulation.as_str() {
                "implicit" => Formulation::Implicit,
                "explicit" => Formulation::Explicit,
                other => bail!("unknown formulation '{other}'"),
            };
            let reg = match regularizer.as_str() {
                "shearlet" => Regularizer::Shearlet(Arc::new(ShearletSystem::new(
                    g.num_views,
                    g.num_cells,
                    scales,
                )?)),
                "wavelet" => Regularizer::Wavelet,
                "none" => Regularizer::None,
                other => bail!("unknown regularizer '{other}'"),
            };

            let truth_img = match (&truth, simulate) {
                (Some(path), _) => Some(load_image(path, w.pixel_size)?),
                (None, true) => Some(generate_phantom(n)?.with_pixel_size(w.pixel_size)),
                (None, false) => None,
            };
            let y0 = if simulate {
                let t = truth_img.as_ref().expect("simulate implies truth");
                truncate(&w.forward(t)?, &mask)?
            } else {
                let path = sino.ok_or_else(|| anyhow!("need --sino <file> or --simulate"))?;
                let arr = io::read_array(&path)?;
                if arr.dim() != (g.num_views, g.num_cells) {
                    bail!(
                        "sinogram is {:?}, expected ({}, {})",
                        arr.dim(),
                        g.num_views,
                        g.num_cells
                    );
                }
                truncate(&Sinogram::new(arr), &mask)?
            };

            let obj = ObjectiveSpec::new(formulation, &w, &mask, &y0, reg, lambda, rho, delta)?
                .with_bounds(0.0, upper)?;
            let params = SgpParams { max_iter, stop_tol, mu, ..Default::default() };
            let pixels = roi_pixels(n, w.pixel_size, &disk);
            let monitor = truth_img
                .as_ref()
                .map(|t| RoiMonitor { truth: t, pixels: &pixels });

            let started = Instant::now();
            let result = sgp_solve(&obj, &params, &Image::zeros(n, w.pixel_size), None, monitor.as_ref())?;
            let seconds = started.elapsed().as_secs_f64();

            io::write_array(&out, &result.f_hat.values)?;
            if let Some(p) = png {
                let center_px = (
                    n as f64 / 2.0 - disk.center.1 / w.pixel_size - 0.5,
                    n as f64 / 2.0 + disk.center.0 / w.pixel_size - 0.5,
                );
                render::render_with_roi_circle(
                    &result.f_hat.values,
                    center_px,
                    disk.radius / w.pixel_size,
                    p,
                )?;
            }
            if let Some(path) = sino_out {
                match &result.y_hat {
                    Some(yh) => io::write_array(&path, &yh.values)?,
                    None => bail!("--sino-out requires the explicit formulation"),
                }
            }
            if let Some(path) = log {
                write_iteration_log(path, &result)?;
            }
            print!(
                "reconstructed in {} iterations ({:?}, {seconds:.1}s)",
                result.iterations, result.reason
            );
            if let Some(t) = &truth_img {
                let report = merit_report(&result.f_hat, t, &pixels, 1.0)?;
                print!(", ROI PSNR {:.2} dB, rel err {:.4}", report.psnr_db, report.rel_err);
            }
            println!();
        }
        Command::Metrics { recon, truth, geometry, roi, mpv } => {
            let g = geometry.build()?;
            let truth_arr = io::read_array(&truth)?;
            let n = truth_arr.nrows();
            let pixel_size = g.fov_pixel_size(n);
            let truth_img = Image::new(n, pixel_size, truth_arr)?;
            let recon_img = load_image(&recon, pixel_size)?;
            let disk = roi.build(pixel_size)?;
            let pixels = roi_pixels(n, pixel_size, &disk);
            let mpv = mpv.unwrap_or_else(|| {
                truth_img.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            });
            let report = merit_report(&recon_img, &truth_img, &pixels, mpv)?;
            println!("psnr_db,rel_err,roi_pixels,mpv");
            println!(
                "{:.4},{:.6},{},{}",
                report.psnr_db, report.rel_err, report.roi_pixel_count, report.mpv
            );
        }
        Command::Sweep { config, out_dir, max_iter, n } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if let Some(dir) = out_dir {
                cfg.out_dir = dir.to_string_lossy().into_owned();
            }
            if let Some(m) = max_iter {
                cfg.sgp.max_iter = Some(m);
            }
            if let Some(size) = n {
                cfg.n = size;
            }
            let rows = run_experiment(&cfg)?;
            println!("{}", SummaryRow::csv_header());
            for row in &rows {
                println!("{}", row.to_csv());
            }
        }
    }
    Ok(())
}
