//! 8-bit grayscale PNG rendering with optional ROI overlays.

use std::path::Path;

use image::{GrayImage, Luma};
use ndarray::Array2;

use roict_core::error::{Error, Result};
use roict_core::roi::ProjectionMask;

const DASH_ON: usize = 5;
const DASH_PERIOD: usize = 10;

fn to_gray(v: f64, lo: f64, hi: f64) -> u8 {
    if hi <= lo {
        return 128;
    }
    (((v - lo) / (hi - lo)) * 255.0).round().clamp(0.0, 255.0) as u8
}

fn base_image(arr: &Array2<f64>, lo: f64, hi: f64) -> Result<GrayImage> {
    if arr.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("cannot render non-finite values".into()));
    }
    let (rows, cols) = arr.dim();
    let mut img = GrayImage::new(cols as u32, rows as u32);
    for i in 0..rows {
        for j in 0..cols {
            img.put_pixel(j as u32, i as u32, Luma([to_gray(arr[(i, j)], lo, hi)]));
        }
    }
    Ok(img)
}

/// Min-max windowed rendering.
pub fn render_array(arr: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let lo = arr.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = arr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let img = base_image(arr, lo, hi)?;
    img.save(path).map_err(|e| Error::Format(format!("png save: {e}")))?;
    Ok(())
}

/// Fixed [0, 1] -> [0, 255] linear mapping (phantom export).
pub fn render_unit_scale(arr: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let img = base_image(arr, 0.0, 1.0)?;
    img.save(path).map_err(|e| Error::Format(format!("png save: {e}")))?;
    Ok(())
}

/// Pixels of a dashed circle with the given center and radius, both in
/// (row, col) pixel coordinates. Dashes alternate along the arc.
pub fn dashed_circle_pixels(
    rows: usize,
    cols: usize,
    center: (f64, f64),
    radius: f64,
) -> Vec<(usize, usize)> {
    let steps = ((2.0 * std::f64::consts::PI * radius).ceil() as usize * 2).max(16);
    let mut px = Vec::new();
    for t in 0..steps {
        // Dash pattern over arc length: DASH_ON samples on, the rest of each
        // DASH_PERIOD window off. Two samples per pixel keep the arc closed.
        let on = ((t / 2) / DASH_ON) % (DASH_PERIOD / DASH_ON) == 0;
        if !on {
            continue;
        }
        let a = 2.0 * std::f64::consts::PI * t as f64 / steps as f64;
        let r = (center.0 + radius * a.sin()).round();
        let c = (center.1 + radius * a.cos()).round();
        if r >= 0.0 && c >= 0.0 && (r as usize) < rows && (c as usize) < cols {
            px.push((r as usize, c as usize));
        }
    }
    px.sort_unstable();
    px.dedup();
    px
}

/// Image-domain rendering with a dashed white ROI circle.
pub fn render_with_roi_circle(
    arr: &Array2<f64>,
    center_px: (f64, f64),
    radius_px: f64,
    path: impl AsRef<Path>,
) -> Result<()> {
    let lo = arr.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = arr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut img = base_image(arr, lo, hi)?;
    let (rows, cols) = arr.dim();
    for (r, c) in dashed_circle_pixels(rows, cols, center_px, radius_px) {
        img.put_pixel(c as u32, r as u32, Luma([255u8]));
    }
    img.save(path).map_err(|e| Error::Format(format!("png save: {e}")))?;
    Ok(())
}

/// The two mask boundary curves in the projection domain: for each view, the
/// first and last cell inside the ROI projection (exactly the transitions of
/// the mask row).
pub fn mask_boundary_pixels(mask: &ProjectionMask) -> Vec<(usize, usize)> {
    let mut px = Vec::new();
    for k in 0..mask.num_views {
        if let Some((lo, hi)) = mask.row_extent(k) {
            px.push((k, lo));
            px.push((k, hi));
        }
    }
    px
}

/// Sinogram rendering with the ROI projection boundary drawn as two dashed
/// white curves.
pub fn render_sinogram_with_mask(
    arr: &Array2<f64>,
    mask: &ProjectionMask,
    path: impl AsRef<Path>,
) -> Result<()> {
    if arr.dim() != (mask.num_views, mask.num_cells) {
        return Err(Error::ShapeMismatch(format!(
            "sinogram {:?} vs mask {}x{}",
            arr.dim(),
            mask.num_views,
            mask.num_cells
        )));
    }
    let lo = arr.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = arr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut img = base_image(arr, lo, hi)?;
    for (k, p) in mask_boundary_pixels(mask) {
        if (k / DASH_ON) % (DASH_PERIOD / DASH_ON) == 0 {
            img.put_pixel(p as u32, k as u32, Luma([255u8]));
        }
    }
    img.save(path).map_err(|e| Error::Format(format!("png save: {e}")))?;
    Ok(())
}
