//! Figures of merit restricted to the ROI pixel set.

use crate::error::{Error, Result};
use crate::phantom::Image;

/// ROI-restricted quality report for one reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritReport {
    /// PSNR in dB; `f64::INFINITY` when the reconstruction is exact.
    pub psnr_db: f64,
    pub rel_err: f64,
    pub roi_pixel_count: usize,
    /// Maximum pixel value used as the PSNR reference.
    pub mpv: f64,
}

fn check_pixels(recon: &Image, truth: &Image, roi_pixels: &[(usize, usize)]) -> Result<()> {
    if recon.n != truth.n {
        return Err(Error::shape(format!(
            "recon is {}x{}, truth is {}x{}",
            recon.n, recon.n, truth.n, truth.n
        )));
    }
    if roi_pixels.is_empty() {
        return Err(Error::invalid("ROI pixel set is empty"));
    }
    if let Some(&(i, j)) = roi_pixels.iter().find(|&&(i, j)| i >= recon.n || j >= recon.n) {
        return Err(Error::invalid(format!("ROI pixel ({i}, {j}) outside the image")));
    }
    Ok(())
}

/// PSNR = 10 log10(mpv^2 / mse), with the mean squared error taken over the
/// ROI pixels only. An exact reconstruction reports +infinity.
pub fn psnr_roi(
    recon: &Image,
    truth: &Image,
    roi_pixels: &[(usize, usize)],
    mpv: f64,
) -> Result<f64> {
    check_pixels(recon, truth, roi_pixels)?;
    if !(mpv > 0.0) {
        return Err(Error::invalid("mpv must be positive"));
    }
    let mse = roi_pixels
        .iter()
        .map(|&(i, j)| {
            let d = recon.values[(i, j)] - truth.values[(i, j)];
            d * d
        })
        .sum::<f64>()
        / roi_pixels.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (mpv * mpv / mse).log10())
}

/// ||recon - truth||_2 / ||truth||_2 over the ROI pixels.
pub fn rel_err_roi(recon: &Image, truth: &Image, roi_pixels: &[(usize, usize)]) -> Result<f64> {
    check_pixels(recon, truth, roi_pixels)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(i, j) in roi_pixels {
        let t = truth.values[(i, j)];
        let d = recon.values[(i, j)] - t;
        num += d * d;
        den += t * t;
    }
    if den == 0.0 {
        return Err(Error::invalid("truth is zero on the ROI"));
    }
    Ok((num / den).sqrt())
}

/// Both figures of merit in one report.
pub fn merit_report(
    recon: &Image,
    truth: &Image,
    roi_pixels: &[(usize, usize)],
    mpv: f64,
) -> Result<MeritReport> {
    Ok(MeritReport {
        psnr_db: psnr_roi(recon, truth, roi_pixels, mpv)?,
        rel_err: rel_err_roi(recon, truth, roi_pixels)?,
        roi_pixel_count: roi_pixels.len(),
        mpv,
    })
}
