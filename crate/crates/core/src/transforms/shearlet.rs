//! Band-limited cone-adapted shearlet tight frame on 2D arrays.
//!
//! The system lives on a zero-padded dyadic grid. Every filter is a real,
//! nonnegative window in the frequency plane built from Meyer-type radial
//! bands and smooth shear bumps:
//!
//! * a low-pass window covering frequencies below the coarsest band,
//! * for each scale `j = 0 .. num_scales` (coarse to fine) and each cone
//!   (horizontal: |w1| >= |w2|, vertical: |w2| > |w1|), shear windows
//!   `v(S_j * w2/w1 - k)` with `k = -S_j ..= S_j` and `S_j = 2^ceil(j/2)`,
//!   i.e. `2 * 2^ceil(j/2) + 1` directions per cone and scale:
//!
//! | scale j | shears per cone | bands (both cones) |
//! |---------|-----------------|--------------------|
//! | 0       | 3               | 6                  |
//! | 1       | 5               | 10                 |
//! | 2       | 5               | 10                 |
//! | 3       | 9               | 18                 |
//!
//! The raw windows already sum (in squares) to 1 wherever the cones do not
//! overlap; a final pointwise renormalization divides every window by the
//! total energy so that sum of |window|^2 = 1 holds exactly on the discrete
//! grid. With zero padding this makes adjoint . forward the identity on the
//! embedded input space and the analysis an isometry.

use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Which frequency region a band covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// The low-pass window around the origin.
    Low,
    /// |w1| >= |w2| (w1 is the row-frequency axis).
    Horizontal,
    /// |w2| > |w1|.
    Vertical,
}

/// Label of one band of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandInfo {
    pub cone: Cone,
    /// Scale index, 0 = coarsest band-pass scale.
    pub scale: usize,
    /// Shear index in -S_j ..= S_j.
    pub shear: i64,
}

/// Shearlet coefficients: one padded-size real array per band, in the order
/// of [`ShearletSystem::band_info`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSet {
    pub bands: Vec<Array2<f64>>,
}

impl CoeffSet {
    pub fn norm_sq(&self) -> f64 {
        self.bands.iter().map(|b| b.iter().map(|v| v * v).sum::<f64>()).sum()
    }
}

/// Frequency-domain tight-frame filter bank on `rows x cols` inputs.
pub struct ShearletSystem {
    pub rows: usize,
    pub cols: usize,
    pub padded_rows: usize,
    pub padded_cols: usize,
    pub num_scales: usize,
    windows: Vec<Array2<f64>>,
    info: Vec<BandInfo>,
    fft_row_fwd: Arc<dyn Fft<f64>>,
    fft_row_inv: Arc<dyn Fft<f64>>,
    fft_col_fwd: Arc<dyn Fft<f64>>,
    fft_col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ShearletSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShearletSystem")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("padded", &(self.padded_rows, self.padded_cols))
            .field("num_scales", &self.num_scales)
            .field("num_bands", &self.windows.len())
            .finish()
    }
}

/// Meyer auxiliary polynomial: smooth ramp with v(x) + v(1-x) = 1.
fn meyer_nu(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
    }
}

/// Shear bump: supported on [-1, 1], v(0) = 1, v(a)^2 + v(1-a)^2 = 1 on [0,1].
fn shear_bump(a: f64) -> f64 {
    let a = a.abs();
    if a >= 1.0 {
        0.0
    } else {
        (std::f64::consts::FRAC_PI_2 * meyer_nu(a)).cos()
    }
}

/// Low-pass radial profile: 1 below `l`, Meyer roll-off on [l, 2l].
fn lowpass_profile(t: f64, l: f64) -> f64 {
    if t <= l {
        1.0
    } else if t < 2.0 * l {
        (std::f64::consts::FRAC_PI_2 * meyer_nu(t / l - 1.0)).cos()
    } else {
        0.0
    }
}

/// Band-pass radial profile for scale `j`; the finest scale keeps its plateau
/// up to the Nyquist corner so the squared profiles telescope to 1.
fn band_profile(t: f64, l: f64, j: usize, num_scales: usize) -> f64 {
    let x = t / (l * (1u64 << j) as f64);
    if x <= 1.0 {
        0.0
    } else if x < 2.0 {
        (std::f64::consts::FRAC_PI_2 * meyer_nu(x - 1.0)).sin()
    } else if j + 1 == num_scales {
        1.0
    } else if x < 4.0 {
        (std::f64::consts::FRAC_PI_2 * meyer_nu(x / 2.0 - 1.0)).cos()
    } else {
        0.0
    }
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Max shear index per scale: S_j = 2^ceil(j/2).
fn max_shear(j: usize) -> i64 {
    1i64 << j.div_ceil(2)
}

impl ShearletSystem {
    /// Build the system for `rows x cols` inputs with `num_scales` band-pass
    /// scales (see module docs for the shear counts).
    pub fn new(rows: usize, cols: usize, num_scales: usize) -> Result<Self> {
        if rows < 8 || cols < 8 {
            return Err(Error::invalid(format!(
                "shearlet system needs rows, cols >= 8 (got {rows} x {cols})"
            )));
        }
        if num_scales < 1 {
            return Err(Error::invalid("need at least one shearlet scale"));
        }
        let padded_rows = next_pow2(rows);
        let padded_cols = next_pow2(cols);
        let min_pad = padded_rows.min(padded_cols);
        if min_pad < 1usize << (num_scales + 3) {
            return Err(Error::invalid(format!(
                "padded grid {padded_rows}x{padded_cols} too small for {num_scales} scales \
                 (need min dimension >= {})",
                1usize << (num_scales + 3)
            )));
        }

        // Normalized frequencies per axis: index a -> f in [-1, 1), Nyquist
        // at -1, in unshifted FFT layout.
        let freq = |len: usize| -> Vec<f64> {
            (0..len)
                .map(|a| {
                    let signed = if a <= len / 2 { a as f64 } else { a as f64 - len as f64 };
                    signed / (len as f64 / 2.0)
                })
                .collect()
        };
        let u1 = freq(padded_rows);
        let u2 = freq(padded_cols);

        // Coarsest band starts at l of Nyquist.
        let l = 0.5f64.powi(num_scales as i32 + 1);

        let mut info = vec![BandInfo { cone: Cone::Low, scale: 0, shear: 0 }];
        for j in 0..num_scales {
            let s_max = max_shear(j);
            for cone in [Cone::Horizontal, Cone::Vertical] {
                for k in -s_max..=s_max {
                    info.push(BandInfo { cone, scale: j, shear: k });
                }
            }
        }

        let mut windows: Vec<Array2<f64>> = info
            .iter()
            .map(|b| {
                let mut w = Array2::zeros((padded_rows, padded_cols));
                for (r, &f1) in u1.iter().enumerate() {
                    for (c, &f2) in u2.iter().enumerate() {
                        w[(r, c)] = match b.cone {
                            Cone::Low => lowpass_profile(f1.abs().max(f2.abs()), l),
                            Cone::Horizontal => {
                                if f1 == 0.0 {
                                    0.0
                                } else {
                                    let radial =
                                        band_profile(f1.abs(), l, b.scale, num_scales);
                                    if radial == 0.0 {
                                        0.0
                                    } else {
                                        let s = f2 / f1;
                                        radial
                                            * shear_bump(
                                                max_shear(b.scale) as f64 * s - b.shear as f64,
                                            )
                                    }
                                }
                            }
                            Cone::Vertical => {
                                if f2 == 0.0 {
                                    0.0
                                } else {
                                    let radial =
                                        band_profile(f2.abs(), l, b.scale, num_scales);
                                    if radial == 0.0 {
                                        0.0
                                    } else {
                                        let s = f1 / f2;
                                        radial
                                            * shear_bump(
                                                max_shear(b.scale) as f64 * s - b.shear as f64,
                                            )
                                    }
                                }
                            }
                        };
                    }
                }
                w
            })
            .collect();

        // Shear windows are odd in the shear variable, which breaks the
        // w -> -w symmetry on the self-conjugate Nyquist row/column of the
        // grid; symmetrize each window as the RMS of every conjugate pair
        // (energy preserving, bit-exact no-op elsewhere) so that filtering a
        // real array stays real.
        for w in windows.iter_mut() {
            for r in 0..padded_rows {
                for c in 0..padded_cols {
                    let r2 = (padded_rows - r) % padded_rows;
                    let c2 = (padded_cols - c) % padded_cols;
                    if (r2, c2) > (r, c) {
                        let m = (0.5 * (w[(r, c)] * w[(r, c)] + w[(r2, c2)] * w[(r2, c2)]))
                            .sqrt();
                        w[(r, c)] = m;
                        w[(r2, c2)] = m;
                    }
                }
            }
        }

        // Pointwise renormalization: divide by the square root of the total
        // energy so the tight-frame identity holds exactly on the grid.
        for r in 0..padded_rows {
            for c in 0..padded_cols {
                let energy: f64 = windows.iter().map(|w| w[(r, c)] * w[(r, c)]).sum();
                debug_assert!(
                    energy > 0.25,
                    "window coverage hole at frequency index ({r}, {c}): {energy}"
                );
                let scale = energy.sqrt().recip();
                for w in windows.iter_mut() {
                    w[(r, c)] *= scale;
                }
            }
        }

        let mut planner = FftPlanner::new();
        Ok(ShearletSystem {
            rows,
            cols,
            padded_rows,
            padded_cols,
            num_scales,
            windows,
            info,
            fft_row_fwd: planner.plan_fft_forward(padded_cols),
            fft_row_inv: planner.plan_fft_inverse(padded_cols),
            fft_col_fwd: planner.plan_fft_forward(padded_rows),
            fft_col_inv: planner.plan_fft_inverse(padded_rows),
        })
    }

    pub fn num_bands(&self) -> usize {
        self.windows.len()
    }

    pub fn band_info(&self) -> &[BandInfo] {
        &self.info
    }

    /// Pointwise sum over all bands of |window|^2 (identically 1 by
    /// construction; exposed for verification).
    pub fn window_energy(&self) -> Array2<f64> {
        let mut e = Array2::zeros((self.padded_rows, self.padded_cols));
        for w in &self.windows {
            for (acc, &v) in e.iter_mut().zip(w.iter()) {
                *acc += v * v;
            }
        }
        e
    }

    fn fft2(&self, data: &mut Array2<Complex<f64>>, inverse: bool) {
        let (rows, cols) = data.dim();
        let (row_plan, col_plan) = if inverse {
            (&self.fft_row_inv, &self.fft_col_inv)
        } else {
            (&self.fft_row_fwd, &self.fft_col_fwd)
        };
        let slice = data.as_slice_mut().expect("standard layout");
        let mut scratch = vec![Complex::default(); row_plan.get_inplace_scratch_len()];
        for row in slice.chunks_exact_mut(cols) {
            row_plan.process_with_scratch(row, &mut scratch);
        }
        let mut col_buf = vec![Complex::default(); rows];
        scratch.resize(col_plan.get_inplace_scratch_len(), Complex::default());
        let slice = data.as_slice_mut().expect("standard layout");
        for c in 0..cols {
            for r in 0..rows {
                col_buf[r] = slice[r * cols + c];
            }
            col_plan.process_with_scratch(&mut col_buf, &mut scratch);
            for r in 0..rows {
                slice[r * cols + c] = col_buf[r];
            }
        }
    }

    /// Analysis: zero-pad, FFT, multiply by each window, inverse FFT.
    pub fn forward(&self, x: &Array2<f64>) -> Result<CoeffSet> {
        if x.dim() != (self.rows, self.cols) {
            return Err(Error::shape(format!(
                "shearlet forward: input {:?}, expected ({}, {})",
                x.dim(),
                self.rows,
                self.cols
            )));
        }
        let mut spectrum = Array2::zeros((self.padded_rows, self.padded_cols));
        for i in 0..self.rows {
            for j in 0..self.cols {
                spectrum[(i, j)] = Complex::new(x[(i, j)], 0.0);
            }
        }
        self.fft2(&mut spectrum, false);
        let norm = 1.0 / (self.padded_rows * self.padded_cols) as f64;
        let bands: Vec<Array2<f64>> = self
            .windows
            .par_iter()
            .map(|w| {
                let mut band = Array2::zeros((self.padded_rows, self.padded_cols));
                for ((b, &s), &wv) in band.iter_mut().zip(spectrum.iter()).zip(w.iter()) {
                    *b = s * wv;
                }
                self.fft2(&mut band, true);
                band.mapv(|z| z.re * norm)
            })
            .collect();
        Ok(CoeffSet { bands })
    }

    /// Synthesis (exact adjoint): FFT each band, multiply by its window,
    /// accumulate, inverse FFT, crop. Composed with [`Self::forward`] this is
    /// the identity on the input space.
    pub fn adjoint(&self, coeffs: &CoeffSet) -> Result<Array2<f64>> {
        if coeffs.bands.len() != self.windows.len() {
            return Err(Error::shape(format!(
                "shearlet adjoint: {} bands, expected {}",
                coeffs.bands.len(),
                self.windows.len()
            )));
        }
        for b in &coeffs.bands {
            if b.dim() != (self.padded_rows, self.padded_cols) {
                return Err(Error::shape(format!(
                    "shearlet adjoint: band {:?}, expected ({}, {})",
                    b.dim(),
                    self.padded_rows,
                    self.padded_cols
                )));
            }
        }
        let partials: Vec<Array2<Complex<f64>>> = coeffs
            .bands
            .par_iter()
            .zip(self.windows.par_iter())
            .map(|(band, w)| {
                let mut spec = band.mapv(|v| Complex::new(v, 0.0));
                self.fft2(&mut spec, false);
                for (s, &wv) in spec.iter_mut().zip(w.iter()) {
                    *s *= wv;
                }
                spec
            })
            .collect();
        let mut acc: Array2<Complex<f64>> =
            Array2::zeros((self.padded_rows, self.padded_cols));
        for p in partials {
            acc += &p;
        }
        self.fft2(&mut acc, true);
        let norm = 1.0 / (self.padded_rows * self.padded_cols) as f64;
        let mut out = Array2::zeros((self.rows, self.cols));
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = acc[(i, j)].re * norm;
            }
        }
        Ok(out)
    }
}

/// Spec-level constructor name.
pub fn build_shearlet_system(rows: usize, cols: usize, num_scales: usize) -> Result<ShearletSystem> {
    ShearletSystem::new(rows, cols, num_scales)
}
