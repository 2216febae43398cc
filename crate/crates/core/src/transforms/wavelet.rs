//! One-level undecimated Daubechies-4 wavelet transform with periodic
//! boundary, usable as an alternative sinogram-domain regularizer.
//!
//! The analysis filters are divided by sqrt(2) per dimension so that the
//! redundant four-band decomposition satisfies adjoint . forward = identity
//! exactly (the quadrature-mirror identity |H|^2 + |G|^2 = 2 becomes a
//! pointwise partition of unity after rescaling).

use ndarray::Array2;

use crate::error::{Error, Result};

/// Daubechies-4 lowpass taps (orthonormal normalization, sum = sqrt(2)).
pub const DB4_LOWPASS: [f64; 4] = [
    0.482962913144690,  // (1 + sqrt 3) / (4 sqrt 2)
    0.836516303737469,  // (3 + sqrt 3) / (4 sqrt 2)
    0.224143868041857,  // (3 - sqrt 3) / (4 sqrt 2)
    -0.129409522550921, // (1 - sqrt 3) / (4 sqrt 2)
];

/// Quadrature-mirror highpass: g[k] = (-1)^k h[3-k].
pub fn db4_highpass() -> [f64; 4] {
    let h = DB4_LOWPASS;
    [h[3], -h[2], h[1], -h[0]]
}

/// Four undecimated bands, same size as the input. The first letter names
/// the column (vertical) filter, the second the row (horizontal) filter.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBands {
    pub ll: Array2<f64>,
    pub lh: Array2<f64>,
    pub hl: Array2<f64>,
    pub hh: Array2<f64>,
}

impl WaveletBands {
    pub fn dim(&self) -> (usize, usize) {
        self.ll.dim()
    }

    pub fn norm_sq(&self) -> f64 {
        [&self.ll, &self.lh, &self.hl, &self.hh]
            .iter()
            .map(|b| b.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

/// Circular convolution along rows: out[i][n] = sum_k taps[k] x[i][(n-k) mod C].
fn conv_rows(x: &Array2<f64>, taps: &[f64]) -> Array2<f64> {
    let (rows, cols) = x.dim();
    let mut out = Array2::zeros((rows, cols));
    for i in 0..rows {
        for n in 0..cols {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let idx = (n + cols - (k % cols)) % cols;
                acc += t * x[(i, idx)];
            }
            out[(i, n)] = acc;
        }
    }
    out
}

fn conv_cols(x: &Array2<f64>, taps: &[f64]) -> Array2<f64> {
    let (rows, cols) = x.dim();
    let mut out = Array2::zeros((rows, cols));
    for j in 0..cols {
        for n in 0..rows {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let idx = (n + rows - (k % rows)) % rows;
                acc += t * x[(idx, j)];
            }
            out[(n, j)] = acc;
        }
    }
    out
}

fn scaled(taps: &[f64; 4]) -> [f64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [taps[0] * s, taps[1] * s, taps[2] * s, taps[3] * s]
}

fn reversed(taps: &[f64; 4]) -> [f64; 4] {
    [taps[3], taps[2], taps[1], taps[0]]
}

/// One undecimated analysis level.
pub fn wavelet_forward(x: &Array2<f64>) -> WaveletBands {
    let h = scaled(&DB4_LOWPASS);
    let g = scaled(&db4_highpass());
    let row_l = conv_rows(x, &h);
    let row_h = conv_rows(x, &g);
    WaveletBands {
        ll: conv_cols(&row_l, &h),
        lh: conv_cols(&row_h, &h),
        hl: conv_cols(&row_l, &g),
        hh: conv_cols(&row_h, &g),
    }
}

/// Exact adjoint of [`wavelet_forward`]: circular correlation and summation.
/// Composed with the forward transform it is the identity.
pub fn wavelet_adjoint(bands: &WaveletBands) -> Result<Array2<f64>> {
    let dim = bands.ll.dim();
    for b in [&bands.lh, &bands.hl, &bands.hh] {
        if b.dim() != dim {
            return Err(Error::shape("wavelet bands must share one shape"));
        }
    }
    let h = scaled(&DB4_LOWPASS);
    let g = scaled(&db4_highpass());
    // Correlation = convolution with the reversed filter, shifted: for taps
    // t[0..4] the adjoint of out[n] = sum_k t[k] x[n-k] is
    // x[n] = sum_k t[k] out[n+k]; implement as conv with reversed taps then
    // rotate by taps.len()-1. Equivalently convolve with reversed taps and
    // compensate the offset inside the helper below.
    let corr_rows = |x: &Array2<f64>, taps: &[f64; 4]| -> Array2<f64> {
        let r = reversed(taps);
        let y = conv_rows(x, &r);
        shift_rows(&y, taps.len() - 1)
    };
    let corr_cols = |x: &Array2<f64>, taps: &[f64; 4]| -> Array2<f64> {
        let r = reversed(taps);
        let y = conv_cols(x, &r);
        shift_cols(&y, taps.len() - 1)
    };
    let mut acc = corr_rows(&corr_cols(&bands.ll, &h), &h);
    acc += &corr_rows(&corr_cols(&bands.lh, &h), &g);
    acc += &corr_rows(&corr_cols(&bands.hl, &g), &h);
    acc += &corr_rows(&corr_cols(&bands.hh, &g), &g);
    Ok(acc)
}

/// Rotate each row left by `by` samples (circularly).
fn shift_rows(x: &Array2<f64>, by: usize) -> Array2<f64> {
    let (rows, cols) = x.dim();
    let by = by % cols;
    Array2::from_shape_fn((rows, cols), |(i, j)| x[(i, (j + by) % cols)])
}

fn shift_cols(x: &Array2<f64>, by: usize) -> Array2<f64> {
    let (rows, cols) = x.dim();
    let by = by % rows;
    Array2::from_shape_fn((rows, cols), |(i, j)| x[((i + by) % rows, j)])
}
