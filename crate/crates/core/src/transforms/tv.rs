//! Smoothed total variation on images.
//!
//! TV_d(f) = sum_{i,j} sqrt((Dx f)^2 + (Dy f)^2 + d^2) with forward
//! differences and replicate boundary (zero difference past the last row or
//! column). The gradient is the exact analytic negative divergence of the
//! normalized difference field.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::phantom::Image;

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("TV smoothing delta = {delta} must be > 0")));
    }
    Ok(())
}

/// Forward differences of `values`; entries past the last row/column are zero.
fn diffs(values: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (rows, cols) = values.dim();
    let mut dx = Array2::zeros((rows, cols));
    let mut dy = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            if j + 1 < cols {
                dx[(i, j)] = values[(i, j + 1)] - values[(i, j)];
            }
            if i + 1 < rows {
                dy[(i, j)] = values[(i + 1, j)] - values[(i, j)];
            }
        }
    }
    (dx, dy)
}

pub fn tv_value(f: &Image, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(tv_value_raw(&f.values, delta))
}

pub(crate) fn tv_value_raw(values: &Array2<f64>, delta: f64) -> f64 {
    let (dx, dy) = diffs(values);
    let mut acc = 0.0;
    for (gx, gy) in dx.iter().zip(dy.iter()) {
        acc += (gx * gx + gy * gy + delta * delta).sqrt();
    }
    acc
}

pub fn tv_grad(f: &Image, delta: f64) -> Result<Image> {
    check_delta(delta)?;
    let grad = tv_grad_raw(&f.values, delta);
    Image::new(f.n, f.pixel_size, grad)
}

pub(crate) fn tv_grad_raw(values: &Array2<f64>, delta: f64) -> Array2<f64> {
    let (rows, cols) = values.dim();
    let (dx, dy) = diffs(values);
    let mut norm = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            let gx = dx[(i, j)];
            let gy = dy[(i, j)];
            norm[(i, j)] = (gx * gx + gy * gy + delta * delta).sqrt();
        }
    }
    let mut grad = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            let mut g = 0.0;
            // f[(i,j)] enters dx[(i,j)] and dy[(i,j)] with weight -1 and the
            // differences of the left/upper neighbors with weight +1.
            g -= (dx[(i, j)] + dy[(i, j)]) / norm[(i, j)];
            if j > 0 {
                g += dx[(i, j - 1)] / norm[(i, j - 1)];
            }
            if i > 0 {
                g += dy[(i - 1, j)] / norm[(i - 1, j)];
            }
            grad[(i, j)] = g;
        }
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::prelude::*;

    #[test]
    fn rejects_nonpositive_delta() {
        let f = Image::zeros(4, 1.0);
        assert!(tv_value(&f, 0.0).is_err());
        assert!(tv_grad(&f, -1.0).is_err());
    }

    #[test]
    fn constant_image() {
        let n = 12;
        let mut f = Image::zeros(n, 1.0);
        f.values.fill(0.37);
        let delta = 0.05;
        let v = tv_value(&f, delta).unwrap();
        assert!((v - (n * n) as f64 * delta).abs() < 1e-12);
        let g = tv_grad(&f, delta).unwrap();
        assert!(g.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_by_two_hand_example() {
        // [[0,1],[0,1]] with delta = 1: terms sqrt(2), 1, sqrt(2), 1.
        let values = array![[0.0, 1.0], [0.0, 1.0]];
        let f = Image::new(2, 1.0, values).unwrap();
        let v = tv_value(&f, 1.0).unwrap();
        assert!((v - (2.0 * 2.0_f64.sqrt() + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let n = 16;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut f = Image::zeros(n, 1.0);
        f.values.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        let delta = 0.1;
        let g = tv_grad(&f, delta).unwrap();
        let h = 1e-6;
        for _ in 0..40 {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let mut plus = f.clone();
            plus.values[(i, j)] += h;
            let mut minus = f.clone();
            minus.values[(i, j)] -= h;
            let fd =
                (tv_value(&plus, delta).unwrap() - tv_value(&minus, delta).unwrap()) / (2.0 * h);
            let a = g.values[(i, j)];
            assert!(
                (fd - a).abs() <= 1e-6 * (1.0 + a.abs()),
                "({i},{j}): fd {fd} vs analytic {a}"
            );
        }
    }

    #[test]
    fn midpoint_convexity() {
        let n = 10;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let delta = 0.02;
        for _ in 0..20 {
            let mut a = Image::zeros(n, 1.0);
            a.values.mapv_inplace(|_| rng.gen_range(-2.0..2.0));
            let mut b = Image::zeros(n, 1.0);
            b.values.mapv_inplace(|_| rng.gen_range(-2.0..2.0));
            let mut mid = Image::zeros(n, 1.0);
            mid.values = (&a.values + &b.values) * 0.5;
            let lhs = tv_value(&mid, delta).unwrap();
            let rhs = 0.5 * (tv_value(&a, delta).unwrap() + tv_value(&b, delta).unwrap());
            assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        }
    }
}
