//! Regularization operators: shearlet and wavelet tight frames on sinogram
//! arrays, and the smoothed total-variation functional on images.

pub mod shearlet;
pub mod tv;
pub mod wavelet;
