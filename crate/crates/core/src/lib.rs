//! Region-of-interest (ROI) reconstruction for 2D fan-beam computed tomography.
//!
//! The library simulates truncated fan-beam acquisitions of a digital phantom
//! and reconstructs the image inside a disk-shaped ROI by minimizing convex
//! least-squares objectives with projection-domain regularization:
//!
//! * [`phantom`] — modified Shepp-Logan phantom rasterizer,
//! * [`geometry`] — fan-beam acquisition geometry and ray enumeration,
//! * [`projector`] — distance-driven system matrix `W` and its adjoint,
//! * [`roi`] — ROI disk, projection-domain mask `M`, sinogram truncation,
//! * [`transforms`] — tight-frame shearlet / undecimated wavelet transforms
//!   on sinograms and the smoothed total-variation functional on images,
//! * [`objective`] — implicit (image-only) and explicit (image + full
//!   sinogram) objective functions with exact gradients,
//! * [`sgp`] — scaled gradient projection solver with Barzilai-Borwein
//!   steplengths and nonmonotone backtracking,
//! * [`metrics`] — ROI-restricted PSNR and relative error,
//! * [`io`] — raw array and sparse-matrix file formats shared with the CLI.

pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod objective;
pub mod phantom;
pub mod projector;
pub mod roi;
pub mod sgp;
pub mod transforms;

pub use error::{Error, Result};
pub use geometry::{paper_geometry, FanBeamGeometry, Ray};
pub use metrics::MeritReport;
pub use objective::{Formulation, ObjectiveSpec, Regularizer};
pub use phantom::{generate_phantom, Image};
pub use projector::{Sinogram, SystemMatrix};
pub use roi::{ProjectionMask, RoiDisk};
pub use sgp::{SgpParams, SolveResult};
pub use transforms::shearlet::ShearletSystem;
