//! Distance-driven system matrix for 2D fan-beam projection.
//!
//! For each view the pixel boundaries of one image row (or column) and the
//! detector cell boundaries are mapped through the source onto a common
//! coordinate axis. The overlap of mapped intervals, normalized by the mapped
//! detector cell width, gives the resampling weight of the kernel operation;
//! an additional per-cell path length factor (slab thickness divided by the
//! |cosine| of the ray against the slab normal) converts the dimensionless
//! overlap ratio into a line-integral weight in mm.
//!
//! The common axis is the x-axis when |sin t| >= |cos t| (rays mostly
//! vertical, image rows processed) and the y-axis otherwise (columns
//! processed), which keeps the central projection well conditioned at every
//! view angle.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::FanBeamGeometry;
use crate::phantom::Image;

/// K x P array of line-integral values (attenuation times mm).
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub values: Array2<f64>,
}

impl Sinogram {
    pub fn new(values: Array2<f64>) -> Self {
        Sinogram { values }
    }

    pub fn zeros(num_views: usize, num_cells: usize) -> Self {
        Sinogram { values: Array2::zeros((num_views, num_cells)) }
    }

    pub fn num_views(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_cells(&self) -> usize {
        self.values.ncols()
    }

    /// Flatten with sinogram index `k * P + p` (view-major).
    pub fn to_vec(&self) -> Vec<f64> {
        self.values.iter().cloned().collect()
    }

    pub fn from_vec(num_views: usize, num_cells: usize, v: Vec<f64>) -> Result<Self> {
        let values = Array2::from_shape_vec((num_views, num_cells), v)
            .map_err(|e| Error::shape(format!("sinogram from vec: {e}")))?;
        Ok(Sinogram { values })
    }
}

/// Sparse KP x N^2 forward operator in compressed sparse row form.
///
/// Row index is `k * P + p`; column index is column-stacked `j * N + i` for
/// pixel (row i, column j). All stored weights are strictly positive.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    pub num_views: usize,
    pub num_cells: usize,
    pub n: usize,
    /// Physical pixel size (mm) of the image grid the matrix was built for.
    pub pixel_size: f64,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl SystemMatrix {
    pub fn rows(&self) -> usize {
        self.num_views * self.num_cells
    }

    pub fn cols(&self) -> usize {
        self.n * self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate stored entries as (row, col, weight).
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.col_idx[k] as usize, self.values[k]))
        })
    }

    /// y = W x for a column-stacked image vector.
    pub fn forward_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols() {
            return Err(Error::shape(format!(
                "forward: image vector length {} != {}",
                x.len(),
                self.cols()
            )));
        }
        let mut y = vec![0.0; self.rows()];
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            *out = acc;
        }
        Ok(y)
    }

    /// x = W^T y for a view-major sinogram vector.
    pub fn adjoint_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows() {
            return Err(Error::shape(format!(
                "adjoint: sinogram vector length {} != {}",
                y.len(),
                self.rows()
            )));
        }
        let mut x = vec![0.0; self.cols()];
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                x[self.col_idx[k] as usize] += self.values[k] * yr;
            }
        }
        Ok(x)
    }

    /// Forward projection of an image.
    pub fn forward(&self, f: &Image) -> Result<Sinogram> {
        if f.n != self.n {
            return Err(Error::shape(format!(
                "forward: image is {}x{}, matrix was assembled for n={}",
                f.n, f.n, self.n
            )));
        }
        let y = self.forward_vec(&f.to_col_major_vec())?;
        Sinogram::from_vec(self.num_views, self.num_cells, y)
    }

    /// Backprojection (exact transpose of [`SystemMatrix::forward`]).
    pub fn adjoint(&self, y: &Sinogram) -> Result<Image> {
        if y.num_views() != self.num_views || y.num_cells() != self.num_cells {
            return Err(Error::shape(format!(
                "adjoint: sinogram is {}x{}, expected {}x{}",
                y.num_views(),
                y.num_cells(),
                self.num_views,
                self.num_cells
            )));
        }
        let x = self.adjoint_vec(&y.to_vec())?;
        Image::from_col_major_vec(self.n, self.pixel_size, &x)
    }
}

fn check_strictly_increasing(name: &str, v: &[f64]) -> Result<()> {
    if v.len() < 2 {
        return Err(Error::invalid(format!("{name}: need at least two boundaries")));
    }
    for w in v.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid(format!(
                "{name}: boundaries must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Raw overlap lengths between two strictly increasing boundary partitions.
///
/// Returns (source interval m, dest interval n, overlap) with overlap > 0.
/// The intervals emitted for one call are pairwise disjoint and their union
/// is the intersection of the two covered ranges.
pub(crate) fn overlap_triplets(xi: &[f64], ups: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    let (mut m, mut n) = (0usize, 0usize);
    while m + 1 < xi.len() && n + 1 < ups.len() {
        let lo = xi[m].max(ups[n]);
        let hi = xi[m + 1].min(ups[n + 1]);
        if hi > lo {
            out.push((m, n, hi - lo));
        }
        if xi[m + 1] <= ups[n + 1] {
            m += 1;
        } else {
            n += 1;
        }
    }
    out
}

/// The distance-driven kernel operation: resample source sample values `c`
/// with boundaries `xi` onto destination intervals with boundaries `ups`,
/// weighting by overlap length normalized by destination interval width.
pub fn dd_kernel(xi: &[f64], c: &[f64], ups: &[f64]) -> Result<Vec<f64>> {
    check_strictly_increasing("source bounds", xi)?;
    check_strictly_increasing("dest bounds", ups)?;
    if c.len() + 1 != xi.len() {
        return Err(Error::shape(format!(
            "dd_kernel: {} values for {} boundaries",
            c.len(),
            xi.len()
        )));
    }
    let mut b = vec![0.0; ups.len() - 1];
    for (m, n, overlap) in overlap_triplets(xi, ups) {
        b[n] += overlap / (ups[n + 1] - ups[n]) * c[m];
    }
    Ok(b)
}

/// Project point `q` through `source` onto the x-axis (y = 0).
fn intercept_x(source: (f64, f64), q: (f64, f64)) -> f64 {
    let t = source.1 / (source.1 - q.1);
    source.0 + t * (q.0 - source.0)
}

/// Project point `q` through `source` onto the y-axis (x = 0).
fn intercept_y(source: (f64, f64), q: (f64, f64)) -> f64 {
    let t = source.0 / (source.0 - q.0);
    source.1 + t * (q.1 - source.1)
}

struct ViewEntries {
    entries: Vec<(u32, u32, f64)>,
}

fn assemble_view(g: &FanBeamGeometry, n: usize, pixel_size: f64, k: usize) -> ViewEntries {
    let theta = g.view_angles[k];
    let (sin_t, cos_t) = theta.sin_cos();
    let source = g.source_position(k);
    let half = 0.5 * n as f64 * pixel_size;
    let p_cells = g.num_cells;
    let row_base = (k * p_cells) as u32;

    let on_x_axis = sin_t.abs() >= cos_t.abs();

    // Detector boundaries mapped onto the common axis.
    let mut ups: Vec<f64> = (0..=p_cells)
        .map(|q| {
            let d = g.detector_point_at(k, g.boundary_u(q));
            if on_x_axis {
                intercept_x(source, d)
            } else {
                intercept_y(source, d)
            }
        })
        .collect();
    // The fan sweeps monotonically; flip to increasing order if needed.
    let reversed = ups[0] > ups[p_cells];
    if reversed {
        ups.reverse();
    }
    let cell_of = |dest: usize| if reversed { p_cells - 1 - dest } else { dest };

    // Path length through one slab for the ray to each cell center.
    let path_len: Vec<f64> = (0..p_cells)
        .map(|p| {
            let d = g.detector_point_at(k, g.cell_center_u(p));
            let dx = d.0 - source.0;
            let dy = d.1 - source.1;
            let len = (dx * dx + dy * dy).sqrt();
            if on_x_axis {
                pixel_size * len / dy.abs()
            } else {
                pixel_size * len / dx.abs()
            }
        })
        .collect();

    let mut entries = Vec::with_capacity(2 * n * n);
    let mut xi = vec![0.0; n + 1];

    if on_x_axis {
        // Process image rows: pixel x-boundaries at the row midline.
        for i in 0..n {
            let y_mid = half - (i as f64 + 0.5) * pixel_size;
            let t = source.1 / (source.1 - y_mid);
            for (j, x) in xi.iter_mut().enumerate() {
                let xb = -half + j as f64 * pixel_size;
                *x = source.0 + t * (xb - source.0);
            }
            // t > 0 because |source.1| > |y_mid|, so xi is increasing.
            for (m, dest, overlap) in overlap_triplets(&xi, &ups) {
                let p = cell_of(dest);
                let w = overlap / (ups[dest + 1] - ups[dest]) * path_len[p];
                if w > 0.0 {
                    let col = (m * n + i) as u32;
                    entries.push((row_base + p as u32, col, w));
                }
            }
        }
    } else {
        // Process image columns: pixel y-boundaries at the column midline,
        // reversed so the mapped boundaries increase.
        for j in 0..n {
            let x_mid = -half + (j as f64 + 0.5) * pixel_size;
            let t = source.0 / (source.0 - x_mid);
            for (m, x) in xi.iter_mut().enumerate() {
                // m-th boundary from the bottom: y = -half + m * pixel_size.
                let yb = -half + m as f64 * pixel_size;
                *x = source.1 + t * (yb - source.1);
            }
            for (m, dest, overlap) in overlap_triplets(&xi, &ups) {
                // Source interval m counts rows bottom-up: image row index.
                let i = n - 1 - m;
                let p = cell_of(dest);
                let w = overlap / (ups[dest + 1] - ups[dest]) * path_len[p];
                if w > 0.0 {
                    let col = (j * n + i) as u32;
                    entries.push((row_base + p as u32, col, w));
                }
            }
        }
    }
    ViewEntries { entries }
}

/// Assemble the distance-driven system matrix for geometry `g` and an
/// n x n image spanning the isocenter field of view.
pub fn assemble(g: &FanBeamGeometry, n: usize) -> Result<SystemMatrix> {
    if n < 2 {
        return Err(Error::invalid(format!("image size n={n} must be >= 2")));
    }
    let pixel_size = g.fov_pixel_size(n);
    let half = 0.5 * n as f64 * pixel_size;
    if g.sad <= half * std::f64::consts::SQRT_2 {
        return Err(Error::invalid(
            "degenerate geometry: source circle intersects the image support",
        ));
    }
    let rows = g.num_views * g.num_cells;
    if rows > u32::MAX as usize || n * n > u32::MAX as usize {
        return Err(Error::invalid("matrix dimensions exceed u32 index range"));
    }

    let per_view: Vec<ViewEntries> = (0..g.num_views)
        .into_par_iter()
        .map(|k| assemble_view(g, n, pixel_size, k))
        .collect();

    // Counting sort by sinogram row.
    let mut counts = vec![0usize; rows + 1];
    for v in &per_view {
        for &(r, _, _) in &v.entries {
            counts[r as usize + 1] += 1;
        }
    }
    for r in 0..rows {
        counts[r + 1] += counts[r];
    }
    let row_ptr = counts.clone();
    let nnz = row_ptr[rows];
    let mut col_idx = vec![0u32; nnz];
    let mut values = vec![0.0f64; nnz];
    let mut cursor = row_ptr.clone();
    for v in &per_view {
        for &(r, c, w) in &v.entries {
            let at = cursor[r as usize];
            col_idx[at] = c;
            values[at] = w;
            cursor[r as usize] += 1;
        }
    }
    // Sort each row by column for deterministic iteration order.
    for r in 0..rows {
        let span = row_ptr[r]..row_ptr[r + 1];
        let mut pairs: Vec<(u32, f64)> = col_idx[span.clone()]
            .iter()
            .cloned()
            .zip(values[span.clone()].iter().cloned())
            .collect();
        pairs.sort_unstable_by_key(|&(c, _)| c);
        for (offset, (c, w)) in pairs.into_iter().enumerate() {
            col_idx[row_ptr[r] + offset] = c;
            values[row_ptr[r] + offset] = w;
        }
        debug_assert!(
            col_idx[span.clone()].windows(2).all(|w| w[0] < w[1]),
            "duplicate column in sinogram row {r}"
        );
    }
    debug_assert!(values.iter().all(|&w| w > 0.0 && w.is_finite()));

    Ok(SystemMatrix {
        num_views: g.num_views,
        num_cells: g.num_cells,
        n,
        pixel_size,
        row_ptr,
        col_idx,
        values,
    })
}
