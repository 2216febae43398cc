//! ROI disk, projection-domain mask and sinogram truncation.
//!
//! A ray belongs to the ROI projection set when the perpendicular distance
//! from the disk center to the ray's line is strictly below the disk radius;
//! the mask `M` is the 0/1 diagonal selecting exactly those sinogram samples.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geometry::FanBeamGeometry;
use crate::phantom::Image;
use crate::projector::Sinogram;

/// Disk-shaped region of interest in isocenter coordinates (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiDisk {
    pub center: (f64, f64),
    pub radius: f64,
}

impl RoiDisk {
    pub fn new(center: (f64, f64), radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("ROI radius must be positive"));
        }
        Ok(RoiDisk { center, radius })
    }

    /// Convert pixel-unit center/radius to mm on an n x n grid with the given
    /// pixel size. Pixel units measure offsets from the isocenter.
    pub fn from_pixel_units(
        center_px: (f64, f64),
        radius_px: f64,
        pixel_size: f64,
    ) -> Result<Self> {
        RoiDisk::new(
            (center_px.0 * pixel_size, center_px.1 * pixel_size),
            radius_px * pixel_size,
        )
    }
}

/// KP-length 0/1 mask over sinogram samples, view-major like
/// [`crate::projector::SystemMatrix`] rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMask {
    pub num_views: usize,
    pub num_cells: usize,
    entries: Vec<u8>,
}

impl ProjectionMask {
    pub fn is_hit(&self, k: usize, p: usize) -> bool {
        self.entries[k * self.num_cells + p] == 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.entries.iter().filter(|&&e| e == 1).count()
    }

    /// Mask value (0.0 or 1.0) at flat sinogram index `r = k * P + p`.
    pub fn value(&self, r: usize) -> f64 {
        self.entries[r] as f64
    }

    /// Apply the mask in place to a flat sinogram vector: v <- M v.
    pub fn apply_vec(&self, v: &mut [f64]) {
        for (x, &m) in v.iter_mut().zip(self.entries.iter()) {
            if m == 0 {
                *x = 0.0;
            }
        }
    }

    /// Apply the complement in place: v <- (I - M) v.
    pub fn apply_complement_vec(&self, v: &mut [f64]) {
        for (x, &m) in v.iter_mut().zip(self.entries.iter()) {
            if m == 1 {
                *x = 0.0;
            }
        }
    }

    /// For view `k`, the first and last cell index inside the ROI projection,
    /// if any cell is hit. The hit set of a view is a contiguous interval
    /// because the fan sweeps the signed distance to the center monotonically.
    pub fn row_extent(&self, k: usize) -> Option<(usize, usize)> {
        let row = &self.entries[k * self.num_cells..(k + 1) * self.num_cells];
        let lo = row.iter().position(|&e| e == 1)?;
        let hi = row.iter().rposition(|&e| e == 1)?;
        Some((lo, hi))
    }

    /// The mask as a K x P array of 0.0 / 1.0 values (for export/rendering).
    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.num_views, self.num_cells), |(k, p)| {
            self.entries[k * self.num_cells + p] as f64
        })
    }
}

/// Build the projection-domain mask: entry (k, p) is 1 iff the perpendicular
/// distance from the ROI center to the line of ray (k, p) is strictly less
/// than the ROI radius.
pub fn build_mask(g: &FanBeamGeometry, roi: &RoiDisk) -> ProjectionMask {
    let mut entries = Vec::with_capacity(g.num_views * g.num_cells);
    for k in 0..g.num_views {
        for p in 0..g.num_cells {
            let ray = g.ray(k, p).expect("indices in range");
            let hit = ray.distance_to_point(roi.center) < roi.radius;
            entries.push(hit as u8);
        }
    }
    ProjectionMask { num_views: g.num_views, num_cells: g.num_cells, entries }
}

/// Truncate a sinogram to the ROI projection set: y0 = M y.
pub fn truncate(y: &Sinogram, mask: &ProjectionMask) -> Result<Sinogram> {
    if y.num_views() != mask.num_views || y.num_cells() != mask.num_cells {
        return Err(Error::shape(format!(
            "truncate: sinogram {}x{} vs mask {}x{}",
            y.num_views(),
            y.num_cells(),
            mask.num_views,
            mask.num_cells
        )));
    }
    let mut v = y.to_vec();
    mask.apply_vec(&mut v);
    Sinogram::from_vec(mask.num_views, mask.num_cells, v)
}

/// Indices (i, j) of pixels whose centers lie strictly inside the ROI disk,
/// for an n x n image with the given pixel size centered on the isocenter.
pub fn roi_pixels(n: usize, pixel_size: f64, roi: &RoiDisk) -> Vec<(usize, usize)> {
    let probe = Image::zeros(n, pixel_size);
    let r2 = roi.radius * roi.radius;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (x, y) = probe.pixel_center_mm(i, j);
            let dx = x - roi.center.0;
            let dy = y - roi.center.1;
            if dx * dx + dy * dy < r2 {
                out.push((i, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::paper_geometry;
    use proptest::prelude::*;

    /// Independent route: point-line distance from the implicit line equation
    /// a x + b y + c = 0 through the ray's two endpoints.
    fn line_equation_distance(
        s: (f64, f64),
        d: (f64, f64),
        point: (f64, f64),
    ) -> f64 {
        let a = d.1 - s.1;
        let b = s.0 - d.0;
        let c = d.0 * s.1 - d.1 * s.0;
        (a * point.0 + b * point.1 + c).abs() / (a * a + b * b).sqrt()
    }

    #[test]
    fn huge_radius_masks_everything() {
        let g = paper_geometry();
        let roi = RoiDisk::new((0.0, 0.0), 1e4).unwrap();
        let m = build_mask(&g, &roi);
        assert_eq!(m.count_ones(), g.num_views * g.num_cells);
    }

    #[test]
    fn vanishing_radius_masks_nothing() {
        let g = paper_geometry();
        // Center chosen so no ray passes exactly through it.
        let roi = RoiDisk::new((0.1234, 0.4567), 1e-9).unwrap();
        let m = build_mask(&g, &roi);
        assert_eq!(m.count_ones(), 0);
    }

    #[test]
    fn mask_matches_brute_force_line_distances() {
        let g = paper_geometry();
        let configs = [
            ((0.0, 0.0), 0.15 * 128.0 * g.fov_pixel_size(128)),
            ((2.07, -2.07), 0.3 * 128.0 * g.fov_pixel_size(128)),
            ((-5.0, 3.0), 4.0),
            ((8.0, 8.0), 12.5),
            ((0.5, -0.25), 1.0),
        ];
        for (center, radius) in configs {
            let roi = RoiDisk::new(center, radius).unwrap();
            let m = build_mask(&g, &roi);
            for k in 0..g.num_views {
                for p in 0..g.num_cells {
                    let ray = g.ray(k, p).unwrap();
                    let expected =
                        line_equation_distance(ray.source, ray.detector_point, center) < radius;
                    assert_eq!(m.is_hit(k, p), expected, "({k},{p}) roi {center:?} r={radius}");
                }
            }
        }
    }

    #[test]
    fn mask_rows_are_contiguous() {
        let g = paper_geometry();
        let roi = RoiDisk::new((2.07, -2.07), 6.2).unwrap();
        let m = build_mask(&g, &roi);
        for k in 0..g.num_views {
            if let Some((lo, hi)) = m.row_extent(k) {
                for p in lo..=hi {
                    assert!(m.is_hit(k, p));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn mask_monotone_in_radius(r1 in 0.5f64..20.0, r2 in 0.5f64..20.0) {
            let g = paper_geometry();
            let (small, large) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let m1 = build_mask(&g, &RoiDisk::new((1.0, -2.0), small).unwrap());
            let m2 = build_mask(&g, &RoiDisk::new((1.0, -2.0), large).unwrap());
            for k in 0..g.num_views {
                for p in 0..g.num_cells {
                    prop_assert!(!m1.is_hit(k, p) || m2.is_hit(k, p));
                }
            }
        }
    }

    #[test]
    fn truncate_identity_zero_and_idempotent() {
        let g = paper_geometry();
        let y = Sinogram::from_vec(
            g.num_views,
            g.num_cells,
            (0..g.num_views * g.num_cells).map(|i| (i % 17) as f64 - 3.0).collect(),
        )
        .unwrap();

        let all = build_mask(&g, &RoiDisk::new((0.0, 0.0), 1e4).unwrap());
        assert_eq!(truncate(&y, &all).unwrap(), y);

        let none = build_mask(&g, &RoiDisk::new((0.1, 0.2), 1e-9).unwrap());
        assert!(truncate(&y, &none).unwrap().values.iter().all(|&v| v == 0.0));

        let some = build_mask(&g, &RoiDisk::new((1.0, 1.0), 8.0).unwrap());
        let once = truncate(&y, &some).unwrap();
        let twice = truncate(&once, &some).unwrap();
        assert_eq!(once, twice);

        // Support separation: (I - M) truncate(y, M) = 0 exactly.
        let mut v = once.to_vec();
        some.apply_complement_vec(&mut v);
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn truncate_shape_mismatch() {
        let g = paper_geometry();
        let m = build_mask(&g, &RoiDisk::new((0.0, 0.0), 5.0).unwrap());
        let y = Sinogram::zeros(10, 10);
        assert!(truncate(&y, &m).is_err());
    }

    #[test]
    fn roi_pixels_counts() {
        let n = 128usize;
        let ps = paper_geometry().fov_pixel_size(n);

        // Radius covering the whole image.
        let all = roi_pixels(n, ps, &RoiDisk::new((0.0, 0.0), 1e4).unwrap());
        assert_eq!(all.len(), n * n);

        // Radius under half a pixel centered on a pixel center: one pixel.
        let img = Image::zeros(n, ps);
        let c = img.pixel_center_mm(40, 90);
        let one = roi_pixels(n, ps, &RoiDisk::new(c, 0.4 * ps).unwrap());
        assert_eq!(one, vec![(40, 90)]);

        // Brute-force count for a centered disk of radius 0.5 N pixels.
        let radius = 0.5 * n as f64 * ps;
        let roi = RoiDisk::new((0.0, 0.0), radius).unwrap();
        let got = roi_pixels(n, ps, &roi);
        let mut expected = 0usize;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = img.pixel_center_mm(i, j);
                if (x * x + y * y).sqrt() < radius {
                    expected += 1;
                }
            }
        }
        assert_eq!(got.len(), expected);
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(RoiDisk::new((0.0, 0.0), 0.0).is_err());
        assert!(RoiDisk::new((0.0, 0.0), -1.0).is_err());
    }
}
