//! 2D fan-beam acquisition geometry and ray enumeration.
//!
//! The X-ray source rotates on a circle of radius `sad` around the isocenter;
//! a flat detector of `num_cells` cells with pitch `cell_pitch` sits opposite
//! the source at distance `sdd`, perpendicular to the source-isocenter axis.
//! Detector coordinates are signed millimeters along the detector tangent
//! `(-sin t, cos t)` for source angle `t`, with the cell grid shifted by
//! `detector_offset` cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FanBeamGeometry {
    pub num_views: usize,
    pub num_cells: usize,
    /// Detector cell pitch in mm.
    pub cell_pitch: f64,
    /// Source-to-detector distance in mm.
    pub sdd: f64,
    /// Source-to-isocenter distance (radius of rotation) in mm.
    pub sad: f64,
    /// Detector shift in cells (fractional, signed toward positive u).
    pub detector_offset: f64,
    /// View angles in radians, strictly increasing in [0, 2*pi).
    pub view_angles: Vec<f64>,
}

/// One measured line: from the point source to the center of a detector cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub source: (f64, f64),
    pub detector_point: (f64, f64),
}

impl Ray {
    /// Unit direction from source to detector point.
    pub fn direction(&self) -> (f64, f64) {
        let dx = self.detector_point.0 - self.source.0;
        let dy = self.detector_point.1 - self.source.1;
        let len = (dx * dx + dy * dy).sqrt();
        (dx / len, dy / len)
    }

    /// Perpendicular distance from `point` to the infinite line through the ray.
    pub fn distance_to_point(&self, point: (f64, f64)) -> f64 {
        let (ux, uy) = self.direction();
        let rx = point.0 - self.source.0;
        let ry = point.1 - self.source.1;
        (rx * uy - ry * ux).abs()
    }
}

impl FanBeamGeometry {
    pub fn new(
        num_views: usize,
        num_cells: usize,
        cell_pitch: f64,
        sdd: f64,
        sad: f64,
        detector_offset: f64,
        view_angles: Vec<f64>,
    ) -> Result<Self> {
        if num_views < 1 || num_cells < 1 {
            return Err(Error::invalid("need at least one view and one detector cell"));
        }
        if !(cell_pitch > 0.0) {
            return Err(Error::invalid("cell_pitch must be positive"));
        }
        if !(0.0 < sad && sad < sdd) {
            return Err(Error::invalid("require 0 < sad < sdd"));
        }
        if view_angles.len() != num_views {
            return Err(Error::shape(format!(
                "expected {num_views} view angles, got {}",
                view_angles.len()
            )));
        }
        let tau = 2.0 * std::f64::consts::PI;
        for (k, &a) in view_angles.iter().enumerate() {
            if !(0.0..tau).contains(&a) {
                return Err(Error::invalid(format!("view angle {k} = {a} outside [0, 2*pi)")));
            }
            if k > 0 && a <= view_angles[k - 1] {
                return Err(Error::invalid("view angles must be strictly increasing"));
            }
        }
        Ok(FanBeamGeometry {
            num_views,
            num_cells,
            cell_pitch,
            sdd,
            sad,
            detector_offset,
            view_angles,
        })
    }

    /// Geometry with `num_views` uniformly spaced angles over [0, 2*pi).
    pub fn uniform(
        num_views: usize,
        num_cells: usize,
        cell_pitch: f64,
        sdd: f64,
        sad: f64,
        detector_offset: f64,
    ) -> Result<Self> {
        let tau = 2.0 * std::f64::consts::PI;
        let angles = (0..num_views).map(|k| tau * k as f64 / num_views as f64).collect();
        FanBeamGeometry::new(num_views, num_cells, cell_pitch, sdd, sad, detector_offset, angles)
    }

    /// Isocenter field-of-view width divided by `n`: the physical pixel size
    /// in mm for an n x n image spanning the FOV.
    pub fn fov_pixel_size(&self, n: usize) -> f64 {
        assert!(n >= 1, "pixel count must be >= 1");
        self.num_cells as f64 * self.cell_pitch * self.sad / self.sdd / n as f64
    }

    /// Source position at view `k` in mm.
    pub fn source_position(&self, k: usize) -> (f64, f64) {
        let t = self.view_angles[k];
        (self.sad * t.cos(), self.sad * t.sin())
    }

    /// Signed detector coordinate of the center of cell `p` in mm.
    pub fn cell_center_u(&self, p: usize) -> f64 {
        (p as f64 - (self.num_cells as f64 - 1.0) / 2.0 - self.detector_offset) * self.cell_pitch
    }

    /// Signed detector coordinate of cell boundary `q` in mm, `q = 0..=P`
    /// (boundary `q` is the lower edge of cell `q`).
    pub fn boundary_u(&self, q: usize) -> f64 {
        (q as f64 - self.num_cells as f64 / 2.0 - self.detector_offset) * self.cell_pitch
    }

    /// Physical point at detector coordinate `u` for view `k`.
    pub fn detector_point_at(&self, k: usize, u: f64) -> (f64, f64) {
        let t = self.view_angles[k];
        let (sin_t, cos_t) = t.sin_cos();
        let cx = (self.sad - self.sdd) * cos_t;
        let cy = (self.sad - self.sdd) * sin_t;
        (cx - u * sin_t, cy + u * cos_t)
    }

    /// The measured line from the source at view `k` to the center of cell `p`.
    pub fn ray(&self, k: usize, p: usize) -> Result<Ray> {
        if k >= self.num_views || p >= self.num_cells {
            return Err(Error::invalid(format!(
                "ray index (k={k}, p={p}) out of range ({} views, {} cells)",
                self.num_views, self.num_cells
            )));
        }
        Ok(Ray {
            source: self.source_position(k),
            detector_point: self.detector_point_at(k, self.cell_center_u(p)),
        })
    }
}

/// The micro-CT acquisition used by all reconstruction experiments:
/// 182 views over 2*pi, 130 detector cells of 0.8 mm pitch, 291.20 mm
/// source-detector distance, 115.84 mm radius of rotation, detector offset
/// 1.5 cells.
pub fn paper_geometry() -> FanBeamGeometry {
    FanBeamGeometry::uniform(182, 130, 0.8, 291.20, 115.84, 1.5)
        .expect("paper geometry constants are valid")
}

/// JSON-serializable geometry description (uniform view spacing).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GeometryConfig {
    pub views: usize,
    pub cells: usize,
    pub pitch_mm: f64,
    pub sdd_mm: f64,
    pub sad_mm: f64,
    #[serde(default)]
    pub offset_cells: f64,
}

impl GeometryConfig {
    pub fn build(&self) -> Result<FanBeamGeometry> {
        FanBeamGeometry::uniform(
            self.views,
            self.cells,
            self.pitch_mm,
            self.sdd_mm,
            self.sad_mm,
            self.offset_cells,
        )
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry config serializes")
    }
}
