//! JSON experiment configuration. Every CLI flag overrides its config key.

use serde::{Deserialize, Serialize};

use roict_core::error::{Error, Result};
use roict_core::geometry::{paper_geometry, FanBeamGeometry, GeometryConfig};
use roict_core::objective::Formulation;
use roict_core::sgp::SgpParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySource {
    /// The literal string "paper".
    Named(String),
    Custom(GeometryConfig),
}

impl GeometrySource {
    pub fn build(&self) -> Result<FanBeamGeometry> {
        match self {
            GeometrySource::Named(name) if name == "paper" => Ok(paper_geometry()),
            GeometrySource::Named(name) => {
                Err(Error::InvalidArgument(format!("unknown geometry name '{name}'")))
            }
            GeometrySource::Custom(cfg) => cfg.build(),
        }
    }
}

impl Default for GeometrySource {
    fn default() -> Self {
        GeometrySource::Named("paper".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulationCfg {
    Implicit,
    Explicit,
}

impl From<FormulationCfg> for Formulation {
    fn from(f: FormulationCfg) -> Formulation {
        match f {
            FormulationCfg::Implicit => Formulation::Implicit,
            FormulationCfg::Explicit => Formulation::Explicit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerCfg {
    Shearlet,
    Wavelet,
    None,
}

/// Optional overrides over [`SgpParams::default`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgpConfig {
    pub beta: Option<f64>,
    pub gamma_ls: Option<f64>,
    pub mu: Option<usize>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha0: Option<f64>,
    pub sigma: Option<f64>,
    pub max_iter: Option<usize>,
    pub stop_tol: Option<f64>,
    pub bb_switch_threshold: Option<f64>,
    pub bb_memory: Option<usize>,
}

impl SgpConfig {
    pub fn build(&self) -> SgpParams {
        let mut p = SgpParams::default();
        if let Some(v) = self.beta {
            p.beta = v;
        }
        if let Some(v) = self.gamma_ls {
            p.gamma_ls = v;
        }
        if let Some(v) = self.mu {
            p.mu = v;
        }
        if let Some(v) = self.alpha_min {
            p.alpha_min = v;
        }
        if let Some(v) = self.alpha_max {
            p.alpha_max = v;
        }
        if let Some(v) = self.alpha0 {
            p.alpha0 = v;
        }
        if let Some(v) = self.sigma {
            p.sigma = v;
        }
        if let Some(v) = self.max_iter {
            p.max_iter = v;
        }
        if let Some(v) = self.stop_tol {
            p.stop_tol = v;
        }
        if let Some(v) = self.bb_switch_threshold {
            p.bb_switch_threshold = v;
        }
        if let Some(v) = self.bb_memory {
            p.bb_memory = v;
        }
        p
    }
}

fn default_n() -> usize {
    128
}

fn default_gammas() -> Vec<f64> {
    vec![0.5, 0.3, 0.15]
}

fn default_roi_center_frac() -> (f64, f64) {
    (0.05, -0.05)
}

fn default_delta() -> f64 {
    1e-2
}

fn default_scales() -> usize {
    3
}

fn default_out_dir() -> String {
    "sweep_out".into()
}

/// One sweep: a grid of (gamma, lambda, rho) cells for a fixed formulation
/// and regularizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub geometry: GeometrySource,
    #[serde(default = "default_n")]
    pub n: usize,
    /// ROI radii as fractions of N (pixel units / N).
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    /// ROI center as a fraction of the FOV width, relative to the isocenter.
    #[serde(default = "default_roi_center_frac")]
    pub roi_center_frac: (f64, f64),
    pub formulation: FormulationCfg,
    pub regularizer: RegularizerCfg,
    pub lambdas: Vec<f64>,
    pub rhos: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_scales")]
    pub scales: usize,
    #[serde(default)]
    pub sgp: SgpConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(Error::InvalidArgument("gamma grid is empty".into()));
        }
        if self.lambdas.is_empty() {
            return Err(Error::InvalidArgument("lambda grid is empty".into()));
        }
        if self.rhos.is_empty() {
            return Err(Error::InvalidArgument("rho grid is empty".into()));
        }
        if self.gammas.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::InvalidArgument("gamma values must be positive".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument("n must be at least 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_defaults() {
        let json = r#"{
            "formulation": "implicit",
            "regularizer": "shearlet",
            "lambdas": [5e-4],
            "rhos": [0.01]
        }"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        assert_eq!(cfg.n, 128);
        assert_eq!(cfg.gammas, vec![0.5, 0.3, 0.15]);
        assert_eq!(cfg.roi_center_frac, (0.05, -0.05));
        assert!(matches!(cfg.geometry, GeometrySource::Named(ref s) if s == "paper"));
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back.lambdas, cfg.lambdas);
    }

    #[test]
    fn custom_geometry_parses() {
        let json = r#"{
            "geometry": {"views": 8, "cells": 16, "pitch_mm": 1.0, "sdd_mm": 200.0, "sad_mm": 80.0},
            "formulation": "explicit",
            "regularizer": "none",
            "lambdas": [0.0],
            "rhos": [0.1]
        }"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        let g = cfg.geometry.build().unwrap();
        assert_eq!(g.num_views, 8);
        assert_eq!(g.detector_offset, 0.0);
    }

    #[test]
    fn empty_grids_rejected() {
        let json = r#"{
            "formulation": "implicit",
            "regularizer": "shearlet",
            "lambdas": [],
            "rhos": [0.01]
        }"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sgp_overrides_apply() {
        let cfg = SgpConfig { max_iter: Some(42), mu: Some(1), ..Default::default() };
        let p = cfg.build();
        assert_eq!(p.max_iter, 42);
        assert_eq!(p.mu, 1);
        assert_eq!(p.beta, 1e-4);
    }
}
