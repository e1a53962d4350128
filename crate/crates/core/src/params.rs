//! Hyperparameters of the edge, morph, occlusion and loss stages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every tunable constant of the pipeline in one record.
///
/// Defaults are the published training values. `k1` and `k3` are expressed
/// in the units of the map they are applied to; the published values were
/// calibrated for disparity normalized to `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Morph sample-space control (`x = q` maps to `p` with slope `t / (1 + t)`).
    pub t: f64,
    /// Gradient magnitude an edge pixel must exceed.
    pub k1: f64,
    /// Association radius; pairs at distance `>= k2` are dropped.
    pub k2: f64,
    /// Occlusion mask thickness threshold.
    pub k3: f64,
    /// Steepness of the locality gate `h`.
    pub m1: f64,
    /// Midpoint of the locality gate `h`.
    pub m2: f64,
    /// Offset of the relative weight `w`; must be positive.
    pub m3: f64,
    /// Exponent of the relative weight `w`.
    pub m4: f64,
    /// SSIM share of the photometric loss.
    pub alpha: f64,
    /// Proxy loss weight.
    pub lambda1: f64,
    /// Morph loss weight.
    pub lambda2: f64,
    /// Occlusion search width in pixels; `None` scans to the image border.
    pub search_width: Option<usize>,
    /// Pixels per unit of the distance fed to `h` and `w`.
    pub distance_scale: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            t: 1.0,
            k1: 0.11,
            k2: 20.0,
            k3: 0.05,
            m1: 17.0,
            m2: 0.7,
            m3: 1.6,
            m4: 1.9,
            alpha: 0.85,
            lambda1: 1.0,
            lambda2: 5.0,
            search_width: None,
            distance_scale: 7.0,
        }
    }
}

impl Thresholds {
    /// Returns every violated field by name.
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let mut check = |name: &str, v: f64, ok: bool| {
            if !v.is_finite() || !ok {
                bad.push(name.to_string());
            }
        };
        check("t", self.t, self.t > 0.0);
        check("k1", self.k1, self.k1 > 0.0);
        check("k2", self.k2, self.k2 > 0.0);
        check("k3", self.k3, true);
        check("m1", self.m1, true);
        check("m2", self.m2, true);
        check("m3", self.m3, self.m3 > 0.0);
        check("m4", self.m4, true);
        check("alpha", self.alpha, (0.0..=1.0).contains(&self.alpha));
        check("lambda1", self.lambda1, self.lambda1 >= 0.0);
        check("lambda2", self.lambda2, self.lambda2 >= 0.0);
        check("distance_scale", self.distance_scale, self.distance_scale > 0.0);
        if self.search_width == Some(0) {
            bad.push("search_width".to_string());
        }
        bad
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self.violations();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidThresholds(bad))
        }
    }

    /// Edge threshold that morphed edges satisfy at their new location.
    pub fn morphed_edge_threshold(&self) -> f64 {
        self.t / (1.0 + self.t) * self.k1
    }
}
