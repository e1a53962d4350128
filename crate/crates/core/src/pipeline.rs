//! End-to-end run on a synthetic scene: render, misalign the depth
//! borders, associate edges, morph, evaluate losses and metrics.

use serde::{Deserialize, Serialize};

use crate::edges::{associate_edges, consistency_against, extract_edges, segmentation_edges, EdgeSet, PairSet};
use crate::error::{Error, Result};
use crate::eval::{depth_metrics_with, Crop, EvalConfig, MetricRow};
use crate::grid::ScalarMap;
use crate::losses::{disparity_to_depth, stereo_losses, LossSummary, StereoLossInputs};
use crate::morph::morph_disparity;
use crate::occlusion::{occlusion_mask, OcclusionParams, View};
use crate::params::Thresholds;
use crate::scalar::Real;
use crate::synth::{generate, perturb_edges, Fixture, SceneSpec};

pub const DEFAULT_FOCAL: f64 = 721.0;
pub const DEFAULT_BASELINE: f64 = 0.54;

/// One associate-and-morph round.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignStep<T> {
    pub pairs: PairSet,
    pub morphed: ScalarMap<T>,
    /// Mean association distance of the paired segmentation points.
    pub lc_before: f64,
    /// Mean distance of the same points to the morphed map's edges.
    pub lc_after: f64,
}

/// Associates `seg_edges` with the edges of `disp` and morphs once.
///
/// Both consistencies use edges detected at `k1`.
pub fn align_once<T: Real>(disp: &ScalarMap<T>, seg_edges: &EdgeSet, th: &Thresholds) -> Result<AlignStep<T>> {
    th.validate()?;
    let depth_edges = extract_edges(disp, th.k1)?;
    let pairs = associate_edges(seg_edges, &depth_edges, th.k2)?;
    let lc_before = pairs.mean_distance().ok_or(Error::NoAssociatedEdges)?;
    let morphed = morph_disparity(disp, &pairs, th)?;
    let lc_after = lc_against(&pairs, &morphed, th.k1)?;
    Ok(AlignStep { pairs, morphed, lc_before, lc_after })
}

/// Mean distance of the pairs' segmentation points to the edges of `map`.
pub fn lc_against<T: Real>(pairs: &PairSet, map: &ScalarMap<T>, k1: f64) -> Result<f64> {
    let edges = extract_edges(map, k1)?;
    consistency_against(pairs.segmentation_points(), &edges)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub thresholds: Thresholds,
    pub offset_px: i64,
    pub bleed_px: usize,
    pub perturb_seed: u64,
    pub focal: f64,
    pub baseline: f64,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            offset_px: 4,
            bleed_px: 0,
            perturb_seed: 0,
            focal: DEFAULT_FOCAL,
            baseline: DEFAULT_BASELINE,
            eval: EvalConfig { crop: Crop::None, ..EvalConfig::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n_pairs: usize,
    pub lc_before: f64,
    pub lc_after: f64,
    pub metrics_before: MetricRow,
    pub metrics_after: MetricRow,
    /// Every metric of the morphed prediction is at least as good.
    pub metrics_no_worse: bool,
    pub abs_rel_improved: bool,
    /// Losses of the perturbed prediction with the morphed map as target.
    pub losses: LossSummary,
    pub occluded_px: usize,
}

/// Everything a pipeline run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineRun {
    pub fixture: Fixture,
    pub perturbed: ScalarMap<f32>,
    pub morphed: ScalarMap<f32>,
    pub report: PipelineReport,
}

pub fn run_pipeline(spec: &SceneSpec, cfg: &PipelineConfig) -> Result<PipelineRun> {
    let th = &cfg.thresholds;
    th.validate()?;
    let fixture = generate(spec)?;
    let perturbed = perturb_edges(&fixture.disp_gt, &fixture.seg_gt, cfg.offset_px, cfg.bleed_px, cfg.perturb_seed)?;
    let seg_edges = segmentation_edges(&fixture.seg_gt, th.k1)?;
    let step = align_once(&perturbed, &seg_edges, th)?;

    let occ = OcclusionParams { search_width: th.search_width, k3: th.k3, view: View::Left };
    let mask = occlusion_mask(&perturbed, &occ)?;
    let inputs = StereoLossInputs {
        left: &fixture.left,
        right: &fixture.right,
        disp: &perturbed,
        morphed: Some(&step.morphed),
        proxy: None,
        mask: &mask,
    };
    let (_, losses) = stereo_losses(&inputs, th)?;

    let depth = |d: &ScalarMap<f32>| disparity_to_depth(d, cfg.focal, cfg.baseline).map(|c| c.depth);
    let gt = depth(&fixture.disp_gt)?;
    let metrics_before = depth_metrics_with(&depth(&perturbed)?, &gt, &cfg.eval, None)?.named("before");
    let metrics_after = depth_metrics_with(&depth(&step.morphed)?, &gt, &cfg.eval, None)?.named("after");
    let report = PipelineReport {
        n_pairs: step.pairs.len(),
        lc_before: step.lc_before,
        lc_after: step.lc_after,
        metrics_no_worse: metrics_after.no_worse_than(&metrics_before),
        abs_rel_improved: metrics_after.abs_rel < metrics_before.abs_rel,
        metrics_before,
        metrics_after,
        losses,
        occluded_px: mask.count(),
    };
    Ok(PipelineRun { fixture, perturbed, morphed: step.morphed, report })
}
