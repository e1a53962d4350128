use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use edgemorph::edges::{associate_edges, extract_edges, segmentation_edges, EdgeSet};
use edgemorph::eval::{delta_profile, depth_metrics_with, region_split_metrics, MetricRow, ProfileBin, RegionSplit};
use edgemorph::io::{read_image, read_mask, read_pfm, write_image, write_mask_pgm, write_metrics_csv, write_pfm};
use edgemorph::losses::{disparity_to_depth, stereo_losses, StereoLossInputs};
use edgemorph::morph::morph_disparity;
use edgemorph::occlusion::{occlusion_mask, View};
use edgemorph::pipeline::{align_once, lc_against, run_pipeline, PipelineConfig};
use edgemorph::synth::{generate, random_scene, Fixture, SceneSpec};
use edgemorph::{Error, Map, Unit};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::args::*;

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidThresholds(_) | Error::InvalidParameter { .. } => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

pub type Outcome = Result<serde_json::Value, Failure>;

fn to_json(v: impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn read_disp(path: &Path) -> Result<Map, Failure> {
    Ok(read_pfm::<f32>(path)?.with_unit(Unit::DisparityPx))
}

fn normalized(disp: &Map, max: Option<f64>) -> Result<Map, Failure> {
    match max {
        None => Ok(disp.clone()),
        Some(m) if m.is_finite() && m > 0.0 => Ok(disp.map(Unit::DisparityNormalized, |v| (v as f64 / m) as f32)?),
        Some(_) => Err(Failure::Usage("--normalize-max must be positive".into())),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))
}

pub fn edges(a: &EdgesArgs) -> Outcome {
    let is_pfm = a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("pfm"));
    let set = if is_pfm {
        extract_edges(&normalized(&read_disp(&a.input)?, a.normalize_max)?, a.k1)?
    } else {
        segmentation_edges(&read_mask(&a.input)?, a.k1)?
    };
    if let Some(out) = &a.out {
        write_mask_pgm(&set.to_mask(), out)?;
    }
    let (w, h) = set.shape();
    Ok(json!({ "count": set.len(), "width": w, "height": h }))
}

fn edge_sets(seg: &Path, disp: &Map, k1: f64, normalize_max: Option<f64>) -> Result<(EdgeSet, Map), Failure> {
    let mask = read_mask(seg)?;
    mask.ensure_same_shape(disp.shape()).map_err(|e| Failure::Data(format!("{}: {e}", seg.display())))?;
    Ok((segmentation_edges(&mask, k1)?, normalized(disp, normalize_max)?))
}

pub fn consistency(a: &ConsistencyArgs) -> Outcome {
    let disp = read_disp(&a.disp)?;
    let (ts, edge_map) = edge_sets(&a.seg, &disp, a.k1, a.normalize_max)?;
    let td = extract_edges(&edge_map, a.k1)?;
    let pairs = associate_edges(&ts, &td, a.k2)?;
    Ok(json!({
        "lc": pairs.mean_distance(),
        "n_pairs": pairs.len(),
        "n_seg_edges": ts.len(),
        "n_depth_edges": td.len(),
    }))
}

pub fn morph(a: &MorphArgs) -> Outcome {
    let th = a.th.thresholds();
    th.validate()?;
    let disp = read_disp(&a.disp)?;
    let (ts, edge_map) = edge_sets(&a.seg, &disp, th.k1, a.normalize_max)?;
    let report = match align_once(&edge_map, &ts, &th) {
        Ok(step) => {
            let (out, lc_after) = if a.normalize_max.is_some() {
                let out = morph_disparity(&disp, &step.pairs, &th)?;
                let lc = lc_against(&step.pairs, &normalized(&out, a.normalize_max)?, th.k1)?;
                (out, lc)
            } else {
                (step.morphed, step.lc_after)
            };
            write_pfm(&out, &a.out)?;
            json!({ "n_pairs": step.pairs.len(), "lc_before": step.lc_before, "lc_after": lc_after })
        }
        Err(Error::NoAssociatedEdges) => {
            write_pfm(&disp, &a.out)?;
            json!({ "n_pairs": 0, "lc_before": null, "lc_after": null })
        }
        Err(e) => return Err(e.into()),
    };
    Ok(report)
}

pub fn occlusion(a: &OcclusionArgs) -> Outcome {
    let disp = read_disp(&a.disp)?;
    let params = edgemorph::OcclusionParams { search_width: a.search_width, k3: a.k3, view: View::from(a.view) };
    let mask = occlusion_mask(&disp, &params)?;
    write_mask_pgm(&mask, &a.out)?;
    Ok(json!({ "occluded": mask.count(), "total": disp.len() }))
}

pub fn loss(a: &LossArgs) -> Outcome {
    let th = a.th.thresholds();
    th.validate()?;
    let left = read_image::<f32>(&a.left)?;
    let right = read_image::<f32>(&a.right)?;
    let disp = read_disp(&a.disp)?;
    let morphed = a.morphed.as_deref().map(read_disp).transpose()?;
    let proxy = a.proxy.as_deref().map(read_disp).transpose()?;
    let mask = match &a.mask {
        Some(p) => read_mask(p)?,
        None => occlusion_mask(&disp, &a.th.occlusion(ViewArg::Left))?,
    };
    let inputs = StereoLossInputs {
        left: &left,
        right: &right,
        disp: &disp,
        morphed: morphed.as_ref(),
        proxy: proxy.as_ref(),
        mask: &mask,
    };
    let (_, summary) = stereo_losses(&inputs, &th)?;
    Ok(to_json(summary))
}

#[derive(Serialize)]
struct EvalResult {
    name: String,
    rows: Vec<MetricRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<Vec<ProfileBin>>,
}

fn read_depth(path: &Path, a: &EvalCmdArgs) -> Result<Map, Failure> {
    let raw = read_pfm::<f32>(path)?;
    match a.kind {
        MapKind::Depth => Ok(raw.with_unit(Unit::DepthM)),
        MapKind::Disparity => Ok(disparity_to_depth(&raw.with_unit(Unit::DisparityPx), a.camera.focal, a.camera.baseline)?.depth),
    }
}

fn with_path(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::Io { .. } | Error::Decode { .. } => e.into(),
        other => Failure::Data(format!("{}: {other}", path.display())),
    }
}

fn eval_one(name: String, pred: &Path, gt: &Path, seg: Option<&Path>, a: &EvalCmdArgs) -> Result<EvalResult, Failure> {
    let cfg = a.eval.config();
    let p = read_depth(pred, a)?;
    let g = read_depth(gt, a)?;
    let Some(seg) = seg else {
        let row = depth_metrics_with(&p, &g, &cfg, None).map_err(with_path(pred))?;
        return Ok(EvalResult { rows: vec![row.named(name.clone())], name, profile: None });
    };
    let mask = read_mask(seg)?;
    // Any threshold below 0.5 picks out the mask boundary.
    let edges = segmentation_edges(&mask, 0.11)?;
    let split = RegionSplit { near_band_px: a.eval.band };
    let regions = region_split_metrics(&p, &g, &edges, &split, &cfg).map_err(with_path(pred))?;
    let rows: Vec<MetricRow> = regions
        .rows()
        .into_iter()
        .map(|r| {
            let region = r.name.clone();
            r.named(format!("{name}/{region}"))
        })
        .collect();
    let profile = match a.profile {
        Some(n) => {
            let bins: Vec<i64> = (-(n as i64)..=n as i64).collect();
            Some(delta_profile(&p, &g, &edges, &mask, &bins, cfg.cap).map_err(with_path(pred))?)
        }
        None => None,
    };
    Ok(EvalResult { name, rows, profile })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn seg_for(dir: &Path, pred: &Path) -> PathBuf {
    let s = stem(pred);
    let pgm = dir.join(format!("{s}.pgm"));
    if pgm.exists() {
        pgm
    } else {
        dir.join(format!("{s}.png"))
    }
}

pub fn eval(a: &EvalCmdArgs) -> Outcome {
    if a.profile.is_some() && a.seg.is_none() {
        return Err(Failure::Usage("--profile needs --seg".into()));
    }
    let results = if a.glob {
        let mut preds: Vec<PathBuf> = glob::glob(&a.pred)
            .map_err(|e| Failure::Usage(format!("bad glob {}: {e}", a.pred)))?
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Data(e.to_string()))?;
        preds.sort();
        if preds.is_empty() {
            return Err(Failure::Data(format!("{}: no files match", a.pred)));
        }
        preds
            .par_iter()
            .map(|pred| {
                let name = pred.file_name().expect("glob yields files");
                let seg = a.seg.as_deref().map(|d| seg_for(d, pred));
                eval_one(stem(pred), pred, &a.gt.join(name), seg.as_deref(), a)
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        let pred = PathBuf::from(&a.pred);
        vec![eval_one(stem(&pred), &pred, &a.gt, a.seg.as_deref(), a)?]
    };
    if let Some(csv) = &a.csv {
        let rows: Vec<MetricRow> = results.iter().flat_map(|r| r.rows.iter().cloned()).collect();
        write_metrics_csv(&rows, csv)?;
    }
    Ok(json!({ "results": results }))
}

fn read_spec(path: &Path) -> Result<SceneSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_fixture(f: &Fixture, dir: &Path, ext: &str) -> Result<Vec<PathBuf>, Failure> {
    ensure_dir(dir)?;
    let files = [
        dir.join(format!("left.{ext}")),
        dir.join(format!("right.{ext}")),
        dir.join("disp_gt.pfm"),
        dir.join("seg.pgm"),
        dir.join("occluded.pgm"),
    ];
    write_image(&f.left, &files[0])?;
    write_image(&f.right, &files[1])?;
    write_pfm(&f.disp_gt, &files[2])?;
    write_mask_pgm(&f.seg_gt, &files[3])?;
    write_mask_pgm(&f.occluded_gt, &files[4])?;
    Ok(files.to_vec())
}

pub fn synth(a: &SynthArgs) -> Outcome {
    let spec = read_spec(&a.spec)?;
    let fixture = generate(&spec).map_err(|e| Failure::Data(format!("{}: {e}", a.spec.display())))?;
    let files = write_fixture(&fixture, &a.out_dir, a.format.extension())?;
    Ok(json!({
        "files": files,
        "foreground": fixture.seg_gt.count(),
        "occluded": fixture.occluded_gt.count(),
    }))
}

pub fn pipeline(a: &PipelineArgs) -> Outcome {
    let spec = match &a.spec {
        Some(p) => read_spec(p)?,
        None => random_scene(a.seed),
    };
    let thresholds = a.th.thresholds();
    thresholds.validate()?;
    let cfg = PipelineConfig {
        thresholds,
        offset_px: a.offset,
        bleed_px: a.bleed,
        perturb_seed: a.perturb_seed,
        focal: a.camera.focal,
        baseline: a.camera.baseline,
        eval: edgemorph::eval::EvalConfig { cap: a.cap, crop: a.crop.into(), median_scale: false },
    };
    let run = run_pipeline(&spec, &cfg)?;
    if let Some(dir) = &a.out_dir {
        write_fixture(&run.fixture, dir, "png")?;
        write_pfm(&run.perturbed, dir.join("perturbed.pfm"))?;
        write_pfm(&run.morphed, dir.join("morphed.pfm"))?;
    }
    Ok(to_json(run.report))
}
