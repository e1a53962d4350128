//! Depth evaluation: the seven standard metrics, cropping and capping,
//! near-edge region splits and accuracy-versus-edge-distance profiles.

use serde::{Deserialize, Serialize};

use crate::edges::{distance_transform, EdgeSet};
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ScalarMap, Unit};
use crate::scalar::{CompensatedSum, Real};

pub use crate::edges::edge_count;

/// Floor applied to predictions before any metric.
pub const PRED_FLOOR: f64 = 1e-3;
pub const DEFAULT_CAP: f64 = 80.0;

const GARG_ROWS: (f64, f64) = (0.40810811, 0.99189189);
const GARG_COLS: (f64, f64) = (0.03594771, 0.96405229);

/// One row of the metric table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub name: String,
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    /// Fraction with `max(pred/gt, gt/pred) < 1.25`.
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    /// Number of evaluated pixels.
    #[serde(default)]
    pub n_pixels: usize,
}

impl MetricRow {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// The seven metric values in table order.
    pub fn values(&self) -> [f64; 7] {
        [self.abs_rel, self.sq_rel, self.rmse, self.rmse_log, self.d1, self.d2, self.d3]
    }

    /// Whether every metric is at least as good as in `other`: errors no
    /// larger, accuracies no smaller.
    pub fn no_worse_than(&self, other: &MetricRow) -> bool {
        let (a, b) = (self.values(), other.values());
        (0..4).all(|i| a[i] <= b[i]) && (4..7).all(|i| a[i] >= b[i])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crop {
    #[default]
    None,
    Garg,
}

impl Crop {
    /// Half-open `(rows, cols)` ranges kept by the crop.
    pub fn bounds(self, width: usize, height: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        match self {
            Crop::None => (0..height, 0..width),
            Crop::Garg => {
                let (h, w) = (height as f64, width as f64);
                // Never include row 0 or the last column.
                let r0 = ((GARG_ROWS.0 * h) as usize).max(1);
                let r1 = ((GARG_ROWS.1 * h) as usize).min(height);
                let c0 = (GARG_COLS.0 * w) as usize;
                let c1 = ((GARG_COLS.1 * w) as usize).min(width.saturating_sub(1));
                (r0..r1.max(r0), c0..c1.max(c0))
            }
        }
    }
}

/// Options shared by all metric evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub cap: f64,
    pub crop: Crop,
    /// Rescale predictions by `median(gt) / median(pred)` over the valid set.
    pub median_scale: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { cap: DEFAULT_CAP, crop: Crop::Garg, median_scale: false }
    }
}

fn check_inputs<T: Real>(pred: &ScalarMap<T>, gt: &ScalarMap<T>, cap: f64) -> Result<()> {
    pred.expect_unit(Unit::DepthM)?;
    gt.expect_unit(Unit::DepthM)?;
    pred.ensure_same_shape(gt)?;
    if !(cap.is_finite() && cap > PRED_FLOOR) {
        return Err(Error::InvalidParameter { name: "cap", reason: format!("must exceed {PRED_FLOOR}") });
    }
    Ok(())
}

/// `(pred, gt)` pairs that take part in the evaluation, row-major.
fn valid_pairs<T: Real>(
    pred: &ScalarMap<T>,
    gt: &ScalarMap<T>,
    cap: f64,
    crop: Crop,
    mask: Option<&BinaryMask>,
) -> Result<Vec<(f64, f64)>> {
    if let Some(m) = mask {
        m.ensure_same_shape(gt.shape())?;
    }
    let (rows, cols) = crop.bounds(gt.width(), gt.height());
    let mut out = Vec::new();
    for y in rows {
        for x in cols.clone() {
            let g = gt.at(x, y).as_f64();
            if g > 0.0 && g <= cap && mask.is_none_or(|m| m.at(x, y)) {
                out.push((pred.at(x, y).as_f64(), g));
            }
        }
    }
    Ok(out)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn metrics_of(pairs: &[(f64, f64)], cap: f64) -> Result<MetricRow> {
    if pairs.is_empty() {
        return Err(Error::NoValidPixels);
    }
    let mut sums: [CompensatedSum; 7] = Default::default();
    for &(p, g) in pairs {
        let p = p.clamp(PRED_FLOOR, cap);
        let diff = p - g;
        let log_diff = p.ln() - g.ln();
        let ratio = (p / g).max(g / p);
        let vals = [
            diff.abs() / g,
            diff * diff / g,
            diff * diff,
            log_diff * log_diff,
            f64::from(u8::from(ratio < 1.25)),
            f64::from(u8::from(ratio < 1.25 * 1.25)),
            f64::from(u8::from(ratio < 1.25 * 1.25 * 1.25)),
        ];
        for (s, v) in sums.iter_mut().zip(vals) {
            s.add(v);
        }
    }
    let n = pairs.len() as f64;
    let m: Vec<f64> = sums.iter().map(|s| s.value() / n).collect();
    Ok(MetricRow {
        name: String::new(),
        abs_rel: m[0],
        sq_rel: m[1],
        rmse: m[2].sqrt(),
        rmse_log: m[3].sqrt(),
        d1: m[4],
        d2: m[5],
        d3: m[6],
        n_pixels: pairs.len(),
    })
}

/// Seven-metric row over pixels with `gt` in `(0, cap]`, inside the crop
/// and, when given, inside `mask`. Predictions are clamped to `[1e-3, cap]`.
pub fn depth_metrics<T: Real>(
    pred: &ScalarMap<T>,
    gt: &ScalarMap<T>,
    cap: f64,
    crop: Crop,
    mask: Option<&BinaryMask>,
) -> Result<MetricRow> {
    depth_metrics_with(pred, gt, &EvalConfig { cap, crop, median_scale: false }, mask)
}

pub fn depth_metrics_with<T: Real>(
    pred: &ScalarMap<T>,
    gt: &ScalarMap<T>,
    cfg: &EvalConfig,
    mask: Option<&BinaryMask>,
) -> Result<MetricRow> {
    check_inputs(pred, gt, cfg.cap)?;
    let mut pairs = valid_pairs(pred, gt, cfg.cap, cfg.crop, mask)?;
    if cfg.median_scale && !pairs.is_empty() {
        let mp = median(pairs.iter().map(|p| p.0).collect());
        let mg = median(pairs.iter().map(|p| p.1).collect());
        if mp > 0.0 {
            let s = mg / mp;
            pairs.iter_mut().for_each(|p| p.0 *= s);
        }
    }
    metrics_of(&pairs, cfg.cap)
}

/// Width of the near-edge band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSplit {
    pub near_band_px: f64,
}

impl Default for RegionSplit {
    fn default() -> Self {
        Self { near_band_px: 3.0 }
    }
}

impl RegionSplit {
    pub fn validate(&self) -> Result<()> {
        if !(self.near_band_px.is_finite() && self.near_band_px > 0.0) {
            return Err(Error::InvalidParameter { name: "near_band_px", reason: "must be positive".into() });
        }
        Ok(())
    }

    /// Pixels within the band of some edge; empty when there are no edges.
    pub fn near_mask(&self, edges: &EdgeSet) -> Result<BinaryMask> {
        self.validate()?;
        let (w, h) = edges.shape();
        if edges.is_empty() {
            return BinaryMask::new(w, h, false);
        }
        let dist: ScalarMap<f64> = distance_transform(edges)?;
        BinaryMask::from_vec(w, h, dist.data().iter().map(|&d| d <= self.near_band_px).collect())
    }
}

/// Off-edge, whole-image and near-edge rows; a region with no valid
/// pixels is `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionRows {
    pub off_edge: Option<MetricRow>,
    pub whole: Option<MetricRow>,
    pub near_edge: Option<MetricRow>,
}

impl RegionRows {
    pub fn rows(&self) -> Vec<MetricRow> {
        [&self.off_edge, &self.whole, &self.near_edge].into_iter().flatten().cloned().collect()
    }
}

fn optional(row: Result<MetricRow>, name: &str) -> Result<Option<MetricRow>> {
    match row {
        Ok(r) => Ok(Some(r.named(name))),
        Err(Error::NoValidPixels) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn region_split_metrics<T: Real>(
    pred: &ScalarMap<T>,
    gt: &ScalarMap<T>,
    seg_edges: &EdgeSet,
    split: &RegionSplit,
    cfg: &EvalConfig,
) -> Result<RegionRows> {
    check_inputs(pred, gt, cfg.cap)?;
    if seg_edges.shape() != gt.shape() {
        return Err(Error::ShapeMismatch { left: gt.shape(), right: seg_edges.shape() });
    }
    let near = split.near_mask(seg_edges)?;
    let off = near.not();
    Ok(RegionRows {
        off_edge: optional(depth_metrics_with(pred, gt, cfg, Some(&off)), "off_edge")?,
        whole: optional(depth_metrics_with(pred, gt, cfg, None), "whole")?,
        near_edge: optional(depth_metrics_with(pred, gt, cfg, Some(&near)), "near_edge")?,
    })
}

/// Signed distance to the nearest segmentation edge: positive inside the
/// foreground, negative outside. Without edges every pixel sits at
/// `+-(width + height)`.
pub fn signed_edge_distance(seg_edges: &EdgeSet, seg: &BinaryMask) -> Result<ScalarMap<f64>> {
    seg.ensure_same_shape(seg_edges.shape())?;
    let (w, h) = seg.shape();
    let dist: ScalarMap<f64> = if seg_edges.is_empty() {
        ScalarMap::new(w, h, (w + h) as f64, Unit::Unitless)?
    } else {
        distance_transform(seg_edges)?
    };
    ScalarMap::from_fn(w, h, Unit::Unitless, |x, y| {
        let d = dist.at(x, y);
        if seg.at(x, y) {
            d
        } else {
            -d
        }
    })
}

/// One bin of an accuracy profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub offset: i64,
    pub n_pixels: usize,
    /// `delta < 1.25` ratio; `None` for an empty bin.
    pub delta1: Option<f64>,
}

/// `delta < 1.25` per integer signed distance; a pixel belongs to bin `k`
/// when its signed distance rounds to `k`.
pub fn delta_profile<T: Real>(
    pred: &ScalarMap<T>,
    gt: &ScalarMap<T>,
    seg_edges: &EdgeSet,
    seg: &BinaryMask,
    bins: &[i64],
    cap: f64,
) -> Result<Vec<ProfileBin>> {
    check_inputs(pred, gt, cap)?;
    let sd = signed_edge_distance(seg_edges, seg)?;
    let (w, h) = gt.shape();
    let mut hits = vec![(0usize, 0usize); bins.len()];
    for y in 0..h {
        for x in 0..w {
            let g = gt.at(x, y).as_f64();
            if !(g > 0.0 && g <= cap) {
                continue;
            }
            let bin = sd.at(x, y).round() as i64;
            let Some(i) = bins.iter().position(|&b| b == bin) else { continue };
            let p = pred.at(x, y).as_f64().clamp(PRED_FLOOR, cap);
            hits[i].0 += 1;
            if (p / g).max(g / p) < 1.25 {
                hits[i].1 += 1;
            }
        }
    }
    Ok(bins
        .iter()
        .zip(hits)
        .map(|(&offset, (n, good))| ProfileBin {
            offset,
            n_pixels: n,
            delta1: (n > 0).then(|| good as f64 / n as f64),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edges::segmentation_edges;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn depth(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> ScalarMap<f64> {
        ScalarMap::from_fn(w, h, Unit::DepthM, f).unwrap()
    }

    /// Plain double loop, no clamping shortcuts shared with the implementation.
    fn naive(pred: &ScalarMap<f64>, gt: &ScalarMap<f64>, cap: f64) -> [f64; 7] {
        let mut acc = [0.0; 7];
        let mut n = 0.0;
        for y in 0..gt.height() {
            for x in 0..gt.width() {
                let g = gt.at(x, y);
                if g <= 0.0 || g > cap {
                    continue;
                }
                let p = pred.at(x, y).max(1e-3).min(cap);
                n += 1.0;
                acc[0] += (p - g).abs() / g;
                acc[1] += (p - g).powi(2) / g;
                acc[2] += (p - g).powi(2);
                acc[3] += (p.ln() - g.ln()).powi(2);
                let r = if p > g { p / g } else { g / p };
                acc[4] += if r < 1.25 { 1.0 } else { 0.0 };
                acc[5] += if r < 1.5625 { 1.0 } else { 0.0 };
                acc[6] += if r < 1.953125 { 1.0 } else { 0.0 };
            }
        }
        let mut m = acc.map(|a| a / n);
        m[2] = m[2].sqrt();
        m[3] = m[3].sqrt();
        m
    }

    #[test]
    fn perfect_prediction() {
        let gt = depth(6, 5, |x, y| 1.0 + x as f64 + 0.3 * y as f64);
        let row = depth_metrics(&gt, &gt, 80.0, Crop::None, None).unwrap();
        assert_eq!(row.values(), [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn exact_ratio_is_not_inside_first_threshold() {
        let gt = depth(4, 4, |x, y| 2.0 + (x + 4 * y) as f64 * 0.5);
        let pred = depth(4, 4, |x, y| 1.25 * gt.at(x, y));
        let row = depth_metrics(&pred, &gt, 80.0, Crop::None, None).unwrap();
        assert_eq!(row.abs_rel, 0.25);
        assert_eq!((row.d1, row.d2, row.d3), (0.0, 1.0, 1.0));
    }

    #[test]
    fn matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (w, h) = (rng.gen_range(1..=32), rng.gen_range(1..=32));
            let gt = depth(w, h, |_, _| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.5..90.0) });
            let pred = depth(w, h, |_, _| rng.gen_range(0.0..100.0));
            let want = naive(&pred, &gt, 80.0);
            let Ok(row) = depth_metrics(&pred, &gt, 80.0, Crop::None, None) else { continue };
            for (a, b) in row.values().iter().zip(want) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
            assert!(row.d1 <= row.d2 && row.d2 <= row.d3);
        }
    }

    #[test]
    fn no_valid_pixels_is_error() {
        let gt = depth(3, 3, |_, _| 0.0);
        assert!(matches!(depth_metrics(&gt, &gt, 80.0, Crop::None, None), Err(Error::NoValidPixels)));
        let far = depth(3, 3, |_, _| 100.0);
        assert!(depth_metrics(&far, &far, 80.0, Crop::None, None).is_err());
    }

    #[test]
    fn requires_depth_units() {
        let d = ScalarMap::new(3, 3, 1.0, Unit::DisparityPx).unwrap();
        assert!(matches!(depth_metrics(&d, &d, 80.0, Crop::None, None), Err(Error::UnitMismatch { .. })));
    }

    #[test]
    fn garg_crop_is_interior() {
        for (w, h) in [(1242, 375), (10, 3), (2, 2), (1, 1), (37, 100)] {
            let (rows, cols) = Crop::Garg.bounds(w, h);
            assert!(rows.start >= 1 || rows.is_empty());
            assert!(cols.end < w || cols.is_empty());
        }
        let (rows, cols) = Crop::Garg.bounds(1242, 375);
        assert_eq!((rows.start, rows.end, cols.start, cols.end), (153, 371, 44, 1197));
    }

    #[test]
    fn median_scaling_removes_global_scale() {
        let gt = depth(5, 5, |x, y| 3.0 + (x * 5 + y) as f64);
        let pred = depth(5, 5, |x, y| 0.5 * gt.at(x, y));
        let cfg = EvalConfig { crop: Crop::None, median_scale: true, ..Default::default() };
        let row = depth_metrics_with(&pred, &gt, &cfg, None).unwrap();
        assert!(row.abs_rel < 1e-12);
    }

    fn square_seg(w: usize, h: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| (10..20).contains(&x) && (8..16).contains(&y)).unwrap()
    }

    #[test]
    fn no_edges_means_no_near_region() {
        let gt = depth(16, 8, |x, _| 2.0 + x as f64);
        let rows =
            region_split_metrics(&gt, &gt, &EdgeSet::empty(16, 8), &RegionSplit::default(), &EvalConfig { crop: Crop::None, ..Default::default() })
                .unwrap();
        assert!(rows.near_edge.is_none());
        assert_eq!(rows.off_edge.unwrap().values(), rows.whole.unwrap().values());
    }

    #[test]
    fn near_edge_errors_show_up_near() {
        let seg = square_seg(30, 24);
        let edges = segmentation_edges(&seg, 0.11).unwrap();
        let near = RegionSplit::default().near_mask(&edges).unwrap();
        let gt = depth(30, 24, |x, y| if seg.at(x, y) { 10.0 } else { 30.0 });
        let pred = depth(30, 24, |x, y| if near.at(x, y) { gt.at(x, y) * 1.4 } else { gt.at(x, y) });
        let cfg = EvalConfig { crop: Crop::None, ..Default::default() };
        let rows = region_split_metrics(&pred, &gt, &edges, &RegionSplit::default(), &cfg).unwrap();
        assert_eq!(rows.rows().len(), 3);
        assert!(rows.near_edge.unwrap().abs_rel > rows.off_edge.unwrap().abs_rel);
    }

    #[test]
    fn profile_perfect_and_dip() {
        let seg = square_seg(40, 30);
        let edges = segmentation_edges(&seg, 0.11).unwrap();
        let sd = signed_edge_distance(&edges, &seg).unwrap();
        let gt = depth(40, 30, |x, y| if seg.at(x, y) { 10.0 } else { 30.0 });
        let bins: Vec<i64> = (-8..=4).collect();
        let perfect = delta_profile(&gt, &gt, &edges, &seg, &bins, 80.0).unwrap();
        assert!(perfect.iter().all(|b| b.delta1.is_none_or(|v| v == 1.0)));
        let pred = depth(40, 30, |x, y| {
            let s = sd.at(x, y).round();
            if (-6.0..=-4.0).contains(&s) { gt.at(x, y) * 2.0 } else { gt.at(x, y) }
        });
        let prof = delta_profile(&pred, &gt, &edges, &seg, &bins, 80.0).unwrap();
        let worst = prof.iter().filter(|b| b.delta1.is_some()).min_by(|a, b| a.delta1.partial_cmp(&b.delta1).unwrap()).unwrap();
        assert!((-6..=-4).contains(&worst.offset));
        let at5 = prof.iter().find(|b| b.offset == -5).unwrap();
        assert_eq!(at5.delta1, Some(0.0));
        // A bin nobody falls into is absent, not zero.
        assert!(delta_profile(&gt, &gt, &edges, &seg, &[100], 80.0).unwrap()[0].delta1.is_none());
    }

    #[test]
    fn full_foreground_is_all_positive() {
        let seg = BinaryMask::new(8, 6, true).unwrap();
        let edges = segmentation_edges(&seg, 0.11).unwrap();
        let sd = signed_edge_distance(&edges, &seg).unwrap();
        assert!(sd.data().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn sharp_step_has_fewer_edges_than_blur() {
        let sharp = ScalarMap::from_fn(40, 4, Unit::DisparityPx, |x, _| if x < 20 { 0.0 } else { 1.0 }).unwrap();
        let blurred = ScalarMap::from_fn(40, 4, Unit::DisparityPx, |x, _| ((x as f64 - 17.0) / 6.0).clamp(0.0, 1.0)).unwrap();
        let (a, b) = (edge_count(&sharp, 0.05).unwrap(), edge_count(&blurred, 0.05).unwrap());
        assert!(a < b, "{a} vs {b}");
        assert_eq!(edge_count(&ScalarMap::new(5, 5, 2.0, Unit::DisparityPx).unwrap(), 0.11).unwrap(), 0);
    }
}
