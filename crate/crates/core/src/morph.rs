//! Line-pair morphing of disparity maps toward segmentation edges.
//!
//! Each association `(q, p)` defines a point morph `phi(x | q, p)` that sends
//! `q` onto `p` and compresses the neighbourhood along `q -> p` by
//! `t / (1 + t)`. The blended morph `g` mixes the displacements
//! `phi_i(x) - x` of all pairs near `x` with relative weights `w(d_i)`
//! (normalized) and absolute locality gates `h(d_i)`, where `d_i` is the
//! distance from `x` to the segment `q_i p_i` in units of
//! `distance_scale` pixels. The morphed map is sampled backwards:
//! `I*(x) = I(g(x))`, so the depth value found at `p` lands on `q`.
//!
//! Pairs whose gate `h` has fallen below [`NEGLIGIBLE_GATE`] are ignored,
//! both in the weighted sum and in its normalization. That cut-off is what
//! keeps the cost linear in the number of pixels near edges.

use rayon::prelude::*;

use crate::edges::{
    associate_edges, consistency_against, extract_edges, gradient_magnitude, segmentation_edges, PairSet,
};
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, PixelCoord, Point2, ScalarMap, Unit};
use crate::params::Thresholds;
use crate::sample::bilinear;
use crate::scalar::Real;

/// Gate value below which a pair does not take part in the blend.
pub const NEGLIGIBLE_GATE: f64 = 1e-3;

/// Orthogonal projection of `x` onto the line through `q` and `p`.
pub fn project_onto_pair<T: Real>(x: Point2<T>, q: Point2<T>, p: Point2<T>) -> Result<Point2<T>> {
    let qp = p - q;
    let len = qp.norm();
    if len == T::zero() {
        return Err(Error::DegeneratePair);
    }
    let u = qp * (T::one() / len);
    Ok(q + u * (x - q).dot(u))
}

/// Point morph `phi(x | q, p) = x + (p - q) - (x' - q) / (1 + t)`.
pub fn point_morph<T: Real>(x: Point2<T>, q: Point2<T>, p: Point2<T>, t: T) -> Result<Point2<T>> {
    let xp = project_onto_pair(x, q, p)?;
    Ok(x + (p - q) - (xp - q) * (T::one() / (T::one() + t)))
}

/// Locality gate `h(d) = sigmoid(-m1 (d - m2))`.
#[inline]
pub fn weight_h<T: Real>(d: T, m1: T, m2: T) -> T {
    T::one() / (T::one() + (m1 * (d - m2)).exp())
}

/// Relative weight `w(d) = (1 / (m3 + d))^m4`.
#[inline]
pub fn weight_w<T: Real>(d: T, m3: T, m4: T) -> T {
    (T::one() / (m3 + d)).powf(m4)
}

/// Distance from `x` to the closed segment `[q, p]`.
pub fn segment_distance<T: Real>(x: Point2<T>, q: Point2<T>, p: Point2<T>) -> T {
    let qp = p - q;
    let len_sq = qp.norm_sq();
    if len_sq == T::zero() {
        return x.dist(q);
    }
    let s = ((x - q).dot(qp) / len_sq).max(T::zero()).min(T::one());
    x.dist(q + qp * s)
}

/// Scaled distance beyond which `h` drops under [`NEGLIGIBLE_GATE`].
///
/// Infinite when `h` does not decay (`m1 <= 0`).
pub fn locality_horizon(th: &Thresholds) -> f64 {
    if th.m1 <= 0.0 {
        return f64::INFINITY;
    }
    th.m2 + ((1.0 - NEGLIGIBLE_GATE) / NEGLIGIBLE_GATE).ln() / th.m1
}

#[derive(Clone, Copy, Debug)]
struct PairGeom {
    q: Point2<f64>,
    p: Point2<f64>,
}

/// Pair geometry plus a bucket grid so each pixel only visits nearby pairs.
struct Blender {
    pairs: Vec<PairGeom>,
    t: f64,
    m1: f64,
    m2: f64,
    m3: f64,
    m4: f64,
    scale: f64,
    horizon: f64,
    bucket: usize,
    buckets_x: usize,
    buckets_y: usize,
    /// Pair indices per bucket, ascending.
    grid: Vec<Vec<u32>>,
}

impl Blender {
    fn new(width: usize, height: usize, pairs: &PairSet, th: &Thresholds) -> Self {
        let geoms: Vec<PairGeom> = pairs
            .iter()
            .filter(|e| !e.is_degenerate())
            .map(|e| PairGeom { q: e.q.to_point(), p: e.p.to_point() })
            .collect();
        let horizon = locality_horizon(th);
        let reach = horizon * th.distance_scale;
        let bucket = if reach.is_finite() { (reach.ceil() as usize).clamp(8, 4096) } else { width.max(height) };
        let buckets_x = width.div_ceil(bucket);
        let buckets_y = height.div_ceil(bucket);
        let mut grid = vec![Vec::new(); buckets_x * buckets_y];
        for (i, g) in geoms.iter().enumerate() {
            let (lo_x, hi_x, lo_y, hi_y) = if reach.is_finite() {
                (
                    g.q.x.min(g.p.x) - reach,
                    g.q.x.max(g.p.x) + reach,
                    g.q.y.min(g.p.y) - reach,
                    g.q.y.max(g.p.y) + reach,
                )
            } else {
                (0.0, width as f64, 0.0, height as f64)
            };
            let bx0 = (lo_x.max(0.0) / bucket as f64) as usize;
            let by0 = (lo_y.max(0.0) / bucket as f64) as usize;
            let bx1 = ((hi_x.max(0.0) / bucket as f64) as usize).min(buckets_x - 1);
            let by1 = ((hi_y.max(0.0) / bucket as f64) as usize).min(buckets_y - 1);
            for by in by0..=by1 {
                for bx in bx0..=bx1 {
                    grid[by * buckets_x + bx].push(i as u32);
                }
            }
        }
        Self {
            pairs: geoms,
            t: th.t,
            m1: th.m1,
            m2: th.m2,
            m3: th.m3,
            m4: th.m4,
            scale: th.distance_scale,
            horizon,
            bucket,
            buckets_x,
            buckets_y,
            grid,
        }
    }

    /// `g(x)` over the given candidate pairs, visited in index order.
    fn blend(&self, x: Point2<f64>, candidates: impl Iterator<Item = usize>) -> Point2<f64> {
        let mut num = Point2::new(0.0, 0.0);
        let mut den = 0.0;
        for i in candidates {
            let g = self.pairs[i];
            let d = segment_distance(x, g.q, g.p) / self.scale;
            if d.is_nan() || d >= self.horizon {
                continue;
            }
            let w = weight_w(d, self.m3, self.m4);
            let h = weight_h(d, self.m1, self.m2);
            let phi = point_morph(x, g.q, g.p, self.t).expect("degenerate pairs filtered");
            num = num + (phi - x) * (w * h);
            den += w;
        }
        if den > 0.0 {
            x + num * (1.0 / den)
        } else {
            x
        }
    }

    fn at(&self, x: Point2<f64>) -> Point2<f64> {
        if self.pairs.is_empty() {
            return x;
        }
        if x.x < 0.0 || x.y < 0.0 {
            return self.blend(x, 0..self.pairs.len());
        }
        let bx = (x.x as usize / self.bucket).min(self.buckets_x - 1);
        let by = (x.y as usize / self.bucket).min(self.buckets_y - 1);
        let cell = &self.grid[by * self.buckets_x + bx];
        self.blend(x, cell.iter().map(|&i| i as usize))
    }
}

/// Blended morph `g(x)` of a single point over all pairs.
///
/// Degenerate pairs (`q == p`) are skipped; an empty pair set is the identity.
pub fn blended_morph(x: Point2<f64>, pairs: &PairSet, th: &Thresholds) -> Point2<f64> {
    let pairs_geom: Vec<_> = pairs.iter().filter(|e| !e.is_degenerate()).collect();
    if pairs_geom.is_empty() {
        return x;
    }
    // Unbucketed evaluation; the bucketed field visits the same pairs in the same order.
    let blender = Blender::new(1, 1, pairs, th);
    blender.blend(x, 0..blender.pairs.len())
}

/// Normalized relative weights `w_i / sum_j w_j` at `x` over the pairs
/// that are within the locality horizon.
pub fn relative_weights(x: Point2<f64>, pairs: &PairSet, th: &Thresholds) -> Vec<f64> {
    let horizon = locality_horizon(th);
    let ws: Vec<f64> = pairs
        .iter()
        .filter(|e| !e.is_degenerate())
        .filter_map(|e| {
            let d = segment_distance(x, e.q.to_point(), e.p.to_point()) / th.distance_scale;
            (d < horizon).then(|| weight_w(d, th.m3, th.m4))
        })
        .collect();
    let total: f64 = ws.iter().sum();
    ws.into_iter().map(|w| w / total).collect()
}

/// Per-pixel source coordinates of a morphed map.
#[derive(Clone, Debug, PartialEq)]
pub struct MorphField {
    width: usize,
    height: usize,
    sample_at: Vec<Point2<f64>>,
}

impl MorphField {
    pub fn identity(width: usize, height: usize) -> Self {
        let sample_at =
            (0..height).flat_map(|y| (0..width).map(move |x| Point2::new(x as f64, y as f64))).collect();
        Self { width, height, sample_at }
    }

    /// Evaluates `g` at every pixel centre. Rows are computed in parallel;
    /// each pixel is independent so the result does not depend on scheduling.
    pub fn build(width: usize, height: usize, pairs: &PairSet, th: &Thresholds) -> Result<Self> {
        th.validate()?;
        for e in pairs {
            for c in [e.q, e.p] {
                if c.x >= width || c.y >= height {
                    return Err(Error::OutOfBounds { x: c.x, y: c.y, width, height });
                }
            }
        }
        let blender = Blender::new(width, height, pairs, th);
        let sample_at = (0..height)
            .into_par_iter()
            .flat_map_iter(|y| {
                let blender = &blender;
                (0..width).map(move |x| blender.at(Point2::new(x as f64, y as f64)))
            })
            .collect();
        Ok(Self { width, height, sample_at })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn sample_at(&self, x: usize, y: usize) -> Point2<f64> {
        self.sample_at[y * self.width + x]
    }

    pub fn displacement(&self, x: usize, y: usize) -> Point2<f64> {
        self.sample_at(x, y) - Point2::new(x as f64, y as f64)
    }

    pub fn is_identity_at(&self, x: usize, y: usize) -> bool {
        self.displacement(x, y) == Point2::new(0.0, 0.0)
    }

    /// Backward-samples `map` through the field with bilinear interpolation
    /// and border clamping.
    pub fn apply<T: Real>(&self, map: &ScalarMap<T>) -> Result<ScalarMap<T>> {
        if map.shape() != self.shape() {
            return Err(Error::ShapeMismatch { left: map.shape(), right: self.shape() });
        }
        let data = self.sample_at.iter().map(|s| bilinear(map, s.x, s.y)).collect();
        ScalarMap::from_vec(self.width, self.height, data, map.unit())
    }
}

fn expect_disparity<T: Real>(disp: &ScalarMap<T>) -> Result<()> {
    match disp.unit() {
        Unit::DepthM | Unit::Intensity => Err(Error::UnitMismatch { expected: Unit::DisparityPx, found: disp.unit() }),
        _ => Ok(()),
    }
}

/// Segmentation-augmented disparity: `I*(x) = I(g(x))`.
///
/// An empty pair set returns an exact copy.
pub fn morph_disparity<T: Real>(disp: &ScalarMap<T>, pairs: &PairSet, th: &Thresholds) -> Result<ScalarMap<T>> {
    expect_disparity(disp)?;
    if pairs.is_empty() {
        th.validate()?;
        return Ok(disp.clone());
    }
    MorphField::build(disp.width(), disp.height(), pairs, th)?.apply(disp)
}

/// Outcome of one extract-associate-morph round.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalityReport {
    pub n_pairs: usize,
    /// Consistency of the gated segmentation points before the morph.
    pub lc_before: f64,
    /// Consistency of the same points against the morphed edges, detected
    /// at `t / (1 + t) * k1`.
    pub lc_after: f64,
    /// Gradient magnitude at `q` in the morphed map over the gradient at
    /// `p` in the original, one sample per non-degenerate pair.
    pub gradient_ratio_samples: Vec<f64>,
}

impl OptimalityReport {
    pub fn mean_gradient_ratio(&self) -> Option<f64> {
        crate::scalar::mean(self.gradient_ratio_samples.iter().copied())
    }
}

/// Morphs `disp` with explicit pairs and reports consistency before/after
/// together with the gradient ratios at the pairs.
pub fn local_optimality_with_pairs<T: Real>(
    disp: &ScalarMap<T>,
    pairs: &PairSet,
    th: &Thresholds,
) -> Result<(ScalarMap<T>, OptimalityReport)> {
    let lc_before = pairs.mean_distance().ok_or(Error::NoAssociatedEdges)?;
    let morphed = morph_disparity(disp, pairs, th)?;
    let morphed_edges = extract_edges(&morphed, th.morphed_edge_threshold())?;
    let lc_after = consistency_against(pairs.segmentation_points(), &morphed_edges)?;
    let grad_before = gradient_magnitude(disp)?;
    let grad_after = gradient_magnitude(&morphed)?;
    let gradient_ratio_samples = pairs
        .iter()
        .filter(|e| !e.is_degenerate())
        .filter_map(|e| {
            let at_p = grad_before.at(e.p.x, e.p.y).as_f64();
            (at_p > 0.0).then(|| grad_after.at(e.q.x, e.q.y).as_f64() / at_p)
        })
        .collect();
    Ok((morphed, OptimalityReport { n_pairs: pairs.len(), lc_before, lc_after, gradient_ratio_samples }))
}

/// Extracts segmentation and disparity edges, associates them, morphs once
/// and reports the change in consistency.
pub fn check_local_optimality<T: Real>(
    disp: &ScalarMap<T>,
    seg: &BinaryMask,
    th: &Thresholds,
) -> Result<OptimalityReport> {
    th.validate()?;
    seg.ensure_same_shape(disp.shape())?;
    let seg_edges = segmentation_edges(seg, th.k1)?;
    let depth_edges = extract_edges(disp, th.k1)?;
    let pairs = associate_edges(&seg_edges, &depth_edges, th.k2)?;
    if pairs.is_empty() {
        return Err(Error::NoAssociatedEdges);
    }
    Ok(local_optimality_with_pairs(disp, &pairs, th)?.1)
}

/// Pixel coordinates of the pairs' segmentation points.
pub fn pair_targets(pairs: &PairSet) -> Vec<PixelCoord> {
    pairs.segmentation_points().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn pc(x: usize, y: usize) -> PixelCoord {
        PixelCoord::new(x, y)
    }

    fn close(a: Point2<f64>, b: Point2<f64>, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn projection_examples() {
        let (q, p) = (pt(0.0, 0.0), pt(2.0, 0.0));
        assert_eq!(project_onto_pair(pt(0.0, 3.0), q, p).unwrap(), pt(0.0, 0.0));
        assert_eq!(project_onto_pair(q, q, p).unwrap(), q);
        assert_eq!(project_onto_pair(pt(1.0, 1.0), q, p).unwrap(), pt(1.0, 0.0));
        assert!(matches!(project_onto_pair(pt(1.0, 1.0), q, q), Err(Error::DegeneratePair)));
    }

    #[test]
    fn point_morph_examples() {
        let (q, p) = (pt(0.0, 0.0), pt(2.0, 0.0));
        for t in [0.5, 1.0, 3.0] {
            assert_eq!(point_morph(q, q, p, t).unwrap(), p);
        }
        assert_eq!(point_morph(pt(0.0, 2.0), q, p, 1.0).unwrap(), pt(2.0, 2.0));
        assert_eq!(point_morph(p, q, p, 1.0).unwrap(), pt(3.0, 0.0));
        assert!(point_morph(q, q, q, 1.0).is_err());
    }

    #[test]
    fn point_morph_generic_f32() {
        let r = point_morph(Point2::new(0.0f32, 2.0), Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), 1.0).unwrap();
        assert_eq!(r, Point2::new(2.0f32, 2.0));
    }

    #[test]
    fn weight_h_examples() {
        assert_eq!(weight_h(0.7, 17.0, 0.7), 0.5);
        let oracle = 1.0 / (1.0 + (-11.9f64).exp());
        assert!((weight_h(0.0f64, 17.0, 0.7) - 0.9999932).abs() < 1e-6);
        assert!((weight_h(0.0, 17.0, 0.7) - oracle).abs() < 1e-15);
        assert_eq!(weight_h(1e6, 17.0, 0.7), 0.0);
        assert!(weight_h(1.0, 17.0, 0.7) < weight_h(0.9, 17.0, 0.7));
    }

    #[test]
    fn weight_w_examples() {
        assert_eq!(weight_w(0.0, 1.0, 1.0), 1.0);
        assert!((weight_w(0.0f64, 1.6, 1.9) - 0.4091).abs() < 1e-3);
        assert!(weight_w(1.0, 1.6, 1.9) > weight_w(2.0, 1.6, 1.9));
    }

    #[test]
    fn segment_distance_examples() {
        let (q, p) = (pt(0.0, 0.0), pt(2.0, 0.0));
        assert_eq!(segment_distance(pt(1.0, 1.0), q, p), 1.0);
        assert_eq!(segment_distance(pt(-3.0, 4.0), q, p), 5.0);
        assert_eq!(segment_distance(pt(1.5, 0.0), q, p), 0.0);
        assert_eq!(segment_distance(pt(3.0, 4.0), q, q), 5.0);
    }

    #[test]
    fn blend_identity_without_pairs() {
        let th = Thresholds::default();
        assert_eq!(blended_morph(pt(3.0, 4.0), &PairSet::new(), &th), pt(3.0, 4.0));
        let self_pairs = PairSet::from_pairs([(pc(1, 1), pc(1, 1))]);
        assert_eq!(blended_morph(pt(1.0, 1.0), &self_pairs, &th), pt(1.0, 1.0));
    }

    #[test]
    fn blend_single_pair_at_q_reaches_p() {
        let th = Thresholds::default();
        let pairs = PairSet::from_pairs([(pc(0, 0), pc(2, 0))]);
        let g = blended_morph(pt(0.0, 0.0), &pairs, &th);
        assert!(close(g, pt(2.0, 0.0), 1e-4));
    }

    #[test]
    fn blend_far_point_is_fixed() {
        let th = Thresholds::default();
        let pairs = PairSet::from_pairs([(pc(0, 0), pc(2, 0))]);
        let x = pt(0.0, 50.0);
        assert!(close(blended_morph(x, &pairs, &th), x, 1e-9));
    }

    #[test]
    fn blend_reduces_to_point_morph_when_gate_open() {
        // Moving the gate midpoint far out makes h = 1 at any reachable distance.
        let th = Thresholds { m1: 1.0, m2: 1e6, ..Default::default() };
        let (q, p) = (pc(3, 4), pc(7, 1));
        let pairs = PairSet::from_pairs([(q, p)]);
        for x in [pt(0.0, 0.0), pt(5.5, 2.0), pt(10.0, 9.0)] {
            let g = blended_morph(x, &pairs, &th);
            let phi = point_morph(x, q.to_point(), p.to_point(), th.t).unwrap();
            assert!(close(g, phi, 1e-12), "{g:?} vs {phi:?}");
        }
    }

    #[test]
    fn empty_pairs_copy_exactly() {
        let m = ScalarMap::from_fn(9, 5, Unit::DisparityPx, |x, y| (x * y) as f32 * 0.3).unwrap();
        assert_eq!(morph_disparity(&m, &PairSet::new(), &Thresholds::default()).unwrap(), m);
    }

    #[test]
    fn depth_input_rejected() {
        let m = ScalarMap::new(4, 4, 1.0f32, Unit::DepthM).unwrap();
        assert!(matches!(
            morph_disparity(&m, &PairSet::new(), &Thresholds::default()),
            Err(Error::UnitMismatch { .. })
        ));
    }

    #[test]
    fn out_of_bounds_pairs_rejected() {
        let m = ScalarMap::new(4, 4, 1.0f32, Unit::DisparityPx).unwrap();
        let pairs = PairSet::from_pairs([(pc(0, 0), pc(9, 0))]);
        assert!(morph_disparity(&m, &pairs, &Thresholds::default()).is_err());
    }

    fn step_disparity(width: usize, height: usize, edge: usize) -> ScalarMap<f32> {
        ScalarMap::from_fn(width, height, Unit::DisparityPx, |x, _| if x < edge { 5.0 } else { 20.0 }).unwrap()
    }

    #[test]
    fn step_edge_moves_to_segmentation_column() {
        // Depth edge between columns 9 and 10; segmentation boundary two
        // columns to the left (foreground from x = 8).
        let (w, h) = (32, 24);
        let disp = step_disparity(w, h, 10);
        let seg = BinaryMask::from_fn(w, h, |x, _| x >= 8).unwrap();
        let th = Thresholds::default();
        let ts = segmentation_edges(&seg, th.k1).unwrap();
        let td = extract_edges(&disp, th.k1).unwrap();
        let pairs = associate_edges(&ts, &td, th.k2).unwrap();
        let out = morph_disparity(&disp, &pairs, &th).unwrap();
        let edges = extract_edges(&out, th.morphed_edge_threshold()).unwrap();
        for y in 4..h - 4 {
            let cols: Vec<usize> = edges.points().filter(|p| p.y == y).map(|p| p.x).collect();
            assert!(cols.contains(&7) || cols.contains(&8), "row {y}: {cols:?}");
        }
        // Away from the edges nothing moves.
        assert_eq!(out.at(25, 12), 20.0);
        assert_eq!(out.at(1, 12), 5.0);
    }

    #[test]
    fn self_pairs_leave_map_unchanged() {
        let disp = step_disparity(20, 10, 10);
        let th = Thresholds::default();
        let td = extract_edges(&disp, th.k1).unwrap();
        let pairs = associate_edges(&td, &td, th.k2).unwrap();
        let out = morph_disparity(&disp, &pairs, &th).unwrap();
        for (a, b) in out.data().iter().zip(disp.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn aligned_scene_is_already_optimal() {
        let disp = step_disparity(24, 12, 10);
        let seg = BinaryMask::from_fn(24, 12, |x, _| x >= 10).unwrap();
        let r = check_local_optimality(&disp, &seg, &Thresholds::default()).unwrap();
        assert_eq!(r.lc_before, 0.0);
        assert_eq!(r.lc_after, 0.0);
        assert!(r.gradient_ratio_samples.is_empty());
    }

    #[test]
    fn offset_scene_improves() {
        let disp = step_disparity(40, 20, 16);
        let seg = BinaryMask::from_fn(40, 20, |x, _| x >= 20).unwrap();
        let r = check_local_optimality(&disp, &seg, &Thresholds::default()).unwrap();
        assert!(r.lc_after < r.lc_before, "{r:?}");
    }

    #[test]
    fn no_pairs_is_an_error() {
        let disp = ScalarMap::new(10, 10, 3.0f32, Unit::DisparityPx).unwrap();
        let seg = BinaryMask::from_fn(10, 10, |x, _| x >= 5).unwrap();
        assert!(matches!(
            check_local_optimality(&disp, &seg, &Thresholds::default()),
            Err(Error::NoAssociatedEdges)
        ));
    }

    #[test]
    fn gradient_ratio_on_ramp_is_half() {
        // Linear ramp of slope 0.2; one pair gathering p = (24, 16) onto q = (20, 16).
        let disp = ScalarMap::from_fn(48, 32, Unit::DisparityNormalized, |x, _| 0.2 * x as f64).unwrap();
        let pairs = PairSet::from_pairs([(pc(20, 16), pc(24, 16))]);
        let (_, r) = local_optimality_with_pairs(&disp, &pairs, &Thresholds::default()).unwrap();
        let ratio = r.gradient_ratio_samples[0];
        assert!((ratio - 0.5).abs() <= 0.05, "ratio {ratio}");
    }

    #[test]
    fn field_matches_pointwise_blend() {
        let pairs = PairSet::from_pairs([
            (pc(10, 10), pc(14, 10)),
            (pc(10, 11), pc(14, 12)),
            (pc(30, 5), pc(30, 9)),
            (pc(2, 2), pc(2, 2)),
        ]);
        let th = Thresholds::default();
        let field = MorphField::build(40, 20, &pairs, &th).unwrap();
        for y in 0..20 {
            for x in 0..40 {
                let g = blended_morph(pt(x as f64, y as f64), &pairs, &th);
                assert_eq!(field.sample_at(x, y), g, "pixel ({x}, {y})");
            }
        }
    }

    proptest! {
        #[test]
        fn relative_weights_sum_to_one(
            raw in proptest::collection::vec((0usize..30, 0usize..30, 0usize..30, 0usize..30), 1..12),
            x in 0.0f64..30.0, y in 0.0f64..30.0,
        ) {
            let th = Thresholds::default();
            let pairs = PairSet::from_pairs(raw.into_iter().map(|(a, b, c, d)| (pc(a, b), pc(c, d))));
            let ws = relative_weights(pt(x, y), &pairs, &th);
            if !ws.is_empty() {
                let total: f64 = ws.iter().sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn identity_beyond_gate(qx in 10usize..20, qy in 10usize..20, dx in 1usize..6, far in 0.0f64..40.0) {
            let th = Thresholds::default();
            let pairs = PairSet::from_pairs([(pc(qx, qy), pc(qx + dx, qy))]);
            // Smallest scaled distance with h <= 1e-6.
            let d_min = th.m2 + (1e6f64 - 1.0).ln() / th.m1;
            let x = pt(qx as f64, qy as f64 + d_min * th.distance_scale + far);
            prop_assert!(close(blended_morph(x, &pairs, &th), x, 1e-4));
        }
    }
}
