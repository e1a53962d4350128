//! Edge extraction, segmentation-to-depth edge association and the
//! edge-edge consistency measure.
//!
//! An edge of a map is the set of pixels whose gradient magnitude strictly
//! exceeds `k1`. Each segmentation edge point `q` is associated with its
//! nearest depth edge point `p` when `|p - q| < k2`; the consistency is the
//! mean of those distances. Depth edges are taken from the disparity map.

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, PixelCoord, ScalarMap, Unit};
use crate::scalar::{mean, Real};

/// Per-pixel L2 norm of the image gradient.
///
/// Central differences in the interior, one-sided differences on the
/// border rows and columns.
pub fn gradient_magnitude<T: Real>(map: &ScalarMap<T>) -> Result<ScalarMap<T>> {
    let (w, h) = map.shape();
    if w < 2 || h < 2 {
        return Err(Error::MapTooSmall { width: w, height: h });
    }
    let half = T::lit(0.5);
    let d = map.data();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let gx = if x == 0 {
                d[y * w + 1] - d[y * w]
            } else if x == w - 1 {
                d[y * w + x] - d[y * w + x - 1]
            } else {
                (d[y * w + x + 1] - d[y * w + x - 1]) * half
            };
            let gy = if y == 0 {
                d[w + x] - d[x]
            } else if y == h - 1 {
                d[y * w + x] - d[(y - 1) * w + x]
            } else {
                (d[(y + 1) * w + x] - d[(y - 1) * w + x]) * half
            };
            out.push(gx.hypot(gy));
        }
    }
    ScalarMap::from_vec(w, h, out, Unit::Unitless)
}

/// Set of edge pixels of a `width x height` map.
///
/// Stored as sorted per-row column lists, so iteration is in `(y, x)` order
/// and nearest-point queries only touch nearby rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSet {
    width: usize,
    height: usize,
    rows: Vec<Vec<usize>>,
    len: usize,
}

impl EdgeSet {
    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, rows: vec![Vec::new(); height], len: 0 }
    }

    /// Builds a set from arbitrary points; duplicates collapse.
    pub fn from_points(width: usize, height: usize, points: impl IntoIterator<Item = PixelCoord>) -> Result<Self> {
        let mut rows = vec![Vec::new(); height];
        for p in points {
            if p.x >= width || p.y >= height {
                return Err(Error::OutOfBounds { x: p.x, y: p.y, width, height });
            }
            rows[p.y].push(p.x);
        }
        let mut len = 0;
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            len += row.len();
        }
        Ok(Self { width, height, rows, len })
    }

    pub fn from_mask(mask: &BinaryMask) -> Self {
        let (w, h) = mask.shape();
        let rows: Vec<Vec<usize>> = (0..h).map(|y| (0..w).filter(|&x| mask.at(x, y)).collect()).collect();
        let len = rows.iter().map(Vec::len).sum();
        Self { width: w, height: h, rows, len }
    }

    pub fn to_mask(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.contains(PixelCoord::new(x, y)))
            .expect("edge set shape is non-zero")
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        p.y < self.height && self.rows[p.y].binary_search(&p.x).is_ok()
    }

    /// Points in `(y, x)` order.
    pub fn points(&self) -> impl Iterator<Item = PixelCoord> + '_ {
        self.rows.iter().enumerate().flat_map(|(y, row)| row.iter().map(move |&x| PixelCoord::new(x, y)))
    }

    pub fn is_subset_of(&self, other: &EdgeSet) -> bool {
        self.points().all(|p| other.contains(p))
    }

    fn ensure_same_shape(&self, other: &EdgeSet) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch { left: self.shape(), right: other.shape() });
        }
        Ok(())
    }

    /// Nearest point by `(distance², y, x)`, restricted to `dist² <= max_d2`.
    fn nearest_bounded(&self, q: PixelCoord, max_d2: u64) -> Option<(PixelCoord, u64)> {
        let mut best: Option<(u64, usize, usize)> = None;
        let consider = |best: &mut Option<(u64, usize, usize)>, y: usize, row: &[usize]| {
            if row.is_empty() {
                return;
            }
            let i = row.partition_point(|&x| x < q.x);
            for &j in &[i.wrapping_sub(1), i] {
                if let Some(&x) = row.get(j) {
                    let key = (PixelCoord::new(x, y).dist_sq(q), y, x);
                    if key.0 <= max_d2 && best.is_none_or(|b| key < b) {
                        *best = Some(key);
                    }
                }
            }
        };
        let mut dy = 0usize;
        loop {
            let dy2 = (dy * dy) as u64;
            if dy2 > max_d2 || best.is_some_and(|b| dy2 > b.0) {
                break;
            }
            let above = q.y.checked_sub(dy);
            let below = (dy > 0).then_some(q.y + dy).filter(|&y| y < self.height);
            if above.is_none() && below.is_none() {
                break;
            }
            if let Some(y) = above {
                consider(&mut best, y, &self.rows[y]);
            }
            if let Some(y) = below {
                consider(&mut best, y, &self.rows[y]);
            }
            dy += 1;
        }
        best.map(|(d2, y, x)| (PixelCoord::new(x, y), d2))
    }
}

/// Pixels whose gradient magnitude is strictly greater than `k1`.
pub fn extract_edges<T: Real>(map: &ScalarMap<T>, k1: f64) -> Result<EdgeSet> {
    if !k1.is_finite() || k1 <= 0.0 {
        return Err(Error::InvalidParameter { name: "k1", reason: format!("must be positive, got {k1}") });
    }
    let grad = gradient_magnitude(map)?;
    let (w, h) = grad.shape();
    let rows = (0..h).map(|y| (0..w).filter(|&x| grad.at(x, y).as_f64() > k1).collect::<Vec<_>>()).collect::<Vec<_>>();
    let len = rows.iter().map(Vec::len).sum();
    Ok(EdgeSet { width: w, height: h, rows, len })
}

/// Edges of a binary segmentation, via its 0/1 map.
pub fn segmentation_edges(seg: &BinaryMask, k1: f64) -> Result<EdgeSet> {
    extract_edges(&seg.to_map::<f32>(Unit::Unitless), k1)
}

/// Number of edge pixels at threshold `k1`.
pub fn edge_count<T: Real>(map: &ScalarMap<T>, k1: f64) -> Result<usize> {
    Ok(extract_edges(map, k1)?.len())
}

/// Squared Euclidean distance to the nearest site, exact in integers.
///
/// Two separable passes of the lower-envelope-of-parabolas algorithm.
/// Cells of a row or column with no finite input stay `None`.
pub(crate) fn squared_edt(width: usize, height: usize, is_site: impl Fn(usize, usize) -> bool) -> Vec<Option<u64>> {
    let mut cols: Vec<Option<u64>> = vec![None; width * height];
    let mut f = Vec::with_capacity(width.max(height));
    let mut out = Vec::with_capacity(width.max(height));
    // Rows first: distance along x to a site in the same row.
    for y in 0..height {
        f.clear();
        f.extend((0..width).map(|x| is_site(x, y).then_some(0u64)));
        lower_envelope(&f, &mut out);
        cols[y * width..(y + 1) * width].copy_from_slice(&out);
    }
    let mut result = vec![None; width * height];
    for x in 0..width {
        f.clear();
        f.extend((0..height).map(|y| cols[y * width + x]));
        lower_envelope(&f, &mut out);
        for (y, v) in out.iter().enumerate() {
            result[y * width + x] = *v;
        }
    }
    result
}

/// `out[i] = min_j (i - j)² + f[j]` over finite `f[j]`.
fn lower_envelope(f: &[Option<u64>], out: &mut Vec<Option<u64>>) {
    out.clear();
    let sites: Vec<(i64, i64)> = f.iter().enumerate().filter_map(|(j, v)| v.map(|v| (j as i64, v as i64))).collect();
    if sites.is_empty() {
        out.resize(f.len(), None);
        return;
    }
    // Parabola apexes kept on the envelope and the boundaries between them.
    let mut v: Vec<(i64, i64)> = Vec::with_capacity(sites.len());
    let mut z: Vec<f64> = Vec::with_capacity(sites.len() + 1);
    let intersect = |a: (i64, i64), b: (i64, i64)| -> f64 {
        ((b.1 + b.0 * b.0) - (a.1 + a.0 * a.0)) as f64 / (2 * (b.0 - a.0)) as f64
    };
    for &s in &sites {
        loop {
            match v.last() {
                Some(&top) => {
                    let zi = intersect(top, s);
                    if v.len() > 1 && zi <= z[z.len() - 1] {
                        v.pop();
                        z.pop();
                    } else {
                        z.push(zi);
                        v.push(s);
                        break;
                    }
                }
                None => {
                    v.push(s);
                    break;
                }
            }
        }
    }
    let mut k = 0;
    for i in 0..f.len() as i64 {
        while k < z.len() && z[k] < i as f64 {
            k += 1;
        }
        let (j, fj) = v[k];
        out.push(Some(((i - j) * (i - j) + fj) as u64));
    }
}

/// Exact Euclidean distance from every pixel to the nearest edge point.
pub fn distance_transform<T: Real>(edges: &EdgeSet) -> Result<ScalarMap<T>> {
    if edges.is_empty() {
        return Err(Error::NoEdges);
    }
    let (w, h) = edges.shape();
    let sq = squared_edt(w, h, |x, y| edges.contains(PixelCoord::new(x, y)));
    let data = sq.into_iter().map(|d| T::lit((d.expect("non-empty edge set") as f64).sqrt())).collect();
    ScalarMap::from_vec(w, h, data, Unit::Unitless)
}

/// Nearest edge point to `q` and its distance.
///
/// Ties go to the smallest `y`, then the smallest `x`.
pub fn nearest_edge(q: PixelCoord, edges: &EdgeSet) -> Result<(PixelCoord, f64)> {
    edges.nearest_bounded(q, u64::MAX).map(|(p, d2)| (p, (d2 as f64).sqrt())).ok_or(Error::NoEdges)
}

/// One segmentation edge point and its associated depth edge point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgePair {
    /// Segmentation edge point.
    pub q: PixelCoord,
    /// Nearest depth edge point.
    pub p: PixelCoord,
    /// `|p - q|`.
    pub distance: f64,
}

impl EdgePair {
    pub fn is_degenerate(&self) -> bool {
        self.p == self.q
    }
}

/// Associations in segmentation-point order; every `q` appears once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairSet {
    pairs: Vec<EdgePair>,
}

impl PairSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from explicit pairs, e.g. a hand-placed morph.
    ///
    /// Later duplicates of an already present `q` are ignored.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (PixelCoord, PixelCoord)>) -> Self {
        let mut out: Vec<EdgePair> = Vec::new();
        for (q, p) in pairs {
            if out.iter().all(|e| e.q != q) {
                out.push(EdgePair { q, p, distance: q.dist(p) });
            }
        }
        Self { pairs: out }
    }

    pub fn pairs(&self) -> &[EdgePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EdgePair> {
        self.pairs.iter()
    }

    /// The gated segmentation points.
    pub fn segmentation_points(&self) -> impl Iterator<Item = PixelCoord> + '_ {
        self.pairs.iter().map(|e| e.q)
    }

    /// Mean association distance; `None` when empty.
    pub fn mean_distance(&self) -> Option<f64> {
        mean(self.pairs.iter().map(|e| e.distance))
    }
}

impl<'a> IntoIterator for &'a PairSet {
    type Item = &'a EdgePair;
    type IntoIter = std::slice::Iter<'a, EdgePair>;

    fn into_iter(self) -> Self::IntoIter {
        self.pairs.iter()
    }
}

/// Pairs every segmentation edge point with its nearest depth edge point
/// when that point is strictly closer than `k2`.
///
/// An empty depth edge set yields an empty pair set.
pub fn associate_edges(seg_edges: &EdgeSet, depth_edges: &EdgeSet, k2: f64) -> Result<PairSet> {
    seg_edges.ensure_same_shape(depth_edges)?;
    if k2.is_nan() || k2 <= 0.0 {
        return Err(Error::InvalidParameter { name: "k2", reason: format!("must be positive, got {k2}") });
    }
    // Distances below k2 have d² <= floor(k2²) + 1 at most; the strict test below decides.
    let bound = (k2 * k2).ceil().min(u64::MAX as f64) as u64;
    let pairs = seg_edges
        .points()
        .filter_map(|q| {
            let (p, d2) = depth_edges.nearest_bounded(q, bound)?;
            let distance = (d2 as f64).sqrt();
            (distance < k2).then_some(EdgePair { q, p, distance })
        })
        .collect();
    Ok(PairSet { pairs })
}

/// Edge-edge consistency: mean distance of the gated segmentation points
/// to the depth edge set.
pub fn consistency(seg_edges: &EdgeSet, depth_edges: &EdgeSet, k2: f64) -> Result<f64> {
    associate_edges(seg_edges, depth_edges, k2)?.mean_distance().ok_or(Error::NoAssociatedEdges)
}

/// Mean distance from a fixed set of segmentation points to `depth_edges`,
/// without re-gating. Used to score a morphed map against the points that
/// were associated before the morph.
pub fn consistency_against(points: impl IntoIterator<Item = PixelCoord>, depth_edges: &EdgeSet) -> Result<f64> {
    let mut dists = Vec::new();
    for q in points {
        dists.push(nearest_edge(q, depth_edges)?.1);
    }
    mean(dists).ok_or(Error::NoAssociatedEdges)
}
