//! Deterministic synthetic stereo scenes.
//!
//! A scene is a textured background plane with fronto-parallel shapes in
//! front of it. Each surface carries a procedural texture anchored to its
//! left-view coordinates, so the right view is an exact re-rendering of the
//! same surfaces shifted by their disparity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Image3, ScalarMap, Unit};
use crate::occlusion::brute_force_occlusion;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Rect,
    /// Ellipse inscribed in the bounding box.
    Ellipse,
}

/// Axis-aligned box in left-view pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub kind: ShapeKind,
    pub bbox: BBox,
    pub disp: f64,
}

impl Shape {
    /// Coverage of the continuous left-view point `(u, y)`.
    fn covers(&self, u: f64, y: f64) -> bool {
        let b = self.bbox;
        let (x0, y0) = (b.x as f64, b.y as f64);
        let (w, h) = (b.width as f64, b.height as f64);
        match self.kind {
            ShapeKind::Rect => u >= x0 && u < x0 + w && y >= y0 && y < y0 + h,
            ShapeKind::Ellipse => {
                let dx = (u + 0.5 - (x0 + w / 2.0)) / (w / 2.0);
                let dy = (y + 0.5 - (y0 + h / 2.0)) / (h / 2.0);
                dx * dx + dy * dy <= 1.0
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Texture {
    Ramp,
    Checker { period: usize },
    Noise { seed: u64, amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background_disp: f64,
    #[serde(default)]
    pub shapes: Vec<Shape>,
    pub texture: Texture,
    #[serde(default)]
    pub seed: u64,
}

/// Rendered stereo pair with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub left: Image3<f32>,
    pub right: Image3<f32>,
    pub disp_gt: ScalarMap<f32>,
    pub seg_gt: BinaryMask,
    pub occluded_gt: BinaryMask,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::ZeroDimension { width: self.width, height: self.height });
        }
        if !self.background_disp.is_finite() {
            return Err(Error::InvalidScene("background disparity must be finite".into()));
        }
        match self.texture {
            Texture::Checker { period: 0 } => return Err(Error::InvalidScene("checker period must be positive".into())),
            Texture::Noise { amplitude, .. } if !(amplitude.is_finite() && amplitude >= 0.0) => {
                return Err(Error::InvalidScene("noise amplitude must be non-negative".into()))
            }
            _ => {}
        }
        for (i, s) in self.shapes.iter().enumerate() {
            let b = s.bbox;
            if b.width == 0 || b.height == 0 || b.x + b.width > self.width || b.y + b.height > self.height {
                return Err(Error::InvalidScene(format!("shape {i} is outside the image")));
            }
            if !(s.disp.is_finite() && s.disp > self.background_disp) {
                return Err(Error::InvalidScene(format!("shape {i} must have disparity above the background")));
            }
        }
        for i in 0..self.shapes.len() {
            for j in i + 1..self.shapes.len() {
                let (a, b) = (&self.shapes[i], &self.shapes[j]);
                if a.disp == b.disp && self.overlap(a, b) {
                    return Err(Error::AmbiguousZOrder(i, j));
                }
            }
        }
        Ok(())
    }

    fn overlap(&self, a: &Shape, b: &Shape) -> bool {
        (0..self.height).any(|y| (0..self.width).any(|x| a.covers(x as f64, y as f64) && b.covers(x as f64, y as f64)))
    }

    /// Front-most shape covering the left-view pixel.
    fn surface_at(&self, x: usize, y: usize) -> Option<usize> {
        self.front_most(|s| s.covers(x as f64, y as f64))
    }

    fn front_most(&self, mut hit: impl FnMut(&Shape) -> bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, s) in self.shapes.iter().enumerate() {
            if hit(s) && best.is_none_or(|b| s.disp > self.shapes[b].disp) {
                best = Some(i);
            }
        }
        best
    }

    pub fn segmentation(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.surface_at(x, y).is_some()).expect("validated dimensions")
    }

    pub fn disparity(&self) -> ScalarMap<f32> {
        ScalarMap::from_fn(self.width, self.height, Unit::DisparityPx, |x, y| {
            self.surface_at(x, y).map_or(self.background_disp, |i| self.shapes[i].disp) as f32
        })
        .expect("validated dimensions")
    }
}

/// Per-surface colour: `offset + (1 - offset) * gain * v`.
struct Tint {
    offset: [f64; 3],
    gain: [f64; 3],
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn lattice_noise(seed: u64, surface: usize, u: i64, y: usize) -> f64 {
    let h = splitmix(seed ^ splitmix(surface as u64 ^ splitmix(u as u64 ^ splitmix(y as u64))));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

struct Renderer<'a> {
    spec: &'a SceneSpec,
    tints: Vec<Tint>,
    ramp_scale: f64,
}

impl<'a> Renderer<'a> {
    fn new(spec: &'a SceneSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let tints = (0..=spec.shapes.len())
            .map(|_| Tint {
                offset: [rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3)],
                gain: [rng.gen_range(0.4..1.0), rng.gen_range(0.4..1.0), rng.gen_range(0.4..1.0)],
            })
            .collect();
        let max_disp = spec.shapes.iter().map(|s| s.disp).fold(spec.background_disp, f64::max).abs();
        let ramp_scale = spec.width as f64 + 0.5 * spec.height as f64 + max_disp + 1.0;
        Self { spec, tints, ramp_scale }
    }

    /// Texture value in `[0, 1]` of surface `k` (0 is the background) at
    /// left-view coordinate `(u, y)`.
    fn value(&self, k: usize, u: f64, y: usize) -> f64 {
        match self.spec.texture {
            Texture::Ramp => ((u + 0.5 * y as f64) / self.ramp_scale).clamp(0.0, 1.0),
            Texture::Checker { period } => {
                let p = period as f64;
                let cell = (u / p).floor() as i64 + (y / period) as i64;
                if cell.rem_euclid(2) == 0 {
                    0.25
                } else {
                    0.75
                }
            }
            Texture::Noise { seed, amplitude } => {
                let u0 = u.floor();
                let f = u - u0;
                let a = lattice_noise(seed, k, u0 as i64, y);
                let b = if f > 0.0 { lattice_noise(seed, k, u0 as i64 + 1, y) } else { a };
                let n = a + (b - a) * f;
                (0.5 + amplitude * (2.0 * n - 1.0)).clamp(0.0, 1.0)
            }
        }
    }

    fn color(&self, k: usize, u: f64, y: usize) -> [f32; 3] {
        let v = self.value(k, u, y);
        let t = &self.tints[k];
        std::array::from_fn(|c| (t.offset[c] + (1.0 - t.offset[c]) * t.gain[c] * v) as f32)
    }

    fn left(&self) -> Result<Image3<f32>> {
        let s = self.spec;
        Image3::from_fn(s.width, s.height, |x, y| {
            let k = s.surface_at(x, y).map_or(0, |i| i + 1);
            self.color(k, x as f64, y)
        })
    }

    /// Right-view pixel `xr` shows the front-most surface whose left-view
    /// footprint contains `xr + disp`; otherwise the background.
    fn right(&self) -> Result<Image3<f32>> {
        let s = self.spec;
        Image3::from_fn(s.width, s.height, |xr, y| {
            let xr = xr as f64;
            match s.front_most(|sh| sh.covers(xr + sh.disp, y as f64)) {
                Some(i) => self.color(i + 1, xr + s.shapes[i].disp, y),
                None => self.color(0, xr + s.background_disp, y),
            }
        })
    }
}

/// Renders a scene and its ground truth.
pub fn generate(spec: &SceneSpec) -> Result<Fixture> {
    spec.validate()?;
    let renderer = Renderer::new(spec);
    let disp_gt = spec.disparity();
    let occluded_gt = brute_force_occlusion(&disp_gt);
    Ok(Fixture { left: renderer.left()?, right: renderer.right()?, seg_gt: spec.segmentation(), disp_gt, occluded_gt })
}

/// Misaligns the disparity borders of a piecewise-constant map.
///
/// A positive `offset_px` grows every raised region outward (square max
/// filter), a negative one shrinks it. With `bleed_px > 0` each row then
/// fades from every raised plateau into its lower neighbours over
/// `bleed_px` columns, plus a per-row jitter of up to a third of that,
/// drawn from `seed`.
pub fn perturb_edges<T: Real>(
    disp: &ScalarMap<T>,
    seg: &BinaryMask,
    offset_px: i64,
    bleed_px: usize,
    seed: u64,
) -> Result<ScalarMap<T>> {
    seg.ensure_same_shape(disp.shape())?;
    let (w, h) = disp.shape();
    let r = offset_px.unsigned_abs() as usize;
    if offset_px > 0 {
        let near_border = (0..h).any(|y| (0..w).any(|x| {
            seg.at(x, y) && (x < r || y < r || x + r >= w || y + r >= h)
        }));
        if near_border {
            return Err(Error::BorderOutOfBounds(format!("offset {offset_px} pushes a border outside the {w}x{h} map")));
        }
    }
    let vals: Vec<f64> = disp.data().iter().map(|v| v.as_f64()).collect();
    let moved = if r == 0 {
        vals
    } else {
        let pick: fn(f64, f64) -> f64 = if offset_px > 0 { f64::max } else { f64::min };
        let rows = filter_rows(&vals, w, h, r, pick);
        filter_cols(&rows, w, h, r, pick)
    };
    let out = if bleed_px == 0 {
        moved
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = moved.clone();
        for y in 0..h {
            let len = bleed_px + rng.gen_range(0..=bleed_px / 3);
            let row = &moved[y * w..(y + 1) * w];
            for x in 0..w {
                let here = row[x];
                let mut best = here;
                for k in 1..=len {
                    let frac = k as f64 / (len + 1) as f64;
                    for j in [x.checked_sub(k), (x + k < w).then_some(x + k)].into_iter().flatten() {
                        if row[j] > here {
                            best = best.max(row[j] - frac * (row[j] - here));
                        }
                    }
                }
                out[y * w + x] = best;
            }
        }
        out
    };
    ScalarMap::from_vec(w, h, out.into_iter().map(T::lit).collect(), disp.unit())
}

fn filter_rows(v: &[f64], w: usize, h: usize, r: usize, pick: fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for y in 0..h {
        for x in 0..w {
            let (a, b) = (x.saturating_sub(r), (x + r).min(w - 1));
            out[y * w + x] = v[y * w + a..=y * w + b].iter().copied().reduce(pick).expect("non-empty window");
        }
    }
    out
}

fn filter_cols(v: &[f64], w: usize, h: usize, r: usize, pick: fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for y in 0..h {
        let (a, b) = (y.saturating_sub(r), (y + r).min(h - 1));
        for x in 0..w {
            out[y * w + x] = (a..=b).map(|yy| v[yy * w + x]).reduce(pick).expect("non-empty window");
        }
    }
    out
}

/// A 128x64 scene with one rectangle (disparity 20) in front of a plane
/// (disparity 5), placed at least 12 px from every border.
pub fn random_scene(seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (width, height) = (128, 64);
    let bw = rng.gen_range(24..=48);
    let bh = rng.gen_range(16..=28);
    let x = rng.gen_range(12..=width - 12 - bw);
    let y = rng.gen_range(12..=height - 12 - bh);
    let texture = match seed % 3 {
        0 => Texture::Checker { period: rng.gen_range(3..=7) },
        1 => Texture::Ramp,
        _ => Texture::Noise { seed: rng.gen(), amplitude: 0.3 },
    };
    SceneSpec {
        width,
        height,
        background_disp: 5.0,
        shapes: vec![Shape { kind: ShapeKind::Rect, bbox: BBox { x, y, width: bw, height: bh }, disp: 20.0 }],
        texture,
        seed,
    }
}
