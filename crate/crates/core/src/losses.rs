//! Stereo reconstruction and the gated training losses.
//!
//! Everything here is a pure map-to-map function evaluated in `f64`. Means
//! use compensated summation in a fixed order, so a scalar is reproducible
//! bit for bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Image3, ScalarMap, Unit};
use crate::params::Thresholds;
use crate::sample::{bilinear, in_domain};
use crate::scalar::{CompensatedSum, Real};

/// Disparities at or below this are treated as infinitely far.
pub const DISPARITY_EPS: f64 = 1e-6;

pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Depth map together with the pixels whose disparity was singular.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthConversion<T> {
    pub depth: ScalarMap<T>,
    /// Pixels with disparity `<= DISPARITY_EPS`; their depth is the sentinel.
    pub singular: BinaryMask,
    pub sentinel: f64,
}

/// `depth = focal * baseline / disparity`.
///
/// Singular pixels get the depth of a disparity of exactly `DISPARITY_EPS`.
pub fn disparity_to_depth<T: Real>(disp: &ScalarMap<T>, focal: f64, baseline: f64) -> Result<DepthConversion<T>> {
    disp.expect_unit(Unit::DisparityPx)?;
    check_camera(focal, baseline)?;
    let fb = focal * baseline;
    let sentinel = fb / DISPARITY_EPS;
    let singular = BinaryMask::from_vec(
        disp.width(),
        disp.height(),
        disp.data().iter().map(|d| d.as_f64() <= DISPARITY_EPS).collect(),
    )?;
    let depth = disp.map(Unit::DepthM, |d| {
        let d = d.as_f64();
        T::lit(if d <= DISPARITY_EPS { sentinel } else { fb / d })
    })?;
    Ok(DepthConversion { depth, singular, sentinel })
}

/// Inverse of [`disparity_to_depth`]; non-positive depths map to zero disparity.
pub fn depth_to_disparity<T: Real>(depth: &ScalarMap<T>, focal: f64, baseline: f64) -> Result<ScalarMap<T>> {
    depth.expect_unit(Unit::DepthM)?;
    check_camera(focal, baseline)?;
    let fb = focal * baseline;
    depth.map(Unit::DisparityPx, |z| {
        let z = z.as_f64();
        T::lit(if z > 0.0 { fb / z } else { 0.0 })
    })
}

fn check_camera(focal: f64, baseline: f64) -> Result<()> {
    if !(focal.is_finite() && focal > 0.0) {
        return Err(Error::InvalidParameter { name: "focal", reason: "must be positive".into() });
    }
    if !(baseline.is_finite() && baseline > 0.0) {
        return Err(Error::InvalidParameter { name: "baseline", reason: "must be positive".into() });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarpDirection {
    /// Reconstruct the left view from the right image: sample at `x - d`.
    #[default]
    RightToLeft,
    /// Reconstruct the right view from the left image: sample at `x + d`.
    LeftToRight,
}

impl WarpDirection {
    fn sign(self) -> f64 {
        match self {
            WarpDirection::RightToLeft => 1.0,
            WarpDirection::LeftToRight => -1.0,
        }
    }
}

/// Warp result plus the pixels whose sample fell inside the source.
#[derive(Clone, Debug, PartialEq)]
pub struct Warped<M> {
    pub map: M,
    pub valid: BinaryMask,
}

fn sample_positions<U: Real>(disp: &ScalarMap<U>, direction: WarpDirection) -> (Vec<f64>, BinaryMask) {
    let (w, h) = disp.shape();
    let s = direction.sign();
    let xs: Vec<f64> = (0..w * h).map(|i| (i % w) as f64 - s * disp.data()[i].as_f64()).collect();
    let valid = BinaryMask::from_fn(w, h, |x, y| in_domain(w, h, xs[y * w + x], y as f64)).expect("shape of a valid map");
    (xs, valid)
}

/// `out(x, y) = src(x - s * disp(x, y), y)` with bilinear sampling and
/// border clamping; `s = +1` for [`WarpDirection::RightToLeft`].
pub fn warp_horizontal<T: Real, U: Real>(
    src: &ScalarMap<T>,
    disp: &ScalarMap<U>,
    direction: WarpDirection,
) -> Result<Warped<ScalarMap<T>>> {
    src.ensure_same_shape(disp)?;
    let (xs, valid) = sample_positions(disp, direction);
    let w = src.width();
    let map = ScalarMap::from_fn(w, src.height(), src.unit(), |x, y| bilinear(src, xs[y * w + x], y as f64))?;
    Ok(Warped { map, valid })
}

/// Three-channel variant of [`warp_horizontal`].
pub fn warp_image<T: Real, U: Real>(
    src: &Image3<T>,
    disp: &ScalarMap<U>,
    direction: WarpDirection,
) -> Result<Warped<Image3<T>>> {
    let [r, g, b] = src.channels();
    r.ensure_same_shape(disp)?;
    let (xs, valid) = sample_positions(disp, direction);
    let w = src.width();
    let warp = |c: &ScalarMap<T>| ScalarMap::from_fn(w, c.height(), c.unit(), |x, y| bilinear(c, xs[y * w + x], y as f64));
    let map = Image3::from_channels([warp(r)?, warp(g)?, warp(b)?])?;
    Ok(Warped { map, valid })
}

/// Mirror index into `0..n` (edge pixel not repeated).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r.clamp(0, n - 1) as usize
}

fn ssim_channel<T: Real>(a: &ScalarMap<T>, b: &ScalarMap<T>, out: &mut [f64]) {
    let (w, h) = a.shape();
    let (da, db) = (a.data(), b.data());
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            let mut pa = [0.0f64; 9];
            let mut pb = [0.0f64; 9];
            let mut k = 0;
            for dy in -1isize..=1 {
                let yy = reflect(y as isize + dy, h);
                for dx in -1isize..=1 {
                    let xx = reflect(x as isize + dx, w);
                    pa[k] = da[yy * w + xx].as_f64();
                    pb[k] = db[yy * w + xx].as_f64();
                    k += 1;
                }
            }
            *slot += ssim_window(&pa, &pb);
        }
    });
}

/// SSIM of two equally sized sample windows; symmetric in its arguments
/// bit for bit.
fn ssim_window(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mu_a = a.iter().sum::<f64>() / n;
    let mu_b = b.iter().sum::<f64>() / n;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    let mut cov = 0.0;
    for (&u, &v) in a.iter().zip(b) {
        var_a += (u - mu_a) * (u - mu_a);
        var_b += (v - mu_b) * (v - mu_b);
        cov += (u - mu_a) * (v - mu_b);
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    let num = (2.0 * (mu_a * mu_b) + SSIM_C1) * (2.0 * cov + SSIM_C2);
    let den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2);
    num / den
}

/// Per-pixel SSIM over 3x3 windows with reflected borders, averaged over channels.
pub fn ssim_map<T: Real>(a: &Image3<T>, b: &Image3<T>) -> Result<ScalarMap<T>> {
    a.channel(0).ensure_same_shape(b.channel(0))?;
    let (w, h) = a.shape();
    let mut acc = vec![0.0f64; w * h];
    for c in 0..3 {
        ssim_channel(a.channel(c), b.channel(c), &mut acc);
    }
    ScalarMap::from_vec(w, h, acc.into_iter().map(|v| T::lit(v / 3.0)).collect(), Unit::Unitless)
}

/// `alpha * (1 - SSIM) / 2 + (1 - alpha) * |I - I~|`, L1 averaged over channels.
pub fn photometric_loss<T: Real>(image: &Image3<T>, recon: &Image3<T>, alpha: f64) -> Result<ScalarMap<T>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter { name: "alpha", reason: "must lie in [0, 1]".into() });
    }
    let ssim = ssim_map(image, recon)?;
    let (w, h) = image.shape();
    ScalarMap::from_fn(w, h, Unit::Unitless, |x, y| {
        let l1 = (0..3)
            .map(|c| (image.channel(c).at(x, y).as_f64() - recon.channel(c).at(x, y).as_f64()).abs())
            .sum::<f64>()
            / 3.0;
        T::lit(alpha * (1.0 - ssim.at(x, y).as_f64()) / 2.0 + (1.0 - alpha) * l1)
    })
}

/// Population variance of the 27 samples of each 3x3x3 neighbourhood,
/// with replicated borders.
pub fn texture_variance<T: Real>(image: &Image3<T>) -> Result<ScalarMap<T>> {
    let (w, h) = image.shape();
    let at = |c: usize, x: isize, y: isize| {
        let xx = x.clamp(0, w as isize - 1) as usize;
        let yy = y.clamp(0, h as isize - 1) as usize;
        image.channel(c).at(xx, yy).as_f64()
    };
    ScalarMap::from_fn(w, h, Unit::Unitless, |x, y| {
        let mut samples = [0.0f64; 27];
        let mut k = 0;
        for c in 0..3 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    samples[k] = at(c, x as isize + dx, y as isize + dy);
                    k += 1;
                }
            }
        }
        let mu = samples.iter().sum::<f64>() / 27.0;
        let var = samples.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / 27.0;
        T::lit(var)
    })
}

/// `weight * ln(1 + |target - disp|)` where the candidate reconstructs
/// strictly better, 0 elsewhere.
fn gated_log_loss<T: Real>(
    disp: &ScalarMap<T>,
    target: &ScalarMap<T>,
    weight: Option<&ScalarMap<T>>,
    lr_orig: &ScalarMap<T>,
    lr_cand: &ScalarMap<T>,
) -> Result<ScalarMap<T>> {
    disp.ensure_same_shape(target)?;
    disp.ensure_same_shape(lr_orig)?;
    disp.ensure_same_shape(lr_cand)?;
    if let Some(wt) = weight {
        disp.ensure_same_shape(wt)?;
    }
    let (w, h) = disp.shape();
    ScalarMap::from_fn(w, h, Unit::Unitless, |x, y| {
        if lr_cand.at(x, y) < lr_orig.at(x, y) {
            let delta = (target.at(x, y).as_f64() - disp.at(x, y).as_f64()).abs();
            let wt = weight.map_or(1.0, |m| m.at(x, y).as_f64());
            T::lit(wt * delta.ln_1p())
        } else {
            T::zero()
        }
    })
}

/// Morph loss toward the segmentation-augmented disparity, weighted by
/// local image variance.
pub fn morph_loss<T: Real>(
    disp: &ScalarMap<T>,
    disp_star: &ScalarMap<T>,
    image: &Image3<T>,
    lr_orig: &ScalarMap<T>,
    lr_star: &ScalarMap<T>,
) -> Result<ScalarMap<T>> {
    let var = texture_variance(image)?;
    gated_log_loss(disp, disp_star, Some(&var), lr_orig, lr_star)
}

/// Loss toward an externally supplied proxy disparity.
pub fn proxy_loss<T: Real>(
    disp: &ScalarMap<T>,
    disp_proxy: &ScalarMap<T>,
    lr_orig: &ScalarMap<T>,
    lr_proxy: &ScalarMap<T>,
) -> Result<ScalarMap<T>> {
    gated_log_loss(disp, disp_proxy, None, lr_orig, lr_proxy)
}

/// Per-pixel loss terms and the valid set they are averaged over.
#[derive(Clone, Debug, PartialEq)]
pub struct LossMaps<T> {
    pub l_r: ScalarMap<T>,
    pub l_g: ScalarMap<T>,
    pub l_p: ScalarMap<T>,
    pub joint: ScalarMap<T>,
    pub valid: BinaryMask,
}

/// `l_r + lambda2 * l_g + lambda1 * l_p` on pixels with `M = 0`.
///
/// Returns the maps and the mean of the joint map over the valid set.
pub fn joint_loss<T: Real>(
    l_r: &ScalarMap<T>,
    l_g: &ScalarMap<T>,
    l_p: &ScalarMap<T>,
    mask: &BinaryMask,
    lambda1: f64,
    lambda2: f64,
) -> Result<(LossMaps<T>, f64)> {
    l_r.ensure_same_shape(l_g)?;
    l_r.ensure_same_shape(l_p)?;
    mask.ensure_same_shape(l_r.shape())?;
    let valid = mask.not();
    if valid.count() == 0 {
        return Err(Error::EmptyValidSet);
    }
    let (w, h) = l_r.shape();
    let joint = ScalarMap::from_fn(w, h, Unit::Unitless, |x, y| {
        if valid.at(x, y) {
            let v = l_r.at(x, y).as_f64() + lambda2 * l_g.at(x, y).as_f64() + lambda1 * l_p.at(x, y).as_f64();
            T::lit(v)
        } else {
            T::zero()
        }
    })?;
    let mean = masked_mean(&joint, &valid).expect("non-empty valid set");
    let maps = LossMaps { l_r: l_r.clone(), l_g: l_g.clone(), l_p: l_p.clone(), joint, valid };
    Ok((maps, mean))
}

/// Mean of `map` over the set pixels of `valid`, summed in row-major order.
pub fn masked_mean<T: Real>(map: &ScalarMap<T>, valid: &BinaryMask) -> Option<f64> {
    let mut sum = CompensatedSum::new();
    let mut n = 0usize;
    for (v, &keep) in map.data().iter().zip(valid.bits()) {
        if keep {
            sum.add(v.as_f64());
            n += 1;
        }
    }
    (n > 0).then(|| sum.value() / n as f64)
}

/// Photometric loss of `target` against `source` warped by `disp`.
///
/// Pixels set in `mask` reconstruct to the target itself, so neither they
/// nor their neighbours' SSIM windows depend on the disparity there.
pub fn reconstruction_loss<T: Real, U: Real>(
    target: &Image3<T>,
    source: &Image3<T>,
    disp: &ScalarMap<U>,
    direction: WarpDirection,
    alpha: f64,
    mask: Option<&BinaryMask>,
) -> Result<ScalarMap<T>> {
    let warped = warp_image(source, disp, direction)?;
    let recon = match mask {
        None => warped.map,
        Some(m) => {
            m.ensure_same_shape(target.shape())?;
            let (w, h) = target.shape();
            let plane = |c: usize| {
                ScalarMap::from_fn(w, h, Unit::Intensity, |x, y| {
                    if m.at(x, y) {
                        target.channel(c).at(x, y)
                    } else {
                        warped.map.channel(c).at(x, y)
                    }
                })
            };
            Image3::from_channels([plane(0)?, plane(1)?, plane(2)?])?
        }
    };
    photometric_loss(target, &recon, alpha)
}

/// Scalar summary of one loss evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub mean_lr: f64,
    pub mean_lg: f64,
    pub mean_lp: f64,
    pub mean_joint: f64,
    pub n_valid: usize,
}

/// Inputs of a full left-view loss evaluation.
#[derive(Clone, Copy, Debug)]
pub struct StereoLossInputs<'a, T> {
    pub left: &'a Image3<T>,
    pub right: &'a Image3<T>,
    /// Predicted left-view disparity in pixels.
    pub disp: &'a ScalarMap<T>,
    /// Segmentation-augmented target; `l_g` is zero without one.
    pub morphed: Option<&'a ScalarMap<T>>,
    /// Proxy disparity; `l_p` is zero without one.
    pub proxy: Option<&'a ScalarMap<T>>,
    /// Occlusion mask `M`.
    pub mask: &'a BinaryMask,
}

/// Evaluates every loss term for the left view.
///
/// Pixels whose warp under `disp` leaves the right image join the excluded
/// set. Targets are treated as constants: they are never derived from
/// `disp` here.
pub fn stereo_losses<T: Real>(inputs: &StereoLossInputs<'_, T>, th: &Thresholds) -> Result<(LossMaps<T>, LossSummary)> {
    th.validate()?;
    let StereoLossInputs { left, right, disp, morphed, proxy, mask } = *inputs;
    left.channel(0).ensure_same_shape(right.channel(0))?;
    left.channel(0).ensure_same_shape(disp)?;
    mask.ensure_same_shape(disp.shape())?;
    let dir = WarpDirection::RightToLeft;
    let (_, in_bounds) = sample_positions(disp, dir);
    let excluded = mask.or(&in_bounds.not())?;
    let lr = |d: &ScalarMap<T>| reconstruction_loss(left, right, d, dir, th.alpha, Some(&excluded));
    let l_r = lr(disp)?;
    let zeros = ScalarMap::new(disp.width(), disp.height(), T::zero(), Unit::Unitless)?;
    let l_g = match morphed {
        Some(star) => morph_loss(disp, star, left, &l_r, &lr(star)?)?,
        None => zeros.clone(),
    };
    let l_p = match proxy {
        Some(px) => proxy_loss(disp, px, &l_r, &lr(px)?)?,
        None => zeros,
    };
    let (maps, mean_joint) = joint_loss(&l_r, &l_g, &l_p, &excluded, th.lambda1, th.lambda2)?;
    let mean = |m: &ScalarMap<T>| masked_mean(m, &maps.valid).expect("non-empty valid set");
    let summary = LossSummary {
        mean_lr: mean(&maps.l_r),
        mean_lg: mean(&maps.l_g),
        mean_lp: mean(&maps.l_p),
        mean_joint,
        n_valid: maps.valid.count(),
    };
    Ok((maps, summary))
}
