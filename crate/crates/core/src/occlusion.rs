//! Stereo occlusion masks.
//!
//! A left-view pixel `x` is hidden in the right view when some pixel to its
//! right shifts far enough left to cover it: its disparity exceeds the
//! disparity at `x` by at least the pixel gap `i`. The mask marks `x` when
//! that covering margin reaches `k3` for at least one `i` in the search
//! window.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ScalarMap};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    #[default]
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcclusionParams {
    /// Maximum look-ahead in pixels; `None` scans to the image border.
    pub search_width: Option<usize>,
    /// Required covering margin, in the units of the disparity map.
    pub k3: f64,
    pub view: View,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        Self { search_width: None, k3: 0.05, view: View::Left }
    }
}

impl OcclusionParams {
    pub fn validate(&self) -> Result<()> {
        if self.search_width == Some(0) {
            return Err(Error::InvalidParameter { name: "search_width", reason: "must be at least 1".into() });
        }
        if !self.k3.is_finite() {
            return Err(Error::InvalidParameter { name: "k3", reason: "must be finite".into() });
        }
        Ok(())
    }
}

/// Occlusion mask of a disparity map.
///
/// For the left view, `M(x, y) = 1` iff
/// `max_{1 <= i <= min(W, width-1-x)} disp(x+i, y) - disp(x, y) - i >= k3`.
/// The right view scans leftwards symmetrically.
pub fn occlusion_mask<T: Real>(disp: &ScalarMap<T>, params: &OcclusionParams) -> Result<BinaryMask> {
    params.validate()?;
    let (w, h) = disp.shape();
    let window = params.search_width.unwrap_or(w).min(w.saturating_sub(1));
    let mut bits = vec![false; w * h];
    let mut row = vec![0.0f64; w];
    let mut out = vec![false; w];
    // Right view mirrors the row so the same forward scan applies.
    let mirror = |x: usize| match params.view {
        View::Left => x,
        View::Right => w - 1 - x,
    };
    for y in 0..h {
        for (x, v) in row.iter_mut().enumerate() {
            *v = disp.at(mirror(x), y).as_f64();
        }
        scan_row(&row, window, params.k3, &mut out);
        for (x, &m) in out.iter().enumerate() {
            bits[y * w + mirror(x)] = m;
        }
    }
    BinaryMask::from_vec(w, h, bits)
}

/// Sliding-window maximum of `row[j] - j` over `j in (x, x + window]`.
///
/// Every term is exact in `f64` for `f32` inputs and integer offsets, so
/// the margin changes only by grouping, never by rounding.
fn scan_row(row: &[f64], window: usize, k3: f64, out: &mut [bool]) {
    let n = row.len();
    out.iter_mut().for_each(|b| *b = false);
    if window == 0 {
        return;
    }
    // Candidates j, with decreasing row[j] - j, for the window of x.
    let mut deque: VecDeque<usize> = VecDeque::new();
    let key = |j: usize| row[j] - j as f64;
    // Process x from right to left; window of x is (x, min(x + window, n-1)].
    for x in (0..n).rev() {
        if x + 1 < n {
            let j = x + 1;
            while deque.back().is_some_and(|&b| key(b) <= key(j)) {
                deque.pop_back();
            }
            deque.push_back(j);
        }
        while deque.front().is_some_and(|&f| f > x + window) {
            deque.pop_front();
        }
        if let Some(&best) = deque.front() {
            let margin = row[best] - row[x] - (best - x) as f64;
            out[x] = margin >= k3;
        }
    }
}

/// Geometric occlusion oracle for a left-view disparity map.
///
/// Every pixel is forward-warped to `x - disp(x)` in the right view,
/// quantized to quarter pixels. A pixel is occluded when some pixel to
/// its right lands on or beyond (to the left of) its warped position.
pub fn brute_force_occlusion<T: Real>(disp: &ScalarMap<T>) -> BinaryMask {
    let (w, h) = disp.shape();
    let quantize = |x: usize, y: usize| ((x as f64 - disp.at(x, y).as_f64()) * 4.0).round() as i64;
    let mut bits = vec![false; w * h];
    for y in 0..h {
        let landed: Vec<i64> = (0..w).map(|x| quantize(x, y)).collect();
        for x in 0..w {
            bits[y * w + x] = landed[x + 1..].iter().any(|&r| r <= landed[x]);
        }
    }
    BinaryMask::from_vec(w, h, bits).expect("shape of a valid map")
}
