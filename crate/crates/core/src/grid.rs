//! Dense grids and small geometry types shared by every module.
//!
//! All containers are row-major. A [`ScalarMap`] never holds a NaN or an
//! infinity: values are screened once at construction and at every write,
//! so hot loops elsewhere can stay branch-free.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Advisory unit tag carried by a [`ScalarMap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    DisparityPx,
    DisparityNormalized,
    DepthM,
    Intensity,
    Unitless,
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension { width, height });
    }
    Ok(())
}

/// Dense `width x height` grid of finite reals.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarMap<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
    unit: Unit,
}

impl<T: Real> ScalarMap<T> {
    pub fn new(width: usize, height: usize, fill: T, unit: Unit) -> Result<Self> {
        check_dims(width, height)?;
        if !fill.is_finite() {
            return Err(Error::NonFinite { index: 0 });
        }
        Ok(Self { width, height, data: vec![fill; width * height], unit })
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>, unit: Unit) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::LengthMismatch { width, height, found: data.len() });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { width, height, data, unit })
    }

    /// Builds a map by evaluating `f(x, y)` at every cell.
    pub fn from_fn(
        width: usize,
        height: usize,
        unit: Unit,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, data, unit)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn unit(&self) -> Unit {
        self.unit
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    /// Unchecked-in-release accessor for in-bounds coordinates.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> T {
        self.data[self.index(x, y)]
    }

    pub fn get(&self, x: usize, y: usize) -> Option<T> {
        (x < self.width && y < self.height).then(|| self.data[y * self.width + x])
    }

    pub fn set(&mut self, x: usize, y: usize, value: T) -> Result<()> {
        if x >= self.width || y >= self.height {
            return Err(Error::OutOfBounds { x, y, width: self.width, height: self.height });
        }
        if !value.is_finite() {
            return Err(Error::NonFinite { index: y * self.width + x });
        }
        let i = y * self.width + x;
        self.data[i] = value;
        Ok(())
    }

    /// Re-tags the map. Consumes `self`: the tag of an existing map never changes.
    pub fn with_unit(self, unit: Unit) -> Self {
        Self { unit, ..self }
    }

    /// Checks the unit tag at an operation boundary.
    pub fn expect_unit(&self, expected: Unit) -> Result<()> {
        if self.unit != expected {
            return Err(Error::UnitMismatch { expected, found: self.unit });
        }
        Ok(())
    }

    pub fn ensure_same_shape<U>(&self, other: &ScalarMap<U>) -> Result<()> {
        if self.shape() != (other.width, other.height) {
            return Err(Error::ShapeMismatch { left: self.shape(), right: (other.width, other.height) });
        }
        Ok(())
    }

    /// Applies `f` per cell; the result is screened like any other construction.
    pub fn map<U: Real>(&self, unit: Unit, f: impl Fn(T) -> U) -> Result<ScalarMap<U>> {
        ScalarMap::from_vec(self.width, self.height, self.data.iter().map(|&v| f(v)).collect(), unit)
    }

    /// Converts the payload to another scalar type.
    pub fn cast<U: Real>(&self) -> ScalarMap<U> {
        ScalarMap {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
            unit: self.unit,
        }
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Dense boolean grid.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, fill: bool) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self { width, height, bits: vec![fill; width * height] })
    }

    pub fn from_vec(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(Error::LengthMismatch { width, height, found: bits.len() });
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        check_dims(width, height)?;
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Ok(Self { width, height, bits })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.bits[y * self.width + x]
    }

    pub fn get(&self, x: usize, y: usize) -> Option<bool> {
        (x < self.width && y < self.height).then(|| self.bits[y * self.width + x])
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) -> Result<()> {
        if x >= self.width || y >= self.height {
            return Err(Error::OutOfBounds { x, y, width: self.width, height: self.height });
        }
        let i = y * self.width + x;
        self.bits[i] = value;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn not(&self) -> Self {
        Self { width: self.width, height: self.height, bits: self.bits.iter().map(|b| !b).collect() }
    }

    pub fn or(&self, other: &BinaryMask) -> Result<Self> {
        self.ensure_same_shape(other.shape())?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        Ok(Self { width: self.width, height: self.height, bits })
    }

    /// Whether every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.shape() == other.shape() && self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    pub fn ensure_same_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch { left: self.shape(), right: shape });
        }
        Ok(())
    }

    /// 0/1 scalar view of the mask.
    pub fn to_map<T: Real>(&self, unit: Unit) -> ScalarMap<T> {
        ScalarMap {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { T::one() } else { T::zero() }).collect(),
            unit,
        }
    }
}

/// Three-channel image stored as planar channels of equal shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Image3<T> {
    channels: [ScalarMap<T>; 3],
}

impl<T: Real> Image3<T> {
    pub fn from_channels(channels: [ScalarMap<T>; 3]) -> Result<Self> {
        channels[0].ensure_same_shape(&channels[1])?;
        channels[0].ensure_same_shape(&channels[2])?;
        Ok(Self { channels })
    }

    /// Replicates one map into all three channels.
    pub fn from_gray(map: ScalarMap<T>) -> Self {
        Self { channels: [map.clone(), map.clone(), map] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [T; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let mut planes: [Vec<T>; 3] = Default::default();
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                for c in 0..3 {
                    planes[c].push(px[c]);
                }
            }
        }
        let [r, g, b] = planes;
        Ok(Self {
            channels: [
                ScalarMap::from_vec(width, height, r, Unit::Intensity)?,
                ScalarMap::from_vec(width, height, g, Unit::Intensity)?,
                ScalarMap::from_vec(width, height, b, Unit::Intensity)?,
            ],
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.channels[0].shape()
    }

    #[inline]
    pub fn channel(&self, c: usize) -> &ScalarMap<T> {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[ScalarMap<T>; 3] {
        &self.channels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [T; 3] {
        [self.channels[0].at(x, y), self.channels[1].at(x, y), self.channels[2].at(x, y)]
    }
}

/// Integer pixel location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: usize,
    pub y: usize,
}

impl PixelCoord {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn to_point<T: Real>(self) -> Point2<T> {
        Point2::new(T::lit(self.x as f64), T::lit(self.y as f64))
    }

    pub fn dist_sq(self, other: PixelCoord) -> u64 {
        let dx = self.x.abs_diff(other.x) as u64;
        let dy = self.y.abs_diff(other.y) as u64;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: PixelCoord) -> f64 {
        (self.dist_sq(other) as f64).sqrt()
    }
}

/// Sub-pixel 2D point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(self, other: Self) -> T {
        (self - other).norm()
    }
}

impl<T: Real> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl<T: Real> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_fill() {
        let m = ScalarMap::new(2, 2, 0.0f32, Unit::Unitless).unwrap();
        assert_eq!(m.data(), &[0.0; 4]);
        let one = ScalarMap::new(1, 1, 5.0f64, Unit::DisparityPx).unwrap();
        assert_eq!(one.at(0, 0), 5.0);
        assert_eq!(one.unit(), Unit::DisparityPx);
    }

    #[test]
    fn zero_dimension_rejected() {
        let err = ScalarMap::new(0, 3, 0.0f32, Unit::Unitless).unwrap_err();
        assert!(err.to_string().contains("zero dimension"));
        assert!(BinaryMask::new(3, 0, false).is_err());
    }

    #[test]
    fn nan_rejected_everywhere() {
        assert!(ScalarMap::new(2, 2, f32::NAN, Unit::Unitless).is_err());
        assert!(ScalarMap::from_vec(2, 1, vec![1.0f32, f32::INFINITY], Unit::Unitless).is_err());
        let mut m = ScalarMap::new(2, 2, 1.0f32, Unit::Unitless).unwrap();
        assert!(m.set(0, 0, f32::NAN).is_err());
        assert_eq!(m.at(0, 0), 1.0);
        assert!(m.map(Unit::Unitless, |v| v / 0.0).is_err());
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(ScalarMap::from_vec(2, 2, vec![0.0f32; 3], Unit::Unitless).is_err());
    }

    #[test]
    fn write_then_read() {
        let mut m = ScalarMap::new(3, 2, 0.0f32, Unit::Unitless).unwrap();
        for y in 0..2 {
            for x in 0..3 {
                m.set(x, y, (x * 10 + y) as f32).unwrap();
            }
        }
        for y in 0..2 {
            for x in 0..3 {
                assert_eq!(m.get(x, y), Some((x * 10 + y) as f32));
            }
        }
        assert!(m.set(3, 0, 1.0).is_err());
        assert_eq!(m.get(0, 2), None);
    }

    #[test]
    fn unit_check() {
        let m = ScalarMap::new(1, 1, 1.0f32, Unit::DepthM).unwrap();
        assert!(m.expect_unit(Unit::DisparityPx).is_err());
        assert!(m.expect_unit(Unit::DepthM).is_ok());
    }

    #[test]
    fn mask_ops() {
        let a = BinaryMask::from_fn(3, 1, |x, _| x == 0).unwrap();
        let b = BinaryMask::from_fn(3, 1, |x, _| x < 2).unwrap();
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert_eq!(a.or(&b).unwrap().count(), 2);
        assert_eq!(a.not().count(), 2);
    }
}
