//! Bilinear sampling with border clamping.

use crate::grid::ScalarMap;
use crate::scalar::Real;

/// Samples `map` at a sub-pixel location; coordinates outside the map are
/// clamped to the border. Integer coordinates return the stored value
/// exactly.
pub fn bilinear<T: Real>(map: &ScalarMap<T>, x: f64, y: f64) -> T {
    let (w, h) = map.shape();
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let v00 = map.at(x0, y0).as_f64();
    if fx == 0.0 && fy == 0.0 {
        return map.at(x0, y0);
    }
    let v10 = map.at(x1, y0).as_f64();
    let v01 = map.at(x0, y1).as_f64();
    let v11 = map.at(x1, y1).as_f64();
    let top = v00 + (v10 - v00) * fx;
    let bottom = v01 + (v11 - v01) * fx;
    T::lit(top + (bottom - top) * fy)
}

/// Whether `(x, y)` lies inside the sampling domain `[0, w-1] x [0, h-1]`.
pub fn in_domain(width: usize, height: usize, x: f64, y: f64) -> bool {
    x >= 0.0 && y >= 0.0 && x <= (width - 1) as f64 && y <= (height - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Unit;

    #[test]
    fn exact_at_integers() {
        let m = ScalarMap::from_fn(4, 3, Unit::Unitless, |x, y| (x * 7 + y) as f32 * 0.1).unwrap();
        for y in 0..3 {
            for x in 0..4 {
                assert_eq!(bilinear(&m, x as f64, y as f64), m.at(x, y));
            }
        }
    }

    #[test]
    fn linear_signal_reproduced() {
        let m = ScalarMap::from_fn(8, 8, Unit::Unitless, |x, y| 2.0 * x as f64 - 0.5 * y as f64).unwrap();
        let v = bilinear(&m, 3.25, 4.5);
        assert!((v - (6.5 - 2.25)).abs() < 1e-12);
    }

    #[test]
    fn clamps_outside() {
        let m = ScalarMap::from_fn(3, 1, Unit::Unitless, |x, _| x as f32).unwrap();
        assert_eq!(bilinear(&m, -5.0, 0.0), 0.0);
        assert_eq!(bilinear(&m, 9.0, 3.0), 2.0);
        assert!(!in_domain(3, 1, -0.1, 0.0));
        assert!(in_domain(3, 1, 2.0, 0.0));
    }
}
