//! The sextic boundary `f` in the plane of squared heights and the split of
//! the height quadrant into `Omega0` (two-cut phases possible) and
//! `OmegaInf` (one cut for every mass).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative width of the band around `f = 0` classified as on the curve.
pub const ON_CURVE_TOL: f64 = 1e-9;

/// `beta1` below which the curve has no point: the vertical asymptote.
pub fn asymptote() -> f64 {
    2.0 / (3.0 * 3.0f64.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Omega0,
    OmegaInf,
    OnCurve,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Region::Omega0 => "Omega0",
            Region::OmegaInf => "OmegaInf",
            Region::OnCurve => "OnCurve",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionClass {
    pub region: Region,
    /// `f(beta1^2, beta2^2)`.
    pub value: f64,
    /// Sum of the magnitudes of the terms of `f`, the scale of its rounding error.
    pub scale: f64,
}

fn terms(x: f64, y: f64) -> [f64; 11] {
    let d = x - y;
    [
        27.0 * x * y * d * d,
        -4.0 * x * x * x,
        -4.0 * y * y * y,
        204.0 * x * y * x,
        204.0 * x * y * y,
        -48.0 * x * x,
        48.0 * 7.0 * x * y,
        -48.0 * y * y,
        -48.0 * 4.0 * x,
        -48.0 * 4.0 * y,
        -256.0,
    ]
}

/// `f(x, y) = 27xy(x-y)^2 - 4(x^3+y^3) + 204xy(x+y) - 48(x^2-7xy+y^2+4x+4y) - 256`.
pub fn f_boundary(x: f64, y: f64) -> f64 {
    terms(x, y).iter().sum()
}

/// Exact evaluation at integer arguments.
pub fn f_boundary_exact(x: i64, y: i64) -> i128 {
    let (x, y) = (x as i128, y as i128);
    let d = x - y;
    27 * x * y * d * d - 4 * (x * x * x + y * y * y) + 204 * x * y * (x + y)
        - 48 * (x * x - 7 * x * y + y * y + 4 * x + 4 * y)
        - 256
}

fn f_scale(x: f64, y: f64) -> f64 {
    terms(x, y).iter().map(|t| t.abs()).sum()
}

pub fn classify(beta1: f64, beta2: f64) -> Result<RegionClass> {
    if !(beta1 > 0.0 && beta2 > 0.0 && beta1.is_finite() && beta2.is_finite()) {
        return Err(Error::invalid(format!("heights must be positive, got ({beta1}, {beta2})")));
    }
    let (x, y) = (beta1 * beta1, beta2 * beta2);
    let value = f_boundary(x, y);
    let scale = f_scale(x, y);
    let tol = ON_CURVE_TOL * (1.0 + scale);
    let region = if value < -tol {
        Region::Omega0
    } else if value > tol {
        Region::OmegaInf
    } else {
        Region::OnCurve
    };
    Ok(RegionClass { region, value, scale })
}

/// The height `beta2 > 0` with `(beta1, beta2)` on the curve, if any.
pub fn curve_point(beta1: f64) -> Option<f64> {
    if !(beta1 > 0.0 && beta1.is_finite()) {
        return None;
    }
    let x = beta1 * beta1;
    let g = |y: f64| f_boundary(x, y);
    let mut lo = 1e-6;
    let mut hi = 1e3;
    if g(lo) >= 0.0 {
        return None;
    }
    while g(hi) <= 0.0 {
        hi *= 10.0;
        if hi > 1e14 {
            return None;
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some((0.5 * (lo + hi)).sqrt())
}

/// Points `(beta1, beta2)` of the curve over a grid of `beta1` values; grid
/// points left of the asymptote are skipped.
pub fn curve_trace(grid: &[f64]) -> Vec<(f64, f64)> {
    grid.iter().filter_map(|&b1| curve_point(b1).map(|b2| (b1, b2))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_term_and_special_point() {
        assert_eq!(f_boundary(0.0, 0.0), -256.0);
        assert_eq!(f_boundary_exact(1, 1), 0);
        assert_eq!(f_boundary(1.0, 1.0), 0.0);
    }

    #[test]
    fn on_axis_is_cube() {
        for x in [0.0, 0.5, 2.0, 7.0] {
            assert!((f_boundary(x, 0.0) + 4.0 * (x + 4.0f64).powi(3)).abs() < 1e-9);
        }
    }

    #[test]
    fn sample_classes() {
        assert_eq!(classify(0.2, 0.2).unwrap().region, Region::Omega0);
        assert_eq!(classify(0.5, 2.7).unwrap().region, Region::OmegaInf);
        assert_eq!(classify(1.0, 1.0).unwrap().region, Region::OnCurve);
        assert!(classify(0.0, 1.0).is_err());
    }

    #[test]
    fn curve_through_unit_point() {
        let b2 = curve_point(1.0).unwrap();
        assert!((b2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymptote_behaviour() {
        assert!(curve_point(0.38).is_none());
        let far = curve_point(0.386).unwrap();
        assert!(far > 10.0);
        assert!(curve_point(asymptote() - 1e-3).is_none());
        assert!(curve_point(asymptote() + 1e-3).is_some());
    }

    #[test]
    fn trace_decreasing() {
        let grid: Vec<f64> = (0..200).map(|k| 0.39 + (3.0 - 0.39) * k as f64 / 199.0).collect();
        let pts = curve_trace(&grid);
        assert_eq!(pts.len(), 200);
        assert!(pts.windows(2).all(|w| w[1].1 < w[0].1));
    }

    proptest! {
        #[test]
        fn symmetric(x in 0.0f64..20.0, y in 0.0f64..20.0) {
            let a = f_boundary(x, y);
            let b = f_boundary(y, x);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + f_scale(x, y)));
        }

        #[test]
        fn curve_symmetric(b1 in 0.4f64..3.0) {
            let b2 = curve_point(b1).unwrap();
            prop_assume!(b2 > asymptote() + 1e-6);
            let back = curve_point(b2).unwrap();
            prop_assert!((back - b1).abs() < 1e-7 * (1.0 + b1));
        }
    }
}
