use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Canonical representative of `v mod 1` in `[-1/2, 1/2)`.
#[inline]
pub fn wrap(v: f64) -> f64 {
    let mut r = v - (v + 0.5).floor();
    if r >= 0.5 {
        r -= 1.0;
    } else if r < -0.5 {
        r += 1.0;
    }
    r
}

/// Shortest signed displacement `a - b` on the circle.
#[inline]
pub fn circle_delta(a: f64, b: f64) -> f64 {
    wrap(a - b)
}

/// A point of the two-torus in the chart `[-1/2, 1/2)^2`.
///
/// Values built with [`TorusPoint::local`] are left unreduced; they are used by
/// near-origin diagnostics that must not see the wrap-around.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl TorusPoint {
    pub const ORIGIN: TorusPoint = TorusPoint { x: 0.0, y: 0.0 };

    /// Reduced point; the caller guarantees finiteness.
    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint {
            x: wrap(x),
            y: wrap(y),
        }
    }

    /// Unreduced chart coordinates.
    #[inline]
    pub const fn local(x: f64, y: f64) -> Self {
        TorusPoint { x, y }
    }

    pub fn reduced(self) -> Self {
        TorusPoint::new(self.x, self.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Euclidean distance on the torus.
    pub fn torus_dist(self, other: TorusPoint) -> f64 {
        circle_delta(self.x, other.x).hypot(circle_delta(self.y, other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for TorusPoint {
    type Output = TorusPoint;
    fn add(self, o: TorusPoint) -> TorusPoint {
        TorusPoint::local(self.x + o.x, self.y + o.y)
    }
}

impl Sub for TorusPoint {
    type Output = TorusPoint;
    fn sub(self, o: TorusPoint) -> TorusPoint {
        TorusPoint::local(self.x - o.x, self.y - o.y)
    }
}

impl Mul<TorusPoint> for f64 {
    type Output = TorusPoint;
    fn mul(self, p: TorusPoint) -> TorusPoint {
        TorusPoint::local(self * p.x, self * p.y)
    }
}

/// Canonical torus representative of `(x, y)`.
pub fn reduce(x: f64, y: f64) -> Result<TorusPoint> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::Domain(format!("non-finite coordinates ({x}, {y})")));
    }
    Ok(TorusPoint::new(x, y))
}
