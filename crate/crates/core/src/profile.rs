//! Shear profiles `h` defining the map family.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `z - sin z`, accurate near zero.
fn z_minus_sin(z: f64) -> f64 {
    if z.abs() < 1.0 {
        // z^3/3! - z^5/5! + ...
        let z2 = z * z;
        let mut term = z * z2 / 6.0;
        let mut sum = term;
        let mut k = 3.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= -z2 / ((k + 1.0) * (k + 2.0));
            sum += term;
            k += 2.0;
        }
        sum
    } else {
        z - z.sin()
    }
}

/// `z^2/2 + cos z - 1`, accurate near zero.
fn half_sq_plus_cos_minus_one(z: f64) -> f64 {
    if z.abs() < 1.0 {
        // z^4/4! - z^6/6! + ...
        let z2 = z * z;
        let mut term = z2 * z2 / 24.0;
        let mut sum = term;
        let mut k = 4.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= -z2 / ((k + 1.0) * (k + 2.0));
            sum += term;
            k += 2.0;
        }
        sum
    } else {
        z * z / 2.0 + z.cos() - 1.0
    }
}

/// The odd shear function `h` with its derivatives and antiderivative `G`.
///
/// Arguments are chart values; torus operations reduce into `[-1/2, 1/2)` first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShearProfile {
    /// `h(x) = x - sin x`, cubic coefficient `1/6`. Not 1-periodic: the map it
    /// defines on the unit torus is discontinuous across `x = ±1/2`.
    Sine,
    /// `h(x) = x - sin(2πx)/(2π)`, the same profile conjugated to the unit torus.
    PeriodicSine,
    /// `h(x) = b x^3`; local diagnostics only.
    Cubic { b: f64 },
}

impl ShearProfile {
    pub fn cubic(b: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Profile(format!(
                "cubic coefficient must be > 0, got {b}"
            )));
        }
        Ok(ShearProfile::Cubic { b })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ShearProfile::Sine => "sine",
            ShearProfile::PeriodicSine => "periodic-sine",
            ShearProfile::Cubic { .. } => "cubic",
        }
    }

    #[inline]
    pub fn h(&self, x: f64) -> f64 {
        match *self {
            ShearProfile::Sine => z_minus_sin(x),
            ShearProfile::PeriodicSine => z_minus_sin(2.0 * PI * x) / (2.0 * PI),
            ShearProfile::Cubic { b } => b * x * x * x,
        }
    }

    #[inline]
    pub fn dh(&self, x: f64) -> f64 {
        match *self {
            ShearProfile::Sine => {
                let s = (0.5 * x).sin();
                2.0 * s * s
            }
            ShearProfile::PeriodicSine => {
                let s = (PI * x).sin();
                2.0 * s * s
            }
            ShearProfile::Cubic { b } => 3.0 * b * x * x,
        }
    }

    #[inline]
    pub fn d2h(&self, x: f64) -> f64 {
        match *self {
            ShearProfile::Sine => x.sin(),
            ShearProfile::PeriodicSine => 2.0 * PI * (2.0 * PI * x).sin(),
            ShearProfile::Cubic { b } => 6.0 * b * x,
        }
    }

    #[inline]
    pub fn d3h(&self, x: f64) -> f64 {
        match *self {
            ShearProfile::Sine => x.cos(),
            ShearProfile::PeriodicSine => 4.0 * PI * PI * (2.0 * PI * x).cos(),
            ShearProfile::Cubic { b } => 6.0 * b,
        }
    }

    /// Antiderivative `G(x) = ∫_0^x h`, closed form.
    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        match *self {
            ShearProfile::Sine => half_sq_plus_cos_minus_one(x),
            ShearProfile::PeriodicSine => {
                half_sq_plus_cos_minus_one(2.0 * PI * x) / (4.0 * PI * PI)
            }
            ShearProfile::Cubic { b } => 0.25 * b * x * x * x * x,
        }
    }

    /// Cubic coefficient `b = h'''(0)/6`.
    pub fn b(&self) -> f64 {
        self.d3h(0.0) / 6.0
    }

    /// `A = sqrt(2/b)`.
    pub fn a_const(&self) -> f64 {
        (2.0 / self.b()).sqrt()
    }

    /// Upper bound of `h'` over the chart `[-1/2, 1/2]`.
    pub fn max_dh(&self) -> f64 {
        match *self {
            ShearProfile::Sine => self.dh(0.5),
            ShearProfile::PeriodicSine => 2.0,
            ShearProfile::Cubic { b } => 0.75 * b,
        }
    }

    /// Upper bound of `|h''|` over the chart.
    pub fn max_d2h(&self) -> f64 {
        match *self {
            ShearProfile::Sine => 0.5f64.sin(),
            ShearProfile::PeriodicSine => 2.0 * PI,
            ShearProfile::Cubic { b } => 3.0 * b,
        }
    }

    /// Whether `h` descends to a smooth map of the unit circle.
    pub fn is_periodic_smooth(&self) -> bool {
        matches!(self, ShearProfile::PeriodicSine)
    }

    /// Restricted to near-origin diagnostics.
    pub fn is_local_only(&self) -> bool {
        matches!(self, ShearProfile::Cubic { .. })
    }

    /// Numerical check of h(0)=h'(0)=h''(0)=0, h'''(0)>0, oddness and h'>0 off zero.
    pub fn validate(&self) -> Result<()> {
        let tol = 1e-14;
        if self.h(0.0).abs() > tol || self.dh(0.0).abs() > tol || self.d2h(0.0).abs() > tol {
            return Err(Error::Profile(format!(
                "{}: h, h', h'' must vanish at 0",
                self.name()
            )));
        }
        if !(self.d3h(0.0) > 0.0) {
            return Err(Error::Profile(format!(
                "{}: h'''(0) must be positive",
                self.name()
            )));
        }
        for k in 1..=200 {
            let x = 0.5 * k as f64 / 200.0;
            if (self.h(-x) + self.h(x)).abs() > 1e-15 * (1.0 + self.h(x).abs()) {
                return Err(Error::Profile(format!(
                    "{}: h is not odd at {x}",
                    self.name()
                )));
            }
            if !(self.dh(x) > 0.0 && self.dh(-x) > 0.0) {
                return Err(Error::Profile(format!(
                    "{}: h' not positive at ±{x}",
                    self.name()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ShearProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShearProfile::Cubic { b } => write!(f, "cubic:{b}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for ShearProfile {
    type Err = Error;

    /// Accepts `sine`, `periodic-sine` and `cubic:<b>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sine" => Ok(ShearProfile::Sine),
            "periodic-sine" => Ok(ShearProfile::PeriodicSine),
            other => match other.strip_prefix("cubic:") {
                Some(b) => {
                    let b: f64 = b
                        .parse()
                        .map_err(|_| Error::Profile(format!("bad cubic coefficient '{b}'")))?;
                    ShearProfile::cubic(b)
                }
                None => Err(Error::Profile(format!("unknown profile '{other}'"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [ShearProfile; 3] = [
        ShearProfile::Sine,
        ShearProfile::PeriodicSine,
        ShearProfile::Cubic { b: 0.5 },
    ];

    #[test]
    fn builtins_validate() {
        for p in ALL {
            p.validate().unwrap();
        }
        assert!(ShearProfile::cubic(-1.0).is_err());
    }

    #[test]
    fn sine_constants() {
        let p = ShearProfile::Sine;
        assert!((p.b() - 1.0 / 6.0).abs() < 1e-15);
        assert!((p.a_const() - 12f64.sqrt()).abs() < 1e-14);
        assert!((ShearProfile::PeriodicSine.b() - 2.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn series_branches_agree_with_direct_formula() {
        let p = ShearProfile::Sine;
        for &x in &[0.3, 0.7, 0.99] {
            assert!((p.h(x) - (x - x.sin())).abs() < 1e-15);
            assert!((p.g(x) - (x * x / 2.0 + x.cos() - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for p in ALL {
            for &x in &[-0.41, -0.2, 0.05, 0.33] {
                let e = 1e-5;
                let fd1 = (p.h(x + e) - p.h(x - e)) / (2.0 * e);
                let fd2 = (p.dh(x + e) - p.dh(x - e)) / (2.0 * e);
                let fd3 = (p.d2h(x + e) - p.d2h(x - e)) / (2.0 * e);
                let fdg = (p.g(x + e) - p.g(x - e)) / (2.0 * e);
                let s = 1.0 + p.d3h(0.0);
                assert!((fd1 - p.dh(x)).abs() < 1e-8 * s, "{p} h' at {x}");
                assert!((fd2 - p.d2h(x)).abs() < 1e-7 * s, "{p} h'' at {x}");
                assert!((fd3 - p.d3h(x)).abs() < 1e-6 * s, "{p} h''' at {x}");
                assert!((fdg - p.h(x)).abs() < 1e-9 * s, "{p} G' at {x}");
            }
        }
    }

    #[test]
    fn parse_round_trip() {
        for p in ALL {
            let q: ShearProfile = p.to_string().parse().unwrap();
            assert_eq!(p, q);
        }
        assert!("tent".parse::<ShearProfile>().is_err());
    }
}
