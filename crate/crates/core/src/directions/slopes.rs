use crate::error::{Error, Result};
use crate::map_core::{step, step_inverse, wrap, TorusPoint};
use crate::profile::ShearProfile;

pub const DEPTH_CAP: usize = 1 << 20;
const START_DEPTH: usize = 16;

/// Pushes the slope `u` of `(1, u)` at `p` forward: returns `(F(x, u), λ_u)` with
/// `DT(p)(1, u) = λ_u (1, F(x, u))`.
#[inline]
pub fn push_u(p: TorusPoint, u: f64, h: &ShearProfile) -> (f64, f64) {
    let lam = 1.0 + h.dh(wrap(p.x)) + u;
    (1.0 - 1.0 / lam, lam)
}

/// Pulls the slope `v` of `(1, -v)` at `p` back: returns `(F⁻(p, v), μ_s)` with
/// `DT⁻¹(p)(1, -v) = μ_s (1, -F⁻(p, v))`.
#[inline]
pub fn push_s(p: TorusPoint, v: f64, h: &ShearProfile) -> (f64, f64) {
    let mu = 1.0 + v;
    (h.dh(wrap(p.x - p.y)) + v / mu, mu)
}

/// A slope with the iteration depth used and its certified error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeEstimate {
    pub value: f64,
    pub depth: usize,
    pub err: f64,
}

/// Unstable slope `u` and stable slope `v` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeRecord {
    pub u: f64,
    pub v: f64,
    pub theta: f64,
    pub depth: usize,
    pub err: f64,
}

/// Bracket iteration: the image of the seed interval under the slope pushes along
/// `orbit[n..=0]` shrinks onto the invariant slope.
fn converge<S, P>(
    p: TorusPoint,
    tol: f64,
    seeds: (f64, f64),
    mut next: S,
    push: P,
    what: &str,
) -> Result<SlopeEstimate>
where
    S: FnMut(TorusPoint) -> TorusPoint,
    P: Fn(TorusPoint, f64) -> f64,
{
    if p.x == 0.0 && p.y == 0.0 {
        return Ok(SlopeEstimate {
            value: 0.0,
            depth: 0,
            err: 0.0,
        });
    }
    let mut orbit = vec![p];
    let mut n = START_DEPTH;
    loop {
        while orbit.len() <= n {
            let q = next(*orbit.last().unwrap());
            orbit.push(q);
        }
        let (mut lo, mut hi) = seeds;
        for k in (1..=n).rev() {
            lo = push(orbit[k], lo);
            hi = push(orbit[k], hi);
        }
        let width = (hi - lo).abs();
        if width <= 2.0 * tol {
            return Ok(SlopeEstimate {
                value: 0.5 * (lo + hi),
                depth: n,
                err: 0.5 * width,
            });
        }
        if n >= DEPTH_CAP {
            return Err(Error::Precision(format!(
                "{what} slope at ({}, {}) not resolved to {tol:e} within depth {n} (width {width:e})",
                p.x, p.y
            )));
        }
        n *= 2;
    }
}

/// Unstable slope at `p` from the backward orbit, certified to `tol`.
pub fn unstable_slope(p: TorusPoint, tol: f64, h: &ShearProfile) -> Result<SlopeEstimate> {
    converge(
        p,
        tol,
        (0.0, 1.0),
        |q| step_inverse(q, h),
        |q, u| push_u(q, u, h).0,
        "unstable",
    )
}

/// Stable slope at `p` from the forward orbit, certified to `tol`.
pub fn stable_slope(p: TorusPoint, tol: f64, h: &ShearProfile) -> Result<SlopeEstimate> {
    converge(
        p,
        tol,
        (0.0, h.max_dh() + 1.0),
        |q| step(q, h),
        |q, v| push_s(q, v, h).0,
        "stable",
    )
}

pub fn slope_record(p: TorusPoint, tol: f64, h: &ShearProfile) -> Result<SlopeRecord> {
    let u = unstable_slope(p, tol, h)?;
    let v = stable_slope(p, tol, h)?;
    Ok(SlopeRecord {
        u: u.value,
        v: v.value,
        theta: u.value + v.value,
        depth: u.depth.max(v.depth),
        err: u.err.max(v.err),
    })
}

/// Provider of the unstable and stable slope fields.
pub trait DirectionField: Sync {
    fn unstable(&self, p: TorusPoint) -> Result<f64>;
    fn stable(&self, p: TorusPoint) -> Result<f64>;
}

/// Slope fields of the map itself, computed pointwise to a fixed tolerance.
#[derive(Debug, Clone, Copy)]
pub struct MapDirections {
    pub profile: ShearProfile,
    pub tol: f64,
}

impl MapDirections {
    pub fn new(profile: ShearProfile, tol: f64) -> Self {
        MapDirections { profile, tol }
    }
}

impl DirectionField for MapDirections {
    fn unstable(&self, p: TorusPoint) -> Result<f64> {
        unstable_slope(p.reduced(), self.tol, &self.profile).map(|s| s.value)
    }

    fn stable(&self, p: TorusPoint) -> Result<f64> {
        stable_slope(p.reduced(), self.tol, &self.profile).map(|s| s.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::{involution_pi, jacobian};
    use proptest::prelude::*;

    const SINE: ShearProfile = ShearProfile::Sine;

    #[test]
    fn neutral_point() {
        assert_eq!(push_u(TorusPoint::ORIGIN, 0.0, &SINE), (0.0, 1.0));
        assert_eq!(push_s(TorusPoint::ORIGIN, 0.0, &SINE), (0.0, 1.0));
        assert_eq!(
            unstable_slope(TorusPoint::ORIGIN, 1e-10, &SINE)
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(
            stable_slope(TorusPoint::ORIGIN, 1e-10, &SINE)
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn fixed_slope_of_push() {
        let p = TorusPoint::new(0.1, 0.0);
        let d = SINE.dh(0.1);
        let ubar = (-d + (d * d + 4.0 * d).sqrt()) / 2.0;
        assert!((ubar - 0.068_227).abs() < 1e-6, "{ubar}");
        assert!((push_u(p, ubar, &SINE).0 - ubar).abs() < 1e-15);
    }

    #[test]
    fn seed_independence() {
        let p = TorusPoint::new(0.25, 0.25);
        let tol = 1e-10;
        let a = unstable_slope(p, tol, &SINE).unwrap();
        for seed in [0.5, 2.0] {
            let mut orbit = vec![p];
            for _ in 0..a.depth {
                orbit.push(step_inverse(*orbit.last().unwrap(), &SINE));
            }
            let mut u = seed;
            for k in (1..=a.depth).rev() {
                u = push_u(orbit[k], u, &SINE).0;
            }
            assert!(
                (u - a.value).abs() <= tol,
                "seed {seed}: {u} vs {}",
                a.value
            );
        }
    }

    fn point() -> impl Strategy<Value = TorusPoint> {
        (-0.5f64..0.5, -0.5f64..0.5).prop_map(|(x, y)| TorusPoint::new(x, y))
    }

    proptest! {
        #[test]
        fn push_is_the_derivative(p in point(), u in 0.0f64..3.0, v in 0.0f64..3.0) {
            let h = ShearProfile::PeriodicSine;
            let j = jacobian(p, &h);
            let (f, lam) = push_u(p, u, &h);
            let w = j.apply((1.0, u));
            prop_assert!((w.0 - lam).abs() < 1e-14);
            prop_assert!((w.0 * f - w.1).abs() < 1e-14);
            let ji = jacobian(step_inverse(p, &h), &h).inverse();
            let (g, mu) = push_s(p, v, &h);
            let w = ji.apply((1.0, -v));
            prop_assert!((w.0 - mu).abs() < 1e-14);
            prop_assert!((w.0 * -g - w.1).abs() < 1e-14);
        }

        #[test]
        fn cone_is_invariant(p in point(), u in 0.0f64..10.0) {
            let h = ShearProfile::PeriodicSine;
            let (f, _) = push_u(p, u, &h);
            prop_assert!(f >= 0.0);
            let (f2, _) = push_u(step(p, &h), push_u(p, 0.0, &h).0, &h);
            if p.x.abs() > 1e-6 || step(p, &h).x.abs() > 1e-6 {
                prop_assert!(f2 > 0.0);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reversibility_of_slopes(p in point()) {
            let h = ShearProfile::PeriodicSine;
            let tol = 1e-12;
            let v = stable_slope(p, tol, &h).unwrap().value;
            let u = unstable_slope(involution_pi(p, &h), tol, &h).unwrap().value;
            prop_assert!((v - (h.dh(p.x) + u)).abs() < 1e-9);
            prop_assert!(u >= 0.0 && v >= 0.0);
        }
    }
}
