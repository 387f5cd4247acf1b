use super::expansion::OrbitSlopes;
use crate::error::{Error, Result};
use crate::map_core::{wrap, TorusPoint};
use crate::numeric::CompensatedSum;
use crate::profile::ShearProfile;

const SERIES_CAP: usize = 1 << 16;
const SLOPE_TOL: f64 = 1e-14;

/// Truncated series with the number of terms kept and a tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
    pub tail: f64,
}

fn run_series<F>(
    p: TorusPoint,
    h: &ShearProfile,
    tol: f64,
    what: &str,
    body: F,
) -> Result<SeriesValue>
where
    F: Fn(&OrbitSlopes) -> (f64, f64),
{
    if p.x == 0.0 && p.y == 0.0 {
        return Err(Error::Domain(format!(
            "{what} is undefined at the fixed point"
        )));
    }
    let mut n = 64;
    loop {
        let s = OrbitSlopes::compute(p, n, SLOPE_TOL, h)?;
        let (value, tail) = body(&s);
        if tail < tol {
            return Ok(SeriesValue {
                value,
                terms: n,
                tail,
            });
        }
        if n >= SERIES_CAP {
            return Err(Error::Precision(format!(
                "{what} tail {tail:e} above {tol:e} after {n} terms"
            )));
        }
        n *= 2;
    }
}

/// `∂ᵘu(ξ) = Σ_{k>=1} λ_{u,k}^{-3} h''(x_{-k})`, derivative along `(1, u)`.
pub fn du_along_u(p: TorusPoint, h: &ShearProfile, tol: f64) -> Result<SeriesValue> {
    let bound = 2.0 * h.max_d2h() + 1.0;
    run_series(p, h, tol, "∂ᵘu", |s| {
        let mut sum = CompensatedSum::new();
        let mut log_l = 0.0;
        for k in 1..s.lambda.len() {
            log_l += s.lambda[k].ln();
            sum.add((-3.0 * log_l).exp() * h.d2h(wrap(s.orbit[k].x)));
        }
        (sum.value(), (-3.0 * log_l).exp() * bound)
    })
}

/// `∂ˢu(ξ) = Σ_{k>=1} λ_{u,k}^{-2} μ_{s,k} h''(x_{-k})`, derivative along `(1, -v)`.
pub fn du_along_s(p: TorusPoint, h: &ShearProfile, tol: f64) -> Result<SeriesValue> {
    run_series(p, h, tol, "∂ˢu", |s| {
        let mut sum = CompensatedSum::new();
        let (mut log_l, mut log_m) = (0.0, 0.0);
        for k in 1..s.lambda.len() {
            log_l += s.lambda[k].ln();
            log_m += s.mu[k - 1].ln();
            sum.add((log_m - 2.0 * log_l).exp() * h.d2h(wrap(s.orbit[k].x)));
        }
        let n = s.lambda.len() - 1;
        let theta = (s.u[n] + s.v[n]).max(f64::MIN_POSITIVE);
        let tail = (log_m - 2.0 * log_l).exp() * h.max_d2h() * (1.0 + 1.0 / theta);
        (sum.value(), tail)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::slopes::{stable_slope, unstable_slope};

    #[test]
    fn vanishes_on_orbit_where_curvature_vanishes() {
        // (-1/2, 0) has period three with x in {0, -1/2}, where h'' = 0.
        let h = ShearProfile::PeriodicSine;
        let p = TorusPoint::new(-0.5, 0.0);
        assert!(du_along_u(p, &h, 1e-10).unwrap().value.abs() < 1e-12);
        assert!(du_along_s(p, &h, 1e-10).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn matches_finite_differences() {
        let h = ShearProfile::PeriodicSine;
        let p = TorusPoint::new(0.2, 0.1);
        let tol = 1e-13;
        let u = |q: TorusPoint| unstable_slope(q, tol, &h).unwrap().value;
        let u0 = u(p);
        let v0 = stable_slope(p, tol, &h).unwrap().value;
        let e = 1e-5;
        let fd_u = (u(TorusPoint::new(p.x + e, p.y + e * u0))
            - u(TorusPoint::new(p.x - e, p.y - e * u0)))
            / (2.0 * e);
        let fd_s = (u(TorusPoint::new(p.x + e, p.y - e * v0))
            - u(TorusPoint::new(p.x - e, p.y + e * v0)))
            / (2.0 * e);
        let su = du_along_u(p, &h, 1e-10).unwrap().value;
        let ss = du_along_s(p, &h, 1e-10).unwrap().value;
        assert!((su - fd_u).abs() < 1e-3, "{su} vs {fd_u}");
        assert!((ss - fd_s).abs() < 1e-3, "{ss} vs {fd_s}");
    }
}
