use super::slopes::{push_s, push_u, stable_slope, unstable_slope};
use crate::error::Result;
use crate::map_core::{step_inverse, TorusPoint};
use crate::numeric::CompensatedSum;
use crate::parallel::{par_map, substream};
use crate::profile::ShearProfile;
use rand::Rng;

/// Backward orbit `ξ_0, ξ_{-1}, ..., ξ_{-n}`.
pub fn backward_orbit(p: TorusPoint, n: usize, h: &ShearProfile) -> Vec<TorusPoint> {
    let mut orbit = Vec::with_capacity(n + 1);
    orbit.push(p);
    for _ in 0..n {
        orbit.push(step_inverse(*orbit.last().unwrap(), h));
    }
    orbit
}

/// Slopes and one-step factors along a backward orbit.
#[derive(Debug, Clone)]
pub struct OrbitSlopes {
    pub orbit: Vec<TorusPoint>,
    /// `u[k] = u(ξ_{-k})`.
    pub u: Vec<f64>,
    /// `v[k] = v(ξ_{-k})`.
    pub v: Vec<f64>,
    /// `lambda[k] = 1 + h'(x_{-k}) + u(ξ_{-k})` for `k >= 1`; `lambda[0]` unused.
    pub lambda: Vec<f64>,
    /// `mu[k] = 1 + v(ξ_{-k})`.
    pub mu: Vec<f64>,
}

impl OrbitSlopes {
    pub fn compute(p: TorusPoint, n: usize, tol: f64, h: &ShearProfile) -> Result<Self> {
        Self::along(backward_orbit(p, n, h), tol, h)
    }

    /// Slopes along a precomputed backward orbit `orbit[k] = ξ_{-k}`.
    pub fn along(orbit: Vec<TorusPoint>, tol: f64, h: &ShearProfile) -> Result<Self> {
        assert!(!orbit.is_empty());
        let n = orbit.len() - 1;
        let mut u = vec![0.0; n + 1];
        let mut lambda = vec![1.0; n + 1];
        u[n] = unstable_slope(orbit[n], tol, h)?.value;
        for k in (1..=n).rev() {
            let (f, lam) = push_u(orbit[k], u[k], h);
            lambda[k] = lam;
            u[k - 1] = f;
        }
        let mut v = vec![0.0; n + 1];
        let mut mu = vec![1.0; n + 1];
        v[0] = stable_slope(orbit[0], tol, h)?.value;
        for k in 0..n {
            let (g, m) = push_s(orbit[k], v[k], h);
            mu[k] = m;
            v[k + 1] = g;
        }
        mu[n] = 1.0 + v[n];
        Ok(OrbitSlopes {
            orbit,
            u,
            v,
            lambda,
            mu,
        })
    }

    /// `ln λ_{u,k}` for `k = 0..=n`.
    pub fn log_lambda_curve(&self) -> Vec<f64> {
        let mut acc = CompensatedSum::new();
        let mut out = vec![0.0];
        for k in 1..self.lambda.len() {
            acc.add(self.lambda[k].ln());
            out.push(acc.value());
        }
        out
    }

    /// `ln μ_{s,k}` for `k = 0..=n`.
    pub fn log_mu_curve(&self) -> Vec<f64> {
        let mut acc = CompensatedSum::new();
        let mut out = vec![0.0];
        for k in 0..self.mu.len() - 1 {
            acc.add(self.mu[k].ln());
            out.push(acc.value());
        }
        out
    }
}

/// Expansion of the unstable direction and of the stable direction (under `T⁻¹`)
/// along `n` backward steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionRecord {
    pub n: usize,
    pub log_lambda_un: f64,
    pub log_mu_sn: f64,
    pub lambda_un: f64,
    pub mu_sn: f64,
    pub u0: f64,
    pub v0: f64,
    pub u_n: f64,
    pub v_n: f64,
}

pub fn expansion_product(
    p: TorusPoint,
    n: usize,
    tol: f64,
    h: &ShearProfile,
) -> Result<ExpansionRecord> {
    let s = OrbitSlopes::compute(p, n, tol, h)?;
    let ll = *s.log_lambda_curve().last().unwrap();
    let lm = *s.log_mu_curve().last().unwrap();
    Ok(ExpansionRecord {
        n,
        log_lambda_un: ll,
        log_mu_sn: lm,
        lambda_un: ll.exp(),
        mu_sn: lm.exp(),
        u0: s.u[0],
        v0: s.v[0],
        u_n: s.u[n],
        v_n: s.v[n],
    })
}

/// Relative residual of `μ_{s,n}(v_{-n} + u_{-n}) = λ_{u,n}(u_0 + v_0)`.
pub fn wronskian_residual(p: TorusPoint, n: usize, tol: f64, h: &ShearProfile) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let r = expansion_product(p, n, tol, h)?;
    let lhs = r.log_mu_sn + (r.v_n + r.u_n).ln();
    let rhs = r.log_lambda_un + (r.u0 + r.v0).ln();
    Ok((lhs - rhs).exp_m1().abs())
}

/// `e^{-K|x|} (|x| n / K + 1)²`.
pub fn expansion_lower_bound(x_abs: f64, n: f64, k: f64) -> f64 {
    (-k * x_abs).exp() * (x_abs * n / k + 1.0).powi(2)
}

/// Smallest `K` for which the expansion lower bound holds at every `n` of the
/// curve `ln λ_{u,n}`, `n = 0..`.
pub fn minimal_expansion_k(x_abs: f64, log_lambda: &[f64]) -> f64 {
    let ok = |k: f64| {
        log_lambda
            .iter()
            .enumerate()
            .all(|(n, &ll)| -k * x_abs + 2.0 * (x_abs * n as f64 / k).ln_1p() <= ll + 1e-12)
    };
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    if ok(lo) {
        return lo;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo < 1.0 + 1e-12 {
            break;
        }
    }
    hi
}

/// Cone constants `K₋ <= u / (|x| + √|y|) <= K₊` over a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    pub k_minus: f64,
    pub k_plus: f64,
}

/// Uniform samples of the torus, one seeded substream per sample.
pub fn uniform_points(count: usize, seed: u64) -> Vec<TorusPoint> {
    (0..count as u64)
        .map(|i| {
            let mut rng = substream(seed, i);
            TorusPoint::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
        .collect()
}

pub fn cone_fit(
    samples: usize,
    seed: u64,
    tol: f64,
    h: &ShearProfile,
    workers: usize,
) -> Result<ConeSpec> {
    let pts: Vec<TorusPoint> = uniform_points(samples, seed)
        .into_iter()
        .filter(|p| p.norm() >= 1e-6)
        .collect();
    let ratios = par_map(&pts, workers, |p| {
        unstable_slope(*p, tol, h).map(|u| u.value / (p.x.abs() + p.y.abs().sqrt()))
    });
    let mut spec = ConeSpec {
        k_minus: f64::INFINITY,
        k_plus: 0.0,
    };
    for r in ratios {
        let r = r?;
        spec.k_minus = spec.k_minus.min(r);
        spec.k_plus = spec.k_plus.max(r);
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_has_no_expansion() {
        let h = ShearProfile::Sine;
        let r = expansion_product(TorusPoint::ORIGIN, 100, 1e-12, &h).unwrap();
        assert_eq!(r.lambda_un, 1.0);
        assert_eq!(r.mu_sn, 1.0);
    }

    #[test]
    fn wronskian_identity_holds() {
        let h = ShearProfile::PeriodicSine;
        assert_eq!(
            wronskian_residual(TorusPoint::new(0.2, 0.1), 0, 1e-12, &h).unwrap(),
            0.0
        );
        for p in uniform_points(50, 3) {
            let r = wronskian_residual(p, 50, 1e-12, &h).unwrap();
            assert!(r < 1e-9, "{p:?}: {r}");
        }
    }

    #[test]
    fn expansion_is_monotone_in_the_cone() {
        let h = ShearProfile::Sine;
        let s = OrbitSlopes::compute(TorusPoint::new(0.2, 0.05), 200, 1e-12, &h).unwrap();
        let c = s.log_lambda_curve();
        assert!(c.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn minimal_k_is_tight() {
        let x = 0.02;
        let k_true = 3.0;
        let curve: Vec<f64> = (0..500)
            .map(|n| expansion_lower_bound(x, n as f64, k_true).ln())
            .collect();
        let k = minimal_expansion_k(x, &curve);
        assert!((k - k_true).abs() < 1e-6, "{k}");
    }

    #[test]
    fn cone_lower_constant_is_positive() {
        let h = ShearProfile::PeriodicSine;
        let c = cone_fit(500, 11, 1e-10, &h, 1).unwrap();
        assert!(c.k_minus > 0.0 && c.k_minus <= c.k_plus);
    }
}
