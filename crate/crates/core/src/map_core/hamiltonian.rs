use super::dynamics::step_local;
use super::point::TorusPoint;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::profile::ShearProfile;

/// Near-origin quasi-Hamiltonian
/// `H = y²/2 - G(x) + h(x) y/2 - h'(x) y²/12 + h(x)²/12`, in the local chart.
pub fn quasi_hamiltonian(p: TorusPoint, h: &ShearProfile) -> f64 {
    let (x, y) = (p.x, p.y);
    let hx = h.h(x);
    0.5 * y * y - h.g(x) + 0.5 * hx * y - h.dh(x) * y * y / 12.0 + hx * hx / 12.0
}

/// Same value with compensated summation of the five terms.
pub fn quasi_hamiltonian_compensated(p: TorusPoint, h: &ShearProfile) -> f64 {
    let (x, y) = (p.x, p.y);
    let hx = h.h(x);
    let mut acc = CompensatedSum::new();
    acc.add(0.5 * y * y);
    acc.add(-h.g(x));
    acc.add(0.5 * hx * y);
    acc.add(-h.dh(x) * y * y / 12.0);
    acc.add(hx * hx / 12.0);
    acc.value()
}

/// `H(T p) - H(p)` evaluated without wrapping.
pub fn hamiltonian_drift(p: TorusPoint, h: &ShearProfile) -> f64 {
    let q = step_local(p, h);
    let mut acc = CompensatedSum::new();
    acc.add(quasi_hamiltonian_compensated(q, h));
    acc.add(-quasi_hamiltonian_compensated(p, h));
    acc.value()
}

/// Negative branch `y = Υ_E(x)` of the level set `H(x, y) = E`.
pub fn level_curve_y(e: f64, x: f64, h: &ShearProfile) -> Result<f64> {
    if !(e >= 0.0) || !e.is_finite() {
        return Err(Error::Domain(format!(
            "level E = {e} must be finite and >= 0"
        )));
    }
    if !(x.abs() <= 0.5) {
        return Err(Error::Range {
            value: x,
            lo: -0.5,
            hi: 0.5,
        });
    }
    let hx = h.h(x);
    let a = 0.5 - h.dh(x) / 12.0;
    let hh = |y: f64| quasi_hamiltonian_compensated(TorusPoint::local(x, y), h) - e;
    let dhh = |y: f64| 2.0 * a * y + 0.5 * hx;

    // H is a convex quadratic in y; the negative branch lies left of its vertex.
    let vertex = -hx / (4.0 * a);
    let hi = vertex.min(0.0);
    if hh(hi) > 0.0 {
        return Err(Error::RootNotFound(format!(
            "no negative level-curve point at x = {x}, E = {e}"
        )));
    }
    if hh(hi) == 0.0 {
        return Ok(hi);
    }
    let guess = -(2.0 * (e + h.g(x))).max(0.0).sqrt();
    let mut lo = guess.min(hi) - 1e-3;
    let mut k = 0;
    while hh(lo) <= 0.0 {
        lo = hi - 2.0 * (hi - lo);
        k += 1;
        if k > 200 {
            return Err(Error::RootNotFound(format!(
                "no bracket at x = {x}, E = {e}"
            )));
        }
    }
    // Invariant: hh(lo) > 0 >= hh(hi).
    let mut hi = hi;
    let mut y = guess.clamp(lo, hi);
    for _ in 0..200 {
        let f = hh(y);
        if f == 0.0 {
            return Ok(y);
        }
        if f > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let d = dhh(y);
        let mut next = y - f / d;
        if !(next > lo && next < hi) || d == 0.0 {
            next = 0.5 * (lo + hi);
        }
        let done =
            (next - y).abs() <= 4.0 * f64::EPSILON * y.abs() || hi - lo <= f64::EPSILON * lo.abs();
        y = next;
        if done {
            break;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::loglog_slope;

    const SINE: ShearProfile = ShearProfile::Sine;

    #[test]
    fn values() {
        assert_eq!(quasi_hamiltonian(TorusPoint::ORIGIN, &SINE), 0.0);
        for &y in &[0.1, -0.3, 1e-4] {
            assert_eq!(
                quasi_hamiltonian(TorusPoint::local(0.0, y), &SINE),
                0.5 * y * y
            );
        }
        // 40-digit reference value
        let v = quasi_hamiltonian(TorusPoint::local(0.25, 0.1), &SINE);
        assert!((v - 0.004_942_035_630_350_621).abs() < 1e-15, "{v}");
        let c = quasi_hamiltonian_compensated(TorusPoint::local(0.25, 0.1), &SINE);
        assert!((c - v).abs() < 1e-16);
    }

    #[test]
    fn drift_orders() {
        assert_eq!(hamiltonian_drift(TorusPoint::ORIGIN, &SINE), 0.0);
        let ts: Vec<f64> = (0..8)
            .map(|k| 0.2 * 0.75f64.powi(k))
            .filter(|t| *t >= 0.025)
            .collect();
        let dx: Vec<f64> = ts
            .iter()
            .map(|&t| hamiltonian_drift(TorusPoint::local(t, 0.0), &SINE).abs())
            .collect();
        let dy: Vec<f64> = ts
            .iter()
            .map(|&t| hamiltonian_drift(TorusPoint::local(0.0, t), &SINE).abs())
            .collect();
        assert!(loglog_slope(&ts, &dx) >= 7.5, "{:?}", dx);
        assert!(loglog_slope(&ts, &dy) >= 3.5, "{:?}", dy);
    }

    #[test]
    fn level_curve_examples() {
        let y = level_curve_y(1e-4, 0.0, &SINE).unwrap();
        assert!((y + 0.014_142_135_623_730_95).abs() < 1e-15);
        assert_eq!(level_curve_y(0.0, 0.0, &SINE).unwrap(), 0.0);

        let x = 0.05;
        let y = level_curve_y(1e-4, x, &SINE).unwrap();
        let approx = -(2.0 * (1e-4 + SINE.g(x))).sqrt();
        assert!(((y - approx) / approx).abs() < 0.01);

        // bisection oracle on H directly
        let f = |y: f64| quasi_hamiltonian(TorusPoint::local(x, y), &SINE) - 1e-4;
        let (mut lo, mut hi) = (-0.1, -0.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) > 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!((y - lo).abs() < 1e-14);
    }

    #[test]
    fn level_curve_residual() {
        for &e in &[1e-8, 1e-6, 1e-4, 1e-2] {
            for k in -10..=10 {
                let x = 0.045 * k as f64;
                let y = level_curve_y(e, x, &SINE).unwrap();
                assert!(y <= 0.0);
                let r = quasi_hamiltonian_compensated(TorusPoint::local(x, y), &SINE) - e;
                assert!(r.abs() <= 1e-13, "E={e} x={x} r={r}");
            }
        }
        assert!(level_curve_y(-1.0, 0.0, &SINE).is_err());
        assert!(level_curve_y(1e-4, 0.7, &SINE).is_err());
    }
}
