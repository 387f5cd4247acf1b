use super::dynamics::{step_inverse_local, step_local};
use super::hamiltonian::{level_curve_y, quasi_hamiltonian_compensated};
use super::point::TorusPoint;
use super::sector::{in_parabolic, in_square};
use crate::error::{Error, Result};
use crate::profile::ShearProfile;

pub const DEFAULT_CAP: usize = 10_000_000;

/// Indices of a backward passage through the parabolic sector `P_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageRecord {
    /// First backward index in `P_M`.
    pub m_plus: usize,
    /// Last backward index in `P_M`.
    pub m_minus: usize,
    /// Last backward index with `x <= 0`.
    pub m: usize,
    /// `H` at the point of index `m`.
    pub e: f64,
    /// Range of `|y|` over indices `m_plus..=m_minus`.
    pub y_abs_min: f64,
    pub y_abs_max: f64,
    /// Largest `|y - Υ_E(x)| / (y² |x|)` over indices `<= m` with `x != 0`.
    pub level_ratio: f64,
    pub x_plus: f64,
    pub x_minus: f64,
}

impl PassageRecord {
    /// Checks the three passage bounds with multiplicative slack `s >= 1`.
    /// Returns `(y-band, m_plus bound, m_minus - m_plus bounds)`.
    pub fn check_bounds(&self, h: &ShearProfile, s: f64) -> (bool, bool, bool) {
        let (b, a) = (h.b(), h.a_const());
        let se = self.e.sqrt();
        let band = self.y_abs_min >= se / s && self.y_abs_max <= 3.0 * se * s;
        let entry = self.m_plus as f64 <= 2.0 * a * (self.e / b).powf(-0.25) * s;
        let width = (self.m_minus - self.m_plus) as f64;
        let dur = width >= 2.0 * (12.0 * self.e * b).powf(-0.25) / s
            && width <= 4.0 * (self.e * b).powf(-0.25) * s;
        (band, entry, dur)
    }
}

/// Last point inside `Q_δ` of the forward orbit of `(0, -√(2E))`, so that the
/// backward orbit from it crosses `x = 0` at energy `E`.
pub fn passage_start(e: f64, delta: f64, h: &ShearProfile, cap: usize) -> Result<TorusPoint> {
    if !(e > 0.0 && 2.0 * e < delta * delta) {
        return Err(Error::Domain(format!(
            "passage energy {e} outside (0, δ²/2)"
        )));
    }
    let mut p = TorusPoint::local(0.0, -(2.0 * e).sqrt());
    for _ in 0..cap {
        let q = step_local(p, h);
        if !in_square(q, delta) {
            return Ok(p);
        }
        p = q;
    }
    Err(Error::NotApplicable(format!(
        "orbit stayed in Q_{delta} for {cap} steps"
    )))
}

/// Tracks the backward orbit of `p` (with `x <= 0`, `y < 0`) through `P_M ∩ Q_δ`.
pub fn fat_sector_passage(
    p: TorusPoint,
    h: &ShearProfile,
    m_const: f64,
    delta: f64,
    cap: usize,
) -> Result<PassageRecord> {
    if !(p.x <= 0.0 && p.y < 0.0 && in_square(p, delta)) {
        return Err(Error::NotApplicable(format!(
            "passage start ({}, {}) must satisfy x <= 0, y < 0 inside Q_{delta}",
            p.x, p.y
        )));
    }
    let mut orbit = Vec::new();
    let mut q = p;
    let mut m_plus = None;
    let mut m_minus = 0;
    let mut m = 0;
    for n in 0..=cap {
        if n > 0 && !in_square(q, delta) {
            break;
        }
        if n == cap {
            return Err(Error::NotApplicable(format!(
                "passage not completed within {cap} steps"
            )));
        }
        if in_parabolic(q, m_const, delta) {
            m_plus.get_or_insert(n);
            m_minus = n;
        }
        if q.x <= 0.0 {
            m = n;
        }
        orbit.push(q);
        q = step_inverse_local(q, h);
    }
    let m_plus = m_plus.ok_or_else(|| {
        Error::NotApplicable("backward orbit never enters the parabolic sector".into())
    })?;
    let e = quasi_hamiltonian_compensated(orbit[m], h);
    if !(e > 0.0) {
        return Err(Error::NotApplicable(format!(
            "non-positive passage energy {e}"
        )));
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for z in &orbit[m_plus..=m_minus] {
        lo = lo.min(z.y.abs());
        hi = hi.max(z.y.abs());
    }
    let mut level_ratio = 0.0f64;
    for z in &orbit[..=m] {
        if z.x != 0.0 {
            let ups = level_curve_y(e, z.x, h)?;
            level_ratio = level_ratio.max((z.y - ups).abs() / (z.y * z.y * z.x.abs()));
        }
    }
    Ok(PassageRecord {
        m_plus,
        m_minus,
        m,
        e,
        y_abs_min: lo,
        y_abs_max: hi,
        level_ratio,
        x_plus: orbit[m_plus].x,
        x_minus: orbit[m_minus].x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passages_obey_bounds() {
        let h = ShearProfile::Sine;
        let m = h.b().sqrt();
        for k in 0..9 {
            let e = 1e-8 * 10f64.powf(0.5 * k as f64);
            let p = passage_start(e, 0.1, &h, DEFAULT_CAP).unwrap();
            let r = fat_sector_passage(p, &h, m, 0.1, DEFAULT_CAP).unwrap();
            assert!(r.m_plus <= r.m && r.m <= r.m_minus, "{r:?}");
            assert!(r.x_plus < 0.0 && r.x_minus > 0.0);
            assert!(r.level_ratio.is_finite());
            assert!((r.e - e).abs() < 1e-6 * e);
            let (a, b, c) = r.check_bounds(&h, 1.25);
            assert!(a && b && c, "E={e}: {r:?}");
        }
    }

    #[test]
    fn rejects_wrong_quadrant() {
        let h = ShearProfile::Sine;
        assert!(fat_sector_passage(TorusPoint::local(0.1, 0.01), &h, 0.4, 0.2, 100).is_err());
    }
}
