use super::dynamics::step;
use super::point::TorusPoint;
use super::sector::in_rect;
use crate::error::{Error, Result};
use crate::profile::ShearProfile;

/// Tracked points for the candidate ball `B_{δ/4}(η)`: center plus eight boundary points.
fn ball_points(eta: TorusPoint, r: f64) -> [TorusPoint; 9] {
    let mut pts = [eta; 9];
    for (k, p) in pts.iter_mut().enumerate().skip(1) {
        let a = std::f64::consts::FRAC_PI_4 * (k - 1) as f64;
        *p = TorusPoint::new(eta.x + r * a.cos(), eta.y + r * a.sin());
    }
    pts
}

/// Smallest `n <= cap` such that, for some candidate sub-ball in `B_{3δ/4}(center)`,
/// every tracked point of `T^n B_{δ/4}(η)` lies outside `D_R`.
pub fn escape_time(
    center: TorusPoint,
    delta: f64,
    r: f64,
    h: &ShearProfile,
    cap: usize,
) -> Result<usize> {
    if !(delta > 0.0 && r > 0.0) {
        return Err(Error::Domain(format!(
            "need δ > 0 and R > 0, got {delta}, {r}"
        )));
    }
    if delta >= r * r {
        return Err(Error::Domain(format!(
            "need δ < R², got δ = {delta}, R = {r}"
        )));
    }
    if center.x.abs() + delta > 0.5 * r || center.y.abs() + delta > 0.25 * r * r {
        return Err(Error::Domain(format!(
            "B_δ({}, {}) is not contained in D_R/2 for δ = {delta}, R = {r}",
            center.x, center.y
        )));
    }
    let mut cands: Vec<[TorusPoint; 9]> = Vec::with_capacity(9);
    for i in -1..=1 {
        for j in -1..=1 {
            let eta = TorusPoint::new(
                center.x + 0.5 * delta * i as f64,
                center.y + 0.5 * delta * j as f64,
            );
            cands.push(ball_points(eta, 0.25 * delta));
        }
    }
    for n in 0..=cap {
        if cands.iter().any(|c| c.iter().all(|p| !in_rect(*p, r))) {
            return Ok(n);
        }
        for c in cands.iter_mut() {
            for p in c.iter_mut() {
                *p = step(*p, h);
            }
        }
    }
    Err(Error::EscapeNotObserved { cap })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preconditions_are_checked() {
        let h = ShearProfile::Sine;
        assert!(escape_time(TorusPoint::new(0.4, 0.3), 0.01, 0.2, &h, 10).is_err());
        assert!(escape_time(TorusPoint::ORIGIN, 0.05, 0.2, &h, 10).is_err());
    }

    #[test]
    fn escape_scales_like_inverse_sqrt() {
        let h = ShearProfile::Sine;
        let r = 0.45;
        let mut prev = None;
        for &d in &[0.04, 0.01, 0.0025] {
            let n = escape_time(TorusPoint::ORIGIN, d, r, &h, 1_000_000).unwrap();
            assert!(n > 0);
            if let Some(p) = prev {
                assert!(n as f64 <= 2.0 * 2f64.sqrt() * p as f64, "{p} -> {n}");
            }
            prev = Some(n);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let h = ShearProfile::Sine;
        let e = escape_time(TorusPoint::ORIGIN, 1e-4, 0.45, &h, 3).unwrap_err();
        assert_eq!(e, Error::EscapeNotObserved { cap: 3 });
    }
}
