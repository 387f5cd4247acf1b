use super::point::{wrap, TorusPoint};
use crate::profile::ShearProfile;

/// One forward step `T(x, y) = (x + h(x) + y, h(x) + y)`.
#[inline]
pub fn step(p: TorusPoint, h: &ShearProfile) -> TorusPoint {
    let hx = h.h(wrap(p.x));
    TorusPoint::new(p.x + hx + p.y, hx + p.y)
}

/// Forward step without reduction; only meaningful near the origin.
#[inline]
pub fn step_local(p: TorusPoint, h: &ShearProfile) -> TorusPoint {
    let hx = h.h(p.x);
    TorusPoint::local(p.x + hx + p.y, hx + p.y)
}

#[inline]
pub fn step_inverse(p: TorusPoint, h: &ShearProfile) -> TorusPoint {
    let x = wrap(p.x - p.y);
    TorusPoint::new(x, p.y - h.h(x))
}

#[inline]
pub fn step_inverse_local(p: TorusPoint, h: &ShearProfile) -> TorusPoint {
    let x = p.x - p.y;
    TorusPoint::local(x, p.y - h.h(x))
}

/// `T^n(p)` for `n >= 0`, `T^{-|n|}(p)` otherwise.
pub fn iterate(mut p: TorusPoint, n: i64, h: &ShearProfile) -> TorusPoint {
    if n >= 0 {
        for _ in 0..n {
            p = step(p, h);
        }
    } else {
        for _ in 0..(-n) {
            p = step_inverse(p, h);
        }
    }
    p
}

/// Forward orbit `p, T p, ..., T^n p`.
pub fn orbit(p: TorusPoint, n: usize, h: &ShearProfile) -> Vec<TorusPoint> {
    let mut out = Vec::with_capacity(n + 1);
    let mut q = p;
    out.push(q);
    for _ in 0..n {
        q = step(q, h);
        out.push(q);
    }
    out
}

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Jacobian2 {
    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (
            self.a11 * v.0 + self.a12 * v.1,
            self.a21 * v.0 + self.a22 * v.1,
        )
    }

    /// Inverse of a unimodular matrix.
    pub fn inverse(&self) -> Jacobian2 {
        let d = self.det();
        Jacobian2 {
            a11: self.a22 / d,
            a12: -self.a12 / d,
            a21: -self.a21 / d,
            a22: self.a11 / d,
        }
    }
}

/// `DT(p) = [[1 + h'(x), 1], [h'(x), 1]]`.
pub fn jacobian(p: TorusPoint, h: &ShearProfile) -> Jacobian2 {
    let d = h.dh(wrap(p.x));
    Jacobian2 {
        a11: 1.0 + d,
        a12: 1.0,
        a21: d,
        a22: 1.0,
    }
}

/// `Π(x, y) = (x, -y - h(x))`.
pub fn involution_pi(p: TorusPoint, h: &ShearProfile) -> TorusPoint {
    TorusPoint::new(p.x, -p.y - h.h(wrap(p.x)))
}

/// `Π₁(x, y) = (-x, y + h(x))`.
pub fn involution_pi1(p: TorusPoint, h: &ShearProfile) -> TorusPoint {
    TorusPoint::new(-p.x, p.y + h.h(wrap(p.x)))
}

/// Change of variables `q = x - y`, `p = y`.
pub fn conjugate_to_standard(p: TorusPoint) -> (f64, f64) {
    (wrap(p.x - p.y), wrap(p.y))
}

pub fn conjugate_from_standard(q: f64, p: f64) -> TorusPoint {
    TorusPoint::new(q + p, p)
}

/// Standard-map form `q' = q + p`, `p' = p + h(q + p)`.
pub fn standard_step(q: f64, p: f64, h: &ShearProfile) -> (f64, f64) {
    let q1 = wrap(q + p);
    (q1, wrap(p + h.h(q1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SINE: ShearProfile = ShearProfile::Sine;

    fn close(a: TorusPoint, b: TorusPoint, tol: f64) -> bool {
        a.torus_dist(b) < tol
    }

    #[test]
    fn fixed_point() {
        assert_eq!(step(TorusPoint::ORIGIN, &SINE), TorusPoint::ORIGIN);
        assert_eq!(step_inverse(TorusPoint::ORIGIN, &SINE), TorusPoint::ORIGIN);
    }

    #[test]
    fn step_matches_high_precision_value() {
        // 50-digit reference values
        let q = step(TorusPoint::new(0.25, 0.1), &SINE);
        assert!((q.x - 0.352_596_040_745_477_07).abs() < 1e-15, "{}", q.x);
        assert!((q.y - 0.102_596_040_745_477_07).abs() < 1e-15, "{}", q.y);
        let back = step_inverse(q, &SINE);
        assert!(close(back, TorusPoint::new(0.25, 0.1), 1e-15));
    }

    #[test]
    fn jacobian_values() {
        let j = jacobian(TorusPoint::ORIGIN, &SINE);
        assert_eq!((j.a11, j.a12, j.a21, j.a22), (1.0, 1.0, 0.0, 1.0));
        let j = jacobian(TorusPoint::new(0.25, 0.1), &SINE);
        assert!((j.det() - 1.0).abs() < 1e-15);
        assert!((j.a11 - (2.0 - 0.25f64.cos())).abs() < 1e-15);
        assert!((j.a11 - 1.031_087_578_3).abs() < 1e-9);
    }

    #[test]
    fn involution_values() {
        let p = TorusPoint::new(0.25, 0.1);
        assert_eq!(involution_pi(TorusPoint::ORIGIN, &SINE), TorusPoint::ORIGIN);
        let a = involution_pi(p, &SINE);
        assert!((a.x - 0.25).abs() < 1e-16 && (a.y + 0.102_596_040_7).abs() < 1e-10);
        let b = involution_pi1(p, &SINE);
        assert!((b.x + 0.25).abs() < 1e-16 && (b.y - 0.102_596_040_7).abs() < 1e-10);
    }

    #[test]
    fn conjugacy_examples() {
        assert_eq!(conjugate_to_standard(TorusPoint::ORIGIN), (0.0, 0.0));
        let (q, p) = conjugate_to_standard(TorusPoint::new(0.3, 0.1));
        assert!((q - 0.2).abs() < 1e-15 && (p - 0.1).abs() < 1e-15);
    }

    fn point() -> impl Strategy<Value = TorusPoint> {
        (-0.5f64..0.5, -0.5f64..0.5).prop_map(|(x, y)| TorusPoint::new(x, y))
    }

    fn profile() -> impl Strategy<Value = ShearProfile> {
        prop_oneof![Just(ShearProfile::Sine), Just(ShearProfile::PeriodicSine)]
    }

    proptest! {
        #[test]
        fn inverse_round_trip(p in point(), h in profile()) {
            prop_assert!(close(step_inverse(step(p, &h), &h), p, 1e-12));
            prop_assert!(close(step(step_inverse(p, &h), &h), p, 1e-12));
        }

        #[test]
        fn reversibility(p in point(), h in profile()) {
            let inv = step_inverse(p, &h);
            let a = involution_pi(step(involution_pi(p, &h), &h), &h);
            let b = involution_pi1(step(involution_pi1(p, &h), &h), &h);
            prop_assert!(close(a, inv, 1e-12));
            prop_assert!(close(b, inv, 1e-12));
            prop_assert!(close(involution_pi(involution_pi(p, &h), &h), p, 1e-12));
            prop_assert!(close(involution_pi1(involution_pi1(p, &h), &h), p, 1e-12));
        }

        #[test]
        fn unimodular(p in point(), h in profile()) {
            prop_assert!((jacobian(p, &h).det() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn jacobian_is_derivative(p in point()) {
            let h = ShearProfile::PeriodicSine;
            let e = 1e-6;
            let j = jacobian(p, &h);
            let base = step(p, &h);
            let dx = step(TorusPoint::local(p.x + e, p.y), &h);
            let dy = step(TorusPoint::local(p.x, p.y + e), &h);
            let fd = |a: f64, b: f64| super::super::point::circle_delta(a, b) / e;
            prop_assert!((fd(dx.x, base.x) - j.a11).abs() < 1e-4);
            prop_assert!((fd(dx.y, base.y) - j.a21).abs() < 1e-4);
            prop_assert!((fd(dy.x, base.x) - j.a12).abs() < 1e-4);
            prop_assert!((fd(dy.y, base.y) - j.a22).abs() < 1e-4);
        }

        #[test]
        fn conjugacy_intertwines(p in point(), h in profile()) {
            let (q, pp) = conjugate_to_standard(p);
            let (q1, p1) = standard_step(q, pp, &h);
            let direct = conjugate_to_standard(step(p, &h));
            prop_assert!(super::super::point::circle_delta(q1, direct.0).abs() < 1e-12);
            prop_assert!(super::super::point::circle_delta(p1, direct.1).abs() < 1e-12);
            prop_assert!(close(conjugate_from_standard(q, pp), p, 1e-12));
        }
    }
}
