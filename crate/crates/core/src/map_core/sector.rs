use super::point::TorusPoint;

/// Position of a point relative to the near-origin sector structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectorClass {
    /// Inside `Q_δ` with `|y| >= M x²`.
    ParabolicCore,
    /// Inside `Q_δ`, outside the parabolic sector, `xy >= 0`.
    Quadrant13,
    /// Inside `Q_δ`, outside the parabolic sector, `xy < 0`.
    Quadrant24,
    /// Outside the square `Q_δ = [-δ, δ]²`.
    Outside,
}

pub fn in_square(p: TorusPoint, delta: f64) -> bool {
    p.x.abs() <= delta && p.y.abs() <= delta
}

/// Membership in the rectangle `D_r = {|x| <= r, |y| <= r²}`.
pub fn in_rect(p: TorusPoint, r: f64) -> bool {
    p.x.abs() <= r && p.y.abs() <= r * r
}

pub fn in_parabolic(p: TorusPoint, m: f64, delta: f64) -> bool {
    in_square(p, delta) && p.y.abs() >= m * p.x * p.x
}

pub fn classify(p: TorusPoint, m: f64, delta: f64) -> SectorClass {
    if !in_square(p, delta) {
        SectorClass::Outside
    } else if p.y.abs() >= m * p.x * p.x {
        SectorClass::ParabolicCore
    } else if p.x * p.y >= 0.0 {
        SectorClass::Quadrant13
    } else {
        SectorClass::Quadrant24
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let m = (1.0f64 / 6.0).sqrt();
        assert_eq!(
            classify(TorusPoint::new(0.0, 0.01), m, 0.2),
            SectorClass::ParabolicCore
        );
        assert_eq!(
            classify(TorusPoint::new(0.3, 0.3), m, 0.2),
            SectorClass::Outside
        );
        assert_eq!(
            classify(TorusPoint::new(0.1, 1e-4), m, 0.2),
            SectorClass::Quadrant13
        );
        assert_eq!(
            classify(TorusPoint::new(0.1, -1e-4), m, 0.2),
            SectorClass::Quadrant24
        );
        assert_eq!(
            classify(TorusPoint::new(0.1, 0.0), m, 0.2),
            SectorClass::Quadrant13
        );
    }

    #[test]
    fn rect() {
        assert!(in_rect(TorusPoint::new(0.1, 0.01), 0.1));
        assert!(!in_rect(TorusPoint::new(0.1, 0.011), 0.1));
    }
}
