use crate::directions::DirectionField;
use crate::error::{Error, Result};
use crate::map_core::{in_rect, TorusPoint};
use crate::numeric::brent;

const LEAF_TOL: f64 = 1e-13;

fn rk4<F: Fn(TorusPoint) -> Result<f64>>(f: &F, x: f64, y: f64, dx: f64) -> Result<f64> {
    let k1 = f(TorusPoint::local(x, y))?;
    let k2 = f(TorusPoint::local(x + 0.5 * dx, y + 0.5 * dx * k1))?;
    let k3 = f(TorusPoint::local(x + 0.5 * dx, y + 0.5 * dx * k2))?;
    let k4 = f(TorusPoint::local(x + dx, y + dx * k3))?;
    Ok(y + dx * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)
}

/// Integrates `y' = f(x, y)` from `start` to abscissa `x_end` with step-doubling RK4.
pub fn integrate_leaf<F: Fn(TorusPoint) -> Result<f64>>(
    f: F,
    start: TorusPoint,
    x_end: f64,
) -> Result<f64> {
    let total = x_end - start.x;
    if total == 0.0 {
        return Ok(start.y);
    }
    let (mut x, mut y) = (start.x, start.y);
    let mut dx = total.signum() * total.abs().min(2e-2);
    let mut steps = 0;
    while (x_end - x) * total.signum() > 0.0 {
        if (x + dx - x_end) * total.signum() > 0.0 {
            dx = x_end - x;
        }
        let full = rk4(&f, x, y, dx)?;
        let half = rk4(&f, x, y, 0.5 * dx)?;
        let two = rk4(&f, x + 0.5 * dx, half, 0.5 * dx)?;
        let err = (two - full).abs();
        let allow = LEAF_TOL * dx.abs() / total.abs() + 1e-16;
        if err <= allow || dx.abs() < 1e-9 {
            x += dx;
            y = two + (two - full) / 15.0;
            if err < 0.1 * allow {
                dx *= 2.0;
            }
        } else {
            dx *= 0.5;
        }
        steps += 1;
        if steps > 100_000 {
            return Err(Error::Convergence {
                what: "leaf integration".into(),
                residual: err,
            });
        }
    }
    Ok(y)
}

/// `y`-coordinate at abscissa `x` of the unstable leaf through `p`.
pub fn unstable_leaf_y<D: DirectionField>(dirs: &D, p: TorusPoint, x: f64) -> Result<f64> {
    integrate_leaf(|q| dirs.unstable(q), p, x)
}

/// `y`-coordinate at abscissa `x` of the stable leaf through `p`.
pub fn stable_leaf_y<D: DirectionField>(dirs: &D, p: TorusPoint, x: f64) -> Result<f64> {
    integrate_leaf(|q| dirs.stable(q).map(|v| -v), p, x)
}

/// `[ξ, η] = W^u(ξ) ∩ W^s(η)` in the local chart, searched within leaf length `max_len`.
pub fn local_product_bracket<D: DirectionField>(
    xi: TorusPoint,
    eta: TorusPoint,
    dirs: &D,
    max_len: f64,
) -> Result<TorusPoint> {
    let gap = |x: f64| -> Result<f64> {
        Ok(unstable_leaf_y(dirs, xi, x)? - stable_leaf_y(dirs, eta, x)?)
    };
    if xi == eta {
        return Ok(xi);
    }
    let (mut lo, mut hi) = (xi.x.min(eta.x), xi.x.max(eta.x));
    let mut width = (hi - lo).max((xi.y - eta.y).abs()).max(1e-12);
    let (mut glo, mut ghi) = (gap(lo)?, gap(hi)?);
    while glo * ghi > 0.0 {
        if glo == 0.0 || ghi == 0.0 {
            break;
        }
        // gap is increasing in x
        if glo > 0.0 {
            lo -= width;
            glo = gap(lo)?;
        } else {
            hi += width;
            ghi = gap(hi)?;
        }
        width *= 2.0;
        if hi - xi.x > max_len || xi.x - lo > max_len {
            return Err(Error::Bracket(format!(
                "no intersection of leaves through ({}, {}) and ({}, {}) within length {max_len}",
                xi.x, xi.y, eta.x, eta.y
            )));
        }
    }
    let mut failure = None;
    let x = brent(
        |x| match gap(x) {
            Ok(g) => g,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        1e-15,
        200,
    )
    .ok_or_else(|| Error::Bracket("root search failed".into()))?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(TorusPoint::local(x, unstable_leaf_y(dirs, xi, x)?))
}

/// A stable leaf, identified by a point on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableLeaf {
    pub base: TorusPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolonomyResult {
    pub image: TorusPoint,
    /// Ratio of chord lengths of a short arc around `ξ` and its image.
    pub jacobian: f64,
    pub separation: f64,
}

/// Unstable holonomy `Ψᵘ(ξ) = W^u(ξ) ∩ leaf2` for `ξ` on `leaf1`; both leaves must stay
/// outside `D_r`.
pub fn unstable_holonomy<D: DirectionField>(
    leaf1: StableLeaf,
    leaf2: StableLeaf,
    xi: TorusPoint,
    r: f64,
    dirs: &D,
) -> Result<HolonomyResult> {
    let wrap_err = |e: Error| Error::Holonomy(e.to_string());
    for p in [leaf1.base, leaf2.base, xi] {
        if in_rect(p, r) {
            return Err(Error::Holonomy(format!(
                "({}, {}) lies inside D_{r}",
                p.x, p.y
            )));
        }
    }
    let y_on = stable_leaf_y(dirs, leaf1.base, xi.x).map_err(wrap_err)?;
    if (y_on - xi.y).abs() > 1e-9 {
        return Err(Error::Holonomy(format!(
            "ξ is off leaf1 by {:e}",
            (y_on - xi.y).abs()
        )));
    }
    let max_len = 0.25;
    let image = local_product_bracket(xi, leaf2.base, dirs, max_len).map_err(wrap_err)?;
    if leaf1 == leaf2 {
        return Ok(HolonomyResult {
            image: xi,
            jacobian: 1.0,
            separation: 0.0,
        });
    }
    let s = 1e-4 * r;
    let v = dirs.stable(xi).map_err(wrap_err)?;
    let dx = s / (1.0 + v * v).sqrt();
    let end = |sign: f64| -> Result<(TorusPoint, TorusPoint)> {
        let x = xi.x + sign * dx;
        let p = TorusPoint::local(x, stable_leaf_y(dirs, xi, x)?);
        let q = local_product_bracket(p, leaf2.base, dirs, max_len)?;
        Ok((p, q))
    };
    let (p1, q1) = end(1.0).map_err(wrap_err)?;
    let (p0, q0) = end(-1.0).map_err(wrap_err)?;
    let jac = (q1 - q0).norm() / (p1 - p0).norm();
    if !(jac > 0.0 && jac.is_finite()) {
        return Err(Error::Holonomy(format!(
            "degenerate holonomy jacobian {jac}"
        )));
    }
    Ok(HolonomyResult {
        image,
        jacobian: jac,
        separation: (image - xi).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::MapDirections;
    use crate::profile::ShearProfile;

    fn dirs() -> MapDirections {
        MapDirections::new(ShearProfile::PeriodicSine, 1e-14)
    }

    #[test]
    fn bracket_basics() {
        let d = dirs();
        let xi = TorusPoint::local(0.3, 0.1);
        assert_eq!(local_product_bracket(xi, xi, &d, 0.1).unwrap(), xi);
        let eta = TorusPoint::local(0.302, 0.0995);
        let z = local_product_bracket(xi, eta, &d, 0.1).unwrap();
        assert!((unstable_leaf_y(&d, xi, z.x).unwrap() - z.y).abs() < 1e-9);
        assert!((stable_leaf_y(&d, eta, z.x).unwrap() - z.y).abs() < 1e-9);
        let z2 = local_product_bracket(xi, z, &d, 0.1).unwrap();
        assert!((z2 - z).norm() < 1e-8);
    }

    #[test]
    fn holonomy_identity_and_inverse() {
        let d = dirs();
        let xi = TorusPoint::local(0.3, 0.1);
        let l1 = StableLeaf { base: xi };
        let id = unstable_holonomy(l1, l1, xi, 0.2, &d).unwrap();
        assert_eq!(id.image, xi);
        assert_eq!(id.jacobian, 1.0);
        let l2 = StableLeaf {
            base: TorusPoint::local(0.305, 0.1),
        };
        let there = unstable_holonomy(l1, l2, xi, 0.2, &d).unwrap();
        assert!(there.jacobian > 0.0);
        let back = unstable_holonomy(l2, l1, there.image, 0.2, &d).unwrap();
        assert!((back.image - xi).norm() < 1e-7);
        assert!(unstable_holonomy(
            StableLeaf {
                base: TorusPoint::ORIGIN
            },
            l2,
            xi,
            0.2,
            &d
        )
        .is_err());
    }
}
