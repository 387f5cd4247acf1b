use crate::map_core::{step, TorusPoint};
use crate::profile::ShearProfile;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type Evaluator = Arc<dyn Fn(TorusPoint) -> f64 + Send + Sync>;

/// A scalar observable on the torus.
#[derive(Clone)]
pub struct ObservableSpec {
    pub id: String,
    pub eval: Evaluator,
    /// Analytic mean, when known.
    pub mean: Option<f64>,
    /// Estimate of `‖f‖_{C¹}`.
    pub c1_norm: f64,
    pub support: String,
}

impl fmt::Debug for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObservableSpec")
            .field("id", &self.id)
            .field("mean", &self.mean)
            .field("c1_norm", &self.c1_norm)
            .field("support", &self.support)
            .finish()
    }
}

impl ObservableSpec {
    pub fn new<F>(id: &str, f: F, mean: Option<f64>, c1_norm: f64, support: &str) -> Self
    where
        F: Fn(TorusPoint) -> f64 + Send + Sync + 'static,
    {
        ObservableSpec {
            id: id.to_string(),
            eval: Arc::new(f),
            mean,
            c1_norm,
            support: support.to_string(),
        }
    }

    #[inline]
    pub fn at(&self, p: TorusPoint) -> f64 {
        (self.eval)(p)
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean == Some(0.0)
    }

    /// Midpoint-rule mean on an `n × n` lattice.
    pub fn quadrature_mean(&self, n: usize) -> f64 {
        let s = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.at(TorusPoint::local(
                    -0.5 + (i as f64 + 0.5) * s,
                    -0.5 + (j as f64 + 0.5) * s,
                ));
            }
            acc += row;
        }
        acc * s * s
    }

    /// `a·f`.
    pub fn scaled(&self, a: f64) -> Self {
        let f = self.eval.clone();
        ObservableSpec {
            id: format!("{a}*{}", self.id),
            eval: Arc::new(move |p| a * f(p)),
            mean: self.mean.map(|m| a * m),
            c1_norm: a.abs() * self.c1_norm,
            support: self.support.clone(),
        }
    }
}

pub fn cos_x() -> ObservableSpec {
    ObservableSpec::new(
        "cos2pix",
        |p| (2.0 * PI * p.x).cos(),
        Some(0.0),
        1.0 + 2.0 * PI,
        "torus",
    )
}

pub fn sin_y() -> ObservableSpec {
    ObservableSpec::new(
        "sin2piy",
        |p| (2.0 * PI * p.y).sin(),
        Some(0.0),
        1.0 + 2.0 * PI,
        "torus",
    )
}

pub fn cos_xy() -> ObservableSpec {
    ObservableSpec::new(
        "cos2pixy",
        |p| (2.0 * PI * (p.x + p.y)).cos(),
        Some(0.0),
        1.0 + 2.0 * PI * 2f64.sqrt(),
        "torus",
    )
}

/// `(1 - t²)²` with `t = |p - c|/r`, minus its mean `π r²/3`.
pub fn bump(center: TorusPoint, r: f64) -> ObservableSpec {
    let m = PI * r * r / 3.0;
    ObservableSpec::new(
        "bump",
        move |p| {
            let t2 = (p.torus_dist(center) / r).powi(2);
            if t2 < 1.0 {
                (1.0 - t2) * (1.0 - t2) - m
            } else {
                -m
            }
        },
        Some(0.0),
        1.0 + 8.0 / (3.0 * 3f64.sqrt() * r),
        &format!("disk ({}, {}) radius {r}", center.x, center.y),
    )
}

/// Benchmark suite of mean-zero C¹ observables.
pub fn benchmark_suite() -> Vec<ObservableSpec> {
    vec![
        cos_x(),
        sin_y(),
        cos_xy(),
        bump(TorusPoint::local(0.25, 0.25), 0.2),
    ]
}

/// `φ - φ∘T`.
pub fn coboundary(phi: ObservableSpec, h: ShearProfile) -> ObservableSpec {
    let f = phi.eval.clone();
    ObservableSpec {
        id: format!("cob({})", phi.id),
        eval: Arc::new(move |p| f(p) - f(step(p, &h))),
        mean: Some(0.0),
        c1_norm: phi.c1_norm * (3.0 + h.max_dh()),
        support: "torus".into(),
    }
}

/// Looks up a suite member or `cob:<id>` by identifier.
pub fn by_id(id: &str, h: ShearProfile) -> Option<ObservableSpec> {
    if let Some(inner) = id.strip_prefix("cob:") {
        return by_id(inner, h).map(|o| coboundary(o, h));
    }
    benchmark_suite().into_iter().find(|o| o.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_mean_zero() {
        for o in benchmark_suite() {
            assert!(o.is_mean_zero());
            assert!(o.quadrature_mean(512).abs() < 1e-6, "{}", o.id);
        }
        let c = coboundary(cos_x(), ShearProfile::PeriodicSine);
        assert!(c.quadrature_mean(512).abs() < 1e-6);
    }

    #[test]
    fn lookup() {
        let h = ShearProfile::PeriodicSine;
        assert_eq!(by_id("sin2piy", h).unwrap().id, "sin2piy");
        assert_eq!(by_id("cob:cos2pix", h).unwrap().id, "cob(cos2pix)");
        assert!(by_id("nope", h).is_none());
    }
}
