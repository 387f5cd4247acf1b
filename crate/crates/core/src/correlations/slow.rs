use super::nu::{nu_norm_in, ChartBox};
use super::observables::ObservableSpec;
use crate::directions::DirectionField;
use crate::error::{Error, Result};
use crate::manifolds::{default_length, minimize_stable_sequence, MINIMIZER_TOL};
use crate::map_core::{circle_delta, iterate, step, TorusPoint};
use crate::profile::ShearProfile;

/// Tent `ς(x) = 1 - |x + 1|` on `[-2, 0]`, zero elsewhere.
pub fn tent(x: f64) -> f64 {
    (1.0 - (x + 1.0).abs()).max(0.0)
}

fn tent_slope(x: f64) -> f64 {
    if (x + 1.0).abs() < 1.0 {
        -(x + 1.0).signum()
    } else {
        0.0
    }
}

pub const DEFAULT_C5: f64 = 0.1;
pub const MAX_SLOW_N: usize = 1000;

/// Bump `f_n = α_n(z₁) β_n(z₂)` at `ξ_n = T⁻ⁿξ₀` in the linear chart
/// `η = ξ_n + z₁ e_u + z₂ e_s` spanned by the unit unstable and stable directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowObservable {
    pub n: usize,
    pub c5: f64,
    pub xi: TorusPoint,
    pub u: f64,
    pub v: f64,
    eu: (f64, f64),
    es: (f64, f64),
    det: f64,
}

impl SlowObservable {
    /// Extent of the support along each chart axis.
    pub fn extent(&self) -> f64 {
        2.0 * self.c5 / self.n as f64
    }

    fn scale(&self) -> f64 {
        self.n as f64 / self.c5
    }

    /// Chart coordinates `(z₁, z₂)` of `η`.
    pub fn chart(&self, eta: TorusPoint) -> (f64, f64) {
        let dx = circle_delta(eta.x, self.xi.x);
        let dy = circle_delta(eta.y, self.xi.y);
        let z1 = (dx * self.es.1 - dy * self.es.0) / self.det;
        let z2 = (self.eu.0 * dy - self.eu.1 * dx) / self.det;
        (z1, z2)
    }

    pub fn point(&self, z1: f64, z2: f64) -> TorusPoint {
        TorusPoint::local(
            self.xi.x + z1 * self.eu.0 + z2 * self.es.0,
            self.xi.y + z1 * self.eu.1 + z2 * self.es.1,
        )
    }

    pub fn eval(&self, eta: TorusPoint) -> f64 {
        let (z1, z2) = self.chart(eta);
        tent(self.scale() * z1) * tent(self.scale() * z2)
    }

    /// Derivative along the chart's unstable direction.
    pub fn du(&self, eta: TorusPoint) -> f64 {
        let (z1, z2) = self.chart(eta);
        let k = self.scale();
        k * tent_slope(k * z1) * tent(k * z2)
    }

    /// `∫ f_n = (C₅/n)² |e_u × e_s|`.
    pub fn integral(&self) -> f64 {
        (self.c5 / self.n as f64).powi(2) * self.det.abs()
    }

    /// Corners of the support rhombus.
    pub fn corners(&self) -> [TorusPoint; 4] {
        let e = -self.extent();
        [
            self.point(0.0, 0.0),
            self.point(e, 0.0),
            self.point(e, e),
            self.point(0.0, e),
        ]
    }

    pub fn bounding_box(&self) -> ChartBox {
        let c = self.corners();
        let (mut bx, pad) = (
            ChartBox {
                x0: c[0].x,
                x1: c[0].x,
                y0: c[0].y,
                y1: c[0].y,
            },
            1e-12,
        );
        for p in &c[1..] {
            bx.x0 = bx.x0.min(p.x);
            bx.x1 = bx.x1.max(p.x);
            bx.y0 = bx.y0.min(p.y);
            bx.y1 = bx.y1.max(p.y);
        }
        bx.x0 -= pad;
        bx.x1 += pad;
        bx.y0 -= pad;
        bx.y1 += pad;
        bx
    }

    /// `‖f_n‖_{L¹(ν)}`.
    pub fn nu_norm(&self, rho_samples: usize) -> f64 {
        nu_norm_in(|p| self.eval(p).abs(), self.bounding_box(), rho_samples)
    }

    /// `‖∂ᵘ f_n‖_{L¹(ν)}`.
    pub fn nu_norm_du(&self, rho_samples: usize) -> f64 {
        nu_norm_in(|p| self.du(p).abs(), self.bounding_box(), rho_samples)
    }

    /// `∫ f_n · g∘T^k - ∫ f_n ∫ g` by midpoint quadrature over the chart square.
    pub fn correlation_with(
        &self,
        g: &ObservableSpec,
        k: usize,
        m: usize,
        h: &ShearProfile,
    ) -> f64 {
        let e = self.extent();
        let s = e / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let (z1, z2) = (-e + (i as f64 + 0.5) * s, -e + (j as f64 + 0.5) * s);
                let p = self.point(z1, z2);
                acc += self.eval(p) * g.at(iterate(p, k as i64, h));
            }
        }
        let gm = g.mean.unwrap_or_else(|| g.quadrature_mean(512));
        acc * s * s * self.det.abs() - self.integral() * gm
    }

    /// First `k <= k_max` at which an iterate of a support corner reaches `|y| >= y_min`.
    pub fn clearance(&self, y_min: f64, k_max: usize, h: &ShearProfile) -> usize {
        let mut pts = self.corners().to_vec();
        for k in 0..=k_max {
            if pts.iter().any(|p| p.reduced().y.abs() >= y_min) {
                return k;
            }
            pts.iter_mut().for_each(|p| *p = step(*p, h));
        }
        k_max + 1
    }

    pub fn to_spec(self) -> ObservableSpec {
        ObservableSpec::new(
            &format!("slow{}", self.n),
            move |p| self.eval(p),
            Some(self.integral()),
            1.0 + self.scale(),
            &format!(
                "rhombus at ({:.6e}, {:.6e}) of side {:.3e}",
                self.xi.x,
                self.xi.y,
                self.extent()
            ),
        )
    }
}

/// Slow observable at `ξ_n = T⁻ⁿξ₀`, `ξ₀ = (x₀, γ_u(x₀))` on the local unstable manifold.
/// The backward orbit is taken from the variational stable sequence through `Π`.
pub fn slow_observable<D: DirectionField>(
    n: usize,
    x0: f64,
    c5: f64,
    h: &ShearProfile,
    dirs: &D,
) -> Result<SlowObservable> {
    if n == 0 || n > MAX_SLOW_N {
        return Err(Error::Precision(format!(
            "ξ_n is not resolvable for n = {n}"
        )));
    }
    let len = default_length(x0).max(4 * n);
    let w = minimize_stable_sequence(x0, len, MINIMIZER_TOL, h)?;
    let xi = w.unstable_backward_orbit(h)[n];
    let u = dirs.unstable(xi)?;
    let v = dirs.stable(xi)?;
    let nu = (1.0 + u * u).sqrt();
    let nv = (1.0 + v * v).sqrt();
    let eu = (1.0 / nu, u / nu);
    let es = (1.0 / nv, -v / nv);
    let det = eu.0 * es.1 - eu.1 * es.0;
    if det.abs() < 1e-14 {
        return Err(Error::Precision(format!(
            "stable and unstable directions coincide at ξ_{n}"
        )));
    }
    Ok(SlowObservable {
        n,
        c5,
        xi,
        u,
        v,
        eu,
        es,
        det,
    })
}

/// Nonnegative C¹ observable supported in `0.3 < |y| < 0.5`, away from `D_{1/2}`.
pub fn far_observable() -> ObservableSpec {
    ObservableSpec::new(
        "far",
        |p| {
            let s = (p.y.abs() - 0.4) / 0.1;
            if s.abs() < 1.0 {
                (1.0 - s * s).powi(2)
            } else {
                0.0
            }
        },
        Some(16.0 / 75.0),
        1.0 + 40.0 / (3.0 * 3f64.sqrt()),
        "0.3 < |y| < 0.5",
    )
}

/// Lower-bound data of one slow observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundRecord {
    pub n: usize,
    pub integral: f64,
    pub nu_f: f64,
    pub nu_du: f64,
    /// `∫f_n ∫g / ((‖∂ᵘf_n‖_ν + ‖f_n‖_ν) ‖g‖_{C¹})`.
    pub gamma: f64,
    /// `C_n(f_n, g)`.
    pub correlation: f64,
    pub clearance: usize,
}

pub fn lower_bound_record<D: DirectionField>(
    n: usize,
    x0: f64,
    c5: f64,
    h: &ShearProfile,
    dirs: &D,
) -> Result<LowerBoundRecord> {
    let f = slow_observable(n, x0, c5, h, dirs)?;
    let g = far_observable();
    let nu_f = f.nu_norm(512);
    let nu_du = f.nu_norm_du(512);
    let integral = f.integral();
    Ok(LowerBoundRecord {
        n,
        integral,
        nu_f,
        nu_du,
        gamma: integral * g.mean.unwrap() / ((nu_du + nu_f) * g.c1_norm),
        correlation: f.correlation_with(&g, n, 64, h),
        clearance: f.clearance(0.3, 100 * n, h),
    })
}
