use crate::directions::DirectionField;
use crate::error::Result;
use crate::map_core::TorusPoint;
use crate::numeric::{gauss_legendre, CompensatedSum};

const NODES: usize = 8;

/// Composite Gauss–Legendre rule on `[a, b]` with about `total` nodes.
fn composite(a: f64, b: f64, total: usize) -> Vec<(f64, f64)> {
    if b <= a {
        return Vec::new();
    }
    let (xs, ws) = gauss_legendre(NODES);
    let panels = total.div_ceil(NODES).max(1);
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * NODES);
    for k in 0..panels {
        let lo = a + k as f64 * width;
        for (x, w) in xs.iter().zip(&ws) {
            out.push((lo + 0.5 * width * (x + 1.0), 0.5 * width * w));
        }
    }
    out
}

/// Axis-aligned box `[x0, x1] × [y0, y1]` in the chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl ChartBox {
    pub const FULL: ChartBox = ChartBox {
        x0: -0.5,
        x1: 0.5,
        y0: -0.5,
        y1: 0.5,
    };

    fn gap(lo: f64, hi: f64) -> f64 {
        if lo > 0.0 {
            lo
        } else if hi < 0.0 {
            -hi
        } else {
            0.0
        }
    }

    /// Range of `ρ` for which `∂D_ρ` meets the box.
    fn rho_range(&self) -> (f64, f64) {
        let lo = Self::gap(self.x0, self.x1).max(Self::gap(self.y0, self.y1).sqrt());
        let hi = self
            .x0
            .abs()
            .max(self.x1.abs())
            .max(self.y0.abs().max(self.y1.abs()).sqrt());
        (lo.min(0.5), hi.min(0.5))
    }
}

/// `∫ dρ ∫_{∂D_ρ} f` over `ρ ∈ (0, 1/2]`, restricted to the part of each rectangle
/// boundary inside `bx` (`f` is taken to vanish outside).
pub fn nu_norm_in<F: FnMut(TorusPoint) -> f64>(mut f: F, bx: ChartBox, rho_samples: usize) -> f64 {
    let (r0, r1) = bx.rho_range();
    let mut acc = CompensatedSum::new();
    for (rho, wr) in composite(r0, r1, rho_samples) {
        let r2 = rho * rho;
        let mut side = 0.0;
        for x in [rho, -rho] {
            if x >= bx.x0 && x <= bx.x1 {
                for (y, w) in composite((-r2).max(bx.y0), r2.min(bx.y1), rho_samples) {
                    side += w * f(TorusPoint::local(x, y));
                }
            }
        }
        for y in [r2, -r2] {
            if y >= bx.y0 && y <= bx.y1 {
                for (x, w) in composite((-rho).max(bx.x0), rho.min(bx.x1), rho_samples) {
                    side += w * f(TorusPoint::local(x, y));
                }
            }
        }
        acc.add(wr * side);
    }
    acc.value()
}

/// `ν(f) = ∫₀^{1/2} dρ ∫_{∂D_ρ} f`, with `∂D_ρ` the boundary of `|x| <= ρ, |y| <= ρ²`.
pub fn nu_norm<F: FnMut(TorusPoint) -> f64>(f: F, rho_samples: usize) -> f64 {
    nu_norm_in(f, ChartBox::FULL, rho_samples)
}

/// Directional derivative of `f` along the unit vector `(1, s)/|(1, s)|`.
fn along<F: Fn(TorusPoint) -> f64>(f: &F, p: TorusPoint, s: f64) -> f64 {
    let t = 1e-5;
    let n = (1.0 + s * s).sqrt();
    let d = TorusPoint::local(t / n, t * s / n);
    (f(p + d) - f(p - d)) / (2.0 * t)
}

fn sup_norm<F: Fn(TorusPoint) -> f64>(f: &F, n: usize) -> f64 {
    let s = 1.0 / n as f64;
    let mut m = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            m = m.max(
                f(TorusPoint::local(
                    -0.5 + (i as f64 + 0.5) * s,
                    -0.5 + (j as f64 + 0.5) * s,
                ))
                .abs(),
            );
        }
    }
    m
}

/// The two factors `‖f‖_∞ + ‖∂ᵘf‖_{L¹(ν)}` and `‖g‖_∞ + ‖∂ˢg‖_{L¹(ν)}` of the
/// smoothing-error bound.
pub fn appr_factors<F, G, D>(f: F, g: G, dirs: &D, rho_samples: usize) -> Result<(f64, f64)>
where
    F: Fn(TorusPoint) -> f64,
    G: Fn(TorusPoint) -> f64,
    D: DirectionField,
{
    let mut failure = None;
    let mut du = |p: TorusPoint| match dirs.unstable(p) {
        Ok(u) => along(&f, p, u).abs(),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let nu_f = nu_norm(&mut du, rho_samples);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let mut ds = |p: TorusPoint| match dirs.stable(p) {
        Ok(v) => along(&g, p, -v).abs(),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let nu_g = nu_norm(&mut ds, rho_samples);
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((sup_norm(&f, 256) + nu_f, sup_norm(&g, 256) + nu_g))
}
