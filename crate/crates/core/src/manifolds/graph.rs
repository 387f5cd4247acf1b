use std::fmt;
use std::io::{self, Write};

use super::variational::{default_length, minimize_stable_sequence};
use crate::error::{Error, Result};
use crate::map_core::TorusPoint;
use crate::numeric::{brent, CompensatedSum, MonotoneCubic};
use crate::parallel::par_map;
use crate::profile::ShearProfile;

pub const DEFAULT_A_MAX: f64 = 0.2;
pub const MINIMIZER_TOL: f64 = 1e-13;
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    Stable,
    Unstable,
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ManifoldKind::Stable => "stable",
            ManifoldKind::Unstable => "unstable",
        })
    }
}

/// Sampled local branch `y = γ(x)` of a manifold of the fixed point, `x ∈ [-a_max, a_max]`.
#[derive(Debug, Clone)]
pub struct ManifoldGraph {
    pub kind: ManifoldKind,
    pub profile: ShearProfile,
    pub xs: Vec<f64>,
    pub gamma: Vec<f64>,
    pub slope: Vec<f64>,
    /// Largest minimizer residual over all samples.
    pub residual: f64,
    interp: MonotoneCubic,
}

impl ManifoldGraph {
    fn new(
        kind: ManifoldKind,
        profile: ShearProfile,
        xs: Vec<f64>,
        gamma: Vec<f64>,
        slope: Vec<f64>,
        residual: f64,
    ) -> Self {
        let interp = MonotoneCubic::with_slopes(xs.clone(), gamma.clone(), slope.clone());
        ManifoldGraph {
            kind,
            profile,
            xs,
            gamma,
            slope,
            residual,
            interp,
        }
    }

    pub fn range(&self) -> (f64, f64) {
        self.interp.range()
    }

    fn check(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.range();
        if x >= lo && x <= hi {
            Ok(())
        } else {
            Err(Error::Range { value: x, lo, hi })
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.interp.eval(x))
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.interp.derivative(x))
    }

    pub fn point(&self, x: f64) -> Result<TorusPoint> {
        Ok(TorusPoint::local(x, self.eval(x)?))
    }

    /// Restricted map `f(x) = x + h(x) + γ(x)` (`f_u` or `f_s`).
    pub fn restricted_map(&self, x: f64) -> Result<f64> {
        Ok(x + self.profile.h(x) + self.eval(x)?)
    }

    /// Inverse of the restricted map on the graph range.
    pub fn restricted_map_inverse(&self, y: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        let f = |x: f64| x + self.profile.h(x) + self.interp.eval(x) - y;
        if y == 0.0 {
            return Ok(0.0);
        }
        let (a, b) = if y > 0.0 { (0.0, hi) } else { (lo, 0.0) };
        brent(f, a, b, 1e-16 * y.abs().max(1e-300), 200).ok_or(Error::Range {
            value: y,
            lo: f(lo) + y,
            hi: f(hi) + y,
        })
    }

    /// CSV rows `branch,x,gamma,slope` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> io::Result<()> {
        if header {
            writeln!(w, "branch,x,gamma,slope")?;
        }
        for ((x, g), s) in self.xs.iter().zip(&self.gamma).zip(&self.slope) {
            let sign = if *x < 0.0 { "-" } else { "+" };
            writeln!(w, "{}{},{:.16e},{:.16e},{:.16e}", self.kind, sign, x, g, s)?;
        }
        Ok(())
    }
}

/// `γ_s(a)` and `γ_s'(a)` from the variational sequences at `a` and `a ± 1e-5`.
pub fn stable_sample(a: f64, h: &ShearProfile) -> Result<(f64, f64, f64)> {
    let n = default_length(a - FD_STEP);
    let w = minimize_stable_sequence(a, n, MINIMIZER_TOL, h)?;
    let wp = minimize_stable_sequence(a + FD_STEP, n, MINIMIZER_TOL, h)?;
    let wm = minimize_stable_sequence(a - FD_STEP, n, MINIMIZER_TOL, h)?;
    let dx1 = (wp.x(1) - wm.x(1)) / (2.0 * FD_STEP);
    let residual = w.residual.max(wp.residual).max(wm.residual);
    Ok((w.y0(h), dx1 - 1.0 - h.dh(a), residual))
}

/// Stable branch sampled at `samples` uniformly spaced positive anchors and extended
/// to negative `x` by oddness.
pub fn stable_graph(
    a_max: f64,
    samples: usize,
    h: &ShearProfile,
    workers: usize,
) -> Result<ManifoldGraph> {
    if !(a_max > 0.0 && a_max <= 0.5) {
        return Err(Error::Range {
            value: a_max,
            lo: 0.0,
            hi: 0.5,
        });
    }
    if samples < 2 {
        return Err(Error::Domain("need at least two graph samples".into()));
    }
    let anchors: Vec<f64> = (1..=samples)
        .map(|i| a_max * i as f64 / samples as f64)
        .collect();
    let vals: Vec<(f64, f64, f64)> = par_map(&anchors, workers, |&a| stable_sample(a, h))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut xs = Vec::with_capacity(2 * samples + 1);
    let mut gamma = Vec::with_capacity(2 * samples + 1);
    let mut slope = Vec::with_capacity(2 * samples + 1);
    for (a, v) in anchors.iter().zip(&vals).rev() {
        xs.push(-a);
        gamma.push(-v.0);
        slope.push(v.1);
    }
    xs.push(0.0);
    gamma.push(0.0);
    slope.push(0.0);
    for (a, v) in anchors.iter().zip(&vals) {
        xs.push(*a);
        gamma.push(v.0);
        slope.push(v.1);
    }
    let residual = vals.iter().fold(0.0f64, |m, v| m.max(v.2));
    Ok(ManifoldGraph::new(
        ManifoldKind::Stable,
        *h,
        xs,
        gamma,
        slope,
        residual,
    ))
}

/// Unstable branch `γ_u(x) = -γ_s(x) - h(x)`, the image of the stable branch under `Π`.
pub fn unstable_graph(stable: &ManifoldGraph) -> ManifoldGraph {
    let h = stable.profile;
    let gamma = stable
        .xs
        .iter()
        .zip(&stable.gamma)
        .map(|(x, g)| -g - h.h(*x))
        .collect();
    let slope = stable
        .xs
        .iter()
        .zip(&stable.slope)
        .map(|(x, s)| -s - h.dh(*x))
        .collect();
    ManifoldGraph::new(
        ManifoldKind::Unstable,
        h,
        stable.xs.clone(),
        gamma,
        slope,
        stable.residual,
    )
}

/// Slope of the unstable branch and its derivative from the contraction series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldSlope {
    pub u: f64,
    /// `u'(x) = Σ_{k>=1} λ_{u,k}^{-3} h''(x_{-k})`.
    pub du: f64,
    pub depth: usize,
}

/// `u(x) = γ_u'(x)` by pushing the seed `seed_factor · 2A⁻¹ x_{-n}` forward along the
/// backward `f_u`-orbit until the contraction of the seed error is below `tol`.
pub fn manifold_slope_seeded(
    x: f64,
    graph: &ManifoldGraph,
    tol: f64,
    seed_factor: f64,
) -> Result<ManifoldSlope> {
    if graph.kind != ManifoldKind::Unstable {
        return Err(Error::Domain(
            "manifold slope needs the unstable graph".into(),
        ));
    }
    if x == 0.0 {
        return Err(Error::Domain("manifold slope is taken at x != 0".into()));
    }
    graph.check(x)?;
    let h = graph.profile;
    let k = 2.0 / h.a_const();
    const CAP: usize = 1 << 20;
    let mut orbit = vec![x];
    let mut n = 16;
    loop {
        while orbit.len() <= n {
            let next = graph.restricted_map_inverse(*orbit.last().unwrap())?;
            orbit.push(next);
        }
        let seed = seed_factor * k * orbit[n];
        let mut u = seed;
        let mut log_contraction = 0.0;
        let mut lam_logs = vec![0.0; n + 1];
        for j in (1..=n).rev() {
            let lam = 1.0 + h.dh(orbit[j]) + u;
            lam_logs[j] = lam.ln();
            log_contraction -= 2.0 * lam.ln();
            u = 1.0 - 1.0 / lam;
        }
        if seed.abs() * log_contraction.exp() < tol {
            let mut du = CompensatedSum::new();
            let mut acc = 0.0;
            for j in 1..=n {
                acc += lam_logs[j];
                du.add((-3.0 * acc).exp() * h.d2h(orbit[j]));
            }
            return Ok(ManifoldSlope {
                u,
                du: du.value(),
                depth: n,
            });
        }
        if n >= CAP {
            return Err(Error::Convergence {
                what: format!("manifold slope at x = {x}"),
                residual: seed.abs() * log_contraction.exp(),
            });
        }
        n *= 2;
    }
}

pub fn manifold_slope(x: f64, graph: &ManifoldGraph, tol: f64) -> Result<ManifoldSlope> {
    manifold_slope_seeded(x, graph, tol, 1.0)
}
