use super::grid::DensityGrid;
use crate::error::{Error, Result};
use crate::map_core::TorusPoint;

/// Quintic smoothstep `6t⁵ - 15t⁴ + 10t³`.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Radial mollifier: `q̄ = 1` on `ρ ≤ 1/2`, quintic fall-off to `0` at `ρ = r*`,
/// with `r*` chosen so that `∫ q̄ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierSpec {
    pub epsilon: f64,
    pub plateau: f64,
    pub r_star: f64,
}

impl MollifierSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(Error::Range {
                value: epsilon,
                lo: 0.0,
                hi: 0.5,
            });
        }
        // mass = 2π (1/8 + w/4 + w²/7) for annulus width w
        let c = 0.125 - 0.5 / std::f64::consts::PI;
        let w = (-0.25 + (0.0625 - 4.0 * c / 7.0).sqrt()) * 3.5;
        Ok(MollifierSpec {
            epsilon,
            plateau: 0.5,
            r_star: 0.5 + w,
        })
    }

    /// Unit-scale profile `q̄` at radius `rho`.
    pub fn profile(&self, rho: f64) -> f64 {
        if rho <= self.plateau {
            1.0
        } else if rho >= self.r_star {
            0.0
        } else {
            1.0 - smoothstep((rho - self.plateau) / (self.r_star - self.plateau))
        }
    }

    /// `q_ε(ξ) = ε⁻² q̄(ξ/ε)`.
    pub fn q(&self, xi: TorusPoint) -> f64 {
        self.profile(xi.norm() / self.epsilon) / (self.epsilon * self.epsilon)
    }

    pub fn check_resolution(&self, g: usize) -> Result<()> {
        let min = 2.0 / g as f64;
        if self.epsilon < min {
            return Err(Error::Resolution {
                eps: self.epsilon,
                min,
            });
        }
        Ok(())
    }
}

/// Cell-offset weights of `q_ε` on a `G × G` grid, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    pub g: usize,
    pub offsets: Vec<(i64, i64, f64)>,
}

impl DiscreteKernel {
    /// Plateau cells keep their value `ε⁻²/G²`; the transition annulus is rescaled to
    /// carry the remaining mass. When the plateau alone exceeds unit mass (coarse
    /// grids) the whole kernel is rescaled instead.
    pub fn new(spec: &MollifierSpec, g: usize) -> Result<Self> {
        spec.check_resolution(g)?;
        let gf = g as f64;
        let reach = (spec.r_star * spec.epsilon * gf).ceil() as i64;
        let cell = 1.0 / (spec.epsilon * spec.epsilon * gf * gf);
        let (mut plateau, mut annulus) = (Vec::new(), Vec::new());
        for a in -reach..=reach {
            for b in -reach..=reach {
                let rho = ((a * a + b * b) as f64).sqrt() / gf / spec.epsilon;
                let w = spec.profile(rho) * cell;
                if rho <= spec.plateau {
                    plateau.push((a, b, w));
                } else if w > 0.0 {
                    annulus.push((a, b, w));
                }
            }
        }
        let pm: f64 = plateau.iter().map(|t| t.2).sum();
        let am: f64 = annulus.iter().map(|t| t.2).sum();
        let (sp, sa) = if pm < 1.0 && am > 0.0 {
            (1.0, (1.0 - pm) / am)
        } else {
            (1.0 / (pm + am), 1.0 / (pm + am))
        };
        let mut offsets: Vec<(i64, i64, f64)> = plateau
            .into_iter()
            .map(|(a, b, w)| (a, b, w * sp))
            .chain(annulus.into_iter().map(|(a, b, w)| (a, b, w * sa)))
            .collect();
        offsets.sort_by_key(|t| (t.0, t.1));
        Ok(DiscreteKernel { g, offsets })
    }

    pub fn mass(&self) -> f64 {
        self.offsets.iter().map(|t| t.2).sum()
    }

    /// Offset of cell `c` by `(a, b)`, periodic.
    #[inline]
    pub fn shift(&self, c: usize, a: i64, b: i64) -> usize {
        let g = self.g as i64;
        let i = (c as i64 / g + a).rem_euclid(g);
        let j = (c as i64 % g + b).rem_euclid(g);
        (i * g + j) as usize
    }

    /// Circular convolution of raw cell values.
    pub fn convolve(&self, values: &[f64]) -> Vec<f64> {
        let n = self.g * self.g;
        assert_eq!(values.len(), n);
        let mut out = vec![0.0; n];
        for (c, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for &(a, b, w) in &self.offsets {
                s += w * values[self.shift(c, -a, -b)];
            }
            *o = s;
        }
        out
    }
}

/// `Q_ε f` as a periodic convolution on the grid of `f`.
pub fn mollify(f: &DensityGrid, spec: &MollifierSpec) -> Result<DensityGrid> {
    let k = DiscreteKernel::new(spec, f.g)?;
    Ok(DensityGrid {
        g: f.g,
        values: k.convolve(&f.values),
    })
}

/// `|∫ (Q_ε f) g - ∫ f g|` by midpoint quadrature on an `n × n` grid.
pub fn smoothing_error<F, G>(f: F, g: G, eps: f64, n: usize) -> Result<f64>
where
    F: Fn(TorusPoint) -> f64,
    G: Fn(TorusPoint) -> f64,
{
    let spec = MollifierSpec::new(eps)?;
    let fg = DensityGrid::from_fn(n, f);
    let gg = DensityGrid::from_fn(n, g);
    let qf = mollify(&fg, &spec)?;
    Ok((qf.inner(&gg) - fg.inner(&gg)).abs())
}
