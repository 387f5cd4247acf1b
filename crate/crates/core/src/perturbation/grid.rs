use crate::error::{Error, Result};
use crate::map_core::TorusPoint;
use crate::numeric::CompensatedSum;
use std::io::Write;

/// Piecewise-constant density on a `G × G` grid; cell `(i, j)` covers
/// `x ∈ [-1/2 + i/G, -1/2 + (i+1)/G)`, `y` likewise with `j`, stored at `i·G + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub g: usize,
    pub values: Vec<f64>,
}

/// Cell index of a point on a `g × g` grid.
pub fn cell_of(p: TorusPoint, g: usize) -> usize {
    let idx = |v: f64| (((v + 0.5) * g as f64).floor() as usize).min(g - 1);
    let p = p.reduced();
    idx(p.x) * g + idx(p.y)
}

/// Center of cell `c` on a `g × g` grid.
pub fn cell_center(c: usize, g: usize) -> TorusPoint {
    let s = 1.0 / g as f64;
    TorusPoint::local(
        -0.5 + ((c / g) as f64 + 0.5) * s,
        -0.5 + ((c % g) as f64 + 0.5) * s,
    )
}

impl DensityGrid {
    pub fn constant(g: usize, value: f64) -> Self {
        DensityGrid {
            g,
            values: vec![value; g * g],
        }
    }

    pub fn zeros(g: usize) -> Self {
        Self::constant(g, 0.0)
    }

    /// Samples `f` at cell centers.
    pub fn from_fn<F: Fn(TorusPoint) -> f64>(g: usize, f: F) -> Self {
        DensityGrid {
            g,
            values: (0..g * g).map(|c| f(cell_center(c, g))).collect(),
        }
    }

    /// Unit mass concentrated in one cell.
    pub fn point_mass(g: usize, cell: usize) -> Self {
        let mut d = Self::zeros(g);
        d.values[cell] = (g * g) as f64;
        d
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    /// `∫ f`, equal to the mean of the cell values.
    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
            / self.cells() as f64
    }

    pub fn l1_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.abs())
            .collect::<CompensatedSum>()
            .value()
            / self.cells() as f64
    }

    /// `∫ f g` for grids of equal size.
    pub fn inner(&self, other: &DensityGrid) -> f64 {
        assert_eq!(self.g, other.g);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect::<CompensatedSum>()
            .value()
            / self.cells() as f64
    }

    /// Subtracts the mean.
    pub fn centered(mut self) -> Self {
        let m = self.mean();
        self.values.iter_mut().for_each(|v| *v -= m);
        self
    }

    pub fn check_size(&self, g: usize) -> Result<()> {
        if self.g != g || self.values.len() != g * g {
            return Err(Error::Domain(format!(
                "density grid of size {} used with an operator of size {g}",
                self.g
            )));
        }
        Ok(())
    }

    /// CSV with header `i,j,x,y,value`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "i,j,x,y,value")?;
        for (c, v) in self.values.iter().enumerate() {
            let p = cell_center(c, self.g);
            writeln!(
                w,
                "{},{},{:.16e},{:.16e},{:.16e}",
                c / self.g,
                c % self.g,
                p.x,
                p.y,
                v
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_round_trip() {
        let g = 16;
        for c in 0..g * g {
            assert_eq!(cell_of(cell_center(c, g), g), c);
        }
        assert_eq!(cell_of(TorusPoint::local(0.5, 0.5), g), 0);
    }

    #[test]
    fn point_mass_has_unit_mass() {
        let d = DensityGrid::point_mass(8, 5);
        assert_eq!(d.mean(), 1.0);
        assert!(DensityGrid::from_fn(32, |p| p.x).centered().mean().abs() < 1e-16);
    }
}
