//! Stable and unstable slope fields, expansion products and regularity series.

mod expansion;
mod series;
mod slopes;

use std::io::{self, Write};

pub use expansion::{
    backward_orbit, cone_fit, expansion_lower_bound, expansion_product, minimal_expansion_k,
    uniform_points, wronskian_residual, ConeSpec, ExpansionRecord, OrbitSlopes,
};
pub use series::{du_along_s, du_along_u, SeriesValue};
pub use slopes::{
    push_s, push_u, slope_record, stable_slope, unstable_slope, DirectionField, MapDirections,
    SlopeEstimate, SlopeRecord, DEPTH_CAP,
};

use crate::error::Result;
use crate::map_core::TorusPoint;
use crate::parallel::par_map;
use crate::profile::ShearProfile;

/// Slope records for many points; identical output for any worker count.
pub fn slope_batch(
    points: &[TorusPoint],
    tol: f64,
    h: &ShearProfile,
    workers: usize,
) -> Result<Vec<SlopeRecord>> {
    par_map(points, workers, |p| slope_record(*p, tol, h))
        .into_iter()
        .collect()
}

/// CSV rows `x,y,u,v,theta,depth,err`.
pub fn write_slope_csv<W: Write>(
    mut w: W,
    points: &[TorusPoint],
    records: &[SlopeRecord],
) -> io::Result<()> {
    writeln!(w, "x,y,u,v,theta,depth,err")?;
    for (p, r) in points.iter().zip(records) {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.3e}",
            p.x, p.y, r.u, r.v, r.theta, r.depth, r.err
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_is_worker_invariant() {
        let h = ShearProfile::PeriodicSine;
        let pts = uniform_points(40, 5);
        let a = slope_batch(&pts, 1e-12, &h, 1).unwrap();
        let b = slope_batch(&pts, 1e-12, &h, 3).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert!(r.u >= 0.0 && r.v >= 0.0 && r.theta == r.u + r.v && r.theta > 0.0);
        }
        let mut buf = Vec::new();
        write_slope_csv(&mut buf, &pts, &a).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 41);
        assert!(text.starts_with("x,y,u,v,theta,depth,err\n"));
    }
}
