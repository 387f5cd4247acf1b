use super::estimators::seeded_start;
use super::observables::ObservableSpec;
use crate::error::{Error, Result};
use crate::map_core::step;
use crate::parallel::par_map;
use crate::profile::ShearProfile;
use std::io::Write;

/// Moments of the standardized Birkhoff sums `S_n/√n` over independent starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltReport {
    pub n: usize,
    pub m: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Non-excess kurtosis (3 for a Gaussian).
    pub kurtosis: f64,
}

impl CltReport {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "n,M,mean,var,skew,kurt")?;
        writeln!(
            w,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.n, self.m, self.mean, self.variance, self.skewness, self.kurtosis
        )
    }
}

/// `S_n/√n` from `m` seeded starts.
pub fn birkhoff_samples(
    f: &ObservableSpec,
    n: usize,
    m: usize,
    seed: u64,
    h: &ShearProfile,
    workers: usize,
) -> Vec<f64> {
    let ids: Vec<u64> = (0..m as u64).collect();
    let scale = (n as f64).sqrt();
    par_map(&ids, workers, |&i| {
        let mut p = seeded_start(seed, i);
        let mut s = 0.0;
        for _ in 0..n {
            s += f.at(p);
            p = step(p, h);
        }
        s / scale
    })
}

pub fn moments(n: usize, xs: &[f64]) -> CltReport {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let c = |k: i32| xs.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / m;
    let (m2, m3, m4) = (c(2), c(3), c(4));
    CltReport {
        n,
        m: xs.len(),
        mean,
        variance: m2,
        skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
        kurtosis: if m2 > 0.0 { m4 / (m2 * m2) } else { 0.0 },
    }
}

pub fn clt_sample(
    f: &ObservableSpec,
    n: usize,
    m: usize,
    seed: u64,
    h: &ShearProfile,
    workers: usize,
) -> Result<CltReport> {
    if n == 0 || m < 2 {
        return Err(Error::Domain(format!(
            "need n >= 1 and M >= 2, got n = {n}, M = {m}"
        )));
    }
    Ok(moments(n, &birkhoff_samples(f, n, m, seed, h, workers)))
}

#[cfg(test)]
mod tests {
    use super::super::observables::{coboundary, cos_x};
    use super::*;

    #[test]
    fn gaussian_moments() {
        let xs = [-1.0, 1.0];
        let r = moments(1, &xs);
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.variance, 1.0);
        assert_eq!(r.kurtosis, 1.0);
    }

    #[test]
    fn coboundary_variance_vanishes() {
        let h = ShearProfile::PeriodicSine;
        let f = coboundary(cos_x(), h);
        let r = clt_sample(&f, 1000, 200, 1, &h, 1).unwrap();
        assert!(r.variance <= 4.0 / 1000.0);
        let a = clt_sample(&cos_x(), 100, 50, 2, &h, 1).unwrap();
        let b = clt_sample(&cos_x(), 100, 50, 2, &h, 3).unwrap();
        assert_eq!(a, b);
    }
}
