use super::observables::ObservableSpec;
use crate::error::{Error, Result};
use crate::map_core::{step, TorusPoint};
use crate::parallel::{par_map, substream};
use crate::profile::ShearProfile;
use rand::Rng;
use std::io::Write;

/// Estimates `C_n = ∫ f · g∘Tⁿ` at a list of lags.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    pub pair: String,
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub estimator: String,
    /// Orbit points used per lag, or lattice size `G`.
    pub samples: usize,
    pub seed: u64,
}

impl CorrelationSeries {
    pub fn value_at(&self, lag: usize) -> Option<(f64, f64)> {
        self.lags
            .iter()
            .position(|&l| l == lag)
            .map(|i| (self.values[i], self.stderr[i]))
    }

    /// CSV with header `n,C_n,stderr`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "n,C_n,stderr")?;
        for i in 0..self.lags.len() {
            writeln!(
                w,
                "{},{:.16e},{:.16e}",
                self.lags[i], self.values[i], self.stderr[i]
            )?;
        }
        Ok(())
    }
}

/// Orbit sampling plan: `batches` independent seeded orbits (or one orbit from `start`
/// cut into consecutive batches), each discarding `burn_in` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSampler {
    pub len: usize,
    pub burn_in: usize,
    pub batches: usize,
    pub seed: u64,
    pub start: Option<TorusPoint>,
}

pub const MIN_ORBIT_LEN: usize = 100_000;

impl OrbitSampler {
    pub fn new(len: usize, seed: u64) -> Self {
        OrbitSampler {
            len,
            burn_in: 10_000,
            batches: 32,
            seed,
            start: None,
        }
    }

    fn per_batch(&self) -> usize {
        self.len / self.batches
    }
}

/// Random start with `‖ξ₀‖ >= 0.1`.
pub fn seeded_start(seed: u64, stream: u64) -> TorusPoint {
    let mut rng = substream(seed, stream);
    loop {
        let p = TorusPoint::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        if p.norm() >= 0.1 {
            return p;
        }
    }
}

struct BatchSums {
    fg: Vec<Vec<f64>>,
    f: Vec<f64>,
    g: Vec<Vec<f64>>,
    end: TorusPoint,
}

fn degenerate(p: TorusPoint) -> Error {
    Error::DegenerateOrbit(format!(
        "orbit through ({}, {}) is trapped at the fixed point",
        p.x, p.y
    ))
}

fn run_batch(
    start: TorusPoint,
    obs: &[ObservableSpec],
    pairs: &[(usize, usize)],
    lags: &[usize],
    per: usize,
    burn_in: usize,
    h: &ShearProfile,
) -> Result<BatchSums> {
    let max_lag = *lags.iter().max().unwrap();
    let ring = max_lag + 1;
    let mut p = start;
    if p.norm() == 0.0 {
        return Err(degenerate(start));
    }
    for _ in 0..burn_in {
        p = step(p, h);
    }
    let nf = obs.len();
    let mut hist = vec![0.0; ring * nf];
    let mut fg = vec![vec![0.0; lags.len()]; pairs.len()];
    let mut fsum = vec![0.0; pairs.len()];
    let mut gsum = vec![vec![0.0; lags.len()]; pairs.len()];
    let mut vals = vec![0.0; nf];
    let mut end = p;
    for j in 0..per + max_lag {
        if p.x == 0.0 && p.y == 0.0 {
            return Err(degenerate(start));
        }
        for (o, v) in obs.iter().zip(vals.iter_mut()) {
            *v = o.at(p);
        }
        let slot = j % ring;
        hist[slot * nf..(slot + 1) * nf].copy_from_slice(&vals);
        for (q, &(fi, gi)) in pairs.iter().enumerate() {
            if j < per {
                fsum[q] += vals[fi];
            }
            let gv = vals[gi];
            for (li, &n) in lags.iter().enumerate() {
                if j >= n && j - n < per {
                    let k = (j - n) % ring;
                    fg[q][li] += hist[k * nf + fi] * gv;
                    gsum[q][li] += gv;
                }
            }
        }
        if j + 1 == per {
            end = p;
        }
        p = step(p, h);
    }
    Ok(BatchSums {
        fg,
        f: fsum,
        g: gsum,
        end: step(end, h),
    })
}

fn pair_name(f: &ObservableSpec, g: &ObservableSpec) -> String {
    format!("{}|{}", f.id, g.id)
}

/// Orbit estimates of the covariance of `f` and `g∘Tⁿ` for several observable pairs on
/// shared orbits, with batch-means standard errors.
pub fn orbit_correlations(
    pairs: &[(ObservableSpec, ObservableSpec)],
    lags: &[usize],
    sampler: &OrbitSampler,
    h: &ShearProfile,
    workers: usize,
) -> Result<Vec<CorrelationSeries>> {
    if pairs.is_empty() || lags.is_empty() {
        return Err(Error::Domain("need at least one pair and one lag".into()));
    }
    if sampler.len < MIN_ORBIT_LEN {
        return Err(Error::Range {
            value: sampler.len as f64,
            lo: MIN_ORBIT_LEN as f64,
            hi: f64::INFINITY,
        });
    }
    if sampler.batches < 2 || sampler.per_batch() == 0 {
        return Err(Error::Domain("need at least two non-empty batches".into()));
    }
    let mut obs: Vec<ObservableSpec> = Vec::new();
    let mut index = |o: &ObservableSpec| match obs.iter().position(|x| x.id == o.id) {
        Some(i) => i,
        None => {
            obs.push(o.clone());
            obs.len() - 1
        }
    };
    let idx: Vec<(usize, usize)> = pairs.iter().map(|(f, g)| (index(f), index(g))).collect();
    let per = sampler.per_batch();
    let batches: Vec<BatchSums> = match sampler.start {
        None => {
            let ids: Vec<u64> = (0..sampler.batches as u64).collect();
            par_map(&ids, workers, |&b| {
                run_batch(
                    seeded_start(sampler.seed, b),
                    &obs,
                    &idx,
                    lags,
                    per,
                    sampler.burn_in,
                    h,
                )
            })
            .into_iter()
            .collect::<Result<_>>()?
        }
        Some(start) => {
            let mut out = Vec::with_capacity(sampler.batches);
            let mut p = start;
            for b in 0..sampler.batches {
                let burn = if b == 0 { sampler.burn_in } else { 0 };
                let s = run_batch(p, &obs, &idx, lags, per, burn, h)?;
                p = s.end;
                out.push(s);
            }
            out
        }
    };
    let nb = batches.len() as f64;
    let perf = per as f64;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(q, (f, g))| {
            let est: Vec<Vec<f64>> = batches
                .iter()
                .map(|b| {
                    (0..lags.len())
                        .map(|li| b.fg[q][li] / perf - (b.f[q] / perf) * (b.g[q][li] / perf))
                        .collect()
                })
                .collect();
            let mut values = Vec::with_capacity(lags.len());
            let mut stderr = Vec::with_capacity(lags.len());
            for li in 0..lags.len() {
                let m = est.iter().map(|e| e[li]).sum::<f64>() / nb;
                let var = est.iter().map(|e| (e[li] - m).powi(2)).sum::<f64>() / (nb - 1.0);
                values.push(m);
                stderr.push((var / nb).sqrt().max(f64::MIN_POSITIVE));
            }
            CorrelationSeries {
                pair: pair_name(f, g),
                lags: lags.to_vec(),
                values,
                stderr,
                estimator: "orbit".into(),
                samples: per * batches.len(),
                seed: sampler.seed,
            }
        })
        .collect())
}

pub fn orbit_correlation(
    f: &ObservableSpec,
    g: &ObservableSpec,
    lags: &[usize],
    sampler: &OrbitSampler,
    h: &ShearProfile,
    workers: usize,
) -> Result<CorrelationSeries> {
    Ok(orbit_correlations(&[(f.clone(), g.clone())], lags, sampler, h, workers)?.remove(0))
}

fn lattice_sums(
    f: &ObservableSpec,
    g: &ObservableSpec,
    lags: &[usize],
    n: usize,
    h: &ShearProfile,
    workers: usize,
) -> Vec<f64> {
    let max_lag = *lags.iter().max().unwrap();
    let s = 1.0 / n as f64;
    let rows: Vec<usize> = (0..n).collect();
    let partial = par_map(&rows, workers, |&i| {
        let mut fg = vec![0.0; lags.len()];
        let mut gs = vec![0.0; lags.len()];
        let mut fs = 0.0;
        for j in 0..n {
            let mut p = TorusPoint::local(-0.5 + (i as f64 + 0.5) * s, -0.5 + (j as f64 + 0.5) * s);
            let fv = f.at(p);
            fs += fv;
            let mut li = 0;
            let mut order: Vec<(usize, usize)> = lags.iter().copied().enumerate().collect();
            order.sort_by_key(|e| e.1);
            for k in 0..=max_lag {
                while li < order.len() && order[li].1 == k {
                    let gv = g.at(p);
                    fg[order[li].0] += fv * gv;
                    gs[order[li].0] += gv;
                    li += 1;
                }
                if k < max_lag {
                    p = step(p, h);
                }
            }
        }
        (fg, gs, fs)
    });
    let cells = (n * n) as f64;
    let mut fg = vec![0.0; lags.len()];
    let mut gs = vec![0.0; lags.len()];
    let mut fs = 0.0;
    for (a, b, c) in partial {
        for k in 0..lags.len() {
            fg[k] += a[k];
            gs[k] += b[k];
        }
        fs += c;
    }
    (0..lags.len())
        .map(|k| fg[k] / cells - (fs / cells) * (gs[k] / cells))
        .collect()
}

/// Lattice quadrature of `∫ f · g∘Tⁿ` on the `G × G` cell centers; the error column is
/// the difference from the `G/2` lattice.
pub fn grid_correlation(
    f: &ObservableSpec,
    g: &ObservableSpec,
    lags: &[usize],
    grid: usize,
    h: &ShearProfile,
    workers: usize,
) -> Result<CorrelationSeries> {
    if grid < 256 || grid % 2 != 0 {
        return Err(Error::Domain(format!(
            "lattice size {grid} must be even and at least 256"
        )));
    }
    if lags.is_empty() {
        return Err(Error::Domain("need at least one lag".into()));
    }
    let fine = lattice_sums(f, g, lags, grid, h, workers);
    let coarse = lattice_sums(f, g, lags, grid / 2, h, workers);
    Ok(CorrelationSeries {
        pair: pair_name(f, g),
        lags: lags.to_vec(),
        stderr: fine
            .iter()
            .zip(&coarse)
            .map(|(a, b)| (a - b).abs().max(f64::MIN_POSITIVE))
            .collect(),
        values: fine,
        estimator: "lattice".into(),
        samples: grid,
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::super::observables::{cos_x, sin_y};
    use super::*;

    const H: ShearProfile = ShearProfile::PeriodicSine;

    #[test]
    fn lag_zero_variance_of_cosine() {
        let f = cos_x();
        let s =
            orbit_correlation(&f, &f, &[0, 1, 40], &OrbitSampler::new(200_000, 3), &H, 1).unwrap();
        let (c0, e0) = s.value_at(0).unwrap();
        assert!((c0 - 0.5).abs() <= 3.0 * e0 + 1e-3, "{c0} ± {e0}");
        assert!(s.stderr.iter().all(|&e| e > 0.0));
        let (c40, e40) = s.value_at(40).unwrap();
        assert!(c40.abs() < c0.abs() && e40 > 0.0);
    }

    #[test]
    fn worker_invariance() {
        let f = cos_x();
        let g = sin_y();
        let smp = OrbitSampler::new(100_000, 11);
        let a = orbit_correlation(&f, &g, &[0, 2, 5], &smp, &H, 1).unwrap();
        let b = orbit_correlation(&f, &g, &[0, 2, 5], &smp, &H, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lag_zero_matches_sample_covariance() {
        let f = cos_x();
        let g = sin_y();
        let mut smp = OrbitSampler::new(100_000, 2);
        smp.start = Some(TorusPoint::new(0.3, 0.2));
        let s = orbit_correlation(&f, &g.scaled(1.0), &[0], &smp, &H, 1).unwrap();
        let mut p = TorusPoint::new(0.3, 0.2);
        for _ in 0..smp.burn_in {
            p = step(p, &H);
        }
        let per = smp.len / smp.batches;
        let mut est = Vec::new();
        for _ in 0..smp.batches {
            let (mut sf, mut sg, mut sfg) = (0.0, 0.0, 0.0);
            for _ in 0..per {
                let (a, b) = (f.at(p), g.at(p));
                sf += a;
                sg += b;
                sfg += a * b;
                p = step(p, &H);
            }
            let n = per as f64;
            est.push(sfg / n - (sf / n) * (sg / n));
        }
        let cov = est.iter().sum::<f64>() / est.len() as f64;
        assert!(
            (s.values[0] - cov).abs() < 1e-12,
            "{} vs {cov}",
            s.values[0]
        );
    }

    #[test]
    fn degenerate_start_is_rejected() {
        let f = cos_x();
        let mut smp = OrbitSampler::new(100_000, 1);
        smp.start = Some(TorusPoint::ORIGIN);
        assert!(matches!(
            orbit_correlation(&f, &f, &[0], &smp, &H, 1),
            Err(Error::DegenerateOrbit(_))
        ));
        assert!(orbit_correlation(&f, &f, &[0], &OrbitSampler::new(10, 1), &H, 1).is_err());
    }

    #[test]
    fn lattice_estimator_basics() {
        let g = sin_y();
        let s = grid_correlation(&g, &g, &[0], 256, &H, 1).unwrap();
        assert!((s.values[0] - 0.5).abs() < 1e-10);
        let f2 = cos_x().scaled(2.5);
        let a = grid_correlation(&f2, &g, &[0, 3], 256, &H, 1).unwrap();
        let b = grid_correlation(&cos_x(), &g, &[0, 3], 256, &H, 1).unwrap();
        for k in 0..2 {
            assert!((a.values[k] - 2.5 * b.values[k]).abs() <= 1e-14 * (1.0 + b.values[k].abs()));
        }
        assert!(grid_correlation(&g, &g, &[0], 128, &H, 1).is_err());
    }
}
