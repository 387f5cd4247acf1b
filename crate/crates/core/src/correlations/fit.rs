use super::estimators::CorrelationSeries;
use crate::error::{Error, Result};
use crate::numeric::fit_line_weighted;
use std::io::Write;

/// Power-law fit `|C_n| ≈ amp · n^{-p}`, optionally times `(ln n)⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub p: f64,
    /// Standard error of `p` from the inverse-variance weights.
    pub p_stderr: f64,
    pub amplitude: f64,
    pub window: (usize, usize),
    /// Weighted RMS residual in `ln |C_n|`.
    pub residual: f64,
    pub log_correction: bool,
    pub used: usize,
}

impl DecayFit {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "p,p_stderr,amp,n_lo,n_hi,residual,log_correction")?;
        writeln!(
            w,
            "{:.16e},{:.3e},{:.16e},{},{},{:.16e},{}",
            self.p,
            self.p_stderr,
            self.amplitude,
            self.window.0,
            self.window.1,
            self.residual,
            self.log_correction
        )
    }
}

/// Lags in `window` with `|C_n| > 3 stderr`.
pub fn significant_lags(s: &CorrelationSeries, window: (usize, usize)) -> Vec<usize> {
    (0..s.lags.len())
        .filter(|&i| {
            let n = s.lags[i];
            n >= window.0.max(1) && n <= window.1 && s.values[i].abs() > 3.0 * s.stderr[i]
        })
        .collect()
}

pub const MIN_SIGNIFICANT: usize = 5;

/// Longest window `[n_lo, n_hi]` over which every measured lag is significant, or `None`
/// if `n_lo` itself is not.
pub fn significant_window(
    s: &CorrelationSeries,
    n_lo: usize,
    n_max: usize,
) -> Option<(usize, usize)> {
    let mut hi = None;
    let mut idx: Vec<usize> = (0..s.lags.len())
        .filter(|&i| s.lags[i] >= n_lo && s.lags[i] <= n_max)
        .collect();
    idx.sort_by_key(|&i| s.lags[i]);
    for i in idx {
        if s.values[i].abs() > 3.0 * s.stderr[i] {
            hi = Some(s.lags[i]);
        } else {
            break;
        }
    }
    match hi {
        Some(h) if s.lags.contains(&n_lo) => Some((n_lo, h)),
        _ => None,
    }
}

/// Weighted least squares of `ln|C_n|` (minus `4 ln ln n` if requested) on `ln n`, with
/// weights `(C_n / stderr)²`.
pub fn fit_decay(
    s: &CorrelationSeries,
    window: (usize, usize),
    log_correction: bool,
) -> Result<DecayFit> {
    let idx: Vec<usize> = significant_lags(s, window)
        .into_iter()
        .filter(|&i| !log_correction || s.lags[i] >= 2)
        .collect();
    if idx.len() < MIN_SIGNIFICANT {
        return Err(Error::InsufficientSignal {
            significant: idx.len(),
            needed: MIN_SIGNIFICANT,
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for &i in &idx {
        let n = s.lags[i] as f64;
        let c = s.values[i].abs();
        let corr = if log_correction {
            4.0 * n.ln().ln()
        } else {
            0.0
        };
        xs.push(n.ln());
        ys.push(c.ln() - corr);
        ws.push((c / s.stderr[i]).powi(2).min(1e30));
    }
    let fit = fit_line_weighted(&xs, &ys, &ws);
    let wsum: f64 = ws.iter().sum();
    let xbar = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / wsum;
    let sxx: f64 = xs
        .iter()
        .zip(&ws)
        .map(|(x, w)| w * (x - xbar).powi(2))
        .sum();
    let rss: f64 = (0..xs.len())
        .map(|k| ws[k] * (ys[k] - fit.intercept - fit.slope * xs[k]).powi(2))
        .sum();
    Ok(DecayFit {
        p: -fit.slope,
        p_stderr: sxx.recip().sqrt(),
        amplitude: fit.intercept.exp(),
        window,
        residual: (rss / wsum).sqrt(),
        log_correction,
        used: idx.len(),
    })
}

/// Unweighted residual sums of squares of `ln|C|` against `ln n` (power law) and against
/// `n` (exponential) over the given points.
pub fn power_vs_exponential(ns: &[f64], cs: &[f64]) -> (f64, f64) {
    let ys: Vec<f64> = cs.iter().map(|c| c.abs().ln()).collect();
    let ones = vec![1.0; ns.len()];
    let rss = |xs: &[f64]| {
        let f = fit_line_weighted(xs, &ys, &ones);
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| (y - f.intercept - f.slope * x).powi(2))
            .sum::<f64>()
    };
    let logs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    (rss(&logs), rss(ns))
}

/// Theorem-style domination check with amplitude fitted on `fit_window`, checked on
/// lags from the start of the window up to `max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub amplitude: f64,
    /// Lags where `|C_n| > B n⁻² (ln n)⁴ + 3 stderr`.
    pub violations: Vec<usize>,
}

pub fn rate(n: f64) -> f64 {
    n.powi(-2) * n.ln().powi(4)
}

pub fn theorem_bound_check(
    s: &CorrelationSeries,
    fit_window: (usize, usize),
    max_lag: usize,
) -> BoundCheck {
    let amplitude = (0..s.lags.len())
        .filter(|&i| s.lags[i] >= fit_window.0.max(2) && s.lags[i] <= fit_window.1)
        .map(|i| s.values[i].abs() / rate(s.lags[i] as f64))
        .fold(0.0, f64::max);
    let violations = (0..s.lags.len())
        .filter(|&i| {
            let n = s.lags[i];
            n >= fit_window.0.max(2)
                && n <= max_lag
                && s.values[i].abs() > amplitude * rate(n as f64) + 3.0 * s.stderr[i]
        })
        .map(|i| s.lags[i])
        .collect();
    BoundCheck {
        amplitude,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> CorrelationSeries {
        let lags: Vec<usize> = (1..=64).collect();
        let values: Vec<f64> = lags.iter().map(|&n| f(n as f64)).collect();
        CorrelationSeries {
            pair: "synthetic".into(),
            stderr: values.iter().map(|v| v.abs() * 1e-3).collect(),
            lags,
            values,
            estimator: "synthetic".into(),
            samples: 0,
            seed: 0,
        }
    }

    #[test]
    fn recovers_pure_power_law() {
        let s = synthetic(|n| n.powi(-2));
        let f = fit_decay(&s, (2, 64), false).unwrap();
        assert!((f.p - 2.0).abs() < 0.01);
        assert!((f.amplitude - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recovers_log_corrected_law() {
        let s = synthetic(|n| n.powi(-2) * n.ln().powi(4));
        let f = fit_decay(&s, (2, 64), true).unwrap();
        assert!((f.p - 2.0).abs() < 0.05);
    }

    #[test]
    fn insufficient_signal() {
        let mut s = synthetic(|n| n.powi(-2));
        s.stderr.iter_mut().for_each(|e| *e = 1.0);
        assert!(matches!(
            fit_decay(&s, (2, 64), false),
            Err(Error::InsufficientSignal { .. })
        ));
    }

    #[test]
    fn power_law_beats_exponential_on_power_data() {
        let ns = [16.0, 32.0, 64.0, 128.0];
        let cs: Vec<f64> = ns.iter().map(|n: &f64| n.powi(-2)).collect();
        let (p, e) = power_vs_exponential(&ns, &cs);
        assert!(p < 1e-20 && e > 0.1);
    }

    #[test]
    fn window_stops_at_first_insignificant_lag() {
        let mut s = synthetic(|n| n.powi(-2));
        s.stderr[19] = 1.0;
        assert_eq!(significant_window(&s, 8, 64), Some((8, 19)));
        s.stderr[7] = 1.0;
        assert_eq!(significant_window(&s, 8, 64), None);
    }

    #[test]
    fn bound_check() {
        let s = synthetic(|n| 0.3 * rate(n.max(2.0)));
        let b = theorem_bound_check(&s, (8, 16), 64);
        assert!((b.amplitude - 0.3).abs() < 1e-12);
        assert!(b.violations.is_empty());
    }
}
