use crate::config::{Estimator, RunConfig};
use crate::verify;
use intermap::correlations::{
    by_id, clt_sample, fit_decay, grid_correlation, orbit_correlations, significant_window,
    theorem_bound_check, write_gnuplot_script, CorrelationSeries, OrbitSampler,
};
use intermap::directions::{
    minimal_expansion_k, slope_batch, uniform_points, write_slope_csv, OrbitSlopes,
};
use intermap::manifolds::{
    default_length, minimize_stable_sequence, stable_graph, unstable_graph, MINIMIZER_TOL,
};
use intermap::map_core::{
    fat_sector_passage, orbit, passage_start, quasi_hamiltonian, DEFAULT_CAP,
};
use intermap::numeric::loglog_slope;
use intermap::perturbation::{doeblin_sigma, l1_decay_curve, perturbed_operator, DensityGrid};
use intermap::{Error, TorusPoint};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::{Duration, Instant};

pub const COMMANDS: [&str; 9] = [
    "orbit",
    "manifold",
    "slopes",
    "expansion",
    "passage",
    "ulam",
    "correlate",
    "clt",
    "verify",
];

#[derive(Debug)]
pub enum RunError {
    Numerical(Error),
    Io(io::Error),
    /// At least one invariant of `verify` failed.
    Invariants(usize),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Numerical(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
            RunError::Invariants(n) => write!(f, "{n} invariant(s) failed"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Numerical(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e)
    }
}

/// A fitted or measured constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub name: String,
    pub value: f64,
    pub uncertainty: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: String,
    pub config: Vec<(&'static str, String)>,
    pub config_hash: String,
    pub wall_time: Duration,
    pub manifest: Vec<PathBuf>,
    pub constants: Vec<Constant>,
    pub checks: Vec<verify::Check>,
}

impl RunReport {
    /// Deterministic part of the report; worker count, output directory and wall time
    /// are left to [`RunReport::write_runtime`].
    pub fn write<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "command: {}", self.command)?;
        writeln!(w, "config: {}", self.config_hash)?;
        for (k, v) in &self.config {
            if *k != "workers" && *k != "output" {
                writeln!(w, "  {k} = {v}")?;
            }
        }
        if !self.checks.is_empty() {
            writeln!(w, "invariants:")?;
            for c in &self.checks {
                writeln!(
                    w,
                    "  [{}] {} = {:.3e} ({})",
                    c.label(),
                    c.name,
                    c.value,
                    c.requirement
                )?;
            }
        }
        if !self.constants.is_empty() {
            writeln!(w, "constants:")?;
            for c in &self.constants {
                match c.uncertainty {
                    Some(u) => writeln!(w, "  {} = {:.6e} ± {:.1e}", c.name, c.value, u)?,
                    None => writeln!(w, "  {} = {:.6e}", c.name, c.value)?,
                }
            }
        }
        writeln!(w, "files:")?;
        for p in &self.manifest {
            writeln!(
                w,
                "  {}",
                p.file_name().unwrap_or_default().to_string_lossy()
            )?;
        }
        Ok(())
    }

    pub fn write_runtime<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let get = |key| {
            self.config
                .iter()
                .find(|(k, _)| *k == key)
                .map_or("", |(_, v)| v.as_str())
        };
        writeln!(
            w,
            "{}: {:.3} s wall time, {} worker(s), output in {}",
            self.command,
            self.wall_time.as_secs_f64(),
            get("workers"),
            get("output")
        )
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    command: &'static str,
    manifest: Vec<PathBuf>,
    constants: Vec<Constant>,
    checks: Vec<verify::Check>,
}

impl Run<'_> {
    /// Writes `name` in the output directory: a comment line with command, config hash
    /// and seed, then the body.
    fn csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> io::Result<()> {
        fs::create_dir_all(&self.cfg.output)?;
        let path = self.cfg.output.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(
            w,
            "# intermap {} config={} seed={}",
            self.command,
            self.cfg.hash(),
            self.cfg.seed
        )?;
        body(&mut w)?;
        w.flush()?;
        self.manifest.push(path);
        Ok(())
    }

    fn constant(&mut self, name: impl Into<String>, value: f64, uncertainty: Option<f64>) {
        self.constants.push(Constant {
            name: name.into(),
            value,
            uncertainty,
        });
    }
}

fn file_id(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn cmd_orbit(r: &mut Run) -> Result<(), RunError> {
    let c = &r.cfg.orbit;
    let h = r.cfg.profile;
    let pts = orbit(TorusPoint::new(c.x, c.y), c.steps, &h);
    r.csv("orbit.csv", |w| {
        writeln!(w, "n,x,y,H")?;
        for (n, p) in pts.iter().enumerate() {
            writeln!(
                w,
                "{n},{:.17e},{:.17e},{:.17e}",
                p.x,
                p.y,
                quasi_hamiltonian(*p, &h)
            )?;
        }
        Ok(())
    })?;
    Ok(())
}

fn cmd_manifold(r: &mut Run) -> Result<(), RunError> {
    let (c, h) = (&r.cfg.manifold, r.cfg.profile);
    let s = stable_graph(c.a_max, c.samples, &h, r.cfg.workers)?;
    let u = unstable_graph(&s);
    r.csv("manifold.csv", |w| {
        s.write_csv(&mut *w, true)?;
        u.write_csv(&mut *w, false)
    })?;
    let k = c.samples + 1;
    let x = s.xs[k];
    r.constant(
        "gamma_s(x)/x^2 at smallest sample",
        s.gamma[k] / (x * x),
        None,
    );
    r.constant("-1/A", -1.0 / h.a_const(), None);
    r.constant("max minimizer residual", s.residual, None);
    Ok(())
}

fn cmd_slopes(r: &mut Run) -> Result<(), RunError> {
    let (c, h) = (&r.cfg.slopes, r.cfg.profile);
    let pts: Vec<TorusPoint> = uniform_points(c.count, r.cfg.seed)
        .into_iter()
        .filter(|p| p.norm() >= 1e-6)
        .collect();
    let recs = slope_batch(&pts, c.tol, &h, r.cfg.workers)?;
    r.csv("slopes.csv", |w| write_slope_csv(w, &pts, &recs))?;
    let ratios: Vec<f64> = pts
        .iter()
        .zip(&recs)
        .map(|(p, s)| s.u / (p.x.abs() + p.y.abs().sqrt()))
        .collect();
    r.constant(
        "K-",
        ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        None,
    );
    r.constant("K+", ratios.iter().cloned().fold(0.0, f64::max), None);
    Ok(())
}

fn cmd_expansion(r: &mut Run) -> Result<(), RunError> {
    let (c, h) = (&r.cfg.expansion, r.cfg.profile);
    let w = minimize_stable_sequence(c.x0, default_length(c.x0).max(c.steps), MINIMIZER_TOL, &h)?;
    let mut orbit = w.unstable_backward_orbit(&h);
    orbit.truncate(c.steps + 1);
    let s = OrbitSlopes::along(orbit, c.tol, &h)?;
    let (ll, lm) = (s.log_lambda_curve(), s.log_mu_curve());
    r.csv("expansion.csv", |w| {
        writeln!(w, "n,x,y,log_lambda_u,log_mu_s")?;
        for n in 0..ll.len() {
            let p = s.orbit[n];
            writeln!(
                w,
                "{n},{:.17e},{:.17e},{:.17e},{:.17e}",
                p.x, p.y, ll[n], lm[n]
            )?;
        }
        Ok(())
    })?;
    if c.steps >= 100 {
        let ns: Vec<f64> = (c.steps / 100..=c.steps).map(|n| n as f64).collect();
        let ls: Vec<f64> = ns.iter().map(|&n| ll[n as usize].exp()).collect();
        r.constant("log-log slope of lambda_u,n", loglog_slope(&ns, &ls), None);
    }
    r.constant("minimal K", minimal_expansion_k(c.x0, &ll), None);
    Ok(())
}

fn cmd_passage(r: &mut Run) -> Result<(), RunError> {
    let (c, h) = (&r.cfg.passage, r.cfg.profile);
    let m = c.m.unwrap_or_else(|| h.b().sqrt());
    let count = c.count;
    let energies: Vec<f64> = (0..count)
        .map(|i| {
            let t = if count == 1 {
                0.0
            } else {
                i as f64 / (count - 1) as f64
            };
            c.e_min * (c.e_max / c.e_min).powf(t)
        })
        .collect();
    let mut rows = Vec::new();
    for &e in &energies {
        let p = passage_start(e, c.delta, &h, DEFAULT_CAP)?;
        let rec = fat_sector_passage(p, &h, m, c.delta, DEFAULT_CAP)?;
        rows.push((e, rec.check_bounds(&h, 1.25), rec));
    }
    r.csv("passage.csv", |w| {
        writeln!(
            w,
            "E,m_plus,m_minus,m,y_abs_min,y_abs_max,level_ratio,band_ok,entry_ok,duration_ok"
        )?;
        for (e, (a, b, d), rec) in &rows {
            writeln!(
                w,
                "{e:.17e},{},{},{},{:.17e},{:.17e},{:.17e},{a},{b},{d}",
                rec.m_plus, rec.m_minus, rec.m, rec.y_abs_min, rec.y_abs_max, rec.level_ratio
            )?;
        }
        Ok(())
    })?;
    let ok = rows
        .iter()
        .filter(|(_, (a, b, d), _)| *a && *b && *d)
        .count();
    r.constant(
        "fraction of passages within slack 1.25",
        ok as f64 / rows.len() as f64,
        None,
    );
    Ok(())
}

fn cmd_ulam(r: &mut Run) -> Result<(), RunError> {
    let (c, h, workers) = (&r.cfg.ulam, r.cfg.profile, r.cfg.workers);
    let op = perturbed_operator(c.grid, c.eps, c.c3, c.samples, r.cfg.seed, &h, workers)?;
    let sigma = doeblin_sigma(&op, workers);
    let f0 = DensityGrid::from_fn(c.grid, |p| (2.0 * std::f64::consts::PI * p.x).cos()).centered();
    let curve = l1_decay_curve(&op, &f0, c.decay_steps)?;
    r.csv("decay.csv", |w| {
        writeln!(w, "n,l1,bound")?;
        for (n, v) in curve.iter().enumerate() {
            writeln!(
                w,
                "{n},{v:.17e},{:.17e}",
                (1.0 - sigma).powf(n as f64 / 2.0) * curve[0]
            )?;
        }
        Ok(())
    })?;
    if c.matrix {
        r.csv("operator.txt", |w| op.write_triplets(w))?;
    }
    r.constant("n_eps", op.n as f64, None);
    r.constant("sigma_hat", sigma, None);
    Ok(())
}

fn cmd_correlate(r: &mut Run, gnuplot: bool) -> Result<(), RunError> {
    let (c, h, workers) = (&r.cfg.correlate, r.cfg.profile, r.cfg.workers);
    let obs: Vec<_> = c
        .observables
        .iter()
        .map(|id| by_id(id, h).expect("validated id"))
        .collect();
    let lags: Vec<usize> = (0..=c.max_lag).collect();
    let series: Vec<CorrelationSeries> = match c.estimator {
        Estimator::Orbit => {
            let pairs: Vec<_> = obs.iter().map(|f| (f.clone(), f.clone())).collect();
            orbit_correlations(
                &pairs,
                &lags,
                &OrbitSampler::new(c.length, r.cfg.seed),
                &h,
                workers,
            )?
        }
        Estimator::Lattice => obs
            .iter()
            .map(|f| grid_correlation(f, f, &lags, c.lattice, &h, workers))
            .collect::<intermap::Result<_>>()?,
    };
    let mut files = Vec::new();
    for (id, s) in c.observables.iter().zip(&series) {
        let name = format!("corr_{}.csv", file_id(id));
        r.csv(&name, |w| s.write_csv(w))?;
        files.push(name);
        if let Some(window) = significant_window(s, c.fit_lo, c.fit_hi) {
            if let Ok(fit) = fit_decay(s, window, false) {
                r.csv(&format!("fit_{}.csv", file_id(id)), |w| fit.write_csv(w))?;
                r.constant(
                    format!("p[{id}] on lags {}..{}", window.0, window.1),
                    fit.p,
                    Some(fit.p_stderr),
                );
            }
        }
        let b = theorem_bound_check(s, (c.fit_lo, (2 * c.fit_lo).min(c.fit_hi)), c.max_lag);
        r.constant(format!("B[{id}]"), b.amplitude, None);
        r.constant(
            format!("bound violations[{id}]"),
            b.violations.len() as f64,
            None,
        );
    }
    if gnuplot {
        r.csv("correlations.gp", |w| write_gnuplot_script(w, &files))?;
    }
    Ok(())
}

fn cmd_clt(r: &mut Run) -> Result<(), RunError> {
    let (c, h) = (&r.cfg.clt, r.cfg.profile);
    let f = by_id(&c.observable, h).expect("validated id");
    let rep = clt_sample(&f, c.n, c.m, r.cfg.seed, &h, r.cfg.workers)?;
    r.csv("clt.csv", |w| rep.write_csv(w))?;
    let m = c.m as f64;
    r.constant(
        "variance",
        rep.variance,
        Some(rep.variance * (2.0 / m).sqrt()),
    );
    r.constant("skewness", rep.skewness, Some((6.0 / m).sqrt()));
    r.constant("kurtosis", rep.kurtosis, Some((24.0 / m).sqrt()));
    Ok(())
}

fn cmd_verify(r: &mut Run) -> Result<(), RunError> {
    let checks = verify::run_suite(r.cfg);
    r.csv("verify.csv", |w| verify::write_csv(w, &checks))?;
    r.checks = checks;
    Ok(())
}

/// Runs `command`; on invariant failures the report is still returned alongside the error.
pub fn run(
    command: &str,
    cfg: &RunConfig,
    gnuplot: bool,
) -> (Option<RunReport>, Result<(), RunError>) {
    let start = Instant::now();
    let Some(&name) = COMMANDS.iter().find(|c| **c == command) else {
        unreachable!("command validated by the argument parser")
    };
    let mut r = Run {
        cfg,
        command: name,
        manifest: Vec::new(),
        constants: Vec::new(),
        checks: Vec::new(),
    };
    let res = match name {
        "orbit" => cmd_orbit(&mut r),
        "manifold" => cmd_manifold(&mut r),
        "slopes" => cmd_slopes(&mut r),
        "expansion" => cmd_expansion(&mut r),
        "passage" => cmd_passage(&mut r),
        "ulam" => cmd_ulam(&mut r),
        "correlate" => cmd_correlate(&mut r, gnuplot),
        "clt" => cmd_clt(&mut r),
        _ => cmd_verify(&mut r),
    };
    let failed = r.checks.iter().filter(|c| c.label() == "FAIL").count();
    let report = RunReport {
        command: name.into(),
        config: cfg.entries(),
        config_hash: cfg.hash(),
        wall_time: start.elapsed(),
        manifest: r.manifest,
        constants: r.constants,
        checks: r.checks,
    };
    match res {
        Err(e) => (None, Err(e)),
        Ok(()) if failed > 0 => (Some(report), Err(RunError::Invariants(failed))),
        Ok(()) => (Some(report), Ok(())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dir: &std::path::Path) -> RunConfig {
        let mut c = RunConfig::default();
        c.output = dir.to_path_buf();
        c.correlate.length = 100_000;
        c.correlate.max_lag = 16;
        c.correlate.fit_hi = 16;
        c.ulam.grid = 32;
        c.ulam.eps = 0.1;
        c.ulam.samples = 16;
        c.expansion.steps = 500;
        c.passage.count = 3;
        c.slopes.count = 20;
        c.manifold.samples = 5;
        c.clt.m = 1000;
        c.clt.n = 1000;
        c
    }

    #[test]
    fn every_command_writes_stamped_csvs() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(dir.path());
        for cmd in COMMANDS.iter().filter(|c| **c != "verify") {
            let (rep, res) = run(cmd, &c, true);
            res.unwrap_or_else(|e| panic!("{cmd}: {e}"));
            let rep = rep.unwrap();
            assert!(!rep.manifest.is_empty());
            for p in &rep.manifest {
                let text = fs::read_to_string(p).unwrap();
                let first = text.lines().next().unwrap();
                assert!(
                    first.contains(&c.hash()) && first.contains("seed=1"),
                    "{first}"
                );
                assert!(text.lines().count() >= 2);
            }
        }
    }

    #[test]
    fn correlate_is_deterministic() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let mut ca = cfg(a.path());
        let mut cb = cfg(b.path());
        ca.workers = 1;
        cb.workers = 3;
        let ra = run("correlate", &ca, false).0.unwrap();
        let rb = run("correlate", &cb, false).0.unwrap();
        assert_eq!(ra.manifest.len(), rb.manifest.len());
        for (pa, pb) in ra.manifest.iter().zip(&rb.manifest) {
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
        }
        let (mut sa, mut sb) = (Vec::new(), Vec::new());
        ra.write(&mut sa).unwrap();
        rb.write(&mut sb).unwrap();
        assert_eq!(sa, sb);
    }
}
