use intermap::correlations::by_id;
use intermap::ShearProfile;
use sha2::{Digest, Sha256};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

/// Environment variable that overrides the output directory.
pub const OUTPUT_ENV: &str = "INTERMAP_OUT";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Unreadable { path: String, reason: String },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: expected {expected}")]
    InvalidValue {
        key: String,
        value: String,
        expected: String,
    },
    #[error("`{key}` = {value} is out of range: {range}")]
    OutOfRange {
        key: String,
        value: String,
        range: String,
    },
    #[error("resolution error: ulam.eps = {eps} is below 2/ulam.grid = {min}")]
    Resolution { eps: f64, min: f64 },
}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitParams {
    pub x: f64,
    pub y: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldParams {
    pub a_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopesParams {
    pub count: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionParams {
    pub x0: f64,
    pub steps: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassageParams {
    pub count: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub delta: f64,
    /// `None` selects `√b`.
    pub m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UlamParams {
    pub grid: usize,
    pub eps: f64,
    pub c3: f64,
    pub samples: usize,
    pub decay_steps: usize,
    pub matrix: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Orbit,
    Lattice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelateParams {
    pub observables: Vec<String>,
    pub estimator: Estimator,
    pub length: usize,
    pub lattice: usize,
    pub max_lag: usize,
    pub fit_lo: usize,
    pub fit_hi: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltParams {
    pub observable: String,
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: ShearProfile,
    pub seed: u64,
    pub workers: usize,
    pub output: PathBuf,
    pub orbit: OrbitParams,
    pub manifold: ManifoldParams,
    pub slopes: SlopesParams,
    pub expansion: ExpansionParams,
    pub passage: PassageParams,
    pub ulam: UlamParams,
    pub correlate: CorrelateParams,
    pub clt: CltParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: ShearProfile::PeriodicSine,
            seed: 1,
            workers: 1,
            output: PathBuf::from("out"),
            orbit: OrbitParams {
                x: 0.3,
                y: 0.1,
                steps: 1000,
            },
            manifold: ManifoldParams {
                a_max: 0.2,
                samples: 40,
            },
            slopes: SlopesParams {
                count: 200,
                tol: 1e-12,
            },
            expansion: ExpansionParams {
                x0: 0.1,
                steps: 10_000,
                tol: 1e-12,
            },
            passage: PassageParams {
                count: 20,
                e_min: 1e-8,
                e_max: 1e-4,
                delta: 0.1,
                m: None,
            },
            ulam: UlamParams {
                grid: 128,
                eps: 0.05,
                c3: 10.0,
                samples: 400,
                decay_steps: 40,
                matrix: false,
            },
            correlate: CorrelateParams {
                observables: ["cos2pix", "sin2piy", "cos2pixy", "bump"]
                    .map(String::from)
                    .to_vec(),
                estimator: Estimator::Orbit,
                length: 1_000_000,
                lattice: 256,
                max_lag: 64,
                fit_lo: 8,
                fit_hi: 64,
            },
            clt: CltParams {
                observable: "cos2pix".into(),
                n: 10_000,
                m: 1000,
            },
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str, expected: &str) -> CResult<T> {
    value.parse().map_err(|_| ConfigError::InvalidValue {
        key: key.into(),
        value: value.into(),
        expected: expected.into(),
    })
}

fn real(key: &str, value: &str) -> CResult<f64> {
    let v: f64 = parse(key, value, "a real number")?;
    if !v.is_finite() {
        return Err(ConfigError::InvalidValue {
            key: key.into(),
            value: value.into(),
            expected: "a finite real number".into(),
        });
    }
    Ok(v)
}

fn count(key: &str, value: &str) -> CResult<usize> {
    let v: f64 = parse(key, value, "a non-negative integer")?;
    if v < 0.0 || v.fract() != 0.0 || v > 1e15 {
        return Err(ConfigError::InvalidValue {
            key: key.into(),
            value: value.into(),
            expected: "a non-negative integer".into(),
        });
    }
    Ok(v as usize)
}

fn check<T: PartialOrd + Display>(key: &str, v: T, ok: bool, range: &str) -> CResult<()> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange {
            key: key.into(),
            value: v.to_string(),
            range: range.into(),
        })
    }
}

fn num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e7) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

impl RunConfig {
    /// Sets one key from its textual value. Ranges are checked by [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, value: &str) -> CResult<()> {
        let value = value.trim();
        match key {
            "profile" => {
                self.profile = value.parse().map_err(|_| ConfigError::InvalidValue {
                    key: key.into(),
                    value: value.into(),
                    expected: "sine, periodic-sine or cubic:<b>".into(),
                })?
            }
            "seed" => self.seed = parse(key, value, "a 64-bit unsigned integer")?,
            "workers" => self.workers = count(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "orbit.x" => self.orbit.x = real(key, value)?,
            "orbit.y" => self.orbit.y = real(key, value)?,
            "orbit.steps" => self.orbit.steps = count(key, value)?,
            "manifold.a_max" => self.manifold.a_max = real(key, value)?,
            "manifold.samples" => self.manifold.samples = count(key, value)?,
            "slopes.count" => self.slopes.count = count(key, value)?,
            "slopes.tol" => self.slopes.tol = real(key, value)?,
            "expansion.x0" => self.expansion.x0 = real(key, value)?,
            "expansion.steps" => self.expansion.steps = count(key, value)?,
            "expansion.tol" => self.expansion.tol = real(key, value)?,
            "passage.count" => self.passage.count = count(key, value)?,
            "passage.e_min" => self.passage.e_min = real(key, value)?,
            "passage.e_max" => self.passage.e_max = real(key, value)?,
            "passage.delta" => self.passage.delta = real(key, value)?,
            "passage.m" => {
                self.passage.m = if value == "auto" {
                    None
                } else {
                    Some(real(key, value)?)
                }
            }
            "ulam.grid" => self.ulam.grid = count(key, value)?,
            "ulam.eps" => self.ulam.eps = real(key, value)?,
            "ulam.c3" => self.ulam.c3 = real(key, value)?,
            "ulam.samples" => self.ulam.samples = count(key, value)?,
            "ulam.decay_steps" => self.ulam.decay_steps = count(key, value)?,
            "ulam.matrix" => self.ulam.matrix = parse(key, value, "true or false")?,
            "correlate.observables" => {
                self.correlate.observables = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "correlate.estimator" => {
                self.correlate.estimator = match value {
                    "orbit" => Estimator::Orbit,
                    "lattice" => Estimator::Lattice,
                    _ => {
                        return Err(ConfigError::InvalidValue {
                            key: key.into(),
                            value: value.into(),
                            expected: "orbit or lattice".into(),
                        })
                    }
                }
            }
            "correlate.length" => self.correlate.length = count(key, value)?,
            "correlate.lattice" => self.correlate.lattice = count(key, value)?,
            "correlate.max_lag" => self.correlate.max_lag = count(key, value)?,
            "correlate.fit_lo" => self.correlate.fit_lo = count(key, value)?,
            "correlate.fit_hi" => self.correlate.fit_hi = count(key, value)?,
            "clt.observable" => self.clt.observable = value.to_string(),
            "clt.n" => self.clt.n = count(key, value)?,
            "clt.m" => self.clt.m = count(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> CResult<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.trim().into(),
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> CResult<()> {
        let c = self;
        check(
            "workers",
            c.workers,
            (1..=256).contains(&c.workers),
            "1..=256",
        )?;
        check(
            "orbit.steps",
            c.orbit.steps,
            c.orbit.steps <= 10_000_000,
            "<= 10^7",
        )?;
        check(
            "manifold.a_max",
            c.manifold.a_max,
            c.manifold.a_max > 0.0 && c.manifold.a_max <= 0.5,
            "(0, 0.5]",
        )?;
        check(
            "manifold.samples",
            c.manifold.samples,
            c.manifold.samples >= 2,
            ">= 2",
        )?;
        check("slopes.count", c.slopes.count, c.slopes.count >= 1, ">= 1")?;
        check(
            "slopes.tol",
            c.slopes.tol,
            c.slopes.tol > 0.0 && c.slopes.tol <= 1e-3,
            "(0, 1e-3]",
        )?;
        check(
            "expansion.x0",
            c.expansion.x0,
            c.expansion.x0 > 0.0 && c.expansion.x0 <= 0.5,
            "(0, 0.5]",
        )?;
        check(
            "expansion.steps",
            c.expansion.steps,
            (1..=1_000_000).contains(&c.expansion.steps),
            "1..=10^6",
        )?;
        check(
            "expansion.tol",
            c.expansion.tol,
            c.expansion.tol > 0.0 && c.expansion.tol <= 1e-3,
            "(0, 1e-3]",
        )?;
        check(
            "passage.count",
            c.passage.count,
            c.passage.count >= 1,
            ">= 1",
        )?;
        check(
            "passage.delta",
            c.passage.delta,
            c.passage.delta > 0.0 && c.passage.delta <= 0.5,
            "(0, 0.5]",
        )?;
        let e_cap = 0.5 * c.passage.delta * c.passage.delta;
        check(
            "passage.e_min",
            c.passage.e_min,
            c.passage.e_min > 0.0 && c.passage.e_min <= c.passage.e_max,
            "(0, passage.e_max]",
        )?;
        check(
            "passage.e_max",
            c.passage.e_max,
            c.passage.e_max < e_cap,
            &format!("< passage.delta²/2 = {e_cap}"),
        )?;
        if let Some(m) = c.passage.m {
            check("passage.m", m, m > 0.0, "> 0")?;
        }
        check(
            "ulam.grid",
            c.ulam.grid,
            (16..=512).contains(&c.ulam.grid),
            "16..=512",
        )?;
        check(
            "ulam.eps",
            c.ulam.eps,
            c.ulam.eps > 0.0 && c.ulam.eps <= 0.5,
            "(0, 0.5]",
        )?;
        let min = 2.0 / c.ulam.grid as f64;
        if c.ulam.eps < min {
            return Err(ConfigError::Resolution {
                eps: c.ulam.eps,
                min,
            });
        }
        check("ulam.c3", c.ulam.c3, c.ulam.c3 > 0.0, "> 0")?;
        check("ulam.samples", c.ulam.samples, c.ulam.samples >= 1, ">= 1")?;
        if c.correlate.observables.is_empty() {
            return Err(ConfigError::InvalidValue {
                key: "correlate.observables".into(),
                value: String::new(),
                expected: "a comma-separated list of observable ids".into(),
            });
        }
        for id in c.correlate.observables.iter().chain([&c.clt.observable]) {
            if by_id(id, c.profile).is_none() {
                return Err(ConfigError::InvalidValue {
                    key: if *id == c.clt.observable {
                        "clt.observable"
                    } else {
                        "correlate.observables"
                    }
                    .into(),
                    value: id.clone(),
                    expected: "cos2pix, sin2piy, cos2pixy, bump or cob:<id>".into(),
                });
            }
        }
        check(
            "correlate.length",
            c.correlate.length,
            c.correlate.length >= 100_000,
            ">= 10^5",
        )?;
        check(
            "correlate.lattice",
            c.correlate.lattice,
            (256..=4096).contains(&c.correlate.lattice),
            "256..=4096",
        )?;
        check(
            "correlate.max_lag",
            c.correlate.max_lag,
            (1..=10_000).contains(&c.correlate.max_lag),
            "1..=10^4",
        )?;
        check(
            "correlate.fit_lo",
            c.correlate.fit_lo,
            c.correlate.fit_lo >= 1 && c.correlate.fit_lo < c.correlate.fit_hi,
            "1 <= fit_lo < fit_hi",
        )?;
        check(
            "correlate.fit_hi",
            c.correlate.fit_hi,
            c.correlate.fit_hi <= c.correlate.max_lag,
            "<= correlate.max_lag",
        )?;
        check("clt.n", c.clt.n, c.clt.n >= 1000, ">= 10^3")?;
        check("clt.m", c.clt.m, c.clt.m >= 1000, ">= 10^3")?;
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = self;
        let opt = |m: Option<f64>| m.map_or("auto".to_string(), num);
        vec![
            ("profile", c.profile.to_string()),
            ("seed", c.seed.to_string()),
            ("workers", c.workers.to_string()),
            ("output", c.output.display().to_string()),
            ("orbit.x", num(c.orbit.x)),
            ("orbit.y", num(c.orbit.y)),
            ("orbit.steps", c.orbit.steps.to_string()),
            ("manifold.a_max", num(c.manifold.a_max)),
            ("manifold.samples", c.manifold.samples.to_string()),
            ("slopes.count", c.slopes.count.to_string()),
            ("slopes.tol", num(c.slopes.tol)),
            ("expansion.x0", num(c.expansion.x0)),
            ("expansion.steps", c.expansion.steps.to_string()),
            ("expansion.tol", num(c.expansion.tol)),
            ("passage.count", c.passage.count.to_string()),
            ("passage.e_min", num(c.passage.e_min)),
            ("passage.e_max", num(c.passage.e_max)),
            ("passage.delta", num(c.passage.delta)),
            ("passage.m", opt(c.passage.m)),
            ("ulam.grid", c.ulam.grid.to_string()),
            ("ulam.eps", num(c.ulam.eps)),
            ("ulam.c3", num(c.ulam.c3)),
            ("ulam.samples", c.ulam.samples.to_string()),
            ("ulam.decay_steps", c.ulam.decay_steps.to_string()),
            ("ulam.matrix", c.ulam.matrix.to_string()),
            ("correlate.observables", c.correlate.observables.join(",")),
            (
                "correlate.estimator",
                match c.correlate.estimator {
                    Estimator::Orbit => "orbit",
                    Estimator::Lattice => "lattice",
                }
                .into(),
            ),
            ("correlate.length", c.correlate.length.to_string()),
            ("correlate.lattice", c.correlate.lattice.to_string()),
            ("correlate.max_lag", c.correlate.max_lag.to_string()),
            ("correlate.fit_lo", c.correlate.fit_lo.to_string()),
            ("correlate.fit_hi", c.correlate.fit_hi.to_string()),
            ("clt.observable", c.clt.observable.clone()),
            ("clt.n", c.clt.n.to_string()),
            ("clt.m", c.clt.m.to_string()),
        ]
    }

    /// Hash of every setting that can affect results (worker count and output
    /// directory excluded), 16 hex digits.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.entries() {
            if k != "workers" && k != "output" {
                hasher.update(format!("{k}={v}\n"));
            }
        }
        hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Defaults, then the config file, then the output-directory environment variable,
/// then `key=value` overrides from flags.
pub fn parse_config(
    path: Option<&Path>,
    overrides: &[(String, String)],
    env_output: Option<String>,
) -> CResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|e| ConfigError::Unreadable {
            path: p.display().to_string(),
            reason: e.to_string(),
        })?;
        cfg.apply_text(&text)?;
    }
    if let Some(dir) = env_output.filter(|d| !d.is_empty()) {
        cfg.output = PathBuf::from(dir);
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn empty_file_gives_defaults() {
        let f = file("");
        assert_eq!(
            parse_config(Some(f.path()), &[], None).unwrap(),
            RunConfig::default()
        );
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn flags_override_file() {
        let f = file("seed = 7\n# comment\nulam.grid = 64 # trailing\n");
        let c = parse_config(Some(f.path()), &[("seed".into(), "42".into())], None).unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.ulam.grid, 64);
    }

    #[test]
    fn resolution_is_checked_at_parse_time() {
        let f = file("ulam.eps = 0.001\nulam.grid = 64\n");
        let e = parse_config(Some(f.path()), &[], None).unwrap_err();
        assert!(matches!(e, ConfigError::Resolution { .. }), "{e}");
    }

    #[test]
    fn errors_are_distinct() {
        let unknown = parse_config(Some(file("bogus = 1").path()), &[], None).unwrap_err();
        let range = parse_config(Some(file("ulam.grid = 8").path()), &[], None).unwrap_err();
        let missing =
            parse_config(Some(Path::new("/nonexistent/intermap.conf")), &[], None).unwrap_err();
        let syntax = parse_config(Some(file("seed").path()), &[], None).unwrap_err();
        assert!(matches!(unknown, ConfigError::UnknownKey(_)));
        assert!(matches!(range, ConfigError::OutOfRange { .. }));
        assert!(matches!(missing, ConfigError::Unreadable { .. }));
        assert!(matches!(syntax, ConfigError::Syntax { .. }));
        let msgs = [unknown, range, missing, syntax].map(|e| e.to_string());
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(msgs[i], msgs[j]);
            }
        }
    }

    #[test]
    fn env_overrides_output_only() {
        let c = parse_config(None, &[], Some("elsewhere".into())).unwrap();
        assert_eq!(c.output, PathBuf::from("elsewhere"));
        let c = parse_config(
            None,
            &[("output".into(), "flag".into())],
            Some("elsewhere".into()),
        )
        .unwrap();
        assert_eq!(c.output, PathBuf::from("flag"));
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.workers = 8;
        b.output = PathBuf::from("x");
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn every_entry_round_trips() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.seed = 99;
        for (k, v) in a.entries() {
            b.set(k, &v).unwrap();
        }
        assert_eq!(a, b);
    }
}
