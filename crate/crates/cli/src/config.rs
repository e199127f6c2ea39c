//! Flat `key = value` run configuration with typed validation.

use polymhd::forms::MhdParams;
use polymhd::mesh::MeshFamily;
use std::fmt;

#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key '{}': {}", self.key, self.reason)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError { key: key.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Example1,
    Cavity,
    Decay,
}

/// Parsed configuration. Parameters left unset fall back to per-problem
/// defaults when resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub family: MeshFamily,
    pub levels: Option<(u32, u32)>,
    pub k: usize,
    pub nu: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub t_final: f64,
    /// explicit time step; `None` selects the `n = ⌈T/h⌉` rule
    pub dt: Option<f64>,
    pub problem: ProblemKind,
    pub out_dir: std::path::PathBuf,
    pub snapshots: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: MeshFamily::Square,
            levels: None,
            k: 1,
            nu: None,
            mu: None,
            sigma: None,
            t_final: 1.0,
            dt: None,
            problem: ProblemKind::Example1,
            out_dir: "out".into(),
            snapshots: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Physical parameters with per-problem defaults: Example 1 uses
    /// ν = μ = σ = 1, the cavity benchmark ν = 0.01, σ = 100, μ = 1.
    pub fn physics(&self) -> MhdParams {
        let (dn, dm, ds) = match self.problem {
            ProblemKind::Cavity => (0.01, 1.0, 100.0),
            _ => (1.0, 1.0, 1.0),
        };
        MhdParams {
            nu: self.nu.unwrap_or(dn),
            mu: self.mu.unwrap_or(dm),
            sigma: self.sigma.unwrap_or(ds),
        }
    }

    /// Configured level range, defaulting to 1..=4.
    pub fn level_range(&self) -> std::ops::RangeInclusive<u32> {
        let (lo, hi) = self.levels.unwrap_or((1, 4));
        lo..=hi
    }

    /// Single level for one-mesh commands: the top of the configured range,
    /// or `fallback` when none was given.
    pub fn single_level(&self, fallback: u32) -> u32 {
        self.levels.map(|(_, hi)| hi).unwrap_or(fallback)
    }
}

pub fn parse_levels(s: &str) -> Result<(u32, u32), ConfigError> {
    let parse_one = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|_| err("levels", format!("invalid level '{t}'")))
    };
    let (lo, hi) = match s.split_once('-') {
        Some((a, b)) => (parse_one(a)?, parse_one(b)?),
        None => {
            let v = parse_one(s)?;
            (v, v)
        }
    };
    if lo == 0 || hi > 6 || lo > hi {
        return Err(err("levels", format!("range {lo}-{hi} out of 1..=6")));
    }
    Ok((lo, hi))
}

/// Parse a flat key-value document. Blank lines and `#` comments are
/// ignored; unknown keys are rejected; values are validated on sight.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line, "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        let positive = |k: &str| -> Result<f64, ConfigError> {
            let v: f64 = value.parse().map_err(|_| err(k, format!("invalid number '{value}'")))?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(err(k, format!("must be positive, got {value}")))
            }
        };
        match key {
            "family" => {
                cfg.family = value.parse().map_err(|e: String| err("family", e))?;
            }
            "levels" => cfg.levels = Some(parse_levels(value)?),
            "k" => {
                let k: usize =
                    value.parse().map_err(|_| err("k", format!("invalid integer '{value}'")))?;
                if !(1..=2).contains(&k) {
                    return Err(err("k", format!("k = {k} unsupported (1 or 2)")));
                }
                cfg.k = k;
            }
            "nu" => cfg.nu = Some(positive("nu")?),
            "mu" => cfg.mu = Some(positive("mu")?),
            "sigma" => cfg.sigma = Some(positive("sigma")?),
            "T" => cfg.t_final = positive("T")?,
            "dt" => cfg.dt = Some(positive("dt")?),
            "problem" => {
                cfg.problem = match value {
                    "example1" => ProblemKind::Example1,
                    "cavity" => ProblemKind::Cavity,
                    "decay" => ProblemKind::Decay,
                    other => {
                        return Err(err("problem", format!("unknown problem '{other}'")))
                    }
                }
            }
            "out" => cfg.out_dir = value.into(),
            "snapshots" => {
                cfg.snapshots = value
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| err("snapshots", format!("invalid time '{t}'")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            other => return Err(err(other, "unknown key")),
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.family, MeshFamily::Square);
        assert_eq!(cfg.k, 1);
        let p = cfg.physics();
        assert_eq!((p.nu, p.mu, p.sigma), (1.0, 1.0, 1.0));
        assert_eq!(cfg.t_final, 1.0);
    }

    #[test]
    fn example2_parameters() {
        let cfg = parse_config("nu = 0.01\nsigma = 100\n").unwrap();
        let p = cfg.physics();
        assert_eq!(p.nu, 0.01);
        assert_eq!(p.sigma, 100.0);
        assert_eq!(p.mu, 1.0);
    }

    #[test]
    fn cavity_defaults() {
        let cfg = parse_config("problem = cavity").unwrap();
        let p = cfg.physics();
        assert_eq!((p.nu, p.mu, p.sigma), (0.01, 1.0, 100.0));
    }

    #[test]
    fn bad_degree_rejected() {
        let e = parse_config("k = 7").unwrap_err();
        assert_eq!(e.key, "k");
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse_config("kappa = 3").unwrap_err();
        assert_eq!(e.key, "kappa");
    }

    #[test]
    fn levels_and_comments() {
        let cfg = parse_config("# comment\nlevels = 2-4\nfamily = voronoi\n").unwrap();
        assert_eq!(cfg.levels, Some((2, 4)));
        assert_eq!(cfg.family, MeshFamily::Voronoi);
        assert!(parse_config("levels = 0-9").is_err());
    }
}
