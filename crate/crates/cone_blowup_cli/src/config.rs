use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use cone_blowup::Config;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Everything a run needs: the physical [`Config`] plus grids, scheme,
/// output location and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub core: Config,
    /// Ground-state domain end and integrator tolerance.
    pub rho_max: f64,
    pub tol: f64,
    pub gs_nodes: usize,
    /// Time at which the regional and composite profiles are tabulated.
    pub t: f64,
    /// Evolution start and end times.
    pub t1: f64,
    pub t_end: f64,
    pub cfl: f64,
    /// Grid cells across the core scale `(t₁/2)^{ν+1}`.
    pub cells_per_core: usize,
    pub remote_nodes: usize,
    pub rayleigh_samples: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            core: Config::default(),
            rho_max: 200.0,
            tol: 1e-12,
            gs_nodes: 4000,
            t: 0.05,
            t1: 0.05,
            t_end: 0.1,
            cfl: 0.4,
            cells_per_core: 32,
            remote_nodes: 800,
            rayleigh_samples: 50,
            seed: 7,
            out: PathBuf::from("out"),
        }
    }
}

pub const KEYS: [&str; 18] = [
    "nu",
    "eps1",
    "eps2",
    "delta",
    "n_inner",
    "n_remote",
    "rho_max",
    "tol",
    "gs_nodes",
    "t",
    "t1",
    "t_end",
    "cfl",
    "cells_per_core",
    "remote_nodes",
    "rayleigh_samples",
    "seed",
    "out",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("bad value for {key}: {v:?}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "nu" => self.core.nu = num(key, v)?,
            "eps1" => self.core.eps1 = num(key, v)?,
            "eps2" => self.core.eps2 = num(key, v)?,
            "delta" => self.core.delta = num(key, v)?,
            "n_inner" => self.core.n_inner = num(key, v)?,
            "n_remote" => self.core.n_remote = num(key, v)?,
            "rho_max" => self.rho_max = num(key, v)?,
            "tol" => self.tol = num(key, v)?,
            "gs_nodes" => self.gs_nodes = num(key, v)?,
            "t" => self.t = num(key, v)?,
            "t1" => self.t1 = num(key, v)?,
            "t_end" => self.t_end = num(key, v)?,
            "cfl" => self.cfl = num(key, v)?,
            "cells_per_core" => self.cells_per_core = num(key, v)?,
            "remote_nodes" => self.remote_nodes = num(key, v)?,
            "rayleigh_samples" => self.rayleigh_samples = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.core.validate().map_err(|e| match e {
            cone_blowup::Error::InvalidConfig(m) => ConfigError::Invalid(m),
            other => ConfigError::Invalid(other.to_string()),
        })?;
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        for (name, v) in [("t", self.t), ("t1", self.t1), ("t_end", self.t_end)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad(format!("cfl must lie in (0, 1), got {}", self.cfl));
        }
        if self.cells_per_core < 4 {
            return bad("cells_per_core must be at least 4".into());
        }
        if self.rayleigh_samples < 10 {
            return bad("rayleigh_samples must be at least 10".into());
        }
        Ok(())
    }

    /// Flat `key=value` lines in [`KEYS`] order, reparseable by [`parse_str`].
    pub fn to_text(&self) -> String {
        let c = &self.core;
        let vals = [
            format!("{:?}", c.nu),
            format!("{:?}", c.eps1),
            format!("{:?}", c.eps2),
            format!("{:?}", c.delta),
            c.n_inner.to_string(),
            c.n_remote.to_string(),
            format!("{:?}", self.rho_max),
            format!("{:?}", self.tol),
            self.gs_nodes.to_string(),
            format!("{:?}", self.t),
            format!("{:?}", self.t1),
            format!("{:?}", self.t_end),
            format!("{:?}", self.cfl),
            self.cells_per_core.to_string(),
            self.remote_nodes.to_string(),
            self.rayleigh_samples.to_string(),
            self.seed.to_string(),
            self.out.display().to_string(),
        ];
        KEYS.iter().zip(vals).map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// One `key=value` entry with its line number, comments and blanks removed.
pub fn entries(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Parse { line, msg: format!("expected key=value, got {s:?}") })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ConfigError::Parse { line, msg: format!("unknown key {k:?}") });
        }
        if !seen.insert(k.to_string()) {
            return Err(ConfigError::Parse { line, msg: format!("duplicate key {k:?}") });
        }
        out.push((line, k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Strict parse of a flat `key=value` text: unknown or repeated keys and
/// malformed values are errors carrying their line number.
pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut rc = RunConfig::default();
    for (line, k, v) in entries(text)? {
        rc.set(&k, &v).map_err(|msg| ConfigError::Parse { line, msg })?;
    }
    rc.validate()?;
    Ok(rc)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_keys_and_comments() {
        let rc = parse_str("# run\nnu = 0.7071\n\nseed=3 # fixed\n").unwrap();
        assert_eq!(rc.core.nu, 0.7071);
        assert_eq!(rc.seed, 3);
        assert_eq!(rc.t1, RunConfig::default().t1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_str("nu=0.75\nbogus=1\n") {
            Err(ConfigError::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_str("t=abc") {
            Err(ConfigError::Parse { line: 1, msg }) => assert!(msg.contains("t")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_str("seed=1\nseed=2"), Err(ConfigError::Parse { line: 2, .. })));
        assert!(matches!(parse_str("novalue"), Err(ConfigError::Parse { line: 1, .. })));
    }

    #[test]
    fn invariants_are_checked() {
        assert!(matches!(parse_str("nu=0.4"), Err(ConfigError::Invalid(_))));
        assert!(matches!(parse_str("eps1=0.8"), Err(ConfigError::Invalid(_))));
        assert!(matches!(parse_str("cfl=1.5"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn text_round_trips() {
        let mut rc = RunConfig::default();
        rc.core.nu = 0.75;
        rc.out = PathBuf::from("runs/a");
        assert_eq!(parse_str(&rc.to_text()).unwrap(), rc);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(parse_config(Path::new("/nonexistent/run.cfg")), Err(ConfigError::Io { .. })));
    }
}
