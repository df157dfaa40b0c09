//! Run configuration for the command-line tool.
//!
//! Sources are layered: defaults, then a `key = value` file, then
//! environment variables `TORIC_ALE_<KEY>` (upper case), then explicit
//! command-line flags, which the caller applies with [`RunConfig::set`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::asymptotics::RayConfig;
use crate::typej::ClassifierConfig;
use crate::verify::VerifyConfig;
use crate::{Error, Result};

pub const ENV_PREFIX: &str = "TORIC_ALE_";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Json,
    Dot,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "dot" => Ok(OutputFormat::Dot),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Dot => "dot",
            OutputFormat::Csv => "csv",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub verify: VerifyConfig,
    pub classifier: ClassifierConfig,
    pub ray: RayConfig,
    /// Relative tolerance on the fitted decay exponent (`m ≥ 3`).
    pub fit_exponent_tol: f64,
    /// Relative tolerance on the fitted leading coefficient.
    pub fit_coefficient_tol: f64,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            verify: VerifyConfig::default(),
            classifier: ClassifierConfig::default(),
            ray: RayConfig::default(),
            fit_exponent_tol: 0.03,
            fit_coefficient_tol: 0.05,
            format: OutputFormat::Json,
        }
    }
}

/// Every key accepted by [`RunConfig::set`].
pub const KEYS: &[&str] = &[
    "abreu_tol",
    "flat_noise_tol",
    "step_fraction",
    "min_step",
    "flat_min_step",
    "grid_per_dim",
    "boundary_slope_tol",
    "boundary_ratio_tol",
    "boundary_grad_tol",
    "boundary_levels",
    "positivity_points",
    "det_points",
    "det_variation_tol",
    "hessian_points",
    "hessian_tol",
    "seed",
    "timing",
    "ray_points",
    "ray_lo",
    "ray_hi",
    "lambda",
    "fit_exponent_tol",
    "fit_coefficient_tol",
    "lift_bound",
    "max_depth",
    "unit_canonicalization",
    "memoize",
    "node_budget",
    "format",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse `{value}` for `{key}` as a boolean"))),
    }
}

impl RunConfig {
    /// Sets one key. Unknown keys are an error so that typos surface.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = &mut self.verify;
        match key {
            "abreu_tol" => v.abreu_tol = parse(key, value)?,
            "flat_noise_tol" => v.flat_noise_tol = parse(key, value)?,
            "step_fraction" => v.step_fraction = parse(key, value)?,
            "min_step" => v.min_step = parse(key, value)?,
            "flat_min_step" => v.flat_min_step = parse(key, value)?,
            "grid_per_dim" => v.grid_per_dim = parse(key, value)?,
            "boundary_slope_tol" => v.boundary_slope_tol = parse(key, value)?,
            "boundary_ratio_tol" => v.boundary_ratio_tol = parse(key, value)?,
            "boundary_grad_tol" => v.boundary_grad_tol = parse(key, value)?,
            "boundary_levels" => v.boundary_levels = parse(key, value)?,
            "positivity_points" => v.positivity_points = parse(key, value)?,
            "det_points" => v.det_points = parse(key, value)?,
            "det_variation_tol" => v.det_variation_tol = parse(key, value)?,
            "hessian_points" => v.hessian_points = parse(key, value)?,
            "hessian_tol" => v.hessian_tol = parse(key, value)?,
            "seed" => v.seed = parse(key, value)?,
            "timing" => v.timing = parse_bool(key, value)?,
            "ray_points" => self.ray.points = parse(key, value)?,
            "ray_lo" => self.ray.lo = parse(key, value)?,
            "ray_hi" => self.ray.hi = parse(key, value)?,
            "lambda" => self.ray.lambda = parse(key, value)?,
            "fit_exponent_tol" => self.fit_exponent_tol = parse(key, value)?,
            "fit_coefficient_tol" => self.fit_coefficient_tol = parse(key, value)?,
            "lift_bound" => self.classifier.lift_bound = parse(key, value)?,
            "max_depth" => self.classifier.max_depth = parse(key, value)?,
            "unit_canonicalization" => self.classifier.unit_canonicalization = parse_bool(key, value)?,
            "memoize" => self.classifier.memoize = parse_bool(key, value)?,
            "node_budget" => self.classifier.node_budget = parse(key, value)?,
            "format" => self.format = value.parse()?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment, blank lines are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Applies `TORIC_ALE_<KEY>` overrides from an environment lookup.
    pub fn apply_env_with(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        for key in KEYS {
            if let Some(v) = lookup(&format!("{ENV_PREFIX}{}", key.to_ascii_uppercase())) {
                self.set(key, &v)?;
            }
        }
        Ok(())
    }

    pub fn apply_env(&mut self) -> Result<()> {
        self.apply_env_with(|k| std::env::var(k).ok())
    }

    /// Defaults, then the optional file, then the environment; validated.
    pub fn load(file: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(p) = file {
            cfg.apply_file(p)?;
        }
        cfg.apply_env()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let v = &self.verify;
        let tolerances = [
            ("abreu_tol", v.abreu_tol),
            ("flat_noise_tol", v.flat_noise_tol),
            ("step_fraction", v.step_fraction),
            ("min_step", v.min_step),
            ("flat_min_step", v.flat_min_step),
            ("boundary_slope_tol", v.boundary_slope_tol),
            ("boundary_ratio_tol", v.boundary_ratio_tol),
            ("boundary_grad_tol", v.boundary_grad_tol),
            ("det_variation_tol", v.det_variation_tol),
            ("hessian_tol", v.hessian_tol),
            ("fit_exponent_tol", self.fit_exponent_tol),
            ("fit_coefficient_tol", self.fit_coefficient_tol),
            ("ray_lo", self.ray.lo),
            ("lambda", self.ray.lambda),
        ];
        for (name, value) in tolerances {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("`{name}` must be positive, got {value}")));
            }
        }
        let counts = [
            ("grid_per_dim", v.grid_per_dim),
            ("boundary_levels", v.boundary_levels),
            ("positivity_points", v.positivity_points),
            ("det_points", v.det_points),
            ("hessian_points", v.hessian_points),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::Config(format!("`{name}` must be at least 1")));
            }
        }
        if self.ray.points < 5 {
            return Err(Error::Config("`ray_points` must be at least 5 for the decay fit".into()));
        }
        if self.ray.hi <= self.ray.lo {
            return Err(Error::Config("`ray_hi` must exceed `ray_lo`".into()));
        }
        Ok(())
    }
}
