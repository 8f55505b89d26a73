//! Run configuration: `key = value` file, command-line overrides, and the
//! `resolved.config` provenance record.

use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Default,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub refinement: usize,
    pub dt: f64,
    pub t_end: f64,
    pub theta: f64,
    pub lambda: f64,
    pub betas: String,
    pub seed: u64,
    pub initial: String,
    pub out: PathBuf,
    /// Keys that were not set by the file or the command line.
    pub defaulted: Vec<&'static str>,
}

pub const KEYS: [&str; 10] = [
    "geometry",
    "refinement",
    "dt",
    "t_end",
    "theta",
    "lambda",
    "betas",
    "seed",
    "initial",
    "out",
];

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: Geometry::Default,
            refinement: 2,
            dt: 0.01,
            t_end: 50.0,
            theta: 1.0,
            lambda: 1.0,
            betas: "default".into(),
            seed: 1,
            initial: "random".into(),
            out: PathBuf::from("hww-out"),
            defaulted: KEYS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("invalid value `{value}` for `{key}`")))
}

impl RunConfig {
    /// Sets one key. Values are checked for syntax here and for range by
    /// the library when used.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let slot = KEYS
            .iter()
            .copied()
            .find(|k| *k == key)
            .ok_or_else(|| ConfigError(format!("unknown config key `{key}`")))?;
        match slot {
            "geometry" => {
                self.geometry = if value == "default" {
                    Geometry::Default
                } else {
                    Geometry::File(PathBuf::from(value))
                }
            }
            "refinement" => self.refinement = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "t_end" => self.t_end = parse(key, value)?,
            "theta" => self.theta = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "betas" => self.betas = value.to_string(),
            "seed" => self.seed = parse(key, value)?,
            "initial" => {
                if value != "random" && value != "zero" {
                    return Err(ConfigError(format!(
                        "invalid value `{value}` for `initial` (expected random or zero)"
                    )));
                }
                self.initial = value.to_string();
            }
            "out" => self.out = PathBuf::from(value),
            _ => unreachable!("key list and match arms agree"),
        }
        self.defaulted.retain(|k| *k != slot);
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are ignored.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("config line {}: expected `key = value`", i + 1))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| ConfigError(format!("config line {}: {}", i + 1, e.0)))?;
        }
        Ok(())
    }

    pub fn value_of(&self, key: &str) -> String {
        match key {
            "geometry" => match &self.geometry {
                Geometry::Default => "default".into(),
                Geometry::File(p) => p.display().to_string(),
            },
            "refinement" => self.refinement.to_string(),
            "dt" => self.dt.to_string(),
            "t_end" => self.t_end.to_string(),
            "theta" => self.theta.to_string(),
            "lambda" => self.lambda.to_string(),
            "betas" => self.betas.clone(),
            "seed" => self.seed.to_string(),
            "initial" => self.initial.clone(),
            "out" => self.out.display().to_string(),
            _ => String::new(),
        }
    }

    /// Every key with its effective value; defaulted keys are marked.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let mark = if self.defaulted.contains(&key) {
                "  # default"
            } else {
                ""
            };
            let _ = writeln!(out, "{key} = {}{mark}", self.value_of(key));
        }
        out
    }
}
