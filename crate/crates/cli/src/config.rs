//! Flat key-value experiment configuration.
//!
//! The on-disk format is plain text, one `dotted.key = value` per line,
//! `#` comments, decimal numbers. It is diffable and hashes stably:
//! the config hash covers the canonicalized (sorted) key-value map
//! after command-line overrides are applied, so identical effective
//! configs share a hash byte-for-byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use reslab::landscape::{check_output_dim, CertificationConfig};
use reslab::loss::LossKind;
use reslab::model::{Activation, StackConfig};

/// Where the data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    /// Inputs N(x_mean, 1), targets N(0, 1).
    Gaussian { x_mean: f64 },
    /// Targets from a planted model of the experiment architecture,
    /// plus Gaussian noise of this scale.
    Teacher { noise_std: f64 },
    /// Numeric CSV files for X and Y.
    Csv { x_path: PathBuf, y_path: PathBuf, header: bool, bias: bool },
}

/// Everything an experiment run depends on. A pure function of the
/// config text plus command-line overrides.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dataset: DatasetSpec,
    pub m: usize,
    pub d_x: usize,
    pub d_y: usize,
    pub stack: StackConfig,
    pub loss: LossKind,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub cert: CertificationConfig<f64>,
    pub solver_tol: f64,
    /// Margin for the dead-unit construction.
    pub counterexample_margin: f64,
    pub out_dir: Option<PathBuf>,
    /// Swept keys (suffix after `sweep.`) with their value lists, in
    /// file order of first appearance.
    pub sweep: Vec<(String, Vec<String>)>,
    hash: String,
}

impl ExperimentConfig {
    /// Stable hex hash of the effective key-value map.
    pub fn hash(&self) -> &str {
        &self.hash
    }
}

/// Parses the flat format into a key-value map. Later lines win.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected `key = value`, got {raw:?}", idx + 1))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            bail!("config line {}: empty key", idx + 1);
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}

/// FNV-1a over the sorted `key=value` pairs; 16 hex digits.
pub fn hash_map(map: &BTreeMap<String, String>) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for (k, v) in map {
        eat(k.as_bytes());
        eat(b"=");
        eat(v.as_bytes());
        eat(b"\n");
    }
    let mut out = String::new();
    let _ = write!(out, "{h:016x}");
    out
}

struct Fields<'a> {
    map: &'a BTreeMap<String, String>,
    used: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn new(map: &'a BTreeMap<String, String>) -> Self {
        Self { map, used: Vec::new() }
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        if let Some((k, v)) = self.map.get_key_value(key) {
            self.used.push(k.as_str());
            Some(v.as_str())
        } else {
            None
        }
    }

    fn require(&mut self, key: &str) -> Result<&'a str> {
        self.raw(key).ok_or_else(|| anyhow!("missing required config key `{key}`"))
    }

    fn parse_as<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<T>()
                .map_err(|e| anyhow!("config key `{key}`: cannot parse {v:?}: {e}")),
        }
    }

    fn require_as<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.require(key)?;
        v.parse::<T>().map_err(|e| anyhow!("config key `{key}`: cannot parse {v:?}: {e}"))
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => bail!("config key `{key}`: expected true or false, got {v:?}"),
        }
    }

    /// Comma-separated f64 list.
    fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|p| {
                    let p = p.trim();
                    p.parse::<f64>()
                        .map_err(|e| anyhow!("config key `{key}`: cannot parse {p:?}: {e}"))
                })
                .collect(),
        }
    }
}

/// Builds the typed config from a parsed map, enforcing the output-
/// dimension gate and rejecting unknown keys.
pub fn config_from_map(map: &BTreeMap<String, String>) -> Result<ExperimentConfig> {
    let mut f = Fields::new(map);

    let seed: u64 = f
        .require_as("seed")
        .context("a seed is mandatory; runs never draw entropy from the clock")?;

    let m: usize = f.require_as("dataset.m")?;
    let d_x: usize = f.require_as("dataset.d_x")?;
    let d_y: usize = f.require_as("dataset.d_y")?;
    let kind = f.parse_as::<String>("dataset.kind", "gaussian".into())?;
    let dataset = match kind.as_str() {
        "gaussian" => DatasetSpec::Gaussian { x_mean: f.parse_as("dataset.x_mean", 0.0)? },
        "teacher" => DatasetSpec::Teacher { noise_std: f.parse_as("dataset.noise_std", 0.0)? },
        "csv" => DatasetSpec::Csv {
            x_path: PathBuf::from(f.require("dataset.x_path")?),
            y_path: PathBuf::from(f.require("dataset.y_path")?),
            header: f.bool("dataset.header", false)?,
            bias: f.bool("dataset.bias", false)?,
        },
        other => bail!("config key `dataset.kind`: unknown kind {other:?}"),
    };

    let depth: usize = f.parse_as("model.depth", 1)?;
    let width: usize = f.parse_as("model.width", d_x)?;
    let activation = Activation::parse(&f.parse_as::<String>("model.activation", "relu".into())?)?;
    let skip = f.bool("model.skip", true)?;
    let bias_unit = f.bool("model.bias_unit", false)?;
    let stack = if depth == 0 {
        let d_z: usize = f.parse_as("model.d_z", d_x)?;
        StackConfig::zero_stack(d_z)?
    } else {
        f.raw("model.d_z"); // width determines d_z; tolerate the key
        StackConfig::uniform(depth, width, activation, skip, bias_unit)?
    };

    let loss = LossKind::parse(&f.parse_as::<String>("loss.kind", "squared".into())?)?;
    if matches!(dataset, DatasetSpec::Teacher { .. }) && loss != LossKind::Squared {
        bail!(
            "teacher datasets produce continuous targets, which only the squared loss accepts; \
             got loss.kind = {loss:?}"
        );
    }

    let grad_tol: f64 = f.parse_as("train.grad_tol", 1e-8)?;
    let max_iter: usize = f.parse_as("train.max_iter", 200_000)?;
    let restarts: usize = f.parse_as("train.restarts", 1)?;

    let cert = CertificationConfig {
        n_directions: f.parse_as("certify.directions", 64)?,
        radii: f.f64_list("certify.radii", &[1e-2, 1e-3, 1e-4])?,
        hessian_check: f.bool("certify.hessian", false)?,
        hessian_dim_cap: f.parse_as("certify.hessian_dim_cap", 2000)?,
    };
    cert.validate().map_err(|e| anyhow!("{e}"))?;

    let solver_tol: f64 = f.parse_as("oracle.solver_tol", 1e-8)?;
    let counterexample_margin: f64 = f.parse_as("counterexample.margin", 0.5)?;
    let out_dir = f.raw("out.dir").map(PathBuf::from);

    // Swept keys keep file order irrelevant; sort for determinism.
    let mut sweep: Vec<(String, Vec<String>)> = Vec::new();
    for (k, v) in map {
        if let Some(suffix) = k.strip_prefix("sweep.") {
            let values: Vec<String> =
                v.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
            if values.is_empty() {
                bail!("config key `{k}`: empty sweep list");
            }
            sweep.push((suffix.to_string(), values));
        }
    }

    // Reject unknown keys: silent typos would otherwise change nothing.
    let used: std::collections::BTreeSet<&str> = f.used.iter().copied().collect();
    for k in map.keys() {
        if !used.contains(k.as_str()) && !k.starts_with("sweep.") {
            bail!("unknown config key `{k}`");
        }
    }

    if grad_tol <= 0.0 || !grad_tol.is_finite() {
        bail!("config key `train.grad_tol`: must be positive and finite");
    }
    if solver_tol <= 0.0 || !solver_tol.is_finite() {
        bail!("config key `oracle.solver_tol`: must be positive and finite");
    }
    if restarts == 0 {
        bail!("config key `train.restarts`: at least one restart is required");
    }
    if m == 0 || d_x == 0 || d_y == 0 {
        bail!("dataset dimensions must be positive");
    }
    check_output_dim(d_x, d_y, stack.d_z()).map_err(|e| anyhow!("{e}"))?;

    Ok(ExperimentConfig {
        seed,
        dataset,
        m,
        d_x,
        d_y,
        stack,
        loss,
        grad_tol,
        max_iter,
        restarts,
        cert,
        solver_tol,
        counterexample_margin,
        out_dir,
        sweep,
        hash: hash_map(map),
    })
}

/// Command-line overrides merged into the map before building the
/// config, so they participate in the hash.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub restarts: Option<usize>,
    pub grad_tol: Option<f64>,
}

/// Parses the text and folds the overrides in, so downstream hashing
/// sees the effective configuration.
pub fn effective_map(text: &str, over: &Overrides) -> Result<BTreeMap<String, String>> {
    let mut map = parse_flat(text)?;
    if let Some(seed) = over.seed {
        map.insert("seed".into(), seed.to_string());
    }
    if let Some(dir) = &over.out_dir {
        map.insert("out.dir".into(), dir.display().to_string());
    }
    if let Some(restarts) = over.restarts {
        map.insert("train.restarts".into(), restarts.to_string());
    }
    if let Some(tol) = over.grad_tol {
        map.insert("train.grad_tol".into(), format!("{tol:e}"));
    }
    Ok(map)
}

pub fn load_config(text: &str, over: &Overrides) -> Result<ExperimentConfig> {
    config_from_map(&effective_map(text, over)?)
}
