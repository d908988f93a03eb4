//! Resolved run configuration.
//!
//! Every knob has a fixed default; a flat `key=value` config file can
//! override defaults, and command-line flags override the file. The resolved
//! configuration is serialized into every output manifest so a run can be
//! reproduced from its artifacts alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const SEED_ENV_VAR: &str = "MAINSTREAMLAB_SEED";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub min_country_users: usize,
    pub min_country_users_recsys: usize,
    pub epsilon: f64,
    pub leave_one_out: bool,
    /// Stage-dependent default when absent: apc for popularity and
    /// outliers, alc for clustering, no filter for recsys-eval.
    pub basis: Option<String>,
    pub scope: Option<String>,
    pub method: Option<String>,
    pub country: Option<String>,
    pub user_set: Option<String>,
    pub window: usize,
    pub pos_thresh: f64,
    pub neg_thresh: f64,
    pub horizon: usize,
    pub exclude_self: bool,
    pub top_n: Option<usize>,
    pub damping: f64,
    pub max_iter: usize,
    pub convergence_window: usize,
    pub preference: Option<f64>,
    pub top_k_features: usize,
    pub k: usize,
    pub lr: f64,
    pub reg: f64,
    pub epochs: usize,
    pub folds: usize,
    pub train_frac: f64,
    pub raw_ratings: bool,
    pub drop_cold: bool,
    pub validate: bool,
    pub subsample_size: usize,
    pub subsamples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            min_country_users: 100,
            min_country_users_recsys: 1000,
            epsilon: 1e-8,
            leave_one_out: false,
            basis: None,
            scope: None,
            method: None,
            country: None,
            user_set: None,
            window: 5,
            pos_thresh: 100.0,
            neg_thresh: -50.0,
            horizon: 10_000,
            exclude_self: false,
            top_n: None,
            damping: 0.5,
            max_iter: 200,
            convergence_window: 15,
            preference: None,
            top_k_features: 10_000,
            k: 32,
            lr: 0.01,
            reg: 0.05,
            epochs: 20,
            folds: 3,
            train_frac: 0.8,
            raw_ratings: false,
            drop_cold: false,
            validate: false,
            subsample_size: 500,
            subsamples: 5,
        }
    }
}

/// Flat `key=value` file, `#` comments, keys named like the long flags.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!(
                "config file {} line {}: expected key=value, got {:?}",
                path.display(),
                idx + 1,
                line
            );
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    /// Applies config-file entries on top of defaults. Flags are applied by
    /// the command layer afterwards.
    pub fn apply_file(&mut self, entries: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in entries {
            self.apply_entry(key, value)
                .with_context(|| format!("config key {key:?}"))?;
        }
        Ok(())
    }

    fn apply_entry(&mut self, key: &str, value: &str) -> Result<()> {
        macro_rules! parse {
            () => {
                value
                    .parse()
                    .with_context(|| format!("bad value {value:?}"))?
            };
        }
        match key {
            "seed" => self.seed = parse!(),
            "min-country-users" => self.min_country_users = parse!(),
            "min-country-users-recsys" => self.min_country_users_recsys = parse!(),
            "epsilon" => self.epsilon = parse!(),
            "leave-one-out" => self.leave_one_out = parse!(),
            "basis" => self.basis = Some(value.to_string()),
            "scope" => self.scope = Some(value.to_string()),
            "method" => self.method = Some(value.to_string()),
            "country" => self.country = Some(value.to_string()),
            "user-set" => self.user_set = Some(value.to_string()),
            "window" => self.window = parse!(),
            "pos-thresh" => self.pos_thresh = parse!(),
            "neg-thresh" => self.neg_thresh = parse!(),
            "horizon" => self.horizon = parse!(),
            "exclude-self" => self.exclude_self = parse!(),
            "top-n" => self.top_n = Some(parse!()),
            "damping" => self.damping = parse!(),
            "max-iter" => self.max_iter = parse!(),
            "convergence-window" => self.convergence_window = parse!(),
            "preference" => self.preference = Some(parse!()),
            "top-k-features" => self.top_k_features = parse!(),
            "k" => self.k = parse!(),
            "lr" => self.lr = parse!(),
            "reg" => self.reg = parse!(),
            "epochs" => self.epochs = parse!(),
            "folds" => self.folds = parse!(),
            "train-frac" => self.train_frac = parse!(),
            "raw-ratings" => self.raw_ratings = parse!(),
            "drop-cold" => self.drop_cold = parse!(),
            "validate" => self.validate = parse!(),
            "subsample-size" => self.subsample_size = parse!(),
            "subsamples" => self.subsamples = parse!(),
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    /// Seed fallback: explicit flag beats the config file, which beats the
    /// `MAINSTREAMLAB_SEED` environment variable, which beats the default.
    pub fn seed_from_env(&mut self) {
        if let Ok(value) = std::env::var(SEED_ENV_VAR) {
            if let Ok(seed) = value.trim().parse::<u64>() {
                self.seed = seed;
            }
        }
    }
}
