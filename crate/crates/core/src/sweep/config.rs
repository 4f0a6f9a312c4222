//! Flat `key=value` configuration.
//!
//! One pair per line, `#` starts a comment, lists are comma separated.
//! Settings from a file can be overlaid with command-line values before they
//! are turned into a [`SweepConfig`] or a [`SimParams`]; later values win.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use super::SweepConfig;
use crate::error::{Error, Result};
use crate::model::{InitMode, MimicMode, Policy, SimParams};

/// Where a setting came from, for error messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

impl Origin {
    fn error(self, key: &str, reason: impl std::fmt::Display) -> Error {
        match self {
            Origin::Line(line) => Error::Config {
                line,
                reason: format!("{key}: {reason}"),
            },
            Origin::Flag => Error::Argument(format!("--{}: {reason}", key.replace('_', "-"))),
        }
    }
}

const COMMON_KEYS: &[&str] = &[
    "policy",
    "k",
    "mu",
    "generations",
    "grid_width",
    "grid_height",
    "population_size",
    "games_per_focal",
    "fitness_shift",
    "mimic_mode",
    "init",
];
const SWEEP_KEYS: &[&str] = &[
    "r_values",
    "rho_values",
    "replicates",
    "master_seed",
    "parallelism",
    "threshold",
    "tail_fraction",
    "run_csv_dir",
];
const RUN_KEYS: &[&str] = &["r", "rho_a", "seed"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    entries: BTreeMap<String, (String, Origin)>,
}

fn normalize_key(key: &str) -> String {
    let key = key.trim().to_ascii_lowercase().replace('-', "_");
    match key.as_str() {
        "rho" => "rho_a".to_string(),
        _ => key,
    }
}

impl Settings {
    /// Splits `text` into settings. Only syntax is checked here; key and
    /// value checks happen when the settings are resolved.
    pub fn parse(text: &str) -> Result<Settings> {
        let mut settings = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                reason: format!("expected key=value, got `{content}`"),
            })?;
            if key.trim().is_empty() {
                return Err(Error::Config {
                    line,
                    reason: "missing key before `=`".into(),
                });
            }
            settings.entries.insert(
                normalize_key(key),
                (value.trim().to_string(), Origin::Line(line)),
            );
        }
        Ok(settings)
    }

    /// Sets a value supplied on the command line, replacing any file value.
    pub fn set_flag(&mut self, key: &str, value: impl Into<String>) {
        self.entries
            .insert(normalize_key(key), (value.into(), Origin::Flag));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(&normalize_key(key))
    }

    fn check_keys(&self, allowed: &[&[&str]]) -> Result<()> {
        for (key, (_, origin)) in &self.entries {
            if !allowed.iter().any(|set| set.contains(&key.as_str())) {
                return Err(origin.error(key, "unknown key"));
            }
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((value, origin)) => value
                .parse::<T>()
                .map(Some)
                .map_err(|e| origin.error(key, format!("cannot parse `{value}`: {e}"))),
        }
    }

    fn get_real(
        &self,
        key: &str,
        check: impl Fn(f64) -> bool,
        expect: &str,
    ) -> Result<Option<f64>> {
        let value: Option<f64> = self.get(key)?;
        if let Some(v) = value {
            if !check(v) {
                return Err(self.origin(key).error(key, format!("{v} {expect}")));
            }
        }
        Ok(value)
    }

    fn get_list(
        &self,
        key: &str,
        check: impl Fn(f64) -> bool,
        expect: &str,
    ) -> Result<Option<Vec<f64>>> {
        let Some((value, origin)) = self.entries.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for item in value.split(',').map(str::trim) {
            let v: f64 = item
                .parse()
                .map_err(|e| origin.error(key, format!("cannot parse `{item}`: {e}")))?;
            if !check(v) {
                return Err(origin.error(key, format!("{v} {expect}")));
            }
            out.push(v);
        }
        if !out.windows(2).all(|w| w[0] < w[1]) {
            return Err(origin.error(key, "values must be strictly ascending"));
        }
        Ok(Some(out))
    }

    fn origin(&self, key: &str) -> Origin {
        self.entries
            .get(key)
            .map(|(_, o)| *o)
            .unwrap_or(Origin::Flag)
    }

    fn positive(&self, key: &str) -> Result<Option<usize>> {
        let value: Option<usize> = self.get(key)?;
        if value == Some(0) {
            return Err(self.origin(key).error(key, "must be at least 1"));
        }
        Ok(value)
    }

    /// Shared run parameters, defaults filled from the reference setup.
    fn base_params(&self) -> Result<SimParams> {
        let mut p = SimParams::default();
        if let Some(policy) = self.get::<Policy>("policy")? {
            p.policy = policy;
        }
        if let Some(k) = self.positive("k")? {
            p = p.with_k(k);
        }
        if let Some(mu) = self.get_real("mu", |v| (0.0..=1.0).contains(&v), "out of [0,1]")? {
            p.mu = mu;
        }
        if let Some(g) = self.get("generations")? {
            p.generations = g;
        }
        let width = self.positive("grid_width")?.unwrap_or(p.grid_width);
        let height = self.positive("grid_height")?.unwrap_or(p.grid_height);
        p = p.with_grid(width, height);
        if let Some(n) = self.positive("population_size")? {
            if n != width * height {
                return Err(self.origin("population_size").error(
                    "population_size",
                    format!("{n} does not equal grid_width x grid_height = {width} x {height}"),
                ));
            }
        }
        if let Some(games) = self.positive("games_per_focal")? {
            p.games_per_focal = games;
        }
        p.fitness_shift = self.get_real(
            "fitness_shift",
            |v| v.is_finite() && v >= 0.0,
            "must be non-negative",
        )?;
        if let Some(mode) = self.get::<MimicMode>("mimic_mode")? {
            p.mimic_mode = mode;
        }
        if let Some(init) = self.get::<InitMode>("init")? {
            p.init = init;
        }
        Ok(p)
    }

    pub fn into_sweep_config(self) -> Result<SweepConfig> {
        self.check_keys(&[COMMON_KEYS, SWEEP_KEYS])?;
        let base = self.base_params()?;
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let r_values = self.get_list("r_values", positive, "must be positive")?;
        let rho_values = self.get_list("rho_values", unit, "out of [0,1]")?;
        let replicates = self.positive("replicates")?.unwrap_or(100);
        let master_seed = self.get("master_seed")?.unwrap_or(0);
        let parallelism = self.positive("parallelism")?.unwrap_or(1);
        let threshold = self.get_real("threshold", unit, "out of [0,1]")?;
        let tail_fraction =
            self.get_real("tail_fraction", |v| v > 0.0 && v <= 1.0, "out of (0,1]")?;
        let run_csv_dir = self.get::<PathBuf>("run_csv_dir")?;

        let r_values = r_values.ok_or_else(|| Error::invalid("r_values", "required"))?;
        let rho_values = rho_values.ok_or_else(|| Error::invalid("rho_values", "required"))?;
        let mut config = SweepConfig::new(base.clone(), base.policy, r_values, rho_values);
        config.replicates = replicates;
        config.master_seed = master_seed;
        config.parallelism = parallelism;
        if let Some(t) = threshold {
            config.threshold = t;
        }
        if let Some(t) = tail_fraction {
            config.tail_fraction = t;
        }
        config.run_csv_dir = run_csv_dir;
        Ok(config)
    }

    pub fn into_sim_params(self) -> Result<SimParams> {
        self.check_keys(&[COMMON_KEYS, RUN_KEYS])?;
        let mut p = self.base_params()?;
        if let Some(r) = self.get_real("r", |v| v.is_finite() && v > 0.0, "must be positive")? {
            p.r = r;
        }
        if let Some(rho) = self.get_real("rho_a", |v| (0.0..=1.0).contains(&v), "out of [0,1]")? {
            p.rho_a = rho;
        }
        if let Some(seed) = self.get("seed")? {
            p.seed = seed;
        }
        Ok(p)
    }
}

/// Parses a sweep configuration; omitted keys take the reference defaults
/// (`k=4`, `mu=0.01`, 10000 generations, a 32x32 grid, `k+1` games per focal player).
pub fn parse_config(text: &str) -> Result<SweepConfig> {
    Settings::parse(text)?.into_sweep_config()
}
