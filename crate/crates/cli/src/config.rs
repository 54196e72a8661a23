use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// Optional TOML configuration. Command-line flags take precedence over
/// every value read from here.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub paths: Paths,
    pub seed: u64,
    pub order: usize,
    pub k: usize,
    pub p: f64,
    pub cell_size: f64,
    pub interaction_range: f64,
    pub budget: usize,
    pub max_len: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub scenes: PathBuf,
    pub datasets: PathBuf,
    pub models: PathBuf,
    pub reports: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            scenes: "scenes".into(),
            datasets: "data".into(),
            models: "models".into(),
            reports: "reports".into(),
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        let world = grounded_planner::world::WorldConfig::default();
        Config {
            paths: Paths::default(),
            seed: 0,
            order: grounded_planner::lm::ModelConfig::default().order,
            k: 10,
            p: 0.9,
            cell_size: world.cell_size,
            interaction_range: world.interaction_range,
            budget: grounded_planner::planner::DEFAULT_BUDGET,
            max_len: grounded_planner::lm::DEFAULT_MAX_LEN,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Config::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("order", self.order as f64),
            ("k", self.k as f64),
            ("p", self.p),
            ("cell_size", self.cell_size),
            ("interaction_range", self.interaction_range),
            ("budget", self.budget as f64),
            ("max_len", self.max_len as f64),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                bail!("config value `{name}` must be positive");
            }
        }
        if self.p > 1.0 {
            bail!("config value `p` must not exceed 1");
        }
        Ok(())
    }

    pub fn world(&self) -> grounded_planner::world::WorldConfig {
        grounded_planner::world::WorldConfig {
            cell_size: self.cell_size,
            interaction_range: self.interaction_range,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: Config = toml::from_str("seed = 7\n[paths]\nmodels = \"m\"\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.paths.models, PathBuf::from("m"));
        assert_eq!(c.paths.reports, PathBuf::from("reports"));
        assert_eq!(c.k, 10);
    }

    #[test]
    fn rejects_non_positive_values() {
        let c: Config = toml::from_str("p = 0.0").unwrap();
        assert!(c.validate().is_err());
        assert!(toml::from_str::<Config>("colour = 1").is_err());
    }
}
