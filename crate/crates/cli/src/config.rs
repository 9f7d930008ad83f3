use std::path::Path;

use anyhow::{Context, Result};
use curvflow::NumericPolicy;
use serde::Deserialize;

/// Values a JSON config file may supply; command-line flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub policy: Option<NumericPolicy>,
    pub step: Option<f64>,
    pub t_end: Option<f64>,
    pub method: Option<String>,
    pub tolerance: Option<f64>,
    pub sample_every: Option<usize>,
    pub blowup_norm: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(p) = &cfg.policy {
            p.validate()?;
        }
        Ok(cfg)
    }

    pub fn policy(&self) -> NumericPolicy {
        self.policy.clone().unwrap_or_default()
    }
}

pub const DEFAULT_SEED: u64 = 20240601;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"sead": 1}"#).is_err());
        let cfg: FileConfig = serde_json::from_str(r#"{"seed": 7, "policy": {"rank_tol": 1e-8}}"#).unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.policy().rank_tol, 1e-8);
        assert_eq!(cfg.policy().bianchi_tol, NumericPolicy::default().bianchi_tol);
    }
}
