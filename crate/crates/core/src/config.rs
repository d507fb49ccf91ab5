//! Named constants and experiment configuration.
//!
//! The algorithmic thresholds hide several constants behind asymptotic
//! notation; every one of them is surfaced here with a recorded default so
//! that audits can assert the exact floors the implementation uses.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tunable constants, all dimensionless multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    /// Sample-count multiplier for per-component IID generation
    /// (`l' = ceil(c_samp * |S| * ln(n) / eps^2)`).
    pub c_samp: f64,
    /// Trajectory-length multiplier (`m = ceil(c_len * n * ln^2(n) / eps^4)`).
    pub c_len: f64,
    /// IID tester sample-requirement multiplier.
    pub c_test: f64,
    /// Embedding repetition multiplier (`L = ceil(c_emb * ln(n))` per scale).
    pub c_emb: f64,
    /// Allowance for the rounding step's approximation ratio versus the exact
    /// sparsest cut (`g(found) <= c_fc * ln(n) * g(opt)`).
    pub c_fc: f64,
    /// Allowance for the sample-demand audit (`N_S <= c_n * |S| * ln^2(n) / eps^2`).
    pub c_n: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_samp: 4.0,
            c_len: 8.0,
            c_test: 4.0,
            c_emb: 4.0,
            c_fc: 20.0,
            c_n: 32.0,
        }
    }
}

/// Natural log of `n`, floored at 1 so threshold denominators never blow up
/// at tiny state counts.
pub fn ln_floored(n: usize) -> f64 {
    (n.max(1) as f64).ln().max(1.0)
}

/// Configuration for the experiment harness (`mcidtest bench`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub eps: f64,
    pub beta_override: Option<f64>,
    pub trials: usize,
    pub constants: Constants,
    pub trajectory_cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 0x6d63_6964,
            eps: 0.3,
            beta_override: None,
            trials: 100,
            constants: Constants::default(),
            trajectory_cap: 10_000_000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0,1), got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_recorded_values() {
        let c = Constants::default();
        assert_eq!(c.c_samp, 4.0);
        assert_eq!(c.c_len, 8.0);
        assert_eq!(c.c_test, 4.0);
        assert_eq!(c.c_emb, 4.0);
        assert_eq!(c.c_fc, 20.0);
        assert_eq!(c.c_n, 32.0);
    }

    #[test]
    fn ln_floor() {
        assert_eq!(ln_floored(1), 1.0);
        assert_eq!(ln_floored(2), 1.0);
        assert!((ln_floored(16) - (16f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        cfg.eps = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_roundtrips_through_json() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
