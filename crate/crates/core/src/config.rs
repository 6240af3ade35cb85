//! Run settings with file overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::force_recon::PidGains;
use crate::observer::{QFilterParams, ResetMode};
use crate::predict::{PipelineConfig, Regressor};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig<T> {
    pub q: QFilterParams<T>,
    pub gains: PidGains<T>,
    /// [Hz]
    pub plan_rate: T,
    pub phases: usize,
    pub mu: T,
    pub seed: u64,
    pub window: usize,
    /// [s]
    pub settle_time: T,
    /// [s]
    pub taper_time: T,
    pub reset_mode: ResetMode,
    pub regressor: Regressor,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            q: p.q,
            gains: PidGains::default(),
            plan_rate: p.plan_rate,
            phases: p.phases,
            mu: p.mu,
            seed: 0,
            window: p.window,
            settle_time: p.settle_time,
            taper_time: p.taper_time,
            reset_mode: p.reset_mode,
            regressor: p.regressor,
        }
    }
}

impl<T: Real + for<'de> Deserialize<'de>> RunConfig<T> {
    /// JSON file; absent keys keep their defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl<T: Real> RunConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.q.validate()?;
        self.gains.validate()?;
        if !(self.plan_rate > T::zero()) {
            return Err(Error::Argument(format!(
                "plan rate must be > 0, got {}",
                self.plan_rate
            )));
        }
        if self.phases < 2 {
            return Err(Error::Argument(format!(
                "phase count must be >= 2, got {}",
                self.phases
            )));
        }
        if !(self.mu >= T::zero()) {
            return Err(Error::Argument(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.settle_time >= T::zero() && self.taper_time >= T::zero()) {
            return Err(Error::Argument("settle and taper times must be >= 0".into()));
        }
        if self.window < 2 {
            return Err(Error::Argument(format!("window must be >= 2, got {}", self.window)));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig<T> {
        PipelineConfig {
            q: self.q,
            plan_rate: self.plan_rate,
            phases: self.phases,
            mu: self.mu,
            window: self.window,
            settle_time: self.settle_time,
            taper_time: self.taper_time,
            reset_mode: self.reset_mode,
            regressor: self.regressor,
        }
    }
}
