//! Design documents for simulation runs and the clock that drives them.

use serde::{Deserialize, Serialize};

use super::{ScenarioSpec, SimError};
use crate::bayes::{IMomHyperparams, McmcConfig};
use crate::decision::{DesignConfig, TrialSettings};
use crate::dose::TradeOff;
use crate::{dose::calibrate_eta, CalibrationSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ArrivalProcess {
    #[default]
    Poisson,
    /// Evenly spaced arrivals, one every `1 / rate` days.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TimeModel {
    pub accrual_rate_per_day: f64,
    pub follow_up_days: f64,
    #[serde(default)]
    pub arrival_process: ArrivalProcess,
}

impl Default for TimeModel {
    fn default() -> Self {
        Self {
            accrual_rate_per_day: 0.1,
            follow_up_days: 28.0,
            arrival_process: ArrivalProcess::Poisson,
        }
    }
}

impl TimeModel {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("accrualRatePerDay", self.accrual_rate_per_day),
            ("followUpDays", self.follow_up_days),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum McmcProfile {
    /// 4,000 iterations, 2,000 burn-in.
    #[default]
    Fast,
    /// 10,000 iterations, 5,000 burn-in.
    Paper,
}

impl McmcProfile {
    pub fn config(self, seed: u64) -> McmcConfig {
        match self {
            McmcProfile::Fast => McmcConfig::fast(seed),
            McmcProfile::Paper => McmcConfig::paper(seed),
        }
    }
}

/// A design document: escalation constants, the utility trade-off, prior and
/// sampler settings, and the accrual clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    #[serde(flatten)]
    pub design: DesignConfig,
    pub calibration: TradeOff<f64>,
    #[serde(default)]
    pub imom: IMomHyperparams,
    #[serde(default)]
    pub mcmc: McmcProfile,
    #[serde(default)]
    pub time: TimeModel,
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self {
            design: DesignConfig::default(),
            calibration: TradeOff {
                q1: 0.45,
                q2: 0.85,
                u: 0.3,
            },
            imom: IMomHyperparams::default(),
            mcmc: McmcProfile::Fast,
            time: TimeModel::default(),
        }
    }
}

impl DesignSpec {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let d: Self = serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        d.design.validate()?;
        d.time.validate()?;
        Ok(d)
    }

    /// Trial settings for `scenario`'s dose levels; `seed` becomes the root seed.
    pub fn settings(&self, scenario: &ScenarioSpec, acd: bool, seed: u64) -> Result<TrialSettings, SimError> {
        let utility = calibrate_eta(&CalibrationSpec {
            p_t: self.design.p_t,
            q1_star: self.calibration.q1,
            q2_star: self.calibration.q2,
            u_star: self.calibration.u,
        })?;
        let settings = TrialSettings {
            design: self.design,
            raw_a: scenario.raw_a.clone(),
            raw_b: scenario.raw_b.clone(),
            utility,
            imom: self.imom,
            mcmc: self.mcmc.config(seed),
            acd,
        };
        settings.validate()?;
        Ok(settings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_document_with_defaults() {
        let d = DesignSpec::from_json(
            r#"{"pT":0.3,"xi":0.95,"credibleC":0.9,"U0":0.1,"omega":2,"N":96,"cohortSize":3,
                "calibration":{"q1":0.45,"q2":0.85,"U":0.3}}"#,
        )
        .unwrap();
        assert_eq!(d, DesignSpec::default());
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(DesignSpec::from_json(&json).unwrap(), d);
    }

    #[test]
    fn rejects_bad_clock() {
        let mut d = DesignSpec::default();
        d.time.follow_up_days = 0.0;
        assert!(DesignSpec::from_json(&serde_json::to_string(&d).unwrap()).is_err());
    }
}
