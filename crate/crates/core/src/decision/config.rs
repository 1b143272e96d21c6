use serde::{Deserialize, Serialize};

use super::DecisionError;

/// Design constants of the escalation algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    /// Toxicity ceiling.
    #[serde(rename = "pT")]
    pub p_t: f64,
    /// A dose is toxic when `Pr{p(x) > pT | data} > xi`.
    pub xi: f64,
    /// Credible level of the insertion disc.
    #[serde(rename = "credibleC")]
    pub credible_c: f64,
    /// Lowest acceptable utility.
    #[serde(rename = "U0")]
    pub u0: f64,
    pub omega: f64,
    /// Maximum sample size.
    #[serde(rename = "N")]
    pub max_n: u32,
    #[serde(rename = "cohortSize")]
    pub cohort_size: u32,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            p_t: 0.3,
            xi: 0.95,
            credible_c: 0.90,
            u0: 0.1,
            omega: 2.0,
            max_n: 96,
            cohort_size: 3,
        }
    }
}

impl DesignConfig {
    pub fn validate(&self) -> Result<(), DecisionError> {
        let check = |ok: bool, field: &'static str, message: &str| {
            if ok {
                Ok(())
            } else {
                Err(DecisionError::Validation {
                    field,
                    message: message.to_string(),
                })
            }
        };
        check(self.p_t > 0.0 && self.p_t < 1.0, "pT", "must lie in (0, 1)")?;
        check(self.xi > 0.5 && self.xi < 1.0, "xi", "must lie in (0.5, 1)")?;
        check(self.credible_c > 0.5 && self.credible_c < 1.0, "credibleC", "must lie in (0.5, 1)")?;
        check(self.u0 > 0.0 && self.u0 < 1.0, "U0", "must lie in (0, 1)")?;
        check(self.omega > 0.0 && self.omega.is_finite(), "omega", "must be positive")?;
        check(self.cohort_size >= 1, "cohortSize", "must be at least 1")?;
        check(self.max_n >= self.cohort_size, "N", "must be at least one cohort")?;
        check(self.max_n.is_multiple_of(self.cohort_size), "N", "must be a multiple of cohortSize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_parse() {
        DesignConfig::default().validate().unwrap();
        let d: DesignConfig = serde_json::from_str(
            r#"{"pT":0.3,"xi":0.95,"credibleC":0.9,"U0":0.1,"omega":2,"N":96,"cohortSize":3}"#,
        )
        .unwrap();
        assert_eq!(d, DesignConfig::default());
    }

    #[test]
    fn rejects_out_of_range() {
        let bad = [
            DesignConfig { p_t: 1.5, ..Default::default() },
            DesignConfig { xi: 0.4, ..Default::default() },
            DesignConfig { max_n: 95, ..Default::default() },
            DesignConfig { omega: 0.0, ..Default::default() },
        ];
        for b in bad {
            assert!(b.validate().is_err(), "{b:?}");
        }
    }
}
