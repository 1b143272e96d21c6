use serde::{Deserialize, Serialize};

use super::{calibrate_eta, CalibrationSpec, DoseError, DoseGrid, UtilityParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeOff<T> {
    pub q1: T,
    pub q2: T,
    #[serde(rename = "U")]
    pub u: T,
}

/// Grid and utility elicitation document:
/// `{"rawA":[..],"rawB":[..],"pT":0.3,"calibration":{"q1":0.45,"q2":0.85,"U":0.3}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig<T> {
    #[serde(rename = "rawA")]
    pub raw_a: Vec<T>,
    #[serde(rename = "rawB")]
    pub raw_b: Vec<T>,
    #[serde(rename = "pT")]
    pub p_t: T,
    pub calibration: TradeOff<T>,
}

impl<T: Scalar> GridConfig<T> {
    pub fn calibration_spec(&self) -> CalibrationSpec<T> {
        CalibrationSpec {
            p_t: self.p_t,
            q1_star: self.calibration.q1,
            q2_star: self.calibration.q2,
            u_star: self.calibration.u,
        }
    }

    pub fn grid(&self) -> Result<DoseGrid<T>, DoseError> {
        DoseGrid::standardize(&self.raw_a, &self.raw_b)
    }

    pub fn utility(&self) -> Result<UtilityParams<T>, DoseError> {
        calibrate_eta(&self.calibration_spec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_shape() {
        let cfg: GridConfig<f64> = serde_json::from_str(
            r#"{"rawA":[1,2,3,4],"rawB":[1,2,3,4],"pT":0.3,"calibration":{"q1":0.45,"q2":0.85,"U":0.3}}"#,
        )
        .unwrap();
        assert_eq!(cfg.grid().unwrap().dims(), (4, 4));
        assert!((cfg.utility().unwrap().eta0 - 0.396).abs() < 1e-3);
    }
}
