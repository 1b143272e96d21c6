//! True dose-response curves that drive virtual patients.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::decision::SearchRegion;
use crate::scalar::logistic;
use crate::{DoseGrid, DosePair, ToxicityParams, UtilityParams};

/// True efficacy coefficients. `beta5` multiplies `xa * xb`; the fitted
/// models never include it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueEfficacy {
    pub beta: [f64; 5],
    #[serde(default)]
    pub beta5: f64,
}

impl TrueEfficacy {
    pub fn linear_predictor(&self, x: &DosePair) -> f64 {
        let b = &self.beta;
        b[0] + b[1] * x.a + b[2] * x.b + b[3] * x.a * x.a + b[4] * x.b * x.b + self.beta5 * x.a * x.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioSpec {
    pub label: String,
    #[serde(default)]
    pub description: String,
    pub raw_a: Vec<f64>,
    pub raw_b: Vec<f64>,
    pub true_tox: ToxicityParams,
    pub true_eff: TrueEfficacy,
    /// Optimum of the true utility over the search region (standardized).
    #[serde(default)]
    pub true_bodc: Option<DosePair>,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let s: Self = serde_json::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))?;
        s.grid()?;
        Ok(s)
    }

    /// The prespecified grid, after checking the curves are proper on it.
    pub fn grid(&self) -> Result<DoseGrid, SimError> {
        let grid = DoseGrid::standardize(&self.raw_a, &self.raw_b)?;
        ToxicityParams::new(self.true_tox.alpha0, self.true_tox.alpha1, self.true_tox.alpha2)?;
        for l in grid.levels() {
            let x = grid.point(l);
            let (p, q) = (self.p_true(&x), self.q_true(&x));
            if !(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0) {
                return Err(SimError::Scenario(format!("true probabilities at {l} leave (0, 1): p={p}, q={q}")));
            }
        }
        Ok(grid)
    }

    pub fn p_true(&self, x: &DosePair) -> f64 {
        self.true_tox.prob(x)
    }

    pub fn q_true(&self, x: &DosePair) -> f64 {
        logistic(self.true_eff.linear_predictor(x))
    }

    pub fn true_utility(&self, u: &UtilityParams, x: &DosePair) -> f64 {
        u.combine(self.p_true(x), self.q_true(x))
    }

    /// Grid search of the true utility on an `n x n` lattice over the search region.
    pub fn true_optimum(&self, u: &UtilityParams, n: usize) -> Result<(DosePair, f64), SimError> {
        let (lo, hi) = self.grid()?.search_region();
        let (xa, xb) = SearchRegion::new(lo, hi).axis(n);
        let mut best = (lo, f64::NEG_INFINITY);
        for &a in &xa {
            for &b in &xb {
                let x = DosePair::new(a, b);
                let v = self.true_utility(u, &x);
                if v > best.1 {
                    best = (x, v);
                }
            }
        }
        Ok(best)
    }
}

/// Toxicity and efficacy counts for `m` patients at `dose`.
pub fn simulate_cohort_outcomes<R: Rng + ?Sized>(scenario: &ScenarioSpec, dose: &DosePair, m: u32, rng: &mut R) -> (u32, u32) {
    let draw = |p: f64, rng: &mut R| {
        Binomial::new(m as u64, p.clamp(0.0, 1.0)).map_or(0, |d| d.sample(rng) as u32)
    };
    let y = draw(scenario.p_true(dose), rng);
    let z = draw(scenario.q_true(dose), rng);
    (y, z)
}
