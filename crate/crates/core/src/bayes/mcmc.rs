//! Component-wise Gaussian random-walk Metropolis-Hastings.
//!
//! The slopes `alpha1`, `alpha2` are sampled as `ln alpha` (Jacobian included
//! in the target). Proposal scales adapt by Robbins-Monro toward a 0.3
//! acceptance rate during burn-in only; retained draws use frozen scales.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::likelihood::PackedData;
use super::prior::PriorTerms;
use super::{BayesError, DoseDataTable, IMomHyperparams};
use crate::{EfficacyParams, ModelId, ToxicityParams};

pub const N_PARAMS: usize = 8;
pub const PARAM_NAMES: [&str; N_PARAMS] = [
    "alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2", "beta3", "beta4",
];

const TARGET_ACCEPTANCE: f64 = 0.3;
const MIN_ACCEPTANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct McmcConfig {
    pub total_iterations: usize,
    pub burn_in: usize,
    /// Initial random-walk standard deviations, in [`PARAM_NAMES`] order
    /// (`alpha1`/`alpha2` entries act on the log scale).
    pub proposal_scales: [f64; N_PARAMS],
    pub adapt_during_burn_in: bool,
    pub seed: u64,
}

impl McmcConfig {
    /// 4,000 iterations with 2,000 burn-in.
    pub fn fast(seed: u64) -> Self {
        Self::with_length(4_000, 2_000, seed)
    }

    /// 10,000 iterations with 5,000 burn-in.
    pub fn paper(seed: u64) -> Self {
        Self::with_length(10_000, 5_000, seed)
    }

    pub fn with_length(total_iterations: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            total_iterations,
            burn_in,
            proposal_scales: [1.0, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0],
            adapt_during_burn_in: true,
            seed,
        }
    }

    pub fn retained(&self) -> usize {
        self.total_iterations.saturating_sub(self.burn_in)
    }

    pub fn validate(&self) -> Result<(), BayesError> {
        if self.burn_in >= self.total_iterations || self.retained() < 100 {
            return Err(BayesError::InvalidConfig(format!(
                "need at least 100 retained draws (total {}, burn-in {})",
                self.total_iterations, self.burn_in
            )));
        }
        if self.proposal_scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(BayesError::InvalidConfig("proposal scales must be positive".into()));
        }
        Ok(())
    }
}

/// One retained posterior draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub tox: ToxicityParams,
    pub eff: EfficacyParams,
    pub log_lik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Chain {
    pub model: ModelId,
    pub draws: Vec<Draw>,
    /// Post-burn-in acceptance rate per parameter; `None` for parameters the model pins to zero.
    pub acceptance: [Option<f64>; N_PARAMS],
    pub final_scales: [f64; N_PARAMS],
}

impl Chain {
    pub fn log_likelihoods(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.log_lik).collect()
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Parameter `i` (natural scale) across draws.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.draws.iter().map(|d| draw_value(d, i)).collect()
    }

    pub fn posterior_mean(&self, i: usize) -> f64 {
        let n = self.draws.len() as f64;
        self.draws.iter().map(|d| draw_value(d, i)).sum::<f64>() / n
    }

    /// Writes one row per draw; columns are the parameter names plus `loglik`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), BayesError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<&str> = PARAM_NAMES.to_vec();
        header.push("loglik");
        out.write_record(&header)?;
        for d in &self.draws {
            let mut row: Vec<String> = (0..N_PARAMS).map(|i| draw_value(d, i).to_string()).collect();
            row.push(d.log_lik.to_string());
            out.write_record(&row)?;
        }
        out.flush().map_err(|e| BayesError::Export(e.to_string()))?;
        Ok(())
    }
}

fn draw_value(d: &Draw, i: usize) -> f64 {
    match i {
        0 => d.tox.alpha0,
        1 => d.tox.alpha1,
        2 => d.tox.alpha2,
        _ => d.eff.beta[i - 3],
    }
}

fn active_params(model: ModelId) -> Vec<usize> {
    let mut v = vec![0, 1, 2, 3, 4, 5];
    if model.quadratic_a() {
        v.push(6);
    }
    if model.quadratic_b() {
        v.push(7);
    }
    v
}

struct Sampler<'a> {
    data: &'a PackedData,
    prior: PriorTerms,
    theta: [f64; N_PARAMS],
    tox_ll: f64,
    eff_ll: f64,
}

impl Sampler<'_> {
    fn tox_ll_at(&self, theta: &[f64; N_PARAMS]) -> f64 {
        self.data.tox_loglik(theta[0], theta[1].exp(), theta[2].exp())
    }

    fn eff_ll_at(&self, theta: &[f64; N_PARAMS]) -> f64 {
        self.data.eff_loglik(&[theta[3], theta[4], theta[5], theta[6], theta[7]])
    }

    fn prior_term(&self, i: usize, v: f64) -> f64 {
        match i {
            0 | 3 => self.prior.intercept(v),
            1 | 2 => self.prior.log_slope_on_log_scale(v),
            4 | 5 => self.prior.slope(v),
            _ => self.prior.quadratic(v),
        }
    }

    /// One Metropolis update of coordinate `i`; returns the acceptance probability.
    fn update(&mut self, i: usize, scale: f64, rng: &mut ChaCha8Rng) -> (f64, bool) {
        let step: f64 = rng.sample(StandardNormal);
        let mut prop = self.theta;
        prop[i] += scale * step;
        let tox_side = i < 3;
        let (old_ll, new_ll) = if tox_side {
            (self.tox_ll, self.tox_ll_at(&prop))
        } else {
            (self.eff_ll, self.eff_ll_at(&prop))
        };
        let log_ratio =
            new_ll + self.prior_term(i, prop[i]) - old_ll - self.prior_term(i, self.theta[i]);
        let prob = if log_ratio.is_nan() { 0.0 } else { log_ratio.exp().min(1.0) };
        let u: f64 = rng.random();
        let accepted = u < prob;
        if accepted {
            self.theta = prop;
            if tox_side {
                self.tox_ll = new_ll;
            } else {
                self.eff_ll = new_ll;
            }
        }
        (prob, accepted)
    }

    fn draw(&self, model: ModelId) -> Draw {
        let t = &self.theta;
        Draw {
            tox: ToxicityParams {
                alpha0: t[0],
                alpha1: t[1].exp(),
                alpha2: t[2].exp(),
            },
            eff: EfficacyParams {
                model,
                beta: [t[3], t[4], t[5], t[6], t[7]],
            },
            log_lik: self.tox_ll + self.eff_ll,
        }
    }
}

fn initial_theta(model: ModelId, hyper: &IMomHyperparams) -> [f64; N_PARAMS] {
    // quadratic terms start on the concave branch, at the iMOM mode (k = 1)
    let q = -hyper.tau.sqrt();
    [
        -1.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        if model.quadratic_a() { q } else { 0.0 },
        if model.quadratic_b() { q } else { 0.0 },
    ]
}

pub(crate) fn run_chain(
    data: &PackedData,
    model: ModelId,
    hyper: &IMomHyperparams,
    cfg: &McmcConfig,
) -> Result<Chain, BayesError> {
    cfg.validate()?;
    hyper.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let theta = initial_theta(model, hyper);
    let mut s = Sampler {
        data,
        prior: PriorTerms::new(*hyper),
        theta,
        tox_ll: 0.0,
        eff_ll: 0.0,
    };
    s.tox_ll = s.tox_ll_at(&theta);
    s.eff_ll = s.eff_ll_at(&theta);

    let active = active_params(model);
    let mut log_scales = cfg.proposal_scales.map(f64::ln);
    let mut accepted = [0usize; N_PARAMS];
    let mut draws = Vec::with_capacity(cfg.retained());
    for it in 0..cfg.total_iterations {
        let burning = it < cfg.burn_in;
        let gain = ((it + 1) as f64).powf(-0.6);
        for &i in &active {
            let (prob, acc) = s.update(i, log_scales[i].exp(), &mut rng);
            if burning {
                if cfg.adapt_during_burn_in {
                    log_scales[i] = (log_scales[i] + gain * (prob - TARGET_ACCEPTANCE)).clamp(-12.0, 4.0);
                }
            } else if acc {
                accepted[i] += 1;
            }
        }
        if !burning {
            draws.push(s.draw(model));
        }
    }

    let retained = cfg.retained() as f64;
    let mut acceptance = [None; N_PARAMS];
    for &i in &active {
        let rate = accepted[i] as f64 / retained;
        if rate < MIN_ACCEPTANCE {
            return Err(BayesError::Stuck {
                model,
                param: PARAM_NAMES[i],
                rate,
            });
        }
        acceptance[i] = Some(rate);
    }
    Ok(Chain {
        model,
        draws,
        acceptance,
        final_scales: log_scales.map(f64::exp),
    })
}

/// Posterior draws of `(alpha, beta)` under `model`.
pub fn sample_posterior(
    data: &DoseDataTable,
    model: ModelId,
    hyper: &IMomHyperparams,
    cfg: &McmcConfig,
) -> Result<Chain, BayesError> {
    if data.is_empty() {
        return Err(BayesError::InvalidData("posterior sampling needs at least one patient".into()));
    }
    run_chain(&PackedData::new(data), model, hyper, cfg)
}

/// Draws from the prior alone (flat likelihood).
pub fn sample_prior(model: ModelId, hyper: &IMomHyperparams, cfg: &McmcConfig) -> Result<Chain, BayesError> {
    run_chain(&PackedData::default(), model, hyper, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DosePair;

    fn symmetric_data() -> DoseDataTable {
        let mut d = DoseDataTable::new();
        for (a, b) in [(-0.5, -0.5), (0.5, 0.5), (-0.5, 0.5), (0.5, -0.5), (0.0, 0.0)] {
            d.record(DosePair::new(a, b), 3, 3, 6).unwrap();
        }
        d
    }

    #[test]
    fn same_seed_same_chain() {
        let d = symmetric_data();
        let cfg = McmcConfig::with_length(600, 300, 11);
        let a = sample_posterior(&d, ModelId::M4, &IMomHyperparams::default(), &cfg).unwrap();
        let b = sample_posterior(&d, ModelId::M4, &IMomHyperparams::default(), &cfg).unwrap();
        assert_eq!(a, b);
        let c = sample_posterior(&d, ModelId::M4, &IMomHyperparams::default(), &McmcConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.draws, c.draws);
    }

    #[test]
    fn pinned_coefficients_stay_zero() {
        let d = symmetric_data();
        let cfg = McmcConfig::with_length(500, 250, 3);
        let ch = sample_posterior(&d, ModelId::M2, &IMomHyperparams::default(), &cfg).unwrap();
        assert!(ch.draws.iter().all(|x| x.eff.beta[4] == 0.0 && x.eff.beta[3] != 0.0));
        assert!(ch.draws.iter().all(|x| x.tox.alpha1 > 0.0 && x.tox.alpha2 > 0.0));
        assert!(ch.acceptance[7].is_none() && ch.acceptance[6].is_some());
    }

    #[test]
    fn symmetric_data_gives_exchangeable_slopes() {
        let d = symmetric_data();
        let cfg = McmcConfig::with_length(22_000, 2_000, 5);
        let ch = sample_posterior(&d, ModelId::M1, &IMomHyperparams::default(), &cfg).unwrap();
        let b1 = ch.column(4);
        let b2 = ch.column(5);
        let diff: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| x - y).collect();
        let mean = diff.iter().sum::<f64>() / diff.len() as f64;
        // batch-means standard error
        let batches = 40;
        let size = diff.len() / batches;
        let bm: Vec<f64> = (0..batches)
            .map(|i| diff[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64)
            .collect();
        let var = bm.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean diff {mean}, se {se}");
    }

    #[test]
    fn single_dose_keeps_slope_in_prior_bulk() {
        let mut d = DoseDataTable::new();
        d.record(DosePair::new(-0.67, -0.67), 0, 1, 3).unwrap();
        let cfg = McmcConfig::with_length(8_000, 2_000, 9);
        let ch = sample_posterior(&d, ModelId::M1, &IMomHyperparams::default(), &cfg).unwrap();
        let m = ch.posterior_mean(1);
        assert!((0.1..=3.0).contains(&m), "alpha1 mean {m}");
    }

    #[test]
    fn rejects_empty_data_and_short_chains() {
        let cfg = McmcConfig::fast(0);
        assert!(sample_posterior(&DoseDataTable::new(), ModelId::M1, &IMomHyperparams::default(), &cfg).is_err());
        let short = McmcConfig::with_length(150, 100, 0);
        assert!(short.validate().is_err());
    }

    #[test]
    fn csv_has_header_and_one_row_per_draw() {
        let cfg = McmcConfig::with_length(300, 100, 1);
        let ch = sample_prior(ModelId::M1, &IMomHyperparams::default(), &cfg).unwrap();
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "alpha0,alpha1,alpha2,beta0,beta1,beta2,beta3,beta4,loglik");
        assert_eq!(lines.count(), 200);
    }
}
