use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::likelihood::PackedData;
use super::mcmc::run_chain;
use super::selection::{inclusion_probabilities, marginal_likelihood_harmonic, model_posteriors, select_mpm, EQUAL_MODEL_PRIOR};
use super::{BayesError, Chain, DoseDataTable, IMomHyperparams, McmcConfig};
use crate::seed::derive_seed;
use crate::ModelId;

/// All four model fits on one data set plus the resulting model choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelFit {
    pub chains: Vec<Chain>,
    pub log_marginals: [f64; 4],
    pub model_posteriors: [f64; 4],
    pub p3: f64,
    pub p4: f64,
    pub selected: ModelId,
}

impl ModelFit {
    pub fn chain(&self, model: ModelId) -> &Chain {
        &self.chains[model.index()]
    }

    pub fn selected_chain(&self) -> &Chain {
        self.chain(self.selected)
    }

    pub fn acceptance_rates(&self) -> Vec<[Option<f64>; 8]> {
        self.chains.iter().map(|c| c.acceptance).collect()
    }
}

/// Seed of the chain for `model` under a fit-level root seed.
pub fn chain_seed(root: u64, model: ModelId) -> u64 {
    derive_seed(root, model.index() as u64)
}

/// Fits M1-M4 (chains in parallel; each seeded from `(cfg.seed, model)`),
/// then selects the median probability model.
pub fn fit_models(data: &DoseDataTable, hyper: &IMomHyperparams, cfg: &McmcConfig) -> Result<ModelFit, BayesError> {
    if data.is_empty() {
        return Err(BayesError::InvalidData("model fitting needs at least one patient".into()));
    }
    let packed = PackedData::new(data);
    let chains = ModelId::ALL
        .par_iter()
        .map(|&m| {
            let c = McmcConfig {
                seed: chain_seed(cfg.seed, m),
                ..cfg.clone()
            };
            run_chain(&packed, m, hyper, &c)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut log_marginals = [0.0; 4];
    for (lm, c) in log_marginals.iter_mut().zip(&chains) {
        *lm = marginal_likelihood_harmonic(&c.log_likelihoods());
    }
    let posteriors = model_posteriors(&log_marginals, &EQUAL_MODEL_PRIOR)?;
    let (p3, p4) = inclusion_probabilities(&posteriors);
    Ok(ModelFit {
        chains,
        log_marginals,
        model_posteriors: posteriors,
        p3,
        p4,
        selected: select_mpm(p3, p4),
    })
}
