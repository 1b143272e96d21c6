//! Bayesian inference for the dose-response models: priors, likelihood,
//! random-walk Metropolis-Hastings fits of M1-M4, harmonic-mean marginal
//! likelihoods and median-probability-model selection.

mod data;
mod fit;
mod likelihood;
mod mcmc;
mod prior;
mod selection;

use thiserror::Error;

pub use data::{DoseDataTable, DoseRow};
pub use fit::{chain_seed, fit_models, ModelFit};
pub use likelihood::log_likelihood;
pub use mcmc::{sample_posterior, sample_prior, Chain, Draw, McmcConfig, N_PARAMS, PARAM_NAMES};
pub use prior::{cauchy_log_density, gamma_log_density, log_prior, IMomHyperparams};
pub use selection::{
    inclusion_probabilities, marginal_likelihood_harmonic, model_posteriors, select_mpm, EQUAL_MODEL_PRIOR,
};

use crate::ModelId;

#[derive(Debug, Error)]
pub enum BayesError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("chain for {model} is stuck: {param} acceptance rate {rate:.4}")]
    Stuck {
        model: ModelId,
        param: &'static str,
        rate: f64,
    },
    #[error("degenerate model weights: {0}")]
    Degenerate(String),
    #[error("chain export failed: {0}")]
    Export(String),
}

impl From<csv::Error> for BayesError {
    fn from(e: csv::Error) -> Self {
        BayesError::Export(e.to_string())
    }
}
