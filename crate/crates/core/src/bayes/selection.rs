//! Marginal likelihoods, posterior model probabilities and median-probability-model choice.

use super::BayesError;
use crate::ModelId;

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log of the harmonic-mean estimate `{ (1/B) sum_b L_b^{-1} }^{-1}`.
pub fn marginal_likelihood_harmonic(log_likelihoods: &[f64]) -> f64 {
    assert!(!log_likelihoods.is_empty(), "harmonic mean needs at least one draw");
    let b = log_likelihoods.len() as f64;
    b.ln() - log_sum_exp(log_likelihoods.iter().map(|&l| -l))
}

/// Posterior probability of each model from its log marginal likelihood and prior weight.
pub fn model_posteriors(log_marginals: &[f64; 4], prior_weights: &[f64; 4]) -> Result<[f64; 4], BayesError> {
    if log_marginals.iter().any(|x| x.is_nan()) {
        return Err(BayesError::Degenerate("log marginal likelihood is NaN".into()));
    }
    let logs: Vec<f64> = log_marginals
        .iter()
        .zip(prior_weights)
        .map(|(m, w)| m + w.ln())
        .collect();
    let norm = log_sum_exp(logs.iter().copied());
    if !norm.is_finite() {
        return Err(BayesError::Degenerate(format!(
            "cannot normalize model weights (log normalizer {norm})"
        )));
    }
    let mut out = [0.0; 4];
    for (o, l) in out.iter_mut().zip(&logs) {
        *o = (l - norm).exp();
    }
    Ok(out)
}

pub const EQUAL_MODEL_PRIOR: [f64; 4] = [0.25; 4];

/// Inclusion probabilities of the agent-A and agent-B quadratic terms.
pub fn inclusion_probabilities(posteriors: &[f64; 4]) -> (f64, f64) {
    (posteriors[1] + posteriors[3], posteriors[2] + posteriors[3])
}

/// Median probability model: include each quadratic term whose inclusion probability is at least 1/2.
pub fn select_mpm(p3: f64, p4: f64) -> ModelId {
    ModelId::from_terms(p3 >= 0.5, p4 >= 0.5)
}
