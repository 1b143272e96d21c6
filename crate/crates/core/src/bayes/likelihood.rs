use super::DoseDataTable;
use crate::scalar::log_logistic;
use crate::{EfficacyParams, ToxicityParams};

/// Binomial log-likelihood (without combinatorial constants) of the toxicity
/// and efficacy counts under working independence.
pub fn log_likelihood(data: &DoseDataTable, tox: &ToxicityParams, eff: &EfficacyParams) -> f64 {
    data.rows()
        .iter()
        .map(|r| {
            let lp = tox.linear_predictor(&r.dose);
            let lq = eff.linear_predictor(&r.dose);
            binomial_logit_term(lp, r.y, r.n) + binomial_logit_term(lq, r.z, r.n)
        })
        .sum()
}

/// `k ln p + (n - k) ln(1 - p)` with `p = logistic(eta)`.
#[inline]
pub(crate) fn binomial_logit_term(eta: f64, k: u32, n: u32) -> f64 {
    let mut s = 0.0;
    if k > 0 {
        s += k as f64 * log_logistic(eta);
    }
    if n > k {
        s += (n - k) as f64 * log_logistic(-eta);
    }
    s
}

/// Column-major copy of a data table, laid out for the sampler's inner loop.
#[derive(Debug, Clone, Default)]
pub(crate) struct PackedData {
    pub xa: Vec<f64>,
    pub xb: Vec<f64>,
    pub y: Vec<u32>,
    pub z: Vec<u32>,
    pub n: Vec<u32>,
}

impl PackedData {
    pub fn new(data: &DoseDataTable) -> Self {
        let rows = data.rows().iter().filter(|r| r.n > 0);
        let mut p = Self::default();
        for r in rows {
            p.xa.push(r.dose.a);
            p.xb.push(r.dose.b);
            p.y.push(r.y);
            p.z.push(r.z);
            p.n.push(r.n);
        }
        p
    }

    /// Toxicity half of the log-likelihood; `alpha` on the natural scale.
    pub fn tox_loglik(&self, a0: f64, a1: f64, a2: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..self.xa.len() {
            s += binomial_logit_term(a0 + a1 * self.xa[i] + a2 * self.xb[i], self.y[i], self.n[i]);
        }
        s
    }

    pub fn eff_loglik(&self, b: &[f64; 5]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.xa.len() {
            let (xa, xb) = (self.xa[i], self.xb[i]);
            let eta = b[0] + b[1] * xa + b[2] * xb + b[3] * xa * xa + b[4] * xb * xb;
            s += binomial_logit_term(eta, self.z[i], self.n[i]);
        }
        s
    }
}
