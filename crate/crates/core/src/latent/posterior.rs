use crate::error::{Error, Result};
use crate::marl::Episode;
use crate::nn::{log_sum_exp, softmax};
use crate::policy::PolicySet;

/// Posterior over the `K` latent components for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPosterior {
    pub probs: Vec<f64>,
    /// `log sum_k p(k) L_k` at temperature 1.
    pub log_evidence: f64,
    pub temperature_used: f64,
    /// `log L_k = sum_t sum_i log pi_i(a_it | o_it, k)`.
    pub log_likelihoods: Vec<f64>,
}

impl LatentPosterior {
    pub fn uniform(k: usize, log_likelihoods: Vec<f64>) -> Self {
        let log_prior = -(k as f64).ln();
        let terms: Vec<f64> = log_likelihoods.iter().map(|l| l + log_prior).collect();
        LatentPosterior {
            probs: vec![1.0 / k as f64; k],
            log_evidence: log_sum_exp(&terms),
            temperature_used: f64::INFINITY,
            log_likelihoods,
        }
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    /// ELBO of this posterior's `probs` against its own likelihoods.
    pub fn elbo(&self) -> f64 {
        elbo_from_log_likelihoods(&self.log_likelihoods, &self.probs)
    }
}

/// Episode log-likelihood under each latent component.
pub fn log_likelihoods(ep: &Episode, policies: &PolicySet) -> Vec<f64> {
    let k = policies.n_latent();
    let mut ll = vec![0.0; k];
    for t in 0..ep.len() {
        let obs = ep.joint_obs(t);
        let actions = ep.joint_actions(t);
        for (z, l) in ll.iter_mut().enumerate() {
            *l += policies.joint_log_prob(&obs, &actions, z);
        }
    }
    ll
}

/// Exact E-step by enumeration under a uniform prior:
/// `log w_k = log p(k) + (1 / tau) log L_k`, `q = softmax(log w)`.
pub fn exact_posterior(ep: &Episode, policies: &PolicySet, tau: f64) -> Result<LatentPosterior> {
    if ep.is_empty() {
        return Err(Error::Empty("episode"));
    }
    let k = policies.n_latent();
    let ll = log_likelihoods(ep, policies);
    if ll.iter().any(|l| l.is_nan()) {
        return Err(Error::NonFinite("log-likelihood"));
    }
    if ll.iter().all(|&l| l == f64::NEG_INFINITY) {
        return Err(Error::ZeroLikelihood);
    }
    let log_prior = -(k as f64).ln();
    // The uniform prior cancels under normalisation.
    let probs = if ll.iter().all(|l| l.is_finite()) {
        softmax(&ll, tau)?
    } else {
        let finite: Vec<f64> = ll.iter().map(|&l| if l.is_finite() { l / tau } else { f64::NEG_INFINITY }).collect();
        let lse = log_sum_exp(&finite);
        finite.iter().map(|l| (l - lse).exp()).collect()
    };
    let terms: Vec<f64> = ll.iter().map(|l| l + log_prior).collect();
    Ok(LatentPosterior {
        probs,
        log_evidence: log_sum_exp(&terms),
        temperature_used: tau,
        log_likelihoods: ll,
    })
}

/// `sum_k q_k log L_k - KL(q || uniform)`, with `0 log 0 = 0`.
pub fn elbo_from_log_likelihoods(log_likelihoods: &[f64], q: &[f64]) -> f64 {
    let log_prior = -(q.len() as f64).ln();
    q.iter()
        .zip(log_likelihoods)
        .filter(|(&qk, _)| qk > 0.0)
        .map(|(&qk, &ll)| qk * ll - qk * (qk.ln() - log_prior))
        .sum()
}

pub fn elbo(ep: &Episode, q: &[f64], policies: &PolicySet) -> f64 {
    elbo_from_log_likelihoods(&log_likelihoods(ep, policies), q)
}
