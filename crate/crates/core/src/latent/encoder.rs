use rand::Rng;

use crate::env::{Action, OBS_DIM};
use crate::error::{Error, Result};
use crate::marl::Episode;
use crate::nn::{softmax, AdamState, MlpDims, MlpParams, HIDDEN_WIDTH};

/// Length of [`encoder_features`] for `n_agents` agents and observations of
/// length `obs_dim`.
pub fn feature_dim(n_agents: usize, obs_dim: usize) -> usize {
    Action::COUNT * n_agents + obs_dim + 2
}

/// Fixed-length trajectory summary: per-agent normalised action histograms,
/// mean observation over agents and steps, detections per horizon step and
/// mean poacher-estimate weight.
///
/// The estimate weight is the last observation entry.
pub fn encoder_features(ep: &Episode) -> Result<Vec<f64>> {
    if ep.is_empty() || ep.n_agents() == 0 {
        return Err(Error::Empty("episode"));
    }
    let len = ep.len() as f64;
    let obs_dim = ep.observations[0][0].len();
    let mut out = Vec::with_capacity(feature_dim(ep.n_agents(), obs_dim));
    for acts in &ep.actions {
        let mut hist = [0.0; Action::COUNT];
        for &a in acts {
            hist[a] += 1.0;
        }
        out.extend(hist.iter().map(|h| h / len));
    }
    let mut mean = vec![0.0; obs_dim];
    let mut count = 0.0;
    for seq in &ep.observations {
        for o in seq {
            for (m, x) in mean.iter_mut().zip(o.iter()) {
                *m += x;
            }
            count += 1.0;
        }
    }
    for m in mean.iter_mut() {
        *m /= count;
    }
    let est_weight = mean[obs_dim - 1];
    out.extend_from_slice(&mean);
    out.push(ep.detections as f64 / ep.horizon.max(1) as f64);
    out.push(est_weight);
    Ok(out)
}

/// Amortized posterior `q_phi(z | trajectory summary)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub net: MlpParams,
}

impl Encoder {
    pub fn new<R: Rng + ?Sized>(n_agents: usize, n_latent: usize, rng: &mut R) -> Self {
        let dims = MlpDims::new(feature_dim(n_agents, OBS_DIM), HIDDEN_WIDTH, n_latent);
        Encoder { net: MlpParams::init(dims, rng) }
    }

    pub fn n_latent(&self) -> usize {
        self.net.dims().n_out
    }

    pub fn posterior(&self, features: &[f64], tau: f64) -> Result<Vec<f64>> {
        softmax(&self.net.forward(features), tau)
    }

    /// One Adam step on the mean `KL(target || q_phi)` over `batch`, i.e.
    /// cross-entropy to the exact posteriors. Returns the mean KL before the
    /// step.
    pub fn estep_update(
        &mut self,
        batch: &[(Vec<f64>, Vec<f64>)],
        adam: &mut AdamState,
        tau: f64,
    ) -> Result<f64> {
        let (kl, grad) = self.kl_and_grad(batch, tau)?;
        adam.step(self.net.flat_mut(), &grad)?;
        Ok(kl)
    }

    /// Mean `KL(target || softmax(logits / tau))` over `batch` and its
    /// gradient with respect to the encoder parameters.
    pub fn kl_and_grad(&self, batch: &[(Vec<f64>, Vec<f64>)], tau: f64) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Empty("encoder batch"));
        }
        let n = batch.len() as f64;
        let mut grad = vec![0.0; self.net.dims().len()];
        let mut kl = 0.0;
        for (x, target) in batch {
            let cache = self.net.forward_cached(x);
            let q = softmax(&cache.logits, tau).map_err(|_| Error::NonFinite("encoder output"))?;
            kl += target
                .iter()
                .zip(&q)
                .filter(|(&p, _)| p > 0.0)
                .map(|(&p, &qk)| p * (p.ln() - qk.max(f64::MIN_POSITIVE).ln()))
                .sum::<f64>();
            let dlogits: Vec<f64> = q.iter().zip(target).map(|(qk, p)| (qk - p) / tau).collect();
            self.net.backward_into(x, &cache, &dlogits, 1.0 / n, &mut grad);
        }
        Ok((kl / n, grad))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::testutil::tiny_episode;

    #[test]
    fn all_stay_histogram() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ep = tiny_episode(&mut rng, 2, 7, 4);
        for a in ep.actions.iter_mut().flatten() {
            *a = 4;
        }
        let f = encoder_features(&ep).unwrap();
        assert_eq!(f.len(), feature_dim(2, 4));
        assert_eq!(&f[..12], &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(encoder_features(&ep.clone()).unwrap(), f);
    }

    #[test]
    fn empty_episode_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ep = tiny_episode(&mut rng, 2, 0, 4);
        assert!(encoder_features(&ep).is_err());
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut enc = Encoder::new(2, 3, &mut rng);
        enc.net.w1_mut().fill(0.0);
        enc.net.w2_mut().fill(0.0);
        let target: Vec<f64> = vec![0.6, 0.3, 0.1];
        let tau = 2.0;
        for (b, t) in enc.net.b2_mut().iter_mut().zip(&target) {
            *b = tau * t.ln();
        }
        let dim = enc.net.dims().n_in;
        let batch: Vec<_> = (0..4)
            .map(|_| ((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(), target.clone()))
            .collect();
        let (kl, grad) = enc.kl_and_grad(&batch, tau).unwrap();
        assert!(kl.abs() < 1e-10, "{kl}");
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-8, "{norm}");
    }

    #[test]
    fn single_component_update_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut enc = Encoder::new(2, 1, &mut rng);
        let before = enc.clone();
        let dim = enc.net.dims().n_in;
        let batch = vec![((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(), vec![1.0])];
        let mut adam = AdamState::new(enc.net.dims().len());
        let kl = enc.estep_update(&batch, &mut adam, 1.0).unwrap();
        assert_eq!(kl, 0.0);
        assert_eq!(enc, before);
    }

    #[test]
    fn rejects_empty_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let enc = Encoder::new(2, 2, &mut rng);
        assert!(enc.kl_and_grad(&[], 1.0).is_err());
    }

    #[test]
    fn kl_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut enc = Encoder {
            net: MlpParams::init(MlpDims::new(5, 6, 3), &mut rng),
        };
        for b in enc.net.b1_mut() {
            *b = 0.3;
        }
        let batch: Vec<_> = (0..3)
            .map(|_| {
                let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let raw: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
                let s: f64 = raw.iter().sum();
                (x, raw.iter().map(|r| r / s).collect())
            })
            .collect();
        let tau = 1.5;
        let (_, grad) = enc.kl_and_grad(&batch, tau).unwrap();
        for k in 0..grad.len() {
            let orig = enc.net.flat()[k];
            enc.net.flat_mut()[k] = orig + 1e-6;
            let up = enc.kl_and_grad(&batch, tau).unwrap().0;
            enc.net.flat_mut()[k] = orig - 1e-6;
            let down = enc.kl_and_grad(&batch, tau).unwrap().0;
            enc.net.flat_mut()[k] = orig;
            assert!(((up - down) / 2e-6 - grad[k]).abs() < 1e-7, "param {k}");
        }
    }
}
