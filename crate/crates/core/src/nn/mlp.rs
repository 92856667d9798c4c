use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpDims {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
}

impl MlpDims {
    pub fn new(n_in: usize, n_hidden: usize, n_out: usize) -> Self {
        MlpDims { n_in, n_hidden, n_out }
    }

    /// Total number of scalars in the flat parameter vector.
    pub fn len(&self) -> usize {
        self.n_hidden * self.n_in + self.n_hidden + self.n_out * self.n_hidden + self.n_out
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn w1(&self) -> std::ops::Range<usize> {
        0..self.n_hidden * self.n_in
    }

    fn b1(&self) -> std::ops::Range<usize> {
        let s = self.n_hidden * self.n_in;
        s..s + self.n_hidden
    }

    fn w2(&self) -> std::ops::Range<usize> {
        let s = self.b1().end;
        s..s + self.n_out * self.n_hidden
    }

    fn b2(&self) -> std::ops::Range<usize> {
        let s = self.w2().end;
        s..s + self.n_out
    }
}

/// Two-layer ReLU perceptron, `W2 relu(W1 x + b1) + b2`.
///
/// Parameters live in one flat vector laid out as `W1` (row-major,
/// hidden x in), `b1`, `W2` (row-major, out x hidden), `b2`. Optimizer state
/// and checkpoints index into this layout directly.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    dims: MlpDims,
    flat: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(dims: MlpDims) -> Self {
        MlpParams {
            dims,
            flat: vec![0.0; dims.len()],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(dims: MlpDims, rng: &mut R) -> Self {
        let mut p = Self::zeros(dims);
        let a1 = (6.0 / (dims.n_in + dims.n_hidden) as f64).sqrt();
        for w in &mut p.flat[dims.w1()] {
            *w = rng.gen_range(-a1..a1);
        }
        let a2 = (6.0 / (dims.n_hidden + dims.n_out) as f64).sqrt();
        for w in &mut p.flat[dims.w2()] {
            *w = rng.gen_range(-a2..a2);
        }
        p
    }

    pub fn from_flat(dims: MlpDims, flat: Vec<f64>) -> Result<Self> {
        if flat.len() != dims.len() {
            return Err(Error::Dimension {
                expected: dims.len(),
                got: flat.len(),
            });
        }
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("parameters"));
        }
        Ok(MlpParams { dims, flat })
    }

    pub fn dims(&self) -> MlpDims {
        self.dims
    }

    pub fn flat(&self) -> &[f64] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.flat
    }

    pub fn w1(&self) -> &[f64] {
        &self.flat[self.dims.w1()]
    }

    pub fn b1(&self) -> &[f64] {
        &self.flat[self.dims.b1()]
    }

    pub fn w2(&self) -> &[f64] {
        &self.flat[self.dims.w2()]
    }

    pub fn b2(&self) -> &[f64] {
        &self.flat[self.dims.b2()]
    }

    pub fn w1_mut(&mut self) -> &mut [f64] {
        let r = self.dims.w1();
        &mut self.flat[r]
    }

    pub fn b1_mut(&mut self) -> &mut [f64] {
        let r = self.dims.b1();
        &mut self.flat[r]
    }

    pub fn w2_mut(&mut self) -> &mut [f64] {
        let r = self.dims.w2();
        &mut self.flat[r]
    }

    pub fn b2_mut(&mut self) -> &mut [f64] {
        let r = self.dims.b2();
        &mut self.flat[r]
    }

    /// # Panics
    ///
    /// If `x.len()` differs from the input dimension.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).logits
    }

    pub fn forward_cached(&self, x: &[f64]) -> ForwardCache {
        let d = self.dims;
        assert_eq!(x.len(), d.n_in, "input dimension");
        let (w1, b1, w2, b2) = (self.w1(), self.b1(), self.w2(), self.b2());
        let mut hidden = b1.to_vec();
        // Observations are sparse; skip zero inputs.
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (h, row) in hidden.iter_mut().zip(w1.chunks_exact(d.n_in)) {
                *h += row[j] * xj;
            }
        }
        for h in hidden.iter_mut() {
            *h = h.max(0.0);
        }
        let logits = w2
            .chunks_exact(d.n_hidden)
            .zip(b2)
            .map(|(row, &b)| b + row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>())
            .collect();
        ForwardCache { hidden, logits }
    }

    /// Accumulates `scale * d(logit . dlogits)/d(params)` into `grad`.
    pub fn backward_into(
        &self,
        x: &[f64],
        cache: &ForwardCache,
        dlogits: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) {
        let d = self.dims;
        debug_assert_eq!(grad.len(), d.len());
        debug_assert_eq!(dlogits.len(), d.n_out);
        let w2 = self.w2();
        let mut dhidden = vec![0.0; d.n_hidden];
        {
            let gw2 = &mut grad[d.w2()];
            for (o, &g) in dlogits.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let g = g * scale;
                let row = &w2[o * d.n_hidden..(o + 1) * d.n_hidden];
                let grow = &mut gw2[o * d.n_hidden..(o + 1) * d.n_hidden];
                for h in 0..d.n_hidden {
                    grow[h] += g * cache.hidden[h];
                    dhidden[h] += g * row[h];
                }
            }
        }
        for (gb, &g) in grad[d.b2()].iter_mut().zip(dlogits) {
            *gb += g * scale;
        }
        for (dh, &h) in dhidden.iter_mut().zip(&cache.hidden) {
            if h <= 0.0 {
                *dh = 0.0;
            }
        }
        for (gb, &dh) in grad[d.b1()].iter_mut().zip(&dhidden) {
            *gb += dh;
        }
        let gw1 = &mut grad[d.w1()];
        for (h, &dh) in dhidden.iter().enumerate() {
            if dh == 0.0 {
                continue;
            }
            let grow = &mut gw1[h * d.n_in..(h + 1) * d.n_in];
            for (g, &xj) in grow.iter_mut().zip(x) {
                *g += dh * xj;
            }
        }
    }

    /// Log-probability of `action` under `softmax(forward(x) / tau)` and its
    /// gradient with respect to the flat parameters.
    pub fn logprob_grad(&self, x: &[f64], action: usize, tau: f64) -> (f64, Vec<f64>) {
        assert!(action < self.dims.n_out, "action out of range");
        let cache = self.forward_cached(x);
        let logp = log_softmax(&cache.logits, tau);
        // d log p_a / d l_j = (onehot(a)_j - p_j) / tau
        let dlogits: Vec<f64> = logp
            .iter()
            .enumerate()
            .map(|(j, lp)| ((j == action) as u8 as f64 - lp.exp()) / tau)
            .collect();
        let mut grad = vec![0.0; self.dims.len()];
        self.backward_into(x, &cache, &dlogits, 1.0, &mut grad);
        (logp[action], grad)
    }
}

/// Numerically stable `softmax(logits / tau)`.
pub fn softmax(logits: &[f64], tau: f64) -> Result<Vec<f64>> {
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidConfig(format!("temperature must be positive, got {tau}")));
    }
    Ok(log_softmax(logits, tau).into_iter().map(f64::exp).collect())
}

/// `log softmax(logits / tau)`; callers guarantee finite logits and `tau > 0`.
pub fn log_softmax(logits: &[f64], tau: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = logits.iter().map(|l| (l - max) / tau).collect();
    let lse = scaled.iter().map(|s| s.exp()).sum::<f64>().ln();
    scaled.into_iter().map(|s| s - lse).collect()
}

/// `log sum exp` over a slice; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Shannon entropy in nats, with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>()
}

/// Gradient of the entropy of `softmax(l)` with respect to the logits `l`.
pub fn entropy_logit_grad(p: &[f64]) -> Vec<f64> {
    let h = entropy(p);
    p.iter()
        .map(|&q| if q > 0.0 { -q * (q.ln() + h) } else { 0.0 })
        .collect()
}
