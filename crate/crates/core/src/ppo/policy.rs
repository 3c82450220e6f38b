//! Actor-critic parameters and the masked action distribution.
//!
//! Actions are unit counts `0..n_actions`; at a state with `legal` allowed
//! actions, exactly `0..legal` may be chosen and the rest get probability 0.

use super::adam::Adam;
use super::mlp::{Activations, Mlp};
use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

impl PolicyParams {
    pub fn new(state_dim: usize, n_actions: usize, hidden: usize, actor_lr: f64, critic_lr: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = Mlp::new(&[state_dim, hidden, hidden, n_actions], 0.01, &mut rng);
        let critic = Mlp::new(&[state_dim, hidden, hidden, 1], 1.0, &mut rng);
        PolicyParams {
            actor_opt: Adam::new(actor.n_params(), actor_lr),
            critic_opt: Adam::new(critic.n_params(), critic_lr),
            actor,
            critic,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn n_actions(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn value(&self, state: &[f64]) -> f64 {
        self.critic.eval(state)[0]
    }

    pub fn distribution(&self, state: &[f64], legal: usize) -> Result<ActionDist> {
        masked_softmax(&self.actor.eval(state), legal)
    }

    /// Most probable legal action.
    pub fn greedy(&self, state: &[f64], legal: usize) -> Result<usize> {
        Ok(self.distribution(state, legal)?.argmax())
    }

    pub fn all_finite(&self) -> bool {
        self.actor.params().iter().chain(self.critic.params()).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDist {
    pub probs: Vec<f64>,
    /// `-inf` for masked actions.
    pub log_probs: Vec<f64>,
    legal: usize,
}

impl ActionDist {
    pub fn legal(&self) -> usize {
        self.legal
    }

    pub fn log_prob(&self, a: usize) -> f64 {
        self.log_probs[a]
    }

    pub fn entropy(&self) -> f64 {
        -self.probs[..self.legal]
            .iter()
            .zip(&self.log_probs)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, l)| p * l)
            .sum::<f64>()
    }

    /// Lowest index among the most probable actions.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for a in 1..self.legal {
            if self.probs[a] > self.probs[best] {
                best = a;
            }
        }
        best
    }

    /// Inverse-CDF draw restricted to the legal prefix.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for a in 0..self.legal {
            acc += self.probs[a];
            if u < acc {
                return a;
            }
        }
        // rounding left `u` above the total; fall back to the last action
        // with positive mass
        (0..self.legal).rev().find(|&a| self.probs[a] > 0.0).unwrap_or(0)
    }
}

/// Softmax over `logits[..legal]`; the remaining actions get probability 0.
pub fn masked_softmax(logits: &[f64], legal: usize) -> Result<ActionDist> {
    let legal = legal.min(logits.len());
    if legal == 0 {
        return Err(Error::AllMasked);
    }
    let max = logits[..legal].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits[..legal].iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let mut probs = vec![0.0; logits.len()];
    let mut log_probs = vec![f64::NEG_INFINITY; logits.len()];
    for a in 0..legal {
        log_probs[a] = logits[a] - lse;
        probs[a] = log_probs[a].exp();
    }
    Ok(ActionDist { probs, log_probs, legal })
}

/// Action distribution and state value.
pub fn policy_forward(params: &PolicyParams, state: &[f64], legal: usize) -> Result<(ActionDist, f64)> {
    if state.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSpec("non-finite state".into()));
    }
    Ok((params.distribution(state, legal)?, params.value(state)))
}

/// Forward caches for one sample, reused by the loss.
#[derive(Debug, Default)]
pub(crate) struct Caches {
    pub actor: Activations,
    pub critic: Activations,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_logits_full_mask_is_uniform() {
        let d = masked_softmax(&[0.3; 51], 51).unwrap();
        for p in &d.probs {
            assert!((p - 1.0 / 51.0).abs() < 1e-15);
        }
    }

    #[test]
    fn only_action_zero_when_q_is_zero() {
        let d = masked_softmax(&[5.0, 1.0, 9.0], 1).unwrap();
        assert_eq!(d.probs, vec![1.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..100).all(|_| d.sample(&mut rng) == 0));
    }

    #[test]
    fn prefix_mask_of_six() {
        let d = masked_softmax(&[0.0; 51], 6).unwrap();
        for a in 0..6 {
            assert!((d.probs[a] - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!(d.probs[6..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn all_masked_is_an_error() {
        assert!(matches!(masked_softmax(&[1.0, 2.0], 0), Err(Error::AllMasked)));
    }

    proptest! {
        #[test]
        fn distribution_is_valid(logits in prop::collection::vec(-30.0f64..30.0, 1..60), frac in 0.0f64..1.0) {
            let legal = 1 + ((logits.len() - 1) as f64 * frac) as usize;
            let d = masked_softmax(&logits, legal).unwrap();
            let s: f64 = d.probs.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(d.probs.iter().all(|&p| p >= 0.0));
            prop_assert!(d.probs[legal..].iter().all(|&p| p == 0.0));
        }
    }
}
