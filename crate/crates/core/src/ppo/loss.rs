//! Clipped surrogate loss with value and entropy terms, and its gradient.

use super::policy::{masked_softmax, Caches, PolicyParams};
use super::{PpoConfig, Rollout};
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Samples per parallel chunk. Chunk gradients are summed in chunk order,
/// so results do not depend on the thread count.
const CHUNK: usize = 32;

/// `min(r * A, clip(r, 1 - eps, 1 + eps) * A)`.
pub fn clipped_objective(ratio: f64, adv: f64, eps: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    /// Mean clipped surrogate (to be maximized).
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
    pub actor_grad: Vec<f64>,
    pub critic_grad: Vec<f64>,
}

#[derive(Default)]
struct Partial {
    surrogate: f64,
    value_loss: f64,
    entropy: f64,
    kl: f64,
    clipped: usize,
    actor_grad: Vec<f64>,
    critic_grad: Vec<f64>,
}

/// Mean loss `-L_clip + c1 (V - target)^2 - c2 H` over the samples `idx` of
/// `rollout`, with gradients for actor and critic parameters.
pub fn ppo_loss(params: &PolicyParams, rollout: &Rollout, idx: &[usize], cfg: &PpoConfig) -> Result<LossOutput> {
    let n = idx.len();
    if n == 0 {
        return Err(Error::InvalidSpec("empty minibatch".into()));
    }
    let mut adv: Vec<f64> = idx.iter().map(|&i| rollout.advantages[i]).collect();
    if cfg.normalize_advantages && n > 1 {
        let mean = adv.iter().sum::<f64>() / n as f64;
        let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt() + 1e-8;
        for a in &mut adv {
            *a = (*a - mean) / sd;
        }
    }
    let inv_n = 1.0 / n as f64;
    let (na, nc) = (params.actor.n_params(), params.critic.n_params());

    let partials: Vec<Result<Partial>> = idx
        .par_chunks(CHUNK)
        .zip(adv.par_chunks(CHUNK))
        .map(|(ids, advs)| {
            let mut p = Partial {
                actor_grad: vec![0.0; na],
                critic_grad: vec![0.0; nc],
                ..Default::default()
            };
            let mut caches = Caches::default();
            let mut d_logits = vec![0.0; params.n_actions()];
            for (&i, &a_hat) in ids.iter().zip(advs) {
                let s = rollout.state(i);
                params.actor.forward(s, &mut caches.actor);
                params.critic.forward(s, &mut caches.critic);
                let dist = masked_softmax(caches.actor.output(), rollout.legal[i])?;
                let a = rollout.actions[i];
                let logp = dist.log_prob(a);
                let ratio = (logp - rollout.log_probs[i]).exp();
                let eps = cfg.clip_eps;
                p.surrogate += clipped_objective(ratio, a_hat, eps);
                let clipped = (a_hat >= 0.0 && ratio > 1.0 + eps) || (a_hat < 0.0 && ratio < 1.0 - eps);
                if (ratio - 1.0).abs() > eps {
                    p.clipped += 1;
                }
                p.kl += ratio - 1.0 - (logp - rollout.log_probs[i]);
                let h = dist.entropy();
                p.entropy += h;

                // d(-surrogate)/d logp
                let g = if clipped { 0.0 } else { ratio * a_hat };
                d_logits.iter_mut().for_each(|d| *d = 0.0);
                for j in 0..dist.legal() {
                    let pj = dist.probs[j];
                    let ind = if j == a { 1.0 } else { 0.0 };
                    let ent = if pj > 0.0 { pj * (dist.log_probs[j] + h) } else { 0.0 };
                    d_logits[j] = inv_n * (-g * (ind - pj) + cfg.entropy_coef * ent);
                }
                params.actor.backward(&caches.actor, &d_logits, &mut p.actor_grad);

                let v = caches.critic.output()[0];
                let err = v - rollout.targets[i];
                p.value_loss += err * err;
                params
                    .critic
                    .backward(&caches.critic, &[inv_n * 2.0 * cfg.value_coef * err], &mut p.critic_grad);
            }
            Ok(p)
        })
        .collect();

    let mut total = Partial {
        actor_grad: vec![0.0; na],
        critic_grad: vec![0.0; nc],
        ..Default::default()
    };
    for p in partials {
        let p = p?;
        total.surrogate += p.surrogate;
        total.value_loss += p.value_loss;
        total.entropy += p.entropy;
        total.kl += p.kl;
        total.clipped += p.clipped;
        total.actor_grad.iter_mut().zip(&p.actor_grad).for_each(|(t, g)| *t += g);
        total.critic_grad.iter_mut().zip(&p.critic_grad).for_each(|(t, g)| *t += g);
    }
    let surrogate = total.surrogate * inv_n;
    let value_loss = total.value_loss * inv_n;
    let entropy = total.entropy * inv_n;
    let loss = -surrogate + cfg.value_coef * value_loss - cfg.entropy_coef * entropy;
    Ok(LossOutput {
        loss,
        surrogate,
        value_loss,
        entropy,
        approx_kl: total.kl * inv_n,
        clip_frac: total.clipped as f64 * inv_n,
        actor_grad: total.actor_grad,
        critic_grad: total.critic_grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_examples() {
        assert_eq!(clipped_objective(2.0, 1.0, 0.2), 1.2);
        assert_eq!(clipped_objective(0.5, -1.0, 0.2), -0.8);
        assert_eq!(clipped_objective(1.0, 0.7, 0.2), 0.7);
    }
}
