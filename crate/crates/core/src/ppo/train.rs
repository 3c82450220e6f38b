//! Rollout collection, the update loop and the finite-difference check.

use super::loss::ppo_loss;
use super::{gae, PolicyParams, PpoConfig};
use crate::error::{Error, Result};
use crate::exec::{Episode, ExecEnv};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// An episodic task with a fixed observation size and prefix-masked
/// discrete actions.
pub trait Environment: Sync {
    type Episode: Send;

    fn state_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn begin(&self, rng: &mut ChaCha8Rng) -> Result<Self::Episode>;
    /// Write the observation and return how many actions (a prefix of the
    /// action set) are legal.
    fn observe(&self, ep: &Self::Episode, obs: &mut Vec<f64>) -> usize;
    /// Apply an action; returns `(reward, done)`.
    fn act(&self, ep: &mut Self::Episode, action: usize) -> Result<(f64, bool)>;
}

impl Environment for ExecEnv {
    type Episode = Episode;

    fn state_dim(&self) -> usize {
        ExecEnv::state_dim(self)
    }

    fn n_actions(&self) -> usize {
        ExecEnv::n_actions(self)
    }

    fn begin(&self, rng: &mut ChaCha8Rng) -> Result<Episode> {
        let start = self.sample_start(rng)?;
        self.reset(start)
    }

    fn observe(&self, ep: &Episode, obs: &mut Vec<f64>) -> usize {
        ep.state.write_vector(self.spec(), obs);
        ep.state.q as usize + 1
    }

    fn act(&self, ep: &mut Episode, action: usize) -> Result<(f64, bool)> {
        let r = self.step(ep, action as u32)?;
        Ok((r.reward, r.done))
    }
}

/// Training view of an execution environment. A fraction
/// `exploring_starts` of episodes begins at a uniformly drawn decision
/// step with uniformly drawn inventory, so that states late in the horizon
/// with much inventory left are visited and learned.
pub struct ExecTraining {
    pub env: ExecEnv,
    pub exploring_starts: f64,
}

impl Environment for ExecTraining {
    type Episode = Episode;

    fn state_dim(&self) -> usize {
        self.env.state_dim()
    }

    fn n_actions(&self) -> usize {
        self.env.n_actions()
    }

    fn begin(&self, rng: &mut ChaCha8Rng) -> Result<Episode> {
        let start = self.env.sample_start(rng)?;
        let spec = self.env.spec();
        if rng.random::<f64>() < self.exploring_starts {
            let k0 = rng.random_range(0..spec.decisions);
            let q = rng.random_range(1..=spec.volume);
            let row = start + k0 as usize * spec.interval_steps();
            self.env.reset_at(row, q, spec.decisions - k0)
        } else {
            self.env.reset(start)
        }
    }

    fn observe(&self, ep: &Episode, obs: &mut Vec<f64>) -> usize {
        self.env.observe(ep, obs)
    }

    fn act(&self, ep: &mut Episode, action: usize) -> Result<(f64, bool)> {
        self.env.act(ep, action)
    }
}

/// Flat transition buffer. Episodes are stored contiguously and always end
/// with `done = true`.
#[derive(Debug, Clone, Default)]
pub struct Rollout {
    pub state_dim: usize,
    pub states: Vec<f64>,
    pub actions: Vec<usize>,
    pub legal: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub targets: Vec<f64>,
    /// Undiscounted scaled return of each episode.
    pub episode_returns: Vec<f64>,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.state_dim..(i + 1) * self.state_dim]
    }

    fn append(&mut self, other: Rollout) {
        self.states.extend(other.states);
        self.actions.extend(other.actions);
        self.legal.extend(other.legal);
        self.log_probs.extend(other.log_probs);
        self.rewards.extend(other.rewards);
        self.values.extend(other.values);
        self.dones.extend(other.dones);
        self.episode_returns.extend(other.episode_returns);
    }

    /// Fill advantages and value targets.
    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64) {
        let (adv, tgt) = gae(&self.rewards, &self.values, &self.dones, 0.0, gamma, lambda);
        self.advantages = adv;
        self.targets = tgt;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStats {
    pub update: u64,
    pub steps: usize,
    pub episodes: usize,
    pub mean_episode_return: f64,
    pub loss: f64,
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
}

impl UpdateStats {
    pub fn csv_header() -> &'static str {
        "update,steps,episodes,mean_episode_return,loss,surrogate,value_loss,entropy,approx_kl,clip_frac"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.update,
            self.steps,
            self.episodes,
            self.mean_episode_return,
            self.loss,
            self.surrogate,
            self.value_loss,
            self.entropy,
            self.approx_kl,
            self.clip_frac
        )
    }
}

/// Seed derived from a base seed and two counters (splitmix64 finalizer).
pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_episode<E: Environment>(env: &E, params: &PolicyParams, seed: u64, scale: f64) -> Result<Rollout> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ep = env.begin(&mut rng)?;
    let mut out = Rollout {
        state_dim: env.state_dim(),
        ..Default::default()
    };
    let mut obs = Vec::with_capacity(env.state_dim());
    let mut ret = 0.0;
    loop {
        let legal = env.observe(&ep, &mut obs);
        let dist = params.distribution(&obs, legal)?;
        let a = dist.sample(&mut rng);
        out.states.extend_from_slice(&obs);
        out.actions.push(a);
        out.legal.push(legal);
        out.log_probs.push(dist.log_prob(a));
        out.values.push(params.value(&obs));
        let (r, done) = env.act(&mut ep, a)?;
        out.rewards.push(r * scale);
        out.dones.push(done);
        ret += r * scale;
        if done {
            break;
        }
    }
    out.episode_returns.push(ret);
    Ok(out)
}

/// Episodes per parallel wave during collection.
const WAVE: usize = 64;

pub struct Trainer<E: Environment> {
    env: E,
    params: PolicyParams,
    cfg: PpoConfig,
    updates: u64,
}

impl<E: Environment> Trainer<E> {
    pub fn new(env: E, cfg: PpoConfig) -> Result<Self> {
        cfg.validate()?;
        let params = PolicyParams::new(env.state_dim(), env.n_actions(), cfg.hidden, cfg.actor_lr, cfg.critic_lr, cfg.seed);
        Ok(Trainer {
            env,
            params,
            cfg,
            updates: 0,
        })
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn into_params(self) -> PolicyParams {
        self.params
    }

    pub fn config(&self) -> &PpoConfig {
        &self.cfg
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Collect at least `cfg.rollout` transitions from whole episodes.
    /// Every episode has its own seed, so the buffer does not depend on
    /// the thread count.
    pub fn collect(&self) -> Result<Rollout> {
        let mut buf = Rollout {
            state_dim: self.env.state_dim(),
            ..Default::default()
        };
        let mut next_ep = 0u64;
        while buf.len() < self.cfg.rollout {
            let wave: Vec<Result<Rollout>> = (next_ep..next_ep + WAVE as u64)
                .into_par_iter()
                .map(|e| {
                    let seed = derive_seed(self.cfg.seed, self.updates + 1, e);
                    run_episode(&self.env, &self.params, seed, self.cfg.reward_scale)
                })
                .collect();
            next_ep += WAVE as u64;
            for r in wave {
                if buf.len() >= self.cfg.rollout {
                    break;
                }
                buf.append(r?);
            }
        }
        buf.compute_advantages(self.cfg.gamma, self.cfg.lambda);
        Ok(buf)
    }

    /// Several epochs of minibatch descent on one rollout.
    pub fn update(&mut self, rollout: &Rollout) -> Result<UpdateStats> {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed ^ 0x5EED, self.updates + 1, u64::MAX));
        let mut idx: Vec<usize> = (0..rollout.len()).collect();
        let mut sums = [0.0f64; 6];
        let mut batches = 0usize;
        for _ in 0..cfg.epochs {
            idx.shuffle(&mut rng);
            for mb in idx.chunks(cfg.minibatch) {
                let mut out = ppo_loss(&self.params, rollout, mb, cfg)?;
                if !out.loss.is_finite() {
                    return Err(Error::NonFiniteLoss { batch: batches });
                }
                clip_norm(&mut out.actor_grad, cfg.max_grad_norm);
                clip_norm(&mut out.critic_grad, cfg.max_grad_norm);
                let p = &mut self.params;
                p.actor_opt.step(p.actor.params_mut(), &out.actor_grad);
                p.critic_opt.step(p.critic.params_mut(), &out.critic_grad);
                for (s, v) in sums.iter_mut().zip([
                    out.loss,
                    out.surrogate,
                    out.value_loss,
                    out.entropy,
                    out.approx_kl,
                    out.clip_frac,
                ]) {
                    *s += v;
                }
                batches += 1;
            }
        }
        if !self.params.all_finite() {
            return Err(Error::NonFiniteLoss { batch: batches });
        }
        self.updates += 1;
        let k = batches.max(1) as f64;
        let n_ep = rollout.episode_returns.len();
        Ok(UpdateStats {
            update: self.updates,
            steps: rollout.len(),
            episodes: n_ep,
            mean_episode_return: rollout.episode_returns.iter().sum::<f64>() / n_ep.max(1) as f64,
            loss: sums[0] / k,
            surrogate: sums[1] / k,
            value_loss: sums[2] / k,
            entropy: sums[3] / k,
            approx_kl: sums[4] / k,
            clip_frac: sums[5] / k,
        })
    }

    /// Collect and update `n` times, reporting each update to `log`.
    pub fn train<F: FnMut(&UpdateStats)>(&mut self, n: usize, mut log: F) -> Result<()> {
        for _ in 0..n {
            let rollout = self.collect()?;
            let stats = self.update(&rollout)?;
            log(&stats);
        }
        Ok(())
    }
}

fn clip_norm(g: &mut [f64], max: f64) {
    if max <= 0.0 {
        return;
    }
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > max {
        let s = max / norm;
        g.iter_mut().for_each(|x| *x *= s);
    }
}

/// Largest relative error between analytic and central-difference
/// gradients of the PPO loss over `n_weights` randomly chosen parameters
/// (actor and critic). The relative error is
/// `|a - f| / max(|a| + |f|, 1e-6)`.
pub fn gradient_check(
    params: &PolicyParams,
    rollout: &Rollout,
    idx: &[usize],
    cfg: &PpoConfig,
    h: f64,
    n_weights: usize,
    seed: u64,
) -> Result<f64> {
    let base = ppo_loss(params, rollout, idx, cfg)?;
    let na = params.actor.n_params();
    let total = na + params.critic.n_params();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut p = params.clone();
    for _ in 0..n_weights {
        let k = rng.random_range(0..total);
        let (analytic, slot): (f64, &mut dyn FnMut(&mut PolicyParams) -> &mut f64) = if k < na {
            (base.actor_grad[k], &mut |q: &mut PolicyParams| &mut q.actor.params_mut()[k])
        } else {
            (base.critic_grad[k - na], &mut |q: &mut PolicyParams| &mut q.critic.params_mut()[k - na])
        };
        let orig = *slot(&mut p);
        *slot(&mut p) = orig + h;
        let up = ppo_loss(&p, rollout, idx, cfg)?.loss;
        *slot(&mut p) = orig - h;
        let dn = ppo_loss(&p, rollout, idx, cfg)?.loss;
        *slot(&mut p) = orig;
        let fd = (up - dn) / (2.0 * h);
        let rel = (analytic - fd).abs() / (analytic.abs() + fd.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Ok(worst)
}
