//! REINFORCE with a per-timestep moving-average baseline, for single-player
//! score maximization and for self-play against a pool of past snapshots.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use saag_core::{Adam, EngineError, GameConfig, GameState, TileCatalog};

use crate::dist::{select_action, Distribution, SelectMode};
use crate::error::AgentError;
use crate::metrics::{SeatStats, TrainMetrics};
use crate::net::{ForwardCache, PolicyArch, PolicyParams};
use crate::observe::observe;
use crate::play::{mix_seed, StatsTracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Single,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub board_size: usize,
    pub episodes: usize,
    /// Episodes per parameter update.
    pub batch: usize,
    pub lr: f64,
    pub gamma: f64,
    /// Weight of the old value in the baseline moving average.
    pub baseline_decay: f64,
    pub entropy: f64,
    pub seed: u64,
    /// Episodes between metric checkpoints.
    pub checkpoint_every: usize,
    pub conv1: usize,
    pub conv2: usize,
    pub hidden: usize,
    /// Rollout threads; 0 uses every core.
    pub workers: usize,
    /// Snapshots kept for self-play opponents; 1 plays the latest params.
    pub pool_size: usize,
    /// Updates between snapshot publications.
    pub swap_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::Single,
            board_size: 9,
            episodes: 2000,
            batch: 16,
            lr: 1e-3,
            gamma: 1.0,
            baseline_decay: 0.9,
            entropy: 0.0,
            seed: 0,
            checkpoint_every: 200,
            conv1: 16,
            conv2: 32,
            hidden: 64,
            workers: 0,
            pool_size: 4,
            swap_interval: 10,
        }
    }
}

impl TrainConfig {
    pub fn arch(&self) -> PolicyArch {
        PolicyArch { conv1: self.conv1, conv2: self.conv2, hidden: self.hidden, ..PolicyArch::for_board(self.board_size) }
    }

    pub fn game_config(&self) -> GameConfig {
        let players = match self.mode {
            TrainMode::Single => 1,
            TrainMode::Adversarial => 2,
        };
        GameConfig { board_size: self.board_size, players, ..GameConfig::default() }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::Config(m.to_string()));
        if self.batch == 0 || self.checkpoint_every == 0 {
            return bad("batch and checkpoint_every must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(0.0..=1.0).contains(&self.gamma) {
            return bad("lr must be positive and gamma in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return bad("baseline_decay must be in [0, 1)");
        }
        if self.mode == TrainMode::Adversarial && (self.pool_size == 0 || self.swap_interval == 0) {
            return bad("pool_size and swap_interval must be positive");
        }
        self.arch().validate().map_err(AgentError::Config)?;
        self.game_config().validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: PolicyParams,
    pub metrics: Vec<TrainMetrics>,
    /// Environment steps (turns by every seat).
    pub steps: usize,
    pub games: usize,
    /// Snapshot ids in the opponent pool at the end (self-play only).
    pub pool_ids: Vec<u64>,
}

struct Step {
    cache: ForwardCache,
    indices: Vec<usize>,
    probs: Vec<f64>,
    chosen: usize,
    reward: f64,
}

struct Episode {
    steps: Vec<Step>,
    stats: SeatStats,
    turns: usize,
}

/// Plays one training episode. The learner sits at `seat`; other seats use
/// `opponent`.
fn rollout(
    catalog: &Arc<TileCatalog>,
    cfg: &GameConfig,
    learner: &PolicyParams,
    opponent: Option<&PolicyParams>,
    seat: usize,
    game_seed: u64,
    action_seed: u64,
) -> Result<Episode, AgentError> {
    let mut state = GameState::new(Arc::clone(catalog), cfg.clone(), game_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(action_seed);
    let mut tracker = StatsTracker::new(cfg.players);
    let mut steps: Vec<Step> = Vec::new();
    let mut turns = 0;
    // differential (own minus best other) at the learner's last decision
    let diff = |s: &GameState| -> f64 {
        let sc = s.scores();
        let own = f64::from(sc[seat]);
        let other = sc.iter().enumerate().filter(|(p, _)| *p != seat).map(|(_, v)| f64::from(*v)).fold(0.0, f64::max);
        own - other
    };
    let mut last = diff(&state);
    loop {
        match state.draw() {
            Ok(_) => {}
            Err(EngineError::DeckEmpty) => break,
            Err(e) => return Err(e.into()),
        }
        let p = state.current_player();
        let before = state.players()[p].score;
        let action = if p == seat {
            let obs = observe(&state, p);
            let indices: Vec<usize> = state.legal_actions()?.iter_ones().collect();
            let (logits, cache) = learner.forward(&obs, &indices);
            let dist = Distribution::from_logits(indices, &logits, learner.arch.actions);
            let a = select_action(&dist, SelectMode::Sample, &mut rng);
            let chosen = dist.indices.binary_search(&a).expect("sampled a legal action");
            let now = diff(&state);
            if let Some(prev) = steps.last_mut() {
                prev.reward += now - last;
            }
            last = now;
            steps.push(Step { cache, indices: dist.indices, probs: dist.probs, chosen, reward: 0.0 });
            a
        } else {
            let params = opponent.expect("opponent for other seats");
            let obs = observe(&state, p);
            let dist = crate::dist::policy_forward(params, &obs, &state.legal_actions()?)?;
            select_action(&dist, SelectMode::Sample, &mut rng)
        };
        let events = state.apply(action)?;
        tracker.turn(&state, p, before, &events);
        turns += 1;
    }
    state.finalize()?;
    if let Some(prev) = steps.last_mut() {
        prev.reward += diff(&state) - last;
    }
    tracker.finish(&state);
    Ok(Episode { steps, stats: tracker.stats[seat], turns })
}

/// Gradient of `-adv·log π(a) - entropy·H(π)` over one episode.
fn episode_gradient(params: &PolicyParams, ep: &Episode, adv: &[f64], entropy: f64) -> (Vec<f64>, f64) {
    let mut grad = vec![0.0; params.weights.len()];
    let mut loss = 0.0;
    for (step, &a) in ep.steps.iter().zip(adv) {
        let h: f64 = -step.probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>();
        let dlogits: Vec<f64> = step
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let pg = a * (p - f64::from(u8::from(i == step.chosen)));
                let ent = if p > 0.0 { entropy * p * (p.ln() + h) } else { 0.0 };
                pg + ent
            })
            .collect();
        loss += -a * step.probs[step.chosen].max(f64::MIN_POSITIVE).ln() - entropy * h;
        params.backward(&step.cache, &step.indices, &dlogits, &mut grad);
    }
    (grad, loss)
}

fn thread_pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool")
}

/// Single-player training.
pub fn train_single_player(catalog: Arc<TileCatalog>, config: &TrainConfig) -> Result<TrainOutput, AgentError> {
    let cfg = TrainConfig { mode: TrainMode::Single, ..config.clone() };
    train(catalog, &cfg)
}

/// Self-play training against past snapshots.
pub fn train_self_play(catalog: Arc<TileCatalog>, config: &TrainConfig) -> Result<TrainOutput, AgentError> {
    let cfg = TrainConfig { mode: TrainMode::Adversarial, ..config.clone() };
    train(catalog, &cfg)
}

pub fn train(catalog: Arc<TileCatalog>, cfg: &TrainConfig) -> Result<TrainOutput, AgentError> {
    cfg.validate()?;
    let game = cfg.game_config();
    let mut params = PolicyParams::init(cfg.arch(), mix_seed(cfg.seed, 1));
    let mut opt = Adam::new(params.weights.len(), cfg.lr);
    let mut baseline: Vec<Option<f64>> = Vec::new();
    let mut pool: VecDeque<PolicyParams> = VecDeque::from([params.clone()]);
    let mut pool_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 2));
    let mut metrics = Vec::new();
    let mut window: Vec<SeatStats> = Vec::new();
    let (mut steps, mut games, mut updates) = (0, 0, 0usize);
    let workers = thread_pool(cfg.workers);
    let adversarial = cfg.mode == TrainMode::Adversarial;

    let mut done = 0;
    while done < cfg.episodes {
        let n = cfg.batch.min(cfg.episodes - done);
        // opponents are chosen up front so the batch is order-independent
        let opponents: Vec<Option<PolicyParams>> = (0..n)
            .map(|_| {
                adversarial.then(|| {
                    if cfg.pool_size == 1 {
                        params.clone()
                    } else {
                        pool[pool_rng.gen_range(0..pool.len())].clone()
                    }
                })
            })
            .collect();
        let episodes: Vec<Episode> = workers.install(|| {
            (0..n)
                .into_par_iter()
                .map(|k| {
                    let e = (done + k) as u64;
                    let seat = if adversarial { (e % 2) as usize } else { 0 };
                    rollout(
                        &catalog,
                        &game,
                        &params,
                        opponents[k].as_ref(),
                        seat,
                        mix_seed(cfg.seed, 1000 + 2 * e),
                        mix_seed(cfg.seed, 1001 + 2 * e),
                    )
                })
                .collect::<Result<Vec<_>, _>>()
        })?;

        // discounted returns and advantages against the per-step baseline
        let returns: Vec<Vec<f64>> = episodes
            .iter()
            .map(|ep| {
                let mut g = 0.0;
                let mut out = vec![0.0; ep.steps.len()];
                for (t, s) in ep.steps.iter().enumerate().rev() {
                    g = s.reward + cfg.gamma * g;
                    out[t] = g;
                }
                out
            })
            .collect();
        let horizon = returns.iter().map(Vec::len).max().unwrap_or(0);
        if baseline.len() < horizon {
            baseline.resize(horizon, None);
        }
        let mut batch_mean = vec![(0.0, 0usize); horizon];
        for r in &returns {
            for (t, g) in r.iter().enumerate() {
                batch_mean[t].0 += g;
                batch_mean[t].1 += 1;
            }
        }
        let advantages: Vec<Vec<f64>> = returns
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .map(|(t, g)| g - baseline[t].unwrap_or(batch_mean[t].0 / batch_mean[t].1 as f64))
                    .collect()
            })
            .collect();
        for (t, (sum, count)) in batch_mean.iter().enumerate() {
            let m = sum / *count as f64;
            baseline[t] = Some(match baseline[t] {
                Some(b) => cfg.baseline_decay * b + (1.0 - cfg.baseline_decay) * m,
                None => m,
            });
        }

        let grads: Vec<(Vec<f64>, f64)> = workers.install(|| {
            episodes
                .par_iter()
                .zip(advantages.par_iter())
                .map(|(ep, adv)| episode_gradient(&params, ep, adv, cfg.entropy))
                .collect()
        });
        let mut total = vec![0.0; params.weights.len()];
        let mut loss = 0.0;
        for (g, l) in &grads {
            for (t, x) in total.iter_mut().zip(g) {
                *t += x;
            }
            loss += l;
        }
        let scale = 1.0 / n as f64;
        total.iter_mut().for_each(|x| *x *= scale);
        if !loss.is_finite() || total.iter().any(|x| !x.is_finite()) {
            return Err(AgentError::Diverged { episode: done, last_good: Box::new(params) });
        }
        opt.step(&mut params.weights, &total);
        if !params.is_finite() {
            return Err(AgentError::Diverged { episode: done, last_good: Box::new(params) });
        }
        updates += 1;

        if adversarial && (cfg.pool_size == 1 || updates % cfg.swap_interval == 0) {
            params.id += 1;
            pool.push_back(params.clone());
            while pool.len() > cfg.pool_size {
                pool.pop_front();
            }
        }

        for ep in &episodes {
            steps += ep.turns;
            games += 1;
            window.push(ep.stats);
            if games % cfg.checkpoint_every == 0 {
                metrics.push(TrainMetrics::from_stats(metrics.len() + 1, games, &window));
                window.clear();
            }
        }
        done += n;
    }
    if !window.is_empty() {
        metrics.push(TrainMetrics::from_stats(metrics.len() + 1, games, &window));
    }
    Ok(TrainOutput { params, metrics, steps, games, pool_ids: pool.iter().map(|p| p.id).collect() })
}
