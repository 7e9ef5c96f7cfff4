//! Training the situation model with softmax-over-candidates cross-entropy.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use saag_core::{mix_seed, Adam};

use crate::dataset::GraphExample;
use crate::error::SituationError;
use crate::gcn::{backward, forward, GcnArch, GcnParams, PreparedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GcnConfig {
    pub arch: GcnArch,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    /// Share of games held out for validation.
    pub val_fraction: f64,
    /// Threads; 0 uses every core.
    pub workers: usize,
}

impl Default for GcnConfig {
    fn default() -> Self {
        GcnConfig { arch: GcnArch::default(), lr: 0.01, epochs: 10, batch: 32, seed: 0, val_fraction: 0.2, workers: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_top1: f64,
    pub val_top3: f64,
}

#[derive(Debug, Clone)]
pub struct GcnTrainOutput {
    pub params: GcnParams,
    pub epochs: Vec<EpochMetrics>,
    pub mean_candidates: f64,
    /// `1 / mean_candidates`.
    pub baseline_top1: f64,
    pub train_games: Vec<usize>,
    pub val_games: Vec<usize>,
}

/// Splits game ids into (train, validation). With a single game both sides get it.
pub fn split_by_game(examples: &[GraphExample], val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut games: Vec<usize> = examples.iter().map(|e| e.game).collect::<BTreeSet<_>>().into_iter().collect();
    if games.len() < 2 {
        return (games.clone(), games);
    }
    games.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((games.len() as f64 * val_fraction).round() as usize).clamp(1, games.len() - 1);
    let mut val = games[..n_val].to_vec();
    let mut train = games[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    (train, val)
}

/// Position of the label when candidates are ranked by probability, ties to
/// the lower index.
pub fn label_rank(probs: &[f64], label: usize) -> usize {
    let p = probs[label];
    probs.iter().enumerate().filter(|(i, q)| **q > p || (**q == p && *i < label)).count()
}

/// Mean loss, top-1 and top-3 accuracy in inference mode.
pub fn evaluate(params: &GcnParams, graphs: &[PreparedGraph]) -> Result<(f64, f64, f64), SituationError> {
    if graphs.is_empty() {
        return Ok((0.0, 0.0, 0.0));
    }
    let rows: Vec<(f64, usize)> = graphs
        .par_iter()
        .map(|g| {
            let c = forward(params, g, None)?;
            Ok((-c.probs[g.label].max(f64::MIN_POSITIVE).ln(), label_rank(&c.probs, g.label)))
        })
        .collect::<Result<_, SituationError>>()?;
    let n = rows.len() as f64;
    Ok((
        rows.iter().map(|r| r.0).sum::<f64>() / n,
        rows.iter().filter(|r| r.1 == 0).count() as f64 / n,
        rows.iter().filter(|r| r.1 < 3).count() as f64 / n,
    ))
}

pub fn train_situation_model(examples: &[GraphExample], cfg: &GcnConfig) -> Result<GcnTrainOutput, SituationError> {
    if examples.is_empty() {
        return Err(SituationError::EmptyDataset);
    }
    if cfg.batch == 0 || !(cfg.lr > 0.0) || !(0.0..1.0).contains(&cfg.arch.dropout) || !(0.0..1.0).contains(&cfg.val_fraction) {
        return Err(SituationError::Config("batch, lr, dropout or val_fraction out of range".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().expect("thread pool");
    pool.install(|| train_inner(examples, cfg))
}

fn train_inner(examples: &[GraphExample], cfg: &GcnConfig) -> Result<GcnTrainOutput, SituationError> {
    let (train_games, val_games) = split_by_game(examples, cfg.val_fraction, mix_seed(cfg.seed, 1));
    let prepared: Vec<PreparedGraph> = examples.par_iter().map(PreparedGraph::new).collect();
    let pick = |games: &[usize]| -> Vec<usize> {
        examples.iter().enumerate().filter(|(_, e)| games.binary_search(&e.game).is_ok()).map(|(i, _)| i).collect()
    };
    let train_idx = pick(&train_games);
    let val_graphs: Vec<PreparedGraph> = pick(&val_games).into_iter().map(|i| prepared[i].clone()).collect();
    let mean_candidates = examples.iter().map(|e| e.groups.len() as f64).sum::<f64>() / examples.len() as f64;

    let mut params = GcnParams::init(cfg.arch, mix_seed(cfg.seed, 2));
    let mut opt = Adam::new(params.weights.len(), cfg.lr);
    let mut order = train_idx.clone();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 3));
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch) {
            let parts: Vec<(Vec<f64>, f64)> = batch
                .par_iter()
                .map(|&i| {
                    let g = &prepared[i];
                    let seed = mix_seed(cfg.seed, ((epoch as u64) << 32) | i as u64);
                    let cache = forward(&params, g, Some(seed))?;
                    let mut grad = vec![0.0; params.weights.len()];
                    let loss = backward(&params, g, &cache, &mut grad);
                    Ok((grad, loss))
                })
                .collect::<Result<_, SituationError>>()?;
            let mut total = vec![0.0; params.weights.len()];
            for (g, l) in &parts {
                for (t, x) in total.iter_mut().zip(g) {
                    *t += x;
                }
                epoch_loss += l;
            }
            let scale = 1.0 / batch.len() as f64;
            total.iter_mut().for_each(|x| *x *= scale);
            if !epoch_loss.is_finite() || total.iter().any(|x| !x.is_finite()) {
                return Err(SituationError::NonFinite(epoch));
            }
            opt.step(&mut params.weights, &total);
        }
        let (val_loss, val_top1, val_top3) = evaluate(&params, &val_graphs)?;
        epochs.push(EpochMetrics {
            epoch: epoch + 1,
            train_loss: epoch_loss / order.len().max(1) as f64,
            val_loss,
            val_top1,
            val_top3,
        });
    }
    params.id = cfg.epochs as u64;
    Ok(GcnTrainOutput {
        params,
        epochs,
        mean_candidates,
        baseline_top1: 1.0 / mean_candidates,
        train_games,
        val_games,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Group;
    use saag_core::candidate::NODE_FEATURES;

    fn toy(game: usize, label: usize) -> GraphExample {
        let mut f = vec![[0.0; NODE_FEATURES]; 5];
        f[0][1] = 1.0;
        f[1][0] = 1.0;
        for r in f.iter_mut().skip(2) {
            r[2] = 1.0;
            r[6] = 1.0;
        }
        GraphExample {
            game,
            turn: 0,
            tile: "X".into(),
            features: f,
            edges: vec![(0, 2), (1, 3), (0, 1)],
            groups: (2..5).map(|v| Group { x: v as u16, y: 0, rotation: 0, vertices: vec![v] }).collect(),
            label,
        }
    }

    #[test]
    fn single_example_is_memorized() {
        let cfg = GcnConfig { epochs: 300, batch: 1, arch: GcnArch { dropout: 0.0, ..GcnArch::default() }, ..GcnConfig::default() };
        let out = train_situation_model(&[toy(0, 1)], &cfg).unwrap();
        let last = out.epochs.last().unwrap();
        assert!(last.train_loss < 0.01, "{last:?}");
        assert_eq!(last.val_top1, 1.0);
    }

    #[test]
    fn split_keeps_games_whole() {
        let ex: Vec<_> = (0..10).flat_map(|g| [toy(g, 0), toy(g, 1)]).collect();
        let (tr, va) = split_by_game(&ex, 0.2, 4);
        assert_eq!(va.len(), 2);
        assert_eq!(tr.len(), 8);
        assert!(tr.iter().all(|g| !va.contains(g)));
    }

    #[test]
    fn rank_ties_prefer_lower_index() {
        assert_eq!(label_rank(&[0.4, 0.4, 0.2], 0), 0);
        assert_eq!(label_rank(&[0.4, 0.4, 0.2], 1), 1);
        assert_eq!(label_rank(&[0.1, 0.4, 0.5], 0), 2);
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(matches!(train_situation_model(&[], &GcnConfig::default()), Err(SituationError::EmptyDataset)));
    }

    #[test]
    fn deterministic() {
        let ex: Vec<_> = (0..6).flat_map(|g| [toy(g, g % 3), toy(g, 1)]).collect();
        let cfg = GcnConfig { epochs: 3, batch: 4, seed: 9, ..GcnConfig::default() };
        let a = train_situation_model(&ex, &cfg).unwrap();
        let b = train_situation_model(&ex, &GcnConfig { workers: 1, ..cfg }).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.epochs, b.epochs);
    }
}
