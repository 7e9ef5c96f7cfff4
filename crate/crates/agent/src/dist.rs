//! Masked action distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use saag_core::ActionMask;

use crate::error::AgentError;
use crate::net::PolicyParams;
use crate::observe::Observation;

/// Softmax over the given logits (the unmasked ones).
pub fn masked_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Probabilities over legal actions; every other index has probability 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    /// Legal action indices, ascending.
    pub indices: Vec<usize>,
    pub probs: Vec<f64>,
    /// Size of the full action space.
    pub len: usize,
}

impl Distribution {
    pub fn from_logits(indices: Vec<usize>, logits: &[f64], len: usize) -> Distribution {
        Distribution { probs: masked_softmax(logits), indices, len }
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.indices.binary_search(&index).map_or(0.0, |i| self.probs[i])
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (&i, &p) in self.indices.iter().zip(&self.probs) {
            out[i] = p;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMode {
    Sample,
    Greedy,
}

pub fn policy_forward(params: &PolicyParams, obs: &Observation, mask: &ActionMask) -> Result<Distribution, AgentError> {
    let indices: Vec<usize> = mask.iter_ones().collect();
    if indices.is_empty() {
        return Err(AgentError::EmptyMask);
    }
    let (logits, _) = params.forward(obs, &indices);
    Ok(Distribution::from_logits(indices, &logits, mask.len()))
}

/// Greedy takes the most probable action, lowest index on ties. Sample draws
/// one uniform number from `rng`.
pub fn select_action<R: Rng>(dist: &Distribution, mode: SelectMode, rng: &mut R) -> usize {
    match mode {
        SelectMode::Greedy => {
            let mut best = 0;
            for i in 1..dist.probs.len() {
                if dist.probs[i] > dist.probs[best] {
                    best = i;
                }
            }
            dist.indices[best]
        }
        SelectMode::Sample => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (i, p) in dist.probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return dist.indices[i];
                }
            }
            // rounding left u above the total; take the last positive entry
            let last = dist.probs.iter().rposition(|p| *p > 0.0).unwrap_or(dist.probs.len() - 1);
            dist.indices[last]
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn degenerate_and_uniform() {
        let d = Distribution::from_logits(vec![7], &[3.2], 10);
        assert_eq!(d.dense()[7], 1.0);
        let d = Distribution::from_logits(vec![1, 2, 3, 4], &[0.0; 4], 10);
        assert!(d.probs.iter().all(|p| (*p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn greedy_tie_takes_lowest_index() {
        let d = Distribution { indices: vec![2, 5, 9], probs: vec![0.2, 0.4, 0.4], len: 12 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_action(&d, SelectMode::Greedy, &mut rng), 5);
    }

    #[test]
    fn one_hot_in_both_modes() {
        let d = Distribution { indices: vec![1, 3], probs: vec![0.0, 1.0], len: 4 };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            assert_eq!(select_action(&d, SelectMode::Sample, &mut rng), 3);
        }
        assert_eq!(select_action(&d, SelectMode::Greedy, &mut rng), 3);
    }

    #[test]
    fn sampling_is_seeded() {
        let d = Distribution::from_logits((0..50).collect(), &(0..50).map(|i| (i % 7) as f64).collect::<Vec<_>>(), 50);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..30).map(|_| select_action(&d, SelectMode::Sample, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn empty_mask_rejected() {
        let p = PolicyParams::init(crate::net::PolicyArch::for_board(3), 0);
        let obs = Observation { side: 9, grid: vec![0.0; 405], scalars: [0.0; 5], current_tile: [0.0; 45] };
        assert!(matches!(policy_forward(&p, &obs, &ActionMask::new(216)), Err(AgentError::EmptyMask)));
    }

    proptest! {
        #[test]
        fn masked_probabilities_normalize(logits in proptest::collection::vec(-50.0f64..50.0, 1..40), len_extra in 0usize..20) {
            let n = logits.len();
            let indices: Vec<usize> = (0..n).map(|i| i * 2).collect();
            let d = Distribution::from_logits(indices.clone(), &logits, 2 * n + len_extra);
            let dense = d.dense();
            prop_assert!((dense.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            for (i, p) in dense.iter().enumerate() {
                if !indices.contains(&i) {
                    prop_assert_eq!(*p, 0.0);
                }
            }
        }
    }
}
