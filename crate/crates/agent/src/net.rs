//! Policy network: two strided convolutions over the observation grid, an
//! optional hidden layer, and a dense head with one logit per action.
//! Forward and backward passes are hand-written over a flat weight vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use saag_core::checkpoint::Checkpoint;
use saag_core::action::MEEPLE_OPTIONS;
use saag_core::{ActionSpace, CheckpointError};

use crate::observe::{Observation, CHANNELS, SCALARS, TILE_FEATURES};

pub const CHECKPOINT_KIND: &str = "policy";
const K: usize = 3;
const STRIDE1: usize = 3;
const STRIDE2: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyArch {
    pub grid_side: usize,
    pub in_channels: usize,
    pub conv1: usize,
    pub conv2: usize,
    /// Width of the hidden layer before the head; 0 feeds features straight in.
    pub hidden: usize,
    /// Inputs appended to the flattened trunk output.
    pub extras: usize,
    pub actions: usize,
    /// Adds a learned bias per meeple option, shared by all placements.
    #[serde(default)]
    pub option_bias: bool,
}

impl PolicyArch {
    /// Default architecture for a `W × W` board.
    pub fn for_board(board_size: usize) -> PolicyArch {
        PolicyArch {
            grid_side: board_size * 3,
            in_channels: CHANNELS,
            conv1: 16,
            conv2: 32,
            hidden: 64,
            extras: SCALARS + TILE_FEATURES,
            actions: ActionSpace::new(board_size).len(),
            option_bias: true,
        }
    }

    pub fn side1(&self) -> usize {
        (self.grid_side - K) / STRIDE1 + 1
    }

    pub fn side2(&self) -> usize {
        (self.side1() - K) / STRIDE2 + 1
    }

    pub fn trunk_len(&self) -> usize {
        self.side2() * self.side2() * self.conv2
    }

    pub fn features(&self) -> usize {
        self.trunk_len() + self.extras
    }

    fn head_in(&self) -> usize {
        if self.hidden > 0 {
            self.hidden
        } else {
            self.features()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.grid_side < 3 * K || self.in_channels == 0 || self.conv1 == 0 || self.conv2 == 0 {
            return Err(format!("grid side {} too small for the trunk", self.grid_side));
        }
        if self.actions == 0 {
            return Err("empty action space".into());
        }
        Ok(())
    }

    fn offsets(&self) -> Offsets {
        let mut at = 0;
        let mut take = |n: usize| {
            let o = at;
            at += n;
            o
        };
        let w1 = take(self.conv1 * self.in_channels * K * K);
        let b1 = take(self.conv1);
        let w2 = take(self.conv2 * self.conv1 * K * K);
        let b2 = take(self.conv2);
        let (wh, bh) = if self.hidden > 0 {
            (take(self.hidden * self.features()), take(self.hidden))
        } else {
            (0, 0)
        };
        let wo = take(self.actions * self.head_in());
        let bo = take(self.actions);
        let ob = if self.option_bias { take(MEEPLE_OPTIONS) } else { 0 };
        Offsets { w1, b1, w2, b2, wh, bh, wo, bo, ob, len: at }
    }

    pub fn param_count(&self) -> usize {
        self.offsets().len
    }
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    wh: usize,
    bh: usize,
    wo: usize,
    bo: usize,
    ob: usize,
    len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub arch: PolicyArch,
    pub weights: Vec<f64>,
    /// Snapshot id; increases as training publishes new snapshots.
    pub id: u64,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    feat: Vec<f64>,
    hidden: Vec<f64>,
}

impl PolicyParams {
    pub fn init(arch: PolicyArch, seed: u64) -> PolicyParams {
        let o = arch.offsets();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![0.0; o.len];
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, scale: f64| {
            let bound = scale * (6.0 / fan_in as f64).sqrt();
            for x in &mut w[range] {
                *x = rng.gen_range(-bound..bound);
            }
        };
        fill(o.w1..o.b1, arch.in_channels * K * K, 1.0);
        fill(o.w2..o.b2, arch.conv1 * K * K, 1.0);
        if arch.hidden > 0 {
            fill(o.wh..o.bh, arch.features(), 1.0);
        }
        fill(o.wo..o.bo, arch.head_in(), 0.1);
        PolicyParams { arch, weights: w, id: 0 }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let arch = serde_json::to_value(self.arch).expect("arch serializes");
        Checkpoint::new(CHECKPOINT_KIND, &self.id.to_string(), arch, self.weights.clone())
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<PolicyParams, CheckpointError> {
        let arch: PolicyArch =
            serde_json::from_value(ckpt.header.arch.clone()).map_err(|e| CheckpointError::Header(e.to_string()))?;
        ckpt.expect(CHECKPOINT_KIND, &serde_json::to_value(arch).expect("arch serializes"))?;
        if arch.param_count() != ckpt.weights.len() {
            return Err(CheckpointError::Length { expected: arch.param_count(), found: ckpt.weights.len() });
        }
        let id = ckpt.header.id.parse().map_err(|_| CheckpointError::Header(format!("bad id '{}'", ckpt.header.id)))?;
        Ok(PolicyParams { arch, weights: ckpt.weights.clone(), id })
    }

    /// Logits for the listed actions.
    pub fn forward(&self, obs: &Observation, actions: &[usize]) -> (Vec<f64>, ForwardCache) {
        let extras = obs.extras();
        self.forward_raw(&obs.grid, &extras, actions)
    }

    /// Forward pass on a raw `grid_side² × in_channels` grid and extras vector.
    pub fn forward_raw(&self, grid: &[f64], extras: &[f64], actions: &[usize]) -> (Vec<f64>, ForwardCache) {
        let a = &self.arch;
        let o = a.offsets();
        let w = &self.weights;
        assert_eq!(grid.len(), a.grid_side * a.grid_side * a.in_channels, "grid size");
        assert_eq!(extras.len(), a.extras, "extras size");
        let (s0, s1, s2) = (a.grid_side, a.side1(), a.side2());

        // conv1: HWC input -> [c1][s1][s1]
        let mut a1 = vec![0.0; a.conv1 * s1 * s1];
        for oc in 0..a.conv1 {
            for y in 0..s1 {
                for x in 0..s1 {
                    let mut z = w[o.b1 + oc];
                    for ky in 0..K {
                        for kx in 0..K {
                            let base = ((y * STRIDE1 + ky) * s0 + x * STRIDE1 + kx) * a.in_channels;
                            for ic in 0..a.in_channels {
                                z += w[o.w1 + ((oc * a.in_channels + ic) * K + ky) * K + kx] * grid[base + ic];
                            }
                        }
                    }
                    a1[(oc * s1 + y) * s1 + x] = z.max(0.0);
                }
            }
        }
        // conv2: [c1][s1][s1] -> [c2][s2][s2]
        let mut a2 = vec![0.0; a.conv2 * s2 * s2];
        for oc in 0..a.conv2 {
            for y in 0..s2 {
                for x in 0..s2 {
                    let mut z = w[o.b2 + oc];
                    for ic in 0..a.conv1 {
                        for ky in 0..K {
                            for kx in 0..K {
                                z += w[o.w2 + ((oc * a.conv1 + ic) * K + ky) * K + kx]
                                    * a1[(ic * s1 + y * STRIDE2 + ky) * s1 + x * STRIDE2 + kx];
                            }
                        }
                    }
                    a2[(oc * s2 + y) * s2 + x] = z.max(0.0);
                }
            }
        }
        let mut feat = a2.clone();
        feat.extend_from_slice(extras);

        let nf = a.features();
        let hidden: Vec<f64> = (0..a.hidden)
            .map(|j| {
                let row = &w[o.wh + j * nf..o.wh + (j + 1) * nf];
                (w[o.bh + j] + dot(row, &feat)).max(0.0)
            })
            .collect();
        let hin: &[f64] = if a.hidden > 0 { &hidden } else { &feat };
        let ni = hin.len();
        let logits = actions
            .iter()
            .map(|&act| {
                let shared = if a.option_bias { w[o.ob + act % MEEPLE_OPTIONS] } else { 0.0 };
                w[o.bo + act] + shared + dot(&w[o.wo + act * ni..o.wo + (act + 1) * ni], hin)
            })
            .collect();
        (logits, ForwardCache { input: grid.to_vec(), a1, a2, feat, hidden })
    }

    /// Accumulates into `grad` the gradient of a loss whose derivative with
    /// respect to the logits of `actions` is `dlogits`.
    pub fn backward(&self, cache: &ForwardCache, actions: &[usize], dlogits: &[f64], grad: &mut [f64]) {
        let a = &self.arch;
        let o = a.offsets();
        let w = &self.weights;
        let (s0, s1, s2) = (a.grid_side, a.side1(), a.side2());
        let hin: &[f64] = if a.hidden > 0 { &cache.hidden } else { &cache.feat };
        let ni = hin.len();

        let mut dhin = vec![0.0; ni];
        for (&act, &d) in actions.iter().zip(dlogits) {
            if d == 0.0 {
                continue;
            }
            grad[o.bo + act] += d;
            if a.option_bias {
                grad[o.ob + act % MEEPLE_OPTIONS] += d;
            }
            let row = o.wo + act * ni;
            for i in 0..ni {
                grad[row + i] += d * hin[i];
                dhin[i] += d * w[row + i];
            }
        }

        let nf = a.features();
        let dfeat = if a.hidden > 0 {
            let mut dfeat = vec![0.0; nf];
            for j in 0..a.hidden {
                if cache.hidden[j] <= 0.0 {
                    continue;
                }
                let d = dhin[j];
                grad[o.bh + j] += d;
                let row = o.wh + j * nf;
                for i in 0..nf {
                    grad[row + i] += d * cache.feat[i];
                    dfeat[i] += d * w[row + i];
                }
            }
            dfeat
        } else {
            dhin
        };

        let mut da1 = vec![0.0; a.conv1 * s1 * s1];
        for oc in 0..a.conv2 {
            for y in 0..s2 {
                for x in 0..s2 {
                    let idx = (oc * s2 + y) * s2 + x;
                    if cache.a2[idx] <= 0.0 {
                        continue;
                    }
                    let d = dfeat[idx];
                    grad[o.b2 + oc] += d;
                    for ic in 0..a.conv1 {
                        for ky in 0..K {
                            for kx in 0..K {
                                let wi = o.w2 + ((oc * a.conv1 + ic) * K + ky) * K + kx;
                                let ai = (ic * s1 + y * STRIDE2 + ky) * s1 + x * STRIDE2 + kx;
                                grad[wi] += d * cache.a1[ai];
                                da1[ai] += d * w[wi];
                            }
                        }
                    }
                }
            }
        }
        for oc in 0..a.conv1 {
            for y in 0..s1 {
                for x in 0..s1 {
                    let idx = (oc * s1 + y) * s1 + x;
                    if cache.a1[idx] <= 0.0 {
                        continue;
                    }
                    let d = da1[idx];
                    grad[o.b1 + oc] += d;
                    for ky in 0..K {
                        for kx in 0..K {
                            let base = ((y * STRIDE1 + ky) * s0 + x * STRIDE1 + kx) * a.in_channels;
                            for ic in 0..a.in_channels {
                                grad[o.w1 + ((oc * a.in_channels + ic) * K + ky) * K + kx] += d * cache.input[base + ic];
                            }
                        }
                    }
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
