//! Two-layer graph convolution scoring candidate placements.
//!
//! `H1 = ReLU(Â X W1)`, dropout on `H1` in training, `H2 = Â H1 W2`, mean of
//! `H2` over each candidate's vertices, a linear readout per candidate and a
//! softmax across candidates. `Â = D̃^{-1/2}(A + I)D̃^{-1/2}` over the
//! unweighted adjacency. Only rows that reach the candidate pooling are
//! evaluated: the candidate vertices and their neighbours.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use saag_core::candidate::NODE_FEATURES;
use saag_core::checkpoint::Checkpoint;
use saag_core::CheckpointError;

use crate::dataset::GraphExample;
use crate::error::SituationError;

pub const CHECKPOINT_KIND: &str = "gcn";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcnArch {
    pub d_in: usize,
    pub d_h: usize,
    pub d_out: usize,
    pub dropout: f64,
}

impl Default for GcnArch {
    fn default() -> Self {
        GcnArch { d_in: NODE_FEATURES, d_h: 32, d_out: 16, dropout: 0.5 }
    }
}

impl GcnArch {
    pub fn param_count(&self) -> usize {
        self.d_in * self.d_h + self.d_h * self.d_out + self.d_out + 1
    }

    fn offsets(&self) -> (usize, usize, usize, usize) {
        let w2 = self.d_in * self.d_h;
        let r = w2 + self.d_h * self.d_out;
        let b = r + self.d_out;
        (0, w2, r, b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub arch: GcnArch,
    /// `W1` (d_in × d_h, row-major), `W2` (d_h × d_out), readout weights, readout bias.
    pub weights: Vec<f64>,
    pub id: u64,
}

impl GcnParams {
    pub fn init(arch: GcnArch, seed: u64) -> GcnParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, w2, r, b) = arch.offsets();
        let mut w = vec![0.0; arch.param_count()];
        let mut glorot = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for x in &mut w[range] {
                *x = rng.gen_range(-bound..bound);
            }
        };
        glorot(0..w2, arch.d_in, arch.d_h);
        glorot(w2..r, arch.d_h, arch.d_out);
        glorot(r..b, arch.d_out, 1);
        GcnParams { arch, weights: w, id: 0 }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let arch = serde_json::to_value(self.arch).expect("arch serializes");
        Checkpoint::new(CHECKPOINT_KIND, &self.id.to_string(), arch, self.weights.clone())
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<GcnParams, CheckpointError> {
        let arch: GcnArch =
            serde_json::from_value(ckpt.header.arch.clone()).map_err(|e| CheckpointError::Header(e.to_string()))?;
        ckpt.expect(CHECKPOINT_KIND, &serde_json::to_value(arch).expect("arch serializes"))?;
        if arch.param_count() != ckpt.weights.len() {
            return Err(CheckpointError::Length { expected: arch.param_count(), found: ckpt.weights.len() });
        }
        let id = ckpt.header.id.parse().map_err(|_| CheckpointError::Header(format!("bad id '{}'", ckpt.header.id)))?;
        Ok(GcnParams { arch, weights: ckpt.weights.clone(), id })
    }
}

/// Normalized adjacency restricted to what the forward pass needs.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    /// Nodes whose `H1` rows are needed, ascending.
    rows: Vec<u32>,
    /// `Â X` for each entry of `rows`.
    ax: Vec<Vec<f64>>,
    /// For each group, for each of its vertices, the `(row index, Â weight)` terms.
    groups: Vec<Vec<Vec<(usize, f64)>>>,
    pub label: usize,
}

impl PreparedGraph {
    pub fn new(ex: &GraphExample) -> PreparedGraph {
        let n = ex.node_count();
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(a, b) in &ex.edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        let deg: Vec<f64> = adj.iter().map(|l| 1.0 + l.len() as f64).collect();
        let weight = |i: u32, j: u32| 1.0 / (deg[i as usize] * deg[j as usize]).sqrt();

        let mut needed = BTreeSet::new();
        for g in &ex.groups {
            for &v in &g.vertices {
                needed.insert(v);
                needed.extend(adj[v as usize].iter().copied());
            }
        }
        let rows: Vec<u32> = needed.into_iter().collect();
        let pos = |v: u32| rows.binary_search(&v).expect("needed row");
        let d_in = ex.features.first().map_or(0, |f| f.len());
        let ax = rows
            .iter()
            .map(|&i| {
                let mut acc = vec![0.0; d_in];
                for j in std::iter::once(i).chain(adj[i as usize].iter().copied()) {
                    let w = weight(i, j);
                    for (a, x) in acc.iter_mut().zip(&ex.features[j as usize]) {
                        *a += w * x;
                    }
                }
                acc
            })
            .collect();
        let groups = ex
            .groups
            .iter()
            .map(|g| {
                g.vertices
                    .iter()
                    .map(|&v| {
                        std::iter::once(v)
                            .chain(adj[v as usize].iter().copied())
                            .map(|j| (pos(j), weight(v, j)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        PreparedGraph { rows, ax, groups, label: ex.label }
    }

    pub fn candidates(&self) -> usize {
        self.groups.len()
    }
}

pub struct GcnCache {
    z1: Vec<Vec<f64>>,
    mask: Option<Vec<Vec<f64>>>,
    /// Mean over each group of `Â H1` rows.
    p: Vec<Vec<f64>>,
    pooled: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
    pub scores: Vec<f64>,
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Forward pass. `dropout_seed` switches on training mode.
pub fn forward(params: &GcnParams, g: &PreparedGraph, dropout_seed: Option<u64>) -> Result<GcnCache, SituationError> {
    let a = params.arch;
    let (_, o2, or, ob) = a.offsets();
    let w = &params.weights;
    if g.ax.first().is_some_and(|r| r.len() != a.d_in) {
        return Err(SituationError::Dimension(format!("features have {} columns, model expects {}", g.ax[0].len(), a.d_in)));
    }
    if w.len() != a.param_count() {
        return Err(SituationError::Dimension("weight vector length".into()));
    }
    let z1: Vec<Vec<f64>> = g
        .ax
        .iter()
        .map(|x| {
            let mut z = vec![0.0; a.d_h];
            for (i, xi) in x.iter().enumerate() {
                if *xi != 0.0 {
                    for (j, zj) in z.iter_mut().enumerate() {
                        *zj += xi * w[i * a.d_h + j];
                    }
                }
            }
            z
        })
        .collect();
    let mask = dropout_seed.filter(|_| a.dropout > 0.0).map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keep = 1.0 - a.dropout;
        z1.iter()
            .map(|row| row.iter().map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect())
            .collect::<Vec<Vec<f64>>>()
    });
    let h1 = |r: usize, j: usize| {
        let v = z1[r][j].max(0.0);
        match &mask {
            Some(m) => v * m[r][j],
            None => v,
        }
    };
    let p: Vec<Vec<f64>> = g
        .groups
        .iter()
        .map(|verts| {
            let mut acc = vec![0.0; a.d_h];
            for terms in verts {
                for &(r, wt) in terms {
                    for (j, aj) in acc.iter_mut().enumerate() {
                        *aj += wt * h1(r, j);
                    }
                }
            }
            let n = verts.len() as f64;
            acc.iter_mut().for_each(|x| *x /= n);
            acc
        })
        .collect();
    let pooled: Vec<Vec<f64>> = p
        .iter()
        .map(|pk| (0..a.d_out).map(|c| (0..a.d_h).map(|j| pk[j] * w[o2 + j * a.d_out + c]).sum()).collect())
        .collect();
    let scores: Vec<f64> = pooled.iter().map(|q: &Vec<f64>| w[ob] + (0..a.d_out).map(|c| q[c] * w[or + c]).sum::<f64>()).collect();
    let probs = softmax(&scores);
    Ok(GcnCache { z1, mask, p, pooled, probs, scores })
}

/// Cross-entropy against `g.label`; adds its gradient into `grad`.
pub fn backward(params: &GcnParams, g: &PreparedGraph, cache: &GcnCache, grad: &mut [f64]) -> f64 {
    let a = params.arch;
    let (_, o2, or, ob) = a.offsets();
    let w = &params.weights;
    let loss = -cache.probs[g.label].max(f64::MIN_POSITIVE).ln();
    let mut dz1 = vec![vec![0.0; a.d_h]; g.rows.len()];
    for (k, verts) in g.groups.iter().enumerate() {
        let ds = cache.probs[k] - f64::from(u8::from(k == g.label));
        grad[ob] += ds;
        let mut dpooled = vec![0.0; a.d_out];
        for c in 0..a.d_out {
            grad[or + c] += ds * cache.pooled[k][c];
            dpooled[c] = ds * w[or + c];
        }
        let mut dp = vec![0.0; a.d_h];
        for j in 0..a.d_h {
            for c in 0..a.d_out {
                grad[o2 + j * a.d_out + c] += cache.p[k][j] * dpooled[c];
                dp[j] += w[o2 + j * a.d_out + c] * dpooled[c];
            }
        }
        let n = verts.len() as f64;
        for terms in verts {
            for &(r, wt) in terms {
                for j in 0..a.d_h {
                    dz1[r][j] += wt * dp[j] / n;
                }
            }
        }
    }
    for (r, row) in dz1.iter_mut().enumerate() {
        for (j, d) in row.iter_mut().enumerate() {
            let gate = if cache.z1[r][j] > 0.0 { 1.0 } else { 0.0 };
            let m = cache.mask.as_ref().map_or(1.0, |m| m[r][j]);
            *d *= gate * m;
        }
        let x = &g.ax[r];
        for (i, xi) in x.iter().enumerate() {
            if *xi != 0.0 {
                for j in 0..a.d_h {
                    grad[i * a.d_h + j] += xi * row[j];
                }
            }
        }
    }
    loss
}
