use serde::{Deserialize, Serialize};

use super::NetError;
use crate::augment::AugmentPolicy;
use crate::softlabel::BinGrid;

/// One convolutional block: `conv3³ → BN` (once or twice), then an optional
/// 2× max-pool, then ReLU.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub out_channels: usize,
    pub downsample: bool,
    pub convs: usize,
}

impl BlockSpec {
    pub const fn new(out_channels: usize, downsample: bool, convs: usize) -> Self {
        Self { out_channels, downsample, convs }
    }
}

/// Architecture: the 3³ blocks, a `1³ conv → BN → ReLU` block with
/// `head_channels` outputs, global average pooling, dropout and a `1³` conv
/// with bias to `n_bins` logits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub input_dims: [usize; 3],
    pub blocks: Vec<BlockSpec>,
    pub head_channels: usize,
    pub n_bins: usize,
}

impl NetConfig {
    /// Full-size network for 160×192×160 inputs and 50 output bins.
    pub fn full() -> Self {
        Self {
            input_dims: [160, 192, 160],
            blocks: [32, 64, 128, 256, 256].iter().map(|&c| BlockSpec::new(c, true, 2)).collect(),
            head_channels: 64,
            n_bins: 50,
        }
    }

    /// Small network for 16³ inputs and 10 bins.
    pub fn toy() -> Self {
        Self {
            input_dims: [16, 16, 16],
            blocks: vec![BlockSpec::new(4, true, 2), BlockSpec::new(8, true, 2), BlockSpec::new(8, false, 2)],
            head_channels: 8,
            n_bins: 10,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |m: String| Err(NetError::Config(m));
        if self.input_dims.contains(&0) {
            return bad("input dims must be positive".into());
        }
        if self.blocks.is_empty() {
            return bad("at least one block is required".into());
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.out_channels == 0 {
                return bad(format!("block {i} has zero channels"));
            }
            if !(1..=2).contains(&b.convs) {
                return bad(format!("block {i}: convs per block must be 1 or 2, got {}", b.convs));
            }
        }
        let downs = self.blocks.iter().filter(|b| b.downsample).count() as u32;
        let min_dim = *self.input_dims.iter().min().expect("three dims");
        if downs > min_dim.ilog2() {
            return bad(format!("{downs} downsampling blocks exceed log2 of the smallest input dim {min_dim}"));
        }
        if self.head_channels == 0 {
            return bad("head channels must be positive".into());
        }
        if self.n_bins < 2 {
            return bad("need at least two output bins".into());
        }
        Ok(())
    }

    /// Spatial dims of the feature map after every block.
    pub fn feature_dims(&self) -> Vec<[usize; 3]> {
        let mut d = self.input_dims;
        self.blocks
            .iter()
            .map(|b| {
                if b.downsample {
                    d = d.map(|x| x / 2);
                }
                d
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub total_steps: usize,
    pub eval_interval: usize,
    pub rng_seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub bn_momentum: f64,
    /// Standard deviation of the soft-label target.
    pub label_sigma: f64,
    pub grid: BinGrid,
    /// `None` trains on the volumes as given.
    pub augment: Option<AugmentPolicy>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 0.1,
            dropout: 0.6,
            batch_size: 10,
            total_steps: 80_000,
            eval_interval: 1_000,
            rng_seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            bn_momentum: 0.1,
            label_sigma: 0.1,
            grid: BinGrid::default(),
            augment: Some(AugmentPolicy::default()),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, net: &NetConfig) -> Result<(), NetError> {
        let bad = |m: &str| Err(NetError::Config(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight decay must be finite and non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size == 0 || self.total_steps == 0 || self.eval_interval == 0 {
            return bad("batch size, total steps and eval interval must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return bad("Adam betas must lie in [0, 1) and eps must be positive");
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) {
            return bad("batch-norm momentum must lie in [0, 1]");
        }
        if !(self.label_sigma > 0.0) {
            return bad("label sigma must be positive");
        }
        self.grid.validate().map_err(|e| NetError::Config(e.to_string()))?;
        if self.grid.n_bins != net.n_bins {
            return Err(NetError::Config(format!(
                "label grid has {} bins but the network outputs {}",
                self.grid.n_bins, net.n_bins
            )));
        }
        if let Some(p) = &self.augment {
            p.validate().map_err(|e| NetError::Config(e.to_string()))?;
        }
        Ok(())
    }
}
