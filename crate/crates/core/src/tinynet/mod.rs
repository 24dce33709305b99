//! A small 3D convolutional network with hand-written backward passes,
//! AdamW and a validation-JS model-selection loop.
//!
//! Block layout is `conv3³ → BN → [conv3³ → BN] → maxpool2 → ReLU`, followed
//! by a `1³ conv → BN → ReLU` block, global average pooling, dropout and a
//! `1³` conv with bias to the bin logits.

mod checkpoint;
mod config;
mod layers;
mod net;
mod optim;
mod params;
mod train;

pub use checkpoint::{CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{BlockSpec, NetConfig, TrainConfig};
pub use layers::BnStats;
pub use net::{Batch, ForwardOutput, Mode, Net, Trace};
pub use optim::adamw_step;
pub use params::{Grads, Param, ParamKind, ParamStore};
pub use train::{train, validation_metrics, EvalRecord, History, LabeledVolume, TrainOutcome, ValidationMetrics};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite activation in layer '{layer}' at flat index {index}")]
    NonFinite { layer: String, index: usize },
    #[error("empty split (train = {train}, validation = {val})")]
    EmptySplit { train: usize, val: usize },
    #[error("training diverged at step {step}: {source}")]
    Diverged {
        step: usize,
        #[source]
        source: Box<NetError>,
        history: History,
    },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
