use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::NetConfig;
use super::net::Net;
use super::params::{Param, ParamKind, ParamStore};
use super::NetError;
use crate::scalar::Real;

pub const CHECKPOINT_FORMAT: &str = "kmotion-tinynet";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StoredTensor {
    name: String,
    shape: Vec<usize>,
    kind: ParamKind,
    data: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    adam_m: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    adam_v: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Stored {
    format: String,
    version: u32,
    config: NetConfig,
    tensors: Vec<StoredTensor>,
}

#[derive(Deserialize)]
struct Header {
    format: Option<String>,
    version: Option<u32>,
}

fn to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

impl<T: Real> Net<T> {
    pub fn to_json(&self) -> String {
        let tensors = self
            .params()
            .entries()
            .iter()
            .map(|p| StoredTensor {
                name: p.name.clone(),
                shape: p.shape.clone(),
                kind: p.kind,
                data: to_f64(&p.value),
                adam_m: to_f64(&p.m),
                adam_v: to_f64(&p.v),
            })
            .collect();
        let stored = Stored {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config().clone(),
            tensors,
        };
        serde_json::to_string(&stored).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, NetError> {
        let bad = |m: String| NetError::Checkpoint(m);
        let header: Header = serde_json::from_str(text).map_err(|e| bad(format!("not a checkpoint file: {e}")))?;
        if header.format.as_deref() != Some(CHECKPOINT_FORMAT) {
            return Err(bad(format!("unknown checkpoint format {:?}", header.format)));
        }
        match header.version {
            Some(CHECKPOINT_VERSION) => {}
            v => return Err(bad(format!("unsupported checkpoint version {v:?}, expected {CHECKPOINT_VERSION}"))),
        }
        let stored: Stored = serde_json::from_str(text).map_err(|e| bad(format!("malformed checkpoint: {e}")))?;
        let mut params = ParamStore::new();
        for t in stored.tensors {
            if t.data.len() != t.shape.iter().product::<usize>() {
                return Err(bad(format!("tensor '{}' has {} values for shape {:?}", t.name, t.data.len(), t.shape)));
            }
            let mut p = Param::new(t.name, t.shape, t.kind, t.data.into_iter().map(T::lit).collect());
            if p.kind.trainable() && !t.adam_m.is_empty() {
                if t.adam_m.len() != p.len() || t.adam_v.len() != p.len() {
                    return Err(bad(format!("moment shape mismatch for '{}'", p.name)));
                }
                p.m = t.adam_m.into_iter().map(T::lit).collect();
                p.v = t.adam_v.into_iter().map(T::lit).collect();
            }
            params.push(p);
        }
        if !params.all_finite() {
            return Err(bad("checkpoint contains non-finite values".into()));
        }
        Net::from_params(stored.config, params)
    }

    pub fn save(&self, path: &Path) -> Result<(), NetError> {
        std::fs::write(path, self.to_json()).map_err(|e| NetError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, NetError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| NetError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
