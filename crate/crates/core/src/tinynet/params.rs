use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    ConvWeight,
    Bias,
    BnScale,
    BnShift,
    RunningMean,
    RunningVar,
}

impl ParamKind {
    pub fn trainable(self) -> bool {
        !matches!(self, Self::RunningMean | Self::RunningVar)
    }

    /// Batch-norm affine parameters and running statistics are not decayed.
    pub fn decays(self) -> bool {
        matches!(self, Self::ConvWeight | Self::Bias)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub kind: ParamKind,
    pub value: Vec<T>,
    /// AdamW first and second moments; empty for non-trainable tensors.
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Real> Param<T> {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, kind: ParamKind, value: Vec<T>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), value.len(), "parameter shape/length mismatch");
        let (m, v) = if kind.trainable() {
            (vec![T::zero(); value.len()], vec![T::zero(); value.len()])
        } else {
            (Vec::new(), Vec::new())
        };
        Self { name: name.into(), shape, kind, value, m, v }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Ordered named tensors. Layer code addresses entries by index.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ParamStore<T> {
    entries: Vec<Param<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn push(&mut self, p: Param<T>) -> usize {
        assert!(self.index_of(&p.name).is_none(), "duplicate parameter '{}'", p.name);
        self.entries.push(p);
        self.entries.len() - 1
    }

    pub fn entries(&self) -> &[Param<T>] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Param<T>] {
        &mut self.entries
    }

    pub fn get(&self, i: usize) -> &Param<T> {
        &self.entries[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Param<T> {
        &mut self.entries[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|p| p.name == name)
    }

    pub fn by_name(&self, name: &str) -> Option<&Param<T>> {
        self.entries.iter().find(|p| p.name == name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_trainable(&self) -> usize {
        self.entries.iter().filter(|p| p.kind.trainable()).map(Param::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|p| p.value.iter().chain(&p.m).chain(&p.v).all(|x| x.is_finite()))
    }

    /// Zero gradients shaped like the trainable entries.
    pub fn zero_grads(&self) -> Grads<T> {
        Grads {
            g: self
                .entries
                .iter()
                .map(|p| if p.kind.trainable() { vec![T::zero(); p.len()] } else { Vec::new() })
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .flat_map(|(a, b)| a.value.iter().zip(&b.value))
            .map(|(x, y)| (*x - *y).abs().to_f64_lossy())
            .fold(0.0, f64::max)
    }
}

/// Gradients aligned with [`ParamStore`] entries; non-trainable slots are empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Grads<T> {
    pub g: Vec<Vec<T>>,
}

impl<T: Real> Grads<T> {
    pub fn max_abs(&self) -> f64 {
        self.g.iter().flatten().map(|x| x.abs().to_f64_lossy()).fold(0.0, f64::max)
    }
}

/// He-normal draws with standard deviation `sqrt(2 / fan_in)`.
pub(crate) fn he_normal<T: Real>(n: usize, fan_in: usize, rng: &mut impl Rng) -> Vec<T> {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    (0..n).map(|_| T::lit(normal.sample(rng))).collect()
}
