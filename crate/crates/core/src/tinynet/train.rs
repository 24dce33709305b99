use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::TrainConfig;
use super::net::{Batch, Net};
use super::optim::adamw_step;
use super::NetError;
use crate::augment::apply_training_pipeline;
use crate::scalar::Real;
use crate::softlabel::{encode, js_divergence, score_histogram, SoftLabel};
use crate::volume::Volume3D;

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVolume<T> {
    pub volume: Volume3D<T>,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalRecord {
    pub step: usize,
    /// Mean training loss since the previous evaluation.
    pub loss: f64,
    pub val_js: f64,
    pub val_r2: f64,
    pub val_rmse: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub records: Vec<EvalRecord>,
}

impl History {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn best(&self) -> Option<&EvalRecord> {
        self.records.iter().min_by(|a, b| a.val_js.total_cmp(&b.val_js))
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    /// Parameters at the evaluation with the lowest validation JS divergence.
    pub best: Net<T>,
    pub best_step: usize,
    pub last: Net<T>,
    pub history: History,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationMetrics {
    pub js: f64,
    pub r2: f64,
    pub rmse: f64,
}

/// Validation metrics of predicted against true scores. The JS divergence
/// compares the two score histograms on `cfg.grid`.
pub fn validation_metrics(pred: &[f64], truth: &[f64], cfg: &TrainConfig) -> Result<ValidationMetrics, NetError> {
    let label_err = |e: crate::softlabel::LabelError| NetError::Shape(e.to_string());
    let js = js_divergence(
        &score_histogram(truth, &cfg.grid).map_err(label_err)?,
        &score_histogram(pred, &cfg.grid).map_err(label_err)?,
    );
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    let sst: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    Ok(ValidationMetrics { js, r2, rmse: (sse / n).sqrt() })
}

fn evaluate<T: Real>(net: &Net<T>, val: &[LabeledVolume<T>], cfg: &TrainConfig) -> Result<ValidationMetrics, NetError> {
    let vols: Vec<Volume3D<T>> = val.iter().map(|v| v.volume.clone()).collect();
    let pred = net.predict_batch(&vols, &cfg.grid, cfg.batch_size)?;
    let truth: Vec<f64> = val.iter().map(|v| v.score).collect();
    validation_metrics(&pred, &truth, cfg)
}

/// Minibatch AdamW training with soft-label KL loss, on-the-fly augmentation
/// and model selection by validation JS divergence.
///
/// Evaluations run every `eval_interval` steps and after the last step.
pub fn train<T: Real>(
    mut net: Net<T>,
    cfg: &TrainConfig,
    train_set: &[LabeledVolume<T>],
    val_set: &[LabeledVolume<T>],
) -> Result<TrainOutcome<T>, NetError> {
    cfg.validate(net.config())?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(NetError::EmptySplit { train: train_set.len(), val: val_set.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let targets: Vec<SoftLabel<T>> = train_set.iter().map(|v| encode(v.score, cfg.label_sigma, &cfg.grid)).collect();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;

    let mut history = History::default();
    let mut best: Option<(f64, usize, Net<T>)> = None;
    let (mut loss_sum, mut loss_count) = (0.0, 0usize);

    for step in 1..=cfg.total_steps {
        let mut idx = Vec::with_capacity(cfg.batch_size);
        while idx.len() < cfg.batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            idx.push(order[cursor]);
            cursor += 1;
        }
        let vols: Vec<Volume3D<T>> = idx
            .iter()
            .map(|&i| match &cfg.augment {
                Some(policy) => apply_training_pipeline(&train_set[i].volume, policy, &mut rng),
                None => train_set[i].volume.clone(),
            })
            .collect();
        let batch = Batch::from_volumes(&vols)?;
        let batch_targets: Vec<SoftLabel<T>> = idx.iter().map(|&i| targets[i].clone()).collect();
        let dropout_seed = rng.random::<u64>();
        let step_result = net.loss_and_grad(&batch, &batch_targets, cfg.dropout, dropout_seed);
        let (loss, grads, out) = match step_result {
            Ok(r) => r,
            Err(e @ NetError::NonFinite { .. }) => {
                return Err(NetError::Diverged { step, source: Box::new(e), history })
            }
            Err(e) => return Err(e),
        };
        adamw_step(net.params_mut(), &grads, cfg, step as u64);
        net.update_running_stats(&out.bn_stats, cfg.bn_momentum);
        if !net.params().all_finite() {
            let e = NetError::NonFinite { layer: "parameters".into(), index: 0 };
            return Err(NetError::Diverged { step, source: Box::new(e), history });
        }
        loss_sum += loss;
        loss_count += 1;

        if step % cfg.eval_interval == 0 || step == cfg.total_steps {
            let m = evaluate(&net, val_set, cfg)?;
            history.records.push(EvalRecord {
                step,
                loss: loss_sum / loss_count as f64,
                val_js: m.js,
                val_r2: m.r2,
                val_rmse: m.rmse,
            });
            (loss_sum, loss_count) = (0.0, 0);
            if best.as_ref().is_none_or(|(js, _, _)| m.js < *js) {
                best = Some((m.js, step, net.clone()));
            }
        }
    }
    let (_, best_step, best_net) = best.expect("at least one evaluation");
    Ok(TrainOutcome { best: best_net, best_step, last: net, history })
}
