use super::config::TrainConfig;
use super::params::{Grads, ParamStore};
use crate::scalar::Real;

/// One AdamW update at 1-based `step`.
///
/// Decayed tensors first shrink by `lr·wd·θ`; then the bias-corrected Adam
/// step `lr·m̂/(√v̂ + ε)` is subtracted.
pub fn adamw_step<T: Real>(params: &mut ParamStore<T>, grads: &Grads<T>, cfg: &TrainConfig, step: u64) {
    assert!(step >= 1, "AdamW steps are 1-based");
    assert_eq!(grads.g.len(), params.len(), "gradients must align with parameters");
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let bc1 = 1.0 - b1.powf(step as f64);
    let bc2 = 1.0 - b2.powf(step as f64);
    let lr = T::lit(cfg.learning_rate);
    let shrink = T::lit(cfg.learning_rate * cfg.weight_decay);
    let (tb1, tb2) = (T::lit(b1), T::lit(b2));
    let (inv_bc1, inv_bc2) = (T::lit(1.0 / bc1), T::lit(1.0 / bc2));
    let eps = T::lit(cfg.eps);
    for (p, g) in params.entries_mut().iter_mut().zip(&grads.g) {
        if !p.kind.trainable() {
            continue;
        }
        assert_eq!(g.len(), p.value.len(), "gradient shape mismatch for '{}'", p.name);
        let decay = p.kind.decays() && cfg.weight_decay > 0.0;
        for i in 0..g.len() {
            if decay {
                let w = p.value[i];
                p.value[i] = w - shrink * w;
            }
            p.m[i] = tb1 * p.m[i] + (T::one() - tb1) * g[i];
            p.v[i] = tb2 * p.v[i] + (T::one() - tb2) * g[i] * g[i];
            let mhat = p.m[i] * inv_bc1;
            let vhat = p.v[i] * inv_bc2;
            p.value[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
}
