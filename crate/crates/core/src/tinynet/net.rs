use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::NetConfig;
use super::layers::{self, BnStats};
use super::params::{he_normal, Grads, Param, ParamKind, ParamStore};
use super::NetError;
use crate::scalar::Real;
use crate::softlabel::{decode, BinGrid, SoftLabel};
use crate::volume::Volume3D;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    /// Batch statistics in batch norm and inverted dropout with the given seed.
    Train {
        dropout: f64,
        seed: u64,
    },
    Eval,
}

/// `[n, 1, d2, d1, d0]` input batch.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<T> {
    pub n: usize,
    pub dims: [usize; 3],
    pub data: Vec<T>,
}

impl<T: Real> Batch<T> {
    pub fn new(n: usize, dims: [usize; 3], data: Vec<T>) -> Result<Self, NetError> {
        if data.len() != n * dims[0] * dims[1] * dims[2] {
            return Err(NetError::Shape(format!("{} values for a batch of {n} × {dims:?}", data.len())));
        }
        Ok(Self { n, dims, data })
    }

    pub fn from_volumes<'a>(vols: impl IntoIterator<Item = &'a Volume3D<T>>) -> Result<Self, NetError> {
        let mut data = Vec::new();
        let mut dims = None;
        let mut n = 0;
        for v in vols {
            match dims {
                None => dims = Some(v.dims()),
                Some(d) if d != v.dims() => {
                    return Err(NetError::Shape(format!("mixed volume dims {d:?} and {:?}", v.dims())))
                }
                _ => {}
            }
            data.extend_from_slice(v.data());
            n += 1;
        }
        let dims = dims.ok_or_else(|| NetError::Shape("empty batch".into()))?;
        Ok(Self { n, dims, data })
    }
}

#[derive(Clone, Debug, PartialEq)]
struct ConvBn {
    conv: usize,
    gamma: usize,
    beta: usize,
    mean: usize,
    var: usize,
    cin: usize,
    cout: usize,
    k: usize,
}

#[derive(Clone, Debug, PartialEq)]
struct BlockPlan {
    name: String,
    layers: Vec<ConvBn>,
    downsample: bool,
}

#[derive(Clone, Debug, PartialEq)]
struct Plan {
    blocks: Vec<BlockPlan>,
    out_w: usize,
    out_b: usize,
    features: usize,
}

/// Cached activations of one `conv → BN` pair.
#[derive(Clone, Debug)]
struct LayerTrace<T> {
    input: Vec<T>,
    xhat: Vec<T>,
    invstd: Vec<T>,
}

#[derive(Clone, Debug)]
struct BlockTrace<T> {
    layers: Vec<LayerTrace<T>>,
    dims: [usize; 3],
    argmax: Option<Vec<u32>>,
    out: Vec<T>,
}

/// Everything the backward pass needs from a training forward pass.
#[derive(Clone, Debug)]
pub struct Trace<T> {
    n: usize,
    blocks: Vec<BlockTrace<T>>,
    out_dims: [usize; 3],
    mask: Vec<T>,
    dropped: Vec<T>,
}

impl<T: Real> Trace<T> {
    /// ReLU on/off pattern and max-pool winners. Two forward passes with the same
    /// signature lie on the same smooth piece of the network function.
    pub fn activation_signature(&self) -> Vec<u32> {
        let mut sig = Vec::new();
        for b in &self.blocks {
            let mut word = 0u32;
            for (i, &v) in b.out.iter().enumerate() {
                word = (word << 1) | u32::from(v > T::zero());
                if i % 32 == 31 {
                    sig.push(word);
                    word = 0;
                }
            }
            sig.push(word);
            if let Some(a) = &b.argmax {
                sig.extend_from_slice(a);
            }
        }
        sig
    }
}

#[derive(Clone, Debug)]
pub struct ForwardOutput<T> {
    /// `[n, n_bins]` row-major probabilities.
    pub probs: Vec<T>,
    pub logits: Vec<T>,
    /// One entry per batch-norm layer in training mode; empty in eval mode.
    pub bn_stats: Vec<BnStats<T>>,
    pub trace: Option<Trace<T>>,
}

impl<T: Real> ForwardOutput<T> {
    pub fn rows(&self, n_bins: usize) -> impl Iterator<Item = &[T]> {
        self.probs.chunks(n_bins)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Net<T> {
    cfg: NetConfig,
    params: ParamStore<T>,
    plan: Plan,
}

fn build_plan<T: Real>(
    cfg: &NetConfig,
    mut add: impl FnMut(Param<T>) -> usize,
    mut init: impl FnMut(usize, usize) -> Vec<T>,
) -> Plan {
    let mut blocks = Vec::new();
    let mut cin = 1;
    let specs: Vec<(usize, bool, usize, usize)> = cfg
        .blocks
        .iter()
        .map(|b| (b.out_channels, b.downsample, b.convs, 3))
        .chain(std::iter::once((cfg.head_channels, false, 1, 1)))
        .collect();
    let last = specs.len() - 1;
    for (i, &(cout, downsample, convs, k)) in specs.iter().enumerate() {
        let name = if i == last { "head".to_string() } else { format!("block{i}") };
        let mut layers_ = Vec::new();
        for j in 0..convs {
            let fan_in = cin * k * k * k;
            let p = |s: &str| format!("{name}.{s}{j}");
            let conv = add(Param::new(
                p("conv") + ".weight",
                vec![cout, cin, k, k, k],
                ParamKind::ConvWeight,
                init(cout * fan_in, fan_in),
            ));
            let gamma = add(Param::new(p("bn") + ".scale", vec![cout], ParamKind::BnScale, vec![T::one(); cout]));
            let beta = add(Param::new(p("bn") + ".shift", vec![cout], ParamKind::BnShift, vec![T::zero(); cout]));
            let mean =
                add(Param::new(p("bn") + ".running_mean", vec![cout], ParamKind::RunningMean, vec![T::zero(); cout]));
            let var =
                add(Param::new(p("bn") + ".running_var", vec![cout], ParamKind::RunningVar, vec![T::one(); cout]));
            layers_.push(ConvBn { conv, gamma, beta, mean, var, cin, cout, k });
            cin = cout;
        }
        blocks.push(BlockPlan { name, layers: layers_, downsample });
    }
    let features = cfg.head_channels;
    let out_w = add(Param::new(
        "out.weight",
        vec![cfg.n_bins, features, 1, 1, 1],
        ParamKind::ConvWeight,
        init(cfg.n_bins * features, features),
    ));
    let out_b = add(Param::new("out.bias", vec![cfg.n_bins], ParamKind::Bias, vec![T::zero(); cfg.n_bins]));
    Plan { blocks, out_w, out_b, features }
}

impl<T: Real> Net<T> {
    /// He-normal convolution weights, unit BN scale, zero shifts and bias.
    pub fn new(cfg: NetConfig, seed: u64) -> Result<Self, NetError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let plan = build_plan::<T>(&cfg, |p| params.push(p), |n, fan_in| he_normal(n, fan_in, &mut rng));
        Ok(Self { cfg, params, plan })
    }

    /// Rebuilds a network from stored tensors, checking names and shapes.
    pub fn from_params(cfg: NetConfig, params: ParamStore<T>) -> Result<Self, NetError> {
        cfg.validate()?;
        let mut expected = Vec::new();
        let plan = build_plan::<T>(
            &cfg,
            |p| {
                expected.push((p.name, p.shape, p.kind));
                expected.len() - 1
            },
            |n, _| vec![T::zero(); n],
        );
        if expected.len() != params.len() {
            return Err(NetError::Shape(format!("expected {} tensors, found {}", expected.len(), params.len())));
        }
        for ((name, shape, kind), p) in expected.iter().zip(params.entries()) {
            if *name != p.name || *shape != p.shape || *kind != p.kind {
                return Err(NetError::Shape(format!(
                    "tensor '{}' {:?} does not match expected '{name}' {shape:?}",
                    p.name, p.shape
                )));
            }
            if p.value.len() != shape.iter().product::<usize>() {
                return Err(NetError::Shape(format!("tensor '{name}' has {} values", p.value.len())));
            }
        }
        Ok(Self { cfg, params, plan })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore<T> {
        self.params
    }

    /// Sets the output layer to zero so every prediction is uniform.
    pub fn zero_output_layer(&mut self) {
        for i in [self.plan.out_w, self.plan.out_b] {
            self.params.get_mut(i).value.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    pub fn forward(&self, batch: &Batch<T>, mode: Mode) -> Result<ForwardOutput<T>, NetError> {
        self.run(batch, mode, false)
    }

    /// Training-mode forward pass that keeps the activations for [`Net::backward`].
    pub fn forward_traced(&self, batch: &Batch<T>, dropout: f64, seed: u64) -> Result<ForwardOutput<T>, NetError> {
        self.run(batch, Mode::Train { dropout, seed }, true)
    }

    fn run(&self, batch: &Batch<T>, mode: Mode, keep: bool) -> Result<ForwardOutput<T>, NetError> {
        if batch.dims != self.cfg.input_dims {
            return Err(NetError::Shape(format!(
                "input dims {:?} but the network expects {:?}",
                batch.dims, self.cfg.input_dims
            )));
        }
        if batch.n == 0 {
            return Err(NetError::Shape("empty batch".into()));
        }
        let plan = &self.plan;
        let n = batch.n;
        let train = matches!(mode, Mode::Train { .. });
        let mut x = batch.data.clone();
        let mut d = batch.dims;
        let mut bn_stats = Vec::new();
        let mut traces = Vec::new();
        for block in &plan.blocks {
            let s = d[0] * d[1] * d[2];
            let mut layer_traces = Vec::new();
            for l in &block.layers {
                let w = &self.params.get(l.conv).value;
                let mut y = layers::conv_forward(&x, n, l.cin, d, w, l.cout, l.k);
                let running = if train {
                    None
                } else {
                    Some((self.params.get(l.mean).value.as_slice(), self.params.get(l.var).value.as_slice()))
                };
                let (invstd, stats) = layers::bn_normalize(&mut y, n, l.cout, s, running);
                bn_stats.extend(stats);
                let (gamma, beta) = (&self.params.get(l.gamma).value, &self.params.get(l.beta).value);
                x = if keep {
                    let z = layers::bn_affine(&y, n, l.cout, s, gamma, beta);
                    layer_traces.push(LayerTrace { input: std::mem::take(&mut x), xhat: y, invstd });
                    z
                } else {
                    layers::bn_affine_inplace(&mut y, n, l.cout, s, gamma, beta);
                    y
                };
            }
            let in_dims = d;
            let mut argmax = None;
            if block.downsample {
                let (pooled, arg, od) = layers::maxpool2_forward(&x, n * block.layers.last().map_or(0, |l| l.cout), d);
                x = pooled;
                d = od;
                if keep {
                    argmax = Some(arg);
                }
            }
            layers::relu_inplace(&mut x);
            if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
                return Err(NetError::NonFinite { layer: block.name.clone(), index: bad });
            }
            if keep {
                traces.push(BlockTrace { layers: layer_traces, dims: in_dims, argmax, out: x.clone() });
            }
        }

        // global average pool → dropout → 1³ conv with bias → softmax
        let f = plan.features;
        let s = d[0] * d[1] * d[2];
        let inv_s = T::lit(1.0 / s as f64);
        let mut feats: Vec<T> = x.chunks(s).map(|c| c.iter().copied().sum::<T>() * inv_s).collect();
        let mut mask = Vec::new();
        if let Mode::Train { dropout, seed } = mode {
            if dropout > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let keep_scale = T::lit(1.0 / (1.0 - dropout));
                mask = (0..feats.len())
                    .map(|_| if rng.random::<f64>() < dropout { T::zero() } else { keep_scale })
                    .collect();
                feats.iter_mut().zip(&mask).for_each(|(v, &m)| *v *= m);
            }
        }
        let bins = self.cfg.n_bins;
        let w = &self.params.get(plan.out_w).value;
        let bias = &self.params.get(plan.out_b).value;
        let mut logits = vec![T::zero(); n * bins];
        for b in 0..n {
            for k in 0..bins {
                let dot: T = (0..f).map(|j| w[k * f + j] * feats[b * f + j]).sum();
                logits[b * bins + k] = dot + bias[k];
            }
        }
        if let Some(bad) = logits.iter().position(|v| !v.is_finite()) {
            return Err(NetError::NonFinite { layer: "out".into(), index: bad });
        }
        let probs = layers::softmax_rows(&logits, bins);
        let trace = keep.then_some(Trace { n, blocks: traces, out_dims: d, mask, dropped: feats });
        Ok(ForwardOutput { probs, logits, bn_stats, trace })
    }

    /// Mean `KL(target ‖ prediction)` over the batch.
    pub fn loss(&self, out: &ForwardOutput<T>, targets: &[SoftLabel<T>]) -> Result<f64, NetError> {
        let t = self.flatten_targets(out, targets)?;
        let loss = layers::mean_kl(&t, &out.probs, self.cfg.n_bins);
        if !loss.is_finite() {
            return Err(NetError::NonFinite { layer: "loss".into(), index: 0 });
        }
        Ok(loss)
    }

    fn flatten_targets(&self, out: &ForwardOutput<T>, targets: &[SoftLabel<T>]) -> Result<Vec<T>, NetError> {
        let bins = self.cfg.n_bins;
        if targets.len() * bins != out.probs.len() {
            return Err(NetError::Shape(format!(
                "{} targets for {} predictions",
                targets.len(),
                out.probs.len() / bins
            )));
        }
        if let Some(t) = targets.iter().find(|t| t.len() != bins) {
            return Err(NetError::Shape(format!("target with {} bins, expected {bins}", t.len())));
        }
        Ok(targets.iter().flat_map(|t| t.probs().iter().copied()).collect())
    }

    /// Loss and parameter gradients for a traced forward pass.
    pub fn backward(&self, out: &ForwardOutput<T>, targets: &[SoftLabel<T>]) -> Result<(f64, Grads<T>), NetError> {
        let trace = out.trace.as_ref().ok_or_else(|| NetError::Shape("backward needs a traced forward pass".into()))?;
        let loss = self.loss(out, targets)?;
        let t = self.flatten_targets(out, targets)?;
        let plan = &self.plan;
        let mut grads = self.params.zero_grads();
        let (n, bins, f) = (trace.n, self.cfg.n_bins, plan.features);
        let inv_n = T::lit(1.0 / n as f64);

        // softmax + KL: dL/dlogit = (p − t)/n
        let dlogits: Vec<T> = out.probs.iter().zip(&t).map(|(&p, &q)| (p - q) * inv_n).collect();
        let w = &self.params.get(plan.out_w).value;
        let mut dfeat = vec![T::zero(); n * f];
        {
            let (gw, gb) = {
                let (lo, hi) = grads.g.split_at_mut(plan.out_b);
                (&mut lo[plan.out_w], &mut hi[0])
            };
            for b in 0..n {
                for k in 0..bins {
                    let g = dlogits[b * bins + k];
                    gb[k] += g;
                    for j in 0..f {
                        gw[k * f + j] += g * trace.dropped[b * f + j];
                        dfeat[b * f + j] += g * w[k * f + j];
                    }
                }
            }
        }
        if !trace.mask.is_empty() {
            dfeat.iter_mut().zip(&trace.mask).for_each(|(g, &m)| *g *= m);
        }

        let od = trace.out_dims;
        let s = od[0] * od[1] * od[2];
        let inv_s = T::lit(1.0 / s as f64);
        let mut dx: Vec<T> = dfeat.iter().flat_map(|&g| std::iter::repeat_n(g * inv_s, s)).collect();

        for (bi, (block, bt)) in plan.blocks.iter().zip(&trace.blocks).enumerate().rev() {
            layers::relu_backward_inplace(&mut dx, &bt.out);
            let d = bt.dims;
            let s = d[0] * d[1] * d[2];
            if let Some(arg) = &bt.argmax {
                dx = layers::maxpool2_backward(&dx, arg, n * block.layers.last().map_or(0, |l| l.cout), d);
            }
            for (li, (l, lt)) in block.layers.iter().zip(&bt.layers).enumerate().rev() {
                let gamma = &self.params.get(l.gamma).value;
                let (dy, dgamma, dbeta) = layers::bn_backward(&dx, &lt.xhat, &lt.invstd, gamma, n, l.cout, s);
                grads.g[l.gamma] = dgamma;
                grads.g[l.beta] = dbeta;
                let first = bi == 0 && li == 0;
                let (dinput, dw) = layers::conv_backward(
                    &lt.input,
                    &dy,
                    n,
                    l.cin,
                    d,
                    &self.params.get(l.conv).value,
                    l.cout,
                    l.k,
                    !first,
                );
                grads.g[l.conv] = dw;
                dx = dinput;
            }
        }
        Ok((loss, grads))
    }

    /// Convenience: traced forward then backward.
    pub fn loss_and_grad(
        &self,
        batch: &Batch<T>,
        targets: &[SoftLabel<T>],
        dropout: f64,
        seed: u64,
    ) -> Result<(f64, Grads<T>, ForwardOutput<T>), NetError> {
        let out = self.forward_traced(batch, dropout, seed)?;
        let (loss, grads) = self.backward(&out, targets)?;
        Ok((loss, grads, out))
    }

    /// Folds training-mode batch statistics into the running averages.
    pub fn update_running_stats(&mut self, stats: &[BnStats<T>], momentum: f64) {
        let plan = &self.plan;
        let layers_: Vec<&ConvBn> = plan.blocks.iter().flat_map(|b| &b.layers).collect();
        assert_eq!(layers_.len(), stats.len(), "one statistics entry per batch-norm layer");
        let m = T::lit(momentum);
        for (l, st) in layers_.into_iter().zip(stats) {
            for (r, &b) in self.params.get_mut(l.mean).value.iter_mut().zip(&st.mean) {
                *r = (T::one() - m) * *r + m * b;
            }
            for (r, &b) in self.params.get_mut(l.var).value.iter_mut().zip(&st.var_unbiased) {
                *r = (T::one() - m) * *r + m * b;
            }
        }
    }

    /// Expected score of the eval-mode prediction for one volume.
    pub fn predict(&self, volume: &Volume3D<T>, grid: &BinGrid) -> Result<f64, NetError> {
        Ok(self.predict_batch(std::slice::from_ref(volume), grid, 1)?[0])
    }

    pub fn predict_batch(
        &self,
        volumes: &[Volume3D<T>],
        grid: &BinGrid,
        batch_size: usize,
    ) -> Result<Vec<f64>, NetError> {
        if grid.n_bins != self.cfg.n_bins {
            return Err(NetError::Shape(format!("grid has {} bins, network {}", grid.n_bins, self.cfg.n_bins)));
        }
        let mut scores = Vec::with_capacity(volumes.len());
        for chunk in volumes.chunks(batch_size.max(1)) {
            let out = self.forward(&Batch::from_volumes(chunk)?, Mode::Eval)?;
            for row in out.rows(self.cfg.n_bins) {
                let label = SoftLabel::from_weights(row.to_vec()).map_err(|e| NetError::Shape(e.to_string()))?;
                scores.push(decode(&label, grid));
            }
        }
        Ok(scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::softlabel::encode;

    fn toy_batch(n: usize, seed: u64) -> Batch<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = NetConfig::toy().input_dims;
        Batch::new(n, d, (0..n * d.iter().product::<usize>()).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn toy_shapes_and_normalisation() {
        let net = Net::<f64>::new(NetConfig::toy(), 1).unwrap();
        let out = net.forward(&toy_batch(3, 2), Mode::Train { dropout: 0.5, seed: 3 }).unwrap();
        assert_eq!(out.probs.len(), 3 * 10);
        for row in out.rows(10) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
        assert_eq!(out.bn_stats.len(), 7);
    }

    #[test]
    fn zero_output_layer_is_uniform() {
        let mut net = Net::<f64>::new(NetConfig::toy(), 1).unwrap();
        net.zero_output_layer();
        let out = net.forward(&toy_batch(2, 2), Mode::Eval).unwrap();
        assert!(out.probs.iter().all(|&p| p == 0.1));
        let grid = BinGrid::new(-0.5, 4.5, 10).unwrap();
        let v = Volume3D::from_fn([16; 3], |x, _, _| x as f64 / 16.0).unwrap();
        assert!((net.predict(&v, &grid).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eval_is_deterministic_and_leaves_running_stats() {
        let net = Net::<f64>::new(NetConfig::toy(), 4).unwrap();
        let b = toy_batch(2, 5);
        let a = net.forward(&b, Mode::Eval).unwrap();
        let c = net.forward(&b, Mode::Eval).unwrap();
        assert_eq!(a.probs, c.probs);
        assert!(a.bn_stats.is_empty());
        let before = net.clone();
        let _ = net.forward(&b, Mode::Train { dropout: 0.0, seed: 0 }).unwrap();
        assert_eq!(net, before);
    }

    #[test]
    fn target_equal_to_prediction_gives_zero_loss_and_head_gradient() {
        let net = Net::<f64>::new(NetConfig::toy(), 6).unwrap();
        let b = toy_batch(2, 7);
        let out = net.forward_traced(&b, 0.0, 0).unwrap();
        let targets: Vec<SoftLabel<f64>> = out.rows(10).map(|r| SoftLabel::from_weights(r.to_vec()).unwrap()).collect();
        let (loss, grads) = net.backward(&out, &targets).unwrap();
        assert!(loss.abs() < 1e-12);
        let bias = net.params().index_of("out.bias").unwrap();
        let weight = net.params().index_of("out.weight").unwrap();
        assert!(grads.g[bias].iter().chain(&grads.g[weight]).all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn sharper_wrong_predictions_cost_more() {
        // scaling the logits away from a target off the predicted mode raises the loss
        let net = Net::<f64>::new(NetConfig::toy(), 8).unwrap();
        let out = net.forward(&toy_batch(1, 9), Mode::Eval).unwrap();
        let grid = BinGrid::new(-0.5, 4.5, 10).unwrap();
        let argmax = out.probs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let far = if argmax < 5 { 9 } else { 0 };
        let target: SoftLabel<f64> = encode(grid.center(far), 0.3, &grid);
        let mut last = f64::NEG_INFINITY;
        for temp in [1.0, 2.0, 4.0, 8.0] {
            let logits: Vec<f64> = out.logits.iter().map(|l| l * temp).collect();
            let p = layers::softmax_rows(&logits, 10);
            let loss = layers::mean_kl(target.probs(), &p, 10);
            assert!(loss > last);
            last = loss;
        }
    }

    #[test]
    fn shape_errors() {
        let net = Net::<f64>::new(NetConfig::toy(), 1).unwrap();
        let wrong = Batch::new(1, [8, 8, 8], vec![0.0; 512]).unwrap();
        assert!(matches!(net.forward(&wrong, Mode::Eval), Err(NetError::Shape(_))));
        assert!(Batch::<f64>::new(2, [2, 2, 2], vec![0.0; 8]).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = Net::<f32>::new(NetConfig::toy(), 3).unwrap();
        let back = Net::<f32>::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
        let tampered = net.to_json().replace("\"version\":1", "\"version\":99");
        match Net::<f32>::from_json(&tampered) {
            Err(NetError::Checkpoint(m)) => assert!(m.contains("version")),
            other => panic!("{other:?}"),
        }
        assert!(Net::<f32>::from_json("{not json").is_err());
    }
}
