//! Trains the small network on corrupted phantoms and reports held-out metrics.
//!
//! `cargo run --release -p kmotion --example toy_training -- [steps] [seed] [dropout] [aug]`

use std::time::Instant;

use kmotion::kspace::KSpaceConfig;
use kmotion::phantom::motion_phantoms;
use kmotion::sampler::SamplerConfig;
use kmotion::stats::spearman;
use kmotion::tinynet::{train, BlockSpec, Net, NetConfig, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize| args.get(i).map(String::as_str);
    let steps: usize = arg(1).and_then(|s| s.parse().ok()).unwrap_or(800);
    let seed: u64 = arg(2).and_then(|s| s.parse().ok()).unwrap_or(7);
    let dropout: f64 = arg(3).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let aug = arg(4) == Some("aug");

    let t0 = Instant::now();
    let dims = [32; 3];
    let data = motion_phantoms(200, dims, 4.0, seed, &SamplerConfig::default(), &KSpaceConfig::default())
        .expect("sampler exhausted");
    eprintln!("data {:.1}s", t0.elapsed().as_secs_f64());
    let (tr, rest) = data.split_at(120);
    let (val, test) = rest.split_at(40);

    let net_cfg = NetConfig {
        input_dims: dims,
        blocks: vec![BlockSpec::new(4, true, 2), BlockSpec::new(8, true, 2), BlockSpec::new(16, true, 2)],
        head_channels: 16,
        n_bins: 50,
    };
    let cfg = TrainConfig {
        batch_size: 8,
        total_steps: steps,
        eval_interval: 100,
        rng_seed: seed,
        dropout,
        augment: if aug { Some(Default::default()) } else { None },
        ..TrainConfig::default()
    };
    let t1 = Instant::now();
    let out = train(Net::<f32>::new(net_cfg, seed).unwrap(), &cfg, tr, val).unwrap();
    eprintln!("train {:.1}s", t1.elapsed().as_secs_f64());
    for r in &out.history.records {
        println!("{:5} loss {:.4} js {:.4} r2 {:.3} rmse {:.3}", r.step, r.loss, r.val_js, r.val_r2, r.val_rmse);
    }
    let vols: Vec<_> = test.iter().map(|d| d.volume.clone()).collect();
    let truth: Vec<f64> = test.iter().map(|d| d.score).collect();
    let pred = out.best.predict_batch(&vols, &cfg.grid, 8).unwrap();
    let mean = tr.iter().map(|d| d.score).sum::<f64>() / tr.len() as f64;
    let rmse =
        |p: &[f64]| (p.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / truth.len() as f64).sqrt();
    println!(
        "best step {} test spearman {:.3} rmse {:.3} baseline {:.3}",
        out.best_step,
        spearman(&pred, &truth).unwrap(),
        rmse(&pred),
        rmse(&vec![mean; truth.len()])
    );
}
