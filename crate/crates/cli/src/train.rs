use std::path::{Path, PathBuf};

use kmotion::kspace::KSpaceConfig;
use kmotion::phantom::motion_phantoms;
use kmotion::sampler::SamplerConfig;
use kmotion::softlabel::BinGrid;
use kmotion::tinynet::{train, BlockSpec, LabeledVolume, Net, NetConfig, NetError, TrainConfig};
use kmotion::volume::{center_crop, minmax_scale, read_nifti, Volume3D};
use serde::{Deserialize, Serialize};

use crate::dataset::read_manifest;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    /// JSON file with `net`, `train` and `data` sections.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    /// Lower edge of the score grid the network was trained on.
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    pub grid_low: f64,
    #[arg(long, default_value_t = 4.5)]
    pub grid_high: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Corrupted phantoms generated on the fly.
    Synthetic { count: usize, dims: [usize; 3], spacing_mm: f64, seed: u64 },
    /// Rows of a `dataset` manifest, using its train/val split column.
    Manifest { path: PathBuf },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToyConfig {
    #[serde(default = "default_net")]
    pub net: NetConfig,
    #[serde(default)]
    pub train: TrainConfig,
    pub data: DataSource,
    #[serde(default)]
    pub init_seed: u64,
}

/// Small network for 32³ inputs on the default 50-bin grid.
pub fn default_net() -> NetConfig {
    NetConfig {
        input_dims: [32; 3],
        blocks: vec![BlockSpec::new(4, true, 2), BlockSpec::new(8, true, 2), BlockSpec::new(16, true, 2)],
        head_channels: 16,
        n_bins: 50,
    }
}

/// Crops or pads to the network input and rescales to `[0, 1]`.
pub fn preprocess(v: &Volume3D<f32>, dims: [usize; 3]) -> Volume3D<f32> {
    let v = if v.dims() == dims { v.clone() } else { center_crop(v, dims) };
    minmax_scale(&v)
}

type Splits = (Vec<LabeledVolume<f32>>, Vec<LabeledVolume<f32>>, usize);

fn load_data(src: &DataSource, net: &NetConfig) -> CliResult<Splits> {
    match src {
        DataSource::Synthetic { count, dims, spacing_mm, seed } => {
            if *dims != net.input_dims {
                return Err(CliError::Usage(format!(
                    "synthetic dims {dims:?} differ from net input {:?}",
                    net.input_dims
                )));
            }
            let mut all = motion_phantoms(
                *count,
                *dims,
                *spacing_mm,
                *seed,
                &SamplerConfig::default(),
                &KSpaceConfig::default(),
            )?;
            let n_train = (0.6 * *count as f64).round() as usize;
            let n_val = (0.2 * *count as f64).round() as usize;
            let test = all.len().saturating_sub(n_train + n_val);
            all.truncate(n_train + n_val);
            let val = all.split_off(n_train);
            Ok((all, val, test))
        }
        DataSource::Manifest { path } => {
            let (mut tr, mut val, mut test) = (Vec::new(), Vec::new(), 0);
            for row in read_manifest(path)? {
                let Some(score) = row.achieved_score.filter(|_| row.status == "ok") else { continue };
                let load = || {
                    read_nifti(&row.output_path)
                        .map(|v| LabeledVolume { volume: preprocess(&v, net.input_dims), score })
                        .map_err(|e| CliError::Usage(format!("{}: {e}", row.output_path)))
                };
                match row.split.as_str() {
                    "train" => tr.push(load()?),
                    "val" => val.push(load()?),
                    _ => test += 1,
                }
            }
            Ok((tr, val, test))
        }
    }
}

pub fn run_train(a: &TrainArgs, manifest_path: Option<&Path>) -> CliResult<()> {
    let manifest_out = manifest_path.map_or_else(|| a.out_dir.join("run_manifest.json"), Path::to_path_buf);
    let text =
        std::fs::read_to_string(&a.config).map_err(|e| CliError::Usage(format!("{}: {e}", a.config.display())))?;
    let cfg: ToyConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.config.display())))?;
    cfg.net.validate().map_err(CliError::usage)?;
    cfg.train.validate(&cfg.net).map_err(CliError::usage)?;
    let (tr, val, n_test) = load_data(&cfg.data, &cfg.net)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let net = Net::<f32>::new(cfg.net.clone(), cfg.init_seed).map_err(CliError::usage)?;

    let history_path = a.out_dir.join("history.csv");
    let write_history = |h: &kmotion::tinynet::History| -> CliResult<()> {
        let f = std::fs::File::create(&history_path)?;
        h.write_csv(f).map_err(CliError::usage)
    };
    let mut manifest = RunManifest::new("train-toy", Some(cfg.train.rng_seed), &cfg);
    let outcome = match train(net, &cfg.train, &tr, &val) {
        Ok(o) => o,
        Err(NetError::Diverged { step, source, history }) => {
            write_history(&history)?;
            manifest.push(serde_json::json!({ "diverged_at": step, "history": history.records }));
            manifest.write(&manifest_out)?;
            return Err(CliError::Algorithm(format!("training diverged at step {step}: {source}")));
        }
        Err(e @ (NetError::Config(_) | NetError::EmptySplit { .. } | NetError::Shape(_))) => {
            return Err(CliError::usage(e))
        }
        Err(e) => return Err(CliError::Algorithm(e.to_string())),
    };
    write_history(&outcome.history)?;
    outcome.best.save(&a.out_dir.join("checkpoint.json")).map_err(CliError::usage)?;
    outcome.last.save(&a.out_dir.join("last_checkpoint.json")).map_err(CliError::usage)?;
    let best = outcome.history.records.iter().find(|r| r.step == outcome.best_step).copied();
    eprintln!(
        "trained on {} volumes ({} val, {n_test} held out); best step {} val JS {:.4}",
        tr.len(),
        val.len(),
        outcome.best_step,
        best.map_or(f64::NAN, |r| r.val_js)
    );
    manifest.push(serde_json::json!({
        "n_train": tr.len(),
        "n_val": val.len(),
        "n_test": n_test,
        "best_step": outcome.best_step,
        "history": outcome.history.records,
    }));
    manifest.write(&manifest_out)
}

pub fn run_predict(a: &PredictArgs, manifest_path: Option<&Path>) -> CliResult<()> {
    let net = Net::<f32>::load(&a.checkpoint).map_err(CliError::usage)?;
    let grid = BinGrid::new(a.grid_low, a.grid_high, net.config().n_bins).map_err(CliError::usage)?;
    let mut manifest = RunManifest::new(
        "predict",
        None,
        serde_json::json!({ "checkpoint": a.checkpoint, "grid": grid, "net": net.config() }),
    );
    for p in &a.input {
        let v = read_nifti(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
        let score = net.predict(&preprocess(&v, net.config().input_dims), &grid).map_err(CliError::usage)?;
        println!("{},{score:.6}", p.display());
        manifest.push(serde_json::json!({ "path": p, "score": score }));
    }
    if let Some(m) = manifest_path {
        manifest.write(m)?;
    }
    Ok(())
}
