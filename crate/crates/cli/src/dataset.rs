use std::path::{Path, PathBuf};

use kmotion::kspace::{simulate_motion, KSpaceConfig};
use kmotion::sampler::{sample_target, sample_trajectory, stream_rng, SamplerConfig};
use kmotion::volume::{read_nifti, write_nifti};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

pub const WORKERS_ENV: &str = "KMOTION_WORKERS";
pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Debug, clap::Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub input_dir: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Corrupted volumes per input volume.
    #[arg(long, default_value_t = 300)]
    pub per_volume: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parallel workers; defaults to $KMOTION_WORKERS, then the CPU count.
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub n_events: usize,
    #[arg(long, default_value_t = 0.02)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1)]
    pub phase_axis: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_attempts: usize,
}

/// One manifest row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub source_path: String,
    pub output_path: String,
    pub target_score: f64,
    pub achieved_score: Option<f64>,
    pub n_events: usize,
    pub seed: u64,
    /// Per-item stream index under `seed`.
    pub stream: u64,
    pub split: String,
    pub status: String,
}

fn is_nifti(p: &Path) -> bool {
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".nii") || name.ends_with(".nii.gz")
}

fn stem(p: &Path) -> String {
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("volume");
    name.trim_end_matches(".gz").trim_end_matches(".nii").to_string()
}

/// Assigns whole source volumes to train/val/test in a 60-20-20 ratio so
/// corrupted copies of one scan never straddle splits.
pub fn split_labels(n_sources: usize, seed: u64) -> Vec<&'static str> {
    let mut order: Vec<usize> = (0..n_sources).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5A17));
    let n_val = (0.2 * n_sources as f64).round() as usize;
    let n_test = (0.2 * n_sources as f64).round() as usize;
    let n_train = n_sources - n_val - n_test;
    let mut labels = vec![""; n_sources];
    for (rank, &src) in order.iter().enumerate() {
        labels[src] = if rank < n_train {
            "train"
        } else if rank < n_train + n_val {
            "val"
        } else {
            "test"
        };
    }
    labels
}

pub fn run(a: &DatasetArgs, run_manifest: Option<&Path>) -> CliResult<()> {
    let sampler = SamplerConfig {
        tolerance: a.tolerance,
        max_attempts: a.max_attempts,
        num_events: a.n_events,
        rng_seed: a.seed,
        ..SamplerConfig::default()
    };
    sampler.validate()?;
    if a.per_volume == 0 {
        return Err(CliError::Usage("--per-volume must be positive".into()));
    }
    let kspace = KSpaceConfig { phase_axis: a.phase_axis };
    let mut sources: Vec<PathBuf> = std::fs::read_dir(&a.input_dir)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.input_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_nifti(p))
        .collect();
    sources.sort();
    if sources.is_empty() {
        return Err(CliError::Usage(format!("no NIfTI volumes in {}", a.input_dir.display())));
    }
    std::fs::create_dir_all(&a.output_dir)?;
    let workers = a.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(CliError::usage)?;
    let splits = split_labels(sources.len(), a.seed);

    let jobs: Vec<(usize, usize)> = (0..sources.len()).flat_map(|s| (0..a.per_volume).map(move |k| (s, k))).collect();
    let rows: Vec<ManifestRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, k)| {
                let stream = (s * a.per_volume + k) as u64;
                let src = &sources[s];
                let out = a.output_dir.join(format!("{}_motion{k:04}.nii.gz", stem(src)));
                let mut rng = stream_rng(a.seed, stream);
                let target = sample_target(&mut rng, sampler.motion_range);
                let mut row = ManifestRow {
                    source_path: src.display().to_string(),
                    output_path: out.display().to_string(),
                    target_score: target,
                    achieved_score: None,
                    n_events: a.n_events,
                    seed: a.seed,
                    stream,
                    split: splits[s].to_string(),
                    status: "ok".into(),
                };
                let result = (|| -> Result<f64, String> {
                    let v = read_nifti(src).map_err(|e| e.to_string())?;
                    let sampled = sample_trajectory(target, &sampler, &mut rng).map_err(|e| e.to_string())?;
                    let moved = simulate_motion(&v, &sampled.trajectory, &kspace).map_err(|e| e.to_string())?;
                    write_nifti(&moved, &out).map_err(|e| e.to_string())?;
                    Ok(sampled.score.value())
                })();
                match result {
                    Ok(score) => row.achieved_score = Some(score),
                    Err(e) => row.status = format!("error: {e}"),
                }
                row
            })
            .collect()
    });

    let manifest_path = a.output_dir.join(MANIFEST_NAME);
    let mut w = csv::Writer::from_path(&manifest_path).map_err(CliError::usage)?;
    for r in &rows {
        w.serialize(r).map_err(CliError::usage)?;
    }
    w.flush()?;

    // workers only affect scheduling, so they stay out of the config snapshot
    let mut run = RunManifest::new(
        "dataset",
        Some(a.seed),
        serde_json::json!({
            "input_dir": a.input_dir,
            "output_dir": a.output_dir,
            "per_volume": a.per_volume,
            "sampler": sampler,
            "kspace": kspace,
            "sources": sources,
        }),
    );
    for r in &rows {
        run.push(r);
    }
    run.write(&run_manifest.map_or_else(|| a.output_dir.join("run_manifest.json"), Path::to_path_buf))?;

    let failed = rows.iter().filter(|r| r.status != "ok").count();
    eprintln!("wrote {} volumes ({failed} failed) and {}", rows.len() - failed, manifest_path.display());
    if failed > 0 {
        return Err(CliError::Algorithm(format!(
            "{failed} of {} items failed; see {}",
            rows.len(),
            manifest_path.display()
        )));
    }
    Ok(())
}

pub fn read_manifest(path: &Path) -> CliResult<Vec<ManifestRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<ManifestRow>, _>>()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
