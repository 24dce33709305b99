use std::path::{Path, PathBuf};

use kmotion::kspace::{simulate_motion, KSpaceConfig};
use kmotion::sampler::{sample_trajectory, stream_rng, SamplerConfig};
use kmotion::volume::{read_nifti, write_nifti};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::manifest::{sidecar, RunManifest};

#[derive(Debug, clap::Args)]
pub struct CorruptArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub target_score: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub n_events: usize,
    #[arg(long, default_value_t = 0.02)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1)]
    pub phase_axis: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_attempts: usize,
    #[arg(long, default_value_t = kmotion::rigid::DEFAULT_BRAIN_RADIUS_MM)]
    pub radius: f64,
    /// Also write the sampled trajectory as JSON.
    #[arg(long)]
    pub save_trajectory: Option<PathBuf>,
}

#[derive(Serialize)]
struct Resolved<'a> {
    input: &'a Path,
    output: &'a Path,
    target_score: f64,
    sampler: &'a SamplerConfig,
    kspace: &'a KSpaceConfig,
}

pub fn run(a: &CorruptArgs, manifest_path: Option<&Path>) -> CliResult<()> {
    let sampler = SamplerConfig {
        tolerance: a.tolerance,
        max_attempts: a.max_attempts,
        num_events: a.n_events,
        brain_radius: a.radius,
        rng_seed: a.seed,
        ..SamplerConfig::default()
    };
    sampler.validate()?;
    let kspace = KSpaceConfig { phase_axis: a.phase_axis };
    let (lo, hi) = sampler.motion_range;
    if !(lo..=hi).contains(&a.target_score) {
        return Err(CliError::Usage(format!("target score {} outside the motion range [{lo}, {hi}]", a.target_score)));
    }
    let volume = read_nifti(&a.input).map_err(|e| CliError::Usage(format!("{}: {e}", a.input.display())))?;
    let mut rng = stream_rng(a.seed, 0);
    let sampled = sample_trajectory(a.target_score, &sampler, &mut rng)?;
    let moved = simulate_motion(&volume, &sampled.trajectory, &kspace).map_err(CliError::usage)?;
    write_nifti(&moved, &a.output).map_err(|e| CliError::Usage(format!("{}: {e}", a.output.display())))?;
    if let Some(p) = &a.save_trajectory {
        let json = serde_json::to_string_pretty(&sampled.trajectory).expect("trajectory serialises");
        std::fs::write(p, json + "\n").map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
    }
    let score = sampled.score.value();
    println!("achieved_score={score:.6}");

    let mut manifest = RunManifest::new(
        "corrupt",
        Some(a.seed),
        Resolved {
            input: &a.input,
            output: &a.output,
            target_score: a.target_score,
            sampler: &sampler,
            kspace: &kspace,
        },
    );
    manifest.push(serde_json::json!({
        "achieved_score": score,
        "attempts": sampled.attempts,
        "trajectory": sampled.trajectory,
    }));
    manifest.write(&manifest_path.map_or_else(|| sidecar(&a.output), Path::to_path_buf))
}
