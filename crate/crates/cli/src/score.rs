use std::path::PathBuf;

use kmotion::rigid::{trajectory_score, MetricConfig, MotionTrajectory};

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

#[derive(Debug, clap::Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long, default_value_t = kmotion::rigid::DEFAULT_BRAIN_RADIUS_MM)]
    pub radius: f64,
}

pub fn run(a: &ScoreArgs, manifest_path: Option<&std::path::Path>) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.trajectory)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.trajectory.display())))?;
    let traj: MotionTrajectory<f64> =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.trajectory.display())))?;
    if !(a.radius > 0.0 && a.radius.is_finite()) {
        return Err(CliError::Usage(format!("radius must be positive, got {}", a.radius)));
    }
    let metric = MetricConfig::with_radius(a.radius);
    let score = trajectory_score(&traj, &metric).value();
    println!("{score:.6}");
    if let Some(p) = manifest_path {
        let mut m =
            RunManifest::new("score", None, serde_json::json!({ "trajectory": a.trajectory, "metric": metric }));
        m.push(serde_json::json!({ "score": score }));
        m.write(p)?;
    }
    Ok(())
}
