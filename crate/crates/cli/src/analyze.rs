use std::path::{Path, PathBuf};

use kmotion::stats::{analyze_dataset, SubjectTable};

use crate::error::{CliError, CliResult};
use crate::manifest::{sidecar, RunManifest};

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// CSV with columns subject_id, age, sex, motion and one column per structure.
    #[arg(long)]
    pub table: PathBuf,
    /// Thickness columns to analyse (default: all).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Report CSV path; defaults to `<table>.report.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(a: &AnalyzeArgs, manifest_path: Option<&Path>) -> CliResult<()> {
    let table =
        SubjectTable::from_path(&a.table).map_err(|e| CliError::Usage(format!("{}: {e}", a.table.display())))?;
    let report = analyze_dataset(&table, a.columns.as_deref()).map_err(CliError::usage)?;
    let out = a.out.clone().unwrap_or_else(|| {
        let mut s = a.table.as_os_str().to_owned();
        s.push(".report.csv");
        s.into()
    });
    let f = std::fs::File::create(&out).map_err(|e| CliError::Usage(format!("{}: {e}", out.display())))?;
    report.write_csv(f).map_err(CliError::usage)?;
    print!("{}", report.to_table_string());

    let mut m =
        RunManifest::new("analyze", None, serde_json::json!({ "table": a.table, "columns": a.columns, "out": out }));
    m.push(&report);
    m.write(&manifest_path.map_or_else(|| sidecar(&out), Path::to_path_buf))
}
