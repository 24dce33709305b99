//! Statistics for motion-bias analysis: Gaussian GLM with z inference,
//! Benjamini-Hochberg FDR, Spearman correlation, ICC(2,k) rater agreement and
//! the per-structure thickness sweep.

mod analyze;
pub mod dist;
mod fdr;
mod glm;
mod icc;
mod rank;
mod table;

pub use analyze::{age_motion_fit, analyze_dataset, percent_loss, AnalysisReport, ColumnResult, SEX_CODING};
pub use fdr::bh_fdr;
pub use glm::{fit_glm, Design, GlmFit, PSEUDO_R2_VARIANT};
pub use icc::{icc_2k, IccResult, RatingsMatrix};
pub use rank::{midranks, pearson, spearman};
pub use table::SubjectTable;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("design is rank deficient: column '{0}' is collinear with earlier columns")]
    RankDeficient(String),
    #[error("need more observations than predictors (n = {n}, p = {p})")]
    TooFewRows { n: usize, p: usize },
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("p-value {0} at index {1} is outside [0, 1]")]
    PValueRange(f64, usize),
    #[error("zero variance in ranks of {0}")]
    ZeroVariance(&'static str),
    #[error("original thickness is zero")]
    ZeroBaseline,
    #[error("degenerate ICC: {0}")]
    DegenerateIcc(String),
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("table parse error: {0}")]
    Parse(String),
    #[error("fit for column '{column}' failed: {source}")]
    Column {
        column: String,
        #[source]
        source: Box<StatsError>,
    },
}
