use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::{bh_fdr, fit_glm, Design, GlmFit, StatsError, SubjectTable, PSEUDO_R2_VARIANT};

pub const SEX_CODING: &str = "sex: 0 = female, 1 = male";
pub const ALPHA: f64 = 0.05;

/// `(synth − orig) / orig × 100`.
pub fn percent_loss(orig: f64, synth: f64) -> Result<f64, StatsError> {
    if orig == 0.0 {
        return Err(StatsError::ZeroBaseline);
    }
    Ok((synth - orig) / orig * 100.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct ColumnResult {
    pub column: String,
    pub motion_coef: f64,
    pub motion_se: f64,
    pub raw_p: f64,
    pub fdr_p: f64,
    pub significant: bool,
    pub pseudo_r2: f64,
    #[serde(skip)]
    pub fit: GlmFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub n_subjects: usize,
    pub alpha: f64,
    pub sex_coding: &'static str,
    pub pseudo_r2_variant: &'static str,
    pub columns: Vec<ColumnResult>,
    pub percent_significant: f64,
}

fn thickness_design(table: &SubjectTable) -> Design {
    Design::with_intercept(table.rows())
        .column("age", table.age.clone())
        .column("sex", table.sex.clone())
        .column("motion", table.motion.clone())
}

/// Fits `thickness ~ age + sex + motion + c` for each selected column and
/// applies BH-FDR across the motion p-values. `columns = None` selects all
/// thickness columns in table order.
pub fn analyze_dataset(table: &SubjectTable, columns: Option<&[String]>) -> Result<AnalysisReport, StatsError> {
    let selected: Vec<String> = match columns {
        Some(c) => c.to_vec(),
        None => table.thickness_names.clone(),
    };
    if selected.is_empty() {
        return Err(StatsError::MissingColumn("<thickness>".into()));
    }
    let design = thickness_design(table);
    let mut fits = Vec::with_capacity(selected.len());
    for name in &selected {
        let y = table.column(name).ok_or_else(|| StatsError::MissingColumn(name.clone()))?;
        let fit = fit_glm(y, &design).map_err(|e| StatsError::Column { column: name.clone(), source: Box::new(e) })?;
        fits.push(fit);
    }
    let m = fits[0].index_of("motion").expect("motion is in the design");
    let raw: Vec<f64> = fits.iter().map(|f| f.p_values[m]).collect();
    let adjusted = bh_fdr(&raw)?;
    let columns: Vec<ColumnResult> = selected
        .into_iter()
        .zip(fits)
        .zip(adjusted)
        .map(|((column, fit), fdr_p)| ColumnResult {
            column,
            motion_coef: fit.coefficients[m],
            motion_se: fit.std_errors[m],
            raw_p: fit.p_values[m],
            fdr_p,
            significant: fdr_p < ALPHA,
            pseudo_r2: fit.pseudo_r2,
            fit,
        })
        .collect();
    let n_sig = columns.iter().filter(|c| c.significant).count();
    Ok(AnalysisReport {
        n_subjects: table.rows(),
        alpha: ALPHA,
        sex_coding: SEX_CODING,
        pseudo_r2_variant: PSEUDO_R2_VARIANT,
        percent_significant: 100.0 * n_sig as f64 / columns.len() as f64,
        columns,
    })
}

/// `motion ~ age + c`.
pub fn age_motion_fit(table: &SubjectTable) -> Result<GlmFit, StatsError> {
    fit_glm(&table.motion, &Design::with_intercept(table.rows()).column("age", table.age.clone()))
}

impl AnalysisReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), StatsError> {
        let err = |e: csv::Error| StatsError::Parse(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["column", "motion_coef", "motion_se", "raw_p", "fdr_p", "significant", "pseudo_r2"])
            .map_err(err)?;
        for c in &self.columns {
            w.write_record([
                c.column.clone(),
                c.motion_coef.to_string(),
                c.motion_se.to_string(),
                c.raw_p.to_string(),
                c.fdr_p.to_string(),
                c.significant.to_string(),
                c.pseudo_r2.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| StatsError::Parse(e.to_string()))
    }

    pub fn to_table_string(&self) -> String {
        let width = self.columns.iter().map(|c| c.column.len()).max().unwrap_or(0).max(6);
        let mut s = String::new();
        let _ = writeln!(s, "# n = {}; {}; pseudo-R2 = {}", self.n_subjects, self.sex_coding, self.pseudo_r2_variant);
        let _ = writeln!(s, "{:<width$}  {:>10}  {:>10}  {:>10}  {:>4}", "column", "beta_mot", "raw_p", "fdr_p", "sig");
        for c in &self.columns {
            let _ = writeln!(
                s,
                "{:<width$}  {:>10.4}  {:>10.3e}  {:>10.3e}  {:>4}",
                c.column,
                c.motion_coef,
                c.raw_p,
                c.fdr_p,
                if c.significant { "*" } else { "" }
            );
        }
        let _ = writeln!(s, "significant at FDR {}: {:.1}%", self.alpha, self.percent_significant);
        s
    }
}
