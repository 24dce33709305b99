use serde::Serialize;

use super::dist::{f_quantile, f_sf};
use super::StatsError;

/// Complete `n_subjects × k_raters` ratings, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingsMatrix {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl RatingsMatrix {
    pub fn new(n: usize, k: usize, values: Vec<f64>) -> Result<Self, StatsError> {
        if n < 2 || k < 2 {
            return Err(StatsError::Length(format!("ICC needs at least 2 subjects and 2 raters, got {n}×{k}")));
        }
        if values.len() != n * k {
            return Err(StatsError::Length(format!("{} ratings for a {n}×{k} matrix", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite("ratings".into()));
        }
        Ok(Self { n, k, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, StatsError> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(StatsError::Length("ragged ratings rows".into()));
        }
        Self::new(rows.len(), k, rows.concat())
    }

    pub fn get(&self, subject: usize, rater: usize) -> f64 {
        self.values[subject * self.k + rater]
    }

    pub fn subjects(&self) -> usize {
        self.n
    }

    pub fn raters(&self) -> usize {
        self.k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IccResult {
    pub icc: f64,
    pub p_value: f64,
    pub ci95: (f64, f64),
    pub f_stat: f64,
    pub df1: f64,
    pub df2: f64,
    pub ms_rows: f64,
    pub ms_cols: f64,
    pub ms_error: f64,
}

/// Two-way random-effects, average-measure, absolute-agreement ICC(2,k).
///
/// From the two-way ANOVA mean squares (subjects `MSR`, raters `MSC`,
/// residual `MSE`): `ICC = (MSR − MSE) / (MSR + (MSC − MSE)/n)`. The p-value
/// tests `F = MSR/MSE` on `(n−1, (n−1)(k−1))` degrees of freedom.
///
/// The 95% interval is the McGraw & Wong (1996) construction for absolute
/// agreement: with `ρ` the single-measure ICC(2,1) and `Fj = MSC/MSE`,
///
/// ```text
/// v   = (k−1)(n−1)·(kρFj + n(1+(k−1)ρ) − kρ)² / ((n−1)k²ρ²Fj² + (n(1+(k−1)ρ) − kρ)²)
/// F*  = F_{0.975}(n−1, v),  F** = F_{0.975}(v, n−1)
/// L   = n(MSR − F*·MSE) / (F*(k·MSC + (kn−k−n)MSE) + n·MSR)
/// U   = n(F**·MSR − MSE) / (k·MSC + (kn−k−n)MSE + n·F**·MSR)
/// ```
///
/// and each single-measure bound `b` is stepped up to `kb / (1 + (k−1)b)`.
pub fn icc_2k(m: &RatingsMatrix) -> Result<IccResult, StatsError> {
    let (n, k) = (m.n, m.k);
    let (nf, kf) = (n as f64, k as f64);
    let grand = m.values.iter().sum::<f64>() / (nf * kf);
    let row_means: Vec<f64> = (0..n).map(|i| (0..k).map(|j| m.get(i, j)).sum::<f64>() / kf).collect();
    let col_means: Vec<f64> = (0..k).map(|j| (0..n).map(|i| m.get(i, j)).sum::<f64>() / nf).collect();

    let ss_rows = kf * row_means.iter().map(|r| (r - grand).powi(2)).sum::<f64>();
    let ss_cols = nf * col_means.iter().map(|c| (c - grand).powi(2)).sum::<f64>();
    let ss_total: f64 = m.values.iter().map(|v| (v - grand).powi(2)).sum();
    let ss_error = (ss_total - ss_rows - ss_cols).max(0.0);

    let df1 = nf - 1.0;
    let df_cols = kf - 1.0;
    let df2 = df1 * df_cols;
    let msr = ss_rows / df1;
    let msc = ss_cols / df_cols;
    let mse = ss_error / df2;

    let denom = msr + (msc - mse) / nf;
    if !(denom.abs() > 1e-300) {
        return Err(StatsError::DegenerateIcc(format!("MSR + (MSC − MSE)/n = {denom}")));
    }
    let icc = (msr - mse) / denom;

    let scale = msr.abs().max(msc.abs()).max(f64::MIN_POSITIVE);
    if mse <= 1e-14 * scale {
        // error-free ratings: the F statistic is unbounded
        return Ok(IccResult {
            icc,
            p_value: 0.0,
            ci95: (icc, icc),
            f_stat: f64::INFINITY,
            df1,
            df2,
            ms_rows: msr,
            ms_cols: msc,
            ms_error: mse,
        });
    }

    let f_stat = msr / mse;
    let p_value = f_sf(f_stat, df1, df2);

    let rho = (msr - mse) / (msr + (kf - 1.0) * mse + kf * (msc - mse) / nf);
    let fj = msc / mse;
    let a = nf * (1.0 + (kf - 1.0) * rho) - kf * rho;
    let vn = (kf - 1.0) * (nf - 1.0) * (kf * rho * fj + a).powi(2);
    let vd = (nf - 1.0) * kf * kf * rho * rho * fj * fj + a * a;
    let v = vn / vd;
    let f_lo = f_quantile(0.975, df1, v);
    let f_hi = f_quantile(0.975, v, df1);
    let c = kf * msc + (kf * nf - kf - nf) * mse;
    let lower = nf * (msr - f_lo * mse) / (f_lo * c + nf * msr);
    let upper = nf * (f_hi * msr - mse) / (c + nf * f_hi * msr);
    let step_up = |b: f64| kf * b / (1.0 + (kf - 1.0) * b);

    Ok(IccResult {
        icc,
        p_value,
        ci95: (step_up(lower), step_up(upper)),
        f_stat,
        df1,
        df2,
        ms_rows: msr,
        ms_cols: msc,
        ms_error: mse,
    })
}
