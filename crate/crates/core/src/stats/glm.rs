use serde::Serialize;

use super::dist::{two_sided_p, Z_975};
use super::StatsError;

/// Name of the goodness-of-fit variant reported as `pseudo_r2`.
pub const PSEUDO_R2_VARIANT: &str = "1 - RSS/TSS (Gaussian identity link)";

/// Column-major design matrix with named columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    n: usize,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Design {
    /// Design with a leading all-ones column named `const`.
    pub fn with_intercept(n: usize) -> Self {
        Self { n, names: vec!["const".into()], columns: vec![vec![1.0; n]] }
    }

    pub fn empty(n: usize) -> Self {
        Self { n, names: Vec::new(), columns: Vec::new() }
    }

    pub fn column(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.n, "design column length mismatch");
        self.names.push(name.into());
        self.columns.push(values);
        self
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }
}

/// Least-squares fit of a Gaussian identity-link GLM with z-based inference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlmFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub z: Vec<f64>,
    pub p_values: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub pseudo_r2: f64,
    pub rss: f64,
    pub n: usize,
    pub p: usize,
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl GlmFit {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Fits `y ≈ Xβ` by Householder QR. Standard errors come from
/// `σ̂²(XᵀX)⁻¹` with `σ̂² = RSS/(n − p)`; p-values are two-sided normal.
pub fn fit_glm(y: &[f64], x: &Design) -> Result<GlmFit, StatsError> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(StatsError::Length(format!("response has {} rows, design has {n}", y.len())));
    }
    if n <= p {
        return Err(StatsError::TooFewRows { n, p });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite("response".into()));
    }
    if let Some(j) = (0..p).find(|&j| x.col(j).iter().any(|v| !v.is_finite())) {
        return Err(StatsError::NonFinite(x.names()[j].clone()));
    }

    let mut a: Vec<Vec<f64>> = x.columns.clone();
    let mut qty = y.to_vec();
    let col_norms: Vec<f64> = a.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    for j in 0..p {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-10 * col_norms[j].max(f64::MIN_POSITIVE) || norm == 0.0 {
            return Err(StatsError::RankDeficient(x.names()[j].clone()));
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vnorm2;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        };
        for col in a.iter_mut().skip(j) {
            reflect(&mut col[j..]);
        }
        reflect(&mut qty[j..]);
    }

    // r[i][j] = a[j][i] for i <= j
    let r = |i: usize, j: usize| a[j][i];
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }

    // R⁻¹, upper triangular
    let mut rinv = vec![vec![0.0; p]; p];
    for c in 0..p {
        rinv[c][c] = 1.0 / r(c, c);
        for i in (0..c).rev() {
            let s: f64 = (i + 1..=c).map(|k| r(i, k) * rinv[k][c]).sum();
            rinv[i][c] = -s / r(i, i);
        }
    }

    let residuals: Vec<f64> = (0..n).map(|i| y[i] - (0..p).map(|j| x.col(j)[i] * beta[j]).sum::<f64>()).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    // a response constant up to rounding has no variance to explain
    let y_scale: f64 = y.iter().map(|v| v * v).sum();
    let pseudo_r2 = if tss > 1e-24 * y_scale { 1.0 - rss / tss } else { 0.0 };
    let sigma2 = rss / (n - p) as f64;

    let std_errors: Vec<f64> =
        (0..p).map(|j| (sigma2 * (j..p).map(|k| rinv[j][k] * rinv[j][k]).sum::<f64>()).sqrt()).collect();
    let z: Vec<f64> = beta
        .iter()
        .zip(&std_errors)
        .map(|(&b, &se)| {
            if se > 0.0 {
                b / se
            } else if b == 0.0 {
                0.0
            } else {
                b.signum() * f64::INFINITY
            }
        })
        .collect();
    let p_values = z.iter().map(|&z| two_sided_p(z)).collect();
    let ci_low = beta.iter().zip(&std_errors).map(|(b, se)| b - Z_975 * se).collect();
    let ci_high = beta.iter().zip(&std_errors).map(|(b, se)| b + Z_975 * se).collect();

    Ok(GlmFit {
        names: x.names().to_vec(),
        coefficients: beta,
        std_errors,
        z,
        p_values,
        ci_low,
        ci_high,
        pseudo_r2,
        rss,
        n,
        p,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_line_is_recovered() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 + 2.0 * v).collect();
        let fit = fit_glm(&y, &Design::with_intercept(20).column("x", x)).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-8);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-8);
        assert!((fit.pseudo_r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_response() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let fit = fit_glm(&[4.2; 10], &Design::with_intercept(10).column("x", x)).unwrap();
        assert!(fit.coefficients[1].abs() < 1e-12);
        assert_eq!(fit.pseudo_r2, 0.0);
    }

    #[test]
    fn matches_normal_equations() {
        // small problem solved by hand via (XᵀX)⁻¹Xᵀy
        let x = vec![1.0, 2.0, 4.0, 7.0];
        let y = vec![1.0, 3.0, 2.0, 6.0];
        let fit = fit_glm(&y, &Design::with_intercept(4).column("x", x.clone())).unwrap();
        let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let det = 4.0 * sxx - sx * sx;
        let slope = (4.0 * sxy - sx * sy) / det;
        let icpt = (sxx * sy - sx * sxy) / det;
        assert!((fit.coefficients[0] - icpt).abs() < 1e-12);
        assert!((fit.coefficients[1] - slope).abs() < 1e-12);
        let rss: f64 = x.iter().zip(&y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
        let s2 = rss / 2.0;
        assert!((fit.std_errors[1] - (s2 * 4.0 / det).sqrt()).abs() < 1e-12);
        assert!((fit.std_errors[0] - (s2 * sxx / det).sqrt()).abs() < 1e-12);
        assert!((fit.ci_high[1] - fit.ci_low[1] - 2.0 * Z_975 * fit.std_errors[1]).abs() < 1e-12);
    }

    #[test]
    fn collinear_column_is_named() {
        let a: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v + 1.0).collect();
        let d = Design::with_intercept(8).column("a", a).column("b", b);
        assert_eq!(fit_glm(&[0.0, 1.0, 0.0, 1.0, 2.0, 1.0, 3.0, 2.0], &d), Err(StatsError::RankDeficient("b".into())));
    }

    #[test]
    fn too_few_rows() {
        let d = Design::with_intercept(2).column("a", vec![1.0, 2.0]);
        assert_eq!(fit_glm(&[1.0, 2.0], &d), Err(StatsError::TooFewRows { n: 2, p: 2 }));
    }
}
