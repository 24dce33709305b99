use super::StatsError;

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
///
/// For ascending p-values `p₍₁₎ ≤ … ≤ p₍ₘ₎` the adjusted value of rank `i`
/// is `min_{j ≥ i} p₍ⱼ₎·m/j`, capped at 1.
pub fn bh_fdr(pvals: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some((i, &p)) = pvals.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::PValueRange(p, i));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        running = running.min(pvals[idx] * m as f64 / (rank + 1) as f64);
        // max() keeps adjusted >= raw exact under rounding of p·m/j
        adjusted[idx] = running.min(1.0).max(pvals[idx]);
    }
    Ok(adjusted)
}
