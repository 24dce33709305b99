//! Helpers shared by integration test targets.
#![allow(dead_code)]

use kmotion::softlabel::{encode, BinGrid, SoftLabel};
use kmotion::stats::SubjectTable;
use kmotion::tinynet::{Batch, Net, NetConfig, ParamKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug)]
pub struct GradCheck {
    pub checked: usize,
    pub skipped_kinks: usize,
    /// Parameters with an exactly zero analytic gradient, checked absolutely.
    pub zero_grads: usize,
    pub max_zero_abs: f64,
    pub max_rel: f64,
    /// Maximum relative error per parameter kind.
    pub per_kind: Vec<(ParamKind, f64, usize)>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Five-point central differences against the analytic gradient of the
/// training-mode loss on a 64-bit toy network. Parameters whose perturbation
/// moves a ReLU or max-pool decision are redrawn.
pub fn gradient_check(cfg: NetConfig, n_params: usize, seed: u64) -> GradCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Net::<f64>::new(cfg.clone(), seed).unwrap();
    // move batch-norm and head parameters off their trivial initial values
    for p in net.params_mut().entries_mut() {
        match p.kind {
            ParamKind::BnScale => p.value.iter_mut().for_each(|v| *v = rng.random_range(0.5..1.5)),
            ParamKind::BnShift | ParamKind::Bias => p.value.iter_mut().for_each(|v| *v = rng.random_range(-0.3..0.3)),
            _ => {}
        }
    }
    let n = 2;
    let d = cfg.input_dims;
    let voxels = d.iter().product::<usize>();
    let batch = Batch::new(n, d, (0..n * voxels).map(|_| rng.random::<f64>()).collect()).unwrap();
    let grid = BinGrid::new(-0.5, 4.5, cfg.n_bins).unwrap();
    let targets: Vec<SoftLabel<f64>> = (0..n).map(|_| encode(rng.random_range(0.0..4.0), 0.3, &grid)).collect();
    let (dropout, dseed) = (0.3, rng.random::<u64>());

    let (_, grads, out) = net.loss_and_grad(&batch, &targets, dropout, dseed).unwrap();
    let base_sig = out.trace.as_ref().unwrap().activation_signature();

    let trainable: Vec<usize> = (0..net.params().len()).filter(|&i| net.params().get(i).kind.trainable()).collect();
    let h = 1e-4;
    let mut report = GradCheck {
        checked: 0,
        skipped_kinks: 0,
        zero_grads: 0,
        max_zero_abs: 0.0,
        max_rel: 0.0,
        per_kind: Vec::new(),
    };
    let mut round = 0usize;
    while report.checked < n_params {
        // cycle over tensors so every layer type is covered
        let t = trainable[round % trainable.len()];
        round += 1;
        let j = rng.random_range(0..net.params().get(t).len());
        let orig = net.params().get(t).value[j];
        let mut eval = |delta: f64| {
            net.params_mut().get_mut(t).value[j] = orig + delta;
            let o = net.forward_traced(&batch, dropout, dseed).unwrap();
            let sig = o.trace.as_ref().unwrap().activation_signature();
            (net.loss(&o, &targets).unwrap(), sig == base_sig)
        };
        let (fp2, s1) = eval(2.0 * h);
        let (fp1, s2) = eval(h);
        let (fm1, s3) = eval(-h);
        let (fm2, s4) = eval(-2.0 * h);
        net.params_mut().get_mut(t).value[j] = orig;
        if !(s1 && s2 && s3 && s4) {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
        let analytic = grads.g[t][j];
        if analytic == 0.0 {
            // unit inactive for this batch: only finite-difference roundoff remains
            report.zero_grads += 1;
            report.max_zero_abs = report.max_zero_abs.max(numeric.abs());
            continue;
        }
        let e = rel(analytic, numeric);
        let kind = net.params().get(t).kind;
        match report.per_kind.iter_mut().find(|(k, _, _)| *k == kind) {
            Some(entry) => {
                entry.1 = entry.1.max(e);
                entry.2 += 1;
            }
            None => report.per_kind.push((kind, e, 1)),
        }
        report.max_rel = report.max_rel.max(e);
        report.checked += 1;
    }
    report
}

/// Step-up BH by definition: `q_i = min over p_k ≥ p_i of p_k·m / rank(p_k)`,
/// with `rank` the count of values `≤ p_k`, capped at 1.
pub fn brute_bh(p: &[f64]) -> Vec<f64> {
    let m = p.len() as f64;
    p.iter()
        .map(|&pi| {
            p.iter()
                .filter(|&&pk| pk >= pi)
                .map(|&pk| pk * m / p.iter().filter(|&&x| x <= pk).count() as f64)
                .fold(1.0f64, f64::min)
        })
        .collect()
}

/// Spearman by counting: midranks from `#less + (#equal + 1)/2`, then the
/// textbook Pearson formula.
pub fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count() as f64;
                let equal = v.iter().filter(|&&b| b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Two-way ANOVA from sums of squares: returns `(MSR, MSC, MSE, ICC(2,k))`.
pub fn anova_icc(rows: &[Vec<f64>]) -> (f64, f64, f64, f64) {
    let n = rows.len();
    let k = rows[0].len();
    let total: f64 = rows.iter().flatten().sum();
    let grand = total / (n * k) as f64;
    let mut ss_rows = 0.0;
    for r in rows {
        let m = r.iter().sum::<f64>() / k as f64;
        ss_rows += k as f64 * (m - grand).powi(2);
    }
    let mut ss_cols = 0.0;
    for j in 0..k {
        let m = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        ss_cols += n as f64 * (m - grand).powi(2);
    }
    let ss_total: f64 = rows.iter().flatten().map(|x| (x - grand).powi(2)).sum();
    let ss_err = ss_total - ss_rows - ss_cols;
    let msr = ss_rows / (n - 1) as f64;
    let msc = ss_cols / (k - 1) as f64;
    let mse = ss_err / ((n - 1) * (k - 1)) as f64;
    (msr, msc, mse, (msr - mse) / (msr + (msc - mse) / n as f64))
}

/// Generating coefficients `(const, age, sex, motion)` of the thickness model.
pub const GENERATING_BETA: [f64; 4] = [3.1017, -0.0229, 0.0345, -0.1480];

pub struct Subjects {
    pub age: Vec<f64>,
    pub sex: Vec<f64>,
    pub motion: Vec<f64>,
}

pub fn subjects(n: usize, rng: &mut impl Rng) -> Subjects {
    Subjects {
        age: (0..n).map(|_| rng.random_range(18.0..80.0)).collect(),
        sex: (0..n).map(|_| f64::from(rng.random_bool(0.5))).collect(),
        motion: (0..n).map(|_| rng.random_range(0.0..4.0)).collect(),
    }
}

/// `y = β·(1, age, sex, motion) + N(0, σ²)`.
pub fn response(s: &Subjects, beta: [f64; 4], sigma: f64, rng: &mut impl Rng) -> Vec<f64> {
    let noise = Normal::new(0.0, sigma).unwrap();
    (0..s.age.len())
        .map(|i| beta[0] + beta[1] * s.age[i] + beta[2] * s.sex[i] + beta[3] * s.motion[i] + noise.sample(rng))
        .collect()
}

/// Table whose every thickness column follows the generating model with
/// motion coefficient `motion_beta`.
pub fn synthetic_table(n: usize, columns: usize, motion_beta: f64, sigma: f64, seed: u64) -> SubjectTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = subjects(n, &mut rng);
    let beta = [GENERATING_BETA[0], GENERATING_BETA[1], GENERATING_BETA[2], motion_beta];
    let thickness: Vec<Vec<f64>> = (0..columns).map(|_| response(&s, beta, sigma, &mut rng)).collect();
    SubjectTable::new(
        (0..n).map(|i| format!("sub-{i:04}")).collect(),
        s.age,
        s.sex,
        s.motion,
        (0..columns).map(|j| format!("region_{j}")).collect(),
        thickness,
    )
    .unwrap()
}
