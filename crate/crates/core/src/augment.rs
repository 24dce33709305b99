//! Intensity and anatomy augmentation.
//!
//! Training-time augmentation runs in two stages: a base stage (random
//! sagittal flip, then either Gaussian noise or Gaussian smoothing) and a
//! contrast stage (either a gamma change or a random histogram shift).
//! Elastic deformation and flips are also used before motion synthesis to
//! vary anatomy.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::volume::{flip_sagittal, minmax_scale, Volume3D};

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("gamma adjustment needs intensities in [0, 1]; found {0}")]
    OutOfUnitRange(f64),
    #[error("invalid augmentation policy: {0}")]
    InvalidPolicy(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams {
    /// Control points per axis.
    pub grid: usize,
    pub max_displacement_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentPolicy {
    pub p_flip: f64,
    pub p_base_noise_or_blur: f64,
    /// Noise standard deviation, as a fraction of the [0, 1] intensity range.
    pub noise_std_range: (f64, f64),
    pub blur_sigma_range: (f64, f64),
    pub log_gamma_range: (f64, f64),
    /// Probability that the contrast stage picks gamma over histogram shift.
    pub p_gamma: f64,
    pub hist_shift_control_points: usize,
    pub elastic: ElasticParams,
    pub rng_seed: u64,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        Self {
            p_flip: 0.5,
            p_base_noise_or_blur: 0.8,
            noise_std_range: (0.005, 0.05),
            blur_sigma_range: (0.3, 1.2),
            log_gamma_range: (-0.3, 0.3),
            p_gamma: 0.5,
            hist_shift_control_points: 5,
            elastic: ElasticParams { grid: 7, max_displacement_mm: 4.0 },
            rng_seed: 0,
        }
    }
}

impl AugmentPolicy {
    pub fn validate(&self) -> Result<(), AugmentError> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        let ordered = |r: (f64, f64)| r.0 <= r.1 && r.0.is_finite() && r.1.is_finite();
        let checks = [
            (prob(self.p_flip), "p_flip"),
            (prob(self.p_base_noise_or_blur), "p_base_noise_or_blur"),
            (prob(self.p_gamma), "p_gamma"),
            (ordered(self.noise_std_range) && self.noise_std_range.0 >= 0.0, "noise_std_range"),
            (ordered(self.blur_sigma_range) && self.blur_sigma_range.0 >= 0.0, "blur_sigma_range"),
            (ordered(self.log_gamma_range), "log_gamma_range"),
            (self.hist_shift_control_points >= 3, "hist_shift_control_points"),
            (self.elastic.grid >= 2, "elastic.grid"),
            (self.elastic.max_displacement_mm >= 0.0, "elastic.max_displacement_mm"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, name)) => Err(AugmentError::InvalidPolicy((*name).to_string())),
            None => Ok(()),
        }
    }
}

fn uniform(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..=range.1)
    } else {
        range.0
    }
}

/// Adds iid `N(0, std²)` noise.
pub fn add_gaussian_noise<T: Real>(v: &Volume3D<T>, std: f64, rng: &mut impl Rng) -> Volume3D<T> {
    assert!(std >= 0.0 && std.is_finite(), "noise std must be non-negative");
    if std == 0.0 {
        return v.clone();
    }
    let normal = Normal::new(0.0, std).expect("valid std");
    let data = v.data().iter().map(|&x| x + T::lit(normal.sample(rng))).collect();
    v.replace_data(data)
}

/// Normalised Gaussian kernel truncated at 4σ (σ in voxels).
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Separable Gaussian smoothing with per-axis σ in millimetres. Borders
/// replicate the edge voxel, so constant volumes are fixed points.
pub fn gaussian_blur<T: Real>(v: &Volume3D<T>, sigma_mm: [f64; 3]) -> Volume3D<T> {
    assert!(sigma_mm.iter().all(|&s| s >= 0.0), "blur sigma must be non-negative");
    let dims = v.dims();
    let spacing = v.spacing();
    let mut data: Vec<f64> = v.data().iter().map(|x| x.to_f64_lossy()).collect();
    let strides = [1, dims[0], dims[0] * dims[1]];
    for axis in 0..3 {
        if sigma_mm[axis] == 0.0 || dims[axis] == 1 {
            continue;
        }
        let kernel = gaussian_kernel(sigma_mm[axis] / spacing[axis]);
        let radius = (kernel.len() / 2) as isize;
        let n = dims[axis] as isize;
        let stride = strides[axis];
        let mut line = vec![0.0; dims[axis]];
        let mut out = data.clone();
        for start in line_starts(dims, axis) {
            for (i, l) in line.iter_mut().enumerate() {
                *l = data[start + i * stride];
            }
            for i in 0..n {
                let mut acc = 0.0;
                for (j, w) in kernel.iter().enumerate() {
                    let src = (i + j as isize - radius).clamp(0, n - 1);
                    acc += w * line[src as usize];
                }
                out[start + i as usize * stride] = acc;
            }
        }
        data = out;
    }
    v.replace_data(data.into_iter().map(T::lit).collect())
}

/// Linear indices of the first voxel of every line along `axis`.
fn line_starts(dims: [usize; 3], axis: usize) -> Vec<usize> {
    let strides = [1, dims[0], dims[0] * dims[1]];
    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    let mut out = Vec::with_capacity(dims[others[0]] * dims[others[1]]);
    for j in 0..dims[others[1]] {
        for i in 0..dims[others[0]] {
            out.push(i * strides[others[0]] + j * strides[others[1]]);
        }
    }
    out
}

/// `v^exp(log_gamma)` on a min-max scaled volume.
pub fn gamma_adjust<T: Real>(v: &Volume3D<T>, log_gamma: f64) -> Result<Volume3D<T>, AugmentError> {
    let (lo, hi) = v.min_max();
    let (lo, hi) = (lo.to_f64_lossy(), hi.to_f64_lossy());
    if lo < -1e-6 {
        return Err(AugmentError::OutOfUnitRange(lo));
    }
    if hi > 1.0 + 1e-6 {
        return Err(AugmentError::OutOfUnitRange(hi));
    }
    if log_gamma == 0.0 {
        return Ok(v.clone());
    }
    let gamma = T::lit(log_gamma.exp());
    Ok(v.map(|x| x.max(T::zero()).min(T::one()).powf(gamma)))
}

/// Monotone piecewise-linear intensity map on [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityMap {
    inputs: Vec<f64>,
    outputs: Vec<f64>,
}

impl IntensityMap {
    /// `inputs` must be strictly increasing from 0 to 1 and `outputs`
    /// non-decreasing with the same length.
    pub fn new(inputs: Vec<f64>, outputs: Vec<f64>) -> Self {
        assert!(inputs.len() >= 2 && inputs.len() == outputs.len(), "control point count mismatch");
        assert!(inputs.windows(2).all(|w| w[0] < w[1]), "control inputs must increase");
        assert!(outputs.windows(2).all(|w| w[0] <= w[1]), "control outputs must not decrease");
        Self { inputs, outputs }
    }

    /// The identity map with `n` equally spaced control points.
    pub fn identity(n: usize) -> Self {
        let xs = control_inputs(n);
        Self::new(xs.clone(), xs)
    }

    /// Random map: interior outputs are sorted uniform draws, endpoints pinned to 0 and 1.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        assert!(n >= 3, "histogram shift needs at least 3 control points");
        let mut ys: Vec<f64> = (0..n - 2).map(|_| rng.random::<f64>()).collect();
        ys.sort_by(f64::total_cmp);
        ys.insert(0, 0.0);
        ys.push(1.0);
        Self::new(control_inputs(n), ys)
    }

    pub fn apply(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let seg = self.inputs.partition_point(|&c| c <= x).clamp(1, self.inputs.len() - 1);
        let (x0, x1) = (self.inputs[seg - 1], self.inputs[seg]);
        let (y0, y1) = (self.outputs[seg - 1], self.outputs[seg]);
        let y = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        y.clamp(0.0, 1.0)
    }
}

fn control_inputs(n: usize) -> Vec<f64> {
    (0..n).map(|i| if i == n - 1 { 1.0 } else { i as f64 / (n - 1) as f64 }).collect()
}

pub fn apply_intensity_map<T: Real>(v: &Volume3D<T>, map: &IntensityMap) -> Volume3D<T> {
    v.map(|x| T::lit(map.apply(x.to_f64_lossy())))
}

/// Random monotone histogram shift on a [0, 1] volume.
pub fn histogram_shift<T: Real>(v: &Volume3D<T>, num_control_points: usize, rng: &mut impl Rng) -> Volume3D<T> {
    apply_intensity_map(v, &IntensityMap::random(num_control_points, rng))
}

/// Random smooth deformation: uniform control-grid displacements in mm,
/// trilinearly upsampled to the voxel grid, applied by inverse warping.
pub fn elastic_deform<T: Real>(v: &Volume3D<T>, params: &ElasticParams, rng: &mut impl Rng) -> Volume3D<T> {
    assert!(params.grid >= 2, "elastic grid needs at least 2 control points per axis");
    let g = params.grid;
    let max = params.max_displacement_mm;
    let field: Vec<[f64; 3]> = (0..g * g * g)
        .map(|_| std::array::from_fn(|_| if max > 0.0 { rng.random_range(-max..=max) } else { 0.0 }))
        .collect();
    if max == 0.0 {
        return v.clone();
    }
    let dims = v.dims();
    let spacing = v.spacing();
    let control = |ix: usize, iy: usize, iz: usize| field[ix + g * (iy + g * iz)];
    let to_grid = |i: usize, n: usize| if n > 1 { i as f64 * (g - 1) as f64 / (n - 1) as f64 } else { 0.0 };

    let mut out = Vec::with_capacity(v.len());
    for z in 0..dims[2] {
        let gz = to_grid(z, dims[2]);
        for y in 0..dims[1] {
            let gy = to_grid(y, dims[1]);
            for x in 0..dims[0] {
                let gx = to_grid(x, dims[0]);
                let d = interp_field(&control, [gx, gy, gz], g);
                let p = [x as f64 + d[0] / spacing[0], y as f64 + d[1] / spacing[1], z as f64 + d[2] / spacing[2]];
                out.push(T::lit(v.sample_trilinear(p)));
            }
        }
    }
    v.replace_data(out)
}

fn interp_field(control: &impl Fn(usize, usize, usize) -> [f64; 3], p: [f64; 3], g: usize) -> [f64; 3] {
    let base = p.map(|c| (c.floor() as usize).min(g - 2));
    let w: [f64; 3] = std::array::from_fn(|a| p[a] - base[a] as f64);
    let mut acc = [0.0; 3];
    for dz in 0..2 {
        let wz = if dz == 0 { 1.0 - w[2] } else { w[2] };
        for dy in 0..2 {
            let wy = if dy == 0 { 1.0 - w[1] } else { w[1] };
            for dx in 0..2 {
                let wx = if dx == 0 { 1.0 - w[0] } else { w[0] };
                let c = control(base[0] + dx, base[1] + dy, base[2] + dz);
                for a in 0..3 {
                    acc[a] += wx * wy * wz * c[a];
                }
            }
        }
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaseOp {
    Noise,
    Blur,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContrastOp {
    Gamma,
    HistogramShift,
}

/// Which branches one pipeline run took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineTrace {
    pub flipped: bool,
    pub base: Option<BaseOp>,
    pub contrast: ContrastOp,
}

pub fn apply_training_pipeline<T: Real>(v: &Volume3D<T>, policy: &AugmentPolicy, rng: &mut impl Rng) -> Volume3D<T> {
    apply_training_pipeline_traced(v, policy, rng).0
}

/// Runs the two-stage pipeline on a cropped, min-max scaled volume and
/// reports the branches taken. The result is re-scaled to [0, 1].
pub fn apply_training_pipeline_traced<T: Real>(
    v: &Volume3D<T>,
    policy: &AugmentPolicy,
    rng: &mut impl Rng,
) -> (Volume3D<T>, PipelineTrace) {
    let flipped = rng.random_bool(policy.p_flip);
    let mut out = if flipped { flip_sagittal(v) } else { v.clone() };

    let base = if rng.random_bool(policy.p_base_noise_or_blur) {
        if rng.random_bool(0.5) {
            let std = uniform(rng, policy.noise_std_range);
            out = add_gaussian_noise(&out, std, rng);
            Some(BaseOp::Noise)
        } else {
            let sigma = uniform(rng, policy.blur_sigma_range);
            out = gaussian_blur(&out, [sigma; 3]);
            Some(BaseOp::Blur)
        }
    } else {
        None
    };
    if base.is_some() {
        out = minmax_scale(&out);
    }

    let contrast = if rng.random_bool(policy.p_gamma) {
        let lg = uniform(rng, policy.log_gamma_range);
        out = gamma_adjust(&out, lg).unwrap_or_else(|_| gamma_adjust(&minmax_scale(&out), lg).expect("scaled input"));
        ContrastOp::Gamma
    } else {
        out = histogram_shift(&out, policy.hist_shift_control_points, rng);
        ContrastOp::HistogramShift
    };

    (minmax_scale(&out), PipelineTrace { flipped, base, contrast })
}
