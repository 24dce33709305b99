//! Smooth synthetic head-like volumes for tests and toy training data.

use rand::Rng;

use crate::kspace::{simulate_motion, KSpaceConfig};
use crate::sampler::{sample_target, sample_trajectory, stream_rng, SamplerConfig, SamplerError};
use crate::scalar::Real;
use crate::tinynet::LabeledVolume;
use crate::volume::{minmax_scale, Volume3D};

/// Shape parameters for [`head_phantom`], as fractions of the half-extent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhantomShape {
    pub radii: [f64; 3],
    pub offset: [f64; 3],
    pub inner_scale: f64,
    pub inner_intensity: f64,
    pub edge: f64,
}

impl Default for PhantomShape {
    fn default() -> Self {
        Self { radii: [0.7, 0.8, 0.65], offset: [0.0; 3], inner_scale: 0.45, inner_intensity: 0.5, edge: 0.03 }
    }
}

impl PhantomShape {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut r = || rng.random_range(-1.0..1.0);
        Self {
            radii: [0.7 + 0.08 * r(), 0.78 + 0.08 * r(), 0.65 + 0.08 * r()],
            offset: [0.05 * r(), 0.05 * r(), 0.05 * r()],
            inner_scale: 0.45 + 0.08 * r(),
            inner_intensity: 0.5 + 0.15 * r(),
            edge: 0.02 + 0.008 * r(),
        }
    }
}

fn smooth_step(signed: f64, edge: f64) -> f64 {
    0.5 * (1.0 - (signed / edge).tanh())
}

/// Ellipsoidal "head" with a darker inner ellipsoid and a small bright blob,
/// all with soft `tanh` edges. Values lie in `[0, 1]`.
pub fn head_phantom<T: Real>(dims: [usize; 3], shape: &PhantomShape) -> Volume3D<T> {
    let half = dims.map(|d| d as f64 / 2.0);
    Volume3D::from_fn(dims, |x, y, z| {
        let p = [x, y, z];
        let u: [f64; 3] = std::array::from_fn(|a| (p[a] as f64 + 0.5 - half[a]) / half[a] - shape.offset[a]);
        let ell = |scale: f64| {
            let r2: f64 = (0..3).map(|a| (u[a] / (shape.radii[a] * scale)).powi(2)).sum();
            r2.sqrt() - 1.0
        };
        let head = smooth_step(ell(1.0), shape.edge);
        let inner = smooth_step(ell(shape.inner_scale), shape.edge);
        let blob_r2 = (u[0] - 0.25).powi(2) + (u[1] + 0.2).powi(2) + (u[2] - 0.1).powi(2);
        let blob = (-blob_r2 / 0.01).exp();
        let v = head * (1.0 - (1.0 - shape.inner_intensity) * inner) * (1.0 - 0.3 * blob) + 0.3 * blob * head;
        T::lit(v.clamp(0.0, 1.0))
    })
    .expect("non-zero phantom dims")
}

/// `count` randomly shaped phantoms with isotropic `spacing_mm`, each
/// corrupted by a sampled trajectory with a uniform target score, min-max
/// scaled and labelled with the achieved score. Item `i` uses stream `i` of
/// `seed`.
pub fn motion_phantoms(
    count: usize,
    dims: [usize; 3],
    spacing_mm: f64,
    seed: u64,
    sampler: &SamplerConfig,
    kspace: &KSpaceConfig,
) -> Result<Vec<LabeledVolume<f32>>, SamplerError> {
    (0..count as u64)
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let shape = PhantomShape::random(&mut rng);
            let clean: Volume3D<f32> = head_phantom(dims, &shape);
            let clean = Volume3D::new(dims, [spacing_mm; 3], clean.into_data()).expect("valid phantom");
            let target = sample_target(&mut rng, sampler.motion_range);
            let s = sample_trajectory(target, sampler, &mut rng)?;
            let moved = simulate_motion(&clean, &s.trajectory, kspace).expect("valid phase axis");
            Ok(LabeledVolume { volume: minmax_scale(&moved), score: s.score.value() })
        })
        .collect()
}
