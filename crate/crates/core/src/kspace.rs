//! Motion-artifact synthesis by k-space composition.
//!
//! Each pose of a trajectory contributes the spectrum of a rigidly resampled
//! copy of the volume. Phase-encode lines are acquired in linear order from
//! the most negative to the most positive frequency, and the acquisition time
//! fraction of each event decides which lines come from which pose.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rigid::{resample_rigid, MotionTrajectory};
use crate::scalar::Real;
use crate::volume::Volume3D;

#[derive(Debug, Error, PartialEq)]
pub enum KSpaceError {
    #[error("phase axis {0} is not one of 0, 1, 2")]
    PhaseAxis(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KSpaceConfig {
    /// Axis along which k-space lines are ordered in time.
    pub phase_axis: usize,
}

impl Default for KSpaceConfig {
    fn default() -> Self {
        Self { phase_axis: 1 }
    }
}

/// Separable 3D FFT over an axis-0-fastest grid. The forward transform is
/// unscaled; the inverse is scaled by `1/N`.
pub struct Fft3<T: FftNum> {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<T>>; 3],
    inverse: [Arc<dyn Fft<T>>; 3],
}

impl<T: FftNum + Real> Fft3<T> {
    pub fn new(dims: [usize; 3]) -> Self {
        assert!(dims.iter().all(|&d| d >= 1), "FFT dims must be at least 1");
        let mut planner = FftPlanner::new();
        let forward = dims.map(|n| planner.plan_fft_forward(n));
        let inverse = dims.map(|n| planner.plan_fft_inverse(n));
        Self { dims, forward, inverse }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn forward_in_place(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.forward);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex<T>]) {
        self.run(data, &self.inverse);
        let scale = T::one() / T::lit(data.len() as f64);
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    fn run(&self, data: &mut [Complex<T>], plans: &[Arc<dyn Fft<T>>; 3]) {
        let [nx, ny, nz] = self.dims;
        assert_eq!(data.len(), nx * ny * nz, "spectrum length does not match FFT dims");
        let scratch_len = plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); scratch_len];

        if nx > 1 {
            plans[0].process_with_scratch(data, &mut scratch);
        }
        let mut line = Vec::new();
        if ny > 1 {
            line.resize(ny, Complex::new(T::zero(), T::zero()));
            for z in 0..nz {
                for x in 0..nx {
                    let base = x + nx * ny * z;
                    for (y, l) in line.iter_mut().enumerate() {
                        *l = data[base + nx * y];
                    }
                    plans[1].process_with_scratch(&mut line, &mut scratch);
                    for (y, l) in line.iter().enumerate() {
                        data[base + nx * y] = *l;
                    }
                }
            }
        }
        if nz > 1 {
            line.resize(nz, Complex::new(T::zero(), T::zero()));
            let plane = nx * ny;
            for p in 0..plane {
                for (z, l) in line.iter_mut().enumerate() {
                    *l = data[p + plane * z];
                }
                plans[2].process_with_scratch(&mut line, &mut scratch);
                for (z, l) in line.iter().enumerate() {
                    data[p + plane * z] = *l;
                }
            }
        }
    }
}

/// Forward 3D FFT of a real grid.
pub fn fft3<T: FftNum + Real>(dims: [usize; 3], input: &[T]) -> Vec<Complex<T>> {
    let mut data: Vec<_> = input.iter().map(|&x| Complex::new(x, T::zero())).collect();
    Fft3::new(dims).forward_in_place(&mut data);
    data
}

/// Inverse 3D FFT, scaled by `1/N`.
pub fn ifft3<T: FftNum + Real>(dims: [usize; 3], input: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut data = input.to_vec();
    Fft3::new(dims).inverse_in_place(&mut data);
    data
}

/// For each phase-encode line, in acquisition order, the index of the pose
/// whose spectrum fills it: 0 for the initial (unmoved) pose, `i` for event `i`.
pub fn segment_sources(lines: usize, traj: &MotionTrajectory<f64>) -> Vec<usize> {
    let mut src = vec![0usize; lines];
    for (i, e) in traj.events().iter().enumerate() {
        let start = ((e.time * lines as f64).floor() as usize).min(lines);
        for s in &mut src[start..] {
            *s = i + 1;
        }
    }
    src
}

/// Raw FFT index of the line acquired at position `p` (centred, linear order).
fn raw_line_index(p: usize, lines: usize) -> usize {
    (p + lines - lines / 2) % lines
}

/// Corrupts `v` with the motion described by `traj` and returns the magnitude
/// reconstruction. Computation runs in `f64` regardless of `V`.
pub fn simulate_motion<V: Real>(
    v: &Volume3D<V>,
    traj: &MotionTrajectory<f64>,
    cfg: &KSpaceConfig,
) -> Result<Volume3D<V>, KSpaceError> {
    if cfg.phase_axis > 2 {
        return Err(KSpaceError::PhaseAxis(cfg.phase_axis));
    }
    let dims = v.dims();
    let axis = cfg.phase_axis;
    let lines = dims[axis];
    let plan = Fft3::<f64>::new(dims);
    let spectrum_of = |vol: &Volume3D<V>| {
        let mut s: Vec<Complex<f64>> = vol.data().iter().map(|x| Complex::new(x.to_f64_lossy(), 0.0)).collect();
        plan.forward_in_place(&mut s);
        s
    };

    let sources = segment_sources(lines, traj);
    let mut composite = spectrum_of(v);
    let strides = [1, dims[0], dims[0] * dims[1]];
    for (i, event) in traj.events().iter().enumerate() {
        let owned: Vec<usize> = (0..lines).filter(|&p| sources[p] == i + 1).map(|p| raw_line_index(p, lines)).collect();
        if owned.is_empty() {
            continue;
        }
        let moved = spectrum_of(&resample_rigid(v, &event.transform));
        for k in owned {
            copy_line_plane(&mut composite, &moved, dims, axis, k, &strides);
        }
    }

    plan.inverse_in_place(&mut composite);
    let out = composite.iter().map(|c| V::lit(c.norm())).collect();
    Ok(v.replace_data(out))
}

fn copy_line_plane(
    dst: &mut [Complex<f64>],
    src: &[Complex<f64>],
    dims: [usize; 3],
    axis: usize,
    k: usize,
    strides: &[usize; 3],
) {
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for j in 0..dims[b] {
        for i in 0..dims[a] {
            let idx = k * strides[axis] + i * strides[a] + j * strides[b];
            dst[idx] = src[idx];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigid::{MotionEvent, RigidTransform};

    #[test]
    fn delta_has_flat_spectrum() {
        let mut x = vec![0.0f64; 27];
        x[0] = 1.0;
        let s = fft3([3, 3, 3], &x);
        assert!(s.iter().all(|c| (c.re - 1.0).abs() < 1e-12 && c.im.abs() < 1e-12));
    }

    #[test]
    fn constant_concentrates_at_dc() {
        let x = vec![2.5f64; 4 * 3 * 2];
        let s = fft3([4, 3, 2], &x);
        assert!((s[0].re - 2.5 * 24.0).abs() < 1e-12);
        assert!(s[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn raw_line_order_is_linear_from_negative() {
        let l = 4;
        let order: Vec<_> = (0..l).map(|p| raw_line_index(p, l)).collect();
        assert_eq!(order, vec![2, 3, 0, 1]);
        let order5: Vec<_> = (0..5).map(|p| raw_line_index(p, 5)).collect();
        assert_eq!(order5, vec![3, 4, 0, 1, 2]);
    }

    #[test]
    fn segments_cover_every_line_once() {
        let ev = |time| MotionEvent { time, transform: RigidTransform::translation([1.0, 0.0, 0.0]) };
        let traj = MotionTrajectory::new(vec![ev(0.25), ev(0.26), ev(0.9)]).unwrap();
        let src = segment_sources(10, &traj);
        // 0.25 and 0.26 map to the same boundary, so event 1 gets no lines
        assert_eq!(src, vec![0, 0, 2, 2, 2, 2, 2, 2, 2, 3]);
        assert_eq!(segment_sources(10, &MotionTrajectory::empty()), vec![0; 10]);
    }

    #[test]
    fn rejects_bad_phase_axis() {
        let v = Volume3D::<f32>::filled([2, 2, 2], 1.0).unwrap();
        let r = simulate_motion(&v, &MotionTrajectory::empty(), &KSpaceConfig { phase_axis: 3 });
        assert_eq!(r, Err(KSpaceError::PhaseAxis(3)));
    }
}
