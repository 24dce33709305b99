//! Dense 3D scalar volumes, a NIfTI-1 subset reader/writer and the
//! deterministic preprocessing kernels (crop, min-max scaling, flips).
//!
//! Voxels are stored with axis 0 varying fastest, matching the on-disk NIfTI
//! order, so `index(x, y, z) = x + nx * (y + ny * z)`.

mod nifti;
mod ops;

pub use nifti::{read_nifti, write_nifti, NiftiError};
pub use ops::{center_crop, flip_sagittal, minmax_scale};

use thiserror::Error;

use crate::scalar::Real;

/// 4×4 voxel-to-world matrix in millimetres, row-major.
pub type Affine = [[f64; 4]; 4];

#[derive(Debug, Error, PartialEq)]
pub enum VolumeError {
    #[error("volume dimensions must all be at least 1, got {0:?}")]
    ZeroDim([usize; 3]),
    #[error("voxel spacing must be positive and finite, got {0:?}")]
    BadSpacing([f64; 3]),
    #[error("data length {actual} does not match dims {dims:?} (expected {expected})")]
    LengthMismatch { dims: [usize; 3], expected: usize, actual: usize },
    #[error("non-finite voxel value at linear index {0}")]
    NonFinite(usize),
}

/// A 3D scalar grid with voxel spacing and a voxel-to-world affine.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume3D<T> {
    dims: [usize; 3],
    spacing: [f64; 3],
    affine: Affine,
    data: Vec<T>,
}

pub(crate) fn diagonal_affine(spacing: [f64; 3]) -> Affine {
    let mut a = [[0.0; 4]; 4];
    for i in 0..3 {
        a[i][i] = spacing[i];
    }
    a[3][3] = 1.0;
    a
}

impl<T: Real> Volume3D<T> {
    /// Builds a volume with a diagonal affine derived from `spacing`.
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<T>) -> Result<Self, VolumeError> {
        Self::with_affine(dims, spacing, diagonal_affine(spacing), data)
    }

    pub fn with_affine(dims: [usize; 3], spacing: [f64; 3], affine: Affine, data: Vec<T>) -> Result<Self, VolumeError> {
        if dims.contains(&0) {
            return Err(VolumeError::ZeroDim(dims));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(VolumeError::BadSpacing(spacing));
        }
        let expected = dims[0] * dims[1] * dims[2];
        if data.len() != expected {
            return Err(VolumeError::LengthMismatch { dims, expected, actual: data.len() });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(VolumeError::NonFinite(i));
        }
        Ok(Self { dims, spacing, affine, data })
    }

    /// Unit-spacing volume filled from `f(x, y, z)`.
    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> T) -> Result<Self, VolumeError> {
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Self::new(dims, [1.0; 3], data)
    }

    pub fn filled(dims: [usize; 3], value: T) -> Result<Self, VolumeError> {
        Self::new(dims, [1.0; 3], vec![value; dims[0] * dims[1] * dims[2]])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn affine(&self) -> &Affine {
        &self.affine
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.data[self.index(x, y, z)]
    }

    /// Same geometry, new voxel values. Fails if a value is non-finite.
    pub fn with_data(&self, data: Vec<T>) -> Result<Self, VolumeError> {
        Self::with_affine(self.dims, self.spacing, self.affine, data)
    }

    /// Same geometry, new voxel values, no validation. Callers guarantee finiteness.
    pub(crate) fn replace_data(&self, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self { dims: self.dims, spacing: self.spacing, affine: self.affine, data }
    }

    pub(crate) fn from_parts_unchecked(dims: [usize; 3], spacing: [f64; 3], affine: Affine, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), dims[0] * dims[1] * dims[2]);
        Self { dims, spacing, affine, data }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        self.replace_data(self.data.iter().map(|&v| f(v)).collect())
    }

    /// Converts voxel values to another scalar type.
    pub fn cast<U: Real>(&self) -> Volume3D<U> {
        Volume3D {
            dims: self.dims,
            spacing: self.spacing,
            affine: self.affine,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }

    pub fn min_max(&self) -> (T, T) {
        self.data.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / self.data.len() as f64
    }

    /// Geometric centre of the voxel grid in world coordinates.
    pub fn world_center(&self) -> [f64; 3] {
        let c =
            [(self.dims[0] as f64 - 1.0) / 2.0, (self.dims[1] as f64 - 1.0) / 2.0, (self.dims[2] as f64 - 1.0) / 2.0];
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.affine[r][0] * c[0] + self.affine[r][1] * c[1] + self.affine[r][2] * c[2] + self.affine[r][3];
        }
        out
    }

    /// Trilinear interpolation at fractional voxel coordinates; samples
    /// outside the grid read zero. Lattice points are reproduced exactly.
    pub fn sample_trilinear(&self, p: [f64; 3]) -> f64 {
        let [nx, ny, nz] = self.dims.map(|d| d as isize);
        let f = p.map(f64::floor);
        let (x0, y0, z0) = (f[0] as isize, f[1] as isize, f[2] as isize);
        if x0 < -1 || y0 < -1 || z0 < -1 || x0 >= nx || y0 >= ny || z0 >= nz {
            return 0.0;
        }
        let w = [p[0] - f[0], p[1] - f[1], p[2] - f[2]];
        let mut acc = 0.0;
        for (dz, wz) in [(0, 1.0 - w[2]), (1, w[2])] {
            let z = z0 + dz;
            if wz == 0.0 || z < 0 || z >= nz {
                continue;
            }
            for (dy, wy) in [(0, 1.0 - w[1]), (1, w[1])] {
                let y = y0 + dy;
                if wy == 0.0 || y < 0 || y >= ny {
                    continue;
                }
                for (dx, wx) in [(0, 1.0 - w[0]), (1, w[0])] {
                    let x = x0 + dx;
                    if wx == 0.0 || x < 0 || x >= nx {
                        continue;
                    }
                    acc += wx * wy * wz * self.data[(x + nx * (y + ny * z)) as usize].to_f64_lossy();
                }
            }
        }
        acc
    }

    /// Root-mean-square voxel difference to a volume of the same shape.
    pub fn rmse(&self, other: &Self) -> f64 {
        assert_eq!(self.dims, other.dims, "rmse of differently shaped volumes");
        let ss: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| {
                let d = a.to_f64_lossy() - b.to_f64_lossy();
                d * d
            })
            .sum();
        (ss / self.data.len() as f64).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims, other.dims, "max_abs_diff of differently shaped volumes");
        self.data.iter().zip(&other.data).map(|(a, b)| (a.to_f64_lossy() - b.to_f64_lossy()).abs()).fold(0.0, f64::max)
    }
}
