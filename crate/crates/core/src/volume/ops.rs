use super::{Affine, Volume3D};
use crate::scalar::Real;

/// Crops (or zero-pads) to `roi`, keeping the window centred.
///
/// With an odd excess, the window starts `excess / 2` voxels in, so the extra
/// dropped voxel is on the high-index side. Padding splits the deficit the
/// same way. The affine is shifted so world positions of kept voxels do not
/// change.
pub fn center_crop<T: Real>(v: &Volume3D<T>, roi: [usize; 3]) -> Volume3D<T> {
    assert!(roi.iter().all(|&r| r >= 1), "crop ROI must be at least 1 in every axis");
    let dims = v.dims();
    // offset[a] = input index of output index 0 along axis a (may be negative when padding)
    let offset: [isize; 3] = std::array::from_fn(|a| {
        let (n, r) = (dims[a] as isize, roi[a] as isize);
        if n >= r {
            (n - r) / 2
        } else {
            -((r - n) / 2)
        }
    });

    let mut data = vec![T::zero(); roi[0] * roi[1] * roi[2]];
    for z in 0..roi[2] {
        let iz = z as isize + offset[2];
        if iz < 0 || iz >= dims[2] as isize {
            continue;
        }
        for y in 0..roi[1] {
            let iy = y as isize + offset[1];
            if iy < 0 || iy >= dims[1] as isize {
                continue;
            }
            let row = roi[0] * (y + roi[1] * z);
            for x in 0..roi[0] {
                let ix = x as isize + offset[0];
                if ix >= 0 && ix < dims[0] as isize {
                    data[row + x] = v.get(ix as usize, iy as usize, iz as usize);
                }
            }
        }
    }

    let a = v.affine();
    let mut affine: Affine = *a;
    for (r, row) in affine.iter_mut().take(3).enumerate() {
        row[3] = a[r][3] + (0..3).map(|c| a[r][c] * offset[c] as f64).sum::<f64>();
    }
    Volume3D::from_parts_unchecked(roi, v.spacing(), affine, data)
}

/// Maps intensities linearly onto [0, 1]. A constant volume maps to zeros.
pub fn minmax_scale<T: Real>(v: &Volume3D<T>) -> Volume3D<T> {
    let (lo, hi) = v.min_max();
    let range = hi - lo;
    if !(range > T::zero()) {
        return v.map(|_| T::zero());
    }
    v.map(|x| ((x - lo) / range).max(T::zero()).min(T::one()))
}

/// Mirrors the volume along axis 0 (left-right).
pub fn flip_sagittal<T: Real>(v: &Volume3D<T>) -> Volume3D<T> {
    let [nx, ny, nz] = v.dims();
    let mut data = Vec::with_capacity(v.len());
    for z in 0..nz {
        for y in 0..ny {
            let row = v.index(0, y, z);
            data.extend(v.data()[row..row + nx].iter().rev());
        }
    }
    v.replace_data(data)
}
