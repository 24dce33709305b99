//! Minimal NIfTI-1 support: single-file `.nii` / `.nii.gz`, three spatial
//! dimensions, `uint8`, `int16`, `float32` and `float64` voxels.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use thiserror::Error;

use super::{diagonal_affine, Affine, Volume3D};
use crate::scalar::Real;

const HEADER_SIZE: usize = 348;
const DATA_OFFSET: usize = 352;
const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;

#[derive(Debug, Error)]
pub enum NiftiError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: sizeof_hdr is {0}, expected 348")]
    HeaderSize(i32),
    #[error("file too short for a NIfTI-1 header ({0} bytes)")]
    ShortHeader(usize),
    #[error("unsupported magic {0:?}; only single-file \"n+1\" is supported")]
    Magic([u8; 4]),
    #[error("unsupported datatype code {0}")]
    Datatype(i16),
    #[error("expected a 3D volume, got {0} dimensions {1:?}")]
    Dimensionality(usize, Vec<i64>),
    #[error("truncated payload: need {expected} bytes from offset {offset}, file has {actual}")]
    Truncated { offset: usize, expected: usize, actual: usize },
    #[error("invalid header field: {0}")]
    Field(String),
    #[error("non-finite voxel at linear index {0}")]
    NonFinite(usize),
}

#[derive(Clone, Copy)]
enum Endian {
    Little,
    Big,
}

struct Fields<'a> {
    buf: &'a [u8],
    endian: Endian,
}

impl Fields<'_> {
    fn bytes<const N: usize>(&self, off: usize) -> [u8; N] {
        let mut b = [0u8; N];
        b.copy_from_slice(&self.buf[off..off + N]);
        if let Endian::Big = self.endian {
            b.reverse();
        }
        b
    }
    fn i16(&self, off: usize) -> i16 {
        i16::from_le_bytes(self.bytes(off))
    }
    fn f32(&self, off: usize) -> f32 {
        f32::from_le_bytes(self.bytes(off))
    }
    fn f64(&self, off: usize) -> f64 {
        f64::from_le_bytes(self.bytes(off))
    }
}

fn load_bytes(path: &Path) -> Result<Vec<u8>, NiftiError> {
    let raw = fs::read(path)?;
    if raw.len() >= 2 && raw[0] == 0x1F && raw[1] == 0x8B {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Reads a NIfTI-1 volume, converting voxels to `f32` and applying
/// `scl_slope`/`scl_inter` when the slope is non-zero.
pub fn read_nifti(path: impl AsRef<Path>) -> Result<Volume3D<f32>, NiftiError> {
    let buf = load_bytes(path.as_ref())?;
    parse(&buf)
}

fn parse(buf: &[u8]) -> Result<Volume3D<f32>, NiftiError> {
    if buf.len() < HEADER_SIZE {
        return Err(NiftiError::ShortHeader(buf.len()));
    }
    let le = i32::from_le_bytes(buf[0..4].try_into().unwrap());
    let endian = if le == HEADER_SIZE as i32 {
        Endian::Little
    } else if i32::from_be_bytes(buf[0..4].try_into().unwrap()) == HEADER_SIZE as i32 {
        Endian::Big
    } else {
        return Err(NiftiError::HeaderSize(le));
    };
    let h = Fields { buf, endian };

    let magic: [u8; 4] = buf[344..348].try_into().unwrap();
    if &magic != MAGIC_SINGLE {
        return Err(NiftiError::Magic(magic));
    }

    let ndim = h.i16(40);
    if !(1..=7).contains(&ndim) {
        return Err(NiftiError::Field(format!("dim[0] = {ndim}")));
    }
    let mut dims: Vec<i64> = (1..=ndim as usize).map(|i| h.i16(40 + 2 * i) as i64).collect();
    while dims.len() > 3 && dims.last() == Some(&1) {
        dims.pop();
    }
    if dims.len() != 3 {
        return Err(NiftiError::Dimensionality(dims.len(), dims));
    }
    if dims.iter().any(|&d| d < 1) {
        return Err(NiftiError::Field(format!("non-positive dimension in {dims:?}")));
    }
    let dims = [dims[0] as usize, dims[1] as usize, dims[2] as usize];

    let datatype = h.i16(70);
    let width = match datatype {
        DT_UINT8 => 1,
        DT_INT16 => 2,
        DT_FLOAT32 => 4,
        DT_FLOAT64 => 8,
        other => return Err(NiftiError::Datatype(other)),
    };

    let pixdim: Vec<f32> = (0..8).map(|i| h.f32(76 + 4 * i)).collect();
    let spacing = [pixdim[1] as f64, pixdim[2] as f64, pixdim[3] as f64];
    if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(NiftiError::Field(format!("pixdim {spacing:?}")));
    }

    let vox_offset = h.f32(108);
    if !(vox_offset >= HEADER_SIZE as f32) || vox_offset.fract() != 0.0 {
        return Err(NiftiError::Field(format!("vox_offset {vox_offset}")));
    }
    let offset = vox_offset as usize;
    let count = dims[0] * dims[1] * dims[2];
    let expected = count * width;
    if buf.len() < offset + expected {
        return Err(NiftiError::Truncated { offset, expected, actual: buf.len() });
    }

    let slope = h.f32(112);
    let inter = h.f32(116);
    let (slope, inter) = if slope != 0.0 && slope.is_finite() { (slope as f64, inter as f64) } else { (1.0, 0.0) };

    let payload = Fields { buf: &buf[offset..offset + expected], endian };
    let mut data = Vec::with_capacity(count);
    for i in 0..count {
        let raw = match datatype {
            DT_UINT8 => payload.buf[i] as f64,
            DT_INT16 => payload.i16(2 * i) as f64,
            DT_FLOAT32 => payload.f32(4 * i) as f64,
            _ => payload.f64(8 * i),
        };
        let v = if slope == 1.0 && inter == 0.0 { raw as f32 } else { (raw * slope + inter) as f32 };
        if !v.is_finite() {
            return Err(NiftiError::NonFinite(i));
        }
        data.push(v);
    }

    let affine = header_affine(&h, &pixdim, spacing);
    Ok(Volume3D::from_parts_unchecked(dims, spacing, affine, data))
}

fn header_affine(h: &Fields<'_>, pixdim: &[f32], spacing: [f64; 3]) -> Affine {
    let qform_code = h.i16(252);
    let sform_code = h.i16(254);
    if sform_code > 0 {
        let mut a = [[0.0; 4]; 4];
        for (r, row) in a.iter_mut().take(3).enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = h.f32(280 + 16 * r + 4 * c) as f64;
            }
        }
        a[3][3] = 1.0;
        return a;
    }
    if qform_code > 0 {
        let b = h.f32(256) as f64;
        let c = h.f32(260) as f64;
        let d = h.f32(264) as f64;
        let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
        let qfac = if pixdim[0] < 0.0 { -1.0 } else { 1.0 };
        let rot = [
            [a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c)],
            [2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b)],
            [2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - c * c - b * b],
        ];
        let scale = [spacing[0], spacing[1], qfac * spacing[2]];
        let offs = [h.f32(268) as f64, h.f32(272) as f64, h.f32(276) as f64];
        let mut m = [[0.0; 4]; 4];
        for r in 0..3 {
            for k in 0..3 {
                m[r][k] = rot[r][k] * scale[k];
            }
            m[r][3] = offs[r];
        }
        m[3][3] = 1.0;
        return m;
    }
    diagonal_affine(spacing)
}

/// Writes a little-endian, single-file NIfTI-1 volume with `float32` voxels
/// and the volume's affine stored as the sform. Paths ending in `.gz` are
/// gzip-compressed.
pub fn write_nifti<T: Real>(v: &Volume3D<T>, path: impl AsRef<Path>) -> Result<(), NiftiError> {
    let path = path.as_ref();
    let bytes = encode(v);
    let gz = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"));
    if gz {
        let file = fs::File::create(path)?;
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(&bytes)?;
        enc.finish()?;
    } else {
        fs::write(path, bytes)?;
    }
    Ok(())
}

fn encode<T: Real>(v: &Volume3D<T>) -> Vec<u8> {
    let mut out = vec![0u8; DATA_OFFSET];
    let put_i16 = |buf: &mut [u8], off: usize, x: i16| buf[off..off + 2].copy_from_slice(&x.to_le_bytes());
    let put_f32 = |buf: &mut [u8], off: usize, x: f32| buf[off..off + 4].copy_from_slice(&x.to_le_bytes());

    out[0..4].copy_from_slice(&(HEADER_SIZE as i32).to_le_bytes());
    let dims = v.dims();
    let dim = [3, dims[0] as i16, dims[1] as i16, dims[2] as i16, 1, 1, 1, 1];
    for (i, d) in dim.iter().enumerate() {
        put_i16(&mut out, 40 + 2 * i, *d);
    }
    put_i16(&mut out, 70, DT_FLOAT32);
    put_i16(&mut out, 72, 32);
    let sp = v.spacing();
    let pixdim = [1.0f32, sp[0] as f32, sp[1] as f32, sp[2] as f32, 0.0, 0.0, 0.0, 0.0];
    for (i, p) in pixdim.iter().enumerate() {
        put_f32(&mut out, 76 + 4 * i, *p);
    }
    put_f32(&mut out, 108, DATA_OFFSET as f32);
    put_f32(&mut out, 112, 1.0);
    put_f32(&mut out, 116, 0.0);
    // xyzt_units: millimetres
    out[123] = 2;
    put_i16(&mut out, 252, 0);
    put_i16(&mut out, 254, 1);
    let a = v.affine();
    for r in 0..3 {
        for c in 0..4 {
            put_f32(&mut out, 280 + 16 * r + 4 * c, a[r][c] as f32);
        }
    }
    out[344..348].copy_from_slice(MAGIC_SINGLE);

    out.reserve(v.len() * 4);
    for x in v.data() {
        out.extend_from_slice(&(x.to_f64_lossy() as f32).to_le_bytes());
    }
    out
}
