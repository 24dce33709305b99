//! Scalar abstraction shared by the numeric modules.
//!
//! Everything that does arithmetic on voxels, transforms, labels or network
//! weights is written against [`Real`], so the same code runs in `f32` for
//! throughput and in `f64` where a test needs tight tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// A strided, read-only matrix view used by [`Real::gemm`].
#[derive(Clone, Copy, Debug)]
pub struct MatRef<'a, T> {
    pub data: &'a [T],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a, T> MatRef<'a, T> {
    /// Row-major view with contiguous rows.
    pub fn row_major(data: &'a [T], rows: usize, cols: usize) -> Self {
        Self { data, rows, cols, row_stride: cols, col_stride: 1 }
    }

    /// Transposed view of a row-major `rows × cols` buffer (so the view is `cols × rows`).
    pub fn transposed(data: &'a [T], rows: usize, cols: usize) -> Self {
        Self { data, rows: cols, cols: rows, row_stride: 1, col_stride: cols }
    }

    fn span(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            0
        } else {
            (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride + 1
        }
    }
}

/// Mutable counterpart of [`MatRef`].
#[derive(Debug)]
pub struct MatMut<'a, T> {
    pub data: &'a mut [T],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a, T> MatMut<'a, T> {
    pub fn row_major(data: &'a mut [T], rows: usize, cols: usize) -> Self {
        Self { data, rows, cols, row_stride: cols, col_stride: 1 }
    }

    fn span(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            0
        } else {
            (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride + 1
        }
    }
}

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant; infallible for the two implementors.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `c = alpha · a · b + beta · c`, where `beta == 0` overwrites `c`.
    ///
    /// Panics if the shapes disagree or a view reaches past its buffer.
    fn gemm(alpha: Self, a: MatRef<'_, Self>, b: MatRef<'_, Self>, beta: Self, c: MatMut<'_, Self>);
}

fn check_gemm<T>(a: &MatRef<'_, T>, b: &MatRef<'_, T>, c: &MatMut<'_, T>) {
    assert_eq!(a.cols, b.rows, "gemm inner dimension mismatch");
    assert_eq!(a.rows, c.rows, "gemm row mismatch");
    assert_eq!(b.cols, c.cols, "gemm column mismatch");
    assert!(a.span() <= a.data.len(), "gemm: lhs view out of bounds");
    assert!(b.span() <= b.data.len(), "gemm: rhs view out of bounds");
    assert!(c.span() <= c.data.len(), "gemm: output view out of bounds");
}

macro_rules! impl_real {
    ($t:ty, $kernel:path) => {
        impl Real for $t {
            fn gemm(alpha: Self, a: MatRef<'_, Self>, b: MatRef<'_, Self>, beta: Self, c: MatMut<'_, Self>) {
                check_gemm(&a, &b, &c);
                if c.rows == 0 || c.cols == 0 {
                    return;
                }
                // SAFETY: `check_gemm` verified that every element addressed through the
                // given strides lies inside the corresponding slice, and `c` is borrowed
                // mutably so it cannot alias `a` or `b`.
                unsafe {
                    $kernel(
                        a.rows,
                        a.cols,
                        b.cols,
                        alpha,
                        a.data.as_ptr(),
                        a.row_stride as isize,
                        a.col_stride as isize,
                        b.data.as_ptr(),
                        b.row_stride as isize,
                        b.col_stride as isize,
                        beta,
                        c.data.as_mut_ptr(),
                        c.row_stride as isize,
                        c.col_stride as isize,
                    );
                }
            }
        }
    };
}

impl_real!(f32, matrixmultiply::sgemm);
impl_real!(f64, matrixmultiply::dgemm);
