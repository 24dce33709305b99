//! Layer kernels on `[batch, channels, d2, d1, d0]` buffers (axis 0 fastest).

use crate::scalar::{MatMut, MatRef, Real};

/// Upper bound on im2col buffer elements; larger convolutions are processed
/// in slabs of whole planes.
const COL_BUDGET: usize = 8 << 20;

pub(crate) const BN_EPS: f64 = 1e-5;

fn spatial(d: [usize; 3]) -> usize {
    d[0] * d[1] * d[2]
}

fn slab_planes(rows: usize, d: [usize; 3]) -> usize {
    (COL_BUDGET / (rows * d[0] * d[1]).max(1)).clamp(1, d[2])
}

/// Fills `col[(ci·27 + tap), s]` for planes `z0..z1` with zero padding.
fn im2col3<T: Real>(x: &[T], cin: usize, d: [usize; 3], z0: usize, z1: usize, col: &mut [T]) {
    let [d0, d1, d2] = d;
    let s = spatial(d);
    let ncols = (z1 - z0) * d0 * d1;
    for ci in 0..cin {
        let xc = &x[ci * s..(ci + 1) * s];
        for kz in 0..3 {
            for ky in 0..3 {
                for kx in 0..3 {
                    let r = ci * 27 + kz * 9 + ky * 3 + kx;
                    let row = &mut col[r * ncols..(r + 1) * ncols];
                    for z in z0..z1 {
                        let zz = z as isize + kz as isize - 1;
                        for y in 0..d1 {
                            let yy = y as isize + ky as isize - 1;
                            let dst = &mut row[((z - z0) * d1 + y) * d0..][..d0];
                            if zz < 0 || zz >= d2 as isize || yy < 0 || yy >= d1 as isize {
                                dst.fill(T::zero());
                                continue;
                            }
                            let src = &xc[(zz as usize * d1 + yy as usize) * d0..][..d0];
                            match kx {
                                0 => {
                                    dst[0] = T::zero();
                                    dst[1..].copy_from_slice(&src[..d0 - 1]);
                                }
                                1 => dst.copy_from_slice(src),
                                _ => {
                                    dst[..d0 - 1].copy_from_slice(&src[1..]);
                                    dst[d0 - 1] = T::zero();
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col3`]: accumulates `col` into `dx`.
fn col2im3<T: Real>(col: &[T], cin: usize, d: [usize; 3], z0: usize, z1: usize, dx: &mut [T]) {
    let [d0, d1, d2] = d;
    let s = spatial(d);
    let ncols = (z1 - z0) * d0 * d1;
    for ci in 0..cin {
        let xc = &mut dx[ci * s..(ci + 1) * s];
        for kz in 0..3 {
            for ky in 0..3 {
                for kx in 0..3 {
                    let r = ci * 27 + kz * 9 + ky * 3 + kx;
                    let row = &col[r * ncols..(r + 1) * ncols];
                    for z in z0..z1 {
                        let zz = z as isize + kz as isize - 1;
                        if zz < 0 || zz >= d2 as isize {
                            continue;
                        }
                        for y in 0..d1 {
                            let yy = y as isize + ky as isize - 1;
                            if yy < 0 || yy >= d1 as isize {
                                continue;
                            }
                            let src = &row[((z - z0) * d1 + y) * d0..][..d0];
                            let dst = &mut xc[(zz as usize * d1 + yy as usize) * d0..][..d0];
                            match kx {
                                0 => dst[..d0 - 1].iter_mut().zip(&src[1..]).for_each(|(a, &b)| *a += b),
                                1 => dst.iter_mut().zip(src).for_each(|(a, &b)| *a += b),
                                _ => dst[1..].iter_mut().zip(&src[..d0 - 1]).for_each(|(a, &b)| *a += b),
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Same-padded stride-1 convolution without bias; `k` is 1 or 3.
/// `w` is `[cout, cin, k, k, k]`.
pub(crate) fn conv_forward<T: Real>(
    x: &[T],
    n: usize,
    cin: usize,
    d: [usize; 3],
    w: &[T],
    cout: usize,
    k: usize,
) -> Vec<T> {
    let s = spatial(d);
    let rows = cin * k * k * k;
    let mut y = vec![T::zero(); n * cout * s];
    let wm = MatRef::row_major(w, cout, rows);
    let planes = slab_planes(rows, d);
    let mut col = if k == 3 { vec![T::zero(); rows * planes * d[0] * d[1]] } else { Vec::new() };
    for b in 0..n {
        let xb = &x[b * cin * s..(b + 1) * cin * s];
        let yb = &mut y[b * cout * s..(b + 1) * cout * s];
        if k == 1 {
            T::gemm(T::one(), wm, MatRef::row_major(xb, cin, s), T::zero(), MatMut::row_major(yb, cout, s));
            continue;
        }
        let mut z0 = 0;
        while z0 < d[2] {
            let z1 = (z0 + planes).min(d[2]);
            let ncols = (z1 - z0) * d[0] * d[1];
            let col = &mut col[..rows * ncols];
            im2col3(xb, cin, d, z0, z1, col);
            let out =
                MatMut { data: &mut yb[z0 * d[0] * d[1]..], rows: cout, cols: ncols, row_stride: s, col_stride: 1 };
            T::gemm(T::one(), wm, MatRef::row_major(col, rows, ncols), T::zero(), out);
            z0 = z1;
        }
    }
    y
}

/// Returns `(dx, dw)`; `dx` is skipped (empty) when `need_dx` is false.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward<T: Real>(
    x: &[T],
    dy: &[T],
    n: usize,
    cin: usize,
    d: [usize; 3],
    w: &[T],
    cout: usize,
    k: usize,
    need_dx: bool,
) -> (Vec<T>, Vec<T>) {
    let s = spatial(d);
    let rows = cin * k * k * k;
    let mut dw = vec![T::zero(); cout * rows];
    let mut dx = if need_dx { vec![T::zero(); n * cin * s] } else { Vec::new() };
    let wt = MatRef::transposed(w, cout, rows);
    let planes = slab_planes(rows, d);
    let slab = planes * d[0] * d[1];
    let (mut col, mut dcol) = if k == 3 {
        (vec![T::zero(); rows * slab], if need_dx { vec![T::zero(); rows * slab] } else { Vec::new() })
    } else {
        (Vec::new(), Vec::new())
    };
    for b in 0..n {
        let xb = &x[b * cin * s..(b + 1) * cin * s];
        let dyb = &dy[b * cout * s..(b + 1) * cout * s];
        if k == 1 {
            let dym = MatRef::row_major(dyb, cout, s);
            T::gemm(T::one(), dym, MatRef::transposed(xb, cin, s), T::one(), MatMut::row_major(&mut dw, cout, rows));
            if need_dx {
                let dxb = &mut dx[b * cin * s..(b + 1) * cin * s];
                T::gemm(T::one(), wt, dym, T::zero(), MatMut::row_major(dxb, cin, s));
            }
            continue;
        }
        let mut z0 = 0;
        while z0 < d[2] {
            let z1 = (z0 + planes).min(d[2]);
            let ncols = (z1 - z0) * d[0] * d[1];
            let colc = &mut col[..rows * ncols];
            im2col3(xb, cin, d, z0, z1, colc);
            let dym = MatRef { data: &dyb[z0 * d[0] * d[1]..], rows: cout, cols: ncols, row_stride: s, col_stride: 1 };
            T::gemm(
                T::one(),
                dym,
                MatRef::transposed(colc, rows, ncols),
                T::one(),
                MatMut::row_major(&mut dw, cout, rows),
            );
            if need_dx {
                let dcolc = &mut dcol[..rows * ncols];
                T::gemm(T::one(), wt, dym, T::zero(), MatMut::row_major(dcolc, rows, ncols));
                col2im3(dcolc, cin, d, z0, z1, &mut dx[b * cin * s..(b + 1) * cin * s]);
            }
            z0 = z1;
        }
    }
    (dx, dw)
}

/// Per-channel batch statistics: biased variance for normalisation and the
/// unbiased estimate for running averages.
#[derive(Clone, Debug, PartialEq)]
pub struct BnStats<T> {
    pub mean: Vec<T>,
    pub var_unbiased: Vec<T>,
}

/// Normalises `x` in place to `x̂`, returning per-channel `1/σ` and the batch
/// statistics. With `running = Some((mean, var))` those are used instead.
pub(crate) fn bn_normalize<T: Real>(
    x: &mut [T],
    n: usize,
    c: usize,
    s: usize,
    running: Option<(&[T], &[T])>,
) -> (Vec<T>, Option<BnStats<T>>) {
    let eps = T::lit(BN_EPS);
    let count = n * s;
    let (mean, var, stats) = match running {
        Some((m, v)) => (m.to_vec(), v.to_vec(), None),
        None => {
            let mut mean = vec![T::zero(); c];
            let mut var = vec![T::zero(); c];
            for ch in 0..c {
                // accumulate in f64 so large 32-bit maps keep their precision
                let (mut sum, mut sq) = (0.0f64, 0.0f64);
                for b in 0..n {
                    for &v in &x[(b * c + ch) * s..][..s] {
                        sum += v.to_f64_lossy();
                    }
                }
                let mu = sum / count as f64;
                for b in 0..n {
                    for &v in &x[(b * c + ch) * s..][..s] {
                        let dv = v.to_f64_lossy() - mu;
                        sq += dv * dv;
                    }
                }
                mean[ch] = T::lit(mu);
                var[ch] = T::lit(sq / count as f64);
            }
            let unbiased = if count > 1 {
                var.iter().map(|&v| v * T::lit(count as f64 / (count - 1) as f64)).collect()
            } else {
                var.clone()
            };
            (mean.clone(), var, Some(BnStats { mean, var_unbiased: unbiased }))
        }
    };
    let invstd: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    for b in 0..n {
        for ch in 0..c {
            let (mu, is) = (mean[ch], invstd[ch]);
            x[(b * c + ch) * s..][..s].iter_mut().for_each(|v| *v = (*v - mu) * is);
        }
    }
    (invstd, stats)
}

pub(crate) fn bn_affine<T: Real>(xhat: &[T], n: usize, c: usize, s: usize, gamma: &[T], beta: &[T]) -> Vec<T> {
    let mut out = xhat.to_vec();
    bn_affine_inplace(&mut out, n, c, s, gamma, beta);
    out
}

pub(crate) fn bn_affine_inplace<T: Real>(x: &mut [T], n: usize, c: usize, s: usize, gamma: &[T], beta: &[T]) {
    for b in 0..n {
        for ch in 0..c {
            let (g, be) = (gamma[ch], beta[ch]);
            x[(b * c + ch) * s..][..s].iter_mut().for_each(|v| *v = *v * g + be);
        }
    }
}

/// Backward through training-mode batch norm. Returns `(dx, dgamma, dbeta)`.
pub(crate) fn bn_backward<T: Real>(
    dz: &[T],
    xhat: &[T],
    invstd: &[T],
    gamma: &[T],
    n: usize,
    c: usize,
    s: usize,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let count = T::lit((n * s) as f64);
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * s;
            for (g, xh) in dz[off..off + s].iter().zip(&xhat[off..off + s]) {
                dbeta[ch] += *g;
                dgamma[ch] += *g * *xh;
            }
        }
    }
    let mut dx = vec![T::zero(); dz.len()];
    for ch in 0..c {
        // with dx̂ = γ·dz: dx = γ/(σN)·(N·dz − Σdz − x̂·Σdz·x̂)
        let k = gamma[ch] * invstd[ch] / count;
        for b in 0..n {
            let off = (b * c + ch) * s;
            for i in off..off + s {
                dx[i] = k * (count * dz[i] - dbeta[ch] - xhat[i] * dgamma[ch]);
            }
        }
    }
    (dx, dgamma, dbeta)
}

/// 2×2×2 max-pool with floor semantics. Returns the pooled map and, for each
/// output, the flat index of its maximum within the input channel.
pub(crate) fn maxpool2_forward<T: Real>(x: &[T], nc: usize, d: [usize; 3]) -> (Vec<T>, Vec<u32>, [usize; 3]) {
    let od = d.map(|v| v / 2);
    let (s, os) = (spatial(d), spatial(od));
    let mut out = vec![T::zero(); nc * os];
    let mut arg = vec![0u32; nc * os];
    for ch in 0..nc {
        let xc = &x[ch * s..(ch + 1) * s];
        for z in 0..od[2] {
            for y in 0..od[1] {
                for xo in 0..od[0] {
                    // first maximum in scan order wins ties
                    let mut best = usize::MAX;
                    let mut best_v = T::neg_infinity();
                    for dz in 0..2 {
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let i = ((2 * z + dz) * d[1] + 2 * y + dy) * d[0] + 2 * xo + dx;
                                if best == usize::MAX || xc[i] > best_v {
                                    best = i;
                                    best_v = xc[i];
                                }
                            }
                        }
                    }
                    let o = ch * os + (z * od[1] + y) * od[0] + xo;
                    out[o] = best_v;
                    arg[o] = best as u32;
                }
            }
        }
    }
    (out, arg, od)
}

pub(crate) fn maxpool2_backward<T: Real>(dy: &[T], arg: &[u32], nc: usize, d: [usize; 3]) -> Vec<T> {
    let s = spatial(d);
    let os = dy.len() / nc.max(1);
    let mut dx = vec![T::zero(); nc * s];
    for ch in 0..nc {
        for o in 0..os {
            dx[ch * s + arg[ch * os + o] as usize] += dy[ch * os + o];
        }
    }
    dx
}

pub(crate) fn relu_inplace<T: Real>(x: &mut [T]) {
    x.iter_mut().for_each(|v| *v = v.max(T::zero()));
}

/// Masks `dy` where the ReLU output was not positive.
pub(crate) fn relu_backward_inplace<T: Real>(dy: &mut [T], out: &[T]) {
    dy.iter_mut().zip(out).for_each(|(g, &o)| {
        if o <= T::zero() {
            *g = T::zero();
        }
    });
}

/// Row-wise softmax of `[n, k]` logits, computed in f64.
pub(crate) fn softmax_rows<T: Real>(logits: &[T], k: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(k) {
        let max = row.iter().map(|v| v.to_f64_lossy()).fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = row.iter().map(|v| (v.to_f64_lossy() - max).exp()).collect();
        let z: f64 = e.iter().sum();
        out.extend(e.iter().map(|v| T::lit(v / z)));
    }
    out
}

/// Mean over rows of `KL(target ‖ pred)` with predictions clamped at the
/// soft-label floor.
pub(crate) fn mean_kl<T: Real>(target: &[T], pred: &[T], k: usize) -> f64 {
    let n = target.len() / k;
    let total: f64 = target
        .iter()
        .zip(pred)
        .map(|(&t, &p)| {
            let t = t.to_f64_lossy();
            if t > 0.0 {
                t * (t.ln() - p.to_f64_lossy().max(crate::softlabel::KL_CLAMP).ln())
            } else {
                0.0
            }
        })
        .sum();
    total / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_conv(x: &[f64], cin: usize, d: [usize; 3], w: &[f64], cout: usize, k: usize) -> Vec<f64> {
        let s = spatial(d);
        let h = (k / 2) as isize;
        let mut y = vec![0.0; cout * s];
        for co in 0..cout {
            for z in 0..d[2] {
                for yy in 0..d[1] {
                    for xx in 0..d[0] {
                        let mut acc = 0.0;
                        for ci in 0..cin {
                            for kz in 0..k {
                                for ky in 0..k {
                                    for kx in 0..k {
                                        let p = [
                                            xx as isize + kx as isize - h,
                                            yy as isize + ky as isize - h,
                                            z as isize + kz as isize - h,
                                        ];
                                        if (0..3).any(|a| p[a] < 0 || p[a] >= d[a] as isize) {
                                            continue;
                                        }
                                        let xi =
                                            ci * s + ((p[2] as usize * d[1]) + p[1] as usize) * d[0] + p[0] as usize;
                                        let wi = (((co * cin + ci) * k + kz) * k + ky) * k + kx;
                                        acc += x[xi] * w[wi];
                                    }
                                }
                            }
                        }
                        y[co * s + (z * d[1] + yy) * d[0] + xx] = acc;
                    }
                }
            }
        }
        y
    }

    fn pseudo(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn conv3_matches_direct_sum() {
        let d = [5, 4, 3];
        let (cin, cout) = (2, 3);
        let x = pseudo(cin * spatial(d), 1);
        let w = pseudo(cout * cin * 27, 2);
        let got = conv_forward(&x, 1, cin, d, &w, cout, 3);
        let want = naive_conv(&x, cin, d, &w, cout, 3);
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn conv1_is_channel_mixing() {
        let d = [3, 2, 2];
        let x = pseudo(2 * 2 * spatial(d), 3);
        let w = pseudo(4 * 2, 4);
        let got = conv_forward(&x, 2, 2, d, &w, 4, 1);
        for b in 0..2 {
            let want = naive_conv(&x[b * 24..(b + 1) * 24], 2, d, &w, 4, 1);
            for (a, c) in got[b * 48..(b + 1) * 48].iter().zip(&want) {
                assert!((a - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_backward_is_adjoint() {
        // <conv(x), g> = <x, dx(g)> and = <w, dw(g)> for a linear map
        let d = [4, 3, 5];
        let (cin, cout, n) = (2, 3, 2);
        let x = pseudo(n * cin * spatial(d), 5);
        let w = pseudo(cout * cin * 27, 6);
        let g = pseudo(n * cout * spatial(d), 7);
        let y = conv_forward(&x, n, cin, d, &w, cout, 3);
        let (dx, dw) = conv_backward(&x, &g, n, cin, d, &w, cout, 3, true);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let lhs = dot(&y, &g);
        assert!((lhs - dot(&x, &dx)).abs() < 1e-10 * lhs.abs().max(1.0));
        assert!((lhs - dot(&w, &dw)).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn maxpool_floor_and_argmax() {
        let d = [3, 2, 2];
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let (y, arg, od) = maxpool2_forward(&x, 1, d);
        assert_eq!(od, [1, 1, 1]);
        assert_eq!(y, [10.0]);
        assert_eq!(arg, [10]);
        let dx = maxpool2_backward(&[2.0], &arg, 1, d);
        assert_eq!(dx.iter().sum::<f64>(), 2.0);
        assert_eq!(dx[10], 2.0);
    }

    #[test]
    fn bn_output_is_standardised() {
        let mut x = pseudo(2 * 3 * 10, 8);
        let (invstd, stats) = bn_normalize(&mut x, 2, 3, 10, None);
        assert_eq!(invstd.len(), 3);
        assert!(stats.is_some());
        for ch in 0..3 {
            let vals: Vec<f64> = (0..2).flat_map(|b| x[(b * 3 + ch) * 10..][..10].to_vec()).collect();
            let m = vals.iter().sum::<f64>() / 20.0;
            let v = vals.iter().map(|a| (a - m).powi(2)).sum::<f64>() / 20.0;
            assert!(m.abs() < 1e-12);
            assert!((v - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = softmax_rows(&[0.0, 1.0, 2.0, 1000.0, 0.0, -1000.0], 3);
        assert!((p[..3].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[3] - 1.0).abs() < 1e-15);
        assert_eq!(mean_kl(&p, &p, 3), 0.0);
    }
}
