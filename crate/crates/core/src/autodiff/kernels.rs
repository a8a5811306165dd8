//! Raw dense-linear-algebra kernels behind the graph ops.
//!
//! Every kernel takes a `parallel` flag (see [`crate::parallel`]) and
//! produces bit-identical output in both modes: work is split over disjoint
//! output rows and each row is accumulated in a fixed order.

use crate::parallel::for_each_chunk_mut;

/// `C = A · B` with `A: [m,k]`, `B: [k,n]`.
pub fn matmul(a: &[f64], m: usize, k: usize, b: &[f64], n: usize, parallel: bool) -> Vec<f64> {
    assert_eq!(a.len(), m * k, "matmul lhs size");
    assert_eq!(b.len(), k * n, "matmul rhs size");
    let mut out = vec![0.0; m * n];
    if n == 0 || m == 0 {
        return out;
    }
    for_each_chunk_mut(&mut out, n, parallel, |i, row| {
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (j, o) in row.iter_mut().enumerate() {
                *o += aip * brow[j];
            }
        }
    });
    out
}

/// `C = A · Bᵀ` with `A: [m,k]`, `B: [n,k]`.
pub fn matmul_nt(a: &[f64], m: usize, k: usize, b: &[f64], n: usize, parallel: bool) -> Vec<f64> {
    assert_eq!(a.len(), m * k, "matmul_nt lhs size");
    assert_eq!(b.len(), n * k, "matmul_nt rhs size");
    let mut out = vec![0.0; m * n];
    if n == 0 || m == 0 {
        return out;
    }
    for_each_chunk_mut(&mut out, n, parallel, |i, row| {
        let arow = &a[i * k..(i + 1) * k];
        for (j, o) in row.iter_mut().enumerate() {
            let brow = &b[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for p in 0..k {
                acc += arow[p] * brow[p];
            }
            *o = acc;
        }
    });
    out
}

/// `C = Aᵀ · B` with `A: [k,m]`, `B: [k,n]`.
pub fn matmul_tn(a: &[f64], k: usize, m: usize, b: &[f64], n: usize, parallel: bool) -> Vec<f64> {
    assert_eq!(a.len(), k * m, "matmul_tn lhs size");
    assert_eq!(b.len(), k * n, "matmul_tn rhs size");
    let mut out = vec![0.0; m * n];
    if n == 0 || m == 0 {
        return out;
    }
    for_each_chunk_mut(&mut out, n, parallel, |i, row| {
        for p in 0..k {
            let api = a[p * m + i];
            if api == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (j, o) in row.iter_mut().enumerate() {
                *o += api * brow[j];
            }
        }
    });
    out
}

/// Batched `C[g] = A[g] · B[g]`, `A: [g,m,k]`, `B: [g,k,n]`.
pub fn bmm(a: &[f64], g: usize, m: usize, k: usize, b: &[f64], n: usize, parallel: bool) -> Vec<f64> {
    let mut out = vec![0.0; g * m * n];
    for_each_chunk_mut(&mut out, m * n, parallel, |i, chunk| {
        let block = matmul(&a[i * m * k..(i + 1) * m * k], m, k, &b[i * k * n..(i + 1) * k * n], n, false);
        chunk.copy_from_slice(&block);
    });
    out
}

/// Batched `C[g] = A[g] · B[g]ᵀ`, `A: [g,m,k]`, `B: [g,n,k]`.
pub fn bmm_nt(a: &[f64], g: usize, m: usize, k: usize, b: &[f64], n: usize, parallel: bool) -> Vec<f64> {
    let mut out = vec![0.0; g * m * n];
    for_each_chunk_mut(&mut out, m * n, parallel, |i, chunk| {
        let block = matmul_nt(&a[i * m * k..(i + 1) * m * k], m, k, &b[i * n * k..(i + 1) * n * k], n, false);
        chunk.copy_from_slice(&block);
    });
    out
}

/// Batched `C[g] = A[g]ᵀ · B[g]`, `A: [g,k,m]`, `B: [g,k,n]`.
pub fn bmm_tn(a: &[f64], g: usize, k: usize, m: usize, b: &[f64], n: usize, parallel: bool) -> Vec<f64> {
    let mut out = vec![0.0; g * m * n];
    for_each_chunk_mut(&mut out, m * n, parallel, |i, chunk| {
        let block = matmul_tn(&a[i * k * m..(i + 1) * k * m], k, m, &b[i * k * n..(i + 1) * k * n], n, false);
        chunk.copy_from_slice(&block);
    });
    out
}

/// Same-padded stride-1 1-d convolution. `x: [b,cin,s]`, `w: [cout,cin,kw]`,
/// `bias: [cout]`, output `[b,cout,s]`. Padding puts `(kw-1)/2` zeros on the left.
pub fn conv1d_same(
    x: &[f64],
    bsz: usize,
    cin: usize,
    s: usize,
    w: &[f64],
    cout: usize,
    kw: usize,
    bias: &[f64],
    parallel: bool,
) -> Vec<f64> {
    let pad = (kw - 1) / 2;
    let mut out = vec![0.0; bsz * cout * s];
    for_each_chunk_mut(&mut out, cout * s, parallel, |b, ob| {
        let xb = &x[b * cin * s..(b + 1) * cin * s];
        for co in 0..cout {
            let orow = &mut ob[co * s..(co + 1) * s];
            orow.fill(bias[co]);
            for ci in 0..cin

            {
                let xrow = &xb[ci * s..(ci + 1) * s];
                let wrow = &w[(co * cin + ci) * kw..(co * cin + ci + 1) * kw];
                for (kk, &wv) in wrow.iter().enumerate() {
                    if wv == 0.0 {
                        continue;
                    }
                    // output t reads input t + kk - pad
                    let lo = pad.saturating_sub(kk);
                    let hi = (s + pad).saturating_sub(kk).min(s);
                    for t in lo..hi {
                        orow[t] += wv * xrow[t + kk - pad];
                    }
                }
            }
        }
    });
    out
}

/// 2-d convolution with square symmetric zero padding `pad` and stride `stride`.
/// `x: [b,cin,h,w]`, `kernel: [cout,cin,kh,kw]`, output `[b,cout,oh,ow]` where
/// `oh = (h + 2*pad - kh)/stride + 1`.
#[allow(clippy::too_many_arguments)]
pub fn conv2d(
    x: &[f64],
    bsz: usize,
    cin: usize,
    h: usize,
    w: usize,
    kernel: &[f64],
    cout: usize,
    kh: usize,
    kw: usize,
    bias: &[f64],
    stride: usize,
    pad: usize,
    parallel: bool,
) -> Vec<f64> {
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (w + 2 * pad - kw) / stride + 1;
    let mut out = vec![0.0; bsz * cout * oh * ow];
    for_each_chunk_mut(&mut out, cout * oh * ow, parallel, |b, ob| {
        let xb = &x[b * cin * h * w..(b + 1) * cin * h * w];
        for co in 0..cout {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bias[co];
                    let iy0 = (oy * stride) as isize - pad as isize;
                    let ix0 = (ox * stride) as isize - pad as isize;
                    for ci in 0..cin {
                        let xplane = &xb[ci * h * w..(ci + 1) * h * w];
                        let kplane = &kernel[((co * cin + ci) * kh) * kw..((co * cin + ci) * kh + kh) * kw];
                        for ky in 0..kh {
                            let iy = iy0 + ky as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let xrow = &xplane[iy as usize * w..(iy as usize + 1) * w];
                            let krow = &kplane[ky * kw..(ky + 1) * kw];
                            for kx in 0..kw {
                                let ix = ix0 + kx as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                acc += krow[kx] * xrow[ix as usize];
                            }
                        }
                    }
                    ob[(co * oh + oy) * ow + ox] = acc;
                }
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_small() {
        // [[1,2],[3,4]] x [[5,6],[7,8]] = [[19,22],[43,50]]
        let c = matmul(&[1.0, 2.0, 3.0, 4.0], 2, 2, &[5.0, 6.0, 7.0, 8.0], 2, false);
        assert_eq!(c, vec![19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn transposed_variants_agree() {
        let a = [1.0, -2.0, 0.5, 3.0, 4.0, -1.0]; // [2,3]
        let b = [2.0, 1.0, 0.0, -1.0, 3.0, 5.0]; // [3,2]
        let c = matmul(&a, 2, 3, &b, 2, false);
        // A·B == A·(Bᵀ)ᵀ via matmul_nt with B stored transposed
        let bt = [2.0, 0.0, 3.0, 1.0, -1.0, 5.0]; // [2,3]
        let c2 = matmul_nt(&a, 2, 3, &bt, 2, false);
        assert_eq!(c, c2);
        // Aᵀ path
        let at = [1.0, 3.0, -2.0, 4.0, 0.5, -1.0]; // [3,2]
        let c3 = matmul_tn(&at, 3, 2, &b, 2, false);
        assert_eq!(c, c3);
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let m = 17;
        let k = 13;
        let n = 11;
        let a: Vec<f64> = (0..m * k).map(|i| ((i * 37 % 19) as f64 - 9.0) / 7.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| ((i * 53 % 23) as f64 - 11.0) / 5.0).collect();
        assert_eq!(matmul(&a, m, k, &b, n, true), matmul(&a, m, k, &b, n, false));
        let x: Vec<f64> = (0..2 * 3 * 10).map(|i| (i as f64).sin()).collect();
        let w: Vec<f64> = (0..4 * 3 * 3).map(|i| (i as f64).cos()).collect();
        let bias = [0.1, -0.2, 0.3, 0.0];
        assert_eq!(
            conv1d_same(&x, 2, 3, 10, &w, 4, 3, &bias, true),
            conv1d_same(&x, 2, 3, 10, &w, 4, 3, &bias, false)
        );
    }

    #[test]
    fn conv1d_shift_kernel() {
        // kernel [1,0,0] with pad 1 shifts the signal right by one under same-padding
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let w = [1.0, 0.0, 0.0];
        let y = conv1d_same(&x, 1, 1, 5, &w, 1, 3, &[0.0], false);
        assert_eq!(y, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn conv2d_identity_kernel() {
        let x: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let mut w = vec![0.0; 9];
        w[4] = 1.0; // center tap
        let y = conv2d(&x, 1, 1, 3, 3, &w, 1, 3, 3, &[0.0], 1, 1, false);
        assert_eq!(y, x);
    }
}
