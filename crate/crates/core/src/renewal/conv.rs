//! Real convolution (direct for short inputs, radix-2 FFT otherwise) and an
//! online solver for renewal sequences.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sin_cos;

const DIRECT_LIMIT: usize = 64;

/// First `out_len` terms of `a * b`.
pub(crate) fn convolve(a: &[f64], b: &[f64], out_len: usize) -> Vec<f64> {
    let a = &a[..a.len().min(out_len)];
    let b = &b[..b.len().min(out_len)];
    if a.is_empty() || b.is_empty() {
        return vec![0.0; out_len];
    }
    if a.len().min(b.len()) <= DIRECT_LIMIT {
        let mut out = vec![0.0; out_len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (o, &y) in out[i..].iter_mut().zip(b) {
                *o += x * y;
            }
        }
        return out;
    }
    let size = (a.len() + b.len() - 1).next_power_of_two();
    let mut fa: Vec<(f64, f64)> = a.iter().map(|&x| (x, 0.0)).collect();
    fa.resize(size, (0.0, 0.0));
    let mut fb: Vec<(f64, f64)> = b.iter().map(|&x| (x, 0.0)).collect();
    fb.resize(size, (0.0, 0.0));
    fft(&mut fa, false);
    fft(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = (x.0 * y.0 - x.1 * y.1, x.0 * y.1 + x.1 * y.0);
    }
    fft(&mut fa, true);
    let scale = 1.0 / size as f64;
    let mut out: Vec<f64> = fa.iter().take(out_len).map(|z| z.0 * scale).collect();
    out.resize(out_len, 0.0);
    out
}

fn fft(data: &mut [(f64, f64)], inverse: bool) {
    let n = data.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let twiddles: Vec<(f64, f64)> = (0..half)
            .map(|k| {
                let (s, c) = sin_cos(sign * 2.0 * core::f64::consts::PI * k as f64 / len as f64);
                (c, s)
            })
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let (wr, wi) = twiddles[k];
                let (br, bi) = data[start + k + half];
                let t = (br * wr - bi * wi, br * wi + bi * wr);
                let u = data[start + k];
                data[start + k] = (u.0 + t.0, u.1 + t.1);
                data[start + k + half] = (u.0 - t.0, u.1 - t.1);
            }
        }
        len <<= 1;
    }
}

/// Renewal sequence `u_0 = 1`, `u_m = Σ_{j=1}^m c_j u_{m-j}` for
/// `m < len`, by divide and conquer over FFT convolutions.
pub(crate) fn renewal_sequence(c: &[f64], len: usize) -> Vec<f64> {
    let mut u = vec![0.0; len];
    if len == 0 {
        return u;
    }
    u[0] = 1.0;
    let mut c = c.to_vec();
    c.resize(len, 0.0);
    solve(&mut u, &c, 0, len);
    u
}

fn solve(u: &mut [f64], c: &[f64], lo: usize, hi: usize) {
    if hi - lo <= DIRECT_LIMIT {
        for m in lo.max(1)..hi {
            let mut acc = u[m];
            for i in lo..m {
                acc += c[m - i] * u[i];
            }
            u[m] = acc;
        }
        return;
    }
    let mid = lo + (hi - lo) / 2;
    solve(u, c, lo, mid);
    // contributions of u[lo..mid) to u[mid..hi)
    let part = convolve(&u[lo..mid], &c[..hi - lo], hi - lo);
    for m in mid..hi {
        u[m] += part[m - lo];
    }
    solve(u, c, mid, hi);
}
