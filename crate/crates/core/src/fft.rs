//! Discrete Fourier transforms: iterative radix-2 for power-of-two lengths,
//! direct summation otherwise. 2D transforms apply the 1D transform along rows
//! then columns.
//!
//! Convention: `X_k = sum_j x_j exp(-2 pi i j k / n)`, inverse carries `1/n`.

use std::f64::consts::TAU;

use num_complex::Complex64;

pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    transform(x, false)
}

pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len() as f64;
    let mut out = transform(x, true);
    out.iter_mut().for_each(|v| *v /= n);
    out
}

/// O(n^2) reference transform, valid for any length.
pub fn dft_direct(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, &v)| {
                    // Reduce jk mod n before converting to keep the angle small.
                    let phase = sign * TAU * ((j * k) % n) as f64 / n as f64;
                    v * Complex64::from_polar(1.0, phase)
                })
                .sum()
        })
        .collect()
}

fn transform(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    if n <= 1 {
        return x.to_vec();
    }
    if !n.is_power_of_two() {
        return dft_direct(x, inverse);
    }
    let bits = n.trailing_zeros();
    let mut a: Vec<Complex64> = (0..n)
        .map(|i| x[i.reverse_bits() >> (usize::BITS - bits)])
        .collect();
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                // Twiddles from the exact angle rather than repeated products.
                let w = Complex64::from_polar(1.0, sign * TAU * k as f64 / len as f64);
                let t = a[start + k + half] * w;
                let u = a[start + k];
                a[start + k] = u + t;
                a[start + k + half] = u - t;
            }
        }
        len <<= 1;
    }
    a
}

/// 2D forward transform of a row-major `rows x cols` array.
pub fn dft2(x: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    transform2(x, rows, cols, false)
}

pub fn idft2(x: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    transform2(x, rows, cols, true)
}

fn transform2(x: &[Complex64], rows: usize, cols: usize, inverse: bool) -> Vec<Complex64> {
    assert_eq!(x.len(), rows * cols, "2D transform shape mismatch");
    let f = |v: &[Complex64]| if inverse { idft(v) } else { dft(v) };
    let mut out = Vec::with_capacity(x.len());
    for r in 0..rows {
        out.extend(f(&x[r * cols..(r + 1) * cols]));
    }
    let mut column = vec![Complex64::default(); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = out[r * cols + c];
        }
        for (r, v) in f(&column).into_iter().enumerate() {
            out[r * cols + c] = v;
        }
    }
    out
}
