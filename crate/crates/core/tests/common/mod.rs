//! Reference implementations that share no code with the library.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<Complex64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric tridiagonal generator: `(diagonal, offdiagonal)` with
/// entries uniform in `[-range, range]`.
pub fn random_tridiagonal(rng: &mut ChaCha8Rng, n: usize, range: f64) -> (Vec<f64>, Vec<f64>) {
    let diag = (0..n).map(|_| rng.random_range(-range..=range)).collect();
    let off = (0..n - 1).map(|_| rng.random_range(-range..=range)).collect();
    (diag, off)
}

pub fn dense_real(diag: &[f64], off: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = diag[i];
        if i + 1 < n {
            a[i][i + 1] = off[i];
            a[i + 1][i] = off[i];
        }
    }
    a
}

fn identity(n: usize) -> Dense {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).collect())
        .collect()
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut c = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn one_norm(a: &Dense) -> f64 {
    let n = a.len();
    (0..n).map(|j| (0..n).map(|i| a[i][j].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(-i * scale * H)` by scaling and squaring a truncated Taylor series.
pub fn expm_taylor(h: &[Vec<f64>], scale: f64) -> Dense {
    let n = h.len();
    let a: Dense = h
        .iter()
        .map(|row| row.iter().map(|&x| Complex64::new(0.0, -scale * x)).collect())
        .collect();
    let norm = one_norm(&a);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let shrink = 0.5f64.powi(squarings as i32);
    let a: Dense = a.iter().map(|row| row.iter().map(|x| x * shrink).collect()).collect();

    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=30 {
        term = matmul(&term, &a);
        let inv = 1.0 / k as f64;
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x *= inv;
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// Cyclic Jacobi eigen-decomposition of a dense symmetric matrix.
/// Returns ascending eigenvalues and the matching eigenvectors as columns.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (values, vectors)
}

pub fn max_abs_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `exp(scale * K)` for a real matrix, via the complex oracle's squaring
/// scheme applied to a real Taylor series.
pub fn expm_real(k: &[Vec<f64>], scale: f64) -> Vec<Vec<f64>> {
    let n = k.len();
    let norm = (0..n).map(|j| (0..n).map(|i| (scale * k[i][j]).abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let a: Vec<Vec<f64>> = k.iter().map(|r| r.iter().map(|x| x * scale * 0.5f64.powi(squarings)).collect()).collect();
    let mul = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|m| x[i][m] * y[m][j]).sum()).collect()).collect()
    };
    let id: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    let mut sum = id.clone();
    let mut term = id;
    for j in 1..=30 {
        term = mul(&term, &a).into_iter().map(|r| r.into_iter().map(|x| x / j as f64).collect()).collect();
        for i in 0..n {
            for c in 0..n {
                sum[i][c] += term[i][c];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}
