//! Dense complex vectors and matrices, a symmetric tridiagonal eigensolver,
//! and unitary propagators `U = exp(-i t gamma H)` built from the spectrum.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitude vector of fixed length `n >= 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::invalid(format!(
                "vector length must be at least 2, got {}",
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                what: "complex vector".into(),
            });
        }
        Ok(ComplexVector(entries))
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.0
    }

    /// Euclidean norm of the moduli.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Multiplies every entry by `exp(i phase)`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let w = Complex64::from_polar(1.0, phase);
        ComplexVector(self.0.iter().map(|z| z * w).collect())
    }

    /// Largest entrywise modulus of the difference.
    pub fn max_abs_diff(&self, other: &ComplexVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Real symmetric tridiagonal matrix stored as its diagonal and first
/// off-diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    diagonal: Vec<f64>,
    offdiagonal: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diagonal: Vec<f64>, offdiagonal: Vec<f64>) -> Result<Self> {
        let n = diagonal.len();
        if n < 2 {
            return Err(Error::invalid(format!("dimension must be at least 2, got {n}")));
        }
        if offdiagonal.len() != n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                found: offdiagonal.len(),
            });
        }
        if diagonal.iter().chain(&offdiagonal).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                what: "tridiagonal matrix".into(),
            });
        }
        Ok(SymTridiagonal {
            diagonal,
            offdiagonal,
        })
    }

    /// Tridiagonal matrix with the same value on every off-diagonal entry.
    pub fn with_uniform_coupling(diagonal: Vec<f64>, coupling: f64) -> Result<Self> {
        let n = diagonal.len();
        Self::new(diagonal, vec![coupling; n.saturating_sub(1)])
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn offdiagonal(&self) -> &[f64] {
        &self.offdiagonal
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diagonal[i]
        } else if i + 1 == j {
            self.offdiagonal[i]
        } else if j + 1 == i {
            self.offdiagonal[j]
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> RealMatrix {
        let n = self.dim();
        RealMatrix::from_fn(n, |i, j| self.get(i, j))
    }
}

/// Square real matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        RealMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &RealMatrix) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum())
    }

    pub fn max_abs_diff(&self, other: &RealMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn swap_columns(&mut self, a: usize, b: usize) {
        for i in 0..self.n {
            self.data.swap(i * self.n + a, i * self.n + b);
        }
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum())
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Eigendecomposition `H = V diag(lambda) V^T` of a symmetric tridiagonal
/// matrix. Eigenvalues ascend; column `k` of `eigenvectors` pairs with
/// `eigenvalues[k]`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: RealMatrix,
}

const MAX_QL_ITERATIONS: usize = 60;

/// Eigenvalues and orthogonal eigenvectors by implicit QL with Wilkinson
/// shifts.
pub fn eig_sym_tridiagonal(h: &SymTridiagonal) -> Result<Spectrum> {
    let n = h.dim();
    let mut d = h.diagonal.clone();
    // e[i] couples i and i+1; e[n-1] is scratch.
    let mut e = h.offdiagonal.clone();
    e.push(0.0);
    let mut z = RealMatrix::identity(n);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence { index: l });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z.get(k, i + 1);
                    let zk = z.get(k, i);
                    *z.get_mut(k, i + 1) = s * zk + c * zk1;
                    *z.get_mut(k, i) = c * zk - s * zk1;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // selection sort keeps the column swaps paired with the values
    for i in 0..n {
        let k = (i..n)
            .min_by(|&a, &b| d[a].total_cmp(&d[b]))
            .unwrap_or(i);
        if k != i {
            d.swap(i, k);
            z.swap_columns(i, k);
        }
    }

    Ok(Spectrum {
        eigenvalues: d,
        eigenvectors: z,
    })
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &RealMatrix {
        &self.eigenvectors
    }

    /// `V diag(lambda) V^T`.
    pub fn reconstruct(&self) -> RealMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        RealMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| v.get(i, k) * self.eigenvalues[k] * v.get(j, k))
                .sum()
        })
    }

    /// `exp(-i t gamma H)` for `t >= 0`, `gamma > 0`.
    pub fn propagator(&self, t: f64, gamma: f64) -> Result<Propagator> {
        check_time(t, gamma)?;
        Ok(self.propagator_signed(t, gamma))
    }

    /// Like [`Spectrum::propagator`] but accepts negative `t`, giving
    /// backward evolution. Used for reversibility checks only.
    pub fn propagator_signed(&self, t: f64, gamma: f64) -> Propagator {
        let n = self.dim();
        if t == 0.0 {
            return Propagator {
                matrix: ComplexMatrix::identity(n),
            };
        }
        let phases = self.phases(t, gamma);
        let v = &self.eigenvectors;
        let matrix = ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| phases[k] * (v.get(i, k) * v.get(j, k)))
                .sum()
        });
        Propagator { matrix }
    }

    /// Applies `exp(-i t gamma H)` to `psi` without forming the matrix:
    /// `V (phase * (V^T psi))`. Zero time returns `psi` unchanged.
    pub fn evolve(&self, psi: &ComplexVector, t: f64, gamma: f64) -> Result<ComplexVector> {
        check_time(t, gamma)?;
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        Ok(self.evolve_unchecked(psi.entries(), t, gamma))
    }

    pub(crate) fn evolve_unchecked(&self, psi: &[Complex64], t: f64, gamma: f64) -> ComplexVector {
        if t == 0.0 {
            return ComplexVector(psi.to_vec());
        }
        let n = self.dim();
        let v = &self.eigenvectors;
        let phases = self.phases(t, gamma);
        let coeffs: Vec<Complex64> = (0..n)
            .map(|k| {
                let c: Complex64 = (0..n).map(|i| psi[i] * v.get(i, k)).sum();
                c * phases[k]
            })
            .collect();
        ComplexVector(
            (0..n)
                .map(|i| (0..n).map(|k| coeffs[k] * v.get(i, k)).sum())
                .collect(),
        )
    }

    fn phases(&self, t: f64, gamma: f64) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&lambda| Complex64::from_polar(1.0, -t * gamma * lambda))
            .collect()
    }
}

fn check_time(t: f64, gamma: f64) -> Result<()> {
    if !t.is_finite() || !gamma.is_finite() {
        return Err(Error::NonFinite {
            what: "evolution time or gamma".into(),
        });
    }
    if t < 0.0 {
        return Err(Error::invalid(format!("evolution time must be non-negative, got {t}")));
    }
    if gamma <= 0.0 {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    Ok(())
}

/// Unitary time-evolution operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagator {
    matrix: ComplexMatrix,
}

impl Propagator {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `max |(U^H U - I)_ij|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        self.matrix
            .adjoint()
            .matmul(&self.matrix)
            .max_abs_diff(&ComplexMatrix::identity(n))
    }

    pub fn apply(&self, psi: &ComplexVector) -> Result<ComplexVector> {
        apply(self, psi)
    }
}

/// `exp(-i t gamma H)` via the eigendecomposition of `h`.
pub fn propagator(h: &SymTridiagonal, t: f64, gamma: f64) -> Result<Propagator> {
    check_time(t, gamma)?;
    eig_sym_tridiagonal(h)?.propagator(t, gamma)
}

/// `U psi`. No renormalization is applied.
pub fn apply(u: &Propagator, psi: &ComplexVector) -> Result<ComplexVector> {
    let n = u.dim();
    if psi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi.len(),
        });
    }
    let x = psi.entries();
    Ok(ComplexVector(
        (0..n)
            .map(|i| (0..n).map(|j| u.matrix.get(i, j) * x[j]).sum())
            .collect(),
    ))
}
