//! Minimal dense linear algebra: complex matrices, symmetric eigensolvers.
//!
//! Everything here is sized for Dicke-space work ((N+1)-dimensional, N up to a
//! few hundred) and small Fisher matrices, so plain O(n^3) dense routines with
//! no blocking are plenty.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::C64;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMat::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        Ok(CMat { dim, data })
    }

    /// Diagonal matrix from complex entries.
    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = CMat::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn adjoint(&self) -> CMat {
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul_mat(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += a * row[j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len(), "matrix/vector dimension mismatch");
        let n = self.dim;
        (0..n)
            .map(|i| {
                let row = &self.data[i * n..(i + 1) * n];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Conjugation `U * M * U^dag`.
    pub fn conjugate_with(&self, u: &CMat) -> CMat {
        u.mul_mat(self).mul_mat(&u.adjoint())
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().iter().sum()
    }

    /// Largest |M_ij - conj(M_ji)| over all pairs.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Largest |(U^dag U - I)_ij|; zero for exactly unitary matrices.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul_mat(self);
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                let d = (p[(i, j)] - C64::new(target, 0.0)).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl core::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

#[inline]
fn hypot(a: f64, b: f64) -> f64 {
    libm::hypot(a, b)
}

/// Eigendecomposition of a real symmetric tridiagonal matrix by the implicit
/// QL algorithm. `diag` has length n, `off` length n-1 (off[i] couples i and
/// i+1). Returns eigenvalues (ascending) and the orthogonal matrix whose
/// column k (i.e. `vecs[i*n + k]`) is the k-th eigenvector.
pub fn sym_tridiag_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    assert!(n > 0 && off.len() + 1 == n);
    let mut d: Vec<f64> = diag.to_vec();
    let mut e: Vec<f64> = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0f64; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            // look for a negligible off-diagonal to split the problem
            let mut m = l;
            while m + 1 < n {
                let dd = libm::fabs(d[m]) + libm::fabs(d[m + 1]);
                if libm::fabs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot(g, 1.0);
            let sign_r = if g >= 0.0 { libm::fabs(r) } else { -libm::fabs(r) };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
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
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // sort ascending, carrying eigenvector columns along
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vecs = vec![0.0f64; n * n];
    for (newk, &oldk) in order.iter().enumerate() {
        for i in 0..n {
            vecs[i * n + newk] = z[i * n + oldk];
        }
    }
    (vals, vecs)
}

/// Householder reduction of a dense real symmetric matrix to tridiagonal form,
/// followed by the QL pass. Input is row-major n x n (only the lower triangle
/// is read). Returns ascending eigenvalues and column eigenvectors.
pub fn sym_eigen(mat: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(mat.len(), n * n);
    let mut a: Vec<f64> = mat.to_vec();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];

    // tred2, with eigenvector accumulation
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0f64;
        if l > 0 {
            let mut scale = 0.0f64;
            for k in 0..=l {
                scale += libm::fabs(a[i * n + k]);
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -libm::sqrt(h) } else { libm::sqrt(h) };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = 0.0f64;
                for j in 0..=l {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut g = 0.0f64;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0f64;
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }

    // QL on the tridiagonal, rotations applied to the accumulated transform
    let off: Vec<f64> = e[1..].to_vec();
    let (vals, q) = sym_tridiag_eigen_with_basis(&d, &off, &mut a, n);
    (vals, q)
}

// Same QL pass as `sym_tridiag_eigen`, but starting from an arbitrary basis
// matrix `z` (used by `sym_eigen` to fold in the Householder transform).
fn sym_tridiag_eigen_with_basis(
    diag: &[f64],
    off: &[f64],
    z: &mut [f64],
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut d: Vec<f64> = diag.to_vec();
    let mut e: Vec<f64> = off.to_vec();
    e.push(0.0);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = libm::fabs(d[m]) + libm::fabs(d[m + 1]);
                if libm::fabs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = hypot(g, 1.0);
            let sign_r = if g >= 0.0 { libm::fabs(r) } else { -libm::fabs(r) };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
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
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vecs = vec![0.0f64; n * n];
    for (newk, &oldk) in order.iter().enumerate() {
        for i in 0..n {
            vecs[i * n + newk] = z[i * n + oldk];
        }
    }
    (vals, vecs)
}

/// Eigenvalues of a complex Hermitian matrix via the real 2n x 2n embedding
/// [[Re, -Im], [Im, Re]]. Each eigenvalue of the input appears twice in the
/// output, which is harmless for the positivity checks this supports.
pub fn hermitian_eigenvalues_doubled(mat: &CMat) -> Vec<f64> {
    let n = mat.dim();
    let mut big = vec![0.0f64; (2 * n) * (2 * n)];
    for i in 0..n {
        for j in 0..n {
            let v = mat[(i, j)];
            big[i * 2 * n + j] = v.re;
            big[i * 2 * n + (j + n)] = -v.im;
            big[(i + n) * 2 * n + j] = v.im;
            big[(i + n) * 2 * n + (j + n)] = v.re;
        }
    }
    let (vals, _) = sym_eigen(&big, 2 * n);
    vals
}

/// Smallest eigenvalue of a complex Hermitian matrix.
pub fn hermitian_min_eigenvalue(mat: &CMat) -> f64 {
    hermitian_eigenvalues_doubled(mat)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Inverse, condition number and near-null directions of a small symmetric
/// matrix, via its eigendecomposition. Directions with |eigenvalue| below
/// `abs_floor` are reported back by index instead of being inverted.
#[derive(Debug)]
pub struct SymInverse {
    pub inverse: Vec<f64>,
    pub condition: f64,
    pub eigenvalues: Vec<f64>,
    /// Descriptions of directions treated as degenerate (empty when regular).
    pub degenerate: Vec<String>,
}

pub fn sym_inverse(mat: &[f64], n: usize, allow_pseudo: bool) -> Result<SymInverse> {
    let (vals, vecs) = sym_eigen(mat, n);
    let max_abs = vals.iter().fold(0.0f64, |a, &v| a.max(libm::fabs(v)));
    if max_abs == 0.0 {
        return Err(Error::SingularMatrix {
            condition: f64::INFINITY,
            degenerate: String::from("all directions (zero matrix)"),
        });
    }
    let min_abs = vals.iter().fold(f64::INFINITY, |a, &v| a.min(libm::fabs(v)));
    let condition = max_abs / min_abs;
    let mut degenerate = Vec::new();
    let cutoff = max_abs * 1e-12;
    for (k, &v) in vals.iter().enumerate() {
        if libm::fabs(v) < cutoff {
            let mut comps = String::new();
            for i in 0..n {
                if i > 0 {
                    comps.push_str(", ");
                }
                let mut buf = [0u8; 32];
                comps.push_str(fmt_f64(vecs[i * n + k], &mut buf));
            }
            degenerate.push(comps);
        }
    }
    if !degenerate.is_empty() && !allow_pseudo {
        return Err(Error::SingularMatrix {
            condition,
            degenerate: degenerate.join("; "),
        });
    }
    let mut inv = vec![0.0f64; n * n];
    for k in 0..n {
        if libm::fabs(vals[k]) < cutoff {
            continue; // pseudo-inverse: drop the direction
        }
        let w = 1.0 / vals[k];
        for i in 0..n {
            let vik = vecs[i * n + k];
            if vik == 0.0 {
                continue;
            }
            for j in 0..n {
                inv[i * n + j] += w * vik * vecs[j * n + k];
            }
        }
    }
    Ok(SymInverse { inverse: inv, condition, eigenvalues: vals, degenerate })
}

// small fixed-format float printing for degenerate-direction reports (no_std)
fn fmt_f64(v: f64, _buf: &mut [u8; 32]) -> &'static str {
    // keep it coarse: sign and magnitude bucket are enough for a diagnostic
    if v > 0.5 {
        "+1"
    } else if v < -0.5 {
        "-1"
    } else if v > 0.05 {
        "+0.x"
    } else if v < -0.05 {
        "-0.x"
    } else {
        "~0"
    }
}
