//! Dense complex linear algebra for small Hermitian and general matrices.
//!
//! Everything here works on row-major `Complex64` storage with dimensions in
//! the tens (n-copy qubit spaces up to 64, Fock truncations up to ~256).
//! The Hermitian eigensolver is a cyclic complex Jacobi iteration: quadratic
//! local convergence, unconditionally stable, and accurate to a few ulps for
//! these sizes, with no external BLAS/LAPACK linkage.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::tol;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds from row-major complex entries. Fails on non-square input or
    /// non-finite entries.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(CoreError::DimensionMismatch {
                left: entries.len(),
                right: dim * dim,
                context: "ComplexMatrix::from_entries",
            });
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(CoreError::ParameterDomain {
                what: "matrix entries must be finite".into(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(CoreError::DimensionMismatch {
                    left: r.len(),
                    right: dim,
                    context: "ComplexMatrix::from_rows",
                });
            }
            entries.extend_from_slice(r);
        }
        Self::from_entries(dim, entries)
    }

    /// Real matrix embedded as complex.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::from_entries(
            dim,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.entries[i * n + k];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += aik * other.entries[k * n + j];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    /// `tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex64 {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.entries[i * n + j] * other.entries[j * n + i];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max entrywise deviation from the conjugate transpose.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let dev = (self.entries[i * n + j] - self.entries[j * n + i].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// `(A + A†) / 2`, exact Hermitian projection.
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[i * n + j] =
                    (self.entries[i * n + j] + self.entries[j * n + i].conj()) * 0.5;
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

/// Kronecker product in the standard block layout:
/// `kron(a, b)[(i*db + k), (j*db + l)] = a[i,j] * b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    let n = da * db;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..da {
        for j in 0..da {
            let aij = a[(i, j)];
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k, j * db + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Square complex matrix constrained to `A = A†` within [`tol::HERMITICITY`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianOperator {
    inner: ComplexMatrix,
}

impl HermitianOperator {
    /// Validates hermiticity and stores the exact Hermitian part so that
    /// downstream arithmetic never sees the sub-tolerance asymmetry.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let defect = mat.hermiticity_defect();
        if defect > tol::HERMITICITY {
            return Err(CoreError::NotHermitian {
                max_dev: defect,
                tol: tol::HERMITICITY,
            });
        }
        Ok(Self {
            inner: mat.hermitian_part(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: ComplexMatrix::identity(dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: ComplexMatrix::zeros(dim),
        }
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real(dim, entries)?)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.inner
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            inner: self.inner.add(&other.inner),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            inner: self.inner.sub(&other.inner),
        }
    }

    /// Real scaling preserves hermiticity.
    pub fn scale(&self, s: f64) -> Self {
        Self {
            inner: self.inner.scale_re(s),
        }
    }

    pub fn trace_re(&self) -> f64 {
        self.inner.trace().re
    }

    /// `tr(A B)` for Hermitian `A`, `B`; the result is real up to rounding.
    pub fn trace_product_re(&self, other: &Self) -> f64 {
        self.inner.trace_product(&other.inner).re
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            inner: kron(&self.inner, &other.inner),
        }
    }

    /// Smallest eigenvalue; convenience for PSD checks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = eig_hermitian(self)?;
        Ok(eig.eigenvalues[0])
    }
}

/// Eigendecomposition of a Hermitian operator: `A = U diag(λ) U†` with real
/// eigenvalues sorted ascending and unitary `U` (eigenvectors in columns).
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigDecomposition {
    /// Rebuilds `U f(λ) U†` for a scalar function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let n = self.eigenvalues.len();
        let u = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..n {
            let fk = f(self.eigenvalues[k]);
            if fk == 0.0 {
                continue;
            }
            for i in 0..n {
                let uik = u[(i, k)] * fk;
                for j in 0..n {
                    let add = uik * u[(j, k)].conj();
                    out[(i, j)] += add;
                }
            }
        }
        HermitianOperator {
            inner: out.hermitian_part(),
        }
    }
}

const MAX_JACOBI_SWEEPS: usize = 100;

/// Cyclic complex Jacobi eigendecomposition of a Hermitian matrix.
///
/// Each rotation zeroes one off-diagonal pair `(p, q)`: a diagonal phase
/// makes the pivot real, then a real Givens rotation annihilates it. The
/// off-diagonal Frobenius norm decreases monotonically, so the iteration
/// always converges; the sweep cap is a defensive guard.
pub fn eig_hermitian(a: &HermitianOperator) -> Result<EigDecomposition> {
    let n = a.dim();
    let mut m = a.inner.clone();
    let mut u = ComplexMatrix::identity(n);

    let scale = m.max_abs().max(1.0);
    let stop = 1e-15 * scale;

    let mut converged = false;
    let mut last_off = 0.0;
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        last_off = off;
        if off <= stop {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut u, p, q);
            }
        }
    }
    if !converged {
        return Err(CoreError::EigNoConvergence {
            sweeps: MAX_JACOBI_SWEEPS,
            off_norm: last_off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let vals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[(row, new_col)] = u[(row, old_col)];
        }
    }

    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// One complex Jacobi rotation annihilating `m[(p, q)]`, accumulating into `u`.
fn jacobi_rotate(m: &mut ComplexMatrix, u: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r; // e^{i φ}, so that conj(phase) * apq is real
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;

    // Real Jacobi angle for [[app, r], [r, aqq]].
    let zeta = (aqq - app) / (2.0 * r);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (zeta * zeta + 1.0).sqrt())
    } else {
        -1.0 / (-zeta + (zeta * zeta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = m.dim();
    // Column rotation coefficients of R = P(φ) · O(θ):
    //   R[p][p] = c·e^{iφ}, R[p][q] = s·e^{iφ}, R[q][p] = -s, R[q][q] = c.
    let cp = phase * c;
    let sp = phase * s;

    // A ← R† A R; exploit hermiticity: update columns, mirror into rows.
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        let new_kp = akp * cp - akq * s;
        let new_kq = akp * sp + akq * c;
        m[(k, p)] = new_kp;
        m[(p, k)] = new_kp.conj();
        m[(k, q)] = new_kq;
        m[(q, k)] = new_kq.conj();
    }
    m[(p, p)] = Complex64::new(app - t * r, 0.0);
    m[(q, q)] = Complex64::new(aqq + t * r, 0.0);
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);

    for k in 0..n {
        let ukp = u[(k, p)];
        let ukq = u[(k, q)];
        u[(k, p)] = ukp * cp - ukq * s;
        u[(k, q)] = ukp * sp + ukq * c;
    }
}

/// Scalar functions applied through the eigenbasis by [`mat_func`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatFunc {
    /// Principal square root; requires PSD input (clamping window applies).
    Sqrt,
    /// Inverse square root; requires positive-definite input.
    InvSqrt,
    /// Inverse; requires positive-definite input.
    Inv,
    /// Entrywise absolute value of the spectrum; any Hermitian input.
    Abs,
}

/// Applies a scalar function to the spectrum of a Hermitian operator.
///
/// `Sqrt` clamps eigenvalues in `[PSD_CLAMP, 0)` to zero and refuses more
/// negative ones. `Inv` and `InvSqrt` refuse eigenvalues at or below
/// `SINGULAR_FLOOR_REL * max|λ|` instead of regularizing. `Abs` accepts any
/// Hermitian input.
pub fn mat_func(a: &HermitianOperator, f: MatFunc) -> Result<HermitianOperator> {
    let eig = eig_hermitian(a)?;
    let lam_max = eig
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .fold(0.0f64, f64::max);
    let floor = tol::SINGULAR_FLOOR_REL * lam_max;

    match f {
        MatFunc::Sqrt => {
            if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < tol::PSD_CLAMP) {
                return Err(CoreError::NotPsd { eigenvalue: bad });
            }
            Ok(eig.apply(|l| l.max(0.0).sqrt()))
        }
        MatFunc::Abs => Ok(eig.apply(f64::abs)),
        MatFunc::Inv | MatFunc::InvSqrt => {
            if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l <= floor) {
                return Err(CoreError::SingularMatrix {
                    eigenvalue: bad,
                    floor,
                    op: match f {
                        MatFunc::Inv => "inv",
                        _ => "inv_sqrt",
                    },
                });
            }
            match f {
                MatFunc::Inv => Ok(eig.apply(|l| 1.0 / l)),
                _ => Ok(eig.apply(|l| 1.0 / l.sqrt())),
            }
        }
    }
}

/// Sum of absolute eigenvalues (trace norm of a Hermitian operator).
pub fn trace_abs(a: &HermitianOperator) -> Result<f64> {
    let eig = eig_hermitian(a)?;
    Ok(eig.eigenvalues.iter().map(|l| l.abs()).sum())
}
