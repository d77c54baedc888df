//! Dense linear-algebra kernels shared by the numeric modules.
//!
//! Matrices are [`faer::Mat`] values over either `f64` or [`Complex64`]. The pivoted
//! LU used for every square solve is implemented here so that its singularity
//! threshold is explicit; SVD and the standard eigenvalue problem are delegated
//! to faer.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type DenseMatrix<T> = Mat<T>;

/// Pivots below this fraction of the (row-equilibrated) max entry are singular.
pub const PIVOT_THRESHOLD: f64 = 1e-14;

/// Largest condition estimate of `E` accepted by [`generalized_eigenvalues`].
pub const MAX_PENCIL_CONDITION: f64 = 1e10;

/// Scalar field of a dense matrix: `f64` or `Complex64`.
pub trait Scalar:
    faer::traits::ComplexField<Real = f64>
    + Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    const IS_REAL: bool;

    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn conjugate(self) -> Self;
    fn to_c64(self) -> Complex64;
    fn finite(self) -> bool;

    fn zero() -> Self {
        Self::from_real(0.0)
    }

    fn one() -> Self {
        Self::from_real(1.0)
    }
}

impl Scalar for f64 {
    const IS_REAL: bool = true;

    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conjugate(self) -> Self {
        self
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    const IS_REAL: bool = false;

    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conjugate(self) -> Self {
        self.conj()
    }
    fn to_c64(self) -> Complex64 {
        self
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

pub fn max_abs<T: Scalar>(a: MatRef<'_, T>) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].modulus());
        }
    }
    m
}

pub fn frobenius<T: Scalar>(a: MatRef<'_, T>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let x = a[(i, j)].modulus();
            acc += x * x;
        }
    }
    acc.sqrt()
}

pub fn ensure_finite<T: Scalar>(a: MatRef<'_, T>, what: &'static str) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].finite() {
                return Err(Error::NonFinite(what));
            }
        }
    }
    Ok(())
}

fn ensure_square<T>(a: MatRef<'_, T>, context: &'static str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            context,
            expected: "square matrix".into(),
            found: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    Ok(())
}

/// LU factorization with row equilibration and partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    n: usize,
    // row-major packed L\U of the equilibrated, permuted matrix
    lu: Vec<T>,
    perm: Vec<usize>,
    row_scale: Vec<f64>,
}

impl<T: Scalar> LuFactors<T> {
    pub fn new(a: MatRef<'_, T>) -> Result<Self> {
        ensure_square(a, "LU factorization")?;
        ensure_finite(a, "LU factorization")?;
        let n = a.nrows();

        let mut row_scale = vec![0.0; n];
        for (i, scale) in row_scale.iter_mut().enumerate() {
            let m = (0..n).map(|j| a[(i, j)].modulus()).fold(0.0, f64::max);
            if m == 0.0 {
                return Err(Error::SingularMatrix {
                    pivot: 0.0,
                    threshold: PIVOT_THRESHOLD,
                });
            }
            *scale = 1.0 / m;
        }

        let mut lu = Vec::with_capacity(n * n);
        for (i, &scale) in row_scale.iter().enumerate() {
            for j in 0..n {
                lu.push(a[(i, j)] * T::from_real(scale));
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pivot_abs) = (k..n)
                .map(|i| (i, lu[i * n + k].modulus()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs < PIVOT_THRESHOLD {
                return Err(Error::SingularMatrix {
                    pivot: pivot_abs,
                    threshold: PIVOT_THRESHOLD,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= factor * u;
                }
            }
        }

        Ok(Self {
            n,
            lu,
            perm,
            row_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "LU solve",
                expected: format!("rhs of length {n}"),
                found: b.len().to_string(),
            });
        }
        let mut x: Vec<T> = self
            .perm
            .iter()
            .map(|&p| b[p] * T::from_real(self.row_scale[p]))
            .collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: MatRef<'_, T>) -> Result<Mat<T>> {
        let mut out = Mat::<T>::zeros(b.nrows(), b.ncols());
        let mut col = vec![T::zero(); b.nrows()];
        for j in 0..b.ncols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            let x = self.solve(&col)?;
            for (i, xi) in x.into_iter().enumerate() {
                out[(i, j)] = xi;
            }
        }
        Ok(out)
    }
}

/// Solves the square system `A x = b`.
pub fn solve_linear<T: Scalar>(a: MatRef<'_, T>, b: &[T]) -> Result<Vec<T>> {
    if b.iter().any(|x| !x.finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    LuFactors::new(a)?.solve(b)
}

/// Thin singular value decomposition `A = U diag(sigma) V*`.
#[derive(Debug, Clone)]
pub struct ThinSvd<T> {
    pub u: Mat<T>,
    pub sigma: Vec<f64>,
    pub v: Mat<T>,
}

pub fn svd_thin<T: Scalar>(a: MatRef<'_, T>) -> Result<ThinSvd<T>> {
    ensure_finite(a, "SVD input")?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(ThinSvd {
            u: Mat::zeros(a.nrows(), 0),
            sigma: Vec::new(),
            v: Mat::zeros(a.ncols(), 0),
        });
    }
    let svd = a.thin_svd().map_err(|_| Error::NoConvergence("SVD"))?;
    let s = svd.S().column_vector();
    let sigma = (0..s.nrows()).map(|i| s[i].to_c64().re).collect();
    Ok(ThinSvd {
        u: svd.U().to_owned(),
        sigma,
        v: svd.V().to_owned(),
    })
}

pub fn singular_values<T: Scalar>(a: MatRef<'_, T>) -> Result<Vec<f64>> {
    ensure_finite(a, "SVD input")?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    let s = a
        .singular_values()
        .map_err(|_| Error::NoConvergence("SVD"))?;
    Ok(s.into_iter().map(|x| x.to_c64().re).collect())
}

/// 2-norm condition number; infinite when the matrix is rank deficient.
pub fn condition_number<T: Scalar>(a: MatRef<'_, T>) -> Result<f64> {
    let s = singular_values(a)?;
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => Ok(max / min),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}

/// Eigenvalues of the pencil `(A, E)`, i.e. the roots of `det(A - lambda E) = 0`,
/// sorted by real then imaginary part.
///
/// `E` must be well conditioned; the problem is reduced to the standard
/// eigenproblem of `E^-1 A`.
pub fn generalized_eigenvalues<T: Scalar>(
    a: MatRef<'_, T>,
    e: MatRef<'_, T>,
) -> Result<Vec<Complex64>> {
    ensure_square(a, "pencil A")?;
    ensure_square(e, "pencil E")?;
    if a.nrows() != e.nrows() {
        return Err(Error::DimensionMismatch {
            context: "matrix pencil",
            expected: format!("{0}x{0}", a.nrows()),
            found: format!("{0}x{0}", e.nrows()),
        });
    }
    ensure_finite(a, "pencil A")?;
    ensure_finite(e, "pencil E")?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let cond = condition_number(e)?;
    if !(cond < MAX_PENCIL_CONDITION) {
        return Err(Error::SingularMatrix {
            pivot: 1.0 / cond,
            threshold: 1.0 / MAX_PENCIL_CONDITION,
        });
    }
    let reduced = LuFactors::new(e)?.solve_matrix(a)?;
    let mut eig: Vec<Complex64> = reduced
        .eigenvalues()
        .map_err(|_| Error::NoConvergence("eigenvalue iteration"))?;
    sort_complex(&mut eig);
    Ok(eig)
}

pub fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// `A * B` for dense operands.
pub fn matmul<T: Scalar>(a: MatRef<'_, T>, b: MatRef<'_, T>) -> Mat<T> {
    a * b
}

/// Conjugate transpose.
pub fn adjoint<T: Scalar>(a: MatRef<'_, T>) -> Mat<T> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conjugate())
}
