//! Reduced-order descriptor models `H(s) = C (sE - A)^-1 B`: evaluation, poles
//! and error reports.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{condition_number, ensure_finite, generalized_eigenvalues, LuFactors, Scalar};
use crate::loewner::{FrequencyDataSet, MAX_REDUCED_CONDITION};

/// Reference magnitudes below this have no relative error entry.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone)]
pub struct ReducedModel<T = f64> {
    e: Mat<T>,
    a: Mat<T>,
    b: Vec<T>,
    c: Vec<T>,
}

impl<T: Scalar> ReducedModel<T> {
    pub fn new(e: Mat<T>, a: Mat<T>, b: Vec<T>, c: Vec<T>) -> Result<Self> {
        let r = e.nrows();
        let shape = |m: &Mat<T>| (m.nrows(), m.ncols());
        if shape(&e) != (r, r) || shape(&a) != (r, r) || b.len() != r || c.len() != r {
            return Err(Error::DimensionMismatch {
                context: "reduced model",
                expected: format!("E, A {r}x{r}; B, C length {r}"),
                found: format!(
                    "E {:?}, A {:?}, B {}, C {}",
                    shape(&e),
                    shape(&a),
                    b.len(),
                    c.len()
                ),
            });
        }
        if r == 0 {
            return Err(Error::InvalidData("reduced model of order 0".into()));
        }
        ensure_finite(e.as_ref(), "reduced E")?;
        ensure_finite(a.as_ref(), "reduced A")?;
        if !b.iter().chain(&c).all(|x| x.finite()) {
            return Err(Error::NonFinite("reduced B or C"));
        }
        let cond = condition_number(e.as_ref())?;
        if !(cond < MAX_REDUCED_CONDITION) {
            return Err(Error::SingularMatrix {
                pivot: 1.0 / cond,
                threshold: 1.0 / MAX_REDUCED_CONDITION,
            });
        }
        Ok(Self { e, a, b, c })
    }

    pub fn order(&self) -> usize {
        self.b.len()
    }

    pub fn e(&self) -> &Mat<T> {
        &self.e
    }

    pub fn a(&self) -> &Mat<T> {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn c(&self) -> &[T] {
        &self.c
    }
}

/// `C (sE - A)^-1 B` through one pivoted LU solve.
pub fn eval_tf<T: Scalar>(m: &ReducedModel<T>, s: Complex64) -> Result<Complex64> {
    let r = m.order();
    let pencil = Mat::from_fn(r, r, |i, j| s * m.e[(i, j)].to_c64() - m.a[(i, j)].to_c64());
    let rhs: Vec<Complex64> = m.b.iter().map(|x| x.to_c64()).collect();
    let x = LuFactors::new(pencil.as_ref())?.solve(&rhs)?;
    Ok(m.c.iter().zip(&x).map(|(c, x)| c.to_c64() * x).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleReport {
    pub poles: Vec<Complex64>,
    pub max_real_part: f64,
    pub stable: bool,
}

/// Eigenvalues of the pencil `(A, E)`.
pub fn poles<T: Scalar>(m: &ReducedModel<T>) -> Result<PoleReport> {
    let poles = generalized_eigenvalues(m.a.as_ref(), m.e.as_ref())?;
    let max_real_part = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(PoleReport {
        stable: max_real_part < 0.0,
        poles,
        max_real_part,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub abs: Vec<f64>,
    /// `None` where the reference magnitude is below [`RELATIVE_ERROR_FLOOR`].
    pub rel: Vec<Option<f64>>,
    pub max_abs: f64,
    pub max_rel: f64,
}

/// Pointwise deviation of the model from reference samples.
pub fn error_report<T: Scalar>(m: &ReducedModel<T>, reference: &FrequencyDataSet) -> Result<ErrorReport> {
    if reference.is_empty() {
        return Err(Error::InvalidData("empty reference data".into()));
    }
    let pairs: Vec<(f64, Option<f64>)> = reference
        .nodes()
        .par_iter()
        .zip(reference.values().par_iter())
        .map(|(&s, &h)| {
            let fitted = eval_tf(m, s).map_err(|e| {
                Error::InvalidData(format!("model evaluation failed at node {s}: {e}"))
            })?;
            let abs = (h - fitted).norm();
            let rel = (h.norm() >= RELATIVE_ERROR_FLOOR).then(|| abs / h.norm());
            Ok((abs, rel))
        })
        .collect::<Result<_>>()?;
    let (abs, rel): (Vec<f64>, Vec<Option<f64>>) = pairs.into_iter().unzip();
    let max_abs = abs.iter().copied().fold(0.0, f64::max);
    let max_rel = rel.iter().flatten().copied().fold(0.0, f64::max);
    Ok(ErrorReport {
        abs,
        rel,
        max_abs,
        max_rel,
    })
}
