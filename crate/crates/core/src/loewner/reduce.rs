use faer::Mat;
use serde::{Deserialize, Serialize};

use super::LoewnerPencil;
use crate::error::{Error, Result};
use crate::kernels::{adjoint, condition_number, matmul, svd_thin, Scalar};
use crate::rom::ReducedModel;

/// Default threshold on normalized singular values for automatic order selection.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;

/// Largest condition estimate of the projected `E` accepted by [`reduce`].
pub const MAX_REDUCED_CONDITION: f64 = 1e12;

/// Singular values and projection bases of the two augmented Loewner matrices.
#[derive(Debug, Clone)]
pub struct SvdReport<T> {
    /// Singular values of `[L, Ls]`.
    pub sigma_row: Vec<f64>,
    /// Singular values of `[L; Ls]`.
    pub sigma_col: Vec<f64>,
    /// Left singular vectors of `[L, Ls]` (row space of the data, one column per value).
    pub y: Mat<T>,
    /// Right singular vectors of `[L; Ls]`.
    pub x: Mat<T>,
}

impl<T> SvdReport<T> {
    pub fn sigma_row_normalized(&self) -> Vec<f64> {
        normalize(&self.sigma_row)
    }

    pub fn sigma_col_normalized(&self) -> Vec<f64> {
        normalize(&self.sigma_col)
    }

    /// Number of normalized `sigma_col` values at or above `tol`.
    pub fn order_for_tol(&self, tol: f64) -> usize {
        self.sigma_col_normalized()
            .iter()
            .position(|&s| s < tol)
            .unwrap_or(self.sigma_col.len())
    }
}

fn normalize(sigma: &[f64]) -> Vec<f64> {
    match sigma.first() {
        Some(&s0) if s0 > 0.0 => sigma.iter().map(|s| s / s0).collect(),
        _ => vec![0.0; sigma.len()],
    }
}

pub fn svd_augmented<T: Scalar>(p: &LoewnerPencil<T>) -> Result<SvdReport<T>> {
    let (q, k) = p.shape();
    let row = Mat::from_fn(q, 2 * k, |i, j| if j < k { p.l[(i, j)] } else { p.ls[(i, j - k)] });
    let col = Mat::from_fn(2 * q, k, |i, j| if i < q { p.l[(i, j)] } else { p.ls[(i - q, j)] });
    let (row_svd, col_svd) = rayon::join(|| svd_thin(row.as_ref()), || svd_thin(col.as_ref()));
    let (row_svd, col_svd) = (row_svd?, col_svd?);
    Ok(SvdReport {
        sigma_row: row_svd.sigma,
        sigma_col: col_svd.sigma,
        y: row_svd.u,
        x: col_svd.v,
    })
}

/// First 1-based index `i` from which `sigma[j+1] / sigma[j] > ratio` holds for
/// `run` consecutive `j >= i`: where the normalized decay flattens out.
pub fn stagnation_index(sigma: &[f64], ratio: f64, run: usize) -> Option<usize> {
    let ratios: Vec<f64> = sigma
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 1.0 })
        .collect();
    if run == 0 || ratios.len() < run {
        return None;
    }
    (0..=ratios.len() - run)
        .find(|&start| ratios[start..start + run].iter().all(|&q| q > ratio))
        .map(|start| start + 1)
}

/// Order of the reduced model: fixed, or chosen from normalized singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    Order(usize),
    Tol(f64),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Tol(DEFAULT_TRUNCATION_TOL)
    }
}

impl Truncation {
    pub fn resolve<T>(&self, svd: &SvdReport<T>) -> Result<usize> {
        let max = svd.y.ncols().min(svd.x.ncols());
        let r = match *self {
            Truncation::Order(r) => r,
            Truncation::Tol(tol) => svd.order_for_tol(tol).min(max),
        };
        if r == 0 {
            return Err(Error::InvalidData("truncation selects order 0".into()));
        }
        if r > max {
            return Err(Error::InvalidData(format!(
                "order {r} exceeds the {max} available singular directions"
            )));
        }
        Ok(r)
    }
}

/// Projects the pencil onto the leading `r` singular directions:
///
/// ```text
/// E = -Y_r* L X_r,  A = -Y_r* Ls X_r,  B = Y_r* V,  C = W X_r
/// ```
pub fn reduce<T: Scalar>(
    p: &LoewnerPencil<T>,
    svd: &SvdReport<T>,
    truncation: Truncation,
) -> Result<ReducedModel<T>> {
    let r = truncation.resolve(svd)?;
    let y_r = svd.y.subcols(0, r);
    let x_r = svd.x.subcols(0, r);
    let y_adj = adjoint(y_r);
    let project = |m: &Mat<T>| {
        let left = matmul(y_adj.as_ref(), m.as_ref());
        let out = matmul(left.as_ref(), x_r);
        Mat::from_fn(r, r, |i, j| -out[(i, j)])
    };
    let e = project(&p.l);
    let a = project(&p.ls);
    let b = (0..r)
        .map(|i| (0..p.v.len()).fold(T::zero(), |acc, k| acc + y_adj[(i, k)] * p.v[k]))
        .collect();
    let c = (0..r)
        .map(|j| (0..p.w.len()).fold(T::zero(), |acc, k| acc + p.w[k] * x_r[(k, j)]))
        .collect();

    let cond = condition_number(e.as_ref())?;
    if !(cond < MAX_REDUCED_CONDITION) {
        return Err(Error::OverTruncation { order: r, cond });
    }
    ReducedModel::new(e, a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loewner::{build_pencil, PartitionedData};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn stagnation_detection() {
        let mut s: Vec<f64> = (0..10).map(|k| 10f64.powi(-k)).collect();
        s.extend((0..15).map(|k| 1e-10 * 0.95f64.powi(k)));
        assert_eq!(stagnation_index(&s, 0.9, 10), Some(11));
        let steep: Vec<f64> = (0..30).map(|k| 10f64.powi(-k)).collect();
        assert_eq!(stagnation_index(&steep, 0.9, 10), None);
    }

    #[test]
    fn constant_data_rank_one() {
        let mu: Vec<_> = [1.0, 3.0, 5.0, 7.0].iter().map(|&x| c(x, 0.0)).collect();
        let lambda: Vec<_> = [2.0, 4.0, 6.0, 8.0].iter().map(|&x| c(x, 0.0)).collect();
        let pd = PartitionedData::new(mu, vec![c(1.0, 0.0); 4], lambda, vec![c(1.0, 0.0); 4]).unwrap();
        let svd = svd_augmented(&build_pencil(&pd).unwrap()).unwrap();
        assert!((svd.sigma_row[0] - 4.0).abs() < 1e-13);
        assert!(svd.sigma_row[1..].iter().all(|&x| x < 1e-13));
    }

    #[test]
    fn scalar_recovery() {
        let h = |s: Complex64| 1.0 / (s + 1.0);
        let pd = PartitionedData::new(vec![c(0.0, 0.0)], vec![h(c(0.0, 0.0))], vec![c(1.0, 0.0)], vec![h(c(1.0, 0.0))]).unwrap();
        let p = build_pencil(&pd).unwrap();
        let svd = svd_augmented(&p).unwrap();
        let m = reduce(&p, &svd, Truncation::Order(1)).unwrap();
        for s in [c(0.0, 0.0), c(2.0, 1.0), c(-3.0, 0.5)] {
            let got = crate::rom::eval_tf(&m, s).unwrap();
            assert!((got - h(s)).norm() < 1e-14 * h(s).norm());
        }
    }

    #[test]
    fn tolerance_picks_order() {
        let svd = SvdReport::<f64> {
            sigma_row: vec![],
            sigma_col: vec![2.0, 1.0, 1e-3, 1e-11, 1e-14],
            y: Mat::zeros(5, 5),
            x: Mat::zeros(5, 5),
        };
        assert_eq!(Truncation::Tol(1e-10).resolve(&svd).unwrap(), 3);
        assert_eq!(Truncation::Tol(1e-2).resolve(&svd).unwrap(), 2);
        assert!(Truncation::Order(6).resolve(&svd).is_err());
        assert!(Truncation::Order(0).resolve(&svd).is_err());
    }
}
