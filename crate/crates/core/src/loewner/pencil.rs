use std::f64::consts::FRAC_1_SQRT_2;

use faer::{Mat, MatRef};
use num_complex::Complex64;

use super::PartitionedData;
use crate::error::{Error, Result};
use crate::kernels::{frobenius, Scalar};

/// Relative Frobenius tolerance for the shift identities and Sylvester equations.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Block-diagonal node matrix: `diag(mu)` for complex pencils, with 2x2 real
/// blocks for conjugate pairs after realification.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMatrix<T> {
    blocks: Vec<NodeBlock<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeBlock<T> {
    Single(T),
    Pair([[T; 2]; 2]),
}

impl<T: Scalar> NodeMatrix<T> {
    pub fn diagonal(values: &[T]) -> Self {
        Self {
            blocks: values.iter().map(|&x| NodeBlock::Single(x)).collect(),
        }
    }

    pub fn from_blocks(blocks: Vec<NodeBlock<T>>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[NodeBlock<T>] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b {
                NodeBlock::Single(_) => 1,
                NodeBlock::Pair(_) => 2,
            })
            .sum()
    }

    pub fn to_dense(&self) -> Mat<T> {
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        let mut k = 0;
        for b in &self.blocks {
            match *b {
                NodeBlock::Single(x) => {
                    out[(k, k)] = x;
                    k += 1;
                }
                NodeBlock::Pair(m) => {
                    for (i, row) in m.iter().enumerate() {
                        for (j, &x) in row.iter().enumerate() {
                            out[(k + i, k + j)] = x;
                        }
                    }
                    k += 2;
                }
            }
        }
        out
    }

    /// `self * x`
    pub fn left_mul(&self, x: MatRef<'_, T>) -> Mat<T> {
        let mut out = Mat::zeros(x.nrows(), x.ncols());
        let mut k = 0;
        for b in &self.blocks {
            match *b {
                NodeBlock::Single(d) => {
                    for j in 0..x.ncols() {
                        out[(k, j)] = d * x[(k, j)];
                    }
                    k += 1;
                }
                NodeBlock::Pair(m) => {
                    for j in 0..x.ncols() {
                        let (a, b) = (x[(k, j)], x[(k + 1, j)]);
                        out[(k, j)] = m[0][0] * a + m[0][1] * b;
                        out[(k + 1, j)] = m[1][0] * a + m[1][1] * b;
                    }
                    k += 2;
                }
            }
        }
        out
    }

    /// `x * self`
    pub fn right_mul(&self, x: MatRef<'_, T>) -> Mat<T> {
        let mut out = Mat::zeros(x.nrows(), x.ncols());
        let mut k = 0;
        for b in &self.blocks {
            match *b {
                NodeBlock::Single(d) => {
                    for i in 0..x.nrows() {
                        out[(i, k)] = x[(i, k)] * d;
                    }
                    k += 1;
                }
                NodeBlock::Pair(m) => {
                    for i in 0..x.nrows() {
                        let (a, b) = (x[(i, k)], x[(i, k + 1)]);
                        out[(i, k)] = a * m[0][0] + b * m[1][0];
                        out[(i, k + 1)] = a * m[0][1] + b * m[1][1];
                    }
                    k += 2;
                }
            }
        }
        out
    }

    fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let col = Mat::from_fn(x.len(), 1, |i, _| x[i]);
        let y = self.left_mul(col.as_ref());
        (0..x.len()).map(|i| y[(i, 0)]).collect()
    }

    fn vec_mul(&self, x: &[T]) -> Vec<T> {
        let row = Mat::from_fn(1, x.len(), |_, j| x[j]);
        let y = self.right_mul(row.as_ref());
        (0..x.len()).map(|j| y[(0, j)]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PencilFlavor {
    Complex,
    Realified,
}

/// Loewner matrix `L`, shifted Loewner matrix `Ls`, data vectors `V`, `W`,
/// and the node matrices `M` (left) and `Lambda` (right).
///
/// `ones_left` and `ones_right` are the images of the all-ones vectors under the
/// same transformation as the data, so that
/// `Ls = L Lambda + V ones_right^T = M L + ones_left W` holds in either flavor.
#[derive(Debug, Clone)]
pub struct LoewnerPencil<T> {
    pub l: Mat<T>,
    pub ls: Mat<T>,
    pub v: Vec<T>,
    pub w: Vec<T>,
    pub left_nodes: NodeMatrix<T>,
    pub right_nodes: NodeMatrix<T>,
    pub ones_left: Vec<T>,
    pub ones_right: Vec<T>,
}

impl<T: Scalar> LoewnerPencil<T> {
    pub fn flavor(&self) -> PencilFlavor {
        if <T as Scalar>::IS_REAL {
            PencilFlavor::Realified
        } else {
            PencilFlavor::Complex
        }
    }

    /// `(rows, cols)` of `L`: number of left and right samples.
    pub fn shape(&self) -> (usize, usize) {
        (self.l.nrows(), self.l.ncols())
    }
}

/// Assembles the complex pencil from partitioned data.
pub fn build_pencil(pd: &PartitionedData) -> Result<LoewnerPencil<Complex64>> {
    let (q, k) = (pd.mu.len(), pd.lambda.len());
    let mut l = Mat::<Complex64>::zeros(q, k);
    let mut ls = Mat::<Complex64>::zeros(q, k);
    for j in 0..k {
        let (lam, wj) = (pd.lambda[j], pd.w[j]);
        for i in 0..q {
            let (mu, vi) = (pd.mu[i], pd.v[i]);
            let denom = mu - lam;
            if denom == Complex64::new(0.0, 0.0) {
                return Err(Error::NodeCollision { left: i, right: j });
            }
            l[(i, j)] = (vi - wj) / denom;
            ls[(i, j)] = (mu * vi - lam * wj) / denom;
        }
    }
    let pencil = LoewnerPencil {
        l,
        ls,
        v: pd.v.clone(),
        w: pd.w.clone(),
        left_nodes: NodeMatrix::diagonal(&pd.mu),
        right_nodes: NodeMatrix::diagonal(&pd.lambda),
        ones_left: vec![Complex64::new(1.0, 0.0); q],
        ones_right: vec![Complex64::new(1.0, 0.0); k],
    };
    let diag = verify_pencil(&pencil);
    let worst = diag.shift_right.max(diag.shift_left);
    if !(worst <= IDENTITY_TOLERANCE) {
        return Err(Error::InvalidData(format!(
            "shift identity residual {worst:.3e} exceeds {IDENTITY_TOLERANCE:e}"
        )));
    }
    Ok(pencil)
}

/// Relative Frobenius residuals of the structural identities of a pencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilDiagnostics {
    /// `M L - L Lambda = V 1^T - 1 W`
    pub sylvester_l: f64,
    /// `M Ls - Ls Lambda = M V 1^T - 1 W Lambda`
    pub sylvester_ls: f64,
    /// `Ls = L Lambda + V 1^T`
    pub shift_right: f64,
    /// `Ls = M L + 1 W`
    pub shift_left: f64,
}

impl PencilDiagnostics {
    pub fn max(&self) -> f64 {
        self.sylvester_l
            .max(self.sylvester_ls)
            .max(self.shift_right)
            .max(self.shift_left)
    }
}

fn outer<T: Scalar>(col: &[T], row: &[T]) -> Mat<T> {
    Mat::from_fn(col.len(), row.len(), |i, j| col[i] * row[j])
}

/// `||sum(terms)|| / sum(||terms||)`, zero when every term vanishes.
fn relative_residual<T: Scalar>(terms: &[(f64, &Mat<T>)]) -> f64 {
    let (m, n) = (terms[0].1.nrows(), terms[0].1.ncols());
    let total = Mat::from_fn(m, n, |i, j| {
        terms
            .iter()
            .fold(T::zero(), |acc, (sign, t)| acc + t[(i, j)] * T::from_real(*sign))
    });
    let scale: f64 = terms.iter().map(|(_, t)| frobenius(t.as_ref())).sum();
    let r = frobenius(total.as_ref());
    if r == 0.0 {
        0.0
    } else {
        r / scale
    }
}

pub fn verify_pencil<T: Scalar>(p: &LoewnerPencil<T>) -> PencilDiagnostics {
    let ml = p.left_nodes.left_mul(p.l.as_ref());
    let l_lam = p.right_nodes.right_mul(p.l.as_ref());
    let mls = p.left_nodes.left_mul(p.ls.as_ref());
    let ls_lam = p.right_nodes.right_mul(p.ls.as_ref());
    let v1 = outer(&p.v, &p.ones_right);
    let one_w = outer(&p.ones_left, &p.w);
    let mv1 = outer(&p.left_nodes.mul_vec(&p.v), &p.ones_right);
    let one_wlam = outer(&p.ones_left, &p.right_nodes.vec_mul(&p.w));

    PencilDiagnostics {
        sylvester_l: relative_residual(&[(1.0, &ml), (-1.0, &l_lam), (-1.0, &v1), (1.0, &one_w)]),
        sylvester_ls: relative_residual(&[
            (1.0, &mls),
            (-1.0, &ls_lam),
            (-1.0, &mv1),
            (1.0, &one_wlam),
        ]),
        shift_right: relative_residual(&[(1.0, &p.ls), (-1.0, &l_lam), (-1.0, &v1)]),
        shift_left: relative_residual(&[(1.0, &p.ls), (-1.0, &ml), (-1.0, &one_w)]),
    }
}

/// Tolerance on the imaginary part left after realification.
pub const REALIFY_TOLERANCE: f64 = 1e-10;

/// Index groups of a node list: singletons for real nodes, adjacent `(s, conj s)` pairs.
fn conjugate_groups(nodes: &[Complex64]) -> Vec<(usize, bool)> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < nodes.len() {
        let pair = nodes[k].im != 0.0 && k + 1 < nodes.len() && nodes[k + 1] == nodes[k].conj();
        out.push((k, pair));
        k += if pair { 2 } else { 1 };
    }
    out
}

/// Applies `T*` from the left: for each pair rows `(a, b)` become
/// `((a + b) / sqrt2, -i (a - b) / sqrt2)`.
fn transform_rows(x: &mut Mat<Complex64>, groups: &[(usize, bool)]) {
    let i = Complex64::new(0.0, 1.0);
    for &(k, pair) in groups {
        if !pair {
            continue;
        }
        for j in 0..x.ncols() {
            let (a, b) = (x[(k, j)], x[(k + 1, j)]);
            x[(k, j)] = (a + b) * FRAC_1_SQRT_2;
            x[(k + 1, j)] = -i * (a - b) * FRAC_1_SQRT_2;
        }
    }
}

/// Applies `T` from the right: for each pair columns `(a, b)` become
/// `((a + b) / sqrt2, i (a - b) / sqrt2)`.
fn transform_cols(x: &mut Mat<Complex64>, groups: &[(usize, bool)]) {
    let i = Complex64::new(0.0, 1.0);
    for &(k, pair) in groups {
        if !pair {
            continue;
        }
        for r in 0..x.nrows() {
            let (a, b) = (x[(r, k)], x[(r, k + 1)]);
            x[(r, k)] = (a + b) * FRAC_1_SQRT_2;
            x[(r, k + 1)] = i * (a - b) * FRAC_1_SQRT_2;
        }
    }
}

fn real_part(x: &Mat<Complex64>, residue: &mut f64) -> Mat<f64> {
    let scale = x
        .col_iter()
        .flat_map(|c| c.iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    if scale > 0.0 {
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                *residue = residue.max(x[(i, j)].im.abs() / scale);
            }
        }
    }
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)].re)
}

/// Real block form `T* diag(s, conj s) T = [[Re s, -Im s], [Im s, Re s]]`.
fn real_blocks(nodes: &[Complex64], groups: &[(usize, bool)]) -> NodeMatrix<f64> {
    NodeMatrix::from_blocks(
        groups
            .iter()
            .map(|&(k, pair)| {
                let s = nodes[k];
                if pair {
                    NodeBlock::Pair([[s.re, -s.im], [s.im, s.re]])
                } else {
                    NodeBlock::Single(s.re)
                }
            })
            .collect(),
    )
}

/// Unitary block transform of a conjugate-closed complex pencil into a real one.
///
/// Each adjacent conjugate pair on either side is mixed by
/// `T = [[1, i], [1, -i]] / sqrt2` (rows by `T*`, columns by `T`); real nodes are left
/// untouched. Fails if any imaginary part survives, which happens when a complex
/// node has no adjacent conjugate partner.
pub fn realify(p: &LoewnerPencil<Complex64>) -> Result<LoewnerPencil<f64>> {
    let left_diag = node_values(&p.left_nodes)?;
    let right_diag = node_values(&p.right_nodes)?;
    let lg = conjugate_groups(&left_diag);
    let rg = conjugate_groups(&right_diag);

    let mut residue = 0.0_f64;
    let mut l = p.l.clone();
    let mut ls = p.ls.clone();
    for x in [&mut l, &mut ls] {
        transform_rows(x, &lg);
        transform_cols(x, &rg);
    }
    let mut v = Mat::from_fn(p.v.len(), 1, |i, _| p.v[i]);
    let mut ones_left = Mat::from_fn(p.ones_left.len(), 1, |i, _| p.ones_left[i]);
    transform_rows(&mut v, &lg);
    transform_rows(&mut ones_left, &lg);
    let mut w = Mat::from_fn(1, p.w.len(), |_, j| p.w[j]);
    let mut ones_right = Mat::from_fn(1, p.ones_right.len(), |_, j| p.ones_right[j]);
    transform_cols(&mut w, &rg);
    transform_cols(&mut ones_right, &rg);

    let l = real_part(&l, &mut residue);
    let ls = real_part(&ls, &mut residue);
    let v = real_part(&v, &mut residue);
    let w = real_part(&w, &mut residue);
    let ones_left = real_part(&ones_left, &mut residue);
    let ones_right = real_part(&ones_right, &mut residue);
    if !(residue <= REALIFY_TOLERANCE) {
        return Err(Error::ImaginaryResidue { residue });
    }
    Ok(LoewnerPencil {
        l,
        ls,
        v: v.col(0).iter().copied().collect(),
        w: w.row(0).iter().copied().collect(),
        left_nodes: real_blocks(&left_diag, &lg),
        right_nodes: real_blocks(&right_diag, &rg),
        ones_left: ones_left.col(0).iter().copied().collect(),
        ones_right: ones_right.row(0).iter().copied().collect(),
    })
}

fn node_values(m: &NodeMatrix<Complex64>) -> Result<Vec<Complex64>> {
    m.blocks()
        .iter()
        .map(|b| match b {
            NodeBlock::Single(x) => Ok(*x),
            NodeBlock::Pair(_) => Err(Error::InvalidData(
                "complex pencil must have diagonal node matrices".into(),
            )),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loewner::{conjugate_close, partition, FrequencyDataSet, PartitionScheme};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pencil_from(
        mu: &[Complex64],
        lambda: &[Complex64],
        h: impl Fn(Complex64) -> Complex64,
    ) -> LoewnerPencil<Complex64> {
        let pd = PartitionedData::new(
            mu.to_vec(),
            mu.iter().map(|&s| h(s)).collect(),
            lambda.to_vec(),
            lambda.iter().map(|&s| h(s)).collect(),
        )
        .unwrap();
        build_pencil(&pd).unwrap()
    }

    #[test]
    fn constant_data() {
        let mu = [c(1.0, 0.0), c(3.0, 0.0)];
        let lambda = [c(2.0, 0.0), c(4.0, 0.0)];
        let p = pencil_from(&mu, &lambda, |_| c(2.5, 0.0));
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(p.l[(i, j)], c(0.0, 0.0));
                assert!((p.ls[(i, j)] - c(2.5, 0.0)).norm() < 1e-15);
            }
        }
        let d = verify_pencil(&p);
        assert_eq!(d.sylvester_l, 0.0);
        assert!(d.max() <= IDENTITY_TOLERANCE);
    }

    #[test]
    fn first_order_examples() {
        let p = pencil_from(&[c(0.0, 0.0)], &[c(1.0, 0.0)], |s| 1.0 / (s + 1.0));
        assert!((p.l[(0, 0)] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((p.ls[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);

        let p = pencil_from(&[c(1.0, 0.0)], &[c(2.0, 0.0)], |s| 1.0 / s);
        assert!((p.l[(0, 0)] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!(p.ls[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn corrupted_entry_breaks_sylvester() {
        let mu: Vec<_> = (0..5).map(|k| c(0.0, 1.0 + 2.0 * k as f64)).collect();
        let lambda: Vec<_> = (0..5).map(|k| c(0.0, 2.0 + 2.0 * k as f64)).collect();
        let mut p = pencil_from(&mu, &lambda, |s| 1.0 / (s * s + 0.3 * s + 4.0));
        assert!(verify_pencil(&p).max() <= IDENTITY_TOLERANCE);
        let entry = p.l[(2, 3)];
        p.l[(2, 3)] = entry + c(1.0, 0.0) * entry.norm().max(1.0);
        assert!(verify_pencil(&p).sylvester_l > 1e-3);
    }

    #[test]
    fn realified_pair_block() {
        let s = c(0.0, 1.0);
        let blocks = real_blocks(&[s, s.conj()], &[(0, true)]);
        assert_eq!(blocks.to_dense()[(0, 0)], 0.0);
        assert_eq!(blocks.to_dense()[(0, 1)], -1.0);
        assert_eq!(blocks.to_dense()[(1, 0)], 1.0);

        // the block equals T* diag(s, conj s) T computed densely
        let s = c(-0.7, 2.3);
        let t = Mat::from_fn(2, 2, |i, j| {
            FRAC_1_SQRT_2 * [[c(1.0, 0.0), c(0.0, 1.0)], [c(1.0, 0.0), c(0.0, -1.0)]][i][j]
        });
        let d = Mat::from_fn(2, 2, |i, j| if i != j { c(0.0, 0.0) } else { [s, s.conj()][i] });
        let dense = crate::kernels::adjoint(t.as_ref()) * &d * &t;
        let block = real_blocks(&[s, s.conj()], &[(0, true)]).to_dense();
        for i in 0..2 {
            for j in 0..2 {
                assert!((dense[(i, j)] - c(block[(i, j)], 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn real_node_passes_through() {
        let p = pencil_from(&[c(0.0, 0.0)], &[c(1.0, 0.0)], |s| 1.0 / (s + 1.0));
        let r = realify(&p).unwrap();
        assert_eq!(r.l[(0, 0)], -0.5);
        assert_eq!(r.ls[(0, 0)], 0.5);
        assert_eq!(r.v, vec![1.0]);
        assert_eq!(r.w, vec![0.5]);
    }

    #[test]
    fn realify_preserves_identities() {
        let nodes: Vec<_> = (0..12).map(|k| c(0.0, 0.5 * k as f64)).collect();
        let h = |s: Complex64| (s + 2.0) / (s * s + 0.4 * s + 3.0);
        let data = FrequencyDataSet::new(nodes.clone(), nodes.iter().map(|&s| h(s)).collect()).unwrap();
        let closed = conjugate_close(&data).unwrap();
        let pd = partition(&closed, PartitionScheme::Alternate).unwrap();
        let p = build_pencil(&pd).unwrap();
        let r = realify(&p).unwrap();
        assert_eq!(r.flavor(), PencilFlavor::Realified);
        assert!(verify_pencil(&r).max() <= IDENTITY_TOLERANCE, "{:?}", verify_pencil(&r));
    }

    #[test]
    fn unpaired_complex_node_is_rejected() {
        let p = pencil_from(&[c(0.0, 1.0)], &[c(0.0, 2.0)], |s| 1.0 / (s + 1.0));
        assert!(matches!(realify(&p), Err(Error::ImaginaryResidue { .. })));
    }
}
