use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for `H(conj s) = conj H(s)` when both nodes are supplied.
pub const CONJUGATE_TOLERANCE: f64 = 1e-8;

/// Ordered samples `(s_k, H(s_k))` with pairwise distinct nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyDataSet {
    nodes: Vec<Complex64>,
    values: Vec<Complex64>,
}

impl FrequencyDataSet {
    pub fn new(nodes: Vec<Complex64>, values: Vec<Complex64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidData(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if let Some(k) = nodes.iter().position(|z| !finite(z)) {
            return Err(Error::InvalidData(format!("node {k} is not finite")));
        }
        if let Some(k) = values.iter().position(|z| !finite(z)) {
            return Err(Error::InvalidData(format!("value {k} is not finite")));
        }
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| {
            nodes[a]
                .re
                .total_cmp(&nodes[b].re)
                .then(nodes[a].im.total_cmp(&nodes[b].im))
        });
        for pair in order.windows(2) {
            if nodes[pair[0]] == nodes[pair[1]] {
                return Err(Error::InvalidData(format!(
                    "nodes {} and {} coincide at {}",
                    pair[0], pair[1], nodes[pair[0]]
                )));
            }
        }
        Ok(Self { nodes, values })
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.nodes.iter().copied().zip(self.values.iter().copied())
    }

    /// Same nodes, new values.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.nodes.clone(), values)
    }
}

/// Adds `(conj s, conj h)` right after every non-real sample `(s, h)`, so that
/// a model fitted to the result has real coefficients.
///
/// A conjugate partner already present in the input is moved next to its
/// partner after checking consistency. A real node is its own partner, so its
/// value is replaced by the real part.
pub fn conjugate_close(data: &FrequencyDataSet) -> Result<FrequencyDataSet> {
    let n = data.len();
    let mut position = std::collections::HashMap::with_capacity(n);
    for (k, s) in data.nodes.iter().enumerate() {
        position.insert((s.re.to_bits(), s.im.to_bits()), k);
    }
    let mut used = vec![false; n];
    let mut nodes = Vec::with_capacity(2 * n);
    let mut values = Vec::with_capacity(2 * n);
    for k in 0..n {
        if used[k] {
            continue;
        }
        used[k] = true;
        let (s, h) = (data.nodes[k], data.values[k]);
        nodes.push(s);
        if s.im == 0.0 {
            values.push(Complex64::new(h.re, 0.0));
            continue;
        }
        values.push(h);
        let sc = s.conj();
        let partner = position.get(&(sc.re.to_bits(), sc.im.to_bits())).copied();
        let hc = match partner {
            Some(j) => {
                used[j] = true;
                let given = data.values[j];
                let mismatch = (given - h.conj()).norm() / h.norm().max(f64::MIN_POSITIVE);
                if mismatch > CONJUGATE_TOLERANCE {
                    return Err(Error::InconsistentConjugate {
                        node: sc.to_string(),
                        mismatch,
                    });
                }
                given
            }
            None => h.conj(),
        };
        nodes.push(sc);
        values.push(hc);
    }
    FrequencyDataSet::new(nodes, values)
}

/// How samples are split between the left (row) and right (column) data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionScheme {
    /// Interlaced: odd positions left, even positions right.
    #[default]
    Alternate,
    /// First half left, second half right.
    HalfHalf,
}

/// Left data `(mu_i, v_i)` and right data `(lambda_j, w_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedData {
    pub mu: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub lambda: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

impl PartitionedData {
    pub fn new(
        mu: Vec<Complex64>,
        v: Vec<Complex64>,
        lambda: Vec<Complex64>,
        w: Vec<Complex64>,
    ) -> Result<Self> {
        if mu.len() != v.len() || lambda.len() != w.len() {
            return Err(Error::InvalidData(
                "left/right node and value counts differ".into(),
            ));
        }
        if mu.is_empty() || lambda.is_empty() {
            return Err(Error::InvalidData(
                "both left and right data must be nonempty".into(),
            ));
        }
        for (i, m) in mu.iter().enumerate() {
            if let Some(j) = lambda.iter().position(|l| l == m) {
                return Err(Error::NodeCollision { left: i, right: j });
            }
        }
        // distinctness within each side
        FrequencyDataSet::new(mu.clone(), v.clone())?;
        FrequencyDataSet::new(lambda.clone(), w.clone())?;
        Ok(Self { mu, v, lambda, w })
    }
}

/// Groups adjacent `(s, conj s)` entries so that a pair never straddles the split.
fn sample_units(nodes: &[Complex64]) -> Vec<std::ops::Range<usize>> {
    let mut units = Vec::new();
    let mut k = 0;
    while k < nodes.len() {
        let paired = nodes[k].im != 0.0 && k + 1 < nodes.len() && nodes[k + 1] == nodes[k].conj();
        let len = if paired { 2 } else { 1 };
        units.push(k..k + len);
        k += len;
    }
    units
}

/// Splits samples into left and right data. Adjacent conjugate pairs are kept
/// together and alternate as a unit.
pub fn partition(data: &FrequencyDataSet, scheme: PartitionScheme) -> Result<PartitionedData> {
    if data.len() < 2 {
        return Err(Error::InvalidData(format!(
            "partitioning needs at least 2 samples, got {}",
            data.len()
        )));
    }
    let units = sample_units(data.nodes());
    if units.len() < 2 {
        return Err(Error::InvalidData(
            "a single conjugate pair cannot be split into left and right data".into(),
        ));
    }
    let left_half = units.len().div_ceil(2);
    let (mut mu, mut v, mut lambda, mut w) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (u, range) in units.into_iter().enumerate() {
        let left = match scheme {
            PartitionScheme::Alternate => u % 2 == 0,
            PartitionScheme::HalfHalf => u < left_half,
        };
        for k in range {
            if left {
                mu.push(data.nodes[k]);
                v.push(data.values[k]);
            } else {
                lambda.push(data.nodes[k]);
                w.push(data.values[k]);
            }
        }
    }
    PartitionedData::new(mu, v, lambda, w)
}
