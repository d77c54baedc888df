//! Finite-difference reference for the beam transfer function.
//!
//! The Laplace-domain beam equation `(EI + rho d s) W'''' + rho s^2 W = 0` is
//! discretized on a uniform grid with the five-point stencil for `W''''`, solved in
//! the equivalent split form `W'' = V`, `(EI + rho d s) V'' + rho s^2 W = f` so that
//! the system condition grows as `N^2` rather than `N^4`. Hinged ends are imposed
//! through ghost nodes (`W_{-1} = -W_1`, `W_{N+1} = -W_{N-1}`, i.e. `V = 0` there),
//! and the shaker enters as a point force closing the force balance
//! `(m s^2 + kappa) W(l0) = -EI [W'''] + U0`.
//!
//! Off-grid positions are handled with linear hat weights on the two enclosing
//! nodes: the point force is spread with them, `W(l0)` and the sensor curvature
//! are interpolated with them. On-grid positions reduce to a single node.

use num_complex::Complex64;

use super::BeamParams;
use crate::error::{Error, Result};
use crate::kernels::PIVOT_THRESHOLD;

/// Curvature at the sensor for a unit shaker force, from a banded solve on
/// `n_cells` uniform cells. Converges as `n_cells^-2`.
pub fn oracle_fd(s: Complex64, p: &BeamParams, n_cells: usize) -> Result<Complex64> {
    p.validate()?;
    if n_cells < 100 {
        return Err(Error::InvalidParameter {
            field: "n_cells",
            reason: format!("at least 100 cells required, got {n_cells}"),
        });
    }
    let h = p.length / n_cells as f64;
    let shaker = HatWeights::new(p.shaker_position / h, n_cells);
    let sensor = HatWeights::new(p.sensor_position / h, n_cells);

    let ei = p.flexural_rigidity();
    let stiffness = ei + p.linear_density * p.damping * s;
    let inertia = p.linear_density * s * s * h * h / stiffness;
    let point_spring = (p.shaker_mass * s * s + p.spring_stiffness) * h / ei;

    // unknowns interleaved as (W_i, V_i) for nodes 1 .. N-1; W_0 = V_0 = W_N = V_N = 0
    let w_at = |node: usize| 2 * (node - 1);
    let v_at = |node: usize| 2 * (node - 1) + 1;
    let one = Complex64::new(1.0, 0.0);
    let mut band = BandSystem::new(2 * (n_cells - 1), 3, 3);
    for node in 1..n_cells {
        let (rw, rv) = (w_at(node), v_at(node));
        // W_{i-1} - 2 W_i + W_{i+1} - h^2 V_i = 0
        band.add(rw, rw, -2.0 * one);
        band.add(rw, rv, Complex64::from(-h * h));
        // V_{i-1} - 2 V_i + V_{i+1} + inertia W_i = load
        band.add(rv, rv, -2.0 * one);
        band.add(rv, rw, inertia);
        if node > 1 {
            band.add(rw, w_at(node - 1), one);
            band.add(rv, v_at(node - 1), one);
        }
        if node + 1 < n_cells {
            band.add(rw, w_at(node + 1), one);
            band.add(rv, v_at(node + 1), one);
        }
    }
    for (a, wa) in shaker.interior() {
        for (b, wb) in shaker.interior() {
            band.add(v_at(a), w_at(b), point_spring * wa * wb);
        }
        band.rhs[v_at(a)] = Complex64::from(wa * h / ei);
    }
    let x = band.solve()?;
    Ok(sensor
        .interior()
        .map(|(node, weight)| x[v_at(node)] * weight)
        .sum())
}

/// Linear interpolation weights of a position `xi` (in cells) on its two enclosing nodes.
struct HatWeights {
    left: usize,
    theta: f64,
    n_cells: usize,
}

impl HatWeights {
    fn new(xi: f64, n_cells: usize) -> Self {
        let left = (xi.floor() as usize).min(n_cells - 1);
        Self {
            left,
            theta: xi - left as f64,
            n_cells,
        }
    }

    fn nodes(&self) -> impl Iterator<Item = (usize, f64)> {
        [(self.left, 1.0 - self.theta), (self.left + 1, self.theta)]
            .into_iter()
            .filter(|&(_, w)| w != 0.0)
    }

    /// Nodes carrying an unknown (hinged ends excluded).
    fn interior(&self) -> impl Iterator<Item = (usize, f64)> {
        let n_cells = self.n_cells;
        self.nodes().filter(move |&(node, _)| node > 0 && node < n_cells)
    }
}

/// Banded linear system with partial pivoting; rows keep `kl` extra
/// superdiagonals for pivoting fill-in.
struct BandSystem {
    n: usize,
    kl: usize,
    width: usize,
    data: Vec<Complex64>,
    rhs: Vec<Complex64>,
}

impl BandSystem {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            width,
            data: vec![Complex64::new(0.0, 0.0); n * width],
            rhs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    // column j of row i lives at slot j + kl - i
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j + self.kl - i < self.width);
        i * self.width + j + self.kl - i
    }

    fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[self.slot(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    fn last_col(&self, i: usize) -> usize {
        (i + self.width - 1 - self.kl).min(self.n - 1)
    }

    fn solve(mut self) -> Result<Vec<Complex64>> {
        let n = self.n;
        let kl = self.kl;
        let scale = self.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let threshold = PIVOT_THRESHOLD * scale;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let (p, best) = (k..=last_row)
                .map(|i| (i, self.get(i, k).norm()))
                .fold((k, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            if best < threshold || best == 0.0 {
                return Err(Error::SingularMatrix {
                    pivot: best / scale,
                    threshold: PIVOT_THRESHOLD,
                });
            }
            let hi = self.last_col(k);
            if p != k {
                for j in k..=hi {
                    let a = self.get(k, j);
                    let b = if j <= self.last_col(p) { self.get(p, j) } else { Complex64::new(0.0, 0.0) };
                    self.set(k, j, b);
                    if j <= self.last_col(p) {
                        self.set(p, j, a);
                    }
                }
                self.rhs.swap(k, p);
            }
            let pivot = self.get(k, k);
            for i in (k + 1)..=last_row {
                let factor = self.get(i, k) / pivot;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                self.set(i, k, Complex64::new(0.0, 0.0));
                for j in (k + 1)..=hi.min(self.last_col(i)) {
                    let v = self.get(k, j);
                    self.add(i, j, -factor * v);
                }
                let r = self.rhs[k];
                self.rhs[i] -= factor * r;
            }
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut acc = self.rhs[i];
            for j in (i + 1)..=self.last_col(i) {
                acc -= self.get(i, j) * x[j];
            }
            x[i] = acc / self.get(i, i);
        }
        Ok(x)
    }
}
