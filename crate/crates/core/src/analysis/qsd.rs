//! Quasi-stationary distribution of one walk killed at the origin, truncated
//! to `{1, ..., M}`.
//!
//! The uniformised sub-Markov kernel moves up with probability `p` and down
//! with probability `q`; a down move from 1 kills, an up move from `M` is
//! suppressed. The QSD is the normalised left principal eigenvector `mu`.
//! Writing `mu_i = r^i w_i` with `r = sqrt(p/q)` turns the kernel into a
//! symmetric tridiagonal matrix `S` with off-diagonal `sqrt(pq)`, zero
//! diagonal and `S[M][M] = p`. Its spectrum lies below `2 sqrt(pq)`, so `w` is
//! found by inverse iteration with that shift.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::WalkParams;
use crate::sim::EmpiricalMeasure;

pub const MAX_TRUNCATION: usize = 1 << 22;
const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QsdOracle {
    pub truncation: usize,
    /// `distribution[i]` is the mass of site `i + 1`.
    pub distribution: Vec<f64>,
    /// `1 - rho` with `rho` the principal eigenvalue of the kernel.
    pub decay_rate: f64,
    /// Total variation between the fixed point and one step of evolution
    /// conditioned on survival.
    pub residual: f64,
    /// Total variation against the previous truncation in the doubling run.
    pub truncation_change: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl QsdOracle {
    pub fn mass(&self, site: i64) -> f64 {
        if site < 1 {
            return 0.0;
        }
        self.distribution.get(site as usize - 1).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.distribution.iter().enumerate().map(|(i, m)| (i + 1) as f64 * m).sum()
    }

    pub fn mode(&self) -> i64 {
        let (i, _) = self
            .distribution
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        i as i64 + 1
    }

    /// `|decay_rate - q mu(1)|`: the eigenvalue gap must equal the killing
    /// flux through site 1.
    pub fn flux_imbalance(&self, params: &WalkParams) -> f64 {
        (self.decay_rate - params.q() * self.distribution[0]).abs()
    }

    /// Smallest site beyond which the oracle carries less than `eps` mass.
    pub fn effective_support(&self, eps: f64) -> i64 {
        let mut tail = 0.0;
        for (i, m) in self.distribution.iter().enumerate().rev() {
            tail += m;
            if tail >= eps {
                return i as i64 + 1;
            }
        }
        1
    }
}

/// One step of the truncated kernel acting on the left.
fn apply_left(params: &WalkParams, mu: &[f64]) -> Vec<f64> {
    let m = mu.len();
    let (p, q) = (params.p(), params.q());
    let mut nu = vec![0.0; m];
    for i in 0..m {
        if i + 1 < m {
            nu[i + 1] += p * mu[i];
        } else {
            nu[i] += p * mu[i];
        }
        if i > 0 {
            nu[i - 1] += q * mu[i];
        }
    }
    nu
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

fn normalised(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Fixed-point residual of a candidate distribution.
pub fn fixed_point_residual(params: &WalkParams, mu: &[f64]) -> f64 {
    tv(&normalised(apply_left(params, mu)), mu)
}

/// `(sigma I - S)` factorised as `L D L^T` for repeated solves.
struct ShiftedSolver {
    off: f64,
    d: Vec<f64>,
}

impl ShiftedSolver {
    fn new(params: &WalkParams, m: usize) -> Result<Self> {
        let s = (params.p() * params.q()).sqrt();
        let sigma = 2.0 * s;
        let mut d = Vec::with_capacity(m);
        for i in 0..m {
            let diag = if i + 1 == m { sigma - params.p() } else { sigma };
            let piv = if i == 0 { diag } else { diag - s * s / d[i - 1] };
            if !(piv > 0.0) {
                return Err(Error::invalid(format!("shifted matrix not positive definite at row {i}")));
            }
            d.push(piv);
        }
        Ok(Self { off: -s, d })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = b.len();
        let mut y = b.to_vec();
        for i in 1..m {
            y[i] -= self.off / self.d[i - 1] * y[i - 1];
        }
        let mut x = vec![0.0; m];
        x[m - 1] = y[m - 1] / self.d[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = (y[i] - self.off * x[i + 1]) / self.d[i];
        }
        x
    }
}

fn to_mass(params: &WalkParams, w: &[f64]) -> Vec<f64> {
    let r = (params.p() / params.q()).sqrt();
    let mut scale = 1.0;
    let mu = w
        .iter()
        .map(|x| {
            scale *= r;
            x.abs() * scale
        })
        .collect();
    normalised(mu)
}

struct Solve {
    mu: Vec<f64>,
    rho: f64,
    iterations: usize,
}

/// Inverse iteration at one truncation until successive iterates differ by
/// less than `tol / 100` in total variation.
fn solve_truncated(params: &WalkParams, m: usize, tol: f64) -> Result<Solve> {
    let solver = ShiftedSolver::new(params, m)?;
    let scale = m as f64 / 3.0;
    let mut w: Vec<f64> = (1..=m).map(|i| i as f64 * (-(i as f64) / scale).exp()).collect();
    let mut mu = to_mass(params, &w);
    let mut change = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let mut next = solver.solve(&w);
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        next.iter_mut().for_each(|x| *x = x.abs() / norm);
        let next_mu = to_mass(params, &next);
        change = tv(&next_mu, &mu);
        w = next;
        mu = next_mu;
        if change < tol * 1e-2 {
            let s = (params.p() * params.q()).sqrt();
            let mut sw = 0.0;
            for i in 0..m {
                let mut y = 0.0;
                if i > 0 {
                    y += s * w[i - 1];
                }
                if i + 1 < m {
                    y += s * w[i + 1];
                } else {
                    y += params.p() * w[i];
                }
                sw += w[i] * y;
            }
            return Ok(Solve { mu, rho: sw, iterations: it });
        }
    }
    Err(Error::NonConvergence { iterations: MAX_ITERATIONS, residual: change })
}

/// QSD oracle with truncation doubling: starting at `truncation`, double
/// until the distribution moves by less than `10 tol` in total variation.
pub fn compute_qsd_oracle(params: &WalkParams, truncation: usize, tol: f64) -> Result<QsdOracle> {
    if truncation < 10 {
        return Err(Error::invalid(format!("truncation >= 10 required, got {truncation}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(format!("tol must lie in (0, 1), got {tol}")));
    }
    let mut m = truncation;
    let mut prev = solve_truncated(params, m, tol)?;
    let mut iterations = prev.iterations;
    loop {
        let next_m = m * 2;
        if next_m > MAX_TRUNCATION {
            return Err(Error::NonConvergence { iterations, residual: f64::NAN });
        }
        let next = solve_truncated(params, next_m, tol)?;
        iterations += next.iterations;
        let change = tv(&next.mu, &prev.mu);
        prev = next;
        m = next_m;
        if change < 10.0 * tol {
            let residual = fixed_point_residual(params, &prev.mu);
            return Ok(QsdOracle {
                truncation: m,
                decay_rate: 1.0 - prev.rho,
                residual,
                truncation_change: change,
                iterations,
                converged: true,
                distribution: prev.mu,
            });
        }
    }
}

/// Plain power iteration on the uniformised kernel, renormalising after each
/// step. Slow (the gap closes like `1/M^2`); for cross-checks at small `M`.
pub fn power_iteration_qsd(params: &WalkParams, truncation: usize, tol: f64, max_iterations: usize) -> Result<Vec<f64>> {
    if truncation < 2 {
        return Err(Error::invalid("truncation >= 2 required"));
    }
    let mut mu = vec![1.0 / truncation as f64; truncation];
    for _ in 0..max_iterations {
        let next = normalised(apply_left(params, &mu));
        let change = tv(&next, &mu);
        mu = next;
        if change < tol {
            return Ok(mu);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iterations,
        residual: fixed_point_residual(params, &mu),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QsdPoint {
    pub site: i64,
    pub empirical: f64,
    pub oracle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QsdComparison {
    pub tv_distance: f64,
    pub table: Vec<QsdPoint>,
}

/// Total variation between an empirical occupation measure and the oracle,
/// with a per-site table over the union of the empirical support and the
/// oracle's `1e-12` effective support.
pub fn compare_empirical_to_qsd(empirical: &EmpiricalMeasure, oracle: &QsdOracle) -> QsdComparison {
    let mut sites: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for s in 1..=oracle.effective_support(1e-12) {
        sites.insert(s, (0.0, oracle.mass(s)));
    }
    for (&s, &m) in &empirical.mass {
        sites.entry(s).or_insert((0.0, oracle.mass(s))).0 = m;
    }
    let mut diff = 0.0;
    let mut oracle_seen = 0.0;
    let table: Vec<QsdPoint> = sites
        .into_iter()
        .map(|(site, (e, o))| {
            diff += (e - o).abs();
            oracle_seen += o;
            QsdPoint { site, empirical: e, oracle: o }
        })
        .collect();
    // oracle mass outside the table has no empirical counterpart
    diff += (1.0 - oracle_seen).max(0.0);
    QsdComparison { tv_distance: (0.5 * diff).min(1.0), table }
}

/// Whether a sequence of TV distances over an increasing `N` grid never
/// increases.
pub fn tv_nonincreasing(tvs: &[f64]) -> bool {
    tvs.windows(2).all(|w| w[1] <= w[0])
}
