//! Large-deviation quantities for the centered increment `X + v` of one walk
//! and exact Poisson tails.
//!
//! `Lambda(l) = log(p e^l + q e^-l) + l v` is the log-MGF of the centered
//! increment, `I(x) = sup_{l > 0} (l x - Lambda(l))` its rate function and
//! `Itilde(x) = 1 - exp(-I(x))` the rate that governs a Poisson number of
//! increments.
//!
//! Because the increment is bounded by `v + 1`, `I` is finite on
//! `(-inf, v + 1]` and infinite beyond. On `(0, v + 1)` the supremum is
//! attained at
//!
//! ```text
//! l* = 1/2 log( q (1 + u) / (p (1 - u)) ),   u = x - v,
//! ```
//!
//! and equals the Bernoulli relative entropy `KL(a || p)` with `a = (1+u)/2`.
//! For `x <= 0` the supremum over `l > 0` is approached as `l -> 0` and is 0.

use std::f64::consts::E;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::WalkParams;

/// A nonnegative value that may be `+inf`, kept out of float arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinite => None,
        }
    }

    /// Lossy conversion for reporting.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFunctionValue {
    pub x: f64,
    pub value: ExtReal,
    /// Optimal `lambda > 0`, when the supremum is attained.
    pub maximizer: Option<f64>,
}

/// `log(p e^l + q e^-l) + l v`, stable for large `|l|`.
pub fn lambda_fn(params: &WalkParams, lam: f64) -> f64 {
    let (p, q) = (params.p(), params.q());
    let log_mgf = if lam >= 0.0 {
        lam + (p + q * (-2.0 * lam).exp()).ln()
    } else {
        -lam + (p * (2.0 * lam).exp() + q).ln()
    };
    log_mgf + lam * params.v()
}

/// `lambda* ` for `0 < x < v + 1`.
fn stationary_point(params: &WalkParams, x: f64) -> f64 {
    let u = x - params.v();
    0.5 * ((params.q() * (1.0 + u)) / (params.p() * (1.0 - u))).ln()
}

pub fn rate_i(params: &WalkParams, x: f64) -> RateFunctionValue {
    let top = params.v() + 1.0;
    // v = q - p carries up to one ulp of rounding; snap x onto the edge
    let at_top = (x - top).abs() <= 4.0 * f64::EPSILON * top;
    if x > top && !at_top {
        return RateFunctionValue { x, value: ExtReal::Infinite, maximizer: None };
    }
    if x <= 0.0 {
        return RateFunctionValue { x, value: ExtReal::Finite(0.0), maximizer: None };
    }
    if at_top {
        // only the all-right-steps path remains: I = log(1 / p) = log(1 / (1 - q))
        return RateFunctionValue {
            x,
            value: ExtReal::Finite(-params.p().ln()),
            maximizer: None,
        };
    }
    let u = x - params.v();
    let a = 0.5 * (1.0 + u);
    let value = xlogy_ratio(a, params.p()) + xlogy_ratio(1.0 - a, params.q());
    RateFunctionValue {
        x,
        value: ExtReal::Finite(value.max(0.0)),
        maximizer: Some(stationary_point(params, x)),
    }
}

fn xlogy_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}

pub fn rate_i_tilde(params: &WalkParams, x: f64) -> RateFunctionValue {
    let base = rate_i(params, x);
    let value = match base.value {
        ExtReal::Infinite => 1.0,
        ExtReal::Finite(i) => -(-i).exp_m1(),
    };
    RateFunctionValue { value: ExtReal::Finite(value), ..base }
}

/// Upper end of the bracket used by [`rate_i_numeric`].
pub const NUMERIC_LAMBDA_MAX: f64 = 40.0;

/// `sup_{0 < l <= 40} (l x - Lambda(l))` by golden-section search. Independent
/// of the closed form; only meaningful for `x <= v + 1`.
pub fn rate_i_numeric(params: &WalkParams, x: f64) -> (f64, f64) {
    let g = |l: f64| l * x - lambda_fn(params, l);
    golden_section_max(g, 0.0, NUMERIC_LAMBDA_MAX, 1e-12)
}

/// Maximiser and maximum of a unimodal function on `[lo, hi]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    // the supremum may sit on the bracket edge
    [(mid, f(mid)), (lo, f(lo)), (hi, f(hi))]
        .into_iter()
        .fold((mid, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Exact tail probability next to its Chernoff bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub exact: f64,
    pub bound: f64,
}

impl TailBound {
    pub fn holds(&self) -> bool {
        self.exact <= self.bound
    }
}

/// `P(N_t >= e t + chi)` for `N_t ~ Poisson(t)`, with bound `exp(-t - chi)`.
pub fn poisson_tail_upper(t: f64, chi: f64) -> Result<TailBound> {
    check_tail_args(t, chi)?;
    let threshold = E * t + chi;
    let k0 = threshold.ceil() as u64;
    Ok(TailBound {
        exact: poisson_sf(t, k0),
        bound: (-t - chi).exp(),
    })
}

/// `P(N_t <= t / e - chi)`, with bound `exp(-(1 - 2/e) t - chi)`.
pub fn poisson_tail_lower(t: f64, chi: f64) -> Result<TailBound> {
    check_tail_args(t, chi)?;
    let threshold = t / E - chi;
    let exact = if threshold < 0.0 {
        0.0
    } else {
        poisson_cdf(t, threshold.floor() as u64)
    };
    Ok(TailBound {
        exact,
        bound: (-(1.0 - 2.0 / E) * t - chi).exp(),
    })
}

fn check_tail_args(t: f64, chi: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid(format!("t > 0 required, got {t}")));
    }
    if !(chi >= 0.0) {
        return Err(Error::invalid(format!("chi >= 0 required, got {chi}")));
    }
    Ok(())
}

fn ln_pmf(t: f64, k: u64) -> f64 {
    let kf = k as f64;
    -t + kf * t.ln() - ln_gamma(kf + 1.0)
}

/// Sums `exp(ln_terms)` with max-shift.
fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// `P(N <= k)`.
pub fn poisson_cdf(t: f64, k: u64) -> f64 {
    if k as f64 > t {
        return 1.0 - poisson_sf(t, k + 1);
    }
    let terms: Vec<f64> = (0..=k).map(|j| ln_pmf(t, j)).collect();
    log_sum_exp(&terms).exp().min(1.0)
}

/// `P(N >= k0)`.
pub fn poisson_sf(t: f64, k0: u64) -> f64 {
    if k0 == 0 {
        return 1.0;
    }
    if (k0 as f64) <= t {
        return 1.0 - poisson_cdf(t, k0 - 1);
    }
    // beyond the mode the terms decay at least geometrically
    let stop = (t + 20.0 * t.sqrt()).ceil() as u64;
    let mut terms = Vec::new();
    let mut k = k0;
    loop {
        let lt = ln_pmf(t, k);
        terms.push(lt);
        if k >= stop && lt - terms[0] < -50.0 {
            break;
        }
        if lt < -745.0 && k > stop {
            break;
        }
        k += 1;
    }
    log_sum_exp(&terms).exp().min(1.0)
}

/// One row of the `rates` table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateRow {
    pub x: f64,
    pub rate_i: f64,
    pub rate_i_tilde: f64,
    pub lambda_star: Option<f64>,
}

/// `steps` evenly spaced points from `x_min` to `x_max` inclusive.
pub fn rate_table(params: &WalkParams, x_min: f64, x_max: f64, steps: usize) -> Result<Vec<RateRow>> {
    if steps == 0 || !(x_min.is_finite() && x_max.is_finite()) || x_max < x_min {
        return Err(Error::invalid("rate grid needs steps >= 1 and finite x_min <= x_max"));
    }
    Ok((0..steps)
        .map(|k| {
            let x = if steps == 1 {
                x_min
            } else {
                x_min + (x_max - x_min) * k as f64 / (steps - 1) as f64
            };
            let i = rate_i(params, x);
            RateRow {
                x,
                rate_i: i.value.as_f64(),
                rate_i_tilde: rate_i_tilde(params, x).value.as_f64(),
                lambda_star: i.maximizer,
            }
        })
        .collect())
}
