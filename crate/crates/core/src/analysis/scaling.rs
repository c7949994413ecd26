//! Stationary law of the rightmost walk across a grid of `N`.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{RngStream, Schedule, WalkParams};
use crate::sim::sample_stationary;
use crate::stats::{linear_fit, quantile_sorted, LinearFit, MeanAccumulator, MeanSummary};

pub const QUANTILE_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Default burn-in, in units of `T`.
pub const DEFAULT_BURN_IN: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n_walks: usize,
    pub schedule: Schedule,
    pub samples: usize,
    /// Quantiles of the stationary maximum at [`QUANTILE_LEVELS`].
    pub quantiles: Vec<f64>,
    pub median: f64,
    /// Sample of `exp(delta max)`.
    pub exp_moment: MeanSummary,
    /// `(1/delta) log E[exp(delta max)]`.
    pub log_moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub delta: f64,
    pub rows: Vec<ScalingRow>,
    /// Median maximum against `log N`; needs two or more grid points.
    pub median_fit: Option<LinearFit>,
    /// Log-moment against `log N`.
    pub log_moment_fit: Option<LinearFit>,
    pub slope_cap: f64,
}

impl ScalingReport {
    pub fn median_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].median > w[0].median)
    }

    /// Quantile curves keep their order at every `N`.
    pub fn quantiles_ordered(&self) -> bool {
        self.rows.iter().all(|r| r.quantiles.windows(2).all(|w| w[0] <= w[1]))
    }

    /// Log-moment grows at most linearly in `log N`, with slope under the cap.
    pub fn growth_within_cap(&self) -> bool {
        self.log_moment_fit.is_none_or(|f| f.slope <= self.slope_cap)
    }
}

/// `4 e A`: a stationary max near the `3L = 3 e A log N` edge of K grows with
/// slope `3eA` in `log N`; the cap leaves one further `eA` of room.
pub fn default_slope_cap(schedule: &Schedule) -> f64 {
    4.0 * E * schedule.big_a
}

/// One stationary chain per `N`, schedules from [`Schedule::minimal`].
pub fn stationary_scaling(
    params: WalkParams,
    n_grid: &[usize],
    delta: f64,
    samples_per_n: usize,
    margin: f64,
    burn_in_multiplier: f64,
    stream: RngStream,
) -> Result<ScalingReport> {
    if n_grid.is_empty() {
        return Err(Error::invalid("empty N grid"));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for (k, &n) in n_grid.iter().enumerate() {
        let schedule = Schedule::minimal(&params, n, margin)?;
        if !(delta > 0.0 && delta < schedule.delta0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, {}) for N = {n}, got {delta}",
                schedule.delta0
            )));
        }
        let sample = sample_stationary(params, &schedule, burn_in_multiplier, samples_per_n, None, stream.replica(k as u64))?;
        let mut maxima: Vec<f64> = sample.maxima().into_iter().map(|m| m as f64).collect();
        maxima.sort_by(f64::total_cmp);
        let quantiles: Vec<f64> = QUANTILE_LEVELS.iter().map(|&l| quantile_sorted(&maxima, l)).collect();
        let exp_moment = maxima.iter().map(|m| (delta * m).exp()).collect::<MeanAccumulator>().summary();
        rows.push(ScalingRow {
            n_walks: n,
            schedule,
            samples: samples_per_n,
            median: quantile_sorted(&maxima, 0.5),
            quantiles,
            log_moment: exp_moment.mean.ln() / delta,
            exp_moment,
        });
    }
    let log_n: Vec<f64> = rows.iter().map(|r| (r.n_walks as f64).ln()).collect();
    let medians: Vec<f64> = rows.iter().map(|r| r.median).collect();
    let moments: Vec<f64> = rows.iter().map(|r| r.log_moment).collect();
    let slope_cap = default_slope_cap(&rows[0].schedule);
    Ok(ScalingReport {
        delta,
        median_fit: linear_fit(&log_n, &medians),
        log_moment_fit: linear_fit(&log_n, &moments),
        slope_cap,
        rows,
    })
}

/// Ratios of `E[exp(delta max)]` between two runs over the same grid.
pub fn replication_ratios(a: &ScalingReport, b: &ScalingReport) -> Vec<f64> {
    a.rows
        .iter()
        .zip(&b.rows)
        .map(|(x, y)| x.exp_moment.mean / y.exp_moment.mean)
        .collect()
}

/// Every ratio inside `[0.8, 1.25]`.
pub fn replication_agrees(ratios: &[f64]) -> bool {
    ratios.iter().all(|r| (0.8..=1.25).contains(r))
}
