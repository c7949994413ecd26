//! Drift of `V(xi) = exp(delta * max xi)` over one skeleton step of length
//! `T`, started from configurations with every walk at the same site.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Configuration, RngStream, Schedule, WalkParams};
use crate::replicas;
use crate::sim::Simulator;
use crate::stats::{MeanAccumulator, MeanSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// `max < 3L`
    K,
    #[serde(rename = "K^c")]
    KComplement,
}

impl Region {
    pub fn classify(start_max: i64, l_threshold: f64) -> Self {
        if (start_max as f64) < 3.0 * l_threshold {
            Region::K
        } else {
            Region::KComplement
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::K => "K",
            Region::KComplement => "K^c",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRow {
    pub start_max: i64,
    pub region: Region,
    /// Sample of `exp(delta M_T) - exp(delta M_0)`.
    pub drift: MeanSummary,
    /// Sample of `exp(delta (M_T - M_0))`.
    pub moment: MeanSummary,
    /// `exp(3 delta L + delta e T)` for starts in K.
    pub k_bound: Option<f64>,
    /// `exp(delta e T) / (1 - delta)`.
    pub moment_bound: f64,
    /// Start deep in K^c (`M_0 >= 6L`) where the drift must be negative.
    pub deep: bool,
}

impl DriftRow {
    pub fn holds(&self) -> bool {
        let moment_ok = self.moment.ci_high <= self.moment_bound;
        let k_ok = self.k_bound.is_none_or(|b| self.drift.ci_high <= b);
        let deep_ok = !self.deep || self.drift.ci_high < 0.0;
        moment_ok && k_ok && deep_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub delta: f64,
    pub schedule: Schedule,
    pub rows: Vec<DriftRow>,
    /// Sign of the mean drift, in increasing start order, turns from
    /// positive to negative at most once and never back.
    pub sign_dichotomy: bool,
}

impl DriftReport {
    pub fn passed(&self) -> bool {
        self.sign_dichotomy && self.rows.iter().all(DriftRow::holds)
    }
}

/// Parse a start grid such as `1,L,3L,6L,10L`. A token `kL` maps to
/// `ceil(k L)`; a bare integer is taken as is.
pub fn parse_start_grid(spec: &str, l_threshold: f64) -> Result<Vec<i64>> {
    spec.split(',')
        .map(|tok| crate::config::parse_site(tok, l_threshold))
        .collect()
}

pub fn check_foster_drift(
    params: WalkParams,
    schedule: &Schedule,
    delta: f64,
    start_grid: &[i64],
    replicas: usize,
    stream: RngStream,
) -> Result<DriftReport> {
    let cap = schedule.delta0.min(0.5);
    if !(delta > 0.0 && delta < cap) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, {cap}), got {delta}"
        )));
    }
    if start_grid.is_empty() || replicas < 2 {
        return Err(Error::invalid("non-empty start grid and >= 2 replicas required"));
    }
    let t = schedule.t_horizon;
    let l = schedule.l_threshold;
    let mut starts = start_grid.to_vec();
    starts.sort_unstable();
    let rows = starts
        .iter()
        .enumerate()
        .map(|(k, &m0)| {
            let initial = Configuration::all_at(schedule.n_walks, m0)?;
            let base = (delta * m0 as f64).exp();
            let ratios = replicas::run(replicas, stream.fork(k as u64), |_, s| {
                let mut sim = Simulator::new(initial.clone(), params, s);
                sim.advance_to(t);
                (delta * (sim.max() - m0) as f64).exp_m1()
            });
            let drift = ratios.iter().map(|r| base * r).collect::<MeanAccumulator>().summary();
            let moment = ratios.iter().map(|r| r + 1.0).collect::<MeanAccumulator>().summary();
            let region = Region::classify(m0, l);
            Ok(DriftRow {
                start_max: m0,
                region,
                drift,
                moment,
                k_bound: (region == Region::K).then(|| (3.0 * delta * l + delta * E * t).exp()),
                moment_bound: (delta * E * t).exp() / (1.0 - delta),
                deep: m0 as f64 >= 6.0 * l,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let signs: Vec<bool> = rows.iter().map(|r| r.drift.mean >= 0.0).collect();
    let sign_dichotomy = signs.windows(2).all(|w| w[0] || !w[1]);
    Ok(DriftReport { delta, schedule: *schedule, rows, sign_dichotomy })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (WalkParams, Schedule) {
        let w = WalkParams::new(0.3).unwrap();
        (w, Schedule::minimal(&w, 4, 0.01).unwrap())
    }

    #[test]
    fn grid_parsing() {
        let g = parse_start_grid("1,L,3L,6L,10L", 2.5).unwrap();
        assert_eq!(g, vec![1, 3, 8, 15, 25]);
        assert!(parse_start_grid("1,xL", 2.5).is_err());
        assert!(parse_start_grid("0", 2.5).is_err());
    }

    #[test]
    fn region_boundary() {
        assert_eq!(Region::classify(29, 10.0), Region::K);
        assert_eq!(Region::classify(30, 10.0), Region::KComplement);
    }

    #[test]
    fn delta_range_enforced() {
        let (w, s) = setup();
        assert!(check_foster_drift(w, &s, s.delta0, &[1], 10, RngStream::new(0, 0)).is_err());
        assert!(check_foster_drift(w, &s, 0.0, &[1], 10, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn tiny_delta_gives_vanishing_drift() {
        let (w, s) = setup();
        let grid = parse_start_grid("1,6L", s.l_threshold).unwrap();
        let rep = check_foster_drift(w, &s, 1e-12, &grid, 50, RngStream::new(1, 0)).unwrap();
        for r in &rep.rows {
            assert!(r.drift.mean.abs() < 1e-8);
        }
    }

    #[test]
    fn deep_start_drifts_down() {
        let (w, s) = setup();
        let grid = parse_start_grid("1,6L", s.l_threshold).unwrap();
        let rep = check_foster_drift(w, &s, s.delta0 / 2.0, &grid, 300, RngStream::new(2, 0)).unwrap();
        assert_eq!(rep.rows[0].region, Region::K);
        assert!(rep.rows[1].deep);
        assert!(rep.passed(), "{rep:?}");
    }
}
