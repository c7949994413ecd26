//! Domain types shared by every module: walk parameters, configurations,
//! the experiment schedule and reproducible random streams.

use std::f64::consts::E;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates;

/// Jump rates of a single walk: right at rate `p`, left at rate `q = 1 - p`.
///
/// Only `0 < p < 1/2` is accepted, so the drift `-v = p - q` points toward
/// the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkParams {
    p: f64,
    q: f64,
    v: f64,
}

impl WalkParams {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::InvalidParams(format!("p must be finite, got {p}")));
        }
        if p <= 0.0 {
            return Err(Error::InvalidParams(format!("p > 0 required, got {p}")));
        }
        if p >= 0.5 {
            return Err(Error::InvalidParams(format!(
                "q > p violated (p = {p}): no drift toward the origin"
            )));
        }
        let q = 1.0 - p;
        Ok(Self { p, q, v: q - p })
    }

    /// Rate of a +1 step.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Rate of a -1 step.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Drift magnitude `q - p`.
    pub fn v(&self) -> f64 {
        self.v
    }
}

/// Positions of the `N` Fleming-Viot walks. Every position is at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    positions: Vec<i64>,
}

impl Configuration {
    pub fn new(positions: Vec<i64>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::invalid(format!(
                "n_walks >= 2 required, got {}",
                positions.len()
            )));
        }
        if let Some(bad) = positions.iter().find(|&&x| x < 1) {
            return Err(Error::invalid(format!("positions must be >= 1, got {bad}")));
        }
        Ok(Self { positions })
    }

    /// `n` walks stacked on one site.
    pub fn all_at(n: usize, position: i64) -> Result<Self> {
        Self::new(vec![position; n])
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    /// Position of the rightmost walk.
    pub fn max(&self) -> i64 {
        *self.positions.iter().max().expect("n >= 2")
    }

    pub fn into_positions(self) -> Vec<i64> {
        self.positions
    }

    pub(crate) fn from_raw(positions: Vec<i64>) -> Self {
        debug_assert!(positions.len() >= 2 && positions.iter().all(|&x| x >= 1));
        Self { positions }
    }
}

/// Experiment constants derived from `T = A log N`.
///
/// `kappa = min(1 - 2/e, Itilde(v/2) - log N / T, 1 - q - log N / T)`,
/// `L = e T` and `delta0 = kappa / (4e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_walks: usize,
    pub big_a: f64,
    pub t_horizon: f64,
    pub l_threshold: f64,
    pub kappa: f64,
    pub delta0: f64,
}

/// Default margin by which every term of kappa must exceed zero.
pub const DEFAULT_MARGIN: f64 = 0.01;

impl Schedule {
    /// The three terms of kappa for a given `A`; `log N / T = 1 / A`.
    pub fn kappa_terms(params: &WalkParams, big_a: f64) -> [f64; 3] {
        let inv_a = 1.0 / big_a;
        let it_half = rates::rate_i_tilde(params, params.v() / 2.0).value.as_f64();
        [1.0 - 2.0 / E, it_half - inv_a, 1.0 - params.q() - inv_a]
    }

    /// Schedule for an explicit `A`. Rejects `A` for which kappa is not
    /// positive.
    pub fn with_big_a(params: &WalkParams, n_walks: usize, big_a: f64) -> Result<Self> {
        check_n_walks(n_walks)?;
        if !(big_a.is_finite() && big_a > 0.0) {
            return Err(Error::invalid(format!("big_a must be positive, got {big_a}")));
        }
        let kappa = min3(Self::kappa_terms(params, big_a));
        if kappa <= 0.0 {
            return Err(Error::invalid(format!(
                "kappa = {kappa} <= 0 for A = {big_a}; increase A"
            )));
        }
        Ok(Self::assemble(n_walks, big_a, kappa))
    }

    /// Smallest `A` for which all three terms of kappa strictly exceed
    /// `margin`.
    pub fn minimal(params: &WalkParams, n_walks: usize, margin: f64) -> Result<Self> {
        check_n_walks(n_walks)?;
        if !(margin.is_finite() && margin > 0.0) {
            return Err(Error::invalid(format!("margin must be positive, got {margin}")));
        }
        let first = 1.0 - 2.0 / E;
        let it_half = rates::rate_i_tilde(params, params.v() / 2.0).value.as_f64();
        let gap_rate = it_half - margin;
        let gap_clock = 1.0 - params.q() - margin;
        if first <= margin || gap_rate <= 0.0 || gap_clock <= 0.0 || !gap_rate.is_finite() {
            return Err(Error::invalid(format!(
                "no A makes every kappa term exceed margin {margin} \
                 (1-2/e = {first}, Itilde(v/2) = {it_half}, 1-q = {})",
                1.0 - params.q()
            )));
        }
        let mut big_a = (1.0 / gap_rate).max(1.0 / gap_clock);
        // the infimum itself gives kappa == margin; step up to strict excess
        for _ in 0..256 {
            let terms = Self::kappa_terms(params, big_a);
            if terms.iter().all(|&t| t > margin) {
                return Ok(Self::assemble(n_walks, big_a, min3(terms)));
            }
            big_a = big_a.next_up();
        }
        Err(Error::invalid("schedule search did not settle on a valid A"))
    }

    fn assemble(n_walks: usize, big_a: f64, kappa: f64) -> Self {
        let t_horizon = big_a * (n_walks as f64).ln();
        Self {
            n_walks,
            big_a,
            t_horizon,
            l_threshold: E * t_horizon,
            kappa,
            delta0: kappa / (4.0 * E),
        }
    }

    /// `4 exp(-kappa T)`, the bad-set probability bound.
    pub fn bad_set_bound(&self) -> f64 {
        4.0 * (-self.kappa * self.t_horizon).exp()
    }
}

/// Same as [`Schedule::minimal`].
pub fn make_schedule(params: &WalkParams, n_walks: usize, margin: f64) -> Result<Schedule> {
    Schedule::minimal(params, n_walks, margin)
}

pub fn validate_params(p: f64) -> Result<WalkParams> {
    WalkParams::new(p)
}

fn check_n_walks(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("n_walks >= 2 required, got {n}")));
    }
    Ok(())
}

fn min3(t: [f64; 3]) -> f64 {
    t[0].min(t[1]).min(t[2])
}

/// A reproducible random stream: `(seed, stream_id)` always yields the same
/// ChaCha8 sequence, and distinct stream ids give independent sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream for replica `index` of an experiment rooted at `self`.
    pub fn replica(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: self.stream_id.wrapping_add(index),
        }
    }

    /// An unrelated family of streams keyed by `tag`, used when one replica
    /// needs several independent sources (clocks vs. increments, say).
    pub fn fork(&self, tag: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))),
            stream_id: self.stream_id,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn params_from_p() {
        let w = WalkParams::new(0.3).unwrap();
        assert_eq!(w.q(), 0.7);
        assert!((w.v() - 0.4).abs() < 1e-15);
        let w = WalkParams::new(0.499).unwrap();
        assert!((w.q() - 0.501).abs() < 1e-15);
        assert!((w.v() - 0.002).abs() < 1e-14);
    }

    #[test]
    fn params_rejected() {
        let err = WalkParams::new(0.5).unwrap_err();
        assert!(err.to_string().contains("q > p violated"));
        assert!(WalkParams::new(0.0).is_err());
        assert!(WalkParams::new(-0.1).is_err());
        assert!(WalkParams::new(0.7).is_err());
        assert!(WalkParams::new(f64::NAN).is_err());
        assert!(WalkParams::new(f64::INFINITY).is_err());
    }

    #[test]
    fn configuration_invariants() {
        assert!(Configuration::new(vec![1]).is_err());
        assert!(Configuration::new(vec![1, 0]).is_err());
        let c = Configuration::new(vec![3, 1, 7]).unwrap();
        assert_eq!(c.n(), 3);
        assert_eq!(c.max(), 7);
    }

    // A_min and Itilde(v/2) frozen from an mpmath computation (40 digits) that
    // maximises lambda*x - Lambda(lambda) by root-finding on the derivative.
    const ITILDE_HALF_V_P03: f64 = 0.022_329_346_802_909_094;
    const A_MIN_P03_MARGIN001: f64 = 81.107_297_571_032;

    #[test]
    fn minimal_schedule_p03() {
        let w = WalkParams::new(0.3).unwrap();
        let s = make_schedule(&w, 100, 0.01).unwrap();
        assert!((s.big_a - A_MIN_P03_MARGIN001).abs() < 1e-8, "A = {}", s.big_a);
        assert!(s.kappa > 0.01);
        assert!((s.kappa - 0.01).abs() < 1e-12);
        let terms = Schedule::kappa_terms(&w, s.big_a);
        assert!((terms[0] - (1.0 - 2.0 / E)).abs() < 1e-15);
        assert!((terms[1] - (ITILDE_HALF_V_P03 - 1.0 / s.big_a)).abs() < 1e-12);
        assert!((terms[2] - (0.3 - 1.0 / s.big_a)).abs() < 1e-12);
        assert!(terms[2] > terms[1]);
        assert!((s.t_horizon - s.big_a * 100f64.ln()).abs() < 1e-9);
        assert!((s.l_threshold - E * s.t_horizon).abs() < 1e-9);
        assert!((s.delta0 - s.kappa / (4.0 * E)).abs() < 1e-15);
    }

    #[test]
    fn schedule_rejects_small_n() {
        let w = WalkParams::new(0.3).unwrap();
        let err = make_schedule(&w, 1, 0.01).unwrap_err();
        assert!(err.to_string().contains("n_walks >= 2"));
        assert!(make_schedule(&w, 10, 0.0).is_err());
        assert!(make_schedule(&w, 10, 0.3).is_err());
    }

    #[test]
    fn with_big_a_rejects_nonpositive_kappa() {
        let w = WalkParams::new(0.3).unwrap();
        assert!(Schedule::with_big_a(&w, 10, 4.0).is_err());
        let s = Schedule::with_big_a(&w, 10, 200.0).unwrap();
        assert!((s.kappa - (ITILDE_HALF_V_P03 - 1.0 / 200.0)).abs() < 1e-12);
    }

    #[test]
    fn kappa_never_exceeds_first_term() {
        for &p in &[0.01, 0.05, 0.2, 0.3, 0.45] {
            let w = WalkParams::new(p).unwrap();
            for &a in &[10.0, 100.0, 1e4, 1e8] {
                let k = min3(Schedule::kappa_terms(&w, a));
                assert!(k <= 1.0 - 2.0 / E);
            }
        }
    }

    #[test]
    fn streams_reproduce_and_differ() {
        let s = RngStream::new(42, 3);
        let a: Vec<u64> = (0..8).map(|_| 0).scan(s.rng(), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..8).map(|_| 0).scan(s.rng(), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        let c: Vec<u64> = (0..8).map(|_| 0).scan(s.replica(1).rng(), |r, _| Some(r.random())).collect();
        assert_ne!(a, c);
        let d: Vec<u64> = (0..8).map(|_| 0).scan(s.fork(1).rng(), |r, _| Some(r.random())).collect();
        assert_ne!(a, d);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn p_plus_q_is_one(p in 1e-6f64..0.4999) {
                let w = WalkParams::new(p).unwrap();
                prop_assert!((w.p() + w.q() - 1.0).abs() <= f64::EPSILON);
                prop_assert_eq!(w.v(), w.q() - w.p());
            }

            #[test]
            fn schedule_monotone_in_margin(p in 0.05f64..0.45, m1 in 0.001f64..0.01, dm in 0.0f64..0.005) {
                let w = WalkParams::new(p).unwrap();
                let a = Schedule::minimal(&w, 50, m1);
                let b = Schedule::minimal(&w, 50, m1 + dm);
                if let (Ok(a), Ok(b)) = (a, b) {
                    prop_assert!(b.big_a >= a.big_a);
                }
            }
        }
    }
}
