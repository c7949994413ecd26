//! `fvlab` command line.
//!
//! Each subcommand writes `<name>.csv` and `<name>.json` under `--out` and
//! prints the manifest. Exit status is 0 on success, 1 when a checked bound
//! fails and 2 on usage errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{self, qsd, scaling};
use crate::branching;
use crate::coloring;
use crate::config::{self, ExperimentConfig};
use crate::error::{Error, Result};
use crate::model::{RngStream, Schedule, WalkParams, DEFAULT_MARGIN};
use crate::output::{self, ExperimentManifest};
use crate::rates;
use crate::replicas;
use crate::sim::{self, Simulator};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fvlab", version, about = "Fleming-Viot drifted random walks")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,

    /// `key = value` file supplying p, n_walks, big_a or margin, and seed.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct ModelArgs {
    /// Rate of a right step, in (0, 1/2).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Clone, Default)]
struct ScheduleArgs {
    #[arg(long)]
    n_walks: Option<usize>,
    /// `T = A log N`.
    #[arg(long, conflicts_with = "margin")]
    big_a: Option<f64>,
    /// Smallest A with every kappa term above this margin.
    #[arg(long)]
    margin: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Table of I, Itilde and the maximiser over a grid.
    Rates {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.0)]
        x_min: f64,
        #[arg(long, default_value_t = 1.5)]
        x_max: f64,
        #[arg(long, default_value_t = 16)]
        steps: usize,
    },
    /// Paths of the rightmost walk.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Explicit horizon instead of the schedule's T.
        #[arg(long, conflicts_with_all = ["big_a", "margin"])]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// `all-at:SITE` or `file:PATH`; SITE may be a multiple of L.
        #[arg(long, default_value = "all-at:1")]
        init: String,
    },
    /// Tail of the branching embedding's maximal displacement.
    Branching {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 5)]
        n_types: usize,
        /// Defaults to the smallest T with (1 - q) T - log N > margin T.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = 1000)]
        replicas: usize,
        #[arg(long, default_value = "1,2,3")]
        chi_grid: String,
    },
    /// Bad-set frequencies against 4 exp(-kappa T).
    BadSet {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long, default_value_t = 1000)]
        replicas: usize,
        #[arg(long, default_value = "all-at:3L")]
        init: String,
    },
    /// Drift of exp(delta max) over one step of length T.
    FosterCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Defaults to delta0 / 2.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value = "1,L,3L,6L,10L")]
        start_grid: String,
        #[arg(long, default_value_t = 1000)]
        replicas: usize,
    },
    /// Stationary maximum across a grid of N.
    Scaling {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "10,50,200")]
        n_grid: String,
        /// Defaults to delta0 / 2.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = scaling::DEFAULT_BURN_IN)]
        burn_in: f64,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
    },
    /// Truncated quasi-stationary distribution and distance to the
    /// empirical measure.
    Qsd {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 64)]
        truncation: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Empty for the oracle alone.
        #[arg(long, default_value = "")]
        n_grid: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = scaling::DEFAULT_BURN_IN)]
        burn_in: f64,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Rates { .. } => "rates",
            Command::Simulate { .. } => "simulate",
            Command::Branching { .. } => "branching",
            Command::BadSet { .. } => "bad-set",
            Command::FosterCheck { .. } => "foster-check",
            Command::Scaling { .. } => "scaling",
            Command::Qsd { .. } => "qsd",
        }
    }
}

struct Ctx {
    out: PathBuf,
    file: Option<ExperimentConfig>,
}

impl Ctx {
    fn params(&self, m: &ModelArgs) -> Result<WalkParams> {
        let p = m.p.or(self.file.as_ref().map(|c| c.p)).unwrap_or(0.3);
        WalkParams::new(p)
    }

    fn seed(&self, m: &ModelArgs) -> Result<u64> {
        m.seed
            .or(self.file.as_ref().map(|c| c.seed))
            .ok_or_else(|| Error::invalid("--seed is required"))
    }

    fn schedule(&self, params: &WalkParams, s: &ScheduleArgs) -> Result<Schedule> {
        let file = self.file.as_ref();
        let n = s.n_walks.or(file.map(|c| c.n_walks)).unwrap_or(10);
        let from_flags = s.big_a.is_some() || s.margin.is_some();
        let big_a = if from_flags { s.big_a } else { file.and_then(|c| c.big_a) };
        let margin = if from_flags { s.margin } else { file.and_then(|c| c.margin) };
        match big_a {
            Some(a) => Schedule::with_big_a(params, n, a),
            None => Schedule::minimal(params, n, margin.unwrap_or(DEFAULT_MARGIN)),
        }
    }

    fn path(&self, name: &str, ext: &str) -> PathBuf {
        self.out.join(format!("{name}.{ext}"))
    }
}

struct Finished {
    passed: bool,
    seed: Option<u64>,
    parameters: serde_json::Value,
    summary: serde_json::Value,
    csv: Vec<PathBuf>,
}

/// Run the command line; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(n) = replicas::thread_cap_from_env() {
        // fails harmlessly if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            eprintln!("fvlab: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_FAILED
            }
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let file = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let ctx = Ctx { out: cli.out, file };
    let name = cli.command.name();
    let started = Instant::now();
    let done = match cli.command {
        Command::Rates { model, x_min, x_max, steps } => cmd_rates(&ctx, &model, x_min, x_max, steps)?,
        Command::Simulate { model, schedule, horizon, replicas, init } => {
            cmd_simulate(&ctx, &model, &schedule, horizon, replicas, &init)?
        }
        Command::Branching { model, n_types, horizon, margin, replicas, chi_grid } => {
            cmd_branching(&ctx, &model, n_types, horizon, margin, replicas, &chi_grid)?
        }
        Command::BadSet { model, schedule, replicas, init } => cmd_bad_set(&ctx, &model, &schedule, replicas, &init)?,
        Command::FosterCheck { model, schedule, delta, start_grid, replicas } => {
            cmd_foster(&ctx, &model, &schedule, delta, &start_grid, replicas)?
        }
        Command::Scaling { model, n_grid, delta, samples, burn_in, margin } => {
            cmd_scaling(&ctx, &model, &n_grid, delta, samples, burn_in, margin)?
        }
        Command::Qsd { model, truncation, tol, n_grid, samples, burn_in, margin } => {
            cmd_qsd(&ctx, &model, truncation, tol, &n_grid, samples, burn_in, margin)?
        }
    };
    let mut manifest = ExperimentManifest::new(name, done.parameters, done.seed);
    manifest.wall_seconds = started.elapsed().as_secs_f64();
    manifest.outputs = done.csv.iter().map(|p| p.display().to_string()).collect();
    let json_path = ctx.path(name, "json");
    output::write_json(
        &json_path,
        &json!({ "manifest": manifest, "passed": done.passed, "summary": done.summary }),
    )?;
    println!("{}", serde_json::to_string(&manifest)?);
    println!("{name}: {}", if done.passed { "ok" } else { "FAILED" });
    Ok(done.passed)
}

fn write_rows<T: Serialize>(ctx: &Ctx, name: &str, rows: &[T]) -> Result<PathBuf> {
    let path = ctx.path(name, "csv");
    output::write_csv(&path, rows)?;
    Ok(path)
}

fn cmd_rates(ctx: &Ctx, m: &ModelArgs, x_min: f64, x_max: f64, steps: usize) -> Result<Finished> {
    let params = ctx.params(m)?;
    let rows = rates::rate_table(&params, x_min, x_max, steps)?;
    let top = params.v() + 1.0;
    let edge_i = rates::rate_i(&params, top).value.as_f64();
    let edge_it = rates::rate_i_tilde(&params, top).value.as_f64();
    let identities = (edge_i - (1.0 / params.p()).ln()).abs() <= 1e-10 && (edge_it - params.q()).abs() <= 1e-12;
    let max_gap = rows
        .iter()
        .filter(|r| r.lambda_star.is_some())
        .map(|r| (r.rate_i - rates::rate_i_numeric(&params, r.x).1).abs())
        .fold(0.0, f64::max);
    let csv = write_rows(ctx, "rates", &rows)?;
    Ok(Finished {
        passed: identities && max_gap <= 1e-10,
        seed: None,
        parameters: json!({ "p": params.p(), "x_min": x_min, "x_max": x_max, "steps": steps }),
        summary: json!({ "edge_rate": edge_i, "edge_rate_tilde": edge_it, "max_closed_numeric_gap": max_gap }),
        csv: vec![csv],
    })
}

#[derive(Serialize)]
struct MaxPathRow {
    replica: usize,
    time: f64,
    max_position: i64,
}

fn cmd_simulate(
    ctx: &Ctx,
    m: &ModelArgs,
    s: &ScheduleArgs,
    horizon: Option<f64>,
    replicas: usize,
    init: &str,
) -> Result<Finished> {
    let params = ctx.params(m)?;
    let seed = ctx.seed(m)?;
    let n = s.n_walks.or(ctx.file.as_ref().map(|c| c.n_walks)).unwrap_or(10);
    let big_a = s.big_a.or(if s.margin.is_some() { None } else { ctx.file.as_ref().and_then(|c| c.big_a) });
    // a bare path needs only T = A log N, not a positive kappa
    let (schedule, horizon) = match (horizon, big_a) {
        (Some(h), _) if h > 0.0 && h.is_finite() => (None, h),
        (Some(h), _) => return Err(Error::invalid(format!("horizon > 0 required, got {h}"))),
        (None, Some(a)) if a > 0.0 && a.is_finite() => (None, a * (n as f64).ln()),
        (None, Some(a)) => return Err(Error::invalid(format!("big_a must be positive, got {a}"))),
        (None, None) => {
            let sch = ctx.schedule(&params, s)?;
            (Some(sch), sch.t_horizon)
        }
    };
    if n < 2 {
        return Err(Error::invalid("n_walks >= 2 required"));
    }
    let l = schedule.map_or(std::f64::consts::E * horizon, |s| s.l_threshold);
    let initial = config::parse_init(init, n, l)?;
    if replicas == 0 {
        return Err(Error::invalid("replicas >= 1 required"));
    }
    let runs = replicas::run(replicas, RngStream::new(seed, 0), |_, st| {
        let mut sim = Simulator::new(initial.clone(), params, st);
        let mut path = vec![(0.0, sim.max())];
        while let Some(e) = sim.next_event_before(horizon) {
            if sim.max() != path.last().expect("non-empty").1 {
                path.push((e.time, sim.max()));
            }
        }
        (path, sim.event_count())
    });
    let rows: Vec<MaxPathRow> = runs
        .iter()
        .enumerate()
        .flat_map(|(r, (path, _))| path.iter().map(move |&(time, max_position)| MaxPathRow { replica: r, time, max_position }))
        .collect();
    let events: Vec<u64> = runs.iter().map(|r| r.1).collect();
    let mean_events = events.iter().sum::<u64>() as f64 / replicas as f64;
    let csv = write_rows(ctx, "simulate", &rows)?;
    Ok(Finished {
        passed: true,
        seed: Some(seed),
        parameters: json!({
            "p": params.p(), "n_walks": n, "horizon": horizon, "schedule": schedule,
            "replicas": replicas, "init": init,
        }),
        summary: json!({
            "event_counts": events,
            "mean_events": mean_events,
            "expected_events": n as f64 * horizon,
            "final_max": runs.iter().map(|r| r.0.last().expect("non-empty").1).collect::<Vec<_>>(),
        }),
        csv: vec![csv],
    })
}

fn cmd_branching(
    ctx: &Ctx,
    m: &ModelArgs,
    n_types: usize,
    horizon: Option<f64>,
    margin: f64,
    replicas: usize,
    chi_grid: &str,
) -> Result<Finished> {
    let params = ctx.params(m)?;
    let seed = ctx.seed(m)?;
    let horizon = match horizon {
        Some(h) => h,
        None => branching::lemma_horizon(&params, n_types, margin)?,
    };
    let chi: Vec<f64> = config::parse_list(chi_grid)?;
    if chi.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::invalid("chi values must be >= 0"));
    }
    let rep = branching::check_tail_lemma(n_types, params, horizon, &chi, replicas, RngStream::new(seed, 0))?;
    let csv = write_rows(ctx, "branching", &rep.rows)?;
    Ok(Finished {
        passed: rep.passed() && rep.displacement_within_jumps,
        seed: Some(seed),
        parameters: json!({
            "p": params.p(), "n_types": n_types, "horizon": horizon, "replicas": replicas, "chi_grid": chi,
        }),
        summary: serde_json::to_value(&rep)?,
        csv: vec![csv],
    })
}

#[derive(Serialize)]
struct EventCsvRow<'a> {
    event: &'a str,
    frequency: f64,
    ci_low: f64,
    ci_high: f64,
    bound: f64,
    replicas: u64,
    count: u64,
}

fn event_row(r: &coloring::EventRow) -> EventCsvRow<'_> {
    EventCsvRow {
        event: &r.event,
        frequency: r.proportion.frequency,
        ci_low: r.proportion.ci_low,
        ci_high: r.proportion.ci_high,
        bound: r.bound,
        replicas: r.proportion.trials,
        count: r.proportion.successes,
    }
}

fn cmd_bad_set(ctx: &Ctx, m: &ModelArgs, s: &ScheduleArgs, replicas: usize, init: &str) -> Result<Finished> {
    let params = ctx.params(m)?;
    let seed = ctx.seed(m)?;
    let schedule = ctx.schedule(&params, s)?;
    let initial = config::parse_init(init, schedule.n_walks, schedule.l_threshold)?;
    let est = coloring::estimate_bad_probability(&initial, params, &schedule, replicas, RngStream::new(seed, 0))?;
    let mut rows: Vec<EventCsvRow> = est.events.iter().map(event_row).collect();
    rows.push(event_row(&est.union));
    let csv = write_rows(ctx, "bad_set", &rows)?;
    let bound_ok = if est.vacuous { est.per_event_holds() } else { est.union.holds() };
    Ok(Finished {
        passed: bound_ok && est.coupling_violations == 0 && est.good_event_violations == 0,
        seed: Some(seed),
        parameters: json!({ "p": params.p(), "schedule": schedule, "replicas": replicas, "init": init }),
        summary: serde_json::to_value(&est)?,
        csv: vec![csv],
    })
}

#[derive(Serialize)]
struct DriftCsvRow {
    start_max: i64,
    region: &'static str,
    count: u64,
    drift_mean: f64,
    drift_variance: f64,
    drift_ci_low: f64,
    drift_ci_high: f64,
    k_bound: Option<f64>,
    moment_mean: f64,
    moment_variance: f64,
    moment_ci_high: f64,
    moment_bound: f64,
    deep: bool,
    holds: bool,
}

fn cmd_foster(
    ctx: &Ctx,
    m: &ModelArgs,
    s: &ScheduleArgs,
    delta: Option<f64>,
    start_grid: &str,
    replicas: usize,
) -> Result<Finished> {
    let params = ctx.params(m)?;
    let seed = ctx.seed(m)?;
    let schedule = ctx.schedule(&params, s)?;
    let delta = delta.unwrap_or(schedule.delta0 / 2.0);
    let grid = analysis::parse_start_grid(start_grid, schedule.l_threshold)?;
    let rep = analysis::check_foster_drift(params, &schedule, delta, &grid, replicas, RngStream::new(seed, 0))?;
    let rows: Vec<DriftCsvRow> = rep
        .rows
        .iter()
        .map(|r| DriftCsvRow {
            start_max: r.start_max,
            region: r.region.as_str(),
            count: r.drift.count,
            drift_mean: r.drift.mean,
            drift_variance: r.drift.variance,
            drift_ci_low: r.drift.ci_low,
            drift_ci_high: r.drift.ci_high,
            k_bound: r.k_bound,
            moment_mean: r.moment.mean,
            moment_variance: r.moment.variance,
            moment_ci_high: r.moment.ci_high,
            moment_bound: r.moment_bound,
            deep: r.deep,
            holds: r.holds(),
        })
        .collect();
    let csv = write_rows(ctx, "foster", &rows)?;
    Ok(Finished {
        passed: rep.passed(),
        seed: Some(seed),
        parameters: json!({
            "p": params.p(), "schedule": schedule, "delta": delta, "start_grid": grid, "replicas": replicas,
        }),
        summary: serde_json::to_value(&rep)?,
        csv: vec![csv],
    })
}

#[derive(Serialize)]
struct ScalingCsvRow {
    n_walks: usize,
    samples: usize,
    t_horizon: f64,
    q10: f64,
    q25: f64,
    q50: f64,
    q75: f64,
    q90: f64,
    exp_moment_mean: f64,
    exp_moment_variance: f64,
    log_moment: f64,
}

fn cmd_scaling(
    ctx: &Ctx,
    m: &ModelArgs,
    n_grid: &str,
    delta: Option<f64>,
    samples: usize,
    burn_in: f64,
    margin: f64,
) -> Result<Finished> {
    let params = ctx.params(m)?;
    let seed = ctx.seed(m)?;
    let grid: Vec<usize> = config::parse_list(n_grid)?;
    let first = Schedule::minimal(&params, *grid.first().ok_or_else(|| Error::invalid("empty N grid"))?, margin)?;
    let delta = delta.unwrap_or(first.delta0 / 2.0);
    let rep = scaling::stationary_scaling(params, &grid, delta, samples, margin, burn_in, RngStream::new(seed, 0))?;
    let rows: Vec<ScalingCsvRow> = rep
        .rows
        .iter()
        .map(|r| ScalingCsvRow {
            n_walks: r.n_walks,
            samples: r.samples,
            t_horizon: r.schedule.t_horizon,
            q10: r.quantiles[0],
            q25: r.quantiles[1],
            q50: r.quantiles[2],
            q75: r.quantiles[3],
            q90: r.quantiles[4],
            exp_moment_mean: r.exp_moment.mean,
            exp_moment_variance: r.exp_moment.variance,
            log_moment: r.log_moment,
        })
        .collect();
    let csv = write_rows(ctx, "scaling", &rows)?;
    Ok(Finished {
        passed: rep.quantiles_ordered() && rep.growth_within_cap(),
        seed: Some(seed),
        parameters: json!({
            "p": params.p(), "n_grid": grid, "delta": delta, "samples": samples,
            "burn_in_multiplier": burn_in, "margin": margin,
        }),
        summary: json!({
            "report": rep,
            "median_increasing": rep.median_increasing(),
        }),
        csv: vec![csv],
    })
}

#[derive(Serialize)]
struct MassRow {
    site: i64,
    mass: f64,
}

#[derive(Serialize)]
struct TvRow {
    n_walks: usize,
    samples: usize,
    tv_distance: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_qsd(
    ctx: &Ctx,
    m: &ModelArgs,
    truncation: usize,
    tol: f64,
    n_grid: &str,
    samples: usize,
    burn_in: f64,
    margin: f64,
) -> Result<Finished> {
    let params = ctx.params(m)?;
    let grid: Vec<usize> = if n_grid.trim().is_empty() { Vec::new() } else { config::parse_list(n_grid)? };
    let seed = if grid.is_empty() { m.seed } else { Some(ctx.seed(m)?) };
    let oracle = qsd::compute_qsd_oracle(&params, truncation, tol)?;
    let support = oracle.effective_support(1e-15);
    let mass: Vec<MassRow> = (1..=support).map(|s| MassRow { site: s, mass: oracle.mass(s) }).collect();
    let mut csv = vec![write_rows(ctx, "qsd", &mass)?];
    let mut tvs = Vec::new();
    for (k, &n) in grid.iter().enumerate() {
        let schedule = Schedule::minimal(&params, n, margin)?;
        let stream = RngStream::new(seed.expect("seed checked"), 0).replica(k as u64);
        let sample = sim::sample_stationary(params, &schedule, burn_in, samples, None, stream)?;
        let cmp = qsd::compare_empirical_to_qsd(&sim::empirical_measure(&sample)?, &oracle);
        tvs.push(TvRow { n_walks: n, samples, tv_distance: cmp.tv_distance });
    }
    if !grid.is_empty() {
        csv.push(write_rows(ctx, "qsd_tv", &tvs)?);
    }
    let tv_values: Vec<f64> = tvs.iter().map(|t| t.tv_distance).collect();
    let consistent = oracle.residual < 1e-10 && oracle.truncation_change < 10.0 * tol && oracle.flux_imbalance(&params) < 1e-8;
    Ok(Finished {
        passed: consistent,
        seed,
        parameters: json!({
            "p": params.p(), "truncation": truncation, "tol": tol, "n_grid": grid,
            "samples": samples, "burn_in_multiplier": burn_in, "margin": margin,
        }),
        summary: json!({
            "final_truncation": oracle.truncation,
            "decay_rate": oracle.decay_rate,
            "residual": oracle.residual,
            "truncation_change": oracle.truncation_change,
            "flux_imbalance": oracle.flux_imbalance(&params),
            "mean": oracle.mean(),
            "mode": oracle.mode(),
            "tv_distances": tv_values,
            "tv_nonincreasing": qsd::tv_nonincreasing(&tv_values),
        }),
        csv,
    })
}

/// Digest of every CSV a subcommand wrote into `out`.
pub fn csv_digests(out: &Path) -> Result<Vec<(String, String)>> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(out)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|p| {
            let d = output::file_digest(&p)?;
            Ok((p.file_name().expect("file").to_string_lossy().into_owned(), d))
        })
        .collect()
}
