//! `hardball`: simulate elastic-ball systems, verify the monotone
//! functional suite, tabulate collision bounds, search for collision-rich
//! witnesses, and extract dense clusters.
//!
//! Exit codes: 0 success, 1 a verified claim failed, 2 degenerate or
//! invalid input (chained simultaneous collisions, unknown schema, bad
//! flags), 3 event budget exhausted.

mod claims;
mod io;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use hardball::bounds::{
    bfk_mass_bound, bfk_radius_bound, lower_bound_cubic, partition_times, phi_upcrossing_log10,
    thm_nf_bound,
};
use hardball::cluster::dense_cluster_search;
use hardball::dynamics::{normalize_frame, SystemState};
use hardball::engine::{rebuild, simulate, SimOptions, Termination, Trajectory};
use hardball::functionals::{find_t0, normalized_from_state, FullTrajectory};
use hardball::scenario::{line_of_balls, random_admissible, search_max_collisions, DEFAULT_BOX_SCALE};
use hardball::tol::Tolerances;
use hardball::{Error, Result};

use claims::{ClaimOutcome, ClaimParams};

#[derive(Parser)]
#[command(
    name = "hardball",
    about = "Event-driven simulation of equal elastic balls, with verification and bound tables",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its event log and summary.
    Simulate(SimulateArgs),
    /// Check every verified claim against a scenario or an event log.
    Verify(VerifyArgs),
    /// Tabulate the closed-form collision bounds as CSV.
    Bounds(BoundsArgs),
    /// Randomized search for a high-collision configuration.
    Search(SearchArgs),
    /// Extract a dense rho-connected cluster from a simulated run.
    Cluster(ClusterArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// "line-of-balls", "random", a .json state file, or a .jsonl event log.
    #[arg(long, default_value = "random")]
    scenario: String,
    /// Ball count for generators.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Spatial dimension for generators.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Center spacing for line-of-balls.
    #[arg(long, default_value_t = 3.0)]
    spacing: f64,
    /// Box side per n^(1/d) for the random generator.
    #[arg(long, default_value_t = DEFAULT_BOX_SCALE)]
    box_scale: f64,
}

#[derive(Args)]
struct TolArgs {
    /// Contact classification tolerance.
    #[arg(long)]
    tol_contact: Option<f64>,
    /// Permitted construction-time overlap slack.
    #[arg(long)]
    tol_overlap: Option<f64>,
    /// Conservation-drift tolerance.
    #[arg(long)]
    tol_conserve: Option<f64>,
    /// Near-zero cutoff for dot products and discriminants.
    #[arg(long)]
    tol_zero: Option<f64>,
    /// Simultaneity window for chained-collision detection.
    #[arg(long)]
    tol_simultaneous: Option<f64>,
    /// Monotonicity comparison allowance.
    #[arg(long)]
    tol_mono: Option<f64>,
    /// Time-origin bisection tolerance.
    #[arg(long)]
    tol_t0: Option<f64>,
    /// Hard-overlap abort threshold.
    #[arg(long)]
    tol_drift_abort: Option<f64>,
}

impl TolArgs {
    fn tolerances(&self) -> Result<Tolerances> {
        fn set(slot: &mut f64, name: &str, v: Option<f64>) -> Result<()> {
            if let Some(x) = v {
                if !(x > 0.0) || !x.is_finite() {
                    return Err(Error::InvalidInput(format!("--{name} must be positive, got {x}")));
                }
                *slot = x;
            }
            Ok(())
        }
        let mut t = Tolerances::default();
        set(&mut t.contact, "tol-contact", self.tol_contact)?;
        set(&mut t.overlap, "tol-overlap", self.tol_overlap)?;
        set(&mut t.conserve, "tol-conserve", self.tol_conserve)?;
        set(&mut t.zero, "tol-zero", self.tol_zero)?;
        set(&mut t.simultaneous, "tol-simultaneous", self.tol_simultaneous)?;
        set(&mut t.mono, "tol-mono", self.tol_mono)?;
        set(&mut t.t0, "tol-t0", self.tol_t0)?;
        set(&mut t.drift_abort, "tol-drift-abort", self.tol_drift_abort)?;
        Ok(t)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    tol: TolArgs,
    /// Collision budget before the run stops.
    #[arg(long, default_value_t = hardball::tol::DEFAULT_MAX_EVENTS)]
    max_events: usize,
    /// Absolute time bound; omitted means run to the last collision.
    #[arg(long)]
    horizon: Option<f64>,
    /// Directory for events.jsonl and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    tol: TolArgs,
    #[arg(long, default_value_t = hardball::tol::DEFAULT_MAX_EVENTS)]
    max_events: usize,
    /// Upcrossing gap parameter.
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    /// Sample times per trajectory for the monotonicity probes.
    #[arg(long, default_value_t = 40)]
    samples: usize,
    /// Cut times for the cut-trajectory lemmas.
    #[arg(long, default_value_t = 5)]
    cuts: usize,
    /// Random instances to verify (seeds seed..seed+instances).
    #[arg(long, default_value_t = 1)]
    instances: usize,
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Single table row.
    #[arg(long)]
    n: Option<usize>,
    /// Inclusive row range "lo..hi".
    #[arg(long)]
    n_range: Option<String>,
    /// Separation parameter for the phi_delta column.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Upcrossing parameter for the phi_rho column.
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    /// Initial phase-position norm for the T and T* columns.
    #[arg(long, default_value_t = 1.0)]
    x0_norm: f64,
    /// CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Search budget.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Directory for witness.json and search.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    tol: TolArgs,
    #[arg(long, default_value_t = hardball::tol::DEFAULT_MAX_EVENTS)]
    max_events: usize,
    /// Cluster connectivity parameter.
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Search(a) => cmd_search(a),
        Command::Cluster(a) => cmd_cluster(a),
    }
}

enum Source {
    Line,
    Random,
    StateFile(PathBuf),
    LogFile(PathBuf),
}

fn resolve_source(s: &str) -> Result<Source> {
    match s {
        "line-of-balls" | "line" => Ok(Source::Line),
        "random" => Ok(Source::Random),
        p if p.ends_with(".json") => Ok(Source::StateFile(PathBuf::from(p))),
        p if p.ends_with(".jsonl") => Ok(Source::LogFile(PathBuf::from(p))),
        other => Err(Error::InvalidInput(format!(
            "unknown scenario {other:?}: expected line-of-balls, random, a .json state, or a .jsonl log"
        ))),
    }
}

/// Load the initial state named by the scenario flags. Event logs
/// contribute their recorded initial state.
fn load_state(a: &ScenarioArgs) -> Result<(String, SystemState)> {
    match resolve_source(&a.scenario)? {
        Source::Line => {
            let sc = line_of_balls(a.n, a.d, a.spacing)?;
            Ok((sc.name, sc.state))
        }
        Source::Random => {
            let sc = random_admissible(a.n, a.d, a.seed, a.box_scale)?;
            Ok((sc.name, sc.state))
        }
        Source::StateFile(p) => {
            let state = io::parse_state(&io::read_to_string(&p)?)?;
            Ok((p.display().to_string(), state))
        }
        Source::LogFile(p) => {
            let log = io::parse_event_log(&io::read_to_string(&p)?)?;
            Ok((p.display().to_string(), log.initial))
        }
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(p) => io::write_file(p, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn summary_json(name: &str, traj: &Trajectory, state: &SystemState, t0: Option<f64>) -> String {
    format!(
        "{{\"schema\":{},\"kind\":\"hardball-summary\",\"scenario\":{},\"collisions\":{},\"termination\":\"{}\",\"observed_delta\":{},\"x0_norm\":{},\"t0\":{}}}\n",
        io::SCHEMA,
        io::json_str(name),
        traj.collision_count(),
        io::termination_str(traj.termination()),
        traj.observed_delta().map_or("null".into(), io::fmt_f),
        io::fmt_f(state.phase_position().norm()),
        t0.map_or("null".into(), io::fmt_f),
    )
}

fn cmd_simulate(a: SimulateArgs) -> Result<i32> {
    let opts = SimOptions {
        max_events: a.max_events,
        horizon: a.horizon,
        tol: a.tol.tolerances()?,
    };
    let (name, raw) = load_state(&a.scenario)?;
    let state = normalize_frame(&raw)?;
    let traj = simulate(&state, &opts)?;

    // The time origin is reported, not imposed: the log keeps the input
    // clock. An unbracketed search (short horizon) reports null.
    let t0_opts = SimOptions { horizon: None, ..opts.clone() };
    let t0 = FullTrajectory::from_forward(traj.clone(), &t0_opts)
        .and_then(|f| find_t0(&f))
        .ok();

    let summary = summary_json(&name, &traj, &state, t0);
    if let Some(dir) = &a.out {
        io::write_file(&dir.join("events.jsonl"), &io::event_log_text(&traj))?;
        io::write_file(&dir.join("summary.json"), &summary)?;
    }
    print!("{summary}");
    Ok(match traj.termination() {
        Termination::BudgetExhausted => 3,
        _ => 0,
    })
}

fn claim_json(c: &ClaimOutcome) -> String {
    format!(
        "{{\"pass\":{},\"checked\":{},\"worst_excess\":{},\"worst_at\":{},\"flags\":[{}]}}",
        c.pass,
        c.checked,
        io::fmt_or_null(c.worst_excess),
        c.worst_at.map_or("null".into(), io::fmt_f),
        c.flags.iter().map(|f| io::json_str(f)).collect::<Vec<_>>().join(",")
    )
}

fn verify_report(instances: usize, merged: &[ClaimOutcome]) -> String {
    let failing: Vec<String> = merged
        .iter()
        .filter(|c| !c.pass)
        .map(|c| io::json_str(c.id))
        .collect();
    let body: Vec<String> = merged
        .iter()
        .map(|c| format!("{}:{}", io::json_str(c.id), claim_json(c)))
        .collect();
    format!(
        "{{\"schema\":{},\"kind\":\"hardball-verify\",\"instances\":{},\"pass\":{},\"failing\":[{}],\"claims\":{{{}}}}}\n",
        io::SCHEMA,
        instances,
        failing.is_empty(),
        failing.join(","),
        body.join(",")
    )
}

fn worker_count(instances: usize) -> usize {
    let cap = std::env::var("HARDBALL_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&k| k >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.min(instances).max(1)
}

/// Anchor the replayed log's clock at the alpha crossing, so the claim
/// suite's time origin matches the one every claim is stated against.
fn anchored_from_log(path: &Path, opts: &SimOptions) -> Result<FullTrajectory> {
    let log = io::parse_event_log(&io::read_to_string(path)?)?;
    let (forward, warnings) =
        rebuild(log.initial.clone(), log.events.clone(), log.termination, log.horizon)?;
    for w in &warnings {
        eprintln!("log warning: {w}");
    }
    let full = FullTrajectory::from_forward(forward, opts)?;
    let t0 = find_t0(&full)?;
    let initial = SystemState::new(
        log.initial.time() - t0,
        log.initial.dim(),
        log.initial.balls().to_vec(),
    )?;
    let events = log
        .events
        .into_iter()
        .map(|mut e| {
            e.time -= t0;
            e
        })
        .collect();
    let (forward, _) = rebuild(initial, events, log.termination, log.horizon.map(|h| h - t0))?;
    FullTrajectory::from_forward(forward, opts)
}

fn cmd_verify(a: VerifyArgs) -> Result<i32> {
    let opts = SimOptions {
        max_events: a.max_events,
        horizon: None,
        tol: a.tol.tolerances()?,
    };
    let params = ClaimParams { rho: a.rho, samples: a.samples, cuts: a.cuts };
    if !(a.rho > 0.0) || !a.rho.is_finite() {
        return Err(Error::InvalidInput(format!("--rho must be positive, got {}", a.rho)));
    }
    if a.instances == 0 {
        return Err(Error::InvalidInput("--instances must be positive".into()));
    }

    let source = resolve_source(&a.scenario.scenario)?;
    let per_instance: Vec<Vec<ClaimOutcome>> = match source {
        Source::Random => {
            let k = a.instances;
            let slots: Vec<Mutex<Option<Result<Vec<ClaimOutcome>>>>> =
                (0..k).map(|_| Mutex::new(None)).collect();
            let next = AtomicUsize::new(0);
            let sa = &a.scenario;
            std::thread::scope(|scope| {
                for _ in 0..worker_count(k) {
                    scope.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= k {
                            break;
                        }
                        let res = random_admissible(sa.n, sa.d, sa.seed + i as u64, sa.box_scale)
                            .and_then(|sc| normalized_from_state(&sc.state, &opts))
                            .and_then(|(full, _)| claims::run_all(&full, &params));
                        *slots[i].lock().unwrap() = Some(res);
                    });
                }
            });
            slots
                .into_iter()
                .map(|m| m.into_inner().unwrap().expect("worker filled every slot"))
                .collect::<Result<Vec<_>>>()?
        }
        _ if a.instances > 1 => {
            return Err(Error::InvalidInput(
                "--instances > 1 needs the random generator; other sources are single runs".into(),
            ))
        }
        Source::Line => {
            let sc = line_of_balls(a.scenario.n, a.scenario.d, a.scenario.spacing)?;
            let (full, _) = normalized_from_state(&sc.state, &opts)?;
            vec![claims::run_all(&full, &params)?]
        }
        Source::StateFile(p) => {
            let state = io::parse_state(&io::read_to_string(&p)?)?;
            let (full, _) = normalized_from_state(&state, &opts)?;
            vec![claims::run_all(&full, &params)?]
        }
        Source::LogFile(p) => {
            let full = anchored_from_log(&p, &opts)?;
            vec![claims::run_all(&full, &params)?]
        }
    };

    let merged = claims::merge(per_instance);
    let failing: Vec<&str> = merged.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    emit(&a.out, &verify_report(a.instances, &merged))?;
    if failing.is_empty() {
        eprintln!("verify: all {} claims pass over {} instance(s)", merged.len(), a.instances);
        Ok(0)
    } else {
        eprintln!("verify: failing claims: {}", failing.join(", "));
        Ok(1)
    }
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| Error::InvalidInput(format!("range {s:?} is not of the form lo..hi")))?;
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("range start {lo:?} is not an integer")))?;
    let hi: usize = hi
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("range end {hi:?} is not an integer")))?;
    if lo < 2 || hi < lo {
        return Err(Error::InvalidInput(format!("range {lo}..{hi} must satisfy 2 <= lo <= hi")));
    }
    Ok((lo, hi))
}

fn bounds_table(a: &BoundsArgs) -> Result<String> {
    let (lo, hi) = match (a.n, &a.n_range) {
        (Some(n), None) => (n, n),
        (None, Some(r)) => parse_range(r)?,
        (None, None) => (3, 10),
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput("give --n or --n-range, not both".into()))
        }
    };
    let mut csv = String::from(
        "n,delta,rho,log10_bfk_radius,log10_bfk_mass,log10_phi_delta,log10_phi_rho,lower_cubic,T,T_star\n",
    );
    for n in lo..=hi {
        let radius = io::fmt_f(bfk_radius_bound(n, 1.0, 1.0)?.log10_value);
        let mass = io::fmt_f(bfk_mass_bound(n, 1.0)?.log10_value);
        let phi_d = if n >= 3 {
            io::fmt_f(thm_nf_bound(n, a.delta)?.log10_value)
        } else {
            String::new()
        };
        let phi_r = io::fmt_f(phi_upcrossing_log10(n, a.rho)?);
        let cubic = if n >= 3 { io::fmt_f(lower_bound_cubic(n)?) } else { String::new() };
        let (t, t_star) = partition_times(n, a.x0_norm)?;
        csv.push_str(&format!(
            "{n},{delta},{rho},{radius},{mass},{phi_d},{phi_r},{cubic},{t},{t_star}\n",
            delta = io::fmt_f(a.delta),
            rho = io::fmt_f(a.rho),
            t = io::fmt_f(t),
            t_star = io::fmt_f(t_star),
        ));
    }
    Ok(csv)
}

fn cmd_bounds(a: BoundsArgs) -> Result<i32> {
    match bounds_table(&a) {
        Ok(csv) => {
            emit(&a.out, &csv)?;
            Ok(0)
        }
        Err(Error::InvalidInput(m)) => {
            eprintln!("error: {m}");
            Ok(1)
        }
        Err(e) => Err(e),
    }
}

fn cmd_search(a: SearchArgs) -> Result<i32> {
    let outcome = search_max_collisions(a.n, a.d, a.trials, a.seed)?;

    // The witness count must sit under the separation-sensitive bound at
    // the clearance this very run exhibited.
    let (phi, within) = match outcome.observed_delta {
        Some(delta) if delta > 0.0 && a.n >= 3 => {
            let rep = thm_nf_bound(a.n, delta.min(1.0))?;
            let ok = (outcome.count as f64).log10() <= rep.log10_value;
            (io::fmt_f(rep.log10_value), Some(ok))
        }
        _ => ("null".into(), None),
    };
    let summary = format!(
        "{{\"schema\":{},\"kind\":\"hardball-search\",\"name\":{},\"count\":{},\"observed_delta\":{},\"trials\":{},\"degenerate_trials\":{},\"phi_delta_log10\":{},\"within_phi_delta\":{},\"note\":{}}}\n",
        io::SCHEMA,
        io::json_str(&outcome.best.name),
        outcome.count,
        outcome.observed_delta.map_or("null".into(), io::fmt_f),
        outcome.trials_run,
        outcome.degenerate_trials,
        phi,
        within.map_or("null".into(), |b| b.to_string()),
        io::json_str(&outcome.best.note),
    );
    if let Some(dir) = &a.out {
        io::write_file(&dir.join("witness.json"), &io::state_json(&outcome.best.state))?;
        io::write_file(&dir.join("search.json"), &summary)?;
    }
    print!("{summary}");
    Ok(if within == Some(false) { 1 } else { 0 })
}

fn cmd_cluster(a: ClusterArgs) -> Result<i32> {
    let opts = SimOptions {
        max_events: a.max_events,
        horizon: None,
        tol: a.tol.tolerances()?,
    };
    let (name, raw) = load_state(&a.scenario)?;
    let state = normalize_frame(&raw)?;
    let traj = simulate(&state, &opts)?;
    let dc = dense_cluster_search(&traj, a.rho)?;
    let floor = dc.pigeonhole_floor();
    let floor_ok = dc.count as f64 >= floor;
    let balls: Vec<String> = dc.balls.iter().map(|b| b.to_string()).collect();
    let report = format!(
        "{{\"schema\":{},\"kind\":\"hardball-cluster\",\"scenario\":{},\"balls\":[{}],\"interval\":[{},{}],\"count\":{},\"rho\":{},\"n\":{},\"split_intervals\":{},\"total_collisions\":{},\"pigeonhole_floor\":{},\"connected\":{},\"floor_satisfied\":{}}}\n",
        io::SCHEMA,
        io::json_str(&name),
        balls.join(","),
        io::fmt_or_null(dc.interval.0),
        io::fmt_or_null(dc.interval.1),
        dc.count,
        io::fmt_f(dc.rho),
        dc.n,
        dc.split_intervals,
        dc.total_collisions,
        io::fmt_f(floor),
        dc.connected,
        floor_ok,
    );
    emit(&a.out, &report)?;
    Ok(if dc.connected && floor_ok { 0 } else { 1 })
}
