//! Scenario generators and a randomized search for collision-rich starts.
//!
//! Three sources of initial states: a collinear cascade with a known exact
//! collision count, seeded rejection sampling of admissible random states,
//! and a perturbation search that hunts for configurations maximizing the
//! simulated collision count. The search only ever reports a witness; it
//! proves nothing about maxima.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{normalize_frame, BallState, SystemState};
use crate::engine::{simulate, SimOptions};
use crate::error::{Error, Result};
use crate::vector::Vector;

/// Box side per unit ball count for [`random_admissible`] when callers have
/// no opinion: loose enough that rejection sampling stays cheap, tight
/// enough that small systems actually interact.
pub const DEFAULT_BOX_SCALE: f64 = 4.0;

/// Denser default for the search, where interaction is the whole point.
const SEARCH_BOX_SCALE: f64 = 3.0;

/// Rejections allowed before sampling gives up.
const MAX_REJECTIONS: usize = 100_000;

/// A named, normalized initial state, with the exact expected collision
/// count when the construction guarantees one.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub state: SystemState,
    pub expected_collisions: Option<usize>,
    pub note: String,
}

/// Result of [`search_max_collisions`]: the best configuration found, its
/// simulated collision count, and the smallest clearance any non-colliding
/// pair had at a collision instant of that very run (`None` when nothing
/// collided or no third ball exists).
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: Scenario,
    pub count: usize,
    pub observed_delta: Option<f64>,
    pub trials_run: usize,
    pub degenerate_trials: usize,
}

/// `n` balls on the first axis at `i * spacing`, faster balls behind slower
/// ones, so that every pair collides head-on exactly once: `n(n-1)/2`
/// collisions, the one-dimensional maximum, embedded in dimension `d`.
///
/// The velocity profile is `v_i = 2^{n-i} - (2^n - 1)/n`: strictly
/// decreasing in position order and zero-sum, like the evenly spaced
/// profile, but with the extra property that no three balls ever meet at
/// one instant, which keeps every collision a clean pair event for any `n`.
/// Uniform profiles tie all adjacent pairs at one time and the pair law
/// rejects the resulting chained contact.
pub fn line_of_balls(n: usize, d: usize, spacing: f64) -> Result<Scenario> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 balls, got {n}")));
    }
    if d < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {d}")));
    }
    if !(spacing > 2.0) || !spacing.is_finite() {
        return Err(Error::InvalidInput(format!("spacing must exceed 2, got {spacing}")));
    }
    if n > 52 {
        return Err(Error::InvalidInput(format!(
            "profile 2^(n-i) is exact in a float only up to n = 52, got {n}"
        )));
    }
    let mean = ((2f64.powi(n as i32)) - 1.0) / n as f64;
    let balls = (1..=n)
        .map(|i| {
            let mut center = vec![0.0; d];
            center[0] = i as f64 * spacing;
            let mut velocity = vec![0.0; d];
            velocity[0] = 2f64.powi((n - i) as i32) - mean;
            BallState { center: Vector(center), velocity: Vector(velocity) }
        })
        .collect();
    let state = normalize_frame(&SystemState::new(0.0, d, balls)?)?;
    Ok(Scenario {
        name: format!("line-of-balls-n{n}-d{d}"),
        state,
        expected_collisions: Some(n * (n - 1) / 2),
        note: format!(
            "collinear cascade, spacing {spacing}; every pair collides exactly once"
        ),
    })
}

fn sample_admissible_state(
    n: usize,
    d: usize,
    box_scale: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SystemState> {
    let side = box_scale * (n as f64).powf(1.0 / d as f64);
    let mut centers: Vec<Vector> = Vec::with_capacity(n);
    let mut rejections = 0usize;
    while centers.len() < n {
        let cand = Vector((0..d).map(|_| rng.gen_range(0.0..side)).collect());
        if centers.iter().all(|c| c.dist(&cand) >= 2.0) {
            centers.push(cand);
        } else {
            rejections += 1;
            if rejections >= MAX_REJECTIONS {
                return Err(Error::SamplingExhausted { attempts: rejections });
            }
        }
    }
    let balls = centers
        .into_iter()
        .map(|center| {
            let velocity = Vector((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
            BallState { center, velocity }
        })
        .collect();
    SystemState::new(0.0, d, balls)
}

/// A normalized random state: centers rejection-sampled uniformly in a box
/// of side `box_scale * n^(1/d)` until pairwise distances reach 2,
/// isotropic Gaussian velocities, then frame normalization. Deterministic
/// in `seed`.
pub fn random_admissible(n: usize, d: usize, seed: u64, box_scale: f64) -> Result<Scenario> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 balls, got {n}")));
    }
    if d < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {d}")));
    }
    if !(box_scale > 0.0) || !box_scale.is_finite() {
        return Err(Error::InvalidInput(format!("box_scale must be positive, got {box_scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = normalize_frame(&sample_admissible_state(n, d, box_scale, &mut rng)?)?;
    Ok(Scenario {
        name: format!("random-n{n}-d{d}-seed{seed}"),
        state,
        expected_collisions: None,
        note: format!("rejection-sampled in a box of side {box_scale} * n^(1/d)"),
    })
}

/// Stateless per-trial seed derivation (splitmix64 finalizer), so trials
/// are independent and any subset can run in any order or in parallel.
fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master
        .wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Gaussian jitter on every coordinate of every center and velocity. May
/// produce an overlapping state; the caller retries or falls back.
fn perturbed(base: &SystemState, scale: f64, rng: &mut ChaCha8Rng) -> Result<SystemState> {
    let d = base.dim();
    let balls = base
        .balls()
        .iter()
        .map(|b| BallState {
            center: Vector(
                (0..d)
                    .map(|c| b.center[c] + scale * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            ),
            velocity: Vector(
                (0..d)
                    .map(|c| b.velocity[c] + scale * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            ),
        })
        .collect();
    SystemState::new(base.time(), d, balls)
}

/// Randomized search for a high-collision configuration: fresh admissible
/// draws mixed with Gaussian perturbations of the best state found so far.
///
/// Trials run in epochs of 100. Within an epoch every perturbation jitters
/// the best state as of the epoch start (so trials stay independent given
/// their derived seeds and merge by max-reduction); every third trial is a
/// fresh draw regardless. The jitter scale starts at 0.1 length units and
/// halves after each epoch that fails to improve the best count. Ties in
/// count resolve to the earliest trial, making the outcome a pure function
/// of `(n, d, trials, seed)`.
///
/// Degenerate trials (chained simultaneous contacts, sampling exhaustion,
/// roundoff-induced overlap) are skipped and counted, never retried.
pub fn search_max_collisions(
    n: usize,
    d: usize,
    trials: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be positive".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 balls, got {n}")));
    }
    if d < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {d}")));
    }

    struct Best {
        count: usize,
        trial: usize,
        state: SystemState,
        observed_delta: Option<f64>,
    }

    let opts = SimOptions { max_events: 10_000, horizon: None, ..SimOptions::default() };
    let mut best: Option<Best> = None;
    let mut degenerate = 0usize;
    let mut scale = 0.1f64;

    let mut trial = 0usize;
    while trial < trials {
        let epoch_end = (trial + 100).min(trials);
        let epoch_base = best.as_ref().map(|b| b.state.clone());
        let count_at_epoch_start = best.as_ref().map(|b| b.count);

        for t in trial..epoch_end {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t as u64));
            let drawn = if t % 3 == 0 || epoch_base.is_none() {
                sample_admissible_state(n, d, SEARCH_BOX_SCALE, &mut rng)
            } else {
                let base = epoch_base.as_ref().unwrap();
                // A jittered state can overlap; retry a few times, then
                // fall back to a fresh draw so the trial is never wasted.
                (0..10)
                    .find_map(|_| perturbed(base, scale, &mut rng).ok())
                    .ok_or(())
                    .map_or_else(
                        |_| sample_admissible_state(n, d, SEARCH_BOX_SCALE, &mut rng),
                        Ok,
                    )
            };
            let sim = drawn
                .and_then(|s| normalize_frame(&s))
                .and_then(|s| simulate(&s, &opts));
            let traj = match sim {
                Ok(traj) => traj,
                Err(
                    Error::SimultaneousCollision { .. }
                    | Error::DriftExceeded { .. }
                    | Error::SamplingExhausted { .. }
                    | Error::ZeroEnergy,
                ) => {
                    degenerate += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let count = traj.collision_count();
            let improves = match &best {
                None => true,
                Some(b) => count > b.count,
            };
            if improves {
                best = Some(Best {
                    count,
                    trial: t,
                    state: traj.initial().clone(),
                    observed_delta: traj.observed_delta(),
                });
            }
        }

        if best.as_ref().map(|b| b.count) == count_at_epoch_start {
            scale /= 2.0;
        }
        trial = epoch_end;
    }

    let best = best.ok_or_else(|| {
        Error::InvalidInput(format!(
            "all {trials} trials were degenerate; no admissible configuration simulated"
        ))
    })?;
    Ok(SearchOutcome {
        best: Scenario {
            name: format!("search-n{n}-d{d}-seed{seed}"),
            state: best.state,
            expected_collisions: None,
            note: format!(
                "best of {trials} trials (trial {} won with {} collisions)",
                best.trial, best.count
            ),
        },
        count: best.count,
        observed_delta: best.observed_delta,
        trials_run: trials,
        degenerate_trials: degenerate,
    })
}
