//! Event-driven simulation: exact contact times, one collision at a time.
//!
//! Between collisions every ball is ballistic, so the center distance of a
//! pair is the square root of a quadratic in time and the next contact of
//! the whole system is the minimum over pairs of a quadratic root. The loop
//! alternates advance-to-root with the instantaneous collision law from
//! [`crate::dynamics`]; no time stepping, no interpenetration.
//!
//! Predictions are refreshed lazily: a collision of balls `j` and `k`
//! invalidates only predictions involving `j` or `k`, since every other
//! pair's relative motion is unchanged. Stored prediction times are
//! absolute, so stale entries from earlier states remain exact.

use serde::{Deserialize, Serialize};

use crate::dynamics::{contact_frame, resolve_collision, SystemState};
use crate::error::{Error, Result};
use crate::tol::{self, Tolerances};
use crate::vector::Vector;

/// One resolved collision. `pair` is ordered `j < k`; `unit_axis` points
/// from ball `k`'s center toward ball `j`'s center at the contact instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub time: f64,
    pub pair: (usize, usize),
    pub unit_axis: Vector,
    pub pre_velocities: (Vector, Vector),
    pub post_velocities: (Vector, Vector),
}

/// Why a simulation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// No pair will ever collide again: the ballistic tail is exact forever.
    Terminal,
    /// The next collision would occur past the requested horizon.
    HorizonReached,
    /// The event budget ran out with collisions still pending; the recorded
    /// log is a valid prefix and the span ends at the last event.
    BudgetExhausted,
}

/// Which side of a collision instant to evaluate at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub max_events: usize,
    /// Absolute time bound; `None` simulates until no collision remains.
    pub horizon: Option<f64>,
    pub tol: Tolerances,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_events: tol::DEFAULT_MAX_EVENTS,
            horizon: None,
            tol: Tolerances::default(),
        }
    }
}

/// A simulated piecewise-ballistic trajectory: the initial state, the
/// ordered event log, and a checkpoint after each event for O(log m)
/// evaluation anywhere in the span.
#[derive(Debug, Clone)]
pub struct Trajectory {
    initial: SystemState,
    events: Vec<CollisionEvent>,
    checkpoints: Vec<SystemState>,
    termination: Termination,
    horizon: Option<f64>,
}

/// One ballistic piece of a trajectory: `state` holds at `t_start` and the
/// motion is straight until `t_end` (`f64::INFINITY` on a terminal tail).
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    pub t_start: f64,
    pub t_end: f64,
    pub state: &'a SystemState,
}

impl Trajectory {
    pub fn initial(&self) -> &SystemState {
        &self.initial
    }

    pub fn events(&self) -> &[CollisionEvent] {
        &self.events
    }

    pub fn collision_count(&self) -> usize {
        self.events.len()
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }

    pub fn span_start(&self) -> f64 {
        self.initial.time()
    }

    /// End of the evaluable span: infinite for terminal trajectories, the
    /// horizon when one was hit, the last event when the budget ran out.
    pub fn span_end(&self) -> f64 {
        match self.termination {
            Termination::Terminal => f64::INFINITY,
            Termination::HorizonReached => self.horizon.expect("horizon termination"),
            Termination::BudgetExhausted => self
                .events
                .last()
                .map(|e| e.time)
                .unwrap_or_else(|| self.initial.time()),
        }
    }

    pub fn last_event_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.time)
    }

    /// State at time `t`. At an event time, `side` picks the velocities
    /// before (`Left`) or after (`Right`) the collision; elsewhere the two
    /// agree. Positions are always continuous.
    pub fn state_at(&self, t: f64, side: Side) -> Result<SystemState> {
        let start = self.span_start();
        let end = self.span_end();
        if !(t >= start && t <= end) {
            return Err(Error::OutOfSpan { t, start, end });
        }
        let applied = match side {
            Side::Right => self.events.partition_point(|e| e.time <= t),
            Side::Left => self.events.partition_point(|e| e.time < t),
        };
        let base = if applied == 0 {
            &self.initial
        } else {
            &self.checkpoints[applied - 1]
        };
        let mut out = base.clone();
        out.advance(t - base.time());
        out.set_time(t);
        Ok(out)
    }

    /// The ballistic pieces in time order. Zero-length segments appear
    /// between equal-time disjoint events.
    pub fn segments(&self) -> impl Iterator<Item = Segment<'_>> {
        let end = self.span_end();
        let first_end = self.events.first().map(|e| e.time).unwrap_or(end);
        let head = std::iter::once(Segment {
            t_start: self.initial.time(),
            t_end: first_end,
            state: &self.initial,
        });
        let tail = self.checkpoints.iter().enumerate().map(move |(i, s)| Segment {
            t_start: self.events[i].time,
            t_end: self.events.get(i + 1).map(|e| e.time).unwrap_or(end),
            state: s,
        });
        head.chain(tail)
    }

    /// Smallest clearance `min_pair(distance) - 2` over non-colliding pairs,
    /// minimized over all collision instants. `None` without events or when
    /// `n = 2` (no other pair exists).
    pub fn observed_delta(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (e, s) in self.events.iter().zip(&self.checkpoints) {
            for j in 0..s.len() {
                for k in (j + 1)..s.len() {
                    if (j, k) == e.pair {
                        continue;
                    }
                    let gap = s.pair_distance(j, k) - 2.0;
                    best = Some(best.map_or(gap, |b: f64| b.min(gap)));
                }
            }
        }
        best
    }
}

/// Earliest elapsed `t >= 0` at which the centers of `j` and `k` reach
/// distance 2 while strictly approaching; `None` when the pair never
/// collides (separating, missing, or merely grazing within the tangential
/// window).
pub fn predict_pair_collision(state: &SystemState, j: usize, k: usize) -> Option<f64> {
    predict_with(state, j, k, &Tolerances::default())
}

/// Prediction keeps a wider tangential margin than resolution: a root
/// accepted here has normal speed comfortably above the window that
/// `approach_check` re-tests at the advanced position, so roundoff in the
/// re-test cannot flip the classification.
const GRAZE_MARGIN: f64 = 20.0;

fn predict_with(state: &SystemState, j: usize, k: usize, tol: &Tolerances) -> Option<f64> {
    let dx = state.ball(j).center.sub(&state.ball(k).center);
    let dv = state.ball(j).velocity.sub(&state.ball(k).velocity);
    let a = dv.norm_sq();
    if a == 0.0 {
        return None;
    }
    let b = 2.0 * dx.dot(&dv);
    if b >= 0.0 {
        // Distance non-decreasing now and, since the quadratic opens
        // upward, forever.
        return None;
    }
    let c = dx.norm_sq() - 4.0;
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Normal approach speed at contact is sq / (2 |dx|) = sq / 4; reject
    // grazing roots inside the widened tangential window.
    if sq <= 2.0 * GRAZE_MARGIN * tol.zero {
        return None;
    }
    // Entering root of a t^2 + b t + c, in the cancellation-free form for
    // b < 0. Negative only if the pair already overlaps (c < 0), which the
    // state invariant bounds by tol.overlap; clamp that sliver to "now".
    let t = 2.0 * c / (-b + sq);
    if t < -tol.contact {
        return None;
    }
    Some(t.max(0.0))
}

/// Advance a state to its next collision and resolve it. `Ok(None)` when no
/// pair ever collides again.
pub fn step_to_next_event(state: &SystemState) -> Result<Option<(SystemState, CollisionEvent)>> {
    let mut lp = EventLoop::new(state.clone(), Tolerances::default());
    match lp.next_event(&[])? {
        Some(ev) => Ok(Some((lp.cur, ev))),
        None => Ok(None),
    }
}

/// Run the event loop from `initial` until termination.
pub fn simulate(initial: &SystemState, opts: &SimOptions) -> Result<Trajectory> {
    initial.validate()?;
    let mut lp = EventLoop::new(initial.clone(), opts.tol);
    let mut events: Vec<CollisionEvent> = Vec::new();
    let mut checkpoints: Vec<SystemState> = Vec::new();
    let termination;
    loop {
        match lp.peek() {
            None => {
                termination = Termination::Terminal;
                break;
            }
            Some((t, _)) => {
                if let Some(h) = opts.horizon {
                    if t > h {
                        termination = Termination::HorizonReached;
                        break;
                    }
                }
                if events.len() >= opts.max_events {
                    termination = Termination::BudgetExhausted;
                    break;
                }
            }
        }
        let ev = lp
            .next_event(&events)?
            .expect("peek returned a candidate");
        events.push(ev);
        checkpoints.push(lp.cur.clone());
    }
    Ok(Trajectory {
        initial: initial.clone(),
        events,
        checkpoints,
        termination,
        horizon: opts.horizon,
    })
}

/// Rebuild a trajectory from an initial state and a logged event sequence,
/// adopting the logged post-collision velocities verbatim. Geometric
/// inconsistencies (contact distance off, pre-velocity mismatch) come back
/// as warnings, not errors, so that downstream functional checks can judge
/// a possibly corrupted log on substance.
pub fn rebuild(
    initial: SystemState,
    events: Vec<CollisionEvent>,
    termination: Termination,
    horizon: Option<f64>,
) -> Result<(Trajectory, Vec<String>)> {
    initial.validate()?;
    let n = initial.len();
    let mut warnings = Vec::new();
    let mut cur = initial.clone();
    let mut checkpoints = Vec::with_capacity(events.len());
    let mut prev_time = initial.time();
    for (i, e) in events.iter().enumerate() {
        let (j, k) = e.pair;
        if j >= k || k >= n {
            return Err(Error::InvalidInput(format!(
                "event {i}: pair ({j}, {k}) invalid for {n} balls"
            )));
        }
        if e.time < prev_time {
            return Err(Error::InvalidInput(format!(
                "event {i}: time {} precedes previous event at {prev_time}",
                e.time
            )));
        }
        prev_time = e.time;
        cur.advance(e.time - cur.time());
        cur.set_time(e.time);
        let dist = cur.pair_distance(j, k);
        if (dist - 2.0).abs() > tol::CONTACT {
            warnings.push(format!(
                "event {i}: pair ({j}, {k}) at center distance {dist}, not in contact"
            ));
        }
        let pre_ok = cur.ball(j).velocity == e.pre_velocities.0
            && cur.ball(k).velocity == e.pre_velocities.1;
        if !pre_ok {
            warnings.push(format!(
                "event {i}: logged pre-collision velocities disagree with replay"
            ));
        }
        cur.set_velocity(j, e.post_velocities.0.clone());
        cur.set_velocity(k, e.post_velocities.1.clone());
        checkpoints.push(cur.clone());
    }
    Ok((
        Trajectory {
            initial,
            events,
            checkpoints,
            termination,
            horizon,
        },
        warnings,
    ))
}

struct EventLoop {
    cur: SystemState,
    tol: Tolerances,
    /// Absolute predicted collision time per packed pair, `None` when the
    /// pair never meets again.
    pred: Vec<Option<f64>>,
}

impl EventLoop {
    fn new(cur: SystemState, tol: Tolerances) -> Self {
        let n = cur.len();
        let mut lp = EventLoop {
            cur,
            tol,
            pred: vec![None; n * (n.saturating_sub(1)) / 2],
        };
        for j in 0..n {
            for k in (j + 1)..n {
                lp.refresh(j, k);
            }
        }
        lp
    }

    fn pair_index(&self, j: usize, k: usize) -> usize {
        let n = self.cur.len();
        debug_assert!(j < k && k < n);
        j * (2 * n - j - 1) / 2 + (k - j - 1)
    }

    fn refresh(&mut self, j: usize, k: usize) {
        let t = predict_with(&self.cur, j, k, &self.tol).map(|dt| self.cur.time() + dt);
        let idx = self.pair_index(j, k);
        self.pred[idx] = t;
    }

    /// Earliest predicted collision; ties break toward the smallest pair.
    fn peek(&self) -> Option<(f64, (usize, usize))> {
        let n = self.cur.len();
        let mut best: Option<(f64, (usize, usize))> = None;
        for j in 0..n {
            for k in (j + 1)..n {
                if let Some(t) = self.pred[self.pair_index(j, k)] {
                    if best.map_or(true, |(bt, _)| t < bt) {
                        best = Some((t, (j, k)));
                    }
                }
            }
        }
        best
    }

    /// All pairs predicted within the simultaneity window of `t`.
    fn window_pairs(&self, t: f64) -> Vec<(usize, usize)> {
        let n = self.cur.len();
        let mut out = Vec::new();
        for j in 0..n {
            for k in (j + 1)..n {
                if let Some(pt) = self.pred[self.pair_index(j, k)] {
                    if pt <= t + self.tol.simultaneous {
                        out.push((j, k));
                    }
                }
            }
        }
        out
    }

    fn next_event(&mut self, history: &[CollisionEvent]) -> Result<Option<CollisionEvent>> {
        let Some((t, pair)) = self.peek() else {
            return Ok(None);
        };

        // Candidate collisions inside the simultaneity window: pending
        // predictions plus just-resolved events. Two of them chained through
        // shared balls or through balls in resting contact make the
        // resolution order physically meaningful, which the pair collision
        // law cannot support.
        let mut window = self.window_pairs(t);
        for e in history.iter().rev() {
            if t - e.time > self.tol.simultaneous {
                break;
            }
            if !window.contains(&e.pair) {
                window.push(e.pair);
            }
        }

        let dt = t - self.cur.time();
        debug_assert!(dt >= 0.0);
        self.cur.advance(dt);
        self.cur.set_time(t);

        if window.len() >= 2 {
            self.check_chained(t, &window)?;
        }

        // Drift monitor: real interpenetration means accumulated roundoff
        // has invalidated the trajectory.
        for j in 0..self.cur.len() {
            for k in (j + 1)..self.cur.len() {
                let dist = self.cur.pair_distance(j, k);
                if dist < 2.0 - self.tol.drift_abort {
                    return Err(Error::DriftExceeded { time: t, j, k, dist });
                }
            }
        }

        let (j, k) = pair;
        let frame = contact_frame(&self.cur, j, k)?;
        let pre = (
            self.cur.ball(j).velocity.clone(),
            self.cur.ball(k).velocity.clone(),
        );
        self.cur = resolve_collision(&self.cur, j, k)?;
        let post = (
            self.cur.ball(j).velocity.clone(),
            self.cur.ball(k).velocity.clone(),
        );
        for b in 0..self.cur.len() {
            if b != j {
                self.refresh(b.min(j), b.max(j));
            }
            if b != k && b != j {
                self.refresh(b.min(k), b.max(k));
            }
        }
        Ok(Some(CollisionEvent {
            time: t,
            pair,
            unit_axis: frame.unit_axis,
            pre_velocities: pre,
            post_velocities: post,
        }))
    }

    /// Union-find over balls: window pairs are edges, and so is any pair
    /// currently at contact (a resting touch chains collisions exactly like
    /// a shared ball). Two window pairs in one component is the degenerate
    /// configuration.
    fn check_chained(&self, t: f64, window: &[(usize, usize)]) -> Result<()> {
        let n = self.cur.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
            let ra = find(parent, a);
            let rb = find(parent, b);
            if ra != rb {
                parent[ra] = rb;
            }
        };
        for &(a, b) in window {
            union(&mut parent, a, b);
        }
        for j in 0..n {
            for k in (j + 1)..n {
                if self.cur.pair_distance(j, k) <= 2.0 + self.tol.contact {
                    union(&mut parent, j, k);
                }
            }
        }
        let mut count_per_root = std::collections::HashMap::new();
        for &(a, _) in window {
            *count_per_root.entry(find(&mut parent, a)).or_insert(0usize) += 1;
        }
        if count_per_root.values().any(|&c| c >= 2) {
            let mut pairs = window.to_vec();
            pairs.sort_unstable();
            return Err(Error::SimultaneousCollision { time: t, pairs });
        }
        Ok(())
    }
}
