//! Monotone functionals of a trajectory.
//!
//! The quantities here are the reason the simulator is worth trusting for
//! counting collisions: along any trajectory of the normalized system,
//!
//! * the angle `alpha(t)` between phase position `x(t)` and phase velocity
//!   `v(t+)` never increases, and drops strictly at every collision;
//! * cutting the trajectory at a time `u >= t_0` (freezing velocities to
//!   their values at `u+`) only increases angles and decreases norms, in the
//!   precise dominance order checked by [`check_lemma_suite`];
//! * per axis, the partial sums of sorted-coordinate velocities (the order
//!   statistics frame) never increase.
//!
//! All of them are stated relative to the time origin `t_0` where `alpha`
//! crosses `pi/2`; [`find_t0`] locates it and [`normalized_from_state`]
//! re-anchors a trajectory there. Since `x . v(t+)` increases with slope
//! `|v|^2 = 1` between events and jumps upward at collisions, the crossing
//! exists and is unique on every trajectory of the normalized system.

use crate::dynamics::{normalize_frame, time_reverse, SystemState};
use crate::engine::{simulate, SimOptions, Side, Trajectory};
use crate::error::{Error, Result};
use crate::tol;
use crate::vector::{angle_between, Vector};

/// A trajectory evaluable on the whole time line: a forward simulation from
/// the anchor state and a forward simulation of the time-reversed anchor,
/// which replays the past. Both runs share the anchor's time stamp.
#[derive(Debug, Clone)]
pub struct FullTrajectory {
    forward: Trajectory,
    backward: Trajectory,
}

impl FullTrajectory {
    /// Simulate both time directions from `state`.
    pub fn from_state(state: &SystemState, opts: &SimOptions) -> Result<Self> {
        let forward = simulate(state, opts)?;
        let backward = simulate(&time_reverse(state), opts)?;
        Ok(FullTrajectory { forward, backward })
    }

    /// Wrap an existing forward trajectory (typically rebuilt from a log,
    /// so its events are adopted rather than re-derived) and simulate only
    /// the backward side from its initial state.
    pub fn from_forward(forward: Trajectory, opts: &SimOptions) -> Result<Self> {
        let backward = simulate(&time_reverse(forward.initial()), opts)?;
        Ok(FullTrajectory { forward, backward })
    }

    pub fn anchor_time(&self) -> f64 {
        self.forward.initial().time()
    }

    pub fn forward(&self) -> &Trajectory {
        &self.forward
    }

    pub fn backward(&self) -> &Trajectory {
        &self.backward
    }

    pub fn dim(&self) -> usize {
        self.forward.initial().dim()
    }

    pub fn ball_count(&self) -> usize {
        self.forward.initial().len()
    }

    /// Evaluable span on the original clock; infinite ends for terminal runs.
    pub fn span(&self) -> (f64, f64) {
        let a = self.anchor_time();
        let lo = match self.backward.span_end() {
            e if e.is_infinite() => f64::NEG_INFINITY,
            e => 2.0 * a - e,
        };
        (lo, self.forward.span_end())
    }

    /// State at `t` anywhere in the span. Past times are read off the
    /// reversed run: positions transfer directly, velocities come back
    /// negated and with left/right limits swapped.
    pub fn state_at(&self, t: f64, side: Side) -> Result<SystemState> {
        let a = self.anchor_time();
        if t > a || (t == a && side == Side::Right) {
            return self.forward.state_at(t, side);
        }
        let mirrored = match side {
            Side::Right => Side::Left,
            Side::Left => Side::Right,
        };
        let mut s = match self.backward.state_at(2.0 * a - t, mirrored) {
            Ok(s) => s,
            Err(Error::OutOfSpan { .. }) => {
                let (lo, hi) = self.span();
                return Err(Error::OutOfSpan { t, start: lo, end: hi });
            }
            Err(e) => return Err(e),
        };
        s = time_reverse(&s);
        s.set_time(t);
        Ok(s)
    }

    pub fn phase_position(&self, t: f64) -> Result<Vector> {
        Ok(self.state_at(t, Side::Right)?.phase_position())
    }

    pub fn phase_velocity(&self, t: f64, side: Side) -> Result<Vector> {
        Ok(self.state_at(t, side)?.phase_velocity())
    }

    /// The angle functional `alpha(t)`, the angle between `x(t)` and `v(t+)`.
    pub fn alpha(&self, t: f64) -> Result<f64> {
        self.alpha_side(t, Side::Right)
    }

    pub fn alpha_side(&self, t: f64, side: Side) -> Result<f64> {
        let s = self.state_at(t, side)?;
        angle_between(&s.phase_position(), &s.phase_velocity())
    }

    /// All collision instants on the original clock, ascending, with pairs.
    pub fn event_times(&self) -> Vec<(f64, (usize, usize))> {
        let a = self.anchor_time();
        let mut out: Vec<(f64, (usize, usize))> = self
            .backward
            .events()
            .iter()
            .map(|e| (2.0 * a - e.time, e.pair))
            .collect();
        out.reverse();
        out.extend(self.forward.events().iter().map(|e| (e.time, e.pair)));
        out
    }
}

/// The trajectory cut at time `u`: follows the base before `u`, then moves
/// ballistically with velocities frozen at `v(u+)`.
#[derive(Debug, Clone)]
pub struct CutTrajectory<'a> {
    base: &'a FullTrajectory,
    cut: f64,
    x_at_cut: Vector,
    v_after_cut: Vector,
}

impl<'a> CutTrajectory<'a> {
    pub fn new(base: &'a FullTrajectory, cut: f64) -> Result<Self> {
        let s = base.state_at(cut, Side::Right)?;
        Ok(CutTrajectory {
            base,
            cut,
            x_at_cut: s.phase_position(),
            v_after_cut: s.phase_velocity(),
        })
    }

    pub fn cut_time(&self) -> f64 {
        self.cut
    }

    pub fn phase_position(&self, t: f64) -> Result<Vector> {
        if t < self.cut {
            self.base.phase_position(t)
        } else {
            Ok(self.x_at_cut.add_scaled(t - self.cut, &self.v_after_cut))
        }
    }

    pub fn phase_velocity_after(&self, t: f64) -> Result<Vector> {
        if t < self.cut {
            self.base.phase_velocity(t, Side::Right)
        } else {
            Ok(self.v_after_cut.clone())
        }
    }

    pub fn alpha(&self, t: f64) -> Result<f64> {
        angle_between(&self.phase_position(t)?, &self.phase_velocity_after(t)?)
    }
}

/// Locate the time origin: the unique crossing of `g(t) = x(t) . v(t+)`
/// from negative to non-negative. Bisection with [`tol::T0_ITERS`]
/// iterations lands within [`tol::T0`] of the crossing; the returned time
/// sits on the non-negative side, so at a jump crossing it is the collision
/// instant itself.
pub fn find_t0(full: &FullTrajectory) -> Result<f64> {
    let g = |t: f64| -> Result<f64> {
        let s = full.state_at(t, Side::Right)?;
        Ok(s.phase_position().dot(&s.phase_velocity()))
    };
    let a = full.anchor_time();
    let (span_lo, span_hi) = full.span();

    // Bracket the crossing by doubling steps; g is increasing, so one side
    // is already known once g(a) is evaluated.
    let mut lo;
    let mut hi;
    if g(a)? >= 0.0 {
        hi = a;
        let mut step = 1.0;
        loop {
            let cand = hi - step;
            if cand < span_lo || step > 1e12 {
                return Err(Error::NotBracketed);
            }
            if g(cand)? < 0.0 {
                lo = cand;
                break;
            }
            hi = cand;
            step *= 2.0;
        }
    } else {
        lo = a;
        let mut step = 1.0;
        loop {
            let cand = lo + step;
            if cand > span_hi || step > 1e12 {
                return Err(Error::NotBracketed);
            }
            if g(cand)? >= 0.0 {
                hi = cand;
                break;
            }
            lo = cand;
            step *= 2.0;
        }
    }

    for _ in 0..tol::T0_ITERS {
        if hi - lo <= tol::T0 / 4.0 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Normalize a state into the zero-momentum unit-energy frame, simulate both
/// time directions, and re-anchor the clock at the time origin. Returns the
/// re-anchored trajectory (anchor time 0, `find_t0` of it is 0 within
/// tolerance) and the origin's time stamp on the input state's clock.
pub fn normalized_from_state(
    state: &SystemState,
    opts: &SimOptions,
) -> Result<(FullTrajectory, f64)> {
    let normalized = normalize_frame(state)?;
    let full = FullTrajectory::from_state(&normalized, opts)?;
    let t0 = find_t0(&full)?;
    let mut anchor = full.state_at(t0, Side::Right)?;
    anchor.set_time(0.0);
    Ok((FullTrajectory::from_state(&anchor, opts)?, t0))
}

/// Per-axis order statistics of a state: ball coordinates sorted ascending
/// (ties broken by ball index), the matching velocity components, and their
/// partial sums `F^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFrame {
    pub axis: usize,
    pub time: f64,
    /// `permutation[r]` is the ball holding rank `r`.
    pub permutation: Vec<usize>,
    pub sorted_positions: Vec<f64>,
    pub rank_velocities: Vec<f64>,
    /// `partial_sums[r] = sum of rank_velocities[0..=r]`; the last entry is
    /// the total momentum component, zero in the normalized frame.
    pub partial_sums: Vec<f64>,
}

pub fn order_frame(state: &SystemState, axis: usize) -> Result<OrderFrame> {
    if axis >= state.dim() {
        return Err(Error::InvalidInput(format!(
            "axis {axis} out of range for dimension {}",
            state.dim()
        )));
    }
    let n = state.len();
    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.sort_by(|&i, &j| {
        let (a, b) = (state.ball(i).center[axis], state.ball(j).center[axis]);
        a.partial_cmp(&b).unwrap().then(i.cmp(&j))
    });
    let sorted_positions: Vec<f64> = permutation
        .iter()
        .map(|&i| state.ball(i).center[axis])
        .collect();
    let rank_velocities: Vec<f64> = permutation
        .iter()
        .map(|&i| state.ball(i).velocity[axis])
        .collect();
    let mut partial_sums = Vec::with_capacity(n);
    let mut acc = 0.0;
    for w in &rank_velocities {
        acc += w;
        partial_sums.push(acc);
    }
    Ok(OrderFrame {
        axis,
        time: state.time(),
        permutation,
        sorted_positions,
        rank_velocities,
        partial_sums,
    })
}

/// The monotone claims this crate can check on a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Claim {
    /// `alpha` non-increasing everywhere, strictly dropping at collisions.
    AlphaDecreasing,
    /// Later cuts have smaller angle: `ang(x_w, v_w) <= ang(x_u, v_u)` for
    /// `u < w`, the base trajectory dominating every cut.
    AngleDominance,
    /// Earlier cuts have smaller norm: `|x_u| <= |x_w| <= |x|` for `u < w`.
    NormDominance,
    /// Later cuts spread less: `ang(x_w(s), x_w(t)) <= ang(x_u(s), x_u(t))`.
    SpreadDominance,
    /// `|x|` non-decreasing on `[0, inf)`, non-increasing on `(-inf, 0]`.
    NormMonotone,
    /// Order-statistics partial sums non-increasing, every axis and rank.
    FMonotone,
    /// Cross-partition distances exceed 5/2 from `T*` on.
    SeparationTStar,
    /// Consecutive upcrossing completions at least `rho / 2` apart.
    UpcrossingSpacing,
    /// Total upcrossing count within its closed-form bound.
    SBound,
}

impl Claim {
    pub fn id(self) -> &'static str {
        match self {
            Claim::AlphaDecreasing => "lemma_angle_dwn",
            Claim::AngleDominance => "lemma_angle_cut",
            Claim::NormDominance => "lemma_norm_bound",
            Claim::SpreadDominance => "lemma_angle_x",
            Claim::NormMonotone => "lemma_norm_increasing",
            Claim::FMonotone => "F_monotone",
            Claim::SeparationTStar => "separation_T_star",
            Claim::UpcrossingSpacing => "upcrossing_spacing",
            Claim::SBound => "S_bound",
        }
    }
}

/// Outcome of checking one claim. `worst_excess` is the largest amount by
/// which any comparison exceeded its allowance; compliant checks report the
/// (negative) margin of the tightest comparison instead, and `pass` is
/// simply `worst_excess <= 0`.
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub claim: Claim,
    pub checked: usize,
    pub worst_excess: f64,
    pub worst_at: Option<f64>,
    pub pass: bool,
    pub flags: Vec<String>,
}

impl MonotonicityReport {
    pub(crate) fn new(claim: Claim) -> Self {
        MonotonicityReport {
            claim,
            checked: 0,
            worst_excess: f64::NEG_INFINITY,
            worst_at: None,
            pass: true,
            flags: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, excess: f64, at: f64) {
        self.checked += 1;
        if excess > self.worst_excess {
            self.worst_excess = excess;
            self.worst_at = Some(at);
        }
        if excess > 0.0 {
            self.pass = false;
        }
    }

    pub(crate) fn finish(mut self) -> Self {
        if self.checked == 0 {
            self.worst_excess = 0.0;
        }
        self
    }
}

/// Build a probe grid: every collision instant (both time directions),
/// midpoints of consecutive ones, short head and tail extensions, and any
/// caller-supplied times, all clamped to the evaluable span.
pub fn default_probes(full: &FullTrajectory, extra: &[f64]) -> Vec<f64> {
    let events: Vec<f64> = full.event_times().iter().map(|&(t, _)| t).collect();
    let a = full.anchor_time();
    let mut probes: Vec<f64> = Vec::new();
    if events.is_empty() {
        probes.extend([a - 2.0, a - 1.0, a, a + 1.0, a + 2.0]);
    } else {
        probes.extend(&events);
        for w in events.windows(2) {
            probes.push(0.5 * (w[0] + w[1]));
        }
        let first = events[0];
        let last = *events.last().unwrap();
        let scale = (last - first).max(1.0);
        probes.extend([
            first - scale,
            first - 0.1 * scale,
            last + 0.1 * scale,
            last + scale,
            last + 10.0 * scale,
        ]);
    }
    probes.extend_from_slice(extra);
    let (lo, hi) = full.span();
    probes.retain(|t| *t >= lo && *t <= hi && t.is_finite());
    probes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    probes.dedup();
    probes
}

/// Evenly spaced sample times covering the collision window plus margins on
/// both sides, for callers that want a size-`count` grid.
pub fn suggest_samples(full: &FullTrajectory, count: usize) -> Vec<f64> {
    let events = full.event_times();
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    if let (Some(&(first, _)), Some(&(last, _))) = (events.first(), events.last()) {
        lo = lo.min(first);
        hi = hi.max(last);
    }
    lo -= 2.0;
    hi += 2.0;
    if count <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Check that every partial sum `F^r` is non-increasing along the probe
/// grid, evaluating both sides of every collision. Reports a flag whenever a
/// rank tie (two coordinates within `tol::ZERO`) coincides with a collision
/// instant, the one spot where the tie-break convention is load-bearing.
pub fn check_f_monotone(full: &FullTrajectory, axis: usize, samples: &[f64]) -> Result<MonotonicityReport> {
    let mut report = MonotonicityReport::new(Claim::FMonotone);
    let probes = default_probes(full, samples);
    let event_times: Vec<f64> = full.event_times().iter().map(|&(t, _)| t).collect();

    let mut prev: Option<Vec<f64>> = None;
    for &t in &probes {
        let is_event = event_times.binary_search_by(|e| e.partial_cmp(&t).unwrap()).is_ok();
        let sides: &[Side] = if is_event {
            &[Side::Left, Side::Right]
        } else {
            &[Side::Right]
        };
        for &side in sides {
            let state = full.state_at(t, side)?;
            let frame = order_frame(&state, axis)?;
            if is_event {
                let tied = frame
                    .sorted_positions
                    .windows(2)
                    .any(|w| (w[1] - w[0]).abs() <= tol::ZERO);
                if tied {
                    report.flags.push(format!(
                        "rank tie coincides with collision at t = {t} on axis {axis}"
                    ));
                }
            }
            if let Some(p) = &prev {
                for (&now, &before) in frame.partial_sums.iter().zip(p) {
                    report.record(now - before - tol::MONO, t);
                }
            }
            prev = Some(frame.partial_sums.clone());
        }
    }
    Ok(report.finish())
}

/// Run the full dominance suite at the given cut times. The trajectory must
/// be anchored at its time origin (`find_t0` within tolerance of 0) and the
/// cut times must be non-negative; the claims are stated from `t_0` on.
pub fn check_lemma_suite(
    full: &FullTrajectory,
    cut_times: &[f64],
    samples: &[f64],
) -> Result<Vec<MonotonicityReport>> {
    if cut_times.iter().any(|u| *u < 0.0 || !u.is_finite()) {
        return Err(Error::InvalidInput(
            "cut times must be finite and non-negative".into(),
        ));
    }
    let mut cuts: Vec<f64> = cut_times.to_vec();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    let cut_trajs: Vec<CutTrajectory> = cuts
        .iter()
        .map(|&u| CutTrajectory::new(full, u))
        .collect::<Result<_>>()?;
    let probes = default_probes(full, samples);
    let events = full.event_times();

    // (a) alpha non-increasing along probes for the base and every cut,
    // with a strict drop at every collision of the base trajectory.
    let mut angle_dwn = MonotonicityReport::new(Claim::AlphaDecreasing);
    {
        let mut prev: Option<f64> = None;
        for &t in &probes {
            let alpha = full.alpha(t)?;
            if let Some(p) = prev {
                angle_dwn.record(alpha - p - tol::MONO, t);
            }
            prev = Some(alpha);
        }
        for ct in &cut_trajs {
            let mut prev: Option<f64> = None;
            for &t in &probes {
                let alpha = ct.alpha(t)?;
                if let Some(p) = prev {
                    angle_dwn.record(alpha - p - tol::MONO, t);
                }
                prev = Some(alpha);
            }
        }
        for &(te, _) in &events {
            let before = full.alpha_side(te, Side::Left)?;
            let after = full.alpha_side(te, Side::Right)?;
            // Strictness: the jump must be below -1e-12.
            angle_dwn.record(after - before + 1e-12, te);
        }
    }

    // (b) later cuts have smaller angle, the base smallest of all.
    let mut angle_cut = MonotonicityReport::new(Claim::AngleDominance);
    for &t in &probes {
        let base_alpha = full.alpha(t)?;
        let mut later = base_alpha;
        // Walk cuts from the latest down; each must dominate the later one.
        for ct in cut_trajs.iter().rev() {
            let here = ct.alpha(t)?;
            angle_cut.record(later - here - tol::MONO, t);
            later = here;
        }
    }

    // (c) earlier cuts have smaller norm, the base largest of all.
    let mut norm_bound = MonotonicityReport::new(Claim::NormDominance);
    for &t in &probes {
        let mut earlier: Option<f64> = None;
        for ct in &cut_trajs {
            let here = ct.phase_position(t)?.norm();
            if let Some(e) = earlier {
                norm_bound.record(e - here - tol::MONO, t);
            }
            earlier = Some(here);
        }
        if let Some(e) = earlier {
            norm_bound.record(e - full.phase_position(t)?.norm() - tol::MONO, t);
        }
    }

    // (d) later cuts spread less: angles between two snapshots of the same
    // cut trajectory shrink as the cut moves later, for snapshot times at or
    // after the earlier cut. The base trajectory is the latest "cut" here.
    let mut spread = MonotonicityReport::new(Claim::SpreadDominance);
    for (i, earlier_ct) in cut_trajs.iter().enumerate() {
        let u = earlier_ct.cut_time();
        let snap: Vec<f64> = probes.iter().copied().filter(|&t| t >= u).collect();
        for si in 0..snap.len() {
            for sj in (si + 1)..snap.len() {
                let (s, t) = (snap[si], snap[sj]);
                let wide = angle_between(
                    &earlier_ct.phase_position(s)?,
                    &earlier_ct.phase_position(t)?,
                )?;
                for later_ct in &cut_trajs[i + 1..] {
                    let narrow = angle_between(
                        &later_ct.phase_position(s)?,
                        &later_ct.phase_position(t)?,
                    )?;
                    spread.record(narrow - wide - tol::MONO, s);
                }
                let base = angle_between(&full.phase_position(s)?, &full.phase_position(t)?)?;
                spread.record(base - wide - tol::MONO, s);
            }
        }
    }

    // (e) |x| monotone away from the origin in both directions.
    let mut norm_mono = MonotonicityReport::new(Claim::NormMonotone);
    {
        let mut prev: Option<(f64, f64)> = None;
        for &t in probes.iter().filter(|&&t| t >= 0.0) {
            let norm = full.phase_position(t)?.norm();
            if let Some((_, p)) = prev {
                norm_mono.record(p - norm - tol::MONO, t);
            }
            prev = Some((t, norm));
        }
        prev = None;
        for &t in probes.iter().filter(|&&t| t <= 0.0) {
            let norm = full.phase_position(t)?.norm();
            if let Some((_, p)) = prev {
                norm_mono.record(norm - p - tol::MONO, t);
            }
            prev = Some((t, norm));
        }
    }

    Ok(vec![
        angle_dwn.finish(),
        angle_cut.finish(),
        norm_bound.finish(),
        spread.finish(),
        norm_mono.finish(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::BallState;

    fn state(time: f64, dim: usize, balls: Vec<(Vec<f64>, Vec<f64>)>) -> SystemState {
        SystemState::new(
            time,
            dim,
            balls
                .into_iter()
                .map(|(c, v)| BallState {
                    center: c.into(),
                    velocity: v.into(),
                })
                .collect(),
        )
        .unwrap()
    }

    fn oblique_pair() -> SystemState {
        // Off-axis two-ball collision; normalized by the pipeline.
        state(
            0.0,
            2,
            vec![
                (vec![-6.0, 0.4], vec![1.0, 0.0]),
                (vec![6.0, -0.4], vec![-1.0, 0.0]),
            ],
        )
    }

    #[test]
    fn full_trajectory_is_consistent_across_the_anchor() -> Result<()> {
        let (full, _) = normalized_from_state(&oblique_pair(), &SimOptions::default())?;
        // Positions continuous across the anchor.
        let before = full.phase_position(-1e-9)?;
        let after = full.phase_position(1e-9)?;
        assert!(before.sub(&after).norm() < 1e-6);
        // Linear motion matches on both sides of the anchor away from events.
        let x0 = full.phase_position(0.0)?;
        let v0 = full.phase_velocity(0.0, Side::Right)?;
        let eps = 1e-4;
        let pred = x0.add_scaled(eps, &v0);
        assert!(full.phase_position(eps)?.sub(&pred).norm() < 1e-10);
        Ok(())
    }

    #[test]
    fn derivative_of_norm_squared_is_twice_x_dot_v() -> Result<()> {
        let (full, _) = normalized_from_state(&oblique_pair(), &SimOptions::default())?;
        let t = 0.37;
        let h = 1e-6;
        let f = |t: f64| -> Result<f64> { Ok(full.phase_position(t)?.norm_sq()) };
        let numeric = (f(t + h)? - f(t - h)?) / (2.0 * h);
        let s = full.state_at(t, Side::Right)?;
        let analytic = 2.0 * s.phase_position().dot(&s.phase_velocity());
        assert!((numeric - analytic).abs() < 1e-4 * (1.0 + analytic.abs()));
        Ok(())
    }

    #[test]
    fn t0_of_a_symmetric_head_on_pair_is_the_collision_instant() -> Result<()> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = state(
            0.0,
            2,
            vec![
                (vec![-3.0, 0.0], vec![r, 0.0]),
                (vec![3.0, 0.0], vec![-r, 0.0]),
            ],
        );
        let full = FullTrajectory::from_state(&s, &SimOptions::default())?;
        let t0 = find_t0(&full)?;
        assert!((t0 - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
        Ok(())
    }

    #[test]
    fn t0_is_zero_when_x_and_v_are_orthogonal() -> Result<()> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = state(
            0.0,
            2,
            vec![
                (vec![-2.0, 0.0], vec![0.0, r]),
                (vec![2.0, 0.0], vec![0.0, -r]),
            ],
        );
        let full = FullTrajectory::from_state(&s, &SimOptions::default())?;
        let t0 = find_t0(&full)?;
        assert!(t0.abs() < 1e-9);
        Ok(())
    }

    #[test]
    fn t0_shifts_with_the_clock() -> Result<()> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mk = |time: f64| {
            state(
                time,
                2,
                vec![
                    (vec![-3.0, 0.1], vec![r, 0.0]),
                    (vec![3.0, -0.1], vec![-r, 0.0]),
                ],
            )
        };
        let t0_a = find_t0(&FullTrajectory::from_state(&mk(0.0), &SimOptions::default())?)?;
        let t0_b = find_t0(&FullTrajectory::from_state(&mk(5.0), &SimOptions::default())?)?;
        assert!((t0_b - t0_a - 5.0).abs() < 1e-8);
        Ok(())
    }

    #[test]
    fn normalization_pipeline_is_idempotent_at_the_origin() -> Result<()> {
        let (full, _) = normalized_from_state(&oblique_pair(), &SimOptions::default())?;
        let t0 = find_t0(&full)?;
        assert!(t0.abs() < tol::T0);
        Ok(())
    }

    #[test]
    fn time_reversal_reflects_alpha() -> Result<()> {
        let (full, _) = normalized_from_state(&oblique_pair(), &SimOptions::default())?;
        let t = 0.8;
        let alpha = full.alpha(t)?;
        let s = full.state_at(t, Side::Right)?;
        let reflected =
            angle_between(&s.phase_position(), &s.phase_velocity().neg())?;
        assert!((alpha + reflected - std::f64::consts::PI).abs() < 1e-12);
        Ok(())
    }

    #[test]
    fn alpha_decays_toward_zero_in_the_ballistic_tail() -> Result<()> {
        let (full, _) = normalized_from_state(&oblique_pair(), &SimOptions::default())?;
        let last = full.event_times().last().map(|&(t, _)| t).unwrap_or(0.0);
        let mut prev = f64::INFINITY;
        for k in 1..6 {
            let alpha = full.alpha(last + (10.0f64).powi(k))?;
            assert!(alpha < prev);
            prev = alpha;
        }
        assert!(prev < 1e-3);
        Ok(())
    }

    #[test]
    fn cut_trajectory_follows_then_freezes() -> Result<()> {
        let (full, _) = normalized_from_state(&oblique_pair(), &SimOptions::default())?;
        let cut = CutTrajectory::new(&full, 0.5)?;
        assert!(
            cut.phase_position(0.2)?
                .sub(&full.phase_position(0.2)?)
                .norm()
                < 1e-12
        );
        let frozen = cut.phase_velocity_after(100.0)?;
        assert!(
            frozen
                .sub(&full.phase_velocity(0.5, Side::Right)?)
                .norm()
                < 1e-12
        );
        // After the cut the motion is straight with the frozen velocity.
        let x1 = cut.phase_position(1.0)?;
        let x3 = cut.phase_position(3.0)?;
        let pred = x1.add_scaled(2.0, &frozen);
        assert!(x3.sub(&pred).norm() < 1e-12);
        Ok(())
    }

    #[test]
    fn alpha_strictly_decreases_on_a_ballistic_cut() -> Result<()> {
        let (full, _) = normalized_from_state(&oblique_pair(), &SimOptions::default())?;
        let cut = CutTrajectory::new(&full, 0.3)?;
        let (a1, a2, a3) = (cut.alpha(1.0)?, cut.alpha(2.0)?, cut.alpha(4.0)?);
        assert!(a1 > a2 && a2 > a3);
        Ok(())
    }

    #[test]
    fn order_frame_sorts_with_index_tie_break() -> Result<()> {
        let s = state(
            0.0,
            2,
            vec![
                (vec![3.0, 0.0], vec![0.5, 0.0]),
                (vec![-4.0, 1.0], vec![-0.25, 0.0]),
                (vec![0.5, 80.0], vec![-0.25, 0.0]),
            ],
        );
        let frame = order_frame(&s, 0)?;
        assert_eq!(frame.permutation, vec![1, 2, 0]);
        assert_eq!(frame.sorted_positions, vec![-4.0, 0.5, 3.0]);
        assert_eq!(frame.rank_velocities, vec![-0.25, -0.25, 0.5]);
        assert!((frame.partial_sums[2] - 0.0).abs() < 1e-15);

        // Equal coordinates on axis 1 for balls 0 and 1: index order wins.
        let tied = state(
            0.0,
            2,
            vec![
                (vec![0.0, 5.0], vec![0.0, 0.0]),
                (vec![80.0, 5.0], vec![0.0, 0.0]),
                (vec![40.0, -1.0], vec![0.0, 0.0]),
            ],
        );
        let frame = order_frame(&tied, 1)?;
        assert_eq!(frame.permutation, vec![2, 0, 1]);
        Ok(())
    }

    #[test]
    fn f_monotone_on_a_three_ball_line() -> Result<()> {
        let s = state(
            0.0,
            2,
            vec![
                (vec![-8.0, 0.0], vec![1.0, 0.0]),
                (vec![0.0, 0.0], vec![0.0, 0.0]),
                (vec![9.0, 0.0], vec![-1.0, 0.0]),
            ],
        );
        let (full, _) = normalized_from_state(&s, &SimOptions::default())?;
        for axis in 0..2 {
            let report = check_f_monotone(&full, axis, &suggest_samples(&full, 25))?;
            assert!(report.pass, "axis {axis}: {report:?}");
            assert!(report.checked > 0);
        }
        Ok(())
    }

    #[test]
    fn lemma_suite_passes_on_a_three_ball_instance() -> Result<()> {
        let s = state(
            0.0,
            2,
            vec![
                (vec![-8.0, 0.3], vec![0.9, 0.0]),
                (vec![0.0, -0.3], vec![0.1, 0.05]),
                (vec![9.0, 0.2], vec![-0.8, -0.02]),
            ],
        );
        let (full, _) = normalized_from_state(&s, &SimOptions::default())?;
        assert!(full.forward().collision_count() >= 1);
        let samples = suggest_samples(&full, 20);
        let cuts = vec![0.0, 0.5, 1.0, 2.0, 4.0];
        let reports = check_lemma_suite(&full, &cuts, &samples)?;
        assert_eq!(reports.len(), 5);
        for r in &reports {
            assert!(r.pass, "{} failed: {r:?}", r.claim.id());
            assert!(r.checked > 0, "{} checked nothing", r.claim.id());
        }
        Ok(())
    }

    #[test]
    fn negative_cut_times_are_rejected() -> Result<()> {
        let (full, _) = normalized_from_state(&oblique_pair(), &SimOptions::default())?;
        assert!(matches!(
            check_lemma_suite(&full, &[-1.0], &[]),
            Err(Error::InvalidInput(_))
        ));
        Ok(())
    }
}
