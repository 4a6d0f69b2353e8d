//! Contact graphs, upcrossing counters, partitions, and dense clusters.
//!
//! Everything here is about which balls are near which, and for how long.
//! The contact graph at scale `rho` joins balls within distance `2 + rho`;
//! upcrossing ledgers count how often a pair's distance climbs through the
//! band `[2 + rho/2, 2 + rho]`; the partition constructions split the system
//! into subfamilies that provably stop interacting; and
//! [`dense_cluster_search`] extracts a `rho`-connected set of balls carrying
//! a pigeonhole share of all collisions.
//!
//! All checks are exact up to floating point: squared pair distances are
//! quadratics in time on each ballistic segment, so threshold crossings,
//! interior minima, and upcrossing times come from closed-form roots rather
//! than sampling.

use std::collections::{BTreeMap, BTreeSet};

use crate::dynamics::SystemState;
use crate::engine::{Side, Trajectory};
use crate::error::{Error, Result};
use crate::functionals::{Claim, MonotonicityReport};

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins, keeping component labels deterministic.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }

    fn labels(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|i| self.find(i)).collect()
    }
}

/// Coefficients `(a, b, c)` of the squared distance `|dx + tau dv|^2` of a
/// pair, as a quadratic in the time `tau` since the segment start.
fn pair_quadratic(state: &SystemState, j: usize, k: usize) -> (f64, f64, f64) {
    let dx = state.ball(j).center.sub(&state.ball(k).center);
    let dv = state.ball(j).velocity.sub(&state.ball(k).velocity);
    (dv.norm_sq(), 2.0 * dx.dot(&dv), dx.norm_sq())
}

/// Solution interval of `a tau^2 + b tau + c <= 0` for convex `a >= 0`.
/// `a == 0` forces `b == 0` here (zero relative velocity), so the segment is
/// constant: the whole line or nothing.
fn sublevel(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a <= 0.0 {
        return if c <= 0.0 {
            Some((f64::NEG_INFINITY, f64::INFINITY))
        } else {
            None
        };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some(((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)))
}

/// The contact graph at one instant: balls joined when their centers are
/// within `2 + rho` (boundary inclusive).
#[derive(Debug, Clone)]
pub struct ContactGraph {
    pub time: f64,
    pub rho: f64,
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    labels: Vec<usize>,
}

impl ContactGraph {
    pub fn same_component(&self, j: usize, k: usize) -> bool {
        self.labels[j] == self.labels[k]
    }

    pub fn spans(&self, balls: &[usize]) -> bool {
        match balls.split_first() {
            None => true,
            Some((&first, rest)) => rest.iter().all(|&b| self.labels[b] == self.labels[first]),
        }
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (ball, &label) in self.labels.iter().enumerate() {
            by_label.entry(label).or_default().push(ball);
        }
        by_label.into_values().collect()
    }
}

pub fn contact_graph(traj: &Trajectory, t: f64, rho: f64) -> Result<ContactGraph> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput("rho must be positive".into()));
    }
    let state = traj.state_at(t, Side::Right)?;
    let n = state.len();
    let thr2 = (2.0 + rho) * (2.0 + rho);
    let mut edges = Vec::new();
    let mut uf = UnionFind::new(n);
    for j in 0..n {
        for k in (j + 1)..n {
            let d = state.ball(j).center.sub(&state.ball(k).center);
            if d.norm_sq() <= thr2 {
                edges.push((j, k));
                uf.union(j, k);
            }
        }
    }
    let labels = uf.labels();
    Ok(ContactGraph {
        time: t,
        rho,
        n,
        edges,
        labels,
    })
}

/// Decide whether `balls` all lie in one component of the contact graph at
/// every instant of `[start, end]` (`end` may be infinite on terminal
/// trajectories). Connectivity is piecewise constant with breakpoints only
/// where some pair crosses `2 + rho`, so the check grid of endpoints, event
/// times, per-segment minima, exact crossing roots, and midpoints between
/// consecutive grid times decides the interval exactly.
pub fn is_rho_connected(
    traj: &Trajectory,
    balls: &[usize],
    start: f64,
    end: f64,
    rho: f64,
) -> Result<bool> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput("rho must be positive".into()));
    }
    if !(start <= end) {
        return Err(Error::InvalidInput("empty connectivity interval".into()));
    }
    let n = traj.initial().len();
    if balls.iter().any(|&b| b >= n) {
        return Err(Error::InvalidInput("ball index out of range".into()));
    }
    let (span_lo, span_hi) = (traj.span_start(), traj.span_end());
    if start < span_lo || end > span_hi {
        return Err(Error::OutOfSpan {
            t: if start < span_lo { start } else { end },
            start: span_lo,
            end: span_hi,
        });
    }
    let mut targets: Vec<usize> = balls.to_vec();
    targets.sort_unstable();
    targets.dedup();
    if targets.len() <= 1 {
        return Ok(true);
    }

    let thr2 = (2.0 + rho) * (2.0 + rho);
    let mut grid = vec![start];
    if end.is_finite() {
        grid.push(end);
    }
    for e in traj.events() {
        if e.time > start && e.time < end {
            grid.push(e.time);
        }
    }
    for seg in traj.segments() {
        let w_lo = seg.t_start.max(start);
        let w_hi = seg.t_end.min(end);
        if w_lo > w_hi {
            continue;
        }
        let (rel_lo, rel_hi) = (w_lo - seg.t_start, w_hi - seg.t_start);
        for j in 0..n {
            for k in (j + 1)..n {
                let (a, b, c) = pair_quadratic(seg.state, j, k);
                if a > 0.0 {
                    let vertex = -b / (2.0 * a);
                    if vertex > rel_lo && vertex < rel_hi {
                        grid.push(seg.t_start + vertex);
                    }
                }
                if let Some((r1, r2)) = sublevel(a, b, c - thr2) {
                    for r in [r1, r2] {
                        if r.is_finite() && r >= rel_lo && r <= rel_hi {
                            grid.push(seg.t_start + r);
                        }
                    }
                }
            }
        }
    }
    grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    grid.dedup();
    let mut checks = grid.clone();
    for w in grid.windows(2) {
        checks.push(0.5 * (w[0] + w[1]));
    }
    if end.is_infinite() {
        // Past the last breakpoint the graph no longer changes.
        checks.push(grid.last().unwrap() + 1.0);
    }

    for &t in &checks {
        let state = traj.state_at(t, Side::Right)?;
        let mut uf = UnionFind::new(n);
        for j in 0..n {
            for k in (j + 1)..n {
                let d = state.ball(j).center.sub(&state.ball(k).center);
                if d.norm_sq() <= thr2 {
                    uf.union(j, k);
                }
            }
        }
        let root = uf.find(targets[0]);
        if targets[1..].iter().any(|&b| uf.find(b) != root) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Upcrossing record of one pair: `taus[0]` is the window start `s`, then
/// alternating entry times (distance reaches `2 + rho/2`) and exit
/// completions (distance passes `2 + rho`). Strictly increasing from
/// `taus[1]` on; `taus[1]` may equal `s` when the pair starts inside.
#[derive(Debug, Clone)]
pub struct PairUpcrossings {
    pub pair: (usize, usize),
    pub taus: Vec<f64>,
}

impl PairUpcrossings {
    /// Completed upcrossings: the number of even-indexed stopping times
    /// (index 2 and up) that landed inside the window.
    pub fn sigma(&self) -> usize {
        (self.taus.len() - 1) / 2
    }

    /// Exit-completion times, in order.
    pub fn even_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.taus.iter().copied().skip(2).step_by(2)
    }
}

#[derive(Debug, Clone)]
pub struct UpcrossingLedger {
    pub rho: f64,
    pub start: f64,
    pub end: f64,
    pub pairs: Vec<PairUpcrossings>,
}

impl UpcrossingLedger {
    /// `S(s, t)`: completed upcrossings summed over all pairs.
    pub fn total(&self) -> usize {
        self.pairs.iter().map(|p| p.sigma()).sum()
    }

    /// All exit-completion times across pairs, ascending, with multiplicity.
    pub fn all_even_times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pairs.iter().flat_map(|p| p.even_times()).collect();
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out
    }

    /// Check the exit spacing guarantees: consecutive exit completions of a
    /// pair at least `rho / 2` apart, and the first at least `rho / 4` past
    /// the window start (distances change at rate at most 1).
    pub fn spacing_report(&self) -> MonotonicityReport {
        let slack = 1e-9;
        let mut report = MonotonicityReport::new(Claim::UpcrossingSpacing);
        for p in &self.pairs {
            let evens: Vec<f64> = p.even_times().collect();
            if let Some(&first) = evens.first() {
                report.record(self.start + self.rho / 4.0 - slack - first, first);
            }
            for w in evens.windows(2) {
                report.record(self.rho / 2.0 - slack - (w[1] - w[0]), w[1]);
            }
        }
        report.finish()
    }
}

/// Compute the exact upcrossing ledger of the band `[2 + rho/2, 2 + rho]`
/// on `[s, t]`. `t` may be infinite on terminal trajectories; ballistic
/// tails are resolved from the closed-form roots like any other segment.
pub fn upcrossings(traj: &Trajectory, s: f64, t: f64, rho: f64) -> Result<UpcrossingLedger> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput("rho must be positive".into()));
    }
    if !(s < t) {
        return Err(Error::InvalidInput(
            "upcrossing window must have positive length".into(),
        ));
    }
    let (span_lo, span_hi) = (traj.span_start(), traj.span_end());
    if s < span_lo || t > span_hi {
        return Err(Error::OutOfSpan {
            t: if s < span_lo { s } else { t },
            start: span_lo,
            end: span_hi,
        });
    }

    let lo2 = (2.0 + rho / 2.0) * (2.0 + rho / 2.0);
    let hi2 = (2.0 + rho) * (2.0 + rho);
    let n = traj.initial().len();
    let mut pairs = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for j in 0..n {
        for k in (j + 1)..n {
            let mut taus = vec![s];
            let mut seeking_entry = true;
            let mut from = s;
            for seg in traj.segments() {
                if seg.t_start > t {
                    break;
                }
                if seg.t_end < from {
                    continue;
                }
                let (a, b, c) = pair_quadratic(seg.state, j, k);
                loop {
                    let w_lo = from.max(seg.t_start) - seg.t_start;
                    let w_hi = t.min(seg.t_end) - seg.t_start;
                    if w_lo > w_hi {
                        break;
                    }
                    if seeking_entry {
                        let Some((r1, r2)) = sublevel(a, b, c - lo2) else {
                            break;
                        };
                        let cand = r1.max(w_lo);
                        if cand > r2 || cand > w_hi {
                            break;
                        }
                        from = seg.t_start + cand;
                        taus.push(from);
                        seeking_entry = false;
                    } else {
                        // The pair sits at or below 2 + rho/2 somewhere
                        // behind `from`, inside the hi sublevel interval;
                        // the first strict exit is its right endpoint.
                        let Some((_, r2)) = sublevel(a, b, c - hi2) else {
                            break;
                        };
                        let cand = r2.max(w_lo);
                        if cand > w_hi {
                            break;
                        }
                        from = seg.t_start + cand;
                        taus.push(from);
                        seeking_entry = true;
                    }
                }
            }
            debug_assert!(taus.windows(2).skip(1).all(|w| w[0] < w[1]));
            pairs.push(PairUpcrossings { pair: (j, k), taus });
        }
    }
    Ok(UpcrossingLedger {
        rho,
        start: s,
        end: t,
        pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    Velocity,
    Position,
}

/// A two-set split of the balls with a guaranteed gap between the sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub n1: Vec<usize>,
    pub n2: Vec<usize>,
    pub separation_time: f64,
    pub gap_kind: GapKind,
    pub threshold: f64,
}

/// Single-linkage component labels: join every pair closer than `threshold`.
fn single_linkage(n: usize, threshold: f64, dist: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let mut uf = UnionFind::new(n);
    for j in 0..n {
        for k in (j + 1)..n {
            if dist(j, k) < threshold {
                uf.union(j, k);
            }
        }
    }
    uf.labels()
}

fn split_by_labels(labels: &[usize], anchor: usize) -> (Vec<usize>, Vec<usize>) {
    let target = labels[anchor];
    let mut n1 = Vec::new();
    let mut n2 = Vec::new();
    for (ball, &label) in labels.iter().enumerate() {
        if label == target {
            n1.push(ball);
        } else {
            n2.push(ball);
        }
    }
    (n1, n2)
}

/// Split the balls by the velocity gap at time `T`: single-linkage clusters
/// of `{v^k(T+)}` at threshold `1 / (sqrt(n) (n-1))`, the cluster holding
/// the fastest ball against the rest. In the normalized frame the fastest
/// ball moves at speed at least `1 / sqrt(n)`, so a single cluster is
/// impossible in exact arithmetic; observing one signals numerical failure.
pub fn velocity_gap_partition(traj: &Trajectory, t_at: f64) -> Result<Partition> {
    let state = traj.state_at(t_at, Side::Right)?;
    let n = state.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "a partition needs at least two balls".into(),
        ));
    }
    let threshold = 1.0 / ((n as f64).sqrt() * (n as f64 - 1.0));
    let labels = single_linkage(n, threshold, |j, k| {
        state.ball(j).velocity.sub(&state.ball(k).velocity).norm()
    });
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::NoGap { threshold });
    }
    let fastest = (0..n)
        .max_by(|&j, &k| {
            let (a, b) = (
                state.ball(j).velocity.norm_sq(),
                state.ball(k).velocity.norm_sq(),
            );
            a.partial_cmp(&b).unwrap().then(k.cmp(&j))
        })
        .unwrap();
    let (n1, n2) = split_by_labels(&labels, fastest);
    Ok(Partition {
        n1,
        n2,
        separation_time: t_at,
        gap_kind: GapKind::Velocity,
        threshold,
    })
}

/// Split the balls by position gaps at time `s`: single-linkage clusters of
/// the centers `{x^k(s)}` at threshold `|x(s)| n^{-3/2}`, anchored at the
/// ball farthest from the center of mass. `None` when the positions chain
/// into a single cluster at that threshold.
pub fn position_gap_partition(traj: &Trajectory, s: f64) -> Result<Option<Partition>> {
    let state = traj.state_at(s, Side::Right)?;
    let n = state.len();
    if n < 2 {
        return Ok(None);
    }
    let threshold = state.phase_position().norm() * (n as f64).powf(-1.5);
    let labels = single_linkage(n, threshold, |j, k| state.pair_distance(j, k));
    if labels.iter().all(|&l| l == labels[0]) {
        return Ok(None);
    }
    let farthest = (0..n)
        .max_by(|&j, &k| {
            let (a, b) = (state.ball(j).center.norm_sq(), state.ball(k).center.norm_sq());
            a.partial_cmp(&b).unwrap().then(k.cmp(&j))
        })
        .unwrap();
    let (n1, n2) = split_by_labels(&labels, farthest);
    Ok(Some(Partition {
        n1,
        n2,
        separation_time: s,
        gap_kind: GapKind::Position,
        threshold,
    }))
}

/// Smallest distance between any cross pair of the partition over
/// `[from, span end]`, with the time where it is attained. Exact per
/// segment: the squared distance is convex, so the minimum sits at the
/// clamped vertex.
pub fn min_cross_separation(
    traj: &Trajectory,
    partition: &Partition,
    from: f64,
) -> Result<(f64, f64)> {
    let n = traj.initial().len();
    if partition.n1.iter().chain(&partition.n2).any(|&b| b >= n) {
        return Err(Error::InvalidInput("partition index out of range".into()));
    }
    let (span_lo, span_hi) = (traj.span_start(), traj.span_end());
    if from < span_lo || from > span_hi {
        return Err(Error::OutOfSpan {
            t: from,
            start: span_lo,
            end: span_hi,
        });
    }
    let mut best = (f64::INFINITY, from);
    for seg in traj.segments() {
        let w_lo = seg.t_start.max(from);
        if w_lo > seg.t_end {
            continue;
        }
        let (rel_lo, rel_hi) = (w_lo - seg.t_start, seg.t_end - seg.t_start);
        for &l in &partition.n1 {
            for &k in &partition.n2 {
                let dx = seg.state.ball(l).center.sub(&seg.state.ball(k).center);
                let dv = seg.state.ball(l).velocity.sub(&seg.state.ball(k).velocity);
                let a = dv.norm_sq();
                let tau = if a > 0.0 {
                    (-dx.dot(&dv) / a).clamp(rel_lo, rel_hi)
                } else {
                    rel_lo
                };
                let d2 = dx.add_scaled(tau, &dv).norm_sq();
                if d2 < best.0 {
                    best = (d2, seg.t_start + tau);
                }
            }
        }
    }
    Ok((best.0.sqrt(), best.1))
}

/// True when every cross pair keeps distance above `5/2` from `t_star` on.
pub fn verify_separation(traj: &Trajectory, partition: &Partition, t_star: f64) -> Result<bool> {
    Ok(min_cross_separation(traj, partition, t_star)?.0 > 2.5)
}

pub fn separation_report(
    traj: &Trajectory,
    partition: &Partition,
    t_star: f64,
) -> Result<MonotonicityReport> {
    let mut report = MonotonicityReport::new(Claim::SeparationTStar);
    let (dist, at) = min_cross_separation(traj, partition, t_star)?;
    report.record(2.5 - dist, at);
    Ok(report.finish())
}

/// A set of balls that stays `rho`-connected over an interval while
/// absorbing a guaranteed share of all collisions.
#[derive(Debug, Clone)]
pub struct DenseCluster {
    pub balls: Vec<usize>,
    /// `[start, end)`; the end may be infinite.
    pub interval: (f64, f64),
    /// Collisions among `balls` inside the interval.
    pub count: usize,
    pub rho: f64,
    pub n: usize,
    /// `M`: the number of pieces the exit-completion times cut `[0, inf)`
    /// into, counting multiplicity.
    pub split_intervals: usize,
    pub total_collisions: usize,
    /// Result of the `is_rho_connected` self-check on the closed interval.
    pub connected: bool,
}

impl DenseCluster {
    /// The guaranteed share: `total / (2 M n^4)`.
    pub fn pigeonhole_floor(&self) -> f64 {
        self.total_collisions as f64
            / (2.0 * self.split_intervals as f64 * (self.n as f64).powi(4))
    }
}

/// Extract a dense `rho`-connected cluster, mirroring the counting argument
/// step for step: split the half-line at every exit-completion time, pick
/// the piece with the most collisions, split that piece at each time a new
/// pair first collides, pick the densest sub-piece `[u_i, u_{i+1})`, build
/// the collision relation on `[piece start, u_i]`, and return the
/// transitive-closure class with the most collisions in the sub-piece. No
/// exit completion happens inside the piece, so every pair of the class
/// stays within `2 + rho` there, making its ball set `rho`-connected.
pub fn dense_cluster_search(traj: &Trajectory, rho: f64) -> Result<DenseCluster> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput("rho must be positive".into()));
    }
    let events = traj.events();
    if events.is_empty() {
        return Err(Error::NoCollisions);
    }
    let n = traj.initial().len();
    let s0 = traj.span_start();
    let span_hi = traj.span_end();
    if !(span_hi > s0) {
        return Err(Error::InvalidInput("trajectory span is a single instant".into()));
    }

    let ledger = upcrossings(traj, s0, span_hi, rho)?;
    let splits = ledger.all_even_times();
    let m_intervals = splits.len() + 1;
    let mut bounds = vec![s0];
    for &e in &splits {
        if bounds.last() != Some(&e) {
            bounds.push(e);
        }
    }
    bounds.push(f64::INFINITY);

    let mut counts = vec![0usize; bounds.len() - 1];
    for e in events {
        let q = bounds.partition_point(|&b| b <= e.time) - 1;
        counts[q] += 1;
    }
    let piece = (0..counts.len())
        .max_by_key(|&q| (counts[q], std::cmp::Reverse(q)))
        .unwrap();
    let (t_lo, t_hi) = (bounds[piece], bounds[piece + 1]);
    let piece_events: Vec<_> = events
        .iter()
        .filter(|e| e.time >= t_lo && e.time < t_hi)
        .collect();

    // First-collision times of new pairs within the piece.
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut u_times: Vec<f64> = Vec::new();
    for e in &piece_events {
        if seen.insert(e.pair) && u_times.last() != Some(&e.time) {
            u_times.push(e.time);
        }
    }
    let mut ubounds = u_times;
    ubounds.push(t_hi);
    let mut ucounts = vec![0usize; ubounds.len() - 1];
    for e in &piece_events {
        let q = ubounds.partition_point(|&b| b <= e.time) - 1;
        ucounts[q] += 1;
    }
    let sub = (0..ucounts.len())
        .max_by_key(|&q| (ucounts[q], std::cmp::Reverse(q)))
        .unwrap();
    let (u_lo, u_hi) = (ubounds[sub], ubounds[sub + 1]);

    // Pairs that collided between the piece start and u_lo inclusive, and
    // their transitive-closure classes.
    let relation: BTreeSet<(usize, usize)> = piece_events
        .iter()
        .filter(|e| e.time <= u_lo)
        .map(|e| e.pair)
        .collect();
    let mut uf = UnionFind::new(n);
    for &(a, b) in &relation {
        uf.union(a, b);
    }
    let mut class_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &piece_events {
        if e.time >= u_lo && e.time < u_hi {
            debug_assert!(relation.contains(&e.pair));
            *class_counts.entry(uf.find(e.pair.0)).or_default() += 1;
        }
    }
    let (&best_root, &count) = class_counts
        .iter()
        .max_by_key(|&(root, c)| (*c, std::cmp::Reverse(*root)))
        .expect("densest sub-piece holds at least one collision");
    let ball_set: BTreeSet<usize> = relation
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .filter(|&x| uf.find(x) == best_root)
        .collect();
    let balls: Vec<usize> = ball_set.into_iter().collect();

    // Self-check on the closed interval; connectivity extends to the right
    // endpoint by continuity (the boundary edge condition is inclusive).
    let check_end = if u_hi.is_finite() { u_hi } else { span_hi };
    let connected = is_rho_connected(traj, &balls, u_lo, check_end, rho)?;

    Ok(DenseCluster {
        balls,
        interval: (u_lo, u_hi),
        count,
        rho,
        n,
        split_intervals: m_intervals,
        total_collisions: events.len(),
        connected,
    })
}
