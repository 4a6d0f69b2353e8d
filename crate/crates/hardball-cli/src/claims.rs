//! The nine-claim verification suite behind `hardball verify`.
//!
//! Takes an anchored full trajectory (time origin at the angle crossing)
//! and checks every monotone functional, the order-statistics partial
//! sums, the velocity-gap separation, and the upcrossing ledger against
//! its closed-form ceiling. Each claim reports its tightest margin; a
//! positive excess anywhere fails the claim.

use hardball::bounds::{partition_times, upcrossing_ceiling};
use hardball::cluster::{separation_report, upcrossings, velocity_gap_partition};
use hardball::functionals::{
    check_f_monotone, check_lemma_suite, suggest_samples, Claim, FullTrajectory,
    MonotonicityReport,
};
use hardball::{Error, Result};

#[derive(Debug, Clone)]
pub struct ClaimOutcome {
    pub id: &'static str,
    pub pass: bool,
    pub checked: usize,
    pub worst_excess: f64,
    pub worst_at: Option<f64>,
    pub flags: Vec<String>,
}

impl ClaimOutcome {
    fn from_report(r: MonotonicityReport) -> Self {
        ClaimOutcome {
            id: r.claim.id(),
            pass: r.pass,
            checked: r.checked,
            worst_excess: r.worst_excess,
            worst_at: r.worst_at,
            flags: r.flags,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClaimParams {
    pub rho: f64,
    pub samples: usize,
    pub cuts: usize,
}

/// Cut times spread evenly over the positive collision instants; plain
/// ballistic cuts when the trajectory has none.
fn pick_cuts(full: &FullTrajectory, want: usize) -> Vec<f64> {
    let times: Vec<f64> = full
        .event_times()
        .iter()
        .map(|(t, _)| *t)
        .filter(|t| *t > 0.0)
        .collect();
    if times.is_empty() {
        return vec![0.0, 0.5, 1.0];
    }
    let want = want.max(1);
    let mut cuts: Vec<f64> = if times.len() <= want {
        times
    } else {
        (0..want)
            .map(|i| times[i * (times.len() - 1) / (want - 1).max(1)])
            .collect()
    };
    cuts.dedup();
    cuts
}

/// Run all nine claims, in report order: the five cut-trajectory lemmas,
/// the order-statistics sums, the partition separation, and the two
/// upcrossing claims.
pub fn run_all(full: &FullTrajectory, p: &ClaimParams) -> Result<Vec<ClaimOutcome>> {
    let samples = suggest_samples(full, p.samples);
    let cuts = pick_cuts(full, p.cuts);

    let mut out: Vec<ClaimOutcome> = Vec::with_capacity(9);
    for r in check_lemma_suite(full, &cuts, &samples)? {
        out.push(ClaimOutcome::from_report(r));
    }

    let mut f = ClaimOutcome {
        id: Claim::FMonotone.id(),
        pass: true,
        checked: 0,
        worst_excess: f64::NEG_INFINITY,
        worst_at: None,
        flags: Vec::new(),
    };
    for axis in 0..full.dim() {
        let r = check_f_monotone(full, axis, &samples)?;
        f.pass &= r.pass;
        f.checked += r.checked;
        if r.worst_excess > f.worst_excess {
            f.worst_excess = r.worst_excess;
            f.worst_at = r.worst_at;
        }
        f.flags
            .extend(r.flags.into_iter().map(|m| format!("axis {axis}: {m}")));
    }
    if f.checked == 0 {
        f.worst_excess = 0.0;
    }
    out.push(f);

    // Velocity-gap partition at T, cross-separation measured from T* on.
    // A missing gap is a claim failure, not a crash: the partition is
    // supposed to exist for every normalized trajectory.
    let n = full.ball_count();
    let x0 = full.phase_position(0.0)?.norm();
    let (t_gap, t_star) = partition_times(n, x0)?;
    match velocity_gap_partition(full.forward(), t_gap) {
        Ok(partition) => out.push(ClaimOutcome::from_report(separation_report(
            full.forward(),
            &partition,
            t_star,
        )?)),
        Err(Error::NoGap { threshold }) => out.push(ClaimOutcome {
            id: Claim::SeparationTStar.id(),
            pass: false,
            checked: 1,
            worst_excess: f64::INFINITY,
            worst_at: Some(t_gap),
            flags: vec![format!("no velocity gap at threshold {threshold}")],
        }),
        Err(e) => return Err(e),
    }

    // Upcrossing ledger from the time origin over the whole simulated span.
    let fwd = full.forward();
    let s = fwd.span_start().max(0.0);
    let ledger = upcrossings(fwd, s, fwd.span_end(), p.rho)?;
    out.push(ClaimOutcome::from_report(ledger.spacing_report()));

    let total = ledger.total() as f64;
    let ceiling = upcrossing_ceiling(n, p.rho)?;
    let mut flags = Vec::new();
    if p.rho >= 0.25 {
        flags.push(format!("rho {} outside the proved range (0, 1/4)", p.rho));
    }
    out.push(ClaimOutcome {
        id: Claim::SBound.id(),
        pass: total <= ceiling,
        checked: 1,
        worst_excess: total - ceiling,
        worst_at: None,
        flags,
    });

    Ok(out)
}

/// Combine per-instance outcomes claim by claim: a claim passes only when
/// it passes everywhere, and the reported excess is the worst seen.
pub fn merge(per_instance: Vec<Vec<ClaimOutcome>>) -> Vec<ClaimOutcome> {
    let mut iter = per_instance.into_iter();
    let mut merged = iter.next().expect("at least one instance");
    for inst in iter {
        for (m, c) in merged.iter_mut().zip(inst) {
            debug_assert_eq!(m.id, c.id);
            m.pass &= c.pass;
            m.checked += c.checked;
            if c.worst_excess > m.worst_excess {
                m.worst_excess = c.worst_excess;
                m.worst_at = c.worst_at;
            }
            m.flags.extend(c.flags);
        }
    }
    for m in &mut merged {
        m.flags.truncate(20);
    }
    merged
}
