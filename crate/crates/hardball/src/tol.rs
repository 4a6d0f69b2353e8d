//! Numeric tolerances used across the crate.
//!
//! All defaults live here so that every guard in the simulator and every
//! verification threshold is pinned in one place. The values reflect the
//! scales the library works at: normalized states have phase speed 1 and
//! coordinates within a few dozen units, so double roundoff sits around
//! 1e-16 per operation and accumulates through at most a few thousand events.

/// Acceptable deviation of a colliding pair's center distance from 2.
pub const CONTACT: f64 = 1e-9;

/// Acceptable penetration below center distance 2 at any checked time.
pub const OVERLAP: f64 = 1e-9;

/// Conservation drift allowed on momentum, energy, and center of mass.
pub const CONSERVE: f64 = 1e-9;

/// Threshold under which a float is treated as exactly zero. Also the
/// half-width of the tangential-contact window: a contact with normal
/// velocity in `[-ZERO, 0]` counts as "no collision", which keeps the strict
/// approach inequality robust under roundoff.
pub const ZERO: f64 = 1e-12;

/// Two chained contact events closer in time than this are a hard error:
/// the collision law is defined only for isolated pair collisions.
pub const SIMULTANEOUS: f64 = 1e-9;

/// Slack allowed when checking that a theoretically monotone functional is
/// monotone on a sample grid. Dominated by arccos error near the ends of
/// `[0, pi]`, which is O(sqrt(ulp)) ~ 1e-8.
pub const MONO: f64 = 1e-8;

/// Target width of the bisection bracket for the time-origin search.
pub const T0: f64 = 1e-9;

/// Bisection iterations used by the time-origin search; halving a bracket of
/// width up to ~1e9 this many times lands below `T0`.
pub const T0_ITERS: u32 = 60;

/// The simulation aborts if any pair's center distance drops below
/// `2 - DRIFT_ABORT`; penetration past this point means accumulated roundoff
/// has corrupted the trajectory.
pub const DRIFT_ABORT: f64 = 1e-6;

/// Default cap on the number of collision events per simulation.
pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

/// Runtime-adjustable copies of the tolerance set, for CLI overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub contact: f64,
    pub overlap: f64,
    pub conserve: f64,
    pub zero: f64,
    pub simultaneous: f64,
    pub mono: f64,
    pub t0: f64,
    pub drift_abort: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            contact: CONTACT,
            overlap: OVERLAP,
            conserve: CONSERVE,
            zero: ZERO,
            simultaneous: SIMULTANEOUS,
            mono: MONO,
            t0: T0,
            drift_abort: DRIFT_ABORT,
        }
    }
}
