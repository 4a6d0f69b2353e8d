use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// All balls share one velocity; the unit-energy frame does not exist.
    #[error("zero energy: all velocities are equal, no relative motion to normalize")]
    ZeroEnergy,

    #[error("balls {j} and {k} are not in contact: center distance {dist}")]
    NotInContact { j: usize, k: usize, dist: f64 },

    #[error("balls {j} and {k} are in contact but not approaching")]
    NotApproaching { j: usize, k: usize },

    #[error("angle undefined: vector norm below zero tolerance")]
    ZeroVector,

    /// Two or more contact pairs chained through shared balls (or through
    /// balls at rest in contact) within the simultaneity tolerance. The pair
    /// collision law does not extend to this configuration.
    #[error("simultaneous chained collision at t = {time}: pairs {pairs:?}")]
    SimultaneousCollision {
        time: f64,
        pairs: Vec<(usize, usize)>,
    },

    /// A pair's center distance fell below `2 - drift_abort`: accumulated
    /// roundoff has produced real penetration and the trajectory is invalid.
    #[error("overlap drift at t = {time}: pair ({j}, {k}) at center distance {dist}")]
    DriftExceeded {
        time: f64,
        j: usize,
        k: usize,
        dist: f64,
    },

    #[error("time {t} is outside the simulated span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    /// The angle functional does not cross pi/2 inside the searchable span.
    #[error("time-origin search: the span does not bracket the pi/2 crossing")]
    NotBracketed,

    #[error("no velocity gap: single linkage at threshold {threshold} leaves one cluster")]
    NoGap { threshold: f64 },

    #[error("trajectory has no collisions")]
    NoCollisions,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rejection sampling exhausted after {attempts} attempts")]
    SamplingExhausted { attempts: usize },
}
