//! States and the instantaneous collision law.
//!
//! The model: `n` balls of radius 1 and equal mass move in `R^d`. Between
//! contacts every ball is ballistic. When two centers reach distance 2 with
//! negative relative normal velocity, the balls exchange their velocity
//! components along the contact axis and keep the orthogonal components.
//! That exchange is the unique outcome conserving momentum and kinetic
//! energy for equal masses.
//!
//! Everything downstream assumes the normalized frame: total momentum zero,
//! center of mass at the origin, total kinetic energy `sum |v^j|^2 = 1`.
//! [`normalize_frame`] moves any state with some relative motion into that
//! frame by a Galilean boost, a translation, and a time rescaling; none of
//! the three changes which collisions happen or in which order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;
use crate::vector::Vector;

/// One ball: center and velocity, both of the system's spatial dimension.
/// Radius 1 and unit mass are fixed by the model, not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub center: Vector,
    pub velocity: Vector,
}

/// A snapshot of all balls at one time.
///
/// Invariants enforced at construction and preserved by every operation in
/// this crate: all coordinates finite, all balls share the dimension, and no
/// two centers are closer than `2 - tol::OVERLAP`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    time: f64,
    dim: usize,
    balls: Vec<BallState>,
}

impl SystemState {
    pub fn new(time: f64, dim: usize, balls: Vec<BallState>) -> Result<Self> {
        let state = SystemState { time, dim, balls };
        state.validate()?;
        Ok(state)
    }

    /// Re-check every construction invariant. Needed after deserializing,
    /// which bypasses [`SystemState::new`].
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if self.balls.is_empty() {
            return Err(Error::InvalidInput("at least one ball required".into()));
        }
        if !self.time.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite time {}", self.time)));
        }
        for (i, b) in self.balls.iter().enumerate() {
            if b.center.dim() != self.dim || b.velocity.dim() != self.dim {
                return Err(Error::InvalidInput(format!(
                    "ball {i}: expected dimension {}, got center {} / velocity {}",
                    self.dim,
                    b.center.dim(),
                    b.velocity.dim()
                )));
            }
            if !b.center.is_finite() || !b.velocity.is_finite() {
                return Err(Error::InvalidInput(format!("ball {i}: non-finite coordinate")));
            }
        }
        for j in 0..self.balls.len() {
            for k in (j + 1)..self.balls.len() {
                let dist = self.pair_distance(j, k);
                if dist < 2.0 - tol::OVERLAP {
                    return Err(Error::InvalidInput(format!(
                        "balls {j} and {k} overlap: center distance {dist}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of balls.
    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn balls(&self) -> &[BallState] {
        &self.balls
    }

    pub fn ball(&self, i: usize) -> &BallState {
        &self.balls[i]
    }

    pub fn pair_distance(&self, j: usize, k: usize) -> f64 {
        self.balls[j].center.dist(&self.balls[k].center)
    }

    /// All centers concatenated: the phase position `x` in `R^{dn}`.
    pub fn phase_position(&self) -> Vector {
        Vector::concat(self.balls.iter().map(|b| &b.center))
    }

    /// All velocities concatenated: the phase velocity `v` in `R^{dn}`.
    pub fn phase_velocity(&self) -> Vector {
        Vector::concat(self.balls.iter().map(|b| &b.velocity))
    }

    /// Total momentum (equal unit masses: the sum of velocities).
    pub fn momentum(&self) -> Vector {
        let mut m = Vector::zeros(self.dim);
        for b in &self.balls {
            m = m.add(&b.velocity);
        }
        m
    }

    pub fn center_of_mass(&self) -> Vector {
        let mut c = Vector::zeros(self.dim);
        for b in &self.balls {
            c = c.add(&b.center);
        }
        c.scale(1.0 / self.balls.len() as f64)
    }

    /// Total kinetic energy `sum |v^j|^2` (equal to `|v|^2` of the phase
    /// velocity; 1 in the normalized frame).
    pub fn energy(&self) -> f64 {
        self.balls.iter().map(|b| b.velocity.norm_sq()).sum()
    }

    /// Move every ball ballistically for `dt` and advance the clock.
    /// Does not check for tunneling; callers advance at most to the next
    /// predicted contact.
    pub(crate) fn advance(&mut self, dt: f64) {
        for b in &mut self.balls {
            b.center = b.center.add_scaled(dt, &b.velocity);
        }
        self.time += dt;
    }

    pub(crate) fn set_velocity(&mut self, i: usize, v: Vector) {
        debug_assert_eq!(v.dim(), self.dim);
        self.balls[i].velocity = v;
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.time = t;
    }
}

/// The geometry of a pair at contact: ordered indices `j < k` and the unit
/// axis from `k`'s center toward `j`'s center.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactFrame {
    pub j: usize,
    pub k: usize,
    pub unit_axis: Vector,
}

/// Build the contact frame for a pair whose centers are at distance 2
/// (within `tol::CONTACT`). Indices in either order; the frame is returned
/// with `j < k`.
pub fn contact_frame(state: &SystemState, j: usize, k: usize) -> Result<ContactFrame> {
    let (j, k) = order_pair(state, j, k)?;
    let dist = state.pair_distance(j, k);
    if (dist - 2.0).abs() > tol::CONTACT {
        return Err(Error::NotInContact { j, k, dist });
    }
    let axis = state.balls[j].center.sub(&state.balls[k].center).unit()?;
    Ok(ContactFrame { j, k, unit_axis: axis })
}

/// True iff the pair at contact is strictly approaching:
/// `(v^j - v^k) . (x^j - x^k) < 0`. A tangential contact, with the dot
/// product in `[-tol::ZERO, 0]`, counts as not approaching; the collision
/// law requires the strict inequality.
pub fn approach_check(state: &SystemState, j: usize, k: usize) -> Result<bool> {
    let frame = contact_frame(state, j, k)?;
    let (j, k) = (frame.j, frame.k);
    let rel_v = state.balls[j].velocity.sub(&state.balls[k].velocity);
    let rel_x = state.balls[j].center.sub(&state.balls[k].center);
    Ok(rel_v.dot(&rel_x) < -tol::ZERO)
}

/// Apply the equal-mass collision law to an approaching pair at contact:
/// both balls swap their velocity components along the contact axis.
/// Returns the post-collision state; positions and time are unchanged.
pub fn resolve_collision(state: &SystemState, j: usize, k: usize) -> Result<SystemState> {
    let frame = contact_frame(state, j, k)?;
    let (j, k) = (frame.j, frame.k);
    if !approach_check(state, j, k)? {
        return Err(Error::NotApproaching { j, k });
    }
    let u = &frame.unit_axis;
    let vj = &state.balls[j].velocity;
    let vk = &state.balls[k].velocity;
    // Normal component transferred from k to j (positive for an approaching
    // pair, by the sign of the approach inequality).
    let s = vk.sub(vj).dot(u);
    let mut out = state.clone();
    out.set_velocity(j, vj.add_scaled(s, u));
    out.set_velocity(k, vk.add_scaled(-s, u));
    Ok(out)
}

/// Negate every velocity. Elastic dynamics is reversible, so evolving the
/// reversed state forward replays the original history backward.
pub fn time_reverse(state: &SystemState) -> SystemState {
    let mut out = state.clone();
    for i in 0..out.len() {
        let v = out.balls[i].velocity.neg();
        out.set_velocity(i, v);
    }
    out
}

/// Map a state to the normalized frame: total momentum zero, center of mass
/// at the origin, total kinetic energy 1. Fails with [`Error::ZeroEnergy`]
/// when all balls share one velocity. The time stamp is preserved; the
/// energy rescaling reparametrizes the future, it does not move the present.
pub fn normalize_frame(state: &SystemState) -> Result<SystemState> {
    let n = state.len() as f64;
    let mean_v = state.momentum().scale(1.0 / n);
    let com = state.center_of_mass();

    let mut balls = Vec::with_capacity(state.len());
    let mut energy = 0.0;
    for b in state.balls() {
        let v = b.velocity.sub(&mean_v);
        energy += v.norm_sq();
        balls.push(BallState {
            center: b.center.sub(&com),
            velocity: v,
        });
    }
    let speed = energy.sqrt();
    if speed < tol::ZERO {
        return Err(Error::ZeroEnergy);
    }
    for b in &mut balls {
        b.velocity = b.velocity.scale(1.0 / speed);
    }
    SystemState::new(state.time(), state.dim(), balls)
}

fn order_pair(state: &SystemState, j: usize, k: usize) -> Result<(usize, usize)> {
    if j == k || j >= state.len() || k >= state.len() {
        return Err(Error::InvalidInput(format!(
            "pair ({j}, {k}) invalid for {} balls",
            state.len()
        )));
    }
    Ok((j.min(k), j.max(k)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_ball_state(x1: Vec<f64>, x2: Vec<f64>, v1: Vec<f64>, v2: Vec<f64>) -> SystemState {
        let d = x1.len();
        SystemState::new(
            0.0,
            d,
            vec![
                BallState { center: x1.into(), velocity: v1.into() },
                BallState { center: x2.into(), velocity: v2.into() },
            ],
        )
        .unwrap()
    }

    #[test]
    fn oblique_collision_exchanges_normal_components() -> Result<()> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = two_ball_state(
            vec![-1.0, 0.0],
            vec![1.0, 0.0],
            vec![r, r],
            vec![0.0, 0.0],
        );
        let out = resolve_collision(&s, 0, 1)?;
        let v1 = out.ball(0).velocity.as_slice();
        let v2 = out.ball(1).velocity.as_slice();
        assert!(v1[0].abs() < 1e-15 && (v1[1] - r).abs() < 1e-15);
        assert!((v2[0] - r).abs() < 1e-15 && v2[1].abs() < 1e-15);
        Ok(())
    }

    #[test]
    fn head_on_collision_swaps_velocities() -> Result<()> {
        let s = two_ball_state(
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.7, 0.0],
            vec![-0.7, 0.0],
        );
        let out = resolve_collision(&s, 0, 1)?;
        assert!((out.ball(0).velocity[0] + 0.7).abs() < 1e-15);
        assert!((out.ball(1).velocity[0] - 0.7).abs() < 1e-15);
        Ok(())
    }

    #[test]
    fn tangential_contact_is_not_a_collision() {
        // Relative velocity orthogonal to the contact axis.
        let s = two_ball_state(
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        );
        assert_eq!(approach_check(&s, 0, 1).unwrap(), false);
        assert!(matches!(
            resolve_collision(&s, 0, 1),
            Err(Error::NotApproaching { .. })
        ));
    }

    #[test]
    fn separated_pair_is_rejected() {
        let s = two_ball_state(
            vec![0.0, 0.0],
            vec![5.0, 0.0],
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
        );
        assert!(matches!(
            approach_check(&s, 0, 1),
            Err(Error::NotInContact { .. })
        ));
    }

    #[test]
    fn resolution_commutes_with_time_reversal() -> Result<()> {
        let s = two_ball_state(
            vec![0.3, -0.1, 0.0],
            vec![0.3 + 2.0 * (0.6f64), -0.1 + 2.0 * (0.8f64), 0.0],
            vec![0.4, 0.3, -0.2],
            vec![-0.5, -0.7, 0.1],
        );
        let resolved = resolve_collision(&s, 0, 1)?;
        let back = resolve_collision(&time_reverse(&resolved), 0, 1)?;
        let expect = time_reverse(&s);
        for i in 0..2 {
            for a in 0..3 {
                assert!((back.ball(i).velocity[a] - expect.ball(i).velocity[a]).abs() < 1e-14);
            }
        }
        Ok(())
    }

    #[test]
    fn collision_moves_phase_velocity_toward_phase_position() -> Result<()> {
        // x . (v_after - v_before) > 0: the sign identity behind every
        // monotone functional downstream.
        let s = two_ball_state(
            vec![1.0, 2.0],
            vec![1.0 + 1.2, 2.0 + 1.6],
            vec![0.9, 0.4],
            vec![-0.3, -0.8],
        );
        let out = resolve_collision(&s, 0, 1)?;
        let dv = out.phase_velocity().sub(&s.phase_velocity());
        assert!(s.phase_position().dot(&dv) > 1e-12);
        Ok(())
    }

    #[test]
    fn normalize_frame_reaches_the_normalized_frame() -> Result<()> {
        let s = two_ball_state(
            vec![-2.0, 1.0],
            vec![2.0, 1.0],
            vec![2.0, 0.0],
            vec![0.0, 0.0],
        );
        let n = normalize_frame(&s)?;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((n.ball(0).velocity[0] - r).abs() < 1e-15);
        assert!((n.ball(1).velocity[0] + r).abs() < 1e-15);
        assert!(n.momentum().norm() < 1e-15);
        assert!(n.center_of_mass().norm() < 1e-15);
        assert!((n.energy() - 1.0).abs() < 1e-15);
        // Pairwise distances are untouched.
        assert!((n.pair_distance(0, 1) - s.pair_distance(0, 1)).abs() < 1e-15);
        Ok(())
    }

    #[test]
    fn normalize_frame_is_idempotent() -> Result<()> {
        let s = two_ball_state(
            vec![0.0, 0.0, 3.0],
            vec![4.0, 1.0, -2.0],
            vec![1.0, -2.0, 0.5],
            vec![0.3, 0.3, 0.3],
        );
        let once = normalize_frame(&s)?;
        let twice = normalize_frame(&once)?;
        for i in 0..2 {
            for a in 0..3 {
                assert!((once.ball(i).center[a] - twice.ball(i).center[a]).abs() < 1e-12);
                assert!((once.ball(i).velocity[a] - twice.ball(i).velocity[a]).abs() < 1e-12);
            }
        }
        Ok(())
    }

    #[test]
    fn zero_relative_motion_cannot_be_normalized() {
        let s = two_ball_state(
            vec![0.0, 0.0],
            vec![3.0, 0.0],
            vec![1.5, -0.5],
            vec![1.5, -0.5],
        );
        assert!(matches!(normalize_frame(&s), Err(Error::ZeroEnergy)));
    }

    #[test]
    fn double_time_reversal_is_identity() {
        let s = two_ball_state(
            vec![0.0, 0.0],
            vec![3.0, 1.0],
            vec![0.25, -1.5],
            vec![-0.75, 0.5],
        );
        assert_eq!(time_reverse(&time_reverse(&s)), s);
    }

    #[test]
    fn overlapping_construction_is_rejected() {
        let r = SystemState::new(
            0.0,
            2,
            vec![
                BallState { center: vec![0.0, 0.0].into(), velocity: vec![0.0, 0.0].into() },
                BallState { center: vec![1.9, 0.0].into(), velocity: vec![0.0, 0.0].into() },
            ],
        );
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    mod random {
        use super::*;
        use proptest::prelude::*;

        /// A random pair at exact contact along a random axis, approaching.
        fn approaching_contact_pair() -> impl Strategy<Value = SystemState> {
            (
                prop::collection::vec(-1.0f64..1.0, 3),
                prop::collection::vec(-1.0f64..1.0, 3),
                prop::collection::vec(-1.0f64..1.0, 3),
                prop::collection::vec(-3.0f64..3.0, 3),
            )
                .prop_filter_map("needs a usable axis and real approach", |(a, x, v1, v2)| {
                    let axis = Vector::from(a);
                    if axis.norm() < 1e-3 {
                        return None;
                    }
                    let u = axis.unit().unwrap();
                    let c1 = Vector::from(x);
                    let c2 = c1.add_scaled(-2.0, &u);
                    let v1 = Vector::from(v1);
                    let v2 = Vector::from(v2);
                    if v1.sub(&v2).dot(&c1.sub(&c2)) > -1e-6 {
                        return None;
                    }
                    Some(
                        SystemState::new(
                            0.0,
                            3,
                            vec![
                                BallState { center: c1, velocity: v1 },
                                BallState { center: c2, velocity: v2 },
                            ],
                        )
                        .unwrap(),
                    )
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(512))]

            #[test]
            fn collision_conserves_momentum_and_energy(s in approaching_contact_pair()) {
                let out = resolve_collision(&s, 0, 1).unwrap();
                let dp = out.momentum().sub(&s.momentum()).norm();
                prop_assert!(dp < 1e-12);
                prop_assert!((out.energy() - s.energy()).abs() < 1e-12 * (1.0 + s.energy()));
                prop_assert!((out.pair_distance(0, 1) - 2.0).abs() < 1e-12);
            }

            #[test]
            fn collision_law_is_an_involution_under_reversal(s in approaching_contact_pair()) {
                let resolved = resolve_collision(&s, 0, 1).unwrap();
                let back = resolve_collision(&time_reverse(&resolved), 0, 1).unwrap();
                let expect = time_reverse(&s);
                let diff = back.phase_velocity().sub(&expect.phase_velocity()).norm();
                prop_assert!(diff < 1e-13);
            }

            #[test]
            fn sign_identity_holds(s in approaching_contact_pair()) {
                let out = resolve_collision(&s, 0, 1).unwrap();
                let dv = out.phase_velocity().sub(&s.phase_velocity());
                prop_assert!(s.phase_position().dot(&dv) > 0.0);
            }

            #[test]
            fn normalization_lands_in_frame(
                xs in prop::collection::vec(-20.0f64..20.0, 8),
                vs in prop::collection::vec(-5.0f64..5.0, 8),
            ) {
                let mk = |c: &[f64], v: &[f64]| BallState {
                    center: Vector::from(c),
                    velocity: Vector::from(v),
                };
                // Spread balls far apart along the first axis to rule out overlap.
                let balls: Vec<BallState> = (0..4)
                    .map(|i| {
                        let mut c = vec![xs[2 * i], xs[2 * i + 1]];
                        c[0] += 50.0 * i as f64;
                        mk(&c, &vs[2 * i..2 * i + 2])
                    })
                    .collect();
                let s = SystemState::new(0.0, 2, balls).unwrap();
                match normalize_frame(&s) {
                    Ok(n) => {
                        prop_assert!(n.momentum().norm() < 1e-9);
                        prop_assert!(n.center_of_mass().norm() < 1e-9);
                        prop_assert!((n.energy() - 1.0).abs() < 1e-12);
                    }
                    Err(Error::ZeroEnergy) => {}
                    Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
                }
            }
        }
    }
}
