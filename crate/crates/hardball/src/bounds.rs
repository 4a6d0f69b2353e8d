//! Closed-form collision-count bounds and threshold times.
//!
//! The values here grow far past anything a fixed-width float can hold
//! linearly (the mass-ratio bound at `n = 10` has more than ten thousand
//! decimal digits), so every formula is evaluated in log10 space. Where the
//! ingredients are integers or dyadic rationals, a second, exact path
//! through big-integer arithmetic computes the same logarithm independently;
//! reports carry both so tests can hold the two to 1e-10 relative agreement.
//!
//! Natural logs inside formulas follow the source convention (`log 5n`
//! always means the natural log); only the reported magnitude is log10.

use num_bigint::BigUint;

use crate::error::{Error, Result};

const LOG10_2: f64 = std::f64::consts::LOG10_2;
const LOG10_E: f64 = std::f64::consts::LOG10_E;

/// One evaluated bound: the formula name, its inputs, and the value as
/// log10. `log10_exact` is the big-integer cross-check where one is defined.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub formula: &'static str,
    pub n: usize,
    pub inputs: Vec<(&'static str, f64)>,
    pub log10_value: f64,
    pub log10_exact: Option<f64>,
}

impl BoundReport {
    /// Relative disagreement of the two paths in log space.
    pub fn log_agreement(&self) -> Option<f64> {
        self.log10_exact
            .map(|e| (e - self.log10_value).abs() / self.log10_value.abs().max(1.0))
    }
}

/// log10 of a positive big integer, exact to well below 1e-12: the top 53
/// bits give the mantissa, the rest contribute through the binary exponent.
fn log10_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 53 {
        let m = x.iter_u64_digits().next().unwrap_or(0);
        return (m as f64).log10();
    }
    let shift = bits - 53;
    let top: BigUint = x >> shift;
    let m = top.iter_u64_digits().next().unwrap() as f64;
    m.log10() + shift as f64 * LOG10_2
}

/// Exact dyadic decomposition of a finite positive f64: `(mantissa, e)`
/// with value = mantissa * 2^e.
fn dyadic(x: f64) -> (BigUint, i64) {
    debug_assert!(x.is_finite() && x > 0.0);
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp_field == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_field - 1075)
    };
    (BigUint::from(mant), e)
}

fn factorial_big(n: u64) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for k in 2..=n {
        acc *= BigUint::from(k);
    }
    acc
}

/// Natural log of n!: an exact product below 171 (where n! still fits in a
/// float), Stirling's series with three correction terms beyond. The series
/// error at n = 171 is below 1e-19 relative, far inside every tolerance
/// used here.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 170 {
        let mut acc = 1.0f64;
        for k in 2..=n {
            acc *= k as f64;
        }
        return acc.ln();
    }
    let x = n as f64;
    (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
        + 1.0 / (1260.0 * x.powi(5))
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidInput(format!("n must be at least {min}, got {n}")));
    }
    Ok(())
}

fn check_ratio(name: &str, r: f64) -> Result<()> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidInput(format!("{name} must be a finite ratio >= 1, got {r}")));
    }
    Ok(())
}

/// Collision bound sensitive to both mass and radius spread:
/// `(32 sqrt(mass_ratio) radius_ratio n^{3/2})^{n^2}`.
///
/// The exact path squares the base to clear the square roots: the squared
/// base `1024 m r^2 n^3` is a dyadic rational, so `log10` of the bound is
/// half of `n^2` times its exact logarithm.
pub fn bfk_radius_bound(n: usize, mass_ratio: f64, radius_ratio: f64) -> Result<BoundReport> {
    check_n(n, 2)?;
    check_ratio("mass_ratio", mass_ratio)?;
    check_ratio("radius_ratio", radius_ratio)?;
    let nf = n as f64;
    let log10_base =
        32f64.log10() + 0.5 * mass_ratio.log10() + radius_ratio.log10() + 1.5 * nf.log10();
    let log10_value = nf * nf * log10_base;

    let (mm, em) = dyadic(mass_ratio);
    let (mr, er) = dyadic(radius_ratio);
    let x = mm * (&mr * &mr) * BigUint::from(n).pow(3);
    let e2 = 10 + em + 2 * er;
    let log10_sq_base = log10_biguint(&x) + e2 as f64 * LOG10_2;
    let log10_exact = nf * nf / 2.0 * log10_sq_base;

    Ok(BoundReport {
        formula: "bfk_radius",
        n,
        inputs: vec![("mass_ratio", mass_ratio), ("radius_ratio", radius_ratio)],
        log10_value,
        log10_exact: Some(log10_exact),
    })
}

/// Radius-independent collision bound: `(400 mass_ratio n^2)^{2 n^4}`.
pub fn bfk_mass_bound(n: usize, mass_ratio: f64) -> Result<BoundReport> {
    check_n(n, 2)?;
    check_ratio("mass_ratio", mass_ratio)?;
    let nf = n as f64;
    let log10_base = 400f64.log10() + mass_ratio.log10() + 2.0 * nf.log10();
    let log10_value = 2.0 * nf.powi(4) * log10_base;

    let (mm, em) = dyadic(mass_ratio);
    let x = mm * BigUint::from(400u32) * BigUint::from(n).pow(2);
    let log10_exact = 2.0 * nf.powi(4) * (log10_biguint(&x) + em as f64 * LOG10_2);

    Ok(BoundReport {
        formula: "bfk_mass",
        n,
        inputs: vec![("mass_ratio", mass_ratio)],
        log10_value,
        log10_exact: Some(log10_exact),
    })
}

/// The planar lower bound `n^3 / 27`: some configuration of `n` balls in
/// the plane achieves more collisions than this.
pub fn lower_bound_cubic(n: usize) -> Result<f64> {
    check_n(n, 3)?;
    Ok((n as f64).powi(3) / 27.0)
}

/// log10 of `phi_delta(n) = 73^n (n!)^{3/2} (ln 5n)^n / delta`, taking the
/// delta directly in log10 so callers can pass values like `n^{-n}` that
/// underflow as floats.
fn log10_phi(factor: f64, n: usize, log10_delta: f64) -> f64 {
    let nf = n as f64;
    nf * factor.log10() + 1.5 * ln_factorial(n as u64) * LOG10_E + nf * (5.0 * nf).ln().log10()
        - log10_delta
}

/// Exact-path companion of [`log10_phi`]: the integer factor
/// `factor^n (n!)^{3/2}` via big integers (squared to clear the 3/2 power),
/// the transcendental factor shared with the float path.
fn log10_phi_exact(factor: u32, n: usize, log10_delta: f64) -> f64 {
    let nf = n as f64;
    let a = BigUint::from(factor).pow(2 * n as u32) * factorial_big(n as u64).pow(3);
    log10_biguint(&a) / 2.0 + nf * (5.0 * nf).ln().log10() - log10_delta
}

/// Collision bound under the separation hypothesis (every non-colliding
/// pair at least `delta` apart at collision times):
/// `phi_delta(n) = 73^n (n!)^{3/2} (ln 5n)^n / delta`.
///
/// `delta = 1` is allowed as the degenerate no-separation edge of the
/// formula; values above 1 would weaken the hypothesis it encodes.
pub fn thm_nf_bound(n: usize, delta: f64) -> Result<BoundReport> {
    check_n(n, 3)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidInput(format!("delta must be in (0, 1], got {delta}")));
    }
    let log10_delta = delta.log10();
    let log10_value = log10_phi(73.0, n, log10_delta);
    let log10_exact = (n <= 500).then(|| log10_phi_exact(73, n, log10_delta));
    Ok(BoundReport {
        formula: "phi_delta",
        n,
        inputs: vec![("delta", delta)],
        log10_value,
        log10_exact,
    })
}

/// Margin, in log10, by which `phi_delta(n)` dominates its defining
/// recursion `4 phi(n-1) + 72 n^{3/2} max(34 n^3 / delta, ln(5n) phi(n-1))`.
/// Non-negative for every `n >= 3` and `delta` in (0, 1].
pub fn nf_recursion_gap(n: usize, delta: f64) -> Result<f64> {
    check_n(n, 3)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidInput(format!("delta must be in (0, 1], got {delta}")));
    }
    let log10_delta = delta.log10();
    let nf = n as f64;
    let lhs = log10_phi(73.0, n, log10_delta);
    let prev = log10_phi(73.0, n - 1, log10_delta);
    let t1 = 4f64.log10() + prev;
    let a = 34f64.log10() + 3.0 * nf.log10() - log10_delta;
    let b = (5.0 * nf).ln().log10() + prev;
    let t2 = 72f64.log10() + 1.5 * nf.log10() + a.max(b);
    // log10(10^t1 + 10^t2), summed from the larger term for stability.
    let (hi, lo) = if t1 >= t2 { (t1, t2) } else { (t2, t1) };
    let rhs = hi + (1.0 + 10f64.powf(lo - hi)).log10();
    Ok(lhs - rhs)
}

/// Separation-free collision bound `n^{5n/2 + eps n}`, valid once
/// `n >= exp(36 / eps^2)`. The report's inputs carry that minimal `n` (it
/// exceeds u64 range for small eps, hence an f64).
pub fn thm_nc_bound(n: usize, epsilon: f64) -> Result<BoundReport> {
    check_n(n, 2)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let nf = n as f64;
    let log10_value = (2.5 * nf + epsilon * nf) * nf.log10();
    Ok(BoundReport {
        formula: "nc_power",
        n,
        inputs: vec![("epsilon", epsilon), ("min_valid_n", nc_min_valid_n(epsilon)?)],
        log10_value,
        log10_exact: None,
    })
}

/// Smallest `n` for which the `n^{5n/2 + eps n}` bound is proved:
/// `ceil(exp(36 / eps^2))`.
pub fn nc_min_valid_n(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok((36.0 / (epsilon * epsilon)).exp().ceil())
}

/// Margin, in log10, of `n^{5n/2 + eps n}` over `phi_delta(n)` at
/// `delta = n^{-n}`. Non-negative for every `n` at or past
/// [`nc_min_valid_n`]: the separation-free bound comes from feeding the
/// worst admissible separation into the separation-sensitive one.
pub fn nc_consistency_gap(n: usize, epsilon: f64) -> Result<f64> {
    check_n(n, 3)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let nf = n as f64;
    let log10_delta = -nf * nf.log10();
    Ok((2.5 * nf + epsilon * nf) * nf.log10() - log10_phi(73.0, n, log10_delta))
}

/// log10 of the upcrossing budget
/// `phi_rho(n) = 38^n (n!)^{3/2} (ln 5n)^n / rho`.
pub fn phi_upcrossing_log10(n: usize, rho: f64) -> Result<f64> {
    check_n(n, 2)?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidInput(format!("rho must be positive, got {rho}")));
    }
    Ok(log10_phi(38.0, n, rho.log10()))
}

/// The upcrossing count ceiling `phi_rho(n) - (n+1)^2 / 2`, linearized for
/// direct comparison with counted upcrossings. Saturates to infinity when
/// the value leaves f64 range, which keeps the comparison conservative.
pub fn upcrossing_ceiling(n: usize, rho: f64) -> Result<f64> {
    let log10 = phi_upcrossing_log10(n, rho)?;
    let nf = n as f64;
    Ok(10f64.powf(log10) - (nf + 1.0) * (nf + 1.0) / 2.0)
}

/// The two threshold times of the partition construction:
/// `T = 18 sqrt(n) (n-1) |x(0)|` where the velocity profile has frozen, and
/// `T* = 100 n^3 |x(0)|` past which the two families never meet. The
/// non-overlap floor `|x(0)| >= sqrt(2)/2` is required.
pub fn partition_times(n: usize, x0_norm: f64) -> Result<(f64, f64)> {
    check_n(n, 2)?;
    let floor = std::f64::consts::SQRT_2 / 2.0;
    if !(x0_norm >= floor) {
        return Err(Error::InvalidInput(format!(
            "|x(0)| must be at least sqrt(2)/2 ~ {floor:.6}, got {x0_norm}"
        )));
    }
    let nf = n as f64;
    let t = 18.0 * nf.sqrt() * (nf - 1.0) * x0_norm;
    let t_star = 100.0 * nf.powi(3) * x0_norm;
    debug_assert!(t_star >= t * (1.0 + 3.0 * 1.61 * nf.sqrt() * (nf - 1.0)));
    Ok((t, t_star))
}

/// How far `T*` clears the chain `T + 3 C T sqrt(n) (n-1)` with `C = 1.61`,
/// as a ratio minus one. Positive for every `n >= 2`; scale cancels.
pub fn partition_consistency_margin(n: usize) -> Result<f64> {
    check_n(n, 2)?;
    let nf = n as f64;
    let t = 18.0 * nf.sqrt() * (nf - 1.0);
    let t_star = 100.0 * nf.powi(3);
    Ok(t_star / (t * (1.0 + 4.83 * nf.sqrt() * (nf - 1.0))) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_bound_two_balls_is_two_to_the_26th() {
        let r = bfk_radius_bound(2, 1.0, 1.0).unwrap();
        // (32 * 2^{3/2})^4 = 2^26.
        assert!((r.log10_value - 26.0 * LOG10_2).abs() < 1e-12);
        assert!((r.log10_exact.unwrap() - 26.0 * LOG10_2).abs() < 1e-12);
    }

    #[test]
    fn radius_bound_paths_agree_and_grow() {
        let r3 = bfk_radius_bound(3, 1.0, 1.0).unwrap();
        assert!((r3.log10_value - 19.987486743594598).abs() < 1e-10);
        for (m, rr) in [(1.0, 1.0), (2.5, 1.75), (7.0, 1.0), (1.5, 3.25)] {
            for n in 2..12 {
                let rep = bfk_radius_bound(n, m, rr).unwrap();
                assert!(rep.log_agreement().unwrap() < 1e-10, "{rep:?}");
                let next = bfk_radius_bound(n + 1, m, rr).unwrap();
                assert!(next.log10_value > rep.log10_value);
            }
        }
    }

    #[test]
    fn mass_bound_pins_and_agrees() {
        let r = bfk_mass_bound(2, 1.0).unwrap();
        assert!((r.log10_value - 102.5318394449896).abs() < 1e-10);
        for m in [1.0, 3.5, 11.0] {
            for n in 2..10 {
                let rep = bfk_mass_bound(n, m).unwrap();
                assert!(rep.log_agreement().unwrap() < 1e-10);
                assert!(bfk_mass_bound(n + 1, m).unwrap().log10_value > rep.log10_value);
            }
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(bfk_radius_bound(1, 1.0, 1.0).is_err());
        assert!(bfk_radius_bound(3, 0.5, 1.0).is_err());
        assert!(bfk_mass_bound(4, f64::NAN).is_err());
        assert!(lower_bound_cubic(2).is_err());
        assert!(thm_nf_bound(2, 0.5).is_err());
        assert!(thm_nf_bound(4, 0.0).is_err());
        assert!(thm_nf_bound(4, 1.5).is_err());
        assert!(thm_nc_bound(4, 0.0).is_err());
        assert!(partition_times(2, 0.5).is_err());
    }

    #[test]
    fn cubic_lower_bound_values() {
        assert_eq!(lower_bound_cubic(3).unwrap(), 1.0);
        assert_eq!(lower_bound_cubic(6).unwrap(), 8.0);
        assert_eq!(lower_bound_cubic(30).unwrap(), 1000.0);
    }

    #[test]
    fn phi_delta_pins_and_scales() {
        let r = thm_nf_bound(3, 1.0).unwrap();
        assert!((r.log10_value - 8.0551655887009606).abs() < 1e-12);
        assert!(r.log_agreement().unwrap() < 1e-10);
        // Halving delta doubles the bound.
        let a = thm_nf_bound(5, 0.8).unwrap().log10_value;
        let b = thm_nf_bound(5, 0.4).unwrap().log10_value;
        assert!((b - a - LOG10_2).abs() < 1e-12);
    }

    #[test]
    fn phi_delta_paths_agree_across_the_sweep() {
        for n in 3..=50 {
            let rep = thm_nf_bound(n, 0.37).unwrap();
            assert!(rep.log_agreement().unwrap() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn phi_delta_dominates_its_recursion() {
        for &delta in &[0.9, 0.5, 1e-3, 1e-9] {
            for n in 3..=50 {
                let gap = nf_recursion_gap(n, delta).unwrap();
                assert!(gap >= 0.0, "n = {n}, delta = {delta}, gap = {gap}");
            }
        }
    }

    #[test]
    fn nc_min_valid_n_pins() {
        assert_eq!(nc_min_valid_n(6.0).unwrap(), 3.0);
        assert_eq!(nc_min_valid_n(2.0).unwrap(), 8104.0);
        assert_eq!(nc_min_valid_n(1.0).unwrap(), 4311231547115195.0);
    }

    #[test]
    fn nc_bound_exponent_arithmetic() {
        let r = thm_nc_bound(4, 1.0).unwrap();
        assert!((r.log10_value - 14.0 * 4f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn nc_consistency_holds_from_the_valid_threshold() {
        for &eps in &[1.0, 2.0, 6.0] {
            let min_n = nc_min_valid_n(eps).unwrap();
            for k in 0..6u64 {
                let n = (min_n as u64 + k) as usize;
                let gap = nc_consistency_gap(n, eps).unwrap();
                assert!(gap >= 0.0, "eps = {eps}, n = {n}, gap = {gap}");
            }
        }
    }

    #[test]
    fn upcrossing_budget_pins() {
        let l = phi_upcrossing_log10(3, 1.0).unwrap();
        assert!((l - 7.2045477981900241).abs() < 1e-12);
        let v = upcrossing_ceiling(3, 0.2).unwrap();
        assert!((v - (80078845.361894101 - 8.0)).abs() / v < 1e-12);
        assert!(upcrossing_ceiling(6, 0.05).unwrap() > 0.0);
    }

    #[test]
    fn partition_times_pin_and_stay_consistent() {
        let (t, t_star) = partition_times(2, 1.0).unwrap();
        assert!((t - 25.455844122715714).abs() < 1e-12);
        assert_eq!(t_star, 800.0);
        for n in 2..=10_000 {
            assert!(partition_consistency_margin(n).unwrap() > 0.0, "n = {n}");
        }
    }

    #[test]
    fn ln_factorial_matches_big_integers_across_the_switch() {
        for n in [5u64, 170, 171, 200, 1000] {
            let exact = log10_biguint(&factorial_big(n));
            let approx = ln_factorial(n) * LOG10_E;
            assert!(
                (exact - approx).abs() <= 1e-10 * exact.max(1.0),
                "n = {n}: {exact} vs {approx}"
            );
        }
        assert!((ln_factorial(170) * LOG10_E - 306.8607819948283).abs() < 1e-9);
        assert!((ln_factorial(200) * LOG10_E - 374.89688864004017).abs() < 1e-9);
        assert!((ln_factorial(1000) * LOG10_E - 2567.6046442221323).abs() < 1e-8);
    }

    #[test]
    fn log10_biguint_handles_small_and_large() {
        assert_eq!(log10_biguint(&BigUint::from(1000u32)), 3.0);
        let big = BigUint::from(10u32).pow(40);
        assert!((log10_biguint(&big) - 40.0).abs() < 1e-12);
    }
}
