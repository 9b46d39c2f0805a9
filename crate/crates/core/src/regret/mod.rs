//! Time-weighted regret functionals over transcripts.
//!
//! Every functional weights round `t` by an arrival belief `D(t)`. Realized
//! variants use the transcript's reward vectors; pseudo variants use the
//! mean matrix of a [`RewardInstance`].

mod transcript;

pub use transcript::Transcript;

use thiserror::Error;

use crate::numeric::CompensatedSum;
use crate::rewards::RewardInstance;
use crate::temporal::TemporalBelief;

/// Largest `K` accepted by the brute-force swap oracle (`K^K` functions).
pub const ORACLE_MAX_ARMS: usize = 6;

#[derive(Debug, Error)]
pub enum RegretError {
    #[error("belief horizon {belief} does not match transcript horizon {transcript}")]
    HorizonMismatch { belief: usize, transcript: usize },
    #[error("expected {expected} arms, got {got}")]
    ArmMismatch { expected: usize, got: usize },
    #[error("transcript has {rounds} of {horizon} rounds")]
    Incomplete { rounds: usize, horizon: usize },
    #[error("transcript already holds all {0} rounds")]
    HorizonExceeded(usize),
    #[error("action {action} out of range for {arms} arms")]
    ActionOutOfRange { action: usize, arms: usize },
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("brute-force oracle supports at most {ORACLE_MAX_ARMS} arms, got {0}")]
    TooManyArms(usize),
    #[error("confidence delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("arm count must be positive")]
    NoArms,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Which action sequence the comparator is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Basis {
    #[default]
    Recommended,
    Played,
}

fn check(tr: &Transcript, belief: &TemporalBelief) -> Result<(), RegretError> {
    tr.ensure_complete()?;
    if belief.horizon() != tr.horizon() {
        return Err(RegretError::HorizonMismatch { belief: belief.horizon(), transcript: tr.horizon() });
    }
    Ok(())
}

fn check_mu(tr: &Transcript, mu: &RewardInstance) -> Result<(), RegretError> {
    if mu.arms() != tr.arms() {
        return Err(RegretError::ArmMismatch { expected: tr.arms(), got: mu.arms() });
    }
    if mu.horizon() != tr.horizon() {
        return Err(RegretError::HorizonMismatch { belief: mu.horizon(), transcript: tr.horizon() });
    }
    Ok(())
}

fn actions(tr: &Transcript, basis: Basis) -> &[usize] {
    match basis {
        Basis::Recommended => tr.recommended(),
        Basis::Played => tr.played(),
    }
}

/// Support rounds of `belief` with their weights (0-based index).
fn weighted_rounds(belief: &TemporalBelief) -> impl Iterator<Item = (usize, f64)> + '_ {
    let (lo, hi) = belief.support_interval();
    (lo - 1..hi).map(move |t| (t, belief.pmf()[t])).filter(|&(_, w)| w > 0.0)
}

/// `Σ_t D(t)(v_{t,a} − v_{t,x_t})` for every fixed arm `a`.
fn external_sums<'a>(k: usize, belief: &TemporalBelief, acts: &[usize], row: impl Fn(usize) -> &'a [f64]) -> Vec<f64> {
    let mut acc = vec![CompensatedSum::new(); k];
    for (t, w) in weighted_rounds(belief) {
        let v = row(t);
        let base = v[acts[t]];
        for (s, &x) in acc.iter_mut().zip(v) {
            s.add(w * (x - base));
        }
    }
    acc.iter().map(CompensatedSum::value).collect()
}

/// `G[a][b] = Σ_{t: x_t = a} D(t)(v_{t,b} − v_{t,a})`, row-major.
fn swap_matrix<'a>(k: usize, belief: &TemporalBelief, acts: &[usize], row: impl Fn(usize) -> &'a [f64]) -> Vec<f64> {
    let mut acc = vec![CompensatedSum::new(); k * k];
    for (t, w) in weighted_rounds(belief) {
        let v = row(t);
        let a = acts[t];
        for (s, &x) in acc[a * k..(a + 1) * k].iter_mut().zip(v) {
            s.add(w * (x - v[a]));
        }
    }
    acc.iter().map(CompensatedSum::value).collect()
}

/// First index attaining the maximum.
fn argmax(xs: &[f64]) -> (usize, f64) {
    xs.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
}

fn swap_value(k: usize, g: &[f64]) -> f64 {
    let mut total = CompensatedSum::new();
    for a in 0..k {
        // Row a contains G[a][a] = 0, so the identity is always available.
        total.add(argmax(&g[a * k..(a + 1) * k]).1.max(0.0));
    }
    total.value()
}

/// Best fixed comparator and its `D`-weighted advantage; ties go to the lowest arm.
pub fn weighted_external_regret_with_arm(
    tr: &Transcript,
    belief: &TemporalBelief,
    basis: Basis,
) -> Result<(usize, f64), RegretError> {
    check(tr, belief)?;
    let sums = external_sums(tr.arms(), belief, actions(tr, basis), |t| tr.rewards(t));
    Ok(argmax(&sums))
}

/// `max_a Σ_t D(t)(u_{t,a} − u_{t,x_t})`, with `x` the recommended or played actions.
pub fn weighted_external_regret(tr: &Transcript, belief: &TemporalBelief, basis: Basis) -> Result<f64, RegretError> {
    weighted_external_regret_with_arm(tr, belief, basis).map(|(_, r)| r)
}

/// `max_φ Σ_t D(t)(u_{t,φ(I_t)} − u_{t,I_t})`, computed per recommended action.
pub fn weighted_swap_regret(tr: &Transcript, belief: &TemporalBelief) -> Result<f64, RegretError> {
    check(tr, belief)?;
    let g = swap_matrix(tr.arms(), belief, tr.recommended(), |t| tr.rewards(t));
    Ok(swap_value(tr.arms(), &g))
}

/// Weighted swap regret by enumerating all `K^K` swap functions.
pub fn weighted_swap_regret_oracle(tr: &Transcript, belief: &TemporalBelief) -> Result<f64, RegretError> {
    check(tr, belief)?;
    let k = tr.arms();
    if k > ORACLE_MAX_ARMS {
        return Err(RegretError::TooManyArms(k));
    }
    let rounds: Vec<(usize, f64)> = weighted_rounds(belief).collect();
    let mut phi = vec![0usize; k];
    let mut best = f64::NEG_INFINITY;
    loop {
        let mut acc = CompensatedSum::new();
        for &(t, w) in &rounds {
            let u = tr.rewards(t);
            let a = tr.recommended()[t];
            acc.add(w * (u[phi[a]] - u[a]));
        }
        best = best.max(acc.value());
        // Odometer increment over {0..k}^k.
        let mut i = 0;
        while i < k {
            phi[i] += 1;
            if phi[i] < k {
                break;
            }
            phi[i] = 0;
            i += 1;
        }
        if i == k {
            return Ok(best);
        }
    }
}

/// External regret measured on means: `max_a Σ_t D(t)(μ_{t,a} − μ_{t,I_t})`.
pub fn weighted_pseudo_regret(
    tr: &Transcript,
    belief: &TemporalBelief,
    mu: &RewardInstance,
) -> Result<f64, RegretError> {
    check(tr, belief)?;
    check_mu(tr, mu)?;
    Ok(argmax(&external_sums(tr.arms(), belief, tr.recommended(), |t| mu.row(t))).1)
}

/// Swap regret measured on means.
pub fn weighted_pseudo_swap_regret(
    tr: &Transcript,
    belief: &TemporalBelief,
    mu: &RewardInstance,
) -> Result<f64, RegretError> {
    check(tr, belief)?;
    check_mu(tr, mu)?;
    let g = swap_matrix(tr.arms(), belief, tr.recommended(), |t| mu.row(t));
    Ok(swap_value(tr.arms(), &g))
}

/// `2√(2 W₂ ln(2K/δ))`, or the expectation form `2√(2 W₂ ln 2K)` when `delta` is `None`.
pub fn azuma_bound_from_w2(w2: f64, arms: usize, delta: Option<f64>) -> Result<f64, RegretError> {
    if arms == 0 {
        return Err(RegretError::NoArms);
    }
    let log_term = match delta {
        Some(d) if d > 0.0 && d < 1.0 => (2.0 * arms as f64 / d).ln(),
        Some(d) => return Err(RegretError::InvalidDelta(d)),
        None => (2.0 * arms as f64).ln(),
    };
    Ok(2.0 * (2.0 * w2 * log_term).sqrt())
}

/// Slack between pseudo and realized weighted regret for belief `belief`.
pub fn azuma_transfer_bound(belief: &TemporalBelief, arms: usize, delta: Option<f64>) -> Result<f64, RegretError> {
    azuma_bound_from_w2(belief.w2(), arms, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewards::NoiseFamily;

    fn two_round() -> Transcript {
        Transcript::compliant(2, &[1, 0], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn hand_examples() {
        let tr = two_round();
        let d = TemporalBelief::uniform_window(1, 2, 2).unwrap();
        assert!((weighted_external_regret(&tr, &d, Basis::Recommended).unwrap() - 0.5).abs() < 1e-15);
        assert!((weighted_swap_regret(&tr, &d).unwrap() - 1.0).abs() < 1e-15);
        assert!((weighted_swap_regret_oracle(&tr, &d).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_transcripts_have_zero_regret() {
        let d = TemporalBelief::uniform_window(1, 3, 3).unwrap();
        let flat = Transcript::compliant(3, &[0, 2, 1], &vec![vec![0.4; 3]; 3]).unwrap();
        assert_eq!(weighted_external_regret(&flat, &d, Basis::Recommended).unwrap(), 0.0);
        let one = Transcript::compliant(1, &[0, 0, 0], &[vec![0.2], vec![0.9], vec![0.1]]).unwrap();
        assert_eq!(weighted_swap_regret(&one, &d).unwrap(), 0.0);
        let rows = vec![vec![0.9, 0.1, 0.3]; 3];
        let greedy = Transcript::compliant(3, &[0, 0, 0], &rows).unwrap();
        assert!(weighted_external_regret(&greedy, &d, Basis::Recommended).unwrap().abs() < 1e-15);
        assert_eq!(weighted_swap_regret(&greedy, &d).unwrap(), 0.0);
        assert_eq!(weighted_swap_regret_oracle(&greedy, &d).unwrap(), 0.0);
    }

    #[test]
    fn ties_break_to_lowest_arm() {
        let tr = Transcript::compliant(3, &[2], &[vec![0.8, 0.8, 0.1]]).unwrap();
        let d = TemporalBelief::point_mass(1, 1).unwrap();
        let (arm, r) = weighted_external_regret_with_arm(&tr, &d, Basis::Recommended).unwrap();
        assert_eq!(arm, 0);
        assert!((r - 0.7).abs() < 1e-15);
    }

    #[test]
    fn played_basis_uses_played_actions() {
        let mut tr = Transcript::new(1, 2);
        tr.push_round(0, 1, &[1.0, 0.25]).unwrap();
        let d = TemporalBelief::point_mass(1, 1).unwrap();
        assert_eq!(weighted_external_regret(&tr, &d, Basis::Recommended).unwrap(), 0.0);
        assert_eq!(weighted_external_regret(&tr, &d, Basis::Played).unwrap(), 0.75);
        assert_eq!(tr.observed(), &[0.25]);
    }

    #[test]
    fn pseudo_matches_realized_under_deterministic_noise() {
        let mu = RewardInstance::new(3, 2, vec![0.2, 0.7, 0.6, 0.1, 0.5, 0.5], NoiseFamily::Deterministic).unwrap();
        let rows: Vec<Vec<f64>> = (0..3).map(|t| mu.row(t).to_vec()).collect();
        let tr = Transcript::compliant(2, &[0, 0, 1], &rows).unwrap();
        let d = TemporalBelief::from_pmf(vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(
            weighted_pseudo_regret(&tr, &d, &mu).unwrap(),
            weighted_external_regret(&tr, &d, Basis::Recommended).unwrap()
        );
        assert_eq!(weighted_pseudo_swap_regret(&tr, &d, &mu).unwrap(), weighted_swap_regret(&tr, &d).unwrap());
    }

    #[test]
    fn pseudo_regret_single_round() {
        let mu = RewardInstance::new(1, 3, vec![0.3, 0.9, 0.5], NoiseFamily::Bernoulli).unwrap();
        let tr = Transcript::compliant(3, &[2], &[vec![1.0, 0.0, 1.0]]).unwrap();
        let d = TemporalBelief::point_mass(1, 1).unwrap();
        assert!((weighted_pseudo_regret(&tr, &d, &mu).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn azuma_values() {
        let expect = 2.0 * (2.0 * 0.01 * 80f64.ln()).sqrt();
        let b = azuma_bound_from_w2(0.01, 2, Some(0.05)).unwrap();
        assert!((b - expect).abs() < 1e-15);
        assert!((b - 0.5921).abs() < 5e-5);
        let e = azuma_bound_from_w2(1e-4, 2, None).unwrap();
        assert!((e - 0.033302).abs() < 5e-7);
        assert!(azuma_bound_from_w2(0.01, 2, Some(0.2)).unwrap() < b);
        assert!(matches!(azuma_bound_from_w2(0.01, 2, Some(1.0)), Err(RegretError::InvalidDelta(_))));
        assert!(matches!(azuma_bound_from_w2(0.01, 2, Some(0.0)), Err(RegretError::InvalidDelta(_))));
    }

    #[test]
    fn mismatches_rejected() {
        let tr = two_round();
        let d3 = TemporalBelief::uniform_window(1, 3, 3).unwrap();
        assert!(matches!(weighted_swap_regret(&tr, &d3), Err(RegretError::HorizonMismatch { .. })));
        let mut partial = Transcript::new(2, 2);
        partial.push_round(0, 0, &[0.1, 0.2]).unwrap();
        let d2 = TemporalBelief::uniform_window(1, 2, 2).unwrap();
        assert!(matches!(weighted_swap_regret(&partial, &d2), Err(RegretError::Incomplete { .. })));
        assert!(matches!(partial.push_round(2, 0, &[0.1, 0.2]), Err(RegretError::ActionOutOfRange { .. })));
        assert!(matches!(partial.push_round(0, 0, &[0.1, 1.2]), Err(RegretError::RewardOutOfRange(_))));
        let wide = Transcript::compliant(7, &[0], &[vec![0.0; 7]]).unwrap();
        let d1 = TemporalBelief::point_mass(1, 1).unwrap();
        assert!(matches!(weighted_swap_regret_oracle(&wide, &d1), Err(RegretError::TooManyArms(7))));
    }

    #[test]
    fn csv_round_trip() {
        let mut tr = Transcript::new(2, 2);
        tr.push_round(1, 0, &[0.1, 0.7]).unwrap();
        tr.push_round(0, 0, &[1.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "t,I_t,a_t,u_1,u_2,observed\n1,2,1,0.10000000000000001,0.69999999999999996,0.10000000000000001\n2,1,1,1,0,1\n"
        );
        assert_eq!(Transcript::read_csv(&buf[..]).unwrap(), tr);
        assert!(Transcript::read_csv("t,I_t,a_t,u_1,observed\n1,1,1,0.5,0.4\n".as_bytes()).is_err());
        assert!(Transcript::read_csv("1,1,1,0.5,0.5\n".as_bytes()).is_err());
    }
}
