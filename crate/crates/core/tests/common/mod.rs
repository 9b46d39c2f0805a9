#![allow(dead_code)]

use arrival_ic::regret::Transcript;
use arrival_ic::temporal::TemporalBelief;
use rand::Rng;

/// Random pmf on `1..=horizon` with a random support interval and some
/// interior zeros.
pub fn random_belief<R: Rng>(rng: &mut R, horizon: usize) -> TemporalBelief {
    let lo = rng.random_range(0..horizon);
    let hi = rng.random_range(lo..horizon);
    let mut pmf = vec![0.0; horizon];
    for p in &mut pmf[lo..=hi] {
        if rng.random::<f64>() < 0.8 {
            *p = rng.random::<f64>();
        }
    }
    pmf[lo] = pmf[lo].max(0.1);
    pmf[hi] = pmf[hi].max(0.1);
    let s: f64 = pmf.iter().sum();
    pmf.iter_mut().for_each(|p| *p /= s);
    TemporalBelief::from_pmf(pmf).unwrap()
}

/// Compliant transcript with uniform recommendations and rewards.
pub fn random_transcript<R: Rng>(rng: &mut R, horizon: usize, arms: usize) -> Transcript {
    let recs: Vec<usize> = (0..horizon).map(|_| rng.random_range(0..arms)).collect();
    let rows: Vec<Vec<f64>> = (0..horizon).map(|_| (0..arms).map(|_| rng.random()).collect()).collect();
    Transcript::compliant(arms, &recs, &rows).unwrap()
}

/// Swap regret by direct enumeration of every `φ: [K] → [K]`.
pub fn brute_force_swap(tr: &Transcript, d: &TemporalBelief) -> f64 {
    let k = tr.arms();
    let mut phi = vec![0usize; k];
    let mut best = f64::NEG_INFINITY;
    loop {
        let v: f64 = (0..tr.len())
            .map(|t| {
                let u = tr.rewards(t);
                let a = tr.recommended()[t];
                d.pmf()[t] * (u[phi[a]] - u[a])
            })
            .sum();
        best = best.max(v);
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
            return best;
        }
    }
}
