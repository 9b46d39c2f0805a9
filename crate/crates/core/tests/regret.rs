mod common;

use arrival_ic::regret::*;
use arrival_ic::rewards::{NoiseFamily, RewardInstance};
use arrival_ic::seed;
use arrival_ic::temporal::TemporalBelief;
use common::{brute_force_swap, random_belief, random_transcript};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn case(s: u64, max_t: usize, max_k: usize) -> (Transcript, TemporalBelief) {
    use rand::Rng;
    let mut rng = seed::rng(s, &[]);
    let t = rng.random_range(1..=max_t);
    let k = rng.random_range(1..=max_k);
    let tr = random_transcript(&mut rng, t, k);
    let d = random_belief(&mut rng, t);
    (tr, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn swap_matches_enumeration(s in any::<u64>()) {
        let (tr, d) = case(s, 40, 4);
        let fast = weighted_swap_regret(&tr, &d).unwrap();
        prop_assert!((fast - brute_force_swap(&tr, &d)).abs() <= 1e-12);
    }

    #[test]
    fn swap_dominates_external_and_zero(s in any::<u64>()) {
        let (tr, d) = case(s, 60, 6);
        let swap = weighted_swap_regret(&tr, &d).unwrap();
        let ext = weighted_external_regret(&tr, &d, Basis::Recommended).unwrap();
        prop_assert!(swap >= ext - 1e-12);
        prop_assert!(swap >= -1e-15);
    }

    #[test]
    fn relabeling_arms_changes_nothing(s in any::<u64>()) {
        let (tr, d) = case(s, 60, 6);
        let k = tr.arms();
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut seed::rng(s, &[1]));
        let recs: Vec<usize> = tr.recommended().iter().map(|&a| perm[a]).collect();
        let rows: Vec<Vec<f64>> = (0..tr.len())
            .map(|t| {
                let mut row = vec![0.0; k];
                for (a, &u) in tr.rewards(t).iter().enumerate() {
                    row[perm[a]] = u;
                }
                row
            })
            .collect();
        let moved = Transcript::compliant(k, &recs, &rows).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12;
        prop_assert!(close(weighted_swap_regret(&tr, &d).unwrap(), weighted_swap_regret(&moved, &d).unwrap()));
        prop_assert!(close(
            weighted_external_regret(&tr, &d, Basis::Recommended).unwrap(),
            weighted_external_regret(&moved, &d, Basis::Recommended).unwrap()
        ));
    }

    #[test]
    fn stationary_means_make_swap_and_external_agree(s in any::<u64>()) {
        let (tr, d) = case(s, 60, 5);
        let means: Vec<f64> = (0..tr.arms()).map(|a| (0.1 + a as f64 * 0.37).fract()).collect();
        let mu = RewardInstance::stationary(&means, tr.len(), NoiseFamily::Bernoulli).unwrap();
        let ps = weighted_pseudo_swap_regret(&tr, &d, &mu).unwrap();
        let pe = weighted_pseudo_regret(&tr, &d, &mu).unwrap();
        prop_assert!((ps - pe).abs() <= 1e-12);
    }
}

#[test]
fn two_arm_hand_example() {
    // Rounds: (I, u) = (1, [0.2, 0.9]), (2, [0.6, 0.1]), (1, [0.5, 0.5]); D = (0.5, 0.25, 0.25).
    let tr = Transcript::compliant(2, &[0, 1, 0], &[vec![0.2, 0.9], vec![0.6, 0.1], vec![0.5, 0.5]]).unwrap();
    let d = TemporalBelief::from_pmf(vec![0.5, 0.25, 0.25]).unwrap();
    // External: arm 2 gives 0.5·0.7 + 0 + 0 = 0.35; arm 1 gives 0.25·0.5 = 0.125.
    assert!((weighted_external_regret(&tr, &d, Basis::Recommended).unwrap() - 0.35).abs() < 1e-15);
    // Swap: map 1→2 earns 0.35, map 2→1 earns 0.125.
    assert!((weighted_swap_regret(&tr, &d).unwrap() - 0.475).abs() < 1e-15);
    assert!((weighted_swap_regret_oracle(&tr, &d).unwrap() - 0.475).abs() < 1e-15);
}

#[test]
fn played_basis_uses_played_actions() {
    let mut tr = Transcript::new(2, 2);
    tr.push_round(0, 1, &[1.0, 0.0]).unwrap();
    tr.push_round(0, 1, &[1.0, 0.0]).unwrap();
    let d = TemporalBelief::uniform_window(1, 2, 2).unwrap();
    assert_eq!(weighted_external_regret(&tr, &d, Basis::Recommended).unwrap(), 0.0);
    assert_eq!(weighted_external_regret(&tr, &d, Basis::Played).unwrap(), 1.0);
}

#[test]
fn csv_round_trip_preserves_regret() {
    let (tr, d) = case(17, 30, 4);
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    let back = Transcript::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, tr);
    assert_eq!(weighted_swap_regret(&back, &d).unwrap(), weighted_swap_regret(&tr, &d).unwrap());
}

#[test]
fn azuma_term_by_hand() {
    let d = TemporalBelief::uniform_window(1, 1000, 1000).unwrap();
    let c = azuma_transfer_bound(&d, 3, Some(0.1)).unwrap();
    assert!((c - 2.0 * (2.0 * 1e-3 * 60f64.ln()).sqrt()).abs() < 1e-15);
    assert!(azuma_transfer_bound(&d, 3, Some(1.0)).is_err());
    let expect = azuma_transfer_bound(&d, 3, None).unwrap();
    assert!((expect - 2.0 * (2.0 * 1e-3 * 6f64.ln()).sqrt()).abs() < 1e-15);
}

#[test]
fn mismatched_inputs_rejected() {
    let (tr, _) = case(3, 10, 3);
    let other = TemporalBelief::uniform_window(1, tr.len() + 1, tr.len() + 1).unwrap();
    assert!(weighted_swap_regret(&tr, &other).is_err());
    let partial = Transcript::new(5, 2);
    assert!(weighted_external_regret(&partial, &TemporalBelief::point_mass(1, 5).unwrap(), Basis::Recommended).is_err());
}
