use arrival_ic::game::run_compliant;
use arrival_ic::learners::*;
use arrival_ic::regret::{weighted_external_regret, weighted_swap_regret, Basis};
use arrival_ic::rewards::{NoiseFamily, RewardInstance};
use arrival_ic::seed;
use arrival_ic::temporal::TemporalBelief;
use rayon::prelude::*;

fn mean_over_seeds(n: u64, f: impl Fn(u64) -> f64 + Sync + Send) -> f64 {
    (0..n).into_par_iter().map(f).sum::<f64>() / n as f64
}

#[test]
fn exp3_concentrates_on_the_best_arm() {
    let t = 20_000;
    let mu = RewardInstance::stationary(&[0.8, 0.2], t, NoiseFamily::Bernoulli).unwrap();
    let f = PolicyConfig::new(PolicyKind::Exp3, 2);
    let share = mean_over_seeds(50, |s| {
        let tr = run_compliant(&f, &mu, seed::derive(1, &[s])).unwrap();
        let tail = &tr.recommended()[3 * t / 4..];
        tail.iter().filter(|&&a| a == 0).count() as f64 / tail.len() as f64
    });
    assert!(share >= 0.9, "best-arm share {share}");
}

#[test]
fn exp4s_regret_per_round_is_small() {
    let t = 50_000;
    let mu = RewardInstance::stationary(&[0.7, 0.4, 0.3], t, NoiseFamily::Bernoulli).unwrap();
    let d = TemporalBelief::uniform_window(1, t, t).unwrap();
    let f = PolicyConfig::new(PolicyKind::Exp4s, 3);
    let r = mean_over_seeds(30, |s| {
        let tr = run_compliant(&f, &mu, seed::derive(2, &[s])).unwrap();
        weighted_external_regret(&tr, &d, Basis::Recommended).unwrap()
    });
    assert!(r <= 0.05, "{r}");
}

#[test]
fn same_seed_same_actions_over_a_thousand_rounds() {
    for kind in [PolicyKind::Exp3, PolicyKind::Exp4s, PolicyKind::SwapWrapper] {
        let f = PolicyConfig::new(kind, 4).with_seed(11);
        let run = || {
            let mut p = f.build(1000, 3).unwrap();
            (0..1000)
                .map(|i| {
                    let (a, _) = p.recommend();
                    p.update(a, if (i + a) % 3 == 0 { 1.0 } else { 0.25 }).unwrap();
                    a
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run(), "{kind:?}");
    }
}

#[test]
fn fresh_learners_are_uniform_and_single_arm_is_trivial() {
    for kind in [PolicyKind::Exp3, PolicyKind::Exp4s, PolicyKind::SwapWrapper] {
        let p = PolicyConfig::new(kind, 5).build(100, 0).unwrap();
        assert!(p.distribution().iter().all(|&x| (x - 0.2).abs() < 1e-12), "{kind:?}");
        let mut one = PolicyConfig::new(kind, 1).build(100, 0).unwrap();
        for _ in 0..10 {
            let (a, dist) = one.recommend();
            assert_eq!((a, dist.to_vec()), (0, vec![1.0]));
            one.update(0, 0.3).unwrap();
        }
    }
}

#[test]
fn swap_wrapper_learns_and_keeps_swap_regret_low() {
    let t = 20_000;
    let mu = RewardInstance::stationary(&[0.3, 0.8, 0.5], t, NoiseFamily::Bernoulli).unwrap();
    let d = TemporalBelief::uniform_window(1, t, t).unwrap();
    let f = PolicyConfig::new(PolicyKind::SwapWrapper, 3);
    let (share, swap) = (0..10u64)
        .into_par_iter()
        .map(|s| {
            let tr = run_compliant(&f, &mu, seed::derive(3, &[s])).unwrap();
            let tail = &tr.recommended()[3 * t / 4..];
            let share = tail.iter().filter(|&&a| a == 1).count() as f64 / tail.len() as f64;
            (share, weighted_swap_regret(&tr, &d).unwrap())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    assert!(share / 10.0 >= 0.8, "share {}", share / 10.0);
    assert!(swap / 10.0 <= 0.1, "swap regret {}", swap / 10.0);
}

#[test]
fn stationary_distribution_of_wrapper_is_fixed_point() {
    let q = [0.7, 0.2, 0.1, 0.3, 0.3, 0.4, 0.05, 0.15, 0.8];
    let p = stationary_distribution(&q, 3).unwrap();
    for j in 0..3 {
        let back: f64 = (0..3).map(|i| p[i] * q[i * 3 + j]).sum();
        assert!((back - p[j]).abs() < 1e-10);
    }
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn exp4s_tracks_a_switch_faster_than_exp3() {
    let seg = 10_000;
    let mu =
        RewardInstance::piecewise(&[(seg, vec![0.9, 0.1]), (seg, vec![0.1, 0.9])], NoiseFamily::Bernoulli).unwrap();
    let share_after = |kind| {
        let f = PolicyConfig::new(kind, 2);
        mean_over_seeds(20, |s| {
            let tr = run_compliant(&f, &mu, seed::derive(4, &[s])).unwrap();
            let tail = &tr.recommended()[seg..seg + 3000];
            tail.iter().filter(|&&a| a == 1).count() as f64 / tail.len() as f64
        })
    };
    let (fast, slow) = (share_after(PolicyKind::Exp4s), share_after(PolicyKind::Exp3));
    assert!(fast > slow + 0.2, "Exp4.S {fast} vs EXP3 {slow}");
}

#[test]
fn constant_rewards_give_flat_interval_regret() {
    let mu = RewardInstance::stationary(&[0.5, 0.5, 0.5], 2000, NoiseFamily::Deterministic).unwrap();
    let opts = ProfileOptions { lengths: log_grid(10, 2000, 6), n_seeds: 5, seed: 1, source: RegretSource::Realized };
    let p = adaptive_regret_profile(&PolicyConfig::new(PolicyKind::Exp4s, 3), &mu, &opts).unwrap();
    assert!(p.mean_max_regret.iter().all(|r| r.abs() < 1e-9));
    assert!(p.switch_families.is_empty());
}

#[test]
fn profile_is_reproducible() {
    let mu =
        RewardInstance::piecewise(&[(500, vec![0.8, 0.2]), (500, vec![0.2, 0.8])], NoiseFamily::Bernoulli).unwrap();
    let opts = ProfileOptions { lengths: log_grid(5, 500, 8), n_seeds: 6, seed: 9, source: RegretSource::Pseudo };
    let f = PolicyConfig::new(PolicyKind::Exp3, 2);
    let a = adaptive_regret_profile(&f, &mu, &opts).unwrap();
    assert_eq!(a, adaptive_regret_profile(&f, &mu, &opts).unwrap());
    assert_eq!(a.switch_families.len(), 1);
    assert_eq!(a.switch_families[0].start, 501);
}

#[test]
fn swap_wrapper_keeps_swap_regret_low_on_a_cyclic_schedule() {
    let (t, block) = (50_000, 500);
    let segments: Vec<(usize, Vec<f64>)> = (0..t / block)
        .map(|i| {
            let mut m = vec![0.2; 3];
            m[i % 3] = 0.8;
            (block, m)
        })
        .collect();
    let mu = RewardInstance::piecewise(&segments, NoiseFamily::Bernoulli).unwrap();
    let d = TemporalBelief::uniform_window(1, t, t).unwrap();
    let swap_of = |kind| {
        let f = PolicyConfig::new(kind, 3);
        mean_over_seeds(20, |s| weighted_swap_regret(&run_compliant(&f, &mu, seed::derive(5, &[s])).unwrap(), &d).unwrap())
    };
    let (wrapper, exp3) = (swap_of(PolicyKind::SwapWrapper), swap_of(PolicyKind::Exp3));
    assert!(wrapper <= 0.05, "wrapper swap regret / T = {wrapper}");
    assert!(exp3 > wrapper, "EXP3 {exp3} vs wrapper {wrapper}");
}

#[test]
fn exp4s_regret_per_round_falls_with_the_horizon() {
    let per_round: Vec<f64> = [1_000, 10_000, 100_000]
        .into_iter()
        .map(|t| {
            let mu = RewardInstance::stationary(&[0.7, 0.4, 0.3], t, NoiseFamily::Bernoulli).unwrap();
            let d = TemporalBelief::uniform_window(1, t, t).unwrap();
            let f = PolicyConfig::new(PolicyKind::Exp4s, 3);
            mean_over_seeds(30, |s| {
                let tr = run_compliant(&f, &mu, seed::derive(6, &[s])).unwrap();
                weighted_external_regret(&tr, &d, Basis::Recommended).unwrap()
            })
        })
        .collect();
    assert!(per_round[0] > per_round[1] && per_round[1] > per_round[2], "{per_round:?}");
}
