mod common;

use proptest::prelude::*;
use stochastic_greedy::engine::{compute_policy, enumerate_exact, propagate, PolicySource};
use stochastic_greedy::io::{format_instance, parse_instance};
use stochastic_greedy::{gain, offline_optimum, pos_part, AlgoParams, DiscreteDistribution, Instance};

fn dist() -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec((0u8..6, 1u8..10), 1..5).prop_map(|raw| {
        let total: f64 = raw.iter().map(|r| r.1 as f64).sum();
        DiscreteDistribution::from_atoms(raw.iter().map(|&(w, p)| (w as f64 * 0.5, p as f64 / total)).collect())
    })
}

fn instance(max_m: usize, max_n: usize) -> impl Strategy<Value = Instance> {
    (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
        prop::collection::vec(prop_oneof![Just(0.0), 0.0..5.0f64, (1u8..4).prop_map(f64::from)], m * n)
            .prop_map(move |w| Instance::new(n, w).unwrap())
    })
}

proptest! {
    #[test]
    fn plus_part_splits_any_number(x in -1e6..1e6f64) {
        prop_assert_eq!(pos_part(x) - pos_part(-x), x);
        prop_assert!(pos_part(x) >= 0.0);
    }

    #[test]
    fn gain_identity(w in 0.0..10.0f64, m in 0.0..10.0f64) {
        // Gain = w − MaxW + (MaxW − w)^+
        prop_assert!((gain(w, m) - (w - m + pos_part(m - w))).abs() < 1e-12);
    }

    #[test]
    fn max_convolve_matches_double_loop(a in dist(), b in dist()) {
        let c = a.max_convolve(&b);
        for x in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5] {
            let mut mass = 0.0;
            for &(u, p) in a.atoms() {
                for &(v, q) in b.atoms() {
                    if u.max(v) == x {
                        mass += p * q;
                    }
                }
            }
            prop_assert!((c.mass_at(x) - mass).abs() < 1e-12);
        }
        prop_assert!((c.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expected_gain_matches_atoms(a in dist(), w in 0.0..3.0f64) {
        let direct: f64 = a.atoms().iter().map(|&(x, p)| p * gain(w, x)).sum();
        prop_assert!((a.expected_gain(w) - direct).abs() < 1e-12);
    }

    #[test]
    fn optimum_matches_brute_force(inst in instance(7, 5)) {
        let fast = offline_optimum(&inst);
        prop_assert!((fast.value - common::brute_force_opt(&inst)).abs() < 1e-9);
        // the reported matching is injective and achieves the value
        let mut used = vec![false; inst.num_advertisers()];
        let mut total = 0.0;
        for (i, a) in fast.matched.iter().enumerate() {
            if let Some(a) = *a {
                prop_assert!(!used[a]);
                used[a] = true;
                total += inst.weight(i, a);
            }
        }
        prop_assert!((total - fast.value).abs() < 1e-9);
    }

    #[test]
    fn file_round_trip(inst in instance(6, 6)) {
        prop_assert_eq!(parse_instance(&format_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn exact_engines_agree(inst in instance(6, 4)) {
        let table = compute_policy(&inst, AlgoParams::default()).unwrap();
        let e = enumerate_exact(&inst, PolicySource::Frozen(&table), 8).unwrap();
        let d = propagate(&inst, PolicySource::Frozen(&table)).unwrap();
        for (re, rd) in e.run.e_gains.iter().zip(&d.run.e_gains) {
            for (x, y) in re.iter().zip(rd) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
        prop_assert!((e.total_probability - 1.0).abs() < 1e-12);
        prop_assert!((e.run.stoch_alloc() - e.run.final_expected_value()).abs() < 1e-9);
    }

    #[test]
    fn stoch_alloc_between_half_opt_and_opt(inst in instance(6, 4)) {
        let d = propagate(&inst, PolicySource::Lockstep(AlgoParams::default())).unwrap();
        let opt = offline_optimum(&inst).value;
        prop_assert!(d.run.stoch_alloc() <= opt + 1e-9);
        prop_assert!(d.run.stoch_alloc() >= 0.5 * opt - 1e-9);
    }
}
