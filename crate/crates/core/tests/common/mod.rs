//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use stochastic_greedy::harness::{generate, standard_suite, GeneratorSpec, WeightLaw};
use stochastic_greedy::Instance;

/// The seeded random family used for engine equivalence: m ≤ 6, n ≤ 4.
pub fn random_small(count: u64) -> Vec<(String, Instance)> {
    (0..count)
        .map(|s| {
            let (m, n) = (1 + (s % 6) as usize, 1 + ((s / 6) % 4) as usize);
            let law = if s % 2 == 0 {
                WeightLaw::Uniform { density: 0.7 }
            } else {
                WeightLaw::Levels {
                    density: 0.8,
                    levels: 3,
                }
            };
            let spec = GeneratorSpec::Random { m, n, law, seed: s };
            (format!("rand{s:03}_{m}x{n}"), generate(&spec).unwrap())
        })
        .collect()
}

/// Standard suite plus the random family.
pub fn full_suite() -> Vec<(String, Instance)> {
    let mut v = standard_suite(0);
    v.extend(random_small(200));
    v
}

/// Best weight over all partial injective maps impressions → advertisers.
pub fn brute_force_opt(inst: &Instance) -> f64 {
    fn go(inst: &Instance, i: usize, used: &mut Vec<bool>) -> f64 {
        if i == inst.num_impressions() {
            return 0.0;
        }
        let mut best = go(inst, i + 1, used);
        for a in 0..inst.num_advertisers() {
            if !used[a] && inst.weight(i, a) > 0.0 {
                used[a] = true;
                best = best.max(inst.weight(i, a) + go(inst, i + 1, used));
                used[a] = false;
            }
        }
        best
    }
    go(inst, 0, &mut vec![false; inst.num_advertisers()])
}

/// Render an instance in the plain-text file format, for violation reports.
pub fn show(inst: &Instance) -> String {
    stochastic_greedy::io::format_instance(inst)
}
