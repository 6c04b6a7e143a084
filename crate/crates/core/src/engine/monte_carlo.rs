//! Sampled expectations under a frozen policy.
//!
//! Coins come from ChaCha8 with the stream selected by replica and the word
//! position by impression, so a replica's draws never depend on how the work
//! was scheduled. Replicas are folded in fixed-size chunks, merged in chunk
//! order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{resolve, CoinOutcome, UBucket};
use crate::error::EngineError;
use crate::exec::Execution;
use crate::instance::{gain, Instance};
use crate::policy::PolicyTable;

const CHUNK: usize = 512;
/// 32-bit words reserved per impression; two f64 draws use four.
const WORDS_PER_IMPRESSION: u128 = 16;

/// Coins for `(replica, impression)`; independent of evaluation order.
pub fn sample_coins(seed: u64, replica: u64, impression: usize, split_first: f64) -> CoinOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng.set_word_pos(impression as u128 * WORDS_PER_IMPRESSION);
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    CoinOutcome {
        bucket: UBucket::from_uniform(u),
        aux: v < 0.5,
        fallback_first: u < split_first,
    }
}

/// Running mean / M2 accumulator (Chan et al. merge).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n / n;
        self.m2 += o.m2 + d * d * self.n * o.n / n;
        self.n = n;
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2.max(0.0) / (self.n - 1.0) / self.n).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub replicas: usize,
    pub e_gain: Vec<Vec<f64>>,
    pub e_gain_stderr: Vec<Vec<f64>>,
    pub marginal_gain: Vec<f64>,
    pub marginal_stderr: Vec<f64>,
    pub value: f64,
    pub value_stderr: f64,
}

struct Acc {
    gains: Vec<Moments>,
    marginal: Vec<Moments>,
    value: Moments,
}

/// One sampled run: per-(i,a) realised `Gain_{i,a}`, the assigned advertiser
/// per impression, and final value.
pub(crate) fn replay(
    instance: &Instance,
    table: &PolicyTable,
    mut coin: impl FnMut(usize, f64) -> CoinOutcome,
    mut on_step: impl FnMut(usize, &[f64], usize),
) -> f64 {
    let n = instance.num_advertisers();
    let mut maxw = vec![0.0; n];
    let mut marks = vec![3u8; n];
    for (i, d) in table.decisions.iter().enumerate() {
        let c = coin(i, d.split.0);
        let (target, upd) = resolve(d, &marks, &c);
        on_step(i, &maxw, target);
        maxw[target] = f64::max(maxw[target], instance.weight(i, target));
        if let Some(u) = upd {
            for (a, v) in u {
                marks[a] = v;
            }
        }
    }
    maxw.iter().sum()
}

pub fn mc_estimate(
    instance: &Instance,
    table: &PolicyTable,
    replicas: usize,
    seed: u64,
    exec: Execution,
) -> Result<McReport, EngineError> {
    if replicas == 0 {
        return Err(EngineError::NoReplicas);
    }
    table.check(instance)?;
    let m = instance.num_impressions();
    let n = instance.num_advertisers();
    let chunks = replicas.div_ceil(CHUNK);
    let partials = exec.map_range(chunks, |c| {
        let mut acc = Acc {
            gains: vec![Moments::default(); m * n],
            marginal: vec![Moments::default(); m],
            value: Moments::default(),
        };
        for r in c * CHUNK..((c + 1) * CHUNK).min(replicas) {
            let value = replay(
                instance,
                table,
                |i, s| sample_coins(seed, r as u64, i, s),
                |i, maxw, target| {
                    let row = instance.row(i);
                    for a in 0..n {
                        acc.gains[i * n + a].push(gain(row[a], maxw[a]));
                    }
                    acc.marginal[i].push(gain(row[target], maxw[target]));
                },
            );
            acc.value.push(value);
        }
        acc
    });
    let mut total = Acc {
        gains: vec![Moments::default(); m * n],
        marginal: vec![Moments::default(); m],
        value: Moments::default(),
    };
    for p in &partials {
        for (t, s) in total.gains.iter_mut().zip(&p.gains) {
            t.merge(s);
        }
        for (t, s) in total.marginal.iter_mut().zip(&p.marginal) {
            t.merge(s);
        }
        total.value.merge(&p.value);
    }
    let grid = |f: fn(&Moments) -> f64| -> Vec<Vec<f64>> {
        (0..m)
            .map(|i| (0..n).map(|a| f(&total.gains[i * n + a])).collect())
            .collect()
    };
    Ok(McReport {
        replicas,
        e_gain: grid(|x| x.mean),
        e_gain_stderr: grid(Moments::stderr),
        marginal_gain: total.marginal.iter().map(|x| x.mean).collect(),
        marginal_stderr: total.marginal.iter().map(Moments::stderr).collect(),
        value: total.value.mean,
        value_stderr: total.value.stderr(),
    })
}
