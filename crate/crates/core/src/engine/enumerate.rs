//! Exact expectations by walking every coin outcome, breadth first.
//!
//! States are (MaxW vector, Mark vector) with an attached probability; equal
//! states are merged after every step so the frontier stays small.

use std::collections::HashMap;

use super::{coin_support, drive, resolve, EngineRun, ExactEngine, PolicySource};
use crate::distribution::DiscreteDistribution;
use crate::error::EngineError;
use crate::instance::{gain, Instance};
use crate::policy::StepDecision;

pub const DEFAULT_ENUM_CAP: usize = 8;

#[derive(Debug, Clone)]
struct State {
    maxw: Vec<f64>,
    marks: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct Enumerator {
    n: usize,
    states: Vec<(State, f64)>,
    /// Per step, probability that the impression lands on each advertiser.
    assign_prob: Vec<Vec<f64>>,
}

impl Enumerator {
    pub fn new(num_advertisers: usize) -> Self {
        Self {
            n: num_advertisers,
            states: vec![(
                State {
                    maxw: vec![0.0; num_advertisers],
                    marks: vec![3; num_advertisers],
                },
                1.0,
            )],
            assign_prob: Vec::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn total_probability(&self) -> f64 {
        self.states.iter().map(|s| s.1).sum()
    }

    pub fn assign_prob(&self) -> &[Vec<f64>] {
        &self.assign_prob
    }
}

impl ExactEngine for Enumerator {
    fn num_advertisers(&self) -> usize {
        self.n
    }

    fn expected_gains(&self, row: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|a| {
                self.states
                    .iter()
                    .map(|(s, p)| p * gain(row[a], s.maxw[a]))
                    .sum()
            })
            .collect()
    }

    fn apply(&mut self, row: &[f64], d: &StepDecision) -> f64 {
        let support = coin_support(d);
        let mut index: HashMap<(Vec<u64>, Vec<u8>), usize> = HashMap::new();
        let mut next: Vec<(State, f64)> = Vec::new();
        let mut probs = vec![0.0; self.n];
        let mut marginal = 0.0;
        for (s, p) in &self.states {
            for (q, coin) in &support {
                let pq = p * q;
                let (target, marks) = resolve(d, &s.marks, coin);
                probs[target] += pq;
                marginal += pq * gain(row[target], s.maxw[target]);
                let mut ns = s.clone();
                ns.maxw[target] = ns.maxw[target].max(row[target]);
                if let Some(upd) = marks {
                    for (a, v) in upd {
                        ns.marks[a] = v;
                    }
                }
                let key = (
                    ns.maxw.iter().map(|w| w.to_bits()).collect(),
                    ns.marks.clone(),
                );
                match index.get(&key) {
                    Some(&k) => next[k].1 += pq,
                    None => {
                        index.insert(key, next.len());
                        next.push((ns, pq));
                    }
                }
            }
        }
        self.states = next;
        self.assign_prob.push(probs);
        marginal
    }

    fn marginals(&self) -> Vec<DiscreteDistribution> {
        (0..self.n)
            .map(|a| {
                DiscreteDistribution::from_atoms(
                    self.states.iter().map(|(s, p)| (s.maxw[a], *p)).collect(),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct EnumerationReport {
    pub run: EngineRun,
    /// `assign_prob[i][a]`: exact probability impression `i` goes to `a`.
    pub assign_prob: Vec<Vec<f64>>,
    pub final_states: usize,
    pub total_probability: f64,
}

/// Exhaustive oracle; refuses instances with more than `cap` impressions.
pub fn enumerate_exact(
    instance: &Instance,
    source: PolicySource<'_>,
    cap: usize,
) -> Result<EnumerationReport, EngineError> {
    let m = instance.num_impressions();
    if m > cap {
        return Err(EngineError::CapExceeded { m, cap });
    }
    let mut e = Enumerator::new(instance.num_advertisers());
    let run = drive(instance, source, &mut e)?;
    Ok(EnumerationReport {
        run,
        final_states: e.num_states(),
        total_probability: e.total_probability(),
        assign_prob: e.assign_prob,
    })
}
