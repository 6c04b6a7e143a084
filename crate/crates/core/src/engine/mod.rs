//! Expectation engines.
//!
//! Decisions at time t depend only on expectations over times before t, so an
//! exact engine and the [`PolicyState`] advance in lockstep: ask the engine
//! for `E[Gain_{i,·}]`, let the policy decide, feed the decision back. A
//! finished [`PolicyTable`] can also be replayed frozen through any engine.

mod enumerate;
pub(crate) mod monte_carlo;
mod propagate;

pub use enumerate::{enumerate_exact, EnumerationReport, Enumerator, DEFAULT_ENUM_CAP};
pub use monte_carlo::{mc_estimate, sample_coins, McReport};
pub use propagate::{propagate, AnchorBelief, PropagationReport, Propagator};

use crate::distribution::DiscreteDistribution;
use crate::error::EngineError;
use crate::instance::Instance;
use crate::policy::{AlgoParams, Branch, PolicyState, PolicyTable, StepDecision};

/// Which third of [0, 1] the arrival's uniform draw fell in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UBucket {
    /// u ≤ 1/3
    Low,
    /// 1/3 < u ≤ 2/3
    Mid,
    /// u > 2/3
    High,
}

impl UBucket {
    pub fn from_uniform(u: f64) -> Self {
        if u <= 1.0 / 3.0 {
            UBucket::Low
        } else if u <= 2.0 / 3.0 {
            UBucket::Mid
        } else {
            UBucket::High
        }
    }
}

/// The random inputs consumed at one arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoinOutcome {
    pub bucket: UBucket,
    /// Fair coin for the non-adaptive part of the top third; `true` → a1.
    pub aux: bool,
    /// Fallback pair coin; `true` → a1 (probability `split.0`).
    pub fallback_first: bool,
}

/// Mark written for `(advertiser, value)` pairs by an adaptive step.
pub type MarkUpdate = Option<[(usize, u8); 2]>;

/// Where impression goes under `coin`, given the current Marks.
pub fn resolve(d: &StepDecision, marks: &[u8], coin: &CoinOutcome) -> (usize, MarkUpdate) {
    match d.branch {
        Branch::FallbackSingle => (d.a1, None),
        Branch::FallbackPair => {
            let a2 = d.a2.expect("pair has a2");
            (if coin.fallback_first { d.a1 } else { a2 }, None)
        }
        Branch::AdaptiveCapable => {
            let a1 = d.a1;
            let a2 = d.a2.expect("adaptive step has a2");
            match coin.bucket {
                UBucket::Low => (a1, Some([(a1, 1), (a2, 2)])),
                UBucket::Mid => (a2, Some([(a2, 1), (a1, 2)])),
                UBucket::High => {
                    let al = d.a_ell().expect("adaptive step has ell");
                    let other = d.a_other().expect("adaptive step has ell");
                    let target = match marks[al] {
                        1 if d.adapt_gain[al] > 0.0 => other,
                        2 if d.adapt_gain[al] > 0.0 => al,
                        _ if coin.aux => a1,
                        _ => a2,
                    };
                    (target, Some([(a1, 3), (a2, 3)]))
                }
            }
        }
    }
}

/// The coin outcomes worth distinguishing for `d`, with their probabilities.
pub fn coin_support(d: &StepDecision) -> Vec<(f64, CoinOutcome)> {
    let base = CoinOutcome {
        bucket: UBucket::Low,
        aux: true,
        fallback_first: true,
    };
    match d.branch {
        Branch::FallbackSingle => vec![(1.0, base)],
        Branch::FallbackPair => [(d.split.0, true), (d.split.1, false)]
            .into_iter()
            .filter(|&(p, _)| p > 0.0)
            .map(|(p, f)| {
                (
                    p,
                    CoinOutcome {
                        fallback_first: f,
                        ..base
                    },
                )
            })
            .collect(),
        Branch::AdaptiveCapable => {
            let mut v = Vec::with_capacity(6);
            for bucket in [UBucket::Low, UBucket::Mid, UBucket::High] {
                for aux in [true, false] {
                    v.push((
                        1.0 / 6.0,
                        CoinOutcome {
                            bucket,
                            aux,
                            fallback_first: true,
                        },
                    ));
                }
            }
            v
        }
    }
}

/// An engine that tracks exact `MaxW` marginals.
pub trait ExactEngine {
    fn num_advertisers(&self) -> usize;
    /// `E[Gain_{i,a}]` for every advertiser, given row `i`'s weights.
    fn expected_gains(&self, row: &[f64]) -> Vec<f64>;
    /// Advance one step; returns `MarginalGain_i`.
    fn apply(&mut self, row: &[f64], decision: &StepDecision) -> f64;
    /// Current `D^t_a` for every advertiser.
    fn marginals(&self) -> Vec<DiscreteDistribution>;
}

/// Where decisions come from while driving an engine.
#[derive(Debug, Clone, Copy)]
pub enum PolicySource<'a> {
    /// Decide as we go from this engine's own expectations.
    Lockstep(AlgoParams),
    /// Replay a table computed elsewhere.
    Frozen(&'a PolicyTable),
}

/// Output common to every exact engine.
#[derive(Debug, Clone)]
pub struct EngineRun {
    pub table: PolicyTable,
    /// Expected gains computed by this engine (equal to the table's in lockstep).
    pub e_gains: Vec<Vec<f64>>,
    /// `dists[t][a]` is `D^t_a`, t = 0..=m.
    pub dists: Vec<Vec<DiscreteDistribution>>,
    pub marginal_gain: Vec<f64>,
}

impl EngineRun {
    pub fn stoch_alloc(&self) -> f64 {
        self.marginal_gain.iter().sum()
    }

    /// `Σ_a E[MaxW^m_a]`, an independent route to the same number.
    pub fn final_expected_value(&self) -> f64 {
        self.dists
            .last()
            .map_or(0.0, |ds| ds.iter().map(|d| d.mean()).sum())
    }

    pub fn expected_maxw(&self, t: usize, a: usize) -> f64 {
        self.dists[t][a].mean()
    }
}

pub fn drive<E: ExactEngine>(
    instance: &Instance,
    source: PolicySource<'_>,
    engine: &mut E,
) -> Result<EngineRun, EngineError> {
    let m = instance.num_impressions();
    let n = instance.num_advertisers();
    let (params, mut state) = match source {
        PolicySource::Lockstep(params) => {
            params.validate()?;
            (params, Some(PolicyState::new(params, n)))
        }
        PolicySource::Frozen(table) => {
            table.check(instance)?;
            (table.params, None)
        }
    };
    let mut decisions = Vec::with_capacity(m);
    let mut e_gains = Vec::with_capacity(m);
    let mut dists = Vec::with_capacity(m + 1);
    let mut marginal_gain = Vec::with_capacity(m);
    dists.push(engine.marginals());
    for i in 0..m {
        let row = instance.row(i);
        let gains = engine.expected_gains(row);
        let decision = match (&mut state, source) {
            (Some(st), _) => st.step(instance, i, gains.clone()),
            (None, PolicySource::Frozen(table)) => table.decisions[i].clone(),
            (None, PolicySource::Lockstep(_)) => unreachable!(),
        };
        marginal_gain.push(engine.apply(row, &decision));
        dists.push(engine.marginals());
        e_gains.push(gains);
        decisions.push(decision);
    }
    Ok(EngineRun {
        table: PolicyTable {
            params,
            num_advertisers: n,
            decisions,
        },
        e_gains,
        dists,
        marginal_gain,
    })
}

/// Policy table from the polynomial-time propagation engine.
pub fn compute_policy(instance: &Instance, params: AlgoParams) -> Result<PolicyTable, EngineError> {
    let mut p = Propagator::new(instance.num_advertisers());
    Ok(drive(instance, PolicySource::Lockstep(params), &mut p)?.table)
}

/// Which engine computes expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Enum,
    Dist,
    Mc,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Enum => "enum",
            EngineKind::Dist => "dist",
            EngineKind::Mc => "mc",
        }
    }
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "enum" => Ok(EngineKind::Enum),
            "dist" => Ok(EngineKind::Dist),
            "mc" => Ok(EngineKind::Mc),
            other => Err(format!("unknown engine `{other}` (enum, dist, mc)")),
        }
    }
}

/// CSV rows `(t, impression, advertiser, E_gain, engine, stderr)`.
pub fn write_expectations_csv<W: std::io::Write>(
    out: W,
    engine: EngineKind,
    e_gains: &[Vec<f64>],
    stderr: Option<&[Vec<f64>]>,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "impression", "advertiser", "E_gain", "engine", "stderr"])?;
    for (i, row) in e_gains.iter().enumerate() {
        for (a, g) in row.iter().enumerate() {
            let se = stderr.map_or(String::new(), |s| format!("{}", s[i][a]));
            w.write_record([
                (i + 1).to_string(),
                i.to_string(),
                a.to_string(),
                format!("{g}"),
                engine.name().to_string(),
                se,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
