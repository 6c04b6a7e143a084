//! Runnable algorithms: the deterministic greedy baseline, sampled runs of the
//! randomized variants under a frozen policy, and exact expected values.

use crate::engine::{
    compute_policy, enumerate_exact, mc_estimate, monte_carlo::replay, propagate, CoinOutcome,
    EngineKind, PolicySource, DEFAULT_ENUM_CAP,
};
use crate::error::EngineError;
use crate::exec::Execution;
use crate::instance::{gain, AssignmentTrace, Instance};
use crate::optimum::offline_optimum;
use crate::policy::{AlgoParams, PolicyTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Greedy,
    Sg,
    Osg,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Sg => "sg",
            Algorithm::Osg => "osg",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Algorithm::Greedy),
            "sg" => Ok(Algorithm::Sg),
            "osg" => Ok(Algorithm::Osg),
            other => Err(format!("unknown algorithm `{other}` (greedy, sg, osg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub eps: f64,
    pub delta: f64,
    /// Only read for [`Algorithm::Osg`].
    pub p: f64,
    pub engine: EngineKind,
    pub seed: u64,
    pub replicas: usize,
    pub enum_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Sg,
            eps: 0.082,
            delta: 0.445,
            p: 0.8613,
            engine: EngineKind::Dist,
            seed: 0,
            replicas: 10_000,
            enum_cap: DEFAULT_ENUM_CAP,
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> AlgoParams {
        match self.algorithm {
            Algorithm::Osg => AlgoParams::osg(self.eps, self.delta, self.p),
            _ => AlgoParams::sg(self.eps, self.delta),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub engine: Option<EngineKind>,
    /// StochAlloc (or the realised value for greedy).
    pub value: f64,
    /// Monte Carlo standard error, if sampled.
    pub stderr: Option<f64>,
    pub marginal_gains: Vec<f64>,
    pub opt: f64,
    pub ratio: f64,
    /// Decision table of the randomized variants.
    pub policy: Option<PolicyTable>,
}

fn ratio(value: f64, opt: f64) -> f64 {
    if opt > 0.0 {
        value / opt
    } else {
        1.0
    }
}

/// Each arrival goes to the advertiser with the largest realised gain
/// (lowest id on ties).
pub fn run_greedy(instance: &Instance) -> (AssignmentTrace, RunReport) {
    let n = instance.num_advertisers();
    let mut maxw = vec![0.0f64; n];
    let mut assigned = Vec::with_capacity(instance.num_impressions());
    let mut marginal_gains = Vec::with_capacity(instance.num_impressions());
    for row in instance.rows() {
        let mut best = 0;
        for a in 1..n {
            if gain(row[a], maxw[a]) > gain(row[best], maxw[best]) {
                best = a;
            }
        }
        marginal_gains.push(gain(row[best], maxw[best]));
        maxw[best] = maxw[best].max(row[best]);
        assigned.push(best);
    }
    let value = maxw.iter().sum();
    let opt = offline_optimum(instance).value;
    let report = RunReport {
        algorithm: Algorithm::Greedy,
        engine: None,
        value,
        stderr: None,
        marginal_gains,
        opt,
        ratio: ratio(value, opt),
        policy: None,
    };
    (AssignmentTrace::new(assigned), report)
}

/// One sampled execution with coins drawn for `(seed, replica)`.
pub fn sample_run(
    instance: &Instance,
    policy: &PolicyTable,
    seed: u64,
    replica: u64,
) -> Result<AssignmentTrace, EngineError> {
    policy.check(instance)?;
    let mut assigned = Vec::with_capacity(policy.len());
    replay(
        instance,
        policy,
        |i, s| crate::engine::sample_coins(seed, replica, i, s),
        |_, _, a| assigned.push(a),
    );
    Ok(AssignmentTrace::new(assigned))
}

/// Execution with explicitly supplied coins (one per impression).
pub fn run_with_coins(
    instance: &Instance,
    policy: &PolicyTable,
    coins: &[CoinOutcome],
) -> Result<AssignmentTrace, EngineError> {
    policy.check(instance)?;
    if coins.len() != policy.len() {
        return Err(EngineError::PolicyMismatch {
            policy: policy.len(),
            instance: coins.len(),
        });
    }
    let mut assigned = Vec::with_capacity(policy.len());
    replay(instance, policy, |i, _| coins[i], |_, _, a| assigned.push(a));
    Ok(AssignmentTrace::new(assigned))
}

/// StochAlloc under the configured engine. Monte Carlo freezes the policy
/// from propagation first, then samples coins only.
pub fn expected_value(instance: &Instance, config: &RunConfig) -> Result<RunReport, EngineError> {
    if config.algorithm == Algorithm::Greedy {
        return Ok(run_greedy(instance).1);
    }
    let params = config.params();
    params.validate()?;
    let opt = offline_optimum(instance).value;
    let (value, stderr, marginal_gains, table) = match config.engine {
        EngineKind::Enum => {
            let r = enumerate_exact(instance, PolicySource::Lockstep(params), config.enum_cap)?;
            (r.run.stoch_alloc(), None, r.run.marginal_gain, r.run.table)
        }
        EngineKind::Dist => {
            let r = propagate(instance, PolicySource::Lockstep(params))?;
            (r.run.stoch_alloc(), None, r.run.marginal_gain, r.run.table)
        }
        EngineKind::Mc => {
            let table = compute_policy(instance, params)?;
            let r = mc_estimate(instance, &table, config.replicas, config.seed, Execution::Sequential)?;
            (r.value, Some(r.value_stderr), r.marginal_gain, table)
        }
    };
    Ok(RunReport {
        algorithm: config.algorithm,
        engine: Some(config.engine),
        value,
        stderr,
        marginal_gains,
        opt,
        ratio: ratio(value, opt),
        policy: Some(table),
    })
}
