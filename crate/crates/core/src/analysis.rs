//! Exact X/Y/Z decomposition and the Excess bookkeeping that spreads it over
//! impressions.
//!
//! Everything here is enumeration-backed: the instance is squared with
//! zero-weight dummies so every impression has an OPT partner `a*_i`, then
//! the exhaustive engine supplies the exact `MaxW` marginal at every time.

use std::io::Write;

use crate::engine::{enumerate_exact, EngineRun, EnumerationReport, PolicySource};
use crate::error::EngineError;
use crate::instance::Instance;
use crate::optimum::offline_optimum;
use crate::policy::{AlgoParams, Branch};

/// Slack allowed on every "≥" checked here.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// The squared instance everything below refers to.
    pub padded: Instance,
    /// Impressions of the original instance; later rows are dummies.
    pub num_real: usize,
    pub run: EngineRun,
    pub assign_prob: Vec<Vec<f64>>,
    pub opt: f64,
    /// `a*_i` per padded impression.
    pub a_star: Vec<usize>,
    /// `i'` with `a*_{i'} = a`, per padded advertiser.
    pub owner: Vec<usize>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Decomposition {
    pub fn stoch_alloc(&self) -> f64 {
        self.run.stoch_alloc()
    }

    pub fn xyz_total(&self) -> f64 {
        self.x.iter().chain(&self.y).chain(&self.z).sum()
    }

    /// `2·StochAlloc − OPT − Σ(X+Y+Z)`, zero up to rounding.
    pub fn identity_gap(&self) -> f64 {
        2.0 * self.stoch_alloc() - self.opt - self.xyz_total()
    }

    /// Expected increase of `Y_{i'}` at time `t` (1-based).
    pub fn delta_y(&self, i_prime: usize, t: usize) -> f64 {
        if t < i_prime + 1 {
            return 0.0;
        }
        let a = self.a_star[i_prime];
        self.run.dists[t][a].mean() - self.run.dists[t - 1][a].mean()
    }

    /// Expected increase of `Z_{i'}` at time `t` (1-based).
    pub fn delta_z(&self, i_prime: usize, t: usize) -> f64 {
        if t > i_prime {
            return 0.0;
        }
        let a = self.a_star[i_prime];
        let w = self.padded.weight(i_prime, a);
        self.run.dists[t][a].expected_excess_over(w)
            - self.run.dists[t - 1][a].expected_excess_over(w)
    }

    pub fn m(&self, i: usize) -> f64 {
        self.run.table.decisions[i].m_i
    }

    pub fn e_gain_star(&self, i: usize) -> f64 {
        self.run.e_gains[i][self.a_star[i]]
    }
}

pub fn decompose(
    instance: &Instance,
    params: AlgoParams,
    cap: usize,
) -> Result<Decomposition, EngineError> {
    let padded = instance.pad_with_dummies();
    let k = padded.num_impressions();
    let rep: EnumerationReport = enumerate_exact(&padded, PolicySource::Lockstep(params), cap)?;
    let opt = offline_optimum(&padded);
    let a_star: Vec<usize> = opt
        .matched
        .iter()
        .map(|a| a.expect("square instance is perfectly matched"))
        .collect();
    let mut owner = vec![0; k];
    for (i, &a) in a_star.iter().enumerate() {
        owner[a] = i;
    }
    let run = rep.run;
    let (mut x, mut y, mut z) = (Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k));
    for i in 0..k {
        let a = a_star[i];
        let w = padded.weight(i, a);
        x.push(run.marginal_gain[i] - run.e_gains[i][a]);
        y.push(run.dists[k][a].mean() - run.dists[i][a].mean());
        z.push(run.dists[i][a].expected_excess_over(w));
    }
    Ok(Decomposition {
        padded,
        num_real: instance.num_impressions(),
        run,
        assign_prob: rep.assign_prob,
        opt: opt.value,
        a_star,
        owner,
        x,
        y,
        z,
    })
}

/// Which Excess distribution rule, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mechanism {
    /// Fallback steps give `σM/2` to each candidate's index.
    Base { zeta: f64, beta: f64, sigma: f64 },
    /// Fallback steps split `σM` as `p : 1−p` between the candidates' indices.
    Optimized {
        zeta: f64,
        beta: f64,
        sigma: f64,
        p: f64,
    },
}

impl Mechanism {
    fn zbs(&self) -> (f64, f64, f64) {
        match *self {
            Mechanism::Base { zeta, beta, sigma } => (zeta, beta, sigma),
            Mechanism::Optimized {
                zeta, beta, sigma, ..
            } => (zeta, beta, sigma),
        }
    }

    fn validate(&self) -> Result<(), EngineError> {
        let (zeta, beta, sigma) = self.zbs();
        let mut named = vec![("zeta", zeta), ("beta", beta), ("sigma", sigma)];
        if let Mechanism::Optimized { p, .. } = *self {
            named.push(("p", p));
        }
        for (name, value) in named {
            if !(0.0..=1.0).contains(&value) {
                return Err(EngineError::Param { name, value });
            }
        }
        Ok(())
    }
}

/// What an increment pays for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    /// A share of `Δ^t(Y_{i'})`.
    DeltaY(usize),
    /// A share of `Δ^t(Z_{i'})`.
    DeltaZ(usize),
    /// `2·AdaptGain_{i,a}/3` for advertiser `a`.
    AdaptShare(usize),
    /// σ part of a fallback step, attributed to candidate `a`.
    Sigma(usize),
    Beta,
    /// `X_i` minus what impression `i` handed out.
    Residual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    /// 1-based arrival time.
    pub time: usize,
    /// Mechanism line that made the increment.
    pub line: u8,
    /// `None` when the recipient does not exist and the amount is dropped.
    pub recipient: Option<usize>,
    pub amount: f64,
    pub source: Source,
}

#[derive(Debug, Clone, Default)]
pub struct ExcessLedger {
    pub excess: Vec<f64>,
    pub log: Vec<LedgerEntry>,
}

impl ExcessLedger {
    pub fn total(&self) -> f64 {
        self.excess.iter().sum()
    }

    /// Amounts that had no recipient.
    pub fn dropped(&self) -> f64 {
        self.log
            .iter()
            .filter(|e| e.recipient.is_none())
            .map(|e| e.amount)
            .sum()
    }

    fn credit(&mut self, time: usize, line: u8, recipient: Option<usize>, amount: f64, source: Source) {
        if let Some(r) = recipient {
            self.excess[r] += amount;
        }
        self.log.push(LedgerEntry {
            time,
            line,
            recipient,
            amount,
            source,
        });
    }
}

pub fn run_mechanism(dec: &Decomposition, mech: Mechanism) -> Result<ExcessLedger, EngineError> {
    mech.validate()?;
    let (zeta, beta, sigma) = mech.zbs();
    let k = dec.padded.num_impressions();
    let mut led = ExcessLedger {
        excess: vec![0.0; k],
        log: Vec::new(),
    };
    for (i, d) in dec.run.table.decisions.iter().enumerate() {
        let t = i + 1;
        let cands: Vec<usize> = std::iter::once(d.a1).chain(d.a2).collect();
        for &a in &cands {
            let ip = dec.owner[a];
            if ip <= i {
                let dy = dec.delta_y(ip, t);
                let mut who = vec![i];
                for r in [Some(ip), d.index_before(a)].into_iter().flatten() {
                    if !who.contains(&r) {
                        who.push(r);
                    }
                }
                let share = dy / who.len() as f64;
                for r in who {
                    led.credit(t, 7, Some(r), share, Source::DeltaY(ip));
                }
            } else if dec.padded.weight(i, a) > dec.padded.weight(ip, a) {
                let dz = dec.delta_z(ip, t);
                led.credit(t, 9, Some(i), (1.0 - zeta) * dz, Source::DeltaZ(ip));
                led.credit(t, 9, Some(ip), zeta * dz, Source::DeltaZ(ip));
            }
        }

        let a_star = dec.a_star[i];
        let mut handed = 0.0;
        if d.branch == Branch::AdaptiveCapable {
            let mut seen: Vec<usize> = Vec::with_capacity(3);
            for a in cands.iter().copied().chain([a_star]) {
                if seen.contains(&a) {
                    continue;
                }
                seen.push(a);
                let amt = 2.0 * d.adapt_gain[a] / 3.0;
                if amt == 0.0 {
                    continue;
                }
                let r = d.index_before(a);
                if r.is_some() {
                    handed += amt;
                }
                led.credit(t, 12, r, amt, Source::AdaptShare(a));
            }
            led.credit(t, 13, Some(i), dec.x[i] - handed, Source::Residual);
        } else {
            let m = d.m_i;
            let (s1, s2) = match mech {
                Mechanism::Base { .. } => (sigma * m / 2.0, sigma * m / 2.0),
                Mechanism::Optimized { p, .. } => (p * sigma * m, (1.0 - p) * sigma * m),
            };
            let first = d.index_before(d.a1);
            let mut pay = |led: &mut ExcessLedger, target: Option<usize>, amt: f64, src: Source| {
                if amt == 0.0 {
                    return;
                }
                // a missing target falls back to index(a1); if that is missing too the
                // amount has nowhere to go and is logged as dropped
                let r = target.or(first);
                if r.is_some() {
                    handed += amt;
                }
                led.credit(t, 15, r, amt, src);
            };
            pay(&mut led, first, s1, Source::Sigma(d.a1));
            let second = d.a2.and_then(|a| d.index_before(a));
            pay(&mut led, second, s2, Source::Sigma(d.a2.unwrap_or(d.a1)));
            pay(&mut led, d.index_before(a_star), beta * m, Source::Beta);
            led.credit(t, 16, Some(i), dec.x[i] - handed, Source::Residual);
        }
    }
    Ok(led)
}

/// Which lower bound each impression's Excess is held to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundKind {
    /// `Excess_i ≥ λ·M_i`.
    Base(f64),
    /// `Excess_i ≥ λ·E[Gain_{i,a*_i}]`.
    Optimized(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub impression: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub excess: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    /// `Σ Excess − Σ(X+Y+Z)`.
    pub sum_gap: f64,
    pub dropped: f64,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn violators(&self) -> impl Iterator<Item = &BoundRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// Per-impression check of the Excess lower bound (dummy impressions
/// included; their bound is zero).
pub fn verify_bounds(dec: &Decomposition, ledger: &ExcessLedger, kind: BoundKind) -> BoundReport {
    let rows = (0..dec.padded.num_impressions())
        .map(|i| {
            let bound = match kind {
                BoundKind::Base(l) => l * dec.m(i),
                BoundKind::Optimized(l) => l * dec.e_gain_star(i),
            };
            let excess = ledger.excess[i];
            BoundRow {
                impression: i,
                x: dec.x[i],
                y: dec.y[i],
                z: dec.z[i],
                excess,
                bound,
                margin: excess - bound,
                pass: excess - bound >= -CHECK_TOL,
            }
        })
        .collect();
    BoundReport {
        rows,
        sum_gap: ledger.total() - dec.xyz_total(),
        dropped: ledger.dropped(),
    }
}

pub fn write_bounds_csv<W: Write>(out: W, report: &BoundReport) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["impression", "X", "Y", "Z", "Excess", "bound", "margin", "pass"])?;
    for r in &report.rows {
        w.write_record([
            r.impression.to_string(),
            format!("{}", r.x),
            format!("{}", r.y),
            format!("{}", r.z),
            format!("{}", r.excess),
            format!("{}", r.bound),
            format!("{}", r.margin),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Slack of the per-step structural lemmas over every adaptive step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepLemmaReport {
    pub adaptive_steps: usize,
    /// `MarginalGain_i − (avg E[Gain] of a1, a2 + their AdaptGains)`, minimum.
    pub adaptivity_slack: Option<f64>,
    /// `P(assign to candidate) − 7/18`, minimum.
    pub probability_slack: Option<f64>,
    /// `E[Gain]/12 − AdaptGain`, minimum over all advertisers of all steps.
    pub adapt_vs_gain_slack: Option<f64>,
    /// `E[Gain] − 18(1−ε)/19·M_i` over members of B, minimum.
    pub b_gain_slack: Option<f64>,
    pub violations: Vec<String>,
}

fn fold_min(slot: &mut Option<f64>, v: f64) {
    *slot = Some(slot.map_or(v, |s| s.min(v)));
}

/// Checks the per-step lemmas against an exact run: the adaptivity bound on
/// MarginalGain, the 7/18 assignment floor, `AdaptGain ≤ E[Gain]/12` and the
/// B-membership gain floor.
pub fn step_lemmas(rep: &EnumerationReport, eps: f64) -> StepLemmaReport {
    let mut out = StepLemmaReport::default();
    for (i, d) in rep.run.table.decisions.iter().enumerate() {
        for (a, (&ag, &g)) in d.adapt_gain.iter().zip(&d.e_gains).enumerate() {
            let s = g / 12.0 - ag;
            fold_min(&mut out.adapt_vs_gain_slack, s);
            if s < -CHECK_TOL {
                out.violations
                    .push(format!("t={}: AdaptGain {ag} of advertiser {a} exceeds E[Gain]/12 = {}", i + 1, g / 12.0));
            }
        }
        if d.branch != Branch::AdaptiveCapable {
            continue;
        }
        out.adaptive_steps += 1;
        let a2 = d.a2.expect("adaptive step has a2");
        let floor = (d.e_gains[d.a1] + d.e_gains[a2]) / 2.0 + d.adapt_gain[d.a1] + d.adapt_gain[a2];
        let s = rep.run.marginal_gain[i] - floor;
        fold_min(&mut out.adaptivity_slack, s);
        if s < -CHECK_TOL {
            out.violations.push(format!(
                "t={}: MarginalGain {} below adaptivity floor {floor}",
                i + 1,
                rep.run.marginal_gain[i]
            ));
        }
        for a in [d.a1, a2] {
            let s = rep.assign_prob[i][a] - 7.0 / 18.0;
            fold_min(&mut out.probability_slack, s);
            if s < -CHECK_TOL {
                out.violations.push(format!(
                    "t={}: advertiser {a} assigned with probability {} < 7/18",
                    i + 1,
                    rep.assign_prob[i][a]
                ));
            }
        }
        for &a in &d.b {
            let s = d.e_gains[a] - 18.0 * (1.0 - eps) / 19.0 * d.m_i;
            fold_min(&mut out.b_gain_slack, s);
            if s < -CHECK_TOL {
                out.violations
                    .push(format!("t={}: B member {a} has E[Gain] {} below 18(1-eps)/19 M", i + 1, d.e_gains[a]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: Mechanism = Mechanism::Base {
        zeta: 0.955,
        beta: 0.00337198,
        sigma: 0.03362,
    };

    #[test]
    fn single_edge() {
        let one = Instance::from_rows(1, &[[2.0]]).unwrap();
        let dec = decompose(&one, AlgoParams::default(), 8).unwrap();
        assert_eq!((dec.x[0], dec.y[0], dec.z[0]), (0.0, 2.0, 0.0));
        assert_eq!(dec.identity_gap(), 0.0);
        let led = run_mechanism(&dec, BASE).unwrap();
        assert!((led.total() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn first_impression_has_no_z() {
        let inst = Instance::from_rows(2, &[[1.0, 3.0], [2.0, 1.0], [0.5, 4.0]]).unwrap();
        let dec = decompose(&inst, AlgoParams::default(), 8).unwrap();
        assert_eq!(dec.z[0], 0.0);
        assert!(dec.y.iter().chain(&dec.z).all(|&v| v >= -1e-12));
        assert!(dec.identity_gap().abs() < 1e-9);
        // Y and Z are exactly the sums of their increments
        let k = dec.padded.num_impressions();
        for i in 0..k {
            let ys: f64 = (1..=k).map(|t| dec.delta_y(i, t)).sum();
            let zs: f64 = (1..=k).map(|t| dec.delta_z(i, t)).sum();
            assert!((ys - dec.y[i]).abs() < 1e-12);
            assert!((zs - dec.z[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_params_outside_box() {
        let one = Instance::from_rows(1, &[[2.0]]).unwrap();
        let dec = decompose(&one, AlgoParams::default(), 8).unwrap();
        let bad = Mechanism::Base {
            zeta: 1.5,
            beta: 0.0,
            sigma: 0.0,
        };
        assert!(matches!(run_mechanism(&dec, bad), Err(EngineError::Param { name: "zeta", .. })));
    }

    #[test]
    fn zero_lambda_only_flags_negative_excess() {
        let inst = Instance::from_rows(2, &[[1.0, 1.0], [1.0, 0.0]]).unwrap();
        let dec = decompose(&inst, AlgoParams::default(), 8).unwrap();
        let led = run_mechanism(&dec, BASE).unwrap();
        let rep = verify_bounds(&dec, &led, BoundKind::Base(0.0));
        for r in &rep.rows {
            assert_eq!(r.pass, r.excess >= -CHECK_TOL);
        }
    }
}
