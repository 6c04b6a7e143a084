//! The coin-independent half of the algorithm: everything decided at an
//! arrival from expected gains alone (candidate sets, the two choices, the
//! adaptive gains and the Color/index/Partner/S bookkeeping).

use std::fmt::Write as _;

use crate::error::EngineError;
use crate::instance::{pos_part, Instance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Fallback pairs are split 1/2–1/2.
    Sg,
    /// Fallback pairs are split p / (1 − p) in favour of the top advertiser.
    Osg { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoParams {
    pub eps: f64,
    pub delta: f64,
    pub variant: Variant,
}

impl AlgoParams {
    pub fn sg(eps: f64, delta: f64) -> Self {
        Self {
            eps,
            delta,
            variant: Variant::Sg,
        }
    }

    pub fn osg(eps: f64, delta: f64, p: f64) -> Self {
        Self {
            eps,
            delta,
            variant: Variant::Osg { p },
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let mut check = vec![("eps", self.eps), ("delta", self.delta)];
        if let Variant::Osg { p } = self.variant {
            check.push(("p", p));
        }
        for (name, value) in check {
            if !(0.0..=1.0).contains(&value) {
                return Err(EngineError::Param { name, value });
            }
        }
        Ok(())
    }
}

impl Default for AlgoParams {
    fn default() -> Self {
        Self::sg(0.082, 0.445)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    Green,
    Blue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvertiserMeta {
    pub color: Color,
    /// Impression that last picked this advertiser adaptively (`None` is the
    /// dummy impression 0).
    pub index: Option<usize>,
    pub partner: Option<usize>,
    pub s_accum: f64,
}

impl Default for AdvertiserMeta {
    fn default() -> Self {
        Self {
            color: Color::Green,
            index: None,
            partner: None,
            s_accum: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// |B| ≥ 2: the u-bucket / Mark machinery.
    AdaptiveCapable,
    FallbackSingle,
    FallbackPair,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::AdaptiveCapable => "adaptive",
            Branch::FallbackSingle => "single",
            Branch::FallbackPair => "pair",
        }
    }
}

/// Everything fixed at one arrival before any coin is looked at.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDecision {
    pub impression: usize,
    pub m_i: f64,
    pub e_gains: Vec<f64>,
    pub adapt_gain: Vec<f64>,
    pub b: Vec<usize>,
    pub b_prime: Vec<usize>,
    pub c: Vec<usize>,
    pub a1: usize,
    pub a2: Option<usize>,
    /// 1 or 2, adaptive branch only.
    pub ell: Option<u8>,
    pub branch: Branch,
    /// Probability of a1 / a2 in the fallback branches.
    pub split: (f64, f64),
    /// Advertiser metadata at the beginning of this time step.
    pub metas_before: Vec<AdvertiserMeta>,
}

impl StepDecision {
    /// `a_ℓ`, the advertiser whose Mark drives the adaptive third.
    pub fn a_ell(&self) -> Option<usize> {
        match self.ell? {
            1 => Some(self.a1),
            _ => self.a2,
        }
    }

    pub fn a_other(&self) -> Option<usize> {
        match self.ell? {
            1 => self.a2,
            _ => Some(self.a1),
        }
    }

    pub fn index_before(&self, a: usize) -> Option<usize> {
        self.metas_before[a].index
    }
}

/// Running Color/index/Partner/S state plus the expected gains seen so far
/// (AdaptGain needs `E[Gain_{index(a),a}]` from the step that set the index).
#[derive(Debug, Clone)]
pub struct PolicyState {
    params: AlgoParams,
    metas: Vec<AdvertiserMeta>,
    gains_at: Vec<Vec<f64>>,
}

impl PolicyState {
    pub fn new(params: AlgoParams, num_advertisers: usize) -> Self {
        Self {
            params,
            metas: vec![AdvertiserMeta::default(); num_advertisers],
            gains_at: Vec::new(),
        }
    }

    pub fn metas(&self) -> &[AdvertiserMeta] {
        &self.metas
    }

    /// Decide impression `i` given `E[Gain_{i,a}]` for every advertiser and
    /// apply the bookkeeping updates.
    pub fn step(&mut self, instance: &Instance, i: usize, e_gains: Vec<f64>) -> StepDecision {
        let n = instance.num_advertisers();
        let AlgoParams { eps, delta, variant } = self.params;
        let row = instance.row(i);
        let m_i = e_gains.iter().copied().fold(0.0, f64::max);
        let metas_before = self.metas.clone();

        let w_index = |a: usize| self.metas[a].index.map_or(0.0, |j| instance.weight(j, a));
        let eligible: Vec<bool> = (0..n).map(|a| row[a] >= w_index(a) - delta * m_i).collect();
        let adapt_gain: Vec<f64> = (0..n)
            .map(|a| {
                let meta = &self.metas[a];
                match meta.index {
                    Some(j) if meta.color == Color::Blue && eligible[a] => adapt_gain(
                        row[a],
                        instance.weight(j, a),
                        self.gains_at[j][a],
                        meta.s_accum,
                    ),
                    _ => 0.0,
                }
            })
            .collect();
        let score = |a: usize| e_gains[a] + 2.0 * adapt_gain[a] / 3.0;
        let thresh = (1.0 - eps) * m_i;
        let b: Vec<usize> = (0..n).filter(|&a| eligible[a] && score(a) >= thresh).collect();
        let b_prime: Vec<usize> = (0..n)
            .filter(|&a| eligible[a] && e_gains[a] >= thresh)
            .collect();
        let c: Vec<usize> = (0..n)
            .filter(|&a| !eligible[a] && e_gains[a] >= thresh)
            .collect();

        let mut d = StepDecision {
            impression: i,
            m_i,
            e_gains: e_gains.clone(),
            adapt_gain: adapt_gain.clone(),
            b: b.clone(),
            b_prime: b_prime.clone(),
            c: c.clone(),
            a1: 0,
            a2: None,
            ell: None,
            branch: Branch::FallbackSingle,
            split: (1.0, 0.0),
            metas_before,
        };

        if b.len() >= 2 {
            let a1 = argmax(b.iter().copied(), score).expect("|B| >= 2");
            let a2 = argmax(b.iter().copied().filter(|&a| a != a1), score).expect("|B| >= 2");
            for a in [a1, a2] {
                let meta = &mut self.metas[a];
                meta.color = Color::Blue;
                meta.s_accum = 0.0;
                meta.index = Some(i);
                if let Some(p) = meta.partner {
                    if p != a1 && p != a2 {
                        self.metas[p].color = Color::Green;
                    }
                }
            }
            self.metas[a1].partner = Some(a2);
            self.metas[a2].partner = Some(a1);
            d.a1 = a1;
            d.a2 = Some(a2);
            d.ell = Some(if adapt_gain[a2] > adapt_gain[a1] { 2 } else { 1 });
            d.branch = Branch::AdaptiveCapable;
            d.split = (0.5, 0.5);
        } else {
            let top = argmax(0..n, |a| e_gains[a]).expect("at least one advertiser");
            match variant {
                Variant::Sg => {
                    if b_prime.len() + c.len() == 1 {
                        d.a1 = top;
                        self.metas[top].s_accum += m_i;
                    } else {
                        let a1 = match b_prime.first() {
                            Some(&a) => a,
                            None => argmax(c.iter().copied(), |a| e_gains[a]).expect("|C| >= 2"),
                        };
                        let a2 = argmax(c.iter().copied().filter(|&a| a != a1), |a| e_gains[a])
                            .expect("second candidate");
                        self.metas[a1].s_accum += m_i / 2.0;
                        self.metas[a2].s_accum += m_i / 2.0;
                        d.a1 = a1;
                        d.a2 = Some(a2);
                        d.branch = Branch::FallbackPair;
                        d.split = (0.5, 0.5);
                    }
                }
                Variant::Osg { p } => {
                    d.a1 = top;
                    match b_prime.first() {
                        Some(&a2) if a2 != top => {
                            self.metas[top].s_accum += p * e_gains[top];
                            self.metas[a2].s_accum += (1.0 - p) * e_gains[a2];
                            d.a2 = Some(a2);
                            d.branch = Branch::FallbackPair;
                            d.split = (p, 1.0 - p);
                        }
                        _ => self.metas[top].s_accum += e_gains[top],
                    }
                }
            }
        }
        self.gains_at.push(e_gains);
        d
    }
}

/// `(E[Gain_{index,a}]/3 − (w_index − w)^+/3 − S)^+ / 12`, the value of a
/// Blue advertiser that passes the weight gate.
pub fn adapt_gain(w_cur: f64, w_index: f64, e_gain_index: f64, s_accum: f64) -> f64 {
    pos_part(e_gain_index / 3.0 - pos_part(w_index - w_cur) / 3.0 - s_accum) / 12.0
}

/// Full gate: zero for Green advertisers or when `w_cur < w_index − δ M_i`.
pub fn gated_adapt_gain(
    meta: &AdvertiserMeta,
    w_cur: f64,
    w_index: f64,
    e_gain_index: f64,
    m_i: f64,
    delta: f64,
) -> f64 {
    if meta.color == Color::Blue && w_cur >= w_index - delta * m_i {
        adapt_gain(w_cur, w_index, e_gain_index, meta.s_accum)
    } else {
        0.0
    }
}

/// First maximiser in iteration order, so ties go to the lowest id.
pub fn argmax(items: impl Iterator<Item = usize>, key: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for a in items {
        let k = key(a);
        match best {
            Some((_, bk)) if k <= bk => {}
            _ => best = Some((a, k)),
        }
    }
    best.map(|b| b.0)
}

/// The frozen decision sequence for one (instance, parameters) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    pub params: AlgoParams,
    pub num_advertisers: usize,
    pub decisions: Vec<StepDecision>,
}

impl PolicyTable {
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn check(&self, instance: &Instance) -> Result<(), EngineError> {
        if self.decisions.len() != instance.num_impressions() {
            return Err(EngineError::PolicyMismatch {
                policy: self.decisions.len(),
                instance: instance.num_impressions(),
            });
        }
        if self.num_advertisers != instance.num_advertisers() {
            return Err(EngineError::AdvertiserMismatch {
                policy: self.num_advertisers,
                instance: instance.num_advertisers(),
            });
        }
        Ok(())
    }

    /// One line per arrival; stable text suitable for golden comparisons.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for d in &self.decisions {
            let ag: Vec<String> = d.adapt_gain.iter().map(|g| format!("{g:.12}")).collect();
            let _ = writeln!(
                s,
                "t={} M={:.12} B={:?} a1={} a2={} ell={} branch={} AG=[{}]",
                d.impression + 1,
                d.m_i,
                d.b,
                d.a1,
                d.a2.map_or("-".to_string(), |a| a.to_string()),
                d.ell.map_or("-".to_string(), |l| l.to_string()),
                d.branch.name(),
                ag.join(",")
            );
        }
        s
    }
}
