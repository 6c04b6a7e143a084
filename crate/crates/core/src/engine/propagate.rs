//! Polynomial-time propagation of per-advertiser `MaxW` marginals.
//!
//! Each advertiser carries the state of its last adaptive pick (the anchor):
//! its `MaxW` right after that step conditioned on the Mark it received
//! (1, 2 or 3 — one third each), plus an independent tail of the fallback
//! assignments made since. The marginal is the uniform mixture of the three
//! conditionals, max-convolved with the tail.

use super::{drive, EngineRun, ExactEngine, PolicySource};
use crate::distribution::DiscreteDistribution as Dist;
use crate::error::EngineError;
use crate::instance::Instance;
use crate::policy::{Branch, StepDecision};

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorBelief {
    pub advertiser: usize,
    /// Impression whose adaptive step last picked this advertiser.
    pub anchor_time: Option<usize>,
    /// `MaxW` right after the anchor, given own Mark = 1, 2, 3.
    pub cond: Option<[Dist; 3]>,
    /// Maximum over fallback assignments since the anchor.
    pub tail: Dist,
}

impl AnchorBelief {
    fn fresh(advertiser: usize) -> Self {
        Self {
            advertiser,
            anchor_time: None,
            cond: None,
            tail: Dist::point(0.0),
        }
    }

    /// `MaxW` now, conditioned on own Mark = `mark`.
    pub fn given_mark(&self, mark: u8) -> Dist {
        match &self.cond {
            Some(c) => c[(mark - 1) as usize].max_convolve(&self.tail),
            None => self.tail.clone(),
        }
    }

    pub fn marginal(&self) -> Dist {
        match &self.cond {
            Some(c) => {
                let third = 1.0 / 3.0;
                Dist::mix(&[(third, &c[0]), (third, &c[1]), (third, &c[2])]).max_convolve(&self.tail)
            }
            None => self.tail.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Propagator {
    beliefs: Vec<AnchorBelief>,
    cache: Vec<Dist>,
}

impl Propagator {
    pub fn new(num_advertisers: usize) -> Self {
        Self {
            beliefs: (0..num_advertisers).map(AnchorBelief::fresh).collect(),
            cache: vec![Dist::point(0.0); num_advertisers],
        }
    }

    pub fn beliefs(&self) -> &[AnchorBelief] {
        &self.beliefs
    }

    fn refresh(&mut self, a: usize) {
        self.cache[a] = self.beliefs[a].marginal();
    }

    /// Distribution of `MaxW_o` given `Mark_l = mark`. Partners anchored by the
    /// same step carry complementary Marks (1 ↔ 2); anyone else is independent
    /// of `l`'s Mark.
    fn partner_given(&self, o: usize, l: usize, mark: u8) -> Dist {
        let (bo, bl) = (&self.beliefs[o], &self.beliefs[l]);
        match (bo.anchor_time, bl.anchor_time) {
            (Some(x), Some(y)) if x == y => {
                let swapped = match mark {
                    1 => 2,
                    2 => 1,
                    _ => 3,
                };
                bo.given_mark(swapped)
            }
            _ => self.cache[o].clone(),
        }
    }
}

impl ExactEngine for Propagator {
    fn num_advertisers(&self) -> usize {
        self.beliefs.len()
    }

    fn expected_gains(&self, row: &[f64]) -> Vec<f64> {
        self.cache
            .iter()
            .zip(row)
            .map(|(d, &w)| d.expected_gain(w))
            .collect()
    }

    fn apply(&mut self, row: &[f64], d: &StepDecision) -> f64 {
        let before = |p: &Self, a: usize| p.cache[a].mean();
        let touched: Vec<usize> = std::iter::once(d.a1).chain(d.a2).collect();
        let mean_before: Vec<f64> = touched.iter().map(|&a| before(self, a)).collect();

        match d.branch {
            Branch::FallbackSingle => {
                let a = d.a1;
                self.beliefs[a].tail = self.beliefs[a].tail.max_with(row[a]);
                self.refresh(a);
            }
            Branch::FallbackPair => {
                let a2 = d.a2.expect("pair has a2");
                for (a, q) in [(d.a1, d.split.0), (a2, d.split.1)] {
                    let t = &self.beliefs[a].tail;
                    let hit = t.max_with(row[a]);
                    self.beliefs[a].tail = Dist::mix(&[(q, &hit), (1.0 - q, t)]);
                    self.refresh(a);
                }
            }
            Branch::AdaptiveCapable => {
                let a1 = d.a1;
                let a2 = d.a2.expect("adaptive step has a2");
                let al = d.a_ell().expect("ell");
                let ao = d.a_other().expect("ell");
                let (third, sixth) = (1.0 / 3.0, 1.0 / 6.0);

                // top third: Mark-driven when AdaptGain_{a_ℓ} > 0, fair coin otherwise
                let high = |a: usize| -> Dist {
                    let w = row[a];
                    if d.adapt_gain[al] > 0.0 {
                        let c: Vec<Dist> = (1..=3u8)
                            .map(|m| {
                                if a == al {
                                    self.beliefs[al].given_mark(m)
                                } else {
                                    self.partner_given(a, al, m)
                                }
                            })
                            .collect();
                        let (h1, h2, h3) = (c[0].max_with(w), c[1].max_with(w), c[2].max_with(w));
                        if a == al {
                            // Mark 1 → other gets i, Mark 2 → a_ℓ gets i
                            Dist::mix(&[(third, &c[0]), (third, &h2), (sixth, &c[2]), (sixth, &h3)])
                        } else {
                            debug_assert_eq!(a, ao);
                            Dist::mix(&[(third, &h1), (third, &c[1]), (sixth, &c[2]), (sixth, &h3)])
                        }
                    } else {
                        let cur = &self.cache[a];
                        Dist::mix(&[(0.5, &cur.max_with(w)), (0.5, cur)])
                    }
                };
                let high1 = high(a1);
                let high2 = high(a2);
                let d1 = self.cache[a1].clone();
                let d2 = self.cache[a2].clone();
                // LOW: a1 gets i (Mark_{a1} = 1, Mark_{a2} = 2); MID: the mirror image
                self.beliefs[a1].cond = Some([d1.max_with(row[a1]), d1, high1]);
                self.beliefs[a2].cond = Some([d2.max_with(row[a2]), d2, high2]);
                for a in [a1, a2] {
                    self.beliefs[a].anchor_time = Some(d.impression);
                    self.beliefs[a].tail = Dist::point(0.0);
                    self.refresh(a);
                }
            }
        }
        touched
            .iter()
            .zip(mean_before)
            .map(|(&a, m0)| self.cache[a].mean() - m0)
            .sum()
    }

    fn marginals(&self) -> Vec<Dist> {
        self.cache.clone()
    }
}

#[derive(Debug, Clone)]
pub struct PropagationReport {
    pub run: EngineRun,
    /// `beliefs[t]` holds every advertiser's anchor state after `t` steps.
    pub beliefs: Vec<Vec<AnchorBelief>>,
}

pub fn propagate(
    instance: &Instance,
    source: PolicySource<'_>,
) -> Result<PropagationReport, EngineError> {
    let mut p = Propagator::new(instance.num_advertisers());
    // drive() does not expose per-step hooks, so record beliefs with a wrapper
    struct Recording<'a> {
        inner: &'a mut Propagator,
        beliefs: Vec<Vec<AnchorBelief>>,
    }
    impl ExactEngine for Recording<'_> {
        fn num_advertisers(&self) -> usize {
            self.inner.num_advertisers()
        }
        fn expected_gains(&self, row: &[f64]) -> Vec<f64> {
            self.inner.expected_gains(row)
        }
        fn apply(&mut self, row: &[f64], d: &StepDecision) -> f64 {
            let g = self.inner.apply(row, d);
            self.beliefs.push(self.inner.beliefs.clone());
            g
        }
        fn marginals(&self) -> Vec<Dist> {
            self.inner.marginals()
        }
    }
    let mut rec = Recording {
        beliefs: vec![p.beliefs.clone()],
        inner: &mut p,
    };
    let run = drive(instance, source, &mut rec)?;
    Ok(PropagationReport {
        run,
        beliefs: rec.beliefs,
    })
}
