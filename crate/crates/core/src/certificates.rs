//! λ certificates: the eleven lower-bound terms behind the competitive ratio,
//! numerical maximisation over the free parameters, and the grid scan that
//! bounds the optimised variant from above.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::LambdaError;
use crate::exec::Execution;
use crate::simplex;

/// Known ceiling of the optimised λ over the whole parameter box.
pub const OPT_CEILING: f64 = 0.00762899;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaParams {
    pub eps: f64,
    pub delta: f64,
    pub zeta: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Only used by the optimised terms.
    pub p: Option<f64>,
}

impl LambdaParams {
    /// The base certificate point.
    pub fn base_point() -> Self {
        Self {
            eps: 0.082,
            delta: 0.445,
            zeta: 0.955,
            beta: 0.00337198,
            sigma: 0.03362,
            p: None,
        }
    }

    /// The optimised certificate point.
    pub fn optimized_point() -> Self {
        Self {
            eps: 0.0805,
            delta: 0.4009,
            zeta: 0.9216,
            beta: 0.0062,
            sigma: 0.0555,
            p: Some(0.8613),
        }
    }

    fn named(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("eps", self.eps),
            ("delta", self.delta),
            ("zeta", self.zeta),
            ("beta", self.beta),
            ("sigma", self.sigma),
        ];
        if let Some(p) = self.p {
            v.push(("p", p));
        }
        v
    }

    fn check_box(&self) -> Result<(), LambdaError> {
        for (name, value) in self.named() {
            if !(0.0..=1.0).contains(&value) {
                return Err(LambdaError::OutOfBox { name, value });
            }
        }
        Ok(())
    }

    fn from_slice(x: &[f64], with_p: bool) -> Self {
        Self {
            eps: x[0],
            delta: x[1],
            zeta: x[2],
            beta: x[3],
            sigma: x[4],
            p: with_p.then(|| x[5]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermBreakdown {
    /// `(name, value)` in the published order.
    pub terms: Vec<(&'static str, f64)>,
    pub min: f64,
    /// Index of the first term attaining the min.
    pub binding: usize,
}

impl TermBreakdown {
    fn new(terms: Vec<(&'static str, f64)>) -> Self {
        let mut binding = 0;
        for (k, t) in terms.iter().enumerate() {
            if t.1 < terms[binding].1 {
                binding = k;
            }
        }
        Self {
            min: terms[binding].1,
            binding,
            terms,
        }
    }

    pub fn binding_name(&self) -> &'static str {
        self.terms[self.binding].0
    }

    /// Columns `(term, value, binding)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "value", "binding"])?;
        for (k, (name, v)) in self.terms.iter().enumerate() {
            w.write_record([name.to_string(), format!("{v}"), (k == self.binding).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl std::fmt::Display for TermBreakdown {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let width = self.terms.iter().map(|t| t.0.len()).max().unwrap_or(0);
        for (k, (name, v)) in self.terms.iter().enumerate() {
            let mark = if k == self.binding { "  <- min" } else { "" };
            writeln!(f, "LB{:<3} {name:<width$}  {v:>14.10}{mark}", k + 1)?;
        }
        write!(f, "min = {:.10}", self.min)
    }
}

fn shared_g(eps: f64, delta: f64) -> f64 {
    (324.0 * (1.0 - eps).powi(2) - 361.0 * delta) / (18468.0 * (1.0 - eps))
}

/// The eleven base terms; the min may be negative.
pub fn lambda_terms(lp: &LambdaParams) -> Result<TermBreakdown, LambdaError> {
    lp.check_box()?;
    Ok(base_terms(lp))
}

fn base_terms(lp: &LambdaParams) -> TermBreakdown {
    let LambdaParams {
        eps: e,
        delta: d,
        zeta: z,
        beta: b,
        sigma: s,
        ..
    } = *lp;
    let g = shared_g(e, d);
    TermBreakdown::new(vec![
        ("(eps-2beta-2sigma)/2", (e - 2.0 * b - 2.0 * s) / 2.0),
        ("(1-3eps-4beta-4sigma)/4", (1.0 - 3.0 * e - 4.0 * b - 4.0 * s) / 4.0),
        ("(2zeta*delta-3eps-6beta-6sigma)/6", (2.0 * z * d - 3.0 * e - 6.0 * b - 6.0 * s) / 6.0),
        ("(2-21eps)/19", (2.0 - 21.0 * e) / 19.0),
        ("(6zeta*delta-1-18eps)/18", (6.0 * z * d - 1.0 - 18.0 * e) / 18.0),
        ("g", g),
        ("g*18sigma", g * 18.0 * s),
        ("2(1-eps)/19", 2.0 * (1.0 - e) / 19.0),
        ("(1-zeta)delta/(1+delta)*6(1-eps)/19", (1.0 - z) * d / (1.0 + d) * 6.0 * (1.0 - e) / 19.0),
        ("18(1-eps)sigma/19", 18.0 * (1.0 - e) / 19.0 * s),
        ("2beta/(1+delta)*18(1-eps)/19", 2.0 * b / (1.0 + d) * 18.0 * (1.0 - e) / 19.0),
    ])
}

/// The eleven optimised terms; requires `p` and `p ≥ β + σ`.
pub fn lambda_opt_terms(lp: &LambdaParams) -> Result<TermBreakdown, LambdaError> {
    lp.check_box()?;
    let p = lp.p.ok_or(LambdaError::OutOfBox {
        name: "p",
        value: f64::NAN,
    })?;
    if p < lp.beta + lp.sigma {
        return Err(LambdaError::Constraint {
            p,
            bound: lp.beta + lp.sigma,
        });
    }
    Ok(opt_terms(lp, p))
}

fn opt_terms(lp: &LambdaParams, p: f64) -> TermBreakdown {
    let LambdaParams {
        eps: e,
        delta: d,
        zeta: z,
        beta: b,
        sigma: s,
        ..
    } = *lp;
    let g = shared_g(e, d);
    TermBreakdown::new(vec![
        ("p*eps-beta-sigma", p * e - b - s),
        ("(1-p)/2-beta-sigma", (1.0 - p) / 2.0 - b - s),
        ("7zeta*delta/18-(1-p)eps-beta-sigma", 7.0 * z * d / 18.0 - (1.0 - p) * e - b - s),
        ("(2-21eps)/19", (2.0 - 21.0 * e) / 19.0),
        ("7zeta*delta/18-1/18-eps", 7.0 * z * d / 18.0 - 1.0 / 18.0 - e),
        ("g", g),
        ("g*18sigma", g * 18.0 * s),
        ("2(1-eps)/19", 2.0 * (1.0 - e) / 19.0),
        ("(1-zeta)delta/(1+delta)*7(1-eps)/19", (1.0 - z) * d / (1.0 + d) * 7.0 * (1.0 - e) / 19.0),
        ("18(1-eps)sigma/19", 18.0 * (1.0 - e) / 19.0 * s),
        ("2beta/(1+delta)*18(1-eps)/19", 2.0 * b / (1.0 + d) * 18.0 * (1.0 - e) / 19.0),
    ])
}

/// `(1/2 + λ/2) / (1 + λ/2)`.
pub fn competitive_ratio(lambda: f64) -> Result<f64, LambdaError> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(LambdaError::NegativeLambda(lambda));
    }
    Ok((0.5 + lambda / 2.0) / (1.0 + lambda / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaKind {
    Base,
    Optimized,
}

fn terms_at(kind: LambdaKind, x: &[f64]) -> TermBreakdown {
    let lp = LambdaParams::from_slice(x, kind == LambdaKind::Optimized);
    match kind {
        LambdaKind::Base => base_terms(&lp),
        LambdaKind::Optimized => opt_terms(&lp, x[5]),
    }
}

fn objective(kind: LambdaKind, x: &[f64]) -> f64 {
    terms_at(kind, x).min
}

fn breakdown(kind: LambdaKind, lp: &LambdaParams) -> TermBreakdown {
    match kind {
        LambdaKind::Base => base_terms(lp),
        LambdaKind::Optimized => opt_terms(lp, lp.p.unwrap_or(0.0)),
    }
}

const OBJ_TOL: f64 = 1e-10;

/// A parameter box, one `(lo, hi)` per coordinate in the order
/// ε, δ, ζ, β, σ, p.
pub type ParamBox = [(f64, f64); 6];

pub const UNIT_BOX: ParamBox = [(0.0, 1.0); 6];

/// Smallest β, σ compatible with level `t` (every term containing them
/// decreases in them except the two they drive up), or `None`.
fn min_beta_sigma(e: f64, d: f64, t: f64, bx: &ParamBox) -> Option<(f64, f64)> {
    let c_beta = 2.0 / (1.0 + d) * 18.0 * (1.0 - e) / 19.0;
    let c_sigma = (18.0 * shared_g(e, d)).min(18.0 * (1.0 - e) / 19.0);
    let need = |c: f64, (lo, hi): (f64, f64)| -> Option<f64> {
        let v = if t <= 0.0 {
            lo
        } else if c > 0.0 {
            (t / c).max(lo)
        } else {
            return None;
        };
        (v <= hi).then_some(v)
    };
    Some((need(c_beta, bx[3])?, need(c_sigma, bx[4])?))
}

/// The `p` maximising the three p-dependent optimised terms, within
/// `[max(β+σ, p_lo), p_hi]`.
fn best_p(e: f64, d: f64, z: f64, bs: f64, (lo, hi): (f64, f64)) -> Option<f64> {
    let lo = lo.max(bs);
    if lo > hi {
        return None;
    }
    // p·ε and 7ζδ/18 − (1−p)ε rise with p, (1−p)/2 falls; the best p is where
    // the falling term meets the smaller rising one
    let c1 = 1.0 / (2.0 * e + 1.0);
    let c3 = (0.5 - 7.0 * z * d / 18.0 + e) / (e + 0.5);
    Some(c1.max(c3).clamp(lo, hi))
}

/// Point with the given ε, δ, ζ reaching level `t`, if any.
fn point_at_level(kind: LambdaKind, e: f64, d: f64, z: f64, t: f64, bx: &ParamBox) -> Option<[f64; 6]> {
    let (b, s) = min_beta_sigma(e, d, t, bx)?;
    let p = match kind {
        LambdaKind::Base => 0.0,
        LambdaKind::Optimized => best_p(e, d, z, b + s, bx[5])?,
    };
    let x = [e, d, z, b, s, p];
    // t / c · c can land an ulp below t
    (objective(kind, &x) >= t - 1e-14).then_some(x)
}

/// For fixed ε, δ, ζ the best β, σ (and p) by bisection on the level: the
/// remaining parameters enter every term monotonically, so feasibility of a
/// level is monotone.
fn profile(kind: LambdaKind, e: f64, d: f64, z: f64, bx: &ParamBox) -> Option<([f64; 6], f64)> {
    let (mut lo, mut hi) = (-2.0, 1.0);
    let mut best = point_at_level(kind, e, d, z, lo, bx)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match point_at_level(kind, e, d, z, mid, bx) {
            Some(x) => {
                best = x;
                lo = mid;
            }
            None => hi = mid,
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Some((best, objective(kind, &best)))
}

/// Index of the one term that falls as ζ grows, `(1−ζ)δ/(1+δ)·…`.
const ZETA_FALLING: usize = 8;

/// Best ζ for fixed ε, δ (β, σ, p profiled inside). ζ raises every
/// ζ-dependent term but one, so the optimum sits where that one stops
/// being the binding term; bisect on which side binds.
fn profile_zeta(kind: LambdaKind, e: f64, d: f64, bx: &ParamBox) -> Option<([f64; 6], f64)> {
    let (mut lo, mut hi) = bx[2];
    let mut best = profile(kind, e, d, hi, bx);
    let falling_binds = |x: &[f64; 6]| {
        let t = terms_at(kind, x);
        let others = t
            .terms
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != ZETA_FALLING)
            .map(|(_, v)| v.1)
            .fold(f64::INFINITY, f64::min);
        t.terms[ZETA_FALLING].1 <= others
    };
    match &best {
        Some((x, _)) if !falling_binds(x) => return best,
        _ => {}
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        match profile(kind, e, d, mid, bx) {
            Some(cand) => {
                let falling = falling_binds(&cand.0);
                if best.as_ref().is_none_or(|b| cand.1 > b.1) {
                    best = Some(cand);
                }
                if falling {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            None => lo = mid,
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    best
}

/// Local simplex refinement over (ε, δ), in unit coordinates mapped onto
/// `bx`, with ζ, β, σ, p profiled out exactly.
fn refine(kind: LambdaKind, bx: &ParamBox, u0: &[f64], step: f64, iters: usize) -> (Vec<f64>, f64) {
    let at = |u: &[f64]| {
        let e = bx[0].0 + u[0] * (bx[0].1 - bx[0].0);
        let d = bx[1].0 + u[1] * (bx[1].1 - bx[1].0);
        profile_zeta(kind, e, d, bx)
    };
    let r = simplex::maximize(
        |u| at(u).map_or(f64::NEG_INFINITY, |p| p.1),
        simplex::clamp_unit,
        &u0[..2],
        step,
        iters,
        OBJ_TOL,
    );
    match at(&r.x) {
        Some((x, v)) => (x.to_vec(), v),
        None => (vec![f64::NAN; 6], f64::NEG_INFINITY),
    }
}

/// Multi-start simplex search over the unit box for the largest min-term
/// value. Deterministic for a fixed seed; ties resolved by restart index.
pub fn maximize(
    kind: LambdaKind,
    restarts: usize,
    iters: usize,
    seed: u64,
    exec: Execution,
) -> Result<(LambdaParams, TermBreakdown), LambdaError> {
    if restarts == 0 || iters == 0 {
        return Err(LambdaError::Budget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = (0..restarts)
        .map(|_| (0..2).map(|_| rng.random::<f64>()).collect())
        .collect();
    let found = exec.map(&starts, |u| refine(kind, &UNIT_BOX, u, 0.25, iters));
    let (x, _) = best_of(found);
    let lp = LambdaParams::from_slice(&x, kind == LambdaKind::Optimized);
    Ok((lp, breakdown(kind, &lp)))
}

fn best_of(found: Vec<(Vec<f64>, f64)>) -> (Vec<f64>, f64) {
    found
        .into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one candidate")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub max: f64,
    pub argmax: LambdaParams,
    pub breakdown: TermBreakdown,
    /// Feasible grid points evaluated.
    pub grid_points: usize,
    /// `max ≤ OPT_CEILING + 1e-6`.
    pub below_ceiling: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub resolution: usize,
    pub refine_iters: usize,
    /// How many of the best grid points get refined.
    pub restarts: usize,
    pub bounds: ParamBox,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            resolution: 8,
            refine_iters: 200,
            restarts: 32,
            bounds: UNIT_BOX,
        }
    }
}

/// Grid over the six-dimensional box (points with `p < β + σ` skipped), then
/// simplex refinement from the best `restarts` (ε, δ, ζ) cells.
pub fn impossibility_scan(cfg: &ScanConfig, exec: Execution) -> Result<ScanResult, LambdaError> {
    let r = cfg.resolution;
    if r < 2 {
        return Err(LambdaError::Resolution(r));
    }
    if cfg.restarts == 0 {
        return Err(LambdaError::Budget);
    }
    let bx = &cfg.bounds;
    let axis = |k: usize, j: usize| bx[k].0 + (bx[k].1 - bx[k].0) * j as f64 / (r - 1) as f64;
    let cells = r.pow(3);
    // each (ε, δ, ζ) cell scores as the best of its (β, σ, p) sub-grid
    let scored = exec.map_range(cells, |c| {
        let outer = [axis(0, c / (r * r)), axis(1, (c / r) % r), axis(2, c % r)];
        let mut best = f64::NEG_INFINITY;
        let mut feasible = 0;
        for q in 0..cells {
            let x = [
                outer[0],
                outer[1],
                outer[2],
                axis(3, q / (r * r)),
                axis(4, (q / r) % r),
                axis(5, q % r),
            ];
            if x[5] < x[3] + x[4] {
                continue;
            }
            feasible += 1;
            best = best.max(objective(LambdaKind::Optimized, &x));
        }
        (c, best, feasible)
    });
    let mut top: Vec<(usize, f64)> = Vec::new();
    let mut grid_points = 0;
    for (c, v, f) in scored {
        grid_points += f;
        if f > 0 {
            keep_top(&mut top, (c, v), cfg.restarts);
        }
    }
    if top.is_empty() {
        return Err(LambdaError::Infeasible);
    }
    let unit = |j: usize| j as f64 / (r - 1) as f64;
    let starts: Vec<Vec<f64>> = top
        .iter()
        .map(|&(c, _)| vec![unit(c / (r * r)), unit((c / r) % r), unit(c % r)])
        .collect();
    let step = 1.0 / (r - 1) as f64;
    let found = exec.map(&starts, |u| refine(LambdaKind::Optimized, bx, u, step, cfg.refine_iters));
    let (x, max) = best_of(found);
    let argmax = LambdaParams::from_slice(&x, true);
    Ok(ScanResult {
        max,
        argmax,
        breakdown: breakdown(LambdaKind::Optimized, &argmax),
        grid_points,
        below_ceiling: max <= OPT_CEILING + 1e-6,
    })
}

/// Keep the `k` best `(index, value)` pairs, higher value first, lower
/// index first among equals.
fn keep_top(top: &mut Vec<(usize, f64)>, c: (usize, f64), k: usize) {
    let pos = top
        .iter()
        .position(|t| c.1 > t.1 || (c.1 == t.1 && c.0 < t.0))
        .unwrap_or(top.len());
    if pos < k {
        top.insert(pos, c);
        top.truncate(k);
    }
}
