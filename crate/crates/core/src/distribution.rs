//! Finite distributions over candidate `MaxW` values.

use crate::instance::pos_part;

/// Weights closer than this are treated as one support point.
pub const SUPPORT_EPS: f64 = 1e-12;

/// Strictly increasing support with attached probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn point(w: f64) -> Self {
        Self {
            atoms: vec![(w, 1.0)],
        }
    }

    /// Build from arbitrary (weight, probability) pairs; zero-probability
    /// atoms are dropped and near-equal weights merged.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.retain(|&(_, p)| p > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (w, p) in atoms {
            match out.last_mut() {
                Some(last) if w - last.0 <= SUPPORT_EPS => last.1 += p,
                _ => out.push((w, p)),
            }
        }
        Self { atoms: out }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(w, p)| w * p).sum()
    }

    /// `E[(w - X)^+]`.
    pub fn expected_gain(&self, w: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|a| a.0 < w)
            .map(|&(x, p)| p * (w - x))
            .sum()
    }

    /// `E[(X - w)^+]`.
    pub fn expected_excess_over(&self, w: f64) -> f64 {
        self.atoms.iter().map(|&(x, p)| p * pos_part(x - w)).sum()
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms.iter().take_while(|a| a.0 <= x).map(|a| a.1).sum()
    }

    /// Distribution of `max(w, X)`.
    pub fn max_with(&self, w: f64) -> Self {
        let mut below = 0.0;
        let mut atoms = Vec::with_capacity(self.atoms.len() + 1);
        for &(x, p) in &self.atoms {
            if x <= w {
                below += p;
            } else {
                atoms.push((x, p));
            }
        }
        if below > 0.0 {
            atoms.insert(0, (w, below));
        }
        Self::from_atoms(atoms)
    }

    /// Distribution of `max(X, Y)` for independent `X ~ self`, `Y ~ other`.
    pub fn max_convolve(&self, other: &Self) -> Self {
        let (a, b) = (&self.atoms, &other.atoms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        // P(max = x) = P(A = x) P(B <= x) + P(A < x) P(B = x)
        let (mut i, mut j) = (0, 0);
        let (mut fa, mut fb) = (0.0, 0.0); // P(A < x), P(B < x)
        while i < a.len() || j < b.len() {
            let x = match (a.get(i), b.get(j)) {
                (Some(p), Some(q)) => p.0.min(q.0),
                (Some(p), None) => p.0,
                (None, Some(q)) => q.0,
                (None, None) => unreachable!(),
            };
            let pa = if i < a.len() && a[i].0 - x <= SUPPORT_EPS { a[i].1 } else { 0.0 };
            let pb = if j < b.len() && b[j].0 - x <= SUPPORT_EPS { b[j].1 } else { 0.0 };
            out.push((x, pa * (fb + pb) + fa * pb));
            if pa > 0.0 {
                fa += pa;
                i += 1;
            }
            if pb > 0.0 {
                fb += pb;
                j += 1;
            }
        }
        Self::from_atoms(out)
    }

    /// `Σ c_k D_k`; coefficients are expected to sum to one.
    pub fn mix(parts: &[(f64, &Self)]) -> Self {
        let atoms = parts
            .iter()
            .flat_map(|&(c, d)| d.atoms.iter().map(move |&(w, p)| (w, c * p)))
            .collect();
        Self::from_atoms(atoms)
    }

    /// Pointwise CDF dominance: `self` is stochastically at least `other`.
    pub fn dominates(&self, other: &Self, tol: f64) -> bool {
        self.atoms
            .iter()
            .chain(other.atoms.iter())
            .all(|&(x, _)| self.cdf(x) <= other.cdf(x) + tol)
    }

    /// Largest absolute difference between probabilities at matching support
    /// points (missing points count as zero mass).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for &(x, p) in &self.atoms {
            let q = other.mass_at(x);
            worst = worst.max((p - q).abs());
        }
        for &(x, q) in &other.atoms {
            worst = worst.max((q - self.mass_at(x)).abs());
        }
        worst
    }

    /// Probability of the atom at `x` (zero if absent).
    pub fn mass_at(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .find(|a| (a.0 - x).abs() <= SUPPORT_EPS)
            .map_or(0.0, |a| a.1)
    }
}

impl Default for DiscreteDistribution {
    fn default() -> Self {
        Self::point(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> DiscreteDistribution {
        DiscreteDistribution::from_atoms(vec![(0.0, 0.5), (1.0, 0.5)])
    }

    #[test]
    fn identity_and_coin_maxima() {
        let d = DiscreteDistribution::from_atoms(vec![(0.0, 0.2), (2.0, 0.3), (5.0, 0.5)]);
        assert_eq!(DiscreteDistribution::point(0.0).max_convolve(&d), d);
        assert_eq!(
            coin().max_convolve(&coin()).atoms(),
            &[(0.0, 0.25), (1.0, 0.75)]
        );
    }

    #[test]
    fn expected_gain_of_half_coin() {
        assert_eq!(coin().expected_gain(1.0), 0.5);
        assert_eq!(coin().expected_gain(0.0), 0.0);
        assert_eq!(coin().expected_excess_over(0.25), 0.375);
    }

    #[test]
    fn max_with_collapses_lower_mass() {
        let d = DiscreteDistribution::from_atoms(vec![(0.0, 0.2), (2.0, 0.3), (5.0, 0.5)]);
        assert_eq!(d.max_with(3.0).atoms(), &[(3.0, 0.5), (5.0, 0.5)]);
        assert_eq!(d.max_with(2.0).atoms(), &[(2.0, 0.5), (5.0, 0.5)]);
        assert_eq!(d.max_with(9.0).atoms(), &[(9.0, 1.0)]);
    }

    #[test]
    fn near_equal_weights_merge() {
        let d = DiscreteDistribution::from_atoms(vec![(1.0, 0.5), (1.0 + 1e-14, 0.5), (2.0, 0.0)]);
        assert_eq!(d.atoms().len(), 1);
        assert_eq!(d.total_mass(), 1.0);
    }

    #[test]
    fn dominance() {
        let lo = coin();
        let hi = lo.max_with(1.0);
        assert!(hi.dominates(&lo, 0.0));
        assert!(!lo.dominates(&hi, 0.0));
        assert_eq!(hi.max_abs_diff(&lo), 0.5);
    }
}
