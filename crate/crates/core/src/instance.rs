//! Bipartite instances under free disposal: advertisers are known up front,
//! impressions arrive one row at a time.

use crate::error::InstanceError;

/// `max(0, x)`.
#[inline]
pub fn pos_part(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Marginal value of handing an edge of weight `w` to an advertiser whose
/// current maximum is `maxw`.
#[inline]
pub fn gain(w: f64, maxw: f64) -> f64 {
    pos_part(w - maxw)
}

/// Dense m × n weight matrix, row `t` is the impression arriving at time `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    num_advertisers: usize,
    weights: Vec<f64>,
}

impl Instance {
    pub fn new(num_advertisers: usize, weights: Vec<f64>) -> Result<Self, InstanceError> {
        if num_advertisers == 0 {
            return Err(InstanceError::NoAdvertisers);
        }
        if !weights.len().is_multiple_of(num_advertisers) {
            return Err(InstanceError::Shape {
                len: weights.len(),
                n: num_advertisers,
            });
        }
        for (k, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(InstanceError::BadWeight {
                    row: k / num_advertisers,
                    col: k % num_advertisers,
                    value,
                });
            }
        }
        Ok(Self {
            num_advertisers,
            weights,
        })
    }

    /// Build from nested rows; all rows must share a length.
    pub fn from_rows<R: AsRef<[f64]>>(
        num_advertisers: usize,
        rows: &[R],
    ) -> Result<Self, InstanceError> {
        let mut weights = Vec::with_capacity(rows.len() * num_advertisers);
        for r in rows {
            let r = r.as_ref();
            if r.len() != num_advertisers {
                return Err(InstanceError::Shape {
                    len: weights.len() + r.len(),
                    n: num_advertisers,
                });
            }
            weights.extend_from_slice(r);
        }
        Self::new(num_advertisers, weights)
    }

    pub fn num_advertisers(&self) -> usize {
        self.num_advertisers
    }

    pub fn num_impressions(&self) -> usize {
        self.weights.len() / self.num_advertisers
    }

    #[inline]
    pub fn weight(&self, impression: usize, advertiser: usize) -> f64 {
        self.weights[impression * self.num_advertisers + advertiser]
    }

    pub fn row(&self, impression: usize) -> &[f64] {
        let n = self.num_advertisers;
        &self.weights[impression * n..(impression + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks_exact(self.num_advertisers)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Square the instance with zero-weight dummies: extra impressions are
    /// appended after the real ones, extra advertisers become trailing columns.
    pub fn pad_with_dummies(&self) -> Instance {
        let m = self.num_impressions();
        let n = self.num_advertisers;
        let k = m.max(n);
        if k == m && k == n {
            return self.clone();
        }
        let mut weights = vec![0.0; k * k];
        for i in 0..m {
            weights[i * k..i * k + n].copy_from_slice(self.row(i));
        }
        Instance {
            num_advertisers: k,
            weights,
        }
    }

    /// Sum over advertisers of the largest weight they received.
    pub fn allocation_value(&self, trace: &AssignmentTrace) -> Result<f64, InstanceError> {
        Ok(trace.final_maxw(self)?.iter().sum())
    }
}

/// One realised run: which advertiser got each impression.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssignmentTrace {
    pub assigned: Vec<usize>,
}

impl AssignmentTrace {
    pub fn new(assigned: Vec<usize>) -> Self {
        Self { assigned }
    }

    /// `MaxW^t_a` for t = 0..=len; row 0 is all zeros.
    pub fn running_max(&self, instance: &Instance) -> Result<Vec<Vec<f64>>, InstanceError> {
        let n = instance.num_advertisers();
        if self.assigned.len() > instance.num_impressions() {
            return Err(InstanceError::TraceLength {
                got: self.assigned.len(),
                expected: instance.num_impressions(),
            });
        }
        let mut out = Vec::with_capacity(self.assigned.len() + 1);
        let mut cur = vec![0.0f64; n];
        out.push(cur.clone());
        for (i, &a) in self.assigned.iter().enumerate() {
            if a >= n {
                return Err(InstanceError::DanglingAdvertiser(a));
            }
            cur[a] = cur[a].max(instance.weight(i, a));
            out.push(cur.clone());
        }
        Ok(out)
    }

    pub fn final_maxw(&self, instance: &Instance) -> Result<Vec<f64>, InstanceError> {
        let mut rm = self.running_max(instance)?;
        Ok(rm.pop().unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pos_part_and_gain() {
        assert_eq!(pos_part(7.0 - 5.0), 2.0);
        assert_eq!(pos_part(-3.0), 0.0);
        assert_eq!(pos_part(0.0), 0.0);
        assert_eq!(gain(7.0, 5.0), 2.0);
        assert_eq!(gain(7.0, 8.0), 0.0);
        assert_eq!(gain(4.25, 0.0), 4.25);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(matches!(
            Instance::new(2, vec![1.0, -1.0]),
            Err(InstanceError::BadWeight { row: 0, col: 1, .. })
        ));
        assert!(Instance::new(2, vec![f64::NAN, 0.0]).is_err());
        assert_eq!(Instance::new(0, vec![]), Err(InstanceError::NoAdvertisers));
        assert!(matches!(
            Instance::new(2, vec![1.0]),
            Err(InstanceError::Shape { .. })
        ));
    }

    #[test]
    fn allocation_keeps_max_per_advertiser() {
        // figure 1 style: a gets 2, 5, 7 and a' gets 3
        let inst = Instance::from_rows(2, &[[2.0, 0.0], [0.0, 3.0], [5.0, 0.0], [7.0, 0.0]]).unwrap();
        let tr = AssignmentTrace::new(vec![0, 1, 0, 0]);
        assert_eq!(inst.allocation_value(&tr).unwrap(), 10.0);
        assert_eq!(inst.allocation_value(&AssignmentTrace::default()).unwrap(), 0.0);

        let one = Instance::from_rows(1, &[[2.0], [5.0]]).unwrap();
        assert_eq!(one.allocation_value(&AssignmentTrace::new(vec![0, 0])).unwrap(), 5.0);
        assert_eq!(
            one.allocation_value(&AssignmentTrace::new(vec![0, 3])),
            Err(InstanceError::DanglingAdvertiser(3))
        );
    }

    #[test]
    fn running_max_is_monotone() {
        let inst = Instance::from_rows(2, &[[2.0, 1.0], [1.0, 3.0], [0.5, 0.0]]).unwrap();
        let rm = AssignmentTrace::new(vec![0, 0, 1]).running_max(&inst).unwrap();
        assert_eq!(rm[0], vec![0.0, 0.0]);
        for w in rm.windows(2) {
            for a in 0..2 {
                assert!(w[1][a] >= w[0][a]);
            }
        }
        assert_eq!(rm[3], vec![2.0, 0.0]);
    }

    #[test]
    fn padding_shapes() {
        let wide = Instance::from_rows(3, &[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let p = wide.pad_with_dummies();
        assert_eq!((p.num_impressions(), p.num_advertisers()), (3, 3));
        assert_eq!(p.row(2), &[0.0, 0.0, 0.0]);
        assert_eq!(p.row(1), wide.row(1));

        let tall = Instance::from_rows(1, &[[1.0], [2.0], [3.0]]).unwrap();
        let p = tall.pad_with_dummies();
        assert_eq!(p.num_advertisers(), 3);
        assert_eq!(p.row(1), &[2.0, 0.0, 0.0]);

        let sq = Instance::from_rows(2, &[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(sq.pad_with_dummies(), sq);
    }
}
