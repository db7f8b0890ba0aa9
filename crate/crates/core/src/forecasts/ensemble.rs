//! Finite ensembles of (possibly multivariate) members.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Ensemble {
    /// Equally weighted ensemble; every member must have the same dimension.
    pub fn new(members: Vec<Vec<f64>>) -> Result<Self> {
        let n = members.len();
        Self::weighted(members, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn univariate(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn weighted(members: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("ensemble has no members".into()));
        }
        let d = members[0].len();
        if d == 0 {
            return Err(Error::InvalidArgument("ensemble members are empty".into()));
        }
        if let Some(m) = members.iter().find(|m| m.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.len(),
            });
        }
        if weights.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("ensemble weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("ensemble weights sum to zero".into()));
        }
        if members.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite ensemble member".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Ensemble { members, weights })
    }

    pub fn dim(&self) -> usize {
        self.members[0].len()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted mean of a univariate ensemble.
    pub fn mean(&self) -> f64 {
        self.members.iter().zip(&self.weights).map(|(m, w)| w * m[0]).sum()
    }

    /// Weighted population variance of a univariate ensemble.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.members
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * (x[0] - m) * (x[0] - m))
            .sum()
    }

    /// Members mapped through x ↦ a + b·x coordinatewise.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Ensemble {
            members: self
                .members
                .iter()
                .map(|m| m.iter().map(|v| a + b * v).collect())
                .collect(),
            weights: self.weights.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_moments() {
        let e = Ensemble::univariate(&[0.0, 2.0]).unwrap();
        assert_eq!(e.mean(), 1.0);
        assert_eq!(e.variance(), 1.0);
    }

    #[test]
    fn rejects_ragged_members() {
        let r = Ensemble::new(vec![vec![1.0, 2.0], vec![3.0]]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
        assert!(Ensemble::weighted(vec![vec![1.0]], vec![-1.0]).is_err());
    }

    #[test]
    fn weights_are_normalized() {
        let e = Ensemble::weighted(vec![vec![1.0], vec![2.0]], vec![1.0, 3.0]).unwrap();
        assert_eq!(e.weights(), &[0.25, 0.75]);
    }
}
