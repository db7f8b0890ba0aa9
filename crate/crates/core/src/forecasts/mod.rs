//! Forecast representations: parametric laws, quantile forecasts, kernel
//! density estimates, finite mixtures and ensembles.

pub mod ensemble;
pub mod kde;
pub mod quantile;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::families::{numeric_quantile, Distribution, Law, Support};

pub use ensemble::Ensemble;
pub use kde::{kde_fit, KdeDensity};
pub use quantile::{
    quantile_to_distribution, validate_quantiles, ForecastMeta, QuantileForecast,
    TailExtendedDensity, ValidQuantiles,
};

/// Finite mixture of parametric laws.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    components: Vec<Distribution>,
    weights: Vec<f64>,
}

impl Mixture {
    pub fn new(components: Vec<Distribution>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: components.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("mixture weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("mixture weights sum to zero".into()));
        }
        let lattice = components[0].support().lattice;
        if components.iter().any(|c| c.support().lattice != lattice) {
            return Err(Error::Unsupported(
                "mixtures must share one lattice or be continuous".into(),
            ));
        }
        Ok(Mixture {
            components,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn components(&self) -> &[Distribution] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn parts(&self) -> impl Iterator<Item = (&Distribution, f64)> {
        self.components.iter().zip(self.weights.iter().copied())
    }

    pub fn affine(&self, a: f64, b: f64) -> Self {
        Mixture {
            components: self.components.iter().map(|c| c.affine(a, b)).collect(),
            weights: self.weights.clone(),
        }
    }
}

impl Law for Mixture {
    fn pdf(&self, x: f64) -> f64 {
        self.parts().map(|(c, w)| w * c.pdf(x)).sum()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.parts().map(|(c, w)| w * c.cdf(x)).sum()
    }

    fn sf(&self, x: f64) -> f64 {
        self.parts().map(|(c, w)| w * c.sf(x)).sum()
    }

    fn quantile(&self, p: f64) -> f64 {
        numeric_quantile(self, p)
    }

    fn mean(&self) -> f64 {
        self.parts().map(|(c, w)| w * c.mean()).sum()
    }

    fn variance(&self) -> f64 {
        let m = self.mean();
        self.parts()
            .map(|(c, w)| w * (c.variance() + (c.mean() - m).powi(2)))
            .sum()
    }

    fn support(&self) -> Support {
        let lo = self.components.iter().map(|c| c.support().lo).fold(f64::INFINITY, f64::min);
        let hi = self
            .components
            .iter()
            .map(|c| c.support().hi)
            .fold(f64::NEG_INFINITY, f64::max);
        Support {
            lo,
            hi,
            lattice: self.components[0].support().lattice,
        }
    }

    fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .components
            .iter()
            .flat_map(|c| {
                let mut v = c.kinks();
                v.push(c.center());
                let s = c.support();
                v.extend([s.lo, s.hi].into_iter().filter(|x| x.is_finite()));
                v
            })
            .collect();
        k.sort_by(f64::total_cmp);
        k
    }

    fn center(&self) -> f64 {
        let m = self.mean();
        if m.is_finite() {
            m
        } else {
            self.components[0].center()
        }
    }

    fn spread(&self) -> f64 {
        let v = self.variance();
        if v.is_finite() {
            v.sqrt()
        } else {
            self.components.iter().map(|c| c.spread()).fold(0.0, f64::max)
        }
    }

    fn has_first_moment(&self) -> bool {
        self.components.iter().all(|c| c.has_first_moment())
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (c, w) in self.parts() {
            acc += w;
            if u < acc {
                return c.sample(rng);
            }
        }
        self.components[self.components.len() - 1].sample(rng)
    }
}

/// Any forecast the scoring engine accepts.
#[derive(Debug, Clone)]
pub enum Forecast {
    Parametric(Distribution),
    Quantile(TailExtendedDensity),
    Kde(KdeDensity),
    Mixture(Mixture),
    Ensemble(Ensemble),
}

impl From<Distribution> for Forecast {
    fn from(d: Distribution) -> Self {
        Forecast::Parametric(d)
    }
}

impl From<TailExtendedDensity> for Forecast {
    fn from(d: TailExtendedDensity) -> Self {
        Forecast::Quantile(d)
    }
}

impl From<KdeDensity> for Forecast {
    fn from(d: KdeDensity) -> Self {
        Forecast::Kde(d)
    }
}

impl From<Mixture> for Forecast {
    fn from(d: Mixture) -> Self {
        Forecast::Mixture(d)
    }
}

impl From<Ensemble> for Forecast {
    fn from(d: Ensemble) -> Self {
        Forecast::Ensemble(d)
    }
}

impl Forecast {
    /// The forecast as a univariate law; `None` for ensembles.
    pub fn law(&self) -> Option<&dyn Law> {
        match self {
            Forecast::Parametric(d) => Some(d),
            Forecast::Quantile(d) => Some(d),
            Forecast::Kde(d) => Some(d),
            Forecast::Mixture(d) => Some(d),
            Forecast::Ensemble(_) => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Forecast::Ensemble(e) => e.mean(),
            _ => self.law().map_or(f64::NAN, |l| l.mean()),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Forecast::Ensemble(e) => e.variance(),
            _ => self.law().map_or(f64::NAN, |l| l.variance()),
        }
    }

    /// Law of a + b·X, exact for every representation.
    pub fn affine(&self, a: f64, b: f64) -> Forecast {
        match self {
            Forecast::Parametric(d) => Forecast::Parametric(d.affine(a, b)),
            Forecast::Quantile(d) => Forecast::Quantile(d.affine(a, b)),
            Forecast::Kde(d) => Forecast::Kde(d.affine(a, b)),
            Forecast::Mixture(d) => Forecast::Mixture(d.affine(a, b)),
            Forecast::Ensemble(e) => Forecast::Ensemble(e.affine(a, b)),
        }
    }
}

/// Law of target_mean + target_sd·(X − E X)/sd(X), using population moments.
pub fn affine_to(f: &Forecast, target_mean: f64, target_sd: f64) -> Result<Forecast> {
    if !(target_sd > 0.0) || !target_mean.is_finite() || !target_sd.is_finite() {
        return Err(Error::Domain {
            name: "target_sd",
            value: target_sd,
            domain: "> 0 with finite target mean",
        });
    }
    if let Forecast::Ensemble(e) = f {
        if e.dim() != 1 {
            return Err(Error::Unsupported("affine_to on multivariate ensembles".into()));
        }
    }
    let (m, v) = (f.mean(), f.variance());
    if !m.is_finite() || !v.is_finite() {
        return Err(Error::InfiniteMoments);
    }
    if v <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let b = target_sd / v.sqrt();
    Ok(f.affine(target_mean - b * m, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{expect, make_family};
    use crate::quad::QuadConfig;

    #[test]
    fn normal_to_standard() {
        let f = Forecast::from(make_family("normal", &[3.0, 2.0]).unwrap());
        let g = affine_to(&f, 0.0, 1.0).unwrap();
        let Forecast::Parametric(d) = g else { panic!() };
        assert!(d.loc.abs() < 1e-15 && (d.scale - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ensemble_to_standard() {
        let f = Forecast::from(Ensemble::univariate(&[0.0, 2.0]).unwrap());
        let Forecast::Ensemble(e) = affine_to(&f, 0.0, 1.0).unwrap() else { panic!() };
        assert_eq!(e.members(), &[vec![-1.0], vec![1.0]]);
    }

    #[test]
    fn cauchy_has_no_moments() {
        let f = Forecast::from(make_family("cauchy", &[0.0, 1.0]).unwrap());
        assert!(matches!(affine_to(&f, 0.0, 1.0), Err(Error::InfiniteMoments)));
    }

    #[test]
    fn identity_transform() {
        let m = Mixture::new(
            vec![
                make_family("normal", &[0.0, 1.0]).unwrap(),
                make_family("normal", &[3.0, 0.5]).unwrap(),
            ],
            vec![0.3, 0.7],
        )
        .unwrap();
        let f = Forecast::from(m.clone());
        let g = affine_to(&f, m.mean(), m.variance().sqrt()).unwrap();
        let l = g.law().unwrap();
        for &x in &[-2.0, 0.0, 1.7, 3.0] {
            assert!((l.pdf(x) - m.pdf(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_normalized_with_moments() {
        let m = Mixture::new(
            vec![
                make_family("exponential", &[1.0]).unwrap(),
                make_family("exponential", &[3.0]).unwrap(),
            ],
            vec![1.0, 1.0],
        )
        .unwrap();
        let cfg = QuadConfig::default();
        assert!((expect(&m, |_| 1.0, &cfg).value - 1.0).abs() < 1e-10);
        let mean = expect(&m, |x| x, &cfg).value;
        assert!((mean - 2.0).abs() < 1e-9);
        assert!((m.cdf(m.quantile(0.3)) - 0.3).abs() < 1e-10);
    }
}
