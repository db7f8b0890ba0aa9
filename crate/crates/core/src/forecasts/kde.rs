//! Gaussian kernel density estimates with exponential tails grafted at the
//! extreme samples.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::families::{numeric_quantile, Law, Support};
use crate::special::{normal_cdf, normal_pdf};

#[derive(Debug, Clone, PartialEq)]
pub struct KdeDensity {
    samples: Vec<f64>,
    bandwidth: f64,
    lo: f64,
    hi: f64,
    lower_mass: f64,
    upper_mass: f64,
    lower_rate: f64,
    upper_rate: f64,
}

/// Population mean and standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Fits a Gaussian KDE with Scott's bandwidth sd·n^{−1/5}.
///
/// Beyond the smallest and largest samples the kernel mixture is replaced by
/// exponential tails that keep the density continuous and carry exactly the
/// mixture mass lying beyond those points.
pub fn kde_fit(samples: &[f64]) -> Result<KdeDensity> {
    if samples.len() < 10 {
        return Err(Error::TooFewSamples {
            required: 10,
            found: samples.len(),
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("non-finite sample".into()));
    }
    let (_, sd) = mean_sd(samples);
    if sd == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let bandwidth = sd * (samples.len() as f64).powf(-0.2);
    let mut kde = KdeDensity {
        lo: sorted[0],
        hi: sorted[sorted.len() - 1],
        samples: sorted,
        bandwidth,
        lower_mass: 0.0,
        upper_mass: 0.0,
        lower_rate: 1.0,
        upper_rate: 1.0,
    };
    kde.lower_mass = kde.mixture_cdf(kde.lo);
    kde.upper_mass = kde.mixture_sf(kde.hi);
    kde.lower_rate = kde.mixture_pdf(kde.lo) / kde.lower_mass;
    kde.upper_rate = kde.mixture_pdf(kde.hi) / kde.upper_mass;
    Ok(kde)
}

impl KdeDensity {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn tail_rates(&self) -> (f64, f64) {
        (self.lower_rate, self.upper_rate)
    }

    fn mixture_pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        self.samples.iter().map(|s| normal_pdf((x - s) / h)).sum::<f64>()
            / (h * self.samples.len() as f64)
    }

    fn mixture_cdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        self.samples.iter().map(|s| normal_cdf((x - s) / h)).sum::<f64>() / self.samples.len() as f64
    }

    fn mixture_sf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        self.samples.iter().map(|s| normal_cdf((s - x) / h)).sum::<f64>() / self.samples.len() as f64
    }

    /// Law of a + b·X: samples, bandwidth and tail rates move together.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        KdeDensity {
            samples: self.samples.iter().map(|s| a + b * s).collect(),
            bandwidth: self.bandwidth * b,
            lo: a + b * self.lo,
            hi: a + b * self.hi,
            lower_mass: self.lower_mass,
            upper_mass: self.upper_mass,
            lower_rate: self.lower_rate / b,
            upper_rate: self.upper_rate / b,
        }
    }

    fn moments(&self) -> (f64, f64) {
        let (c, _) = mean_sd(&self.samples);
        let h = self.bandwidth;
        let n = self.samples.len() as f64;
        let (mut s1, mut s2) = (0.0, 0.0);
        // Truncated kernel moments on [lo, hi], about c.
        for &s in &self.samples {
            let (al, be) = ((self.lo - s) / h, (self.hi - s) / h);
            let dphi = normal_cdf(be) - normal_cdf(al);
            let (pa, pb) = (normal_pdf(al), normal_pdf(be));
            let k = s - c;
            let z1 = pa - pb;
            let z2 = dphi + al * pa - be * pb;
            s1 += k * dphi + h * z1;
            s2 += k * k * dphi + 2.0 * k * h * z1 + h * h * z2;
        }
        s1 /= n;
        s2 /= n;
        let ml = self.lo - c - 1.0 / self.lower_rate;
        let mu = self.hi - c + 1.0 / self.upper_rate;
        s1 += self.lower_mass * ml + self.upper_mass * mu;
        s2 += self.lower_mass * (ml * ml + 1.0 / self.lower_rate.powi(2))
            + self.upper_mass * (mu * mu + 1.0 / self.upper_rate.powi(2));
        (c + s1, (s2 - s1 * s1).max(0.0))
    }
}

impl Law for KdeDensity {
    fn pdf(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lower_mass * self.lower_rate * (self.lower_rate * (x - self.lo)).exp()
        } else if x > self.hi {
            self.upper_mass * self.upper_rate * (-self.upper_rate * (x - self.hi)).exp()
        } else {
            self.mixture_pdf(x)
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lower_mass * (self.lower_rate * (x - self.lo)).exp()
        } else if x > self.hi {
            1.0 - self.sf(x)
        } else {
            self.mixture_cdf(x)
        }
    }

    fn sf(&self, x: f64) -> f64 {
        if x > self.hi {
            self.upper_mass * (-self.upper_rate * (x - self.hi)).exp()
        } else if x < self.lo {
            1.0 - self.cdf(x)
        } else {
            self.mixture_sf(x)
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        if p < self.lower_mass {
            return self.lo + (p / self.lower_mass).ln() / self.lower_rate;
        }
        if 1.0 - p < self.upper_mass {
            return self.hi - ((1.0 - p) / self.upper_mass).ln() / self.upper_rate;
        }
        numeric_quantile(self, p)
    }

    fn mean(&self) -> f64 {
        self.moments().0
    }

    fn variance(&self) -> f64 {
        self.moments().1
    }

    fn support(&self) -> Support {
        Support::real_line()
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.lo, self.hi]
    }

    fn center(&self) -> f64 {
        mean_sd(&self.samples).0
    }

    fn spread(&self) -> f64 {
        let (_, sd) = mean_sd(&self.samples);
        (sd * sd + self.bandwidth * self.bandwidth).sqrt()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        if u < self.lower_mass || u > 1.0 - self.upper_mass {
            return self.quantile(u);
        }
        // Kernel draw conditioned on landing in [lo, hi].
        loop {
            let i = rng.random_range(0..self.samples.len());
            let z: f64 = rng.sample(StandardNormal);
            let x = self.samples[i] + self.bandwidth * z;
            if x >= self.lo && x <= self.hi {
                return x;
            }
        }
    }
}
