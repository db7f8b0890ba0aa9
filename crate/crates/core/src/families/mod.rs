//! Parametric distribution families and the `Law` interface shared by every
//! forecast representation.

pub mod expfam;

pub use expfam::{expfam_descriptor, ExpFam, ExpFamKind, Omega, ParamMap};

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, RngCore};
use rand_distr::{Distribution as _, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::optimize::{brent_root, expand_bracket};
use crate::quad::{self, Estimate, QuadConfig};
use crate::special::{
    beta_i, gamma_p, gamma_q, ln_gamma, ln_normal_cdf, normal_cdf, normal_pdf, normal_quantile,
};

/// Where a law puts its mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
    /// `Some((origin, step))` for laws on the lattice origin + step·ℕ.
    pub lattice: Option<(f64, f64)>,
}

impl Support {
    pub fn real_line() -> Self {
        Support {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            lattice: None,
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Support {
            lo,
            hi,
            lattice: None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.lattice.is_some()
    }
}

/// A univariate probability law.
///
/// For lattice laws `pdf` is the probability mass at an atom and zero
/// elsewhere.
pub trait Law: fmt::Debug + Send + Sync {
    fn pdf(&self, x: f64) -> f64;
    fn ln_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }
    fn cdf(&self, x: f64) -> f64;
    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }
    fn quantile(&self, p: f64) -> f64;
    fn mean(&self) -> f64;
    fn variance(&self) -> f64;
    fn support(&self) -> Support;
    /// Interior points where the density has a kink, jump or peak.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
    /// A point in the bulk of the mass (mean or median).
    fn center(&self) -> f64;
    /// A length scale of the bulk (standard deviation or a quantile spread).
    fn spread(&self) -> f64;
    fn has_first_moment(&self) -> bool {
        self.mean().is_finite()
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
    /// The parametric form, when the law has one (enables closed forms).
    fn as_parametric(&self) -> Option<&Distribution> {
        None
    }
}

/// Points at which integrals over the law's support are split.
pub fn cut_points(law: &dyn Law) -> Vec<f64> {
    let mut pts = law.kinks();
    let c = law.center();
    if c.is_finite() {
        pts.push(c);
    }
    pts
}

/// E_law[f(X)] by quadrature (continuous) or summation (lattice).
///
/// Where the density vanishes the integrand is taken as zero, so `f` may be
/// infinite outside the support.
pub fn expect<F: Fn(f64) -> f64>(law: &dyn Law, f: F, cfg: &QuadConfig) -> Estimate {
    let sup = law.support();
    if let Some((origin, step)) = sup.lattice {
        return lattice_sum(law, origin, step, &f);
    }
    let g = |x: f64| {
        let p = law.pdf(x);
        if p == 0.0 {
            0.0
        } else {
            f(x) * p
        }
    };
    quad::integrate_pieces(&g, sup.lo, sup.hi, &cut_points(law), law.spread(), cfg)
}

/// Like [`expect`] but failing on non-convergence.
pub fn expect_checked<F: Fn(f64) -> f64>(
    law: &dyn Law,
    f: F,
    cfg: &QuadConfig,
    what: &'static str,
) -> Result<f64> {
    let est = expect(law, f, cfg);
    if est.value.is_nan() {
        return Err(Error::NonIntegrable(what));
    }
    if est.value.is_finite() && !est.converged && est.error > 1e-6 * est.value.abs().max(1.0) {
        return Err(Error::NonConvergence {
            what,
            value: est.value,
            error: est.error,
        });
    }
    Ok(est.value)
}

fn lattice_sum<F: Fn(f64) -> f64>(law: &dyn Law, origin: f64, step: f64, f: &F) -> Estimate {
    let mut total = 0.0;
    let mut n = 0usize;
    let mut seen_mass = 0.0;
    loop {
        let x = origin + step * n as f64;
        let p = law.pdf(x);
        if p > 0.0 {
            total += f(x) * p;
            seen_mass += p;
        }
        n += 1;
        // Remaining mass below 1e-17 once past the bulk.
        if (1.0 - seen_mass < 1e-17 && x > law.center()) || law.sf(x) < 1e-17 || n > 1_000_000 {
            break;
        }
    }
    Estimate {
        value: total,
        error: 1e-12 * total.abs().max(1.0),
        converged: true,
    }
}

/// Numeric quantile by bracketing and Brent's method on the CDF (or on the
/// survival function in the upper half, for precision).
pub fn numeric_quantile(law: &dyn Law, p: f64) -> f64 {
    let sup = law.support();
    if p <= 0.0 {
        return sup.lo;
    }
    if p >= 1.0 {
        return sup.hi;
    }
    let g = |x: f64| {
        if p <= 0.5 {
            law.cdf(x) - p
        } else {
            (1.0 - p) - law.sf(x)
        }
    };
    let c = law.center();
    let s = law.spread().max(1e-300);
    let lo0 = (c - s).max(sup.lo);
    let hi0 = (c + s).min(sup.hi);
    let Some((lo, hi)) = expand_bracket(g, lo0, hi0, sup.lo, sup.hi) else {
        return f64::NAN;
    };
    let tol = 1e-15 * lo.abs().max(hi.abs()).max(1e-300);
    brent_root(g, lo, hi, tol, "quantile").unwrap_or(f64::NAN)
}

/// Standardized shape of a parametric family (location 0, scale 1 member).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Normal,
    Exponential,
    Laplace,
    Weibull { k: f64 },
    Gamma { k: f64 },
    /// density γ z^{k−1} e^{−z^γ} / Γ(k/γ) on z > 0
    GenGamma { gamma: f64, k: f64 },
    LogNormal { mu: f64, sigma: f64 },
    InverseGamma { k: f64 },
    /// density k z^{−k−1} on z ≥ 1
    Pareto { k: f64 },
    InverseGaussian { mu: f64, lambda: f64 },
    Beta { a: f64, b: f64 },
    Poisson { lambda: f64 },
    Cauchy,
    AsymmetricLaplace { p: f64 },
    Uniform,
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Normal => "normal",
            Shape::Exponential => "exponential",
            Shape::Laplace => "laplace",
            Shape::Weibull { .. } => "weibull",
            Shape::Gamma { .. } => "gamma",
            Shape::GenGamma { .. } => "generalized-gamma",
            Shape::LogNormal { .. } => "log-normal",
            Shape::InverseGamma { .. } => "inverse-gamma",
            Shape::Pareto { .. } => "pareto",
            Shape::InverseGaussian { .. } => "inverse-gaussian",
            Shape::Beta { .. } => "beta",
            Shape::Poisson { .. } => "poisson",
            Shape::Cauchy => "cauchy",
            Shape::AsymmetricLaplace { .. } => "asymmetric-laplace",
            Shape::Uniform => "uniform",
        }
    }

    fn support(&self) -> Support {
        match self {
            Shape::Normal | Shape::Laplace | Shape::Cauchy | Shape::AsymmetricLaplace { .. } => {
                Support::real_line()
            }
            Shape::Pareto { .. } => Support::interval(1.0, f64::INFINITY),
            Shape::Beta { .. } | Shape::Uniform => Support::interval(0.0, 1.0),
            Shape::Poisson { .. } => Support {
                lo: 0.0,
                hi: f64::INFINITY,
                lattice: Some((0.0, 1.0)),
            },
            _ => Support::interval(0.0, f64::INFINITY),
        }
    }

    fn ln_pdf(&self, z: f64) -> f64 {
        let sup = self.support();
        if z < sup.lo || z > sup.hi {
            return f64::NEG_INFINITY;
        }
        match *self {
            Shape::Normal => -0.5 * z * z - 0.5 * (2.0 * PI).ln(),
            Shape::Exponential => -z,
            Shape::Laplace => -z.abs() - 2f64.ln(),
            Shape::Weibull { k } => {
                if z == 0.0 {
                    return power_at_zero(k - 1.0, k.ln());
                }
                k.ln() + (k - 1.0) * z.ln() - z.powf(k)
            }
            Shape::Gamma { k } => {
                if z == 0.0 {
                    return power_at_zero(k - 1.0, -ln_gamma(k));
                }
                (k - 1.0) * z.ln() - z - ln_gamma(k)
            }
            Shape::GenGamma { gamma, k } => {
                if z == 0.0 {
                    return power_at_zero(k - 1.0, gamma.ln() - ln_gamma(k / gamma));
                }
                gamma.ln() + (k - 1.0) * z.ln() - z.powf(gamma) - ln_gamma(k / gamma)
            }
            Shape::LogNormal { mu, sigma } => {
                if z == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let u = (z.ln() - mu) / sigma;
                -0.5 * u * u - z.ln() - sigma.ln() - 0.5 * (2.0 * PI).ln()
            }
            Shape::InverseGamma { k } => {
                if z == 0.0 {
                    return f64::NEG_INFINITY;
                }
                -(k + 1.0) * z.ln() - 1.0 / z - ln_gamma(k)
            }
            Shape::Pareto { k } => k.ln() - (k + 1.0) * z.ln(),
            Shape::InverseGaussian { mu, lambda } => {
                if z == 0.0 {
                    return f64::NEG_INFINITY;
                }
                0.5 * (lambda / (2.0 * PI * z * z * z)).ln()
                    - lambda * (z - mu) * (z - mu) / (2.0 * mu * mu * z)
            }
            Shape::Beta { a, b } => {
                let lb = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
                let l = if z == 0.0 {
                    power_at_zero(a - 1.0, 0.0)
                } else {
                    (a - 1.0) * z.ln()
                };
                let r = if z == 1.0 {
                    power_at_zero(b - 1.0, 0.0)
                } else {
                    (b - 1.0) * (-z).ln_1p()
                };
                l + r - lb
            }
            Shape::Poisson { lambda } => {
                if z.fract() != 0.0 {
                    return f64::NEG_INFINITY;
                }
                z * lambda.ln() - lambda - ln_gamma(z + 1.0)
            }
            Shape::Cauchy => -(PI * (1.0 + z * z)).ln(),
            Shape::AsymmetricLaplace { p } => {
                let base = (p * (1.0 - p)).ln();
                if z > 0.0 {
                    base - p * z
                } else {
                    base + (1.0 - p) * z
                }
            }
            Shape::Uniform => 0.0,
        }
    }

    fn pdf(&self, z: f64) -> f64 {
        match *self {
            Shape::Normal => normal_pdf(z),
            Shape::Uniform => {
                if (0.0..=1.0).contains(&z) {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.ln_pdf(z).exp(),
        }
    }

    fn cdf(&self, z: f64) -> f64 {
        let sup = self.support();
        if z < sup.lo {
            return 0.0;
        }
        if z >= sup.hi {
            return 1.0;
        }
        match *self {
            Shape::Normal => normal_cdf(z),
            Shape::Exponential => -(-z).exp_m1(),
            Shape::Laplace => {
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Shape::Weibull { k } => -(-z.powf(k)).exp_m1(),
            Shape::Gamma { k } => gamma_p(k, z),
            Shape::GenGamma { gamma, k } => gamma_p(k / gamma, z.powf(gamma)),
            Shape::LogNormal { mu, sigma } => {
                if z <= 0.0 {
                    0.0
                } else {
                    normal_cdf((z.ln() - mu) / sigma)
                }
            }
            Shape::InverseGamma { k } => {
                if z <= 0.0 {
                    0.0
                } else {
                    gamma_q(k, 1.0 / z)
                }
            }
            Shape::Pareto { k } => -(-k * z.ln()).exp_m1(),
            Shape::InverseGaussian { mu, lambda } => {
                if z <= 0.0 {
                    return 0.0;
                }
                let r = (lambda / z).sqrt();
                let a = normal_cdf(r * (z / mu - 1.0));
                let b = (2.0 * lambda / mu + ln_normal_cdf(-r * (z / mu + 1.0))).exp();
                (a + b).min(1.0)
            }
            Shape::Beta { a, b } => beta_i(a, b, z),
            Shape::Poisson { lambda } => gamma_q(z.floor() + 1.0, lambda),
            Shape::Cauchy => 0.5 + z.atan() / PI,
            Shape::AsymmetricLaplace { p } => {
                if z <= 0.0 {
                    p * ((1.0 - p) * z).exp()
                } else {
                    1.0 - (1.0 - p) * (-p * z).exp()
                }
            }
            Shape::Uniform => z,
        }
    }

    fn sf(&self, z: f64) -> f64 {
        let sup = self.support();
        if z < sup.lo {
            return 1.0;
        }
        if z >= sup.hi {
            return 0.0;
        }
        match *self {
            Shape::Normal => normal_cdf(-z),
            Shape::Exponential => (-z).exp(),
            Shape::Laplace => {
                if z < 0.0 {
                    1.0 - 0.5 * z.exp()
                } else {
                    0.5 * (-z).exp()
                }
            }
            Shape::Weibull { k } => (-z.powf(k)).exp(),
            Shape::Gamma { k } => gamma_q(k, z),
            Shape::GenGamma { gamma, k } => gamma_q(k / gamma, z.powf(gamma)),
            Shape::LogNormal { mu, sigma } => {
                if z <= 0.0 {
                    1.0
                } else {
                    normal_cdf(-(z.ln() - mu) / sigma)
                }
            }
            Shape::InverseGamma { k } => {
                if z <= 0.0 {
                    1.0
                } else {
                    gamma_p(k, 1.0 / z)
                }
            }
            Shape::Pareto { k } => (-k * z.ln()).exp(),
            Shape::InverseGaussian { mu, lambda } => {
                if z <= 0.0 {
                    return 1.0;
                }
                let r = (lambda / z).sqrt();
                let a = normal_cdf(-r * (z / mu - 1.0));
                let b = (2.0 * lambda / mu + ln_normal_cdf(-r * (z / mu + 1.0))).exp();
                (a - b).max(0.0)
            }
            Shape::Beta { a, b } => beta_i(b, a, 1.0 - z),
            Shape::Poisson { lambda } => gamma_p(z.floor() + 1.0, lambda),
            Shape::Cauchy => 0.5 - z.atan() / PI,
            Shape::AsymmetricLaplace { p } => {
                if z <= 0.0 {
                    1.0 - p * ((1.0 - p) * z).exp()
                } else {
                    (1.0 - p) * (-p * z).exp()
                }
            }
            Shape::Uniform => 1.0 - z,
        }
    }

    /// Closed-form quantile where one exists.
    fn quantile_closed(&self, u: f64) -> Option<f64> {
        Some(match *self {
            Shape::Normal => normal_quantile(u),
            Shape::Exponential => -(-u).ln_1p(),
            Shape::Laplace => {
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
            Shape::Weibull { k } => (-(-u).ln_1p()).powf(1.0 / k),
            Shape::LogNormal { mu, sigma } => (mu + sigma * normal_quantile(u)).exp(),
            Shape::Pareto { k } => (-(-u).ln_1p() / k).exp(),
            Shape::Cauchy => (PI * (u - 0.5)).tan(),
            Shape::AsymmetricLaplace { p } => {
                if u <= p {
                    (u / p).ln() / (1.0 - p)
                } else {
                    -((1.0 - u) / (1.0 - p)).ln() / p
                }
            }
            Shape::Uniform => u,
            _ => return None,
        })
    }

    /// (mean, variance) of the standardized shape; infinite where they do
    /// not exist, NaN for the Cauchy mean.
    fn moments(&self) -> (f64, f64) {
        match *self {
            Shape::Normal => (0.0, 1.0),
            Shape::Exponential => (1.0, 1.0),
            Shape::Laplace => (0.0, 2.0),
            Shape::Weibull { k } => {
                let m = ln_gamma(1.0 + 1.0 / k).exp();
                (m, ln_gamma(1.0 + 2.0 / k).exp() - m * m)
            }
            Shape::Gamma { k } => (k, k),
            Shape::GenGamma { gamma, k } => {
                let l0 = ln_gamma(k / gamma);
                let m = (ln_gamma((k + 1.0) / gamma) - l0).exp();
                let m2 = (ln_gamma((k + 2.0) / gamma) - l0).exp();
                (m, m2 - m * m)
            }
            Shape::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                ((mu + 0.5 * s2).exp(), s2.exp_m1() * (2.0 * mu + s2).exp())
            }
            Shape::InverseGamma { k } => {
                let m = if k > 1.0 { 1.0 / (k - 1.0) } else { f64::INFINITY };
                let v = if k > 2.0 {
                    1.0 / ((k - 1.0) * (k - 1.0) * (k - 2.0))
                } else {
                    f64::INFINITY
                };
                (m, v)
            }
            Shape::Pareto { k } => {
                let m = if k > 1.0 { k / (k - 1.0) } else { f64::INFINITY };
                let v = if k > 2.0 {
                    k / ((k - 1.0) * (k - 1.0) * (k - 2.0))
                } else {
                    f64::INFINITY
                };
                (m, v)
            }
            Shape::InverseGaussian { mu, lambda } => (mu, mu * mu * mu / lambda),
            Shape::Beta { a, b } => {
                let s = a + b;
                (a / s, a * b / (s * s * (s + 1.0)))
            }
            Shape::Poisson { lambda } => (lambda, lambda),
            Shape::Cauchy => (f64::NAN, f64::INFINITY),
            Shape::AsymmetricLaplace { p } => {
                let q = 1.0 - p;
                let m = (1.0 - 2.0 * p) / (p * q);
                let m2 = 2.0 * q / (p * p) + 2.0 * p / (q * q);
                (m, m2 - m * m)
            }
            Shape::Uniform => (0.5, 1.0 / 12.0),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match *self {
            Shape::Laplace | Shape::AsymmetricLaplace { .. } => vec![0.0],
            Shape::Gamma { k } if k > 1.0 => vec![k - 1.0],
            Shape::Weibull { k } if k > 1.0 => vec![((k - 1.0) / k).powf(1.0 / k)],
            Shape::LogNormal { mu, sigma } => vec![(mu - sigma * sigma).exp()],
            Shape::InverseGamma { k } => vec![1.0 / (k + 1.0)],
            Shape::InverseGaussian { mu, lambda } => {
                let r = 1.5 * mu / lambda;
                vec![mu * ((1.0 + r * r).sqrt() - r)]
            }
            _ => Vec::new(),
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match *self {
            Shape::Normal => rng.sample(StandardNormal),
            Shape::Exponential => rng.sample(Exp1),
            Shape::Gamma { k } => sample_gamma(k, rng),
            Shape::GenGamma { gamma, k } => sample_gamma(k / gamma, rng).powf(1.0 / gamma),
            Shape::InverseGamma { k } => 1.0 / sample_gamma(k, rng),
            Shape::LogNormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
            Shape::InverseGaussian { mu, lambda } => rand_distr::InverseGaussian::new(mu, lambda)
                .expect("validated parameters")
                .sample(rng),
            Shape::Beta { a, b } => rand_distr::Beta::new(a, b)
                .expect("validated parameters")
                .sample(rng),
            Shape::Poisson { lambda } => rand_distr::Poisson::new(lambda)
                .expect("validated parameters")
                .sample(rng),
            _ => {
                let u: f64 = rng.random();
                self.quantile_closed(u).expect("closed-form quantile")
            }
        }
    }
}

/// ln of c·z^e at z = 0: −∞, ln c or +∞ depending on the sign of e.
fn power_at_zero(e: f64, ln_c: f64) -> f64 {
    if e > 0.0 {
        f64::NEG_INFINITY
    } else if e == 0.0 {
        ln_c
    } else {
        f64::INFINITY
    }
}

fn sample_gamma(k: f64, rng: &mut dyn RngCore) -> f64 {
    rand_distr::Gamma::new(k, 1.0)
        .expect("validated shape")
        .sample(rng)
}

/// The law of loc + scale·Z where Z follows a standardized `Shape`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    pub shape: Shape,
    pub loc: f64,
    pub scale: f64,
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain {
            name,
            value: v,
            domain: "> 0",
        })
    }
}

fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain {
            name,
            value: v,
            domain: "finite",
        })
    }
}

/// Canonical family tags accepted by [`make_family`].
pub const FAMILY_TAGS: [&str; 15] = [
    "normal",
    "exponential",
    "laplace",
    "weibull",
    "gamma",
    "generalized-gamma",
    "log-normal",
    "inverse-gamma",
    "pareto",
    "inverse-gaussian",
    "beta",
    "poisson",
    "cauchy",
    "asymmetric-laplace",
    "uniform",
];

/// Builds a family member from its conventional parameters:
///
/// | tag | parameters |
/// |---|---|
/// | normal | μ, σ |
/// | exponential | σ |
/// | laplace | μ, b |
/// | weibull | σ, k |
/// | gamma | k, σ |
/// | generalized-gamma | σ, γ, k |
/// | log-normal | μ, σ (of the log) |
/// | inverse-gamma | k, σ |
/// | pareto | m, k |
/// | inverse-gaussian | μ, λ |
/// | beta | a, b |
/// | poisson | λ |
/// | cauchy | location, scale |
/// | asymmetric-laplace | μ, σ, p |
/// | uniform | a, b |
pub fn make_family(kind: &str, params: &[f64]) -> Result<Distribution> {
    let tag = kind.to_ascii_lowercase().replace('_', "-");
    let expected = match tag.as_str() {
        "exponential" | "poisson" => 1,
        "generalized-gamma" | "asymmetric-laplace" => 3,
        "normal" | "laplace" | "weibull" | "gamma" | "log-normal" | "inverse-gamma" | "pareto"
        | "inverse-gaussian" | "beta" | "cauchy" | "uniform" => 2,
        _ => return Err(Error::UnknownFamily(kind.to_string())),
    };
    if params.len() != expected {
        return Err(Error::ParameterCount {
            family: tag,
            expected,
            found: params.len(),
        });
    }
    let p = params;
    let d = |shape, loc, scale| Distribution { shape, loc, scale };
    Ok(match tag.as_str() {
        "normal" => d(Shape::Normal, finite("mu", p[0])?, positive("sigma", p[1])?),
        "exponential" => d(Shape::Exponential, 0.0, positive("sigma", p[0])?),
        "laplace" => d(Shape::Laplace, finite("mu", p[0])?, positive("b", p[1])?),
        "weibull" => d(
            Shape::Weibull {
                k: positive("k", p[1])?,
            },
            0.0,
            positive("sigma", p[0])?,
        ),
        "gamma" => d(
            Shape::Gamma {
                k: positive("k", p[0])?,
            },
            0.0,
            positive("sigma", p[1])?,
        ),
        "generalized-gamma" => d(
            Shape::GenGamma {
                gamma: positive("gamma", p[1])?,
                k: positive("k", p[2])?,
            },
            0.0,
            positive("sigma", p[0])?,
        ),
        "log-normal" => d(
            Shape::LogNormal {
                mu: finite("mu", p[0])?,
                sigma: positive("sigma", p[1])?,
            },
            0.0,
            1.0,
        ),
        "inverse-gamma" => d(
            Shape::InverseGamma {
                k: positive("k", p[0])?,
            },
            0.0,
            positive("sigma", p[1])?,
        ),
        "pareto" => d(
            Shape::Pareto {
                k: positive("k", p[1])?,
            },
            0.0,
            positive("m", p[0])?,
        ),
        "inverse-gaussian" => d(
            Shape::InverseGaussian {
                mu: positive("mu", p[0])?,
                lambda: positive("lambda", p[1])?,
            },
            0.0,
            1.0,
        ),
        "beta" => d(
            Shape::Beta {
                a: positive("a", p[0])?,
                b: positive("b", p[1])?,
            },
            0.0,
            1.0,
        ),
        "poisson" => d(
            Shape::Poisson {
                lambda: positive("lambda", p[0])?,
            },
            0.0,
            1.0,
        ),
        "cauchy" => d(Shape::Cauchy, finite("location", p[0])?, positive("scale", p[1])?),
        "asymmetric-laplace" => {
            let skew = p[2];
            if !(skew > 0.0 && skew < 1.0) {
                return Err(Error::Domain {
                    name: "p",
                    value: skew,
                    domain: "(0, 1)",
                });
            }
            d(
                Shape::AsymmetricLaplace { p: skew },
                finite("mu", p[0])?,
                positive("sigma", p[1])?,
            )
        }
        "uniform" => {
            let (a, b) = (finite("a", p[0])?, finite("b", p[1])?);
            if b <= a {
                return Err(Error::Domain {
                    name: "b",
                    value: b,
                    domain: "b > a",
                });
            }
            d(Shape::Uniform, a, b - a)
        }
        _ => unreachable!(),
    })
}

impl Distribution {
    pub fn new(shape: Shape, loc: f64, scale: f64) -> Result<Self> {
        finite("loc", loc)?;
        positive("scale", scale)?;
        Ok(Distribution { shape, loc, scale })
    }

    pub fn standard(shape: Shape) -> Self {
        Distribution {
            shape,
            loc: 0.0,
            scale: 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        self.shape.name()
    }

    /// Law of σ·X.
    pub fn scaled(&self, sigma: f64) -> Self {
        Distribution {
            loc: self.loc * sigma,
            scale: self.scale * sigma,
            ..*self
        }
    }

    /// Law of X + μ.
    pub fn shifted(&self, mu: f64) -> Self {
        Distribution {
            loc: self.loc + mu,
            ..*self
        }
    }

    /// Law of a + b·X for b > 0.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Distribution {
            shape: self.shape,
            loc: a + b * self.loc,
            scale: b * self.scale,
        }
    }

    fn z(&self, x: f64) -> f64 {
        (x - self.loc) / self.scale
    }

    /// True when the density is symmetric about some point, returning it.
    pub fn symmetry_center(&self) -> Option<f64> {
        match self.shape {
            Shape::Normal | Shape::Laplace | Shape::Cauchy => Some(self.loc),
            Shape::Uniform => Some(self.loc + 0.5 * self.scale),
            Shape::AsymmetricLaplace { p } if p == 0.5 => Some(self.loc),
            Shape::Beta { a, b } if a == b => Some(self.loc + 0.5 * self.scale),
            _ => None,
        }
    }
}

impl Law for Distribution {
    fn pdf(&self, x: f64) -> f64 {
        let z = self.z(x);
        if self.shape.support().is_discrete() {
            // Snap to the lattice to absorb rounding in loc + scale·n.
            let n = z.round();
            if n < 0.0 || (z - n).abs() > 1e-9 {
                return 0.0;
            }
            return self.shape.pdf(n);
        }
        self.shape.pdf(z) / self.scale
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let z = self.z(x);
        if self.shape.support().is_discrete() {
            return self.pdf(x).ln();
        }
        self.shape.ln_pdf(z) - self.scale.ln()
    }

    fn cdf(&self, x: f64) -> f64 {
        let mut z = self.z(x);
        if self.shape.support().is_discrete() {
            z = (z + 1e-9).floor();
        }
        self.shape.cdf(z)
    }

    fn sf(&self, x: f64) -> f64 {
        let mut z = self.z(x);
        if self.shape.support().is_discrete() {
            z = (z + 1e-9).floor();
        }
        self.shape.sf(z)
    }

    fn quantile(&self, p: f64) -> f64 {
        if let Some(z) = self.shape.quantile_closed(p) {
            return self.loc + self.scale * z;
        }
        match self.shape {
            Shape::Poisson { lambda } => {
                if p <= 0.0 {
                    return self.loc;
                }
                if p >= 1.0 {
                    return f64::INFINITY;
                }
                let mut n = (lambda - 3.0 * lambda.sqrt()).floor().max(0.0);
                while n > 0.0 && self.shape.cdf(n - 1.0) >= p {
                    n -= 1.0;
                }
                while self.shape.cdf(n) < p {
                    n += 1.0;
                }
                self.loc + self.scale * n
            }
            _ => {
                let std = Distribution::standard(self.shape);
                self.loc + self.scale * numeric_quantile(&std, p)
            }
        }
    }

    fn mean(&self) -> f64 {
        self.loc + self.scale * self.shape.moments().0
    }

    fn variance(&self) -> f64 {
        self.scale * self.scale * self.shape.moments().1
    }

    fn support(&self) -> Support {
        let s = self.shape.support();
        Support {
            lo: self.loc + self.scale * s.lo,
            hi: self.loc + self.scale * s.hi,
            lattice: s
                .lattice
                .map(|(o, step)| (self.loc + self.scale * o, self.scale * step)),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        self.shape
            .kinks()
            .into_iter()
            .map(|z| self.loc + self.scale * z)
            .collect()
    }

    fn center(&self) -> f64 {
        let m = self.shape.moments().0;
        let z = if m.is_finite() {
            m
        } else {
            match self.shape {
                Shape::Cauchy => 0.0,
                Shape::Pareto { k } => 2f64.powf(1.0 / k),
                Shape::InverseGamma { .. } => self.shape.kinks()[0] * 2.0,
                _ => 0.0,
            }
        };
        self.loc + self.scale * z
    }

    fn spread(&self) -> f64 {
        let v = self.shape.moments().1;
        let s = if v.is_finite() && v > 0.0 {
            v.sqrt()
        } else {
            match self.shape {
                Shape::Pareto { k } => 4f64.powf(1.0 / k) - (4.0f64 / 3.0).powf(1.0 / k),
                Shape::InverseGamma { k } => 1.0 / k.max(0.1),
                _ => 1.0,
            }
        };
        self.scale * s
    }

    fn has_first_moment(&self) -> bool {
        self.shape.moments().0.is_finite()
    }

    fn as_parametric(&self) -> Option<&Distribution> {
        Some(self)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.loc + self.scale * self.shape.sample(rng)
    }
}

/// {σ·Y : σ > 0} generated by a base law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFamily {
    pub base: Distribution,
}

impl ScaleFamily {
    pub fn new(base: Distribution) -> Self {
        ScaleFamily { base }
    }

    pub fn member(&self, sigma: f64) -> Distribution {
        self.base.scaled(sigma)
    }

    pub fn name(&self) -> &'static str {
        self.base.name()
    }
}

/// {Y + μ : μ ∈ ℝ} generated by a base law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationFamily {
    pub base: Distribution,
}

impl LocationFamily {
    pub fn new(base: Distribution) -> Self {
        LocationFamily { base }
    }

    pub fn member(&self, mu: f64) -> Distribution {
        self.base.shifted(mu)
    }

    pub fn name(&self) -> &'static str {
        self.base.name()
    }
}

/// Parses `name:p1,p2,...` (for example `normal:0,1`).
pub fn parse_distribution(text: &str) -> Result<Distribution> {
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    let params = rest
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad parameter `{s}` in `{text}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    make_family(name.trim(), &params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_fixtures() -> Vec<Distribution> {
        [
            ("normal", vec![0.5, 2.0]),
            ("exponential", vec![1.5]),
            ("laplace", vec![-1.0, 0.7]),
            ("weibull", vec![2.0, 1.7]),
            ("weibull", vec![1.0, 0.6]),
            ("gamma", vec![3.0, 0.5]),
            ("gamma", vec![0.6, 1.0]),
            ("generalized-gamma", vec![1.3, 2.5, 1.5]),
            ("log-normal", vec![0.2, 0.5]),
            ("inverse-gamma", vec![3.0, 2.0]),
            ("pareto", vec![1.5, 3.0]),
            ("inverse-gaussian", vec![1.0, 2.0]),
            ("beta", vec![2.0, 3.5]),
            ("beta", vec![0.7, 0.9]),
            ("cauchy", vec![0.0, 1.0]),
            ("asymmetric-laplace", vec![0.0, 1.0, 0.2]),
            ("uniform", vec![-1.0, 3.0]),
        ]
        .into_iter()
        .map(|(k, p)| make_family(k, &p).unwrap())
        .collect()
    }

    #[test]
    fn densities_integrate_to_one() {
        for d in all_fixtures() {
            let est = expect(&d, |_| 1.0, &QuadConfig::default());
            assert!((est.value - 1.0).abs() < 1e-8, "{d:?}: {est:?}");
        }
        let pois = make_family("poisson", &[3.5]).unwrap();
        let est = expect(&pois, |_| 1.0, &QuadConfig::default());
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_quantile_round_trip() {
        for d in all_fixtures() {
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let x = d.quantile(p);
                assert!((d.cdf(x) - p).abs() < 1e-8, "{d:?} at {p}: x={x}");
            }
        }
    }

    #[test]
    fn sf_complements_cdf() {
        for d in all_fixtures() {
            for i in 1..20 {
                let x = d.quantile(i as f64 / 20.0);
                assert!((d.cdf(x) + d.sf(x) - 1.0).abs() < 1e-12, "{d:?}");
            }
        }
    }

    #[test]
    fn examples_from_the_catalog() {
        let e = make_family("exponential", &[1.0]).unwrap();
        assert_eq!(e.pdf(0.0), 1.0);
        let al = make_family("asymmetric-laplace", &[0.0, 1.0, 0.2]).unwrap();
        assert!((al.pdf(0.0) - 0.16).abs() < 1e-15);
    }

    #[test]
    fn symmetrized_generalized_gamma_is_normal() {
        // γ = 2, k = 1 and σ = √2, folded onto ℝ with half the mass per side.
        let gg = make_family("generalized-gamma", &[2f64.sqrt(), 2.0, 1.0]).unwrap();
        let n = make_family("normal", &[0.0, 1.0]).unwrap();
        for i in -40..=40 {
            let x = i as f64 * 0.1;
            let folded = 0.5 * gg.pdf(x.abs());
            assert!((folded - n.pdf(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn moments_match_quadrature() {
        for d in all_fixtures() {
            if !d.variance().is_finite() {
                continue;
            }
            let cfg = QuadConfig::default();
            let m = expect(&d, |x| x, &cfg).value;
            let v = expect(&d, |x| (x - m) * (x - m), &cfg).value;
            assert!((m - d.mean()).abs() < 1e-8 * d.mean().abs().max(1.0), "{d:?}");
            assert!((v - d.variance()).abs() < 1e-7 * d.variance().max(1.0), "{d:?}");
        }
    }

    #[test]
    fn scale_family_quantiles_scale() {
        let fam = ScaleFamily::new(make_family("gamma", &[2.0, 1.0]).unwrap());
        assert_eq!(fam.member(1.0), fam.base);
        for &t in &[0.1, 0.5, 0.9] {
            let q = fam.member(3.0).quantile(t);
            assert!((q - 3.0 * fam.base.quantile(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn location_family_shifts_cdf() {
        let fam = LocationFamily::new(make_family("laplace", &[0.0, 1.0]).unwrap());
        for &y in &[-2.0, 0.3, 4.0] {
            assert!((fam.member(1.5).cdf(y) - fam.base.cdf(y - 1.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(make_family("zeta", &[1.0]), Err(Error::UnknownFamily(_))));
        assert!(matches!(make_family("normal", &[0.0]), Err(Error::ParameterCount { .. })));
        assert!(matches!(make_family("normal", &[0.0, -1.0]), Err(Error::Domain { .. })));
        assert!(make_family("asymmetric-laplace", &[0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn parse_spec_strings() {
        let d = parse_distribution("normal:0,1").unwrap();
        assert_eq!(d, make_family("normal", &[0.0, 1.0]).unwrap());
        assert!(parse_distribution("normal:a,1").is_err());
    }

    #[test]
    fn poisson_lattice_quantile() {
        let p = make_family("poisson", &[4.0]).unwrap();
        for &u in &[0.05, 0.5, 0.95] {
            let n = p.quantile(u);
            assert!(p.cdf(n) >= u && p.cdf(n - 1.0) < u);
        }
    }
}
