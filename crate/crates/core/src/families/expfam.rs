//! Exponential-family descriptors: densities h(x)·exp(η·T(x) − A(η)) with
//! closed-form log-partition derivatives.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::families::{make_family, Distribution};
use crate::optimize::{brent_root, expand_bracket};
use crate::special::{digamma, ln_gamma, trigamma};

/// Natural parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Omega {
    Positive,
    Real,
}

impl Omega {
    pub fn contains(&self, eta: f64) -> bool {
        match self {
            Omega::Positive => eta > 0.0 && eta.is_finite(),
            Omega::Real => eta.is_finite(),
        }
    }
}

/// How the conventional parameter maps to the natural one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamMap {
    /// η = σ^{−γ} (scale parameters).
    InversePower(f64),
    /// η equals the conventional parameter.
    Identity,
    /// η = ln λ.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpFamKind {
    GenGammaScale { gamma: f64, k: f64 },
    GammaScale { k: f64 },
    ExponentialScale,
    WeibullScale { k: f64 },
    LaplaceScale,
    NormalScale,
    LogNormalLogScale { mu: f64 },
    InverseGammaScale { k: f64 },
    GenGammaShape { sigma: f64, gamma: f64 },
    GammaShape { sigma: f64 },
    ParetoShape { m: f64 },
    InverseGaussianShape { mu: f64 },
    BetaShape { beta: f64 },
    PoissonRate,
}

/// Catalog tags with the nuisance parameters each expects.
pub const CATALOG: [(&str, &[&str]); 14] = [
    ("generalized-gamma-scale", &["gamma", "k"]),
    ("gamma-scale", &["k"]),
    ("exponential-scale", &[]),
    ("weibull-scale", &["k"]),
    ("laplace-scale", &[]),
    ("normal-scale", &[]),
    ("log-normal-log-scale", &["mu"]),
    ("inverse-gamma-scale", &["k"]),
    ("generalized-gamma-shape", &["sigma", "gamma"]),
    ("gamma-shape", &["sigma"]),
    ("pareto-shape", &["m"]),
    ("inverse-gaussian-shape", &["mu"]),
    ("beta-shape", &["beta"]),
    ("poisson-rate", &[]),
];

/// A minimal one-parameter exponential family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFam {
    pub kind: ExpFamKind,
}

fn pos(name: &'static str, v: f64) -> Result<f64> {
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

/// Looks up a catalog entry by tag, with its nuisance parameters in the
/// order listed in [`CATALOG`].
pub fn expfam_descriptor(kind: &str, fixed: &[f64]) -> Result<ExpFam> {
    let tag = kind.to_ascii_lowercase().replace('_', "-");
    let Some((_, names)) = CATALOG.iter().find(|(t, _)| *t == tag) else {
        return Err(Error::NotInCatalog(kind.to_string()));
    };
    if fixed.len() != names.len() {
        return Err(Error::ParameterCount {
            family: tag,
            expected: names.len(),
            found: fixed.len(),
        });
    }
    let f = fixed;
    let kind = match tag.as_str() {
        "generalized-gamma-scale" => ExpFamKind::GenGammaScale {
            gamma: pos("gamma", f[0])?,
            k: pos("k", f[1])?,
        },
        "gamma-scale" => ExpFamKind::GammaScale { k: pos("k", f[0])? },
        "exponential-scale" => ExpFamKind::ExponentialScale,
        "weibull-scale" => ExpFamKind::WeibullScale { k: pos("k", f[0])? },
        "laplace-scale" => ExpFamKind::LaplaceScale,
        "normal-scale" => ExpFamKind::NormalScale,
        "log-normal-log-scale" => {
            if !f[0].is_finite() {
                return Err(Error::Domain {
                    name: "mu",
                    value: f[0],
                    domain: "finite",
                });
            }
            ExpFamKind::LogNormalLogScale { mu: f[0] }
        }
        "inverse-gamma-scale" => ExpFamKind::InverseGammaScale { k: pos("k", f[0])? },
        "generalized-gamma-shape" => ExpFamKind::GenGammaShape {
            sigma: pos("sigma", f[0])?,
            gamma: pos("gamma", f[1])?,
        },
        "gamma-shape" => ExpFamKind::GammaShape {
            sigma: pos("sigma", f[0])?,
        },
        "pareto-shape" => ExpFamKind::ParetoShape { m: pos("m", f[0])? },
        "inverse-gaussian-shape" => ExpFamKind::InverseGaussianShape {
            mu: pos("mu", f[0])?,
        },
        "beta-shape" => ExpFamKind::BetaShape {
            beta: pos("beta", f[0])?,
        },
        "poisson-rate" => ExpFamKind::PoissonRate,
        _ => unreachable!(),
    };
    Ok(ExpFam { kind })
}

impl ExpFam {
    pub fn new(kind: ExpFamKind) -> Self {
        ExpFam { kind }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ExpFamKind::GenGammaScale { .. } => "generalized-gamma-scale",
            ExpFamKind::GammaScale { .. } => "gamma-scale",
            ExpFamKind::ExponentialScale => "exponential-scale",
            ExpFamKind::WeibullScale { .. } => "weibull-scale",
            ExpFamKind::LaplaceScale => "laplace-scale",
            ExpFamKind::NormalScale => "normal-scale",
            ExpFamKind::LogNormalLogScale { .. } => "log-normal-log-scale",
            ExpFamKind::InverseGammaScale { .. } => "inverse-gamma-scale",
            ExpFamKind::GenGammaShape { .. } => "generalized-gamma-shape",
            ExpFamKind::GammaShape { .. } => "gamma-shape",
            ExpFamKind::ParetoShape { .. } => "pareto-shape",
            ExpFamKind::InverseGaussianShape { .. } => "inverse-gaussian-shape",
            ExpFamKind::BetaShape { .. } => "beta-shape",
            ExpFamKind::PoissonRate => "poisson-rate",
        }
    }

    pub fn omega(&self) -> Omega {
        match self.kind {
            ExpFamKind::PoissonRate => Omega::Real,
            _ => Omega::Positive,
        }
    }

    pub fn param_map(&self) -> ParamMap {
        match self.kind {
            ExpFamKind::GenGammaScale { gamma, .. } => ParamMap::InversePower(gamma),
            ExpFamKind::GammaScale { .. }
            | ExpFamKind::ExponentialScale
            | ExpFamKind::LaplaceScale => ParamMap::InversePower(1.0),
            ExpFamKind::WeibullScale { k } => ParamMap::InversePower(k),
            ExpFamKind::NormalScale | ExpFamKind::LogNormalLogScale { .. } => {
                ParamMap::InversePower(2.0)
            }
            ExpFamKind::PoissonRate => ParamMap::Log,
            _ => ParamMap::Identity,
        }
    }

    /// Conventional parameter (σ, k, λ, ...) to natural parameter.
    pub fn to_natural(&self, param: f64) -> f64 {
        match self.param_map() {
            ParamMap::InversePower(g) => param.powf(-g),
            ParamMap::Identity => param,
            ParamMap::Log => param.ln(),
        }
    }

    pub fn from_natural(&self, eta: f64) -> f64 {
        match self.param_map() {
            ParamMap::InversePower(g) => eta.powf(-1.0 / g),
            ParamMap::Identity => eta,
            ParamMap::Log => eta.exp(),
        }
    }

    fn check(&self, eta: f64) -> Result<()> {
        if self.omega().contains(eta) {
            Ok(())
        } else {
            Err(Error::OutsideOmega(eta))
        }
    }

    /// Sufficient statistic T(x).
    pub fn t(&self, x: f64) -> f64 {
        match self.kind {
            ExpFamKind::GenGammaScale { gamma, .. } => -x.powf(gamma),
            ExpFamKind::GammaScale { .. } | ExpFamKind::ExponentialScale => -x,
            ExpFamKind::WeibullScale { k } => -x.powf(k),
            ExpFamKind::LaplaceScale => -x.abs(),
            ExpFamKind::NormalScale => -0.5 * x * x,
            ExpFamKind::LogNormalLogScale { mu } => -0.5 * (x.ln() - mu).powi(2),
            ExpFamKind::InverseGammaScale { .. } => -1.0 / x,
            ExpFamKind::GenGammaShape { .. }
            | ExpFamKind::GammaShape { .. }
            | ExpFamKind::BetaShape { .. } => x.ln(),
            ExpFamKind::ParetoShape { .. } => -x.ln(),
            ExpFamKind::InverseGaussianShape { mu } => -(x - mu) * (x - mu) / (2.0 * mu * mu * x),
            ExpFamKind::PoissonRate => x,
        }
    }

    /// Log-partition A(η).
    pub fn log_a(&self, eta: f64) -> f64 {
        let l = eta.ln();
        match self.kind {
            ExpFamKind::GenGammaScale { gamma, k } => {
                -(k / gamma) * l + ln_gamma(k / gamma) - gamma.ln()
            }
            ExpFamKind::GammaScale { k } => -k * l + ln_gamma(k),
            ExpFamKind::ExponentialScale => -l,
            ExpFamKind::WeibullScale { k } => -l - k.ln(),
            ExpFamKind::LaplaceScale => -l + 2f64.ln(),
            ExpFamKind::NormalScale | ExpFamKind::LogNormalLogScale { .. } => {
                -0.5 * l + 0.5 * (2.0 * PI).ln()
            }
            ExpFamKind::InverseGammaScale { k } => -k * l + ln_gamma(k),
            ExpFamKind::GenGammaShape { sigma, gamma } => {
                eta * sigma.ln() + ln_gamma(eta / gamma) - gamma.ln()
            }
            ExpFamKind::GammaShape { sigma } => eta * sigma.ln() + ln_gamma(eta),
            ExpFamKind::ParetoShape { m } => -l - eta * m.ln(),
            ExpFamKind::InverseGaussianShape { .. } => -0.5 * l,
            ExpFamKind::BetaShape { beta } => ln_gamma(eta) + ln_gamma(beta) - ln_gamma(eta + beta),
            ExpFamKind::PoissonRate => eta.exp(),
        }
    }

    /// A′(η) = E_η T(X).
    pub fn d_a(&self, eta: f64) -> f64 {
        let psi = |x: f64| digamma(x).unwrap_or(f64::NAN);
        match self.kind {
            ExpFamKind::GenGammaScale { gamma, k } => -(k / gamma) / eta,
            ExpFamKind::GammaScale { k } | ExpFamKind::InverseGammaScale { k } => -k / eta,
            ExpFamKind::ExponentialScale
            | ExpFamKind::WeibullScale { .. }
            | ExpFamKind::LaplaceScale => -1.0 / eta,
            ExpFamKind::NormalScale
            | ExpFamKind::LogNormalLogScale { .. }
            | ExpFamKind::InverseGaussianShape { .. } => -0.5 / eta,
            ExpFamKind::GenGammaShape { sigma, gamma } => sigma.ln() + psi(eta / gamma) / gamma,
            ExpFamKind::GammaShape { sigma } => sigma.ln() + psi(eta),
            ExpFamKind::ParetoShape { m } => -1.0 / eta - m.ln(),
            ExpFamKind::BetaShape { beta } => psi(eta) - psi(eta + beta),
            ExpFamKind::PoissonRate => eta.exp(),
        }
    }

    /// A″(η) = Var_η T(X).
    pub fn d2_a(&self, eta: f64) -> f64 {
        let tri = |x: f64| trigamma(x).unwrap_or(f64::NAN);
        let e2 = eta * eta;
        match self.kind {
            ExpFamKind::GenGammaScale { gamma, k } => (k / gamma) / e2,
            ExpFamKind::GammaScale { k } | ExpFamKind::InverseGammaScale { k } => k / e2,
            ExpFamKind::ExponentialScale
            | ExpFamKind::WeibullScale { .. }
            | ExpFamKind::LaplaceScale
            | ExpFamKind::ParetoShape { .. } => 1.0 / e2,
            ExpFamKind::NormalScale
            | ExpFamKind::LogNormalLogScale { .. }
            | ExpFamKind::InverseGaussianShape { .. } => 0.5 / e2,
            ExpFamKind::GenGammaShape { gamma, .. } => tri(eta / gamma) / (gamma * gamma),
            ExpFamKind::GammaShape { .. } => tri(eta),
            ExpFamKind::BetaShape { beta } => tri(eta) - tri(eta + beta),
            ExpFamKind::PoissonRate => eta.exp(),
        }
    }

    /// The family member with natural parameter η.
    pub fn member(&self, eta: f64) -> Result<Distribution> {
        self.check(eta)?;
        let c = self.from_natural(eta);
        match self.kind {
            ExpFamKind::GenGammaScale { gamma, k } => make_family("generalized-gamma", &[c, gamma, k]),
            ExpFamKind::GammaScale { k } => make_family("gamma", &[k, c]),
            ExpFamKind::ExponentialScale => make_family("exponential", &[c]),
            ExpFamKind::WeibullScale { k } => make_family("weibull", &[c, k]),
            ExpFamKind::LaplaceScale => make_family("laplace", &[0.0, c]),
            ExpFamKind::NormalScale => make_family("normal", &[0.0, c]),
            ExpFamKind::LogNormalLogScale { mu } => make_family("log-normal", &[mu, c]),
            ExpFamKind::InverseGammaScale { k } => make_family("inverse-gamma", &[k, c]),
            ExpFamKind::GenGammaShape { sigma, gamma } => {
                make_family("generalized-gamma", &[sigma, gamma, c])
            }
            ExpFamKind::GammaShape { sigma } => make_family("gamma", &[c, sigma]),
            ExpFamKind::ParetoShape { m } => make_family("pareto", &[m, c]),
            ExpFamKind::InverseGaussianShape { mu } => make_family("inverse-gaussian", &[mu, c]),
            ExpFamKind::BetaShape { beta } => make_family("beta", &[c, beta]),
            ExpFamKind::PoissonRate => make_family("poisson", &[c]),
        }
    }

    /// Bregman divergence d_A(η₁, η₂) = A(η₁) − A(η₂) − A′(η₂)(η₁ − η₂).
    pub fn bregman(&self, eta1: f64, eta2: f64) -> Result<f64> {
        self.check(eta1)?;
        self.check(eta2)?;
        if eta1 == eta2 {
            return Ok(0.0);
        }
        Ok(self.log_a(eta1) - self.log_a(eta2) - self.d_a(eta2) * (eta1 - eta2))
    }

    /// (A′)⁻¹(m): the natural parameter whose mean statistic is m.
    pub fn inverse_d_a(&self, m: f64) -> Result<f64> {
        if !m.is_finite() {
            return Err(Error::ExpectationOutsideRange(m));
        }
        match self.omega() {
            Omega::Real => {
                let g = |e: f64| self.d_a(e) - m;
                let (lo, hi) = expand_bracket(g, -1.0, 1.0, -700.0, 700.0)
                    .ok_or(Error::ExpectationOutsideRange(m))?;
                brent_root(g, lo, hi, 1e-15, "inverse of A'")
            }
            Omega::Positive => {
                // Work in log η so the bracket can span many decades.
                let g = |s: f64| self.d_a(s.exp()) - m;
                let (lo, hi) = expand_bracket(g, -1.0, 1.0, -700.0, 700.0)
                    .ok_or(Error::ExpectationOutsideRange(m))?;
                brent_root(g, lo, hi, 1e-16, "inverse of A'").map(f64::exp)
            }
        }
    }

    /// True when A(η) = c₁·ln η + c₂ on the whole of Ω.
    pub fn is_log_affine(&self) -> bool {
        if self.omega() != Omega::Positive {
            return false;
        }
        let probes = [0.3, 0.7, 1.0, 2.5, 6.0];
        let c = probes[0] * probes[0] * self.d2_a(probes[0]);
        let ok = probes.iter().all(|&e| {
            let v = e * e * self.d2_a(e);
            (v - c).abs() <= 1e-9 * c.abs().max(1e-300)
        });
        // A′(η) must also be exactly −c/η, ruling out a linear term.
        ok && probes
            .iter()
            .all(|&e| (self.d_a(e) + c / e).abs() <= 1e-9 * (c / e).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::Law;

    fn every_entry() -> Vec<ExpFam> {
        [
            ("generalized-gamma-scale", vec![1.5, 2.5]),
            ("gamma-scale", vec![3.0]),
            ("exponential-scale", vec![]),
            ("weibull-scale", vec![2.0]),
            ("laplace-scale", vec![]),
            ("normal-scale", vec![]),
            ("log-normal-log-scale", vec![0.3]),
            ("inverse-gamma-scale", vec![3.0]),
            ("generalized-gamma-shape", vec![1.5, 2.0]),
            ("gamma-shape", vec![2.0]),
            ("pareto-shape", vec![1.5]),
            ("inverse-gaussian-shape", vec![1.2]),
            ("beta-shape", vec![2.0]),
            ("poisson-rate", vec![]),
        ]
        .into_iter()
        .map(|(k, f)| expfam_descriptor(k, &f).unwrap())
        .collect()
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for d in every_entry() {
            for &eta in &[0.6, 1.0, 2.3] {
                let h = 1e-5 * eta;
                let fd1 = (d.log_a(eta + h) - d.log_a(eta - h)) / (2.0 * h);
                let fd2 = (d.d_a(eta + h) - d.d_a(eta - h)) / (2.0 * h);
                assert!((fd1 - d.d_a(eta)).abs() <= 1e-6 * d.d_a(eta).abs().max(1e-3), "{}", d.name());
                assert!((fd2 - d.d2_a(eta)).abs() <= 1e-6 * d.d2_a(eta).abs(), "{}", d.name());
                assert!(d.d2_a(eta) > 0.0);
            }
        }
    }

    #[test]
    fn members_are_normalized_exponential_families() {
        // ln p(x) − η T(x) + A(η) must not depend on η (it is ln h(x)).
        for d in every_entry() {
            let (e1, e2) = (0.8, 1.7);
            let m1 = d.member(e1).unwrap();
            let m2 = d.member(e2).unwrap();
            for &x in &[0.2, 0.5, 0.9, 3.0] {
                let x = if matches!(d.kind, ExpFamKind::PoissonRate) { (x * 3.0f64).round() } else { x };
                if matches!(d.kind, ExpFamKind::ParetoShape { .. }) && x < 1.5 {
                    continue;
                }
                if matches!(d.kind, ExpFamKind::BetaShape { .. }) && x >= 1.0 {
                    continue;
                }
                let h1 = m1.ln_pdf(x) - e1 * d.t(x) + d.log_a(e1);
                let h2 = m2.ln_pdf(x) - e2 * d.t(x) + d.log_a(e2);
                assert!((h1 - h2).abs() < 1e-10, "{} at {x}: {h1} vs {h2}", d.name());
            }
        }
    }

    #[test]
    fn catalog_examples() {
        let e = expfam_descriptor("exponential-scale", &[]).unwrap();
        assert_eq!(e.omega(), Omega::Positive);
        assert!((e.log_a(2.0) + 2f64.ln()).abs() < 1e-15);
        assert!((e.d_a(2.0) + 0.5).abs() < 1e-15);
        assert!((e.d2_a(2.0) - 0.25).abs() < 1e-15);
        let p = expfam_descriptor("poisson-rate", &[]).unwrap();
        assert_eq!(p.omega(), Omega::Real);
        assert!((p.log_a(1.0) - 1f64.exp()).abs() < 1e-15);
        let b = expfam_descriptor("beta-shape", &[2.0]).unwrap();
        assert!((b.d2_a(1.0) - 1.25).abs() < 1e-10);
    }

    #[test]
    fn exponential_member_matches_make_family() {
        let e = expfam_descriptor("exponential-scale", &[]).unwrap();
        let sigma = 2.5;
        let a = e.member(1.0 / sigma).unwrap();
        let b = make_family("exponential", &[sigma]).unwrap();
        for &x in &[0.0, 0.4, 3.0, 10.0] {
            assert!((a.pdf(x) - b.pdf(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn bregman_nonnegative_and_zero_on_diagonal() {
        for d in every_entry() {
            for &(a, b) in &[(0.5, 1.0), (2.0, 1.0), (1.0, 3.0)] {
                assert!(d.bregman(a, b).unwrap() > 0.0, "{}", d.name());
            }
            assert_eq!(d.bregman(1.3, 1.3).unwrap(), 0.0);
        }
    }

    #[test]
    fn inverse_mean_map() {
        for d in every_entry() {
            for &eta in &[0.4, 1.0, 2.5] {
                let back = d.inverse_d_a(d.d_a(eta)).unwrap();
                assert!((back - eta).abs() < 1e-9 * eta, "{}", d.name());
            }
        }
        let e = expfam_descriptor("exponential-scale", &[]).unwrap();
        assert!(matches!(e.inverse_d_a(0.5), Err(Error::ExpectationOutsideRange(_))));
    }

    #[test]
    fn log_affine_detection() {
        assert!(expfam_descriptor("gamma-scale", &[2.0]).unwrap().is_log_affine());
        assert!(!expfam_descriptor("pareto-shape", &[2.0]).unwrap().is_log_affine());
        assert!(!expfam_descriptor("gamma-shape", &[1.0]).unwrap().is_log_affine());
        assert!(!expfam_descriptor("poisson-rate", &[]).unwrap().is_log_affine());
    }

    #[test]
    fn unknown_entry() {
        assert!(matches!(expfam_descriptor("cauchy-scale", &[]), Err(Error::NotInCatalog(_))));
        let e = expfam_descriptor("exponential-scale", &[]).unwrap();
        assert!(matches!(e.member(-1.0), Err(Error::OutsideOmega(_))));
    }
}
