//! Expected losses ℓ(F, G) = E_G ℓ(F, Y) and divergences
//! d(F, G) = ℓ(F, G) − ℓ(G, G).

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::families::{expect_checked, Distribution, ExpFam, Law, Shape};
use crate::forecasts::Forecast;
use crate::quad::{self, QuadConfig};
use crate::scoring::{
    as_distribution, cross_moment, density_sq_integral, law_cuts, pair_moment,
    require_first_moment, score, LossSpec, WeightFunction,
};
use crate::special::{hyp1f1, ln_gamma, normal_cdf, normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Closed form when one exists, quadrature otherwise.
    Auto,
    ClosedForm,
    /// ∫ g(y) ℓ(F, y) dy by adaptive quadrature.
    Quadrature,
    MonteCarlo { draws: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedLoss {
    pub value: f64,
    /// Monte Carlo standard error; `None` for deterministic methods.
    pub std_error: Option<f64>,
    pub method: &'static str,
}

fn div_cfg() -> QuadConfig {
    QuadConfig::with_tol(1e-13, 1e-11)
}

/// ℓ(F, G) = E_{Y∼G} ℓ(F, Y).
pub fn expected_loss(spec: &LossSpec, f: &Forecast, g: &dyn Law, method: Method) -> Result<ExpectedLoss> {
    let exact = |value| ExpectedLoss {
        value,
        std_error: None,
        method: "closed-form",
    };
    match method {
        Method::ClosedForm => closed_expected_loss(spec, f, g)
            .map(exact)
            .ok_or(Error::MissingCapability("closed form")),
        Method::Auto => match closed_expected_loss(spec, f, g) {
            Some(v) => Ok(exact(v)),
            None => quadrature_expected_loss(spec, f, g),
        },
        Method::Quadrature => quadrature_expected_loss(spec, f, g),
        Method::MonteCarlo { draws, seed } => monte_carlo_expected_loss(spec, f, g, draws, seed),
    }
}

fn quadrature_expected_loss(spec: &LossSpec, f: &Forecast, g: &dyn Law) -> Result<ExpectedLoss> {
    if matches!(spec, LossSpec::Log) {
        if let Some(law) = f.law() {
            if !covers(law, g) {
                return Ok(ExpectedLoss {
                    value: f64::INFINITY,
                    std_error: None,
                    method: "quadrature",
                });
            }
        }
    }
    if spec.needs_first_moment() {
        require_first_moment(g)?;
    }
    let failed = std::cell::Cell::new(None);
    let h = |y: f64| match score(spec, f, y) {
        Ok(v) => v,
        Err(e) => {
            failed.set(Some(e));
            0.0
        }
    };
    let cfg = QuadConfig::with_tol(1e-12, 1e-10);
    let value = if g.support().is_discrete() {
        expect_checked(g, h, &cfg, "expected loss")?
    } else {
        let mut cuts = law_cuts(g);
        match f {
            Forecast::Ensemble(e) => cuts.extend(e.members().iter().map(|m| m[0])),
            _ => {
                let law = f.law().expect("non-ensemble forecasts are laws");
                cuts.extend(law_cuts(law));
                let s = law.support();
                cuts.extend([s.lo, s.hi].into_iter().filter(|x| x.is_finite()));
            }
        }
        let sup = g.support();
        let weighted = |y: f64| {
            let p = g.pdf(y);
            if p == 0.0 {
                0.0
            } else {
                p * h(y)
            }
        };
        quad::integrate(&weighted, sup.lo, sup.hi, &cuts, g.spread(), &cfg, "expected loss")?
    };
    if let Some(e) = failed.take() {
        return Err(e);
    }
    Ok(ExpectedLoss {
        value,
        std_error: None,
        method: "quadrature",
    })
}

fn monte_carlo_expected_loss(
    spec: &LossSpec,
    f: &Forecast,
    g: &dyn Law,
    draws: usize,
    seed: u64,
) -> Result<ExpectedLoss> {
    if draws < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            found: draws,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..draws {
        let v = score(spec, f, g.sample(&mut rng))?;
        if !v.is_finite() {
            return Ok(ExpectedLoss {
                value: v,
                std_error: None,
                method: "monte-carlo",
            });
        }
        // Welford update.
        let d = v - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (v - mean);
    }
    let n = draws as f64;
    Ok(ExpectedLoss {
        value: mean,
        std_error: Some((m2 / (n - 1.0) / n).sqrt()),
        method: "monte-carlo",
    })
}

/// E|N(m, v)|^β.
fn normal_abs_moment(m: f64, v: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        let s = v.sqrt();
        let z = m / s;
        return s * (2.0 * normal_pdf(z) + z * (2.0 * normal_cdf(z) - 1.0));
    }
    v.powf(beta / 2.0) * 2f64.powf(beta / 2.0) * ln_gamma((beta + 1.0) / 2.0).exp() / PI.sqrt()
        * hyp1f1(-beta / 2.0, 0.5, -m * m / (2.0 * v))
}

/// Density of N(0, v) at m: ∫ f g for two normals.
fn normal_overlap(m: f64, v: f64) -> f64 {
    normal_pdf(m / v.sqrt()) / v.sqrt()
}

fn parametric_pair(f: &Forecast, g: &dyn Law) -> Option<(Distribution, Distribution)> {
    let Forecast::Parametric(fd) = f else { return None };
    Some((fd.clone(), as_distribution(g)?))
}

/// Closed-form ℓ(F, G) for normal pairs and for exponential pairs sharing a
/// location.
fn closed_expected_loss(spec: &LossSpec, f: &Forecast, g: &dyn Law) -> Option<f64> {
    let (fd, gd) = parametric_pair(f, g)?;
    match (fd.shape, gd.shape) {
        (Shape::Normal, Shape::Normal) => {
            let (m, s, mu, t) = (fd.loc, fd.scale, gd.loc, gd.scale);
            let (d, v) = (mu - m, s * s + t * t);
            Some(match spec {
                LossSpec::Log => (s * (2.0 * PI).sqrt()).ln() + (t * t + d * d) / (2.0 * s * s),
                LossSpec::Quadratic => -2.0 * normal_overlap(d, v) + 1.0 / (2.0 * s * PI.sqrt()),
                LossSpec::Spherical => {
                    -normal_overlap(d, v) / (1.0 / (2.0 * s * PI.sqrt())).sqrt()
                }
                LossSpec::Crps => normal_abs_moment(d, v, 1.0) - s / PI.sqrt(),
                LossSpec::Energy { beta } => {
                    normal_abs_moment(d, v, *beta) - 0.5 * normal_abs_moment(0.0, 2.0 * s * s, *beta)
                }
                LossSpec::DawidSebastiani => (s * s).ln() + (t * t + d * d) / (s * s),
                LossSpec::TwCrps(_) => return None,
            })
        }
        (Shape::Exponential, Shape::Exponential) if fd.loc == gd.loc => {
            let (a, b) = (fd.scale, gd.scale);
            Some(match spec {
                LossSpec::Log => a.ln() + b / a,
                LossSpec::Quadratic => -2.0 / (a + b) + 0.5 / a,
                LossSpec::Spherical => -(1.0 / (a + b)) / (0.5 / a).sqrt(),
                LossSpec::Crps => a / 2.0 + b - 2.0 * a * b / (a + b),
                LossSpec::DawidSebastiani => (a * a).ln() + (b * b + (b - a) * (b - a)) / (a * a),
                _ => return None,
            })
        }
        _ => None,
    }
}

/// ℓ(G, G), the entropy of G under the loss.
pub fn self_loss(spec: &LossSpec, g: &dyn Law) -> Result<f64> {
    if let Some(d) = as_distribution(g) {
        if let Some(v) = closed_expected_loss(spec, &Forecast::Parametric(d), g) {
            return Ok(v);
        }
    }
    quadrature_self_loss(spec, g)
}

fn quadrature_self_loss(spec: &LossSpec, g: &dyn Law) -> Result<f64> {
    let cfg = QuadConfig::with_tol(1e-12, 1e-10);
    match spec {
        LossSpec::Log => expect_checked(g, |y| -g.ln_pdf(y), &cfg, "entropy"),
        LossSpec::Quadratic => Ok(-density_sq_integral(g)?),
        LossSpec::Spherical => Ok(-density_sq_integral(g)?.sqrt()),
        LossSpec::Crps => Ok(0.5 * pair_moment(g, 1.0)?),
        LossSpec::Energy { beta } => Ok(0.5 * pair_moment(g, *beta)?),
        LossSpec::DawidSebastiani => Ok(g.variance().ln() + 1.0),
        LossSpec::TwCrps(w) => {
            let (lo, hi) = w.domain();
            let sup = g.support();
            let h = |x: f64| w.w(x) * g.cdf(x) * g.sf(x);
            quad::integrate(&h, lo.max(sup.lo), hi.min(sup.hi), &law_cuts(g), g.spread(), &cfg, "TW-CRPS entropy")
        }
    }
}

/// True when the support of `f` contains that of `g` (and lattices agree).
fn covers(f: &dyn Law, g: &dyn Law) -> bool {
    let (sf, sg) = (f.support(), g.support());
    if sf.lattice.is_some() != sg.lattice.is_some() {
        return false;
    }
    if let (Some((of, hf)), Some((og, hg))) = (sf.lattice, sg.lattice) {
        let r = hg / hf;
        let off = (og - of) / hf;
        if (r - r.round()).abs() > 1e-9 || (off - off.round()).abs() > 1e-9 {
            return false;
        }
    }
    sg.lo >= sf.lo && sg.hi <= sf.hi
}

/// d(F, G) for a forecast law F against the truth G, from the divergence's
/// own formula (closed form where available).
pub fn divergence(spec: &LossSpec, f: &dyn Law, g: &dyn Law) -> Result<f64> {
    if let Some(v) = closed_divergence(spec, f, g) {
        return Ok(v);
    }
    match spec {
        LossSpec::Log => kl_divergence(g, f),
        LossSpec::Quadratic => l2_distance(f, g),
        LossSpec::Spherical => {
            let ff = density_sq_integral(f)?;
            let gg = density_sq_integral(g)?;
            Ok(gg.sqrt() - overlap(f, g)? / ff.sqrt())
        }
        LossSpec::Crps => {
            require_first_moment(f)?;
            require_first_moment(g)?;
            cramer(f, g, None)
        }
        LossSpec::TwCrps(w) => {
            require_first_moment(f)?;
            require_first_moment(g)?;
            let (lo, hi) = w.domain();
            for s in [f.support(), g.support()] {
                if s.lo < lo || s.hi > hi {
                    return Err(match w {
                        WeightFunction::Power { alpha } => Error::NegativeSupportPowerWeight(*alpha),
                        WeightFunction::Tabulated(_) => {
                            Error::InvalidWeight("support leaves the weight domain".into())
                        }
                    });
                }
            }
            match cramer(f, g, Some(w)) {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) | Err(Error::NonConvergence { .. }) | Err(Error::NonIntegrable(_)) => {
                    Err(Error::NonIntegrableWeight)
                }
                Err(e) => Err(e),
            }
        }
        LossSpec::Energy { beta } => {
            require_first_moment(f)?;
            require_first_moment(g)?;
            if *beta == 1.0 {
                return cramer(f, g, None);
            }
            let xy = cross_moment(f, g, *beta)?;
            Ok(xy - 0.5 * (pair_moment(f, *beta)? + pair_moment(g, *beta)?))
        }
        LossSpec::DawidSebastiani => {
            let (mf, vf, mg, vg) = (f.mean(), f.variance(), g.mean(), g.variance());
            if ![mf, vf, mg, vg].iter().all(|x| x.is_finite()) {
                return Err(Error::InfiniteMoments);
            }
            Ok(ds_divergence(mf, vf, mg, vg))
        }
    }
}

/// ln(VarX/VarY) + (VarY − VarX + (EY − EX)²)/VarX for forecast X, truth Y.
pub fn ds_divergence(mf: f64, vf: f64, mg: f64, vg: f64) -> f64 {
    (vf / vg).ln() + (vg - vf + (mg - mf) * (mg - mf)) / vf
}

/// d(F, G) for any forecast, falling back to ℓ(F, G) − ℓ(G, G) for ensembles.
pub fn forecast_divergence(spec: &LossSpec, f: &Forecast, g: &dyn Law) -> Result<f64> {
    match f.law() {
        Some(law) => divergence(spec, law, g),
        None => Ok(expected_loss(spec, f, g, Method::Auto)?.value - self_loss(spec, g)?),
    }
}

fn closed_divergence(spec: &LossSpec, f: &dyn Law, g: &dyn Law) -> Option<f64> {
    let (fd, gd) = (as_distribution(f)?, as_distribution(g)?);
    match (fd.shape, gd.shape) {
        (Shape::Normal, Shape::Normal) => {
            let (m, s, mu, t) = (fd.loc, fd.scale, gd.loc, gd.scale);
            let (d, v) = (mu - m, s * s + t * t);
            let sq = |x: f64| 1.0 / (2.0 * x * PI.sqrt());
            Some(match spec {
                LossSpec::Log => (s / t).ln() + (t * t + d * d) / (2.0 * s * s) - 0.5,
                LossSpec::Quadratic => sq(s) + sq(t) - 2.0 * normal_overlap(d, v),
                LossSpec::Spherical => sq(t).sqrt() - normal_overlap(d, v) / sq(s).sqrt(),
                LossSpec::Crps => normal_abs_moment(d, v, 1.0) - (s + t) / PI.sqrt(),
                LossSpec::Energy { beta } => {
                    normal_abs_moment(d, v, *beta)
                        - 0.5
                            * (normal_abs_moment(0.0, 2.0 * s * s, *beta)
                                + normal_abs_moment(0.0, 2.0 * t * t, *beta))
                }
                LossSpec::DawidSebastiani => ds_divergence(m, s * s, mu, t * t),
                LossSpec::TwCrps(_) => return None,
            })
        }
        (Shape::Exponential, Shape::Exponential) if fd.loc == gd.loc => {
            let (a, b) = (fd.scale, gd.scale);
            Some(match spec {
                LossSpec::Log => (a / b).ln() + b / a - 1.0,
                LossSpec::Quadratic => 0.5 / a + 0.5 / b - 2.0 / (a + b),
                LossSpec::Crps => a / 2.0 + b / 2.0 - 2.0 * a * b / (a + b),
                _ => return None,
            })
        }
        _ => None,
    }
}

/// KL(G ‖ F) = E_G ln(g/f), +∞ when G puts mass where F has none.
pub fn kl_divergence(g: &dyn Law, f: &dyn Law) -> Result<f64> {
    if !covers(f, g) {
        return Ok(f64::INFINITY);
    }
    let h = |x: f64| {
        let lf = f.ln_pdf(x);
        let lg = g.ln_pdf(x);
        if lg == f64::NEG_INFINITY {
            0.0
        } else {
            lg - lf
        }
    };
    let v = expect_checked(g, h, &div_cfg(), "KL divergence")?;
    Ok(v.max(0.0))
}

fn union_cuts(f: &dyn Law, g: &dyn Law) -> Vec<f64> {
    let mut c = law_cuts(f);
    c.extend(law_cuts(g));
    for s in [f.support(), g.support()] {
        c.extend([s.lo, s.hi].into_iter().filter(|x| x.is_finite()));
    }
    c
}

fn l2_distance(f: &dyn Law, g: &dyn Law) -> Result<f64> {
    let (sf, sg) = (f.support(), g.support());
    if sf.is_discrete() || sg.is_discrete() {
        if sf.lattice != sg.lattice {
            return Err(Error::Unsupported("L² distance between a lattice law and another law".into()));
        }
        let sum = expect_checked(f, |x| f.pdf(x) - 2.0 * g.pdf(x), &div_cfg(), "Σ(p − q)²")?;
        return Ok(sum + density_sq_integral(g)?);
    }
    let h = |x: f64| {
        let d = f.pdf(x) - g.pdf(x);
        d * d
    };
    let spread = f.spread().max(g.spread());
    quad::integrate(&h, sf.lo.min(sg.lo), sf.hi.max(sg.hi), &union_cuts(f, g), spread, &div_cfg(), "L² distance")
}

/// ∫ f g.
fn overlap(f: &dyn Law, g: &dyn Law) -> Result<f64> {
    if f.support().is_discrete() || g.support().is_discrete() {
        return expect_checked(f, |x| g.pdf(x), &div_cfg(), "∫fg");
    }
    let (sf, sg) = (f.support(), g.support());
    let (lo, hi) = (sf.lo.max(sg.lo), sf.hi.min(sg.hi));
    if lo >= hi {
        return Ok(0.0);
    }
    let h = |x: f64| f.pdf(x) * g.pdf(x);
    let spread = f.spread().min(g.spread());
    quad::integrate(&h, lo, hi, &union_cuts(f, g), spread, &div_cfg(), "∫fg")
}

/// ∫ w(x)(F(x) − G(x))² dx (w ≡ 1 when `weight` is `None`).
pub fn cramer(f: &dyn Law, g: &dyn Law, weight: Option<&WeightFunction>) -> Result<f64> {
    let (sf, sg) = (f.support(), g.support());
    let (mut lo, mut hi) = (sf.lo.min(sg.lo), sf.hi.max(sg.hi));
    if let Some(w) = weight {
        let (a, b) = w.domain();
        lo = lo.max(a);
        hi = hi.min(b);
    }
    let h = |x: f64| {
        let (cf, cg) = (f.cdf(x), g.cdf(x));
        // Subtract survival functions in the upper half to keep precision.
        let d = if cf + cg < 1.0 { cf - cg } else { g.sf(x) - f.sf(x) };
        let wx = weight.map_or(1.0, |w| if d == 0.0 { 0.0 } else { w.w(x) });
        wx * d * d
    };
    let spread = f.spread().max(g.spread());
    quad::integrate(&h, lo, hi, &union_cuts(f, g), spread, &div_cfg(), "Cramér distance")
}

/// KL divergence between members of a one-parameter exponential family,
/// d(F, G) = KL(G ‖ F) = d_A(η_F, η_G).
pub fn expfam_kl(fam: &ExpFam, eta_f: f64, eta_g: f64) -> Result<f64> {
    fam.bregman(eta_f, eta_g)
}

/// Total-loss difference between two forecasters over a unit-scale task and
/// an upscaled one: [ℓ(F, G) + ℓ(H_σ, G_σ)] − [ℓ(H, G) + ℓ(F_σ, G_σ)].
/// The entropies cancel, so it is assembled from divergences.
pub fn specialization_difference(
    spec: &LossSpec,
    f: &Distribution,
    h: &Distribution,
    g: &Distribution,
    sigma: f64,
) -> Result<f64> {
    let (fs, hs, gs) = (f.scaled(sigma), h.scaled(sigma), g.scaled(sigma));
    Ok(divergence(spec, f, g)? + divergence(spec, &hs, &gs)?
        - divergence(spec, h, g)?
        - divergence(spec, &fs, &gs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{expfam_descriptor, make_family};

    fn exp(s: f64) -> Distribution {
        make_family("exponential", &[s]).unwrap()
    }

    #[test]
    fn exponential_crps_divergence_sixth() {
        // d(G_2, G) for the standard exponential: 1/2 + 1 − 4/3 = 1/6.
        let v = divergence(&LossSpec::Crps, &exp(2.0), &exp(1.0)).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        let q = cramer(&exp(2.0), &exp(1.0), None).unwrap();
        assert!((q - 1.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn closed_divergences_match_quadrature() {
        let pairs = [
            (make_family("normal", &[0.3, 1.4]).unwrap(), make_family("normal", &[-0.2, 0.8]).unwrap()),
            (exp(2.5), exp(0.7)),
        ];
        for (f, g) in &pairs {
            for spec in [LossSpec::Log, LossSpec::Quadratic, LossSpec::Spherical, LossSpec::Crps, LossSpec::Energy { beta: 1.5 }, LossSpec::DawidSebastiani] {
                let Some(c) = closed_divergence(&spec, f, g) else { continue };
                let q = match &spec {
                    LossSpec::Log => kl_divergence(g, f).unwrap(),
                    LossSpec::Quadratic => l2_distance(f, g).unwrap(),
                    LossSpec::Spherical => {
                        density_sq_integral(g).unwrap().sqrt()
                            - overlap(f, g).unwrap() / density_sq_integral(f).unwrap().sqrt()
                    }
                    LossSpec::Crps => cramer(f, g, None).unwrap(),
                    LossSpec::Energy { beta } => {
                        cross_moment(f, g, *beta).unwrap()
                            - 0.5 * (cross_moment(f, f, *beta).unwrap() + cross_moment(g, g, *beta).unwrap())
                    }
                    _ => ds_divergence(f.mean(), f.variance(), g.mean(), g.variance()),
                };
                assert!((c - q).abs() < 1e-8, "{} {:?}: {c} vs {q}", spec.tag(), f.shape);
            }
        }
    }

    #[test]
    fn divergence_is_loss_difference() {
        let f = make_family("gamma", &[2.0, 1.3]).unwrap();
        let g = make_family("gamma", &[3.0, 1.0]).unwrap();
        let ff: Forecast = f.clone().into();
        for spec in [LossSpec::Log, LossSpec::Quadratic, LossSpec::Crps] {
            let d = divergence(&spec, &f, &g).unwrap();
            let l = expected_loss(&spec, &ff, &g, Method::Quadrature).unwrap().value;
            let e = quadrature_self_loss(&spec, &g).unwrap();
            assert!((d - (l - e)).abs() < 1e-8, "{}: {d} vs {}", spec.tag(), l - e);
        }
    }

    #[test]
    fn expfam_bregman_is_kl() {
        let fam = expfam_descriptor("gamma-shape", &[1.0]).unwrap();
        let (ef, eg) = (1.5, 3.0);
        let b = expfam_kl(&fam, ef, eg).unwrap();
        let q = kl_divergence(&fam.member(eg).unwrap(), &fam.member(ef).unwrap()).unwrap();
        assert!((b - q).abs() < 1e-9, "{b} vs {q}");
    }

    #[test]
    fn kl_infinite_on_support_mismatch() {
        let f = make_family("uniform", &[0.0, 1.0]).unwrap();
        let g = make_family("normal", &[0.0, 1.0]).unwrap();
        assert_eq!(divergence(&LossSpec::Log, &f, &g).unwrap(), f64::INFINITY);
    }

    #[test]
    fn cauchy_kl_symmetric() {
        let c = |s| make_family("cauchy", &[0.0, s]).unwrap();
        let a = kl_divergence(&c(3.0), &c(1.0)).unwrap();
        let b = kl_divergence(&c(1.0), &c(3.0)).unwrap();
        let exact = (16.0f64 / 12.0).ln();
        assert!((a - exact).abs() < 1e-9 && (b - exact).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_brackets_closed_form() {
        let f: Forecast = make_family("normal", &[0.5, 1.2]).unwrap().into();
        let g = make_family("normal", &[0.0, 1.0]).unwrap();
        let c = expected_loss(&LossSpec::Crps, &f, &g, Method::ClosedForm).unwrap().value;
        let mc = expected_loss(&LossSpec::Crps, &f, &g, Method::MonteCarlo { draws: 20_000, seed: 7 }).unwrap();
        assert!((mc.value - c).abs() < 4.0 * mc.std_error.unwrap());
        let q = expected_loss(&LossSpec::Crps, &f, &g, Method::Quadrature).unwrap().value;
        assert!((q - c).abs() < 1e-9);
    }
}
