//! Pointwise losses ℓ(F, y).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::families::{cut_points, expect, Distribution, Law, Shape};
use crate::forecasts::{Ensemble, Forecast};
use crate::quad::{self, QuadConfig};
use crate::special::{hyp1f1, ln_gamma, normal_cdf, normal_pdf};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A weight w with a caller-supplied antiderivative v.
#[derive(Clone)]
pub struct TabulatedWeight {
    pub name: String,
    pub w: RealFn,
    pub v: RealFn,
    /// Outcome space on which w is a valid (nonnegative) weight.
    pub domain: (f64, f64),
}

impl fmt::Debug for TabulatedWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TabulatedWeight")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum WeightFunction {
    /// w(x) = x^α.
    Power { alpha: f64 },
    Tabulated(TabulatedWeight),
}

impl WeightFunction {
    pub fn power(alpha: f64) -> Self {
        WeightFunction::Power { alpha }
    }

    /// A tabulated weight, accepted only if v′ = w at 16 probe points
    /// (relative tolerance 1e−4) and w ≥ 0 there.
    pub fn tabulated(
        name: &str,
        w: impl Fn(f64) -> f64 + Send + Sync + 'static,
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: (f64, f64),
    ) -> Result<Self> {
        let tw = TabulatedWeight {
            name: name.to_string(),
            w: Arc::new(w),
            v: Arc::new(v),
            domain,
        };
        for x in probe_points(domain) {
            let wx = (tw.w)(x);
            if !(wx >= 0.0) {
                return Err(Error::InvalidWeight(format!("w({x}) = {wx} is negative")));
            }
            let h = 1e-5 * x.abs().max(1.0);
            let (a, b) = ((x - h).max(domain.0), (x + h).min(domain.1));
            let dv = ((tw.v)(b) - (tw.v)(a)) / (b - a);
            if (dv - wx).abs() > 1e-4 * wx.abs().max(1e-8) {
                return Err(Error::InvalidWeight(format!(
                    "v′({x}) ≈ {dv} does not match w({x}) = {wx}"
                )));
            }
        }
        Ok(WeightFunction::Tabulated(tw))
    }

    /// Outcome space on which the weight is nonnegative.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            WeightFunction::Power { alpha } => {
                if power_on_real_line(*alpha) {
                    (f64::NEG_INFINITY, f64::INFINITY)
                } else {
                    (0.0, f64::INFINITY)
                }
            }
            WeightFunction::Tabulated(t) => t.domain,
        }
    }

    pub fn w(&self, x: f64) -> f64 {
        match self {
            WeightFunction::Power { alpha } => {
                if *alpha == 0.0 {
                    1.0
                } else {
                    x.powf(*alpha)
                }
            }
            WeightFunction::Tabulated(t) => (t.w)(x),
        }
    }

    /// Antiderivative v with v′ = w.
    pub fn v(&self, x: f64) -> f64 {
        match self {
            WeightFunction::Power { alpha } => {
                if *alpha == -1.0 {
                    x.ln()
                } else if *alpha == 0.0 {
                    x
                } else {
                    let p = alpha + 1.0;
                    // Odd powers keep their sign on the negative half-line.
                    x.abs().powf(p).copysign(x) / p
                }
            }
            WeightFunction::Tabulated(t) => (t.v)(x),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, WeightFunction::Power { alpha } if *alpha == 0.0)
    }

    fn tag(&self) -> String {
        match self {
            WeightFunction::Power { alpha } => format!("power({alpha})"),
            WeightFunction::Tabulated(t) => t.name.clone(),
        }
    }
}

/// x^α is a weight on all of ℝ only for even nonnegative integers α.
fn power_on_real_line(alpha: f64) -> bool {
    alpha >= 0.0 && alpha.fract() == 0.0 && (alpha as i64) % 2 == 0
}

fn probe_points(domain: (f64, f64)) -> Vec<f64> {
    let (a, b) = domain;
    match (a.is_finite(), b.is_finite()) {
        (true, true) => (0..16).map(|i| a + (b - a) * (i as f64 + 0.5) / 16.0).collect(),
        (true, false) => (0..16).map(|i| a + 0.05 * 1.5f64.powi(i)).collect(),
        (false, true) => (0..16).map(|i| b - 0.05 * 1.5f64.powi(i)).collect(),
        (false, false) => (0..8)
            .flat_map(|i| {
                let x = 0.2 * 1.6f64.powi(i);
                [x, -x]
            })
            .collect(),
    }
}

/// Which loss to evaluate.
#[derive(Debug, Clone)]
pub enum LossSpec {
    Log,
    Quadratic,
    Spherical,
    Crps,
    TwCrps(WeightFunction),
    Energy { beta: f64 },
    DawidSebastiani,
}

impl LossSpec {
    pub fn energy(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 2.0) {
            return Err(Error::BetaOutOfRange(beta));
        }
        Ok(LossSpec::Energy { beta })
    }

    pub fn tag(&self) -> String {
        match self {
            LossSpec::Log => "log".into(),
            LossSpec::Quadratic => "quadratic".into(),
            LossSpec::Spherical => "spherical".into(),
            LossSpec::Crps => "crps".into(),
            LossSpec::TwCrps(w) => format!("twcrps-{}", w.tag()),
            LossSpec::Energy { beta } => format!("energy({beta})"),
            LossSpec::DawidSebastiani => "ds".into(),
        }
    }

    /// Parses `log`, `quadratic`, `spherical`, `crps`, `ds`, `energy:β`,
    /// `twcrps:α` (power weight).
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        let (head, arg) = t.split_once(':').unwrap_or((t.as_str(), ""));
        let num = |what: &str| -> Result<f64> {
            arg.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("`{text}` needs a numeric {what}")))
        };
        Ok(match head {
            "log" | "logarithmic" => LossSpec::Log,
            "quadratic" | "brier" => LossSpec::Quadratic,
            "spherical" => LossSpec::Spherical,
            "crps" | "crp" => LossSpec::Crps,
            "ds" | "dawid-sebastiani" => LossSpec::DawidSebastiani,
            "energy" => LossSpec::energy(if arg.is_empty() { 1.0 } else { num("beta")? })?,
            "twcrps" | "tw-crps" => LossSpec::TwCrps(WeightFunction::power(num("alpha")?)),
            _ => return Err(Error::InvalidArgument(format!("unknown loss `{text}`"))),
        })
    }

    /// True for losses that only need the forecast CDF or samples.
    pub fn needs_first_moment(&self) -> bool {
        matches!(self, LossSpec::Crps | LossSpec::TwCrps(_) | LossSpec::Energy { .. })
    }
}

pub(crate) fn score_cfg() -> QuadConfig {
    QuadConfig::with_tol(1e-11, 1e-11)
}

/// ℓ(F, y). Log loss is +∞ where the forecast density vanishes.
pub fn score(spec: &LossSpec, f: &Forecast, y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::InvalidArgument(format!("outcome {y} is not finite")));
    }
    if let Forecast::Ensemble(e) = f {
        return score_ensemble(spec, e, y);
    }
    let law = f.law().expect("non-ensemble forecasts are laws");
    score_law(spec, law, y)
}

/// ℓ(F, y) for a univariate law.
pub fn score_law(spec: &LossSpec, law: &dyn Law, y: f64) -> Result<f64> {
    match spec {
        LossSpec::Log => Ok(-law.ln_pdf(y)),
        LossSpec::Quadratic => Ok(-2.0 * law.pdf(y) + density_sq_integral(law)?),
        LossSpec::Spherical => Ok(-law.pdf(y) / density_sq_integral(law)?.sqrt()),
        LossSpec::Crps => {
            require_first_moment(law)?;
            if let Some(v) = crps_closed_form(law, y) {
                return Ok(v);
            }
            crps_integral(law, y)
        }
        LossSpec::TwCrps(w) => twcrps_score(law, y, w),
        LossSpec::Energy { beta } => {
            check_beta(*beta)?;
            require_first_moment(law)?;
            if *beta == 1.0 {
                return score_law(&LossSpec::Crps, law, y);
            }
            Ok(abs_moment(law, y, *beta)? - 0.5 * pair_moment(law, *beta)?)
        }
        LossSpec::DawidSebastiani => {
            let (m, v) = (law.mean(), law.variance());
            if !m.is_finite() || !v.is_finite() {
                return Err(Error::InfiniteMoments);
            }
            Ok(v.ln() + (y - m) * (y - m) / v)
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 2.0 {
        Ok(())
    } else {
        Err(Error::BetaOutOfRange(beta))
    }
}

pub(crate) fn require_first_moment(law: &dyn Law) -> Result<()> {
    if law.has_first_moment() {
        Ok(())
    } else {
        Err(Error::MomentRequired)
    }
}

fn score_ensemble(spec: &LossSpec, e: &Ensemble, y: f64) -> Result<f64> {
    if e.dim() != 1 {
        return match spec {
            LossSpec::Energy { beta } => energy_score(e, &[y], *beta),
            _ => Err(Error::DimensionMismatch {
                expected: 1,
                found: e.dim(),
            }),
        };
    }
    match spec {
        LossSpec::Log | LossSpec::Quadratic | LossSpec::Spherical => {
            Err(Error::MissingCapability("density"))
        }
        LossSpec::Crps => Ok(ensemble_crps(e, y, |x| x)),
        LossSpec::TwCrps(w) => {
            let (lo, hi) = w.domain();
            if e.members().iter().any(|m| m[0] < lo || m[0] > hi) || y < lo || y > hi {
                return Err(weight_domain_error(w));
            }
            Ok(ensemble_crps(e, y, |x| w.v(x)))
        }
        LossSpec::Energy { beta } => energy_score(e, &[y], *beta),
        LossSpec::DawidSebastiani => {
            let (m, v) = (e.mean(), e.variance());
            if v <= 0.0 {
                return Err(Error::ZeroVariance);
            }
            Ok(v.ln() + (y - m) * (y - m) / v)
        }
    }
}

fn weight_domain_error(w: &WeightFunction) -> Error {
    match w {
        WeightFunction::Power { alpha } => Error::NegativeSupportPowerWeight(*alpha),
        WeightFunction::Tabulated(t) => {
            Error::InvalidWeight(format!("values outside the domain of `{}`", t.name))
        }
    }
}

/// E|v(X) − v(y)| − ½E|v(X) − v(X′)| over the weighted empirical measure,
/// all ordered pairs including i = j, in O(n log n).
fn ensemble_crps(e: &Ensemble, y: f64, v: impl Fn(f64) -> f64) -> f64 {
    let vy = v(y);
    let mut pts: Vec<(f64, f64)> = e
        .members()
        .iter()
        .zip(e.weights())
        .map(|(m, &w)| (v(m[0]), w))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let to_y: f64 = pts.iter().map(|(x, w)| w * (x - vy).abs()).sum();
    let (mut wsum, mut xsum, mut pair) = (0.0, 0.0, 0.0);
    for &(x, w) in &pts {
        pair += w * (x * wsum - xsum);
        wsum += w;
        xsum += w * x;
    }
    // `pair` counts each unordered pair once; E|X − X′| counts both orders.
    to_y - pair
}

/// Energy score of a (multivariate) ensemble: mean ‖Xᵢ − y‖^β minus half the
/// weighted mean of ‖Xᵢ − Xⱼ‖^β over all ordered pairs including i = j.
pub fn energy_score(e: &Ensemble, y: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if y.len() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            found: y.len(),
        });
    }
    if e.dim() == 1 && beta == 1.0 {
        return Ok(ensemble_crps(e, y[0], |x| x));
    }
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
            .powf(beta)
    };
    let (m, w) = (e.members(), e.weights());
    let to_y: f64 = m.iter().zip(w).map(|(x, wi)| wi * dist(x, y)).sum();
    let mut pair = 0.0;
    for i in 0..m.len() {
        for j in (i + 1)..m.len() {
            pair += 2.0 * w[i] * w[j] * dist(&m[i], &m[j]);
        }
    }
    Ok(to_y - 0.5 * pair)
}

/// CRPS in closed form for the normal, exponential, Laplace and uniform
/// families.
pub fn crps_closed_form(law: &dyn Law, y: f64) -> Option<f64> {
    let d = as_distribution(law)?;
    let z = (y - d.loc) / d.scale;
    let s = d.scale;
    Some(match d.shape {
        Shape::Normal => {
            s * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - 1.0 / PI.sqrt())
        }
        Shape::Exponential => {
            if z < 0.0 {
                s * (0.5 - z)
            } else {
                s * (z + 2.0 * (-z).exp() - 1.5)
            }
        }
        Shape::Laplace => s * (z.abs() + (-z.abs()).exp() - 0.75),
        Shape::Uniform => {
            if z < 0.0 {
                s * (1.0 / 3.0 - z)
            } else if z > 1.0 {
                s * (z - 2.0 / 3.0)
            } else {
                s * (z * z - z + 1.0 / 3.0)
            }
        }
        _ => return None,
    })
}

pub(crate) fn as_distribution(law: &dyn Law) -> Option<Distribution> {
    law.as_parametric().cloned()
}

/// Points at which integrals over the real line involving `law` are split:
/// kinks, the bulk centre and, for lattice laws, the atoms.
pub(crate) fn law_cuts(law: &dyn Law) -> Vec<f64> {
    let mut pts = cut_points(law);
    if let Some((origin, step)) = law.support().lattice {
        let mut n = 0usize;
        loop {
            let x = origin + step * n as f64;
            pts.push(x);
            n += 1;
            if law.sf(x) < 1e-17 || n > 10_000 {
                break;
            }
        }
    }
    pts
}

/// ∫ w(x)·(F(x) − 𝟙{y ≤ x})² dx over `domain`, split at y.
pub(crate) fn cdf_sq_integral(
    law: &dyn Law,
    y: f64,
    w: &dyn Fn(f64) -> f64,
    domain: (f64, f64),
    cfg: &QuadConfig,
) -> Result<f64> {
    let sup = law.support();
    let lo = domain.0.max(sup.lo.min(y));
    let hi = domain.1.min(sup.hi.max(y));
    if lo >= hi {
        return Ok(0.0);
    }
    let g = |x: f64| {
        let r = if x < y { law.cdf(x) } else { law.sf(x) };
        if r == 0.0 {
            0.0
        } else {
            w(x) * r * r
        }
    };
    let mut cuts = law_cuts(law);
    cuts.push(y);
    quad::integrate(&g, lo, hi, &cuts, law.spread(), cfg, "CRPS integral")
}

/// CRPS by quadrature on its definition ∫(F(x) − 𝟙{y ≤ x})² dx.
pub fn crps_integral(law: &dyn Law, y: f64) -> Result<f64> {
    require_first_moment(law)?;
    cdf_sq_integral(
        law,
        y,
        &|_| 1.0,
        (f64::NEG_INFINITY, f64::INFINITY),
        &score_cfg(),
    )
}

/// Threshold-weighted CRPS ∫ w(x)(F(x) − 𝟙{y ≤ x})² dx by quadrature.
pub fn twcrps_score(law: &dyn Law, y: f64, w: &WeightFunction) -> Result<f64> {
    require_first_moment(law)?;
    let (lo, hi) = w.domain();
    let sup = law.support();
    if sup.lo < lo || sup.hi > hi {
        return Err(weight_domain_error(w));
    }
    if w.is_unit() {
        return score_law(&LossSpec::Crps, law, y);
    }
    let wf = |x: f64| w.w(x);
    match cdf_sq_integral(law, y, &wf, (lo, hi), &score_cfg()) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) | Err(Error::NonConvergence { .. }) | Err(Error::NonIntegrable(_)) => {
            Err(Error::NonIntegrableWeight)
        }
        Err(e) => Err(e),
    }
}

/// ∫ f(x)² dx (Σ p² on a lattice), closed form for common families.
pub fn density_sq_integral(law: &dyn Law) -> Result<f64> {
    if let Some(d) = as_distribution(law) {
        let s = d.scale;
        match d.shape {
            Shape::Normal => return Ok(1.0 / (2.0 * s * PI.sqrt())),
            Shape::Exponential => return Ok(0.5 / s),
            Shape::Laplace => return Ok(0.25 / s),
            Shape::Uniform => return Ok(1.0 / s),
            Shape::AsymmetricLaplace { p } => return Ok(0.5 * p * (1.0 - p) / s),
            Shape::Gamma { k } if k > 0.5 => {
                return Ok((ln_gamma(2.0 * k - 1.0) - 2.0 * ln_gamma(k) - (2.0 * k - 1.0) * 2f64.ln())
                    .exp()
                    / s)
            }
            _ => {}
        }
    }
    let v = crate::families::expect_checked(law, |x| law.pdf(x), &QuadConfig::default(), "∫f²")?;
    if !v.is_finite() {
        return Err(Error::NonIntegrable("density is not square integrable"));
    }
    Ok(v)
}

fn nested_cfg() -> QuadConfig {
    QuadConfig::with_tol(1e-12, 1e-10)
}

/// E|X − y|^β by quadrature (closed form for the normal).
pub fn abs_moment(law: &dyn Law, y: f64, beta: f64) -> Result<f64> {
    if let Some(d) = as_distribution(law) {
        if d.shape == Shape::Normal {
            let s = d.scale;
            let z = (y - d.loc) / s;
            return Ok(s.powf(beta) * 2f64.powf(beta / 2.0) * (ln_gamma((beta + 1.0) / 2.0)).exp()
                / PI.sqrt()
                * hyp1f1(-beta / 2.0, 0.5, -0.5 * z * z));
        }
    }
    abs_moment_quad(law, y, beta, &nested_cfg())
}

fn abs_moment_quad(law: &dyn Law, y: f64, beta: f64, cfg: &QuadConfig) -> Result<f64> {
    if let Some((origin, step)) = law.support().lattice {
        let _ = (origin, step);
        return Ok(expect(law, |x| (x - y).abs().powf(beta), cfg).value);
    }
    if beta == 1.0 {
        // E|X − y| = ∫_{−∞}^y F + ∫_y^∞ S.
        let sup = law.support();
        let lo = sup.lo.min(y);
        let hi = sup.hi.max(y);
        let g = |x: f64| if x < y { law.cdf(x) } else { law.sf(x) };
        let mut cuts = law_cuts(law);
        cuts.push(y);
        return quad::integrate(&g, lo, hi, &cuts, law.spread(), cfg, "E|X − y|");
    }
    let sup = law.support();
    let g = |x: f64| {
        let p = law.pdf(x);
        if p == 0.0 {
            0.0
        } else {
            (x - y).abs().powf(beta) * p
        }
    };
    let mut cuts = law_cuts(law);
    cuts.push(y);
    quad::integrate(&g, sup.lo, sup.hi, &cuts, law.spread(), cfg, "E|X − y|^β")
}

/// E|X − X′|^β for independent X, X′ ~ F.
pub fn pair_moment(law: &dyn Law, beta: f64) -> Result<f64> {
    if let Some(d) = as_distribution(law) {
        if d.shape == Shape::Normal {
            let s = d.scale;
            return Ok(
                2f64.powf(beta) * s.powf(beta) * ln_gamma((beta + 1.0) / 2.0).exp() / PI.sqrt()
            );
        }
    }
    if beta == 1.0 && !law.support().is_discrete() {
        // E|X − X′| = 2∫ F(1 − F).
        let sup = law.support();
        let g = |x: f64| 2.0 * law.cdf(x) * law.sf(x);
        return quad::integrate(
            &g,
            sup.lo,
            sup.hi,
            &law_cuts(law),
            law.spread(),
            &nested_cfg(),
            "E|X − X′|",
        );
    }
    cross_moment(law, law, beta)
}

/// E|X − Y|^β for independent X ~ F, Y ~ G, by nested quadrature.
pub fn cross_moment(f: &dyn Law, g: &dyn Law, beta: f64) -> Result<f64> {
    let inner_cfg = QuadConfig::with_tol(1e-13, 1e-11);
    let outer_cfg = nested_cfg();
    let failed = std::cell::Cell::new(None);
    let inner = |y: f64| match abs_moment_quad(f, y, beta, &inner_cfg) {
        Ok(v) => v,
        Err(e) => {
            failed.set(Some(e));
            0.0
        }
    };
    let v = crate::families::expect_checked(g, inner, &outer_cfg, "E|X − Y|^β")?;
    if let Some(e) = failed.take() {
        return Err(e);
    }
    Ok(v)
}

/// CRPS in both of its forms: the integral of the squared CDF difference, and
/// E|X − y| − ½E|X − X′| with both expectations taken by (nested)
/// quadrature against the density.
pub fn crps_both_forms(law: &dyn Law, y: f64) -> Result<(f64, f64)> {
    require_first_moment(law)?;
    let integral = crps_integral(law, y)?;
    let cfg = nested_cfg();
    let to_y = expect(law, |x| (x - y).abs(), &cfg).value;
    let inner_cfg = QuadConfig::with_tol(1e-13, 1e-11);
    let pair = expect(law, |x| expect(law, |u| (u - x).abs(), &inner_cfg).value, &cfg).value;
    Ok((integral, to_y - 0.5 * pair))
}

/// TW-CRPS in expectation form E|v(X) − v(y)| − ½E|v(X) − v(X′)|, by
/// nested quadrature.
pub fn twcrps_expectation_form(law: &dyn Law, y: f64, w: &WeightFunction) -> Result<f64> {
    require_first_moment(law)?;
    let cfg = nested_cfg();
    let inner_cfg = QuadConfig::with_tol(1e-13, 1e-11);
    let vy = w.v(y);
    let to_y = expect(law, |x| (w.v(x) - vy).abs(), &cfg).value;
    let pair = expect(
        law,
        |x| {
            let vx = w.v(x);
            expect(law, |u| (w.v(u) - vx).abs(), &inner_cfg).value
        },
        &cfg,
    )
    .value;
    Ok(to_y - 0.5 * pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::make_family;

    fn normal() -> Forecast {
        make_family("normal", &[0.0, 1.0]).unwrap().into()
    }

    #[test]
    fn log_loss_standard_normal() {
        let v = score(&LossSpec::Log, &normal(), 0.0).unwrap();
        assert!((v - 0.5 * (2.0 * PI).ln()).abs() < 1e-14);
    }

    #[test]
    fn log_loss_infinite_off_support() {
        let e: Forecast = make_family("exponential", &[1.0]).unwrap().into();
        assert_eq!(score(&LossSpec::Log, &e, -1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn crps_standard_normal_at_zero() {
        let v = score(&LossSpec::Crps, &normal(), 0.0).unwrap();
        assert!((v - (2.0 * normal_pdf(0.0) - 1.0 / PI.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn quadratic_standard_normal() {
        let v = score(&LossSpec::Quadratic, &normal(), 0.0).unwrap();
        assert!((v - (-2.0 * normal_pdf(0.0) + 0.5 / PI.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn ds_is_zero_at_standard_moments() {
        assert_eq!(score(&LossSpec::DawidSebastiani, &normal(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn ensemble_pair_convention() {
        let e: Forecast = Ensemble::univariate(&[-1.0, 1.0]).unwrap().into();
        assert!((score(&LossSpec::Crps, &e, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let single = Ensemble::univariate(&[2.5]).unwrap();
        assert_eq!(energy_score(&single, &[2.5], 0.7).unwrap(), 0.0);
    }

    #[test]
    fn energy_beta_one_is_ensemble_crps() {
        let xs = [0.3, -1.2, 2.2, 0.9, 0.0, 4.1];
        let e = Ensemble::univariate(&xs).unwrap();
        let fast = ensemble_crps(&e, 0.4, |x| x);
        // brute force over all n² ordered pairs
        let n = xs.len() as f64;
        let to_y: f64 = xs.iter().map(|x| (x - 0.4f64).abs()).sum::<f64>() / n;
        let pair: f64 = xs
            .iter()
            .flat_map(|a| xs.iter().map(move |b| (a - b).abs()))
            .sum::<f64>()
            / (n * n);
        assert!((fast - (to_y - 0.5 * pair)).abs() < 1e-14);
        let general = {
            let m: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
            let w = vec![1.0 / n; xs.len()];
            let e2 = Ensemble::weighted(m, w).unwrap();
            // force the O(n²) path with β slightly off 1, then compare limits
            energy_score(&e2, &[0.4], 1.0 - 1e-12).unwrap()
        };
        assert!((general - fast).abs() < 1e-9);
    }

    #[test]
    fn energy_rejects_bad_beta() {
        let e = Ensemble::univariate(&[0.0, 1.0]).unwrap();
        assert!(matches!(energy_score(&e, &[0.0], 2.0), Err(Error::BetaOutOfRange(_))));
        assert!(matches!(energy_score(&e, &[0.0, 1.0], 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn cauchy_rejected_by_crps() {
        let c: Forecast = make_family("cauchy", &[0.0, 1.0]).unwrap().into();
        assert!(matches!(score(&LossSpec::Crps, &c, 0.0), Err(Error::MomentRequired)));
    }

    #[test]
    fn ensembles_lack_densities() {
        let e: Forecast = Ensemble::univariate(&[0.0, 1.0]).unwrap().into();
        assert!(matches!(score(&LossSpec::Log, &e, 0.0), Err(Error::MissingCapability(_))));
    }

    #[test]
    fn tabulated_weight_checks_antiderivative() {
        let ok = WeightFunction::tabulated("exp", |x: f64| x.exp(), |x: f64| x.exp(), (f64::NEG_INFINITY, f64::INFINITY));
        assert!(ok.is_ok());
        let bad = WeightFunction::tabulated("bad", |x: f64| x.exp(), |x: f64| x, (f64::NEG_INFINITY, f64::INFINITY));
        assert!(matches!(bad, Err(Error::InvalidWeight(_))));
    }

    #[test]
    fn power_weight_domains() {
        assert_eq!(WeightFunction::power(2.0).domain().0, f64::NEG_INFINITY);
        assert_eq!(WeightFunction::power(1.0).domain().0, 0.0);
        assert_eq!(WeightFunction::power(-0.5).domain().0, 0.0);
        let n = make_family("normal", &[0.0, 1.0]).unwrap();
        assert!(matches!(
            twcrps_score(&n, 0.0, &WeightFunction::power(1.0)),
            Err(Error::NegativeSupportPowerWeight(_))
        ));
    }

    #[test]
    fn parse_loss_tags() {
        assert!(matches!(LossSpec::parse("crps").unwrap(), LossSpec::Crps));
        assert!(matches!(LossSpec::parse("energy:1.5").unwrap(), LossSpec::Energy { beta } if beta == 1.5));
        assert!(LossSpec::parse("energy:2").is_err());
        assert!(LossSpec::parse("zzz").is_err());
    }

    #[test]
    fn closed_forms_match_integral() {
        for (fam, params) in [
            ("normal", vec![0.3, 1.7]),
            ("exponential", vec![2.0]),
            ("laplace", vec![-0.5, 0.8]),
            ("uniform", vec![-1.0, 2.0]),
        ] {
            let d = make_family(fam, &params).unwrap();
            for &y in &[-3.0, -0.2, 0.0, 0.6, 2.5] {
                let a = crps_closed_form(&d, y).unwrap();
                let b = crps_integral(&d, y).unwrap();
                assert!((a - b).abs() < 1e-9, "{fam} y={y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn crps_forms_agree_on_gamma() {
        let g = make_family("gamma", &[3.0, 1.5]).unwrap();
        let (a, b) = crps_both_forms(&g, 2.0).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn twcrps_power_one_exponential() {
        let e = make_family("exponential", &[1.0]).unwrap();
        let w = WeightFunction::power(1.0);
        let a = twcrps_score(&e, 0.0, &w).unwrap();
        let b = twcrps_expectation_form(&e, 0.0, &w).unwrap();
        assert!(a > 0.0 && a.is_finite());
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn twcrps_singular_weight_at_outcome() {
        let e = make_family("exponential", &[1.0]).unwrap();
        let r = twcrps_score(&e, 0.0, &WeightFunction::power(-2.0));
        assert!(matches!(r, Err(Error::NonIntegrableWeight)));
    }

    #[test]
    fn normal_energy_closed_form_matches_quadrature() {
        let d = make_family("normal", &[0.5, 1.3]).unwrap();
        for &beta in &[0.4, 1.5] {
            let a = abs_moment(&d, 1.1, beta).unwrap();
            let b = abs_moment_quad(&d, 1.1, beta, &nested_cfg()).unwrap();
            assert!((a - b).abs() < 1e-9);
            let p = pair_moment(&d, beta).unwrap();
            let q = cross_moment(&d, &d, beta).unwrap();
            assert!((p - q).abs() < 1e-8, "{p} vs {q}");
        }
    }
}
