//! Numerical verdicts on whether a loss penalizes over- or under-shooting of a
//! parameter more heavily.

use std::fmt;

use rayon::prelude::*;

use crate::divergence::{divergence, self_loss};
use crate::error::{Error, Result};
use crate::families::{
    make_family, Distribution, ExpFam, Law, LocationFamily, Omega, ParamMap, ScaleFamily, Shape,
};
use crate::scoring::{LossSpec, WeightFunction};
use crate::special::{lambert_w, Branch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// ℓ(G_σ, G) > ℓ(G_{1/σ}, G): the upward move costs more.
    OverPenalized,
    UnderPenalized,
    Symmetric,
}

impl Comparison {
    pub fn as_str(&self) -> &'static str {
        match self {
            Comparison::OverPenalized => "over_penalized",
            Comparison::UnderPenalized => "under_penalized",
            Comparison::Symmetric => "symmetric",
        }
    }

    pub fn flipped(&self) -> Self {
        match self {
            Comparison::OverPenalized => Comparison::UnderPenalized,
            Comparison::UnderPenalized => Comparison::OverPenalized,
            Comparison::Symmetric => Comparison::Symmetric,
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

impl Monotonicity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Monotonicity::Increasing => "increasing",
            Monotonicity::Decreasing => "decreasing",
            Monotonicity::Constant => "constant",
            Monotonicity::Mixed => "mixed",
        }
    }
}

/// Classifies a sampled sequence by the signs of its consecutive differences;
/// differences below 1e−10 (relative to the values) count as ties.
pub fn classify_monotone(values: &[f64]) -> Monotonicity {
    let (mut up, mut down) = (0, 0);
    for w in values.windows(2) {
        let d = w[1] - w[0];
        let tie = 1e-10 * w[0].abs().max(w[1].abs()).max(1.0);
        if d > tie {
            up += 1;
        } else if d < -tie {
            down += 1;
        }
    }
    match (up, down) {
        (0, 0) => Monotonicity::Constant,
        (_, 0) => Monotonicity::Increasing,
        (0, _) => Monotonicity::Decreasing,
        _ => Monotonicity::Mixed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryVerdict {
    pub comparison: Comparison,
    /// Loss of the upward move (σ, μ or θη).
    pub lhs: f64,
    /// Loss of the mirrored move (1/σ, −μ or η/θ).
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    /// Set when log loss was asked about a base density that is not symmetric.
    pub asymmetric_base: bool,
    /// Grid class of u³A″(u) (or A″(η+u) − A″(η−u)) for exponential families.
    pub monotonicity: Option<Monotonicity>,
}

impl AsymmetryVerdict {
    /// `diff` is lhs − rhs computed without the shared entropy term, which
    /// keeps its precision when lhs and rhs are large.
    fn new(lhs: f64, rhs: f64, diff: f64) -> Self {
        let tolerance = 1e-6 * lhs.abs().max(rhs.abs()).max(1e-12);
        let margin = diff.abs();
        let comparison = if margin <= tolerance {
            Comparison::Symmetric
        } else if diff > 0.0 {
            Comparison::OverPenalized
        } else {
            Comparison::UnderPenalized
        };
        AsymmetryVerdict {
            comparison,
            lhs,
            rhs,
            margin,
            tolerance,
            asymmetric_base: false,
            monotonicity: None,
        }
    }
}

/// h(σ) = σ^γ with d(F_σ, G_σ) = h(σ)·d(F, G).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFunction {
    pub exponent: f64,
}

impl ScalingFunction {
    pub fn h(&self, sigma: f64) -> f64 {
        sigma.powf(self.exponent)
    }
}

pub fn scaling_exponent(spec: &LossSpec) -> Result<ScalingFunction> {
    let exponent = match spec {
        LossSpec::Crps => 1.0,
        LossSpec::Energy { beta } => *beta,
        LossSpec::Quadratic => -1.0,
        LossSpec::Log | LossSpec::DawidSebastiani => 0.0,
        LossSpec::TwCrps(WeightFunction::Power { alpha }) => alpha + 1.0,
        LossSpec::TwCrps(WeightFunction::Tabulated(t)) => {
            return Err(Error::NotRescalable(format!("tabulated weight `{}`", t.name)))
        }
        LossSpec::Spherical => return Err(Error::NotRescalable("spherical".into())),
    };
    Ok(ScalingFunction { exponent })
}

/// Least-squares slope of ln[d(F_σ, G_σ)/d(F, G)] against ln σ over
/// σ ∈ {0.5, 1, 2, 4}. Uses a normal pair, or an exponential pair for weights
/// confined to the positive half-line.
pub fn measured_scaling_exponent(spec: &LossSpec) -> Result<f64> {
    let on_half_line = matches!(spec, LossSpec::TwCrps(w) if w.domain().0 > f64::NEG_INFINITY);
    let (f, g) = if on_half_line {
        (make_family("exponential", &[1.5])?, make_family("exponential", &[1.0])?)
    } else {
        (make_family("normal", &[0.4, 1.3])?, make_family("normal", &[0.0, 1.0])?)
    };
    let base = divergence(spec, &f, &g)?;
    let sigmas = [0.5, 1.0, 2.0, 4.0];
    let mut pts = Vec::with_capacity(sigmas.len());
    for &s in &sigmas {
        let d = divergence(spec, &f.scaled(s), &g.scaled(s))?;
        pts.push((s.ln(), (d / base).ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

fn pair_verdict(spec: &LossSpec, up: &Distribution, down: &Distribution, truth: &Distribution) -> Result<AsymmetryVerdict> {
    let du = divergence(spec, up, truth)?;
    let dd = divergence(spec, down, truth)?;
    let entropy = self_loss(spec, truth)?;
    // Both infinite (e.g. KL under support mismatch) counts as a tie.
    let diff = if du == dd { 0.0 } else { du - dd };
    if entropy.is_infinite() {
        // ℓ(G, G) = ∞ (power weights with α ≤ −2 at a support edge): the
        // expected losses are both infinite and the divergences carry the
        // comparison.
        return Ok(AsymmetryVerdict::new(du, dd, diff));
    }
    Ok(AsymmetryVerdict::new(entropy + du, entropy + dd, diff))
}

/// Compares ℓ(G_σ, G) with ℓ(G_{1/σ}, G).
pub fn scale_verdict(spec: &LossSpec, fam: &ScaleFamily, sigma: f64) -> Result<AsymmetryVerdict> {
    if !(sigma > 1.0) || !sigma.is_finite() {
        return Err(Error::Domain {
            name: "sigma",
            value: sigma,
            domain: "> 1",
        });
    }
    pair_verdict(spec, &fam.member(sigma), &fam.member(1.0 / sigma), &fam.base)
}

/// True when g(c + y) ≈ g(c − y) around the base's centre at 32 probes.
fn looks_symmetric(d: &Distribution) -> bool {
    let c = d.symmetry_center().unwrap_or_else(|| d.center());
    (1..=32).all(|i| {
        let y = d.spread() * 0.15 * i as f64;
        let (a, b) = (d.pdf(c + y), d.pdf(c - y));
        (a - b).abs() <= 1e-9 * a.max(b).max(1e-300)
    })
}

/// Compares ℓ(G_μ, G) with ℓ(G_{−μ}, G). For log loss the base density must
/// be symmetric; when it is not, the verdict is still returned with
/// `asymmetric_base` set.
pub fn location_verdict(spec: &LossSpec, fam: &LocationFamily, mu: f64) -> Result<AsymmetryVerdict> {
    if !mu.is_finite() {
        return Err(Error::Domain {
            name: "mu",
            value: mu,
            domain: "finite",
        });
    }
    let mut v = pair_verdict(spec, &fam.member(mu), &fam.member(-mu), &fam.base)?;
    if matches!(spec, LossSpec::Log) && !looks_symmetric(&fam.base) {
        v.asymmetric_base = true;
    }
    Ok(v)
}

/// Compares d_A(θη, η) with d_A(η/θ, η) on Ω = (0, ∞), or d_A(η + θ, η) with
/// d_A(η − θ, η) on Ω = ℝ; these are the log-loss penalties for moving the
/// natural parameter up or down.
pub fn expfam_verdict(fam: &ExpFam, eta: f64, theta: f64) -> Result<AsymmetryVerdict> {
    let (up, down) = match fam.omega() {
        Omega::Positive => {
            if !(theta > 1.0) {
                return Err(Error::Domain {
                    name: "theta",
                    value: theta,
                    domain: "> 1",
                });
            }
            (theta * eta, eta / theta)
        }
        Omega::Real => {
            if !(theta > 0.0) {
                return Err(Error::Domain {
                    name: "theta",
                    value: theta,
                    domain: "> 0",
                });
            }
            (eta + theta, eta - theta)
        }
    };
    for e in [eta, up, down] {
        if !fam.omega().contains(e) || !e.is_finite() {
            return Err(Error::OutsideOmega(e));
        }
    }
    let lhs = fam.bregman(up, eta)?;
    let rhs = fam.bregman(down, eta)?;
    let mut v = AsymmetryVerdict::new(lhs, rhs, lhs - rhs);
    v.monotonicity = Some(acceleration_class(fam, eta, theta));
    Ok(v)
}

/// Grid class of u³A″(u) over [η/(2θ), 2θη] (Ω = (0, ∞)) or of
/// A″(η + u) − A″(η − u) over u ∈ [0, θ] (Ω = ℝ), on 64 points.
pub fn acceleration_class(fam: &ExpFam, eta: f64, theta: f64) -> Monotonicity {
    let values: Vec<f64> = match fam.omega() {
        Omega::Positive => {
            let (lo, hi) = ((eta / (2.0 * theta)).ln(), (2.0 * theta * eta).ln());
            (0..64)
                .map(|i| {
                    let u = (lo + (hi - lo) * i as f64 / 63.0).exp();
                    u * u * u * fam.d2_a(u)
                })
                .collect()
        }
        Omega::Real => (0..64)
            .map(|i| {
                let u = theta * i as f64 / 63.0;
                fam.d2_a(eta + u) - fam.d2_a(eta - u)
            })
            .collect(),
    };
    classify_monotone(&values)
}

/// Verdict in the family's conventional parameter: compares the member at
/// θ·param (λθ for rates) with the one at param/θ, translating through the
/// natural-parameter map so callers never invert η = σ^{−γ} by hand.
pub fn expfam_param_verdict(fam: &ExpFam, param: f64, theta: f64) -> Result<AsymmetryVerdict> {
    if !(theta > 1.0) {
        return Err(Error::Domain {
            name: "theta",
            value: theta,
            domain: "> 1",
        });
    }
    let eta = fam.to_natural(param);
    let (up, down) = match fam.param_map() {
        ParamMap::InversePower(g) => (eta * theta.powf(-g), eta * theta.powf(g)),
        ParamMap::Identity => (eta * theta, eta / theta),
        ParamMap::Log => (eta + theta.ln(), eta - theta.ln()),
    };
    for e in [eta, up, down] {
        if !fam.omega().contains(e) || !e.is_finite() {
            return Err(Error::OutsideOmega(e));
        }
    }
    let lhs = fam.bregman(up, eta)?;
    let rhs = fam.bregman(down, eta)?;
    let mut v = AsymmetryVerdict::new(lhs, rhs, lhs - rhs);
    v.monotonicity = Some(acceleration_class(fam, eta, theta));
    Ok(v)
}

/// Both zeros in η₁ of ℓ(p_{η₁}, p_η) − ℓ(p_{η₂}, p_η) for a family with
/// A(η) = c₁ ln η + c₂: the trivial root η₂ and −η·W(−(η₂/η)e^{−η₂/η}) on
/// the other Lambert branch.
pub fn loss_diff_root(fam: &ExpFam, eta: f64, eta2: f64) -> Result<(f64, f64)> {
    if !fam.is_log_affine() {
        return Err(Error::NotLogAffinePartition);
    }
    for (name, v) in [("eta", eta), ("eta2", eta2)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain {
                name,
                value: v,
                domain: "> 0",
            });
        }
    }
    let r = eta2 / eta;
    let x = -r * (-r).exp();
    // The principal branch returns −r when r ≤ 1, the lower branch when r ≥ 1.
    let other = if r <= 1.0 { Branch::MinusOne } else { Branch::Principal };
    // At r = 1 the argument is −1/e up to rounding, the shared branch point.
    let x = x.max(-(-1f64).exp());
    let w = lambert_w(other, x)?;
    Ok((eta2, -eta * w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Scale,
    Location,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Scale => "scale",
            Mode::Location => "location",
        }
    }
}

/// Power-weighted CRPS verdict: the scale pair (σ, 1/σ) or the location pair
/// (μ, −μ) around `base`.
pub fn power_crps_trichotomy(alpha: f64, mode: Mode, base: &Distribution, param: f64) -> Result<AsymmetryVerdict> {
    let spec = LossSpec::TwCrps(WeightFunction::power(alpha));
    match mode {
        Mode::Scale => scale_verdict(&spec, &ScaleFamily::new(*base), param),
        Mode::Location => location_verdict(&spec, &LocationFamily::new(*base), param),
    }
}

/// One line of a verdict table.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRow {
    pub loss: String,
    pub family: String,
    pub mode: String,
    pub param: f64,
    pub verdict: AsymmetryVerdict,
}

impl VerdictRow {
    pub const CSV_HEADER: &'static str = "loss,family,mode,param,lhs,rhs,verdict,margin";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.loss,
            self.family,
            self.mode,
            self.param,
            self.verdict.lhs,
            self.verdict.rhs,
            self.verdict.comparison,
            self.verdict.margin
        )
    }
}

/// Base members of the six scale families swept for scale asymmetry.
pub fn scale_sweep_families() -> Vec<Distribution> {
    [
        Shape::Normal,
        Shape::Exponential,
        Shape::Laplace,
        Shape::Gamma { k: 3.0 },
        Shape::Weibull { k: 2.0 },
        Shape::Uniform,
    ]
    .into_iter()
    .map(Distribution::standard)
    .collect()
}

fn family_label(d: &Distribution) -> String {
    match d.shape {
        Shape::Gamma { k } | Shape::Weibull { k } => format!("{}(k={k})", d.name()),
        Shape::AsymmetricLaplace { p } => format!("{}(p={p})", d.name()),
        _ => d.name().to_string(),
    }
}

/// Scale verdicts for every (loss, family, σ) combination, in input order.
pub fn scale_sweep(specs: &[LossSpec], families: &[Distribution], sigmas: &[f64]) -> Result<Vec<VerdictRow>> {
    let jobs: Vec<(&LossSpec, &Distribution, f64)> = specs
        .iter()
        .flat_map(|s| families.iter().flat_map(move |f| sigmas.iter().map(move |&x| (s, f, x))))
        .collect();
    jobs.par_iter()
        .map(|(spec, base, sigma)| {
            Ok(VerdictRow {
                loss: spec.tag(),
                family: family_label(base),
                mode: "scale".into(),
                param: *sigma,
                verdict: scale_verdict(spec, &ScaleFamily::new(**base), *sigma)?,
            })
        })
        .collect()
}

/// Location verdicts for every (loss, family, μ) combination, in input order.
pub fn location_sweep(specs: &[LossSpec], families: &[Distribution], mus: &[f64]) -> Result<Vec<VerdictRow>> {
    let jobs: Vec<(&LossSpec, &Distribution, f64)> = specs
        .iter()
        .flat_map(|s| families.iter().flat_map(move |f| mus.iter().map(move |&x| (s, f, x))))
        .collect();
    jobs.par_iter()
        .map(|(spec, base, mu)| {
            Ok(VerdictRow {
                loss: spec.tag(),
                family: family_label(base),
                mode: "location".into(),
                param: *mu,
                verdict: location_verdict(spec, &LocationFamily::new(**base), *mu)?,
            })
        })
        .collect()
}

/// Natural-parameter verdicts for each family at each (η, θ).
pub fn expfam_sweep(fams: &[(String, ExpFam)], etas: &[f64], thetas: &[f64]) -> Result<Vec<(VerdictRow, f64)>> {
    let mut rows = Vec::new();
    for (name, fam) in fams {
        for &eta in etas {
            for &theta in thetas {
                rows.push((
                    VerdictRow {
                        loss: "log".into(),
                        family: name.clone(),
                        mode: "natural".into(),
                        param: eta,
                        verdict: expfam_verdict(fam, eta, theta)?,
                    },
                    theta,
                ));
            }
        }
    }
    Ok(rows)
}
