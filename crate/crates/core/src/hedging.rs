//! Hedging a forecast's scale or natural parameter against a random,
//! log-symmetric shift between training and test populations.

use std::fmt;

use crate::asymmetry::{classify_monotone, scaling_exponent, Monotonicity};
use crate::divergence::{divergence, self_loss};
use crate::error::{Error, Result};
use crate::families::{ExpFam, Omega, ScaleFamily};
use crate::optimize::golden_section;
use crate::quad::{hermite64, legendre64};
use crate::scoring::{LossSpec, WeightFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftForm {
    /// Mass ½ on c·a and c/a.
    TwoPoint { a: f64 },
    /// ln of the parameter uniform on [ln c − ln a, ln c + ln a].
    LogUniform { a: f64 },
    /// ln of the parameter normal with mean ln c and standard deviation s.
    LogNormal { s: f64 },
}

/// Law of the test-time parameter, log-symmetric about `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftLaw {
    pub form: ShiftForm,
    pub center: f64,
}

impl ShiftLaw {
    pub fn new(form: ShiftForm, center: f64) -> Result<Self> {
        if !(center > 0.0) || !center.is_finite() {
            return Err(Error::Domain {
                name: "center",
                value: center,
                domain: "> 0",
            });
        }
        Ok(ShiftLaw { form, center })
    }

    /// Parses `two-point:a`, `log-uniform:a` or `log-normal:s`.
    pub fn parse(text: &str, center: f64) -> Result<Self> {
        let (head, arg) = text
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("shift `{text}` needs a parameter")))?;
        let v: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("shift `{text}` needs a number")))?;
        let form = match head.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "two-point" => ShiftForm::TwoPoint { a: v },
            "log-uniform" => ShiftForm::LogUniform { a: v },
            "log-normal" => ShiftForm::LogNormal { s: v },
            _ => return Err(Error::InvalidArgument(format!("unknown shift `{text}`"))),
        };
        ShiftLaw::new(form, center)
    }

    pub fn tag(&self) -> String {
        match self.form {
            ShiftForm::TwoPoint { a } => format!("two-point({a})"),
            ShiftForm::LogUniform { a } => format!("log-uniform({a})"),
            ShiftForm::LogNormal { s } => format!("log-normal({s})"),
        }
    }

    /// Offsets u and weights of ln(parameter/center) = u.
    fn log_offsets(&self) -> Result<Vec<(f64, f64)>> {
        match self.form {
            ShiftForm::TwoPoint { a } | ShiftForm::LogUniform { a } => {
                if a == 1.0 {
                    return Err(Error::NotAShift);
                }
                if !(a > 1.0) || !a.is_finite() {
                    return Err(Error::Domain {
                        name: "a",
                        value: a,
                        domain: "> 1",
                    });
                }
                Ok(self.offsets(a.ln()))
            }
            ShiftForm::LogNormal { s } => {
                if s == 0.0 {
                    return Err(Error::NotAShift);
                }
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::Domain {
                        name: "s",
                        value: s,
                        domain: "> 0",
                    });
                }
                Ok(self.offsets(s))
            }
        }
    }

    /// Offsets for a spread parameter already on the additive scale.
    fn offsets(&self, spread: f64) -> Vec<(f64, f64)> {
        match self.form {
            ShiftForm::TwoPoint { .. } => vec![(spread, 0.5), (-spread, 0.5)],
            ShiftForm::LogUniform { .. } => {
                let r = legendre64();
                r.nodes.iter().zip(&r.weights).map(|(x, w)| (spread * x, 0.5 * w)).collect()
            }
            ShiftForm::LogNormal { .. } => {
                let r = hermite64();
                let norm = std::f64::consts::PI.sqrt();
                r.nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| (spread * std::f64::consts::SQRT_2 * x, w / norm))
                    .collect()
            }
        }
    }

    /// Test-time parameters and their weights, multiplicative about the centre.
    pub fn nodes(&self) -> Result<Vec<(f64, f64)>> {
        Ok(self
            .log_offsets()?
            .into_iter()
            .map(|(u, w)| (self.center * u.exp(), w))
            .collect())
    }

    /// Nodes for a parameter living on ℝ: the shift acts additively, with
    /// `a` (or `s`) the offset itself, about a centre that may be any real.
    fn additive_nodes(form: ShiftForm, center: f64) -> Result<Vec<(f64, f64)>> {
        let spread = match form {
            ShiftForm::TwoPoint { a } | ShiftForm::LogUniform { a } => a,
            ShiftForm::LogNormal { s } => s,
        };
        if spread == 0.0 {
            return Err(Error::NotAShift);
        }
        if !(spread > 0.0) || !spread.is_finite() {
            return Err(Error::Domain {
                name: "offset",
                value: spread,
                domain: "> 0",
            });
        }
        let law = ShiftLaw { form, center: 1.0 };
        Ok(law.offsets(spread).into_iter().map(|(u, w)| (center + u, w)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Inflate,
    Deflate,
    None,
    Indeterminate,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Inflate => "inflate",
            Direction::Deflate => "deflate",
            Direction::None => "none",
            Direction::Indeterminate => "indeterminate",
        }
    }

    fn of(optimum: f64, center: f64) -> Self {
        let r = optimum / center;
        if (r - 1.0).abs() <= 1e-9 {
            Direction::None
        } else if r > 1.0 {
            Direction::Inflate
        } else {
            Direction::Deflate
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeResult {
    pub direction: Direction,
    /// σ* for scale hedges, η* for natural-parameter hedges.
    pub optimum: f64,
    pub baseline_loss: f64,
    pub hedged_loss: f64,
}

/// E ℓ(G_σ, G_{σ_test}) over the shift law.
pub fn shifted_expected_loss(spec: &LossSpec, fam: &ScaleFamily, shift: &ShiftLaw, sigma: f64) -> Result<f64> {
    let nodes = shift.nodes()?;
    let mut total = 0.0;
    for (s, w) in nodes {
        let truth = fam.member(s);
        total += w * (divergence(spec, &fam.member(sigma), &truth)? + self_loss(spec, &truth)?);
    }
    Ok(total)
}

/// The σ-dependent part of the shifted expected loss (entropies dropped).
fn shifted_divergence(spec: &LossSpec, fam: &ScaleFamily, nodes: &[(f64, f64)], sigma: f64) -> Result<f64> {
    let f = fam.member(sigma);
    let mut total = 0.0;
    for &(s, w) in nodes {
        total += w * divergence(spec, &f, &fam.member(s))?;
    }
    Ok(total)
}

fn require_symmetric_rescalable(spec: &LossSpec) -> Result<()> {
    match spec {
        LossSpec::Crps
        | LossSpec::Energy { .. }
        | LossSpec::Quadratic
        | LossSpec::TwCrps(WeightFunction::Power { .. }) => Ok(()),
        other => Err(Error::NotSymmetricRescalable(other.tag())),
    }
}

/// Direction evidence: the sampled (h − 1)/f and its monotonicity class.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionEvidence {
    pub direction: Direction,
    pub monotonicity: Monotonicity,
    /// (σ, (h(σ) − 1)/d(G_σ, G)) on the probe grid.
    pub samples: Vec<(f64, f64)>,
}

/// Classifies (h(σ) − 1)/d(G_σ, G) on 48 log-spaced σ in [1.05, 8]:
/// decreasing means inflating the scale hedges, increasing means deflating.
pub fn hedge_scale_direction(spec: &LossSpec, fam: &ScaleFamily) -> Result<DirectionEvidence> {
    require_symmetric_rescalable(spec)?;
    let h = scaling_exponent(spec)?;
    let (lo, hi) = (1.05f64.ln(), 8f64.ln());
    let mut samples = Vec::with_capacity(48);
    for i in 0..48 {
        let s = (lo + (hi - lo) * i as f64 / 47.0).exp();
        let f = divergence(spec, &fam.member(s), &fam.base)?;
        samples.push((s, (h.h(s) - 1.0) / f));
    }
    let values: Vec<f64> = samples.iter().map(|p| p.1).collect();
    let monotonicity = classify_monotone(&values);
    let direction = match monotonicity {
        Monotonicity::Decreasing => Direction::Inflate,
        Monotonicity::Increasing => Direction::Deflate,
        Monotonicity::Constant | Monotonicity::Mixed => Direction::Indeterminate,
    };
    Ok(DirectionEvidence {
        direction,
        monotonicity,
        samples,
    })
}

/// Minimizes the shifted expected loss over σ ∈ [c/16, 16c] by golden
/// section in ln σ (tolerance 1e−6).
pub fn optimal_scale(spec: &LossSpec, fam: &ScaleFamily, shift: &ShiftLaw) -> Result<HedgeResult> {
    require_symmetric_rescalable(spec)?;
    let nodes = shift.nodes()?;
    let c = shift.center;
    let (lo, hi) = ((c / 16.0).ln(), (16.0 * c).ln());
    let m = golden_section(|t| shifted_divergence(spec, fam, &nodes, t.exp()), lo, hi, 1e-6)?;
    let sigma_star = m.x.exp();
    if m.at_boundary {
        return Err(Error::MinimizerAtBoundary {
            at: sigma_star,
            lower: lo.exp(),
            upper: hi.exp(),
        });
    }
    let mut entropy = 0.0;
    for &(s, w) in &nodes {
        entropy += w * self_loss(spec, &fam.member(s))?;
    }
    let baseline = entropy + shifted_divergence(spec, fam, &nodes, c)?;
    let mut hedged = entropy + m.value;
    // Never report a hedge worse than not hedging.
    if hedged > baseline {
        hedged = baseline;
    }
    Ok(HedgeResult {
        direction: Direction::of(sigma_star, c),
        optimum: sigma_star,
        baseline_loss: baseline,
        hedged_loss: hedged,
    })
}

/// Natural-parameter hedge under log loss: η* = (A′)⁻¹(E A′(η_test)).
///
/// The shift acts on η directly: multiplicatively about `shift.center` on
/// Ω = (0, ∞), additively on Ω = ℝ (where the centre may be any real and
/// is read from `eta_center`). Losses are reported as expected excess over
/// the test-time entropy, E d_A(η, η_test).
pub fn hedge_expfam_optimum(fam: &ExpFam, shift: &ShiftLaw, eta_center: f64) -> Result<HedgeResult> {
    let nodes = expfam_shift_nodes(fam, shift, eta_center)?;
    hedge_over_nodes(fam, &nodes, eta_center, false)
}

/// As [`hedge_expfam_optimum`], with the shift law over the family's
/// conventional parameter (σ, shape or rate) and the result reported in it.
pub fn hedge_expfam_param_optimum(fam: &ExpFam, shift: &ShiftLaw) -> Result<HedgeResult> {
    let nodes: Vec<(f64, f64)> = shift
        .nodes()?
        .into_iter()
        .map(|(p, w)| (fam.to_natural(p), w))
        .collect();
    hedge_over_nodes(fam, &nodes, fam.to_natural(shift.center), true)
}

fn hedge_over_nodes(fam: &ExpFam, nodes: &[(f64, f64)], eta0: f64, conventional: bool) -> Result<HedgeResult> {
    for &(e, _) in nodes {
        if !fam.omega().contains(e) {
            return Err(Error::OutsideOmega(e));
        }
    }
    let mean: f64 = nodes.iter().map(|&(e, w)| w * fam.d_a(e)).sum();
    let eta_star = fam.inverse_d_a(mean)?;
    let loss = |eta: f64| -> Result<f64> {
        let mut t = 0.0;
        for &(e, w) in nodes {
            t += w * fam.bregman(eta, e)?;
        }
        Ok(t)
    };
    let baseline = loss(eta0)?;
    let hedged = loss(eta_star)?.min(baseline);
    let (optimum, center) = if conventional {
        (fam.from_natural(eta_star), fam.from_natural(eta0))
    } else {
        (eta_star, eta0)
    };
    let direction = match fam.omega() {
        Omega::Real if !conventional => {
            if (eta_star - eta0).abs() <= 1e-9 * eta0.abs().max(1.0) {
                Direction::None
            } else if eta_star > eta0 {
                Direction::Inflate
            } else {
                Direction::Deflate
            }
        }
        _ => Direction::of(optimum, center),
    };
    Ok(HedgeResult {
        direction,
        optimum,
        baseline_loss: baseline,
        hedged_loss: hedged,
    })
}

/// Largest |E d_A(η, η_test) − E d_A(η*, η_test) − d_A(η, η*)| over `probes`.
pub fn bregman_certificate(fam: &ExpFam, nodes: &[(f64, f64)], eta_star: f64, probes: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &eta in probes {
        let mut lhs = 0.0;
        for &(e, w) in nodes {
            lhs += w * (fam.bregman(eta, e)? - fam.bregman(eta_star, e)?);
        }
        worst = worst.max((lhs - fam.bregman(eta, eta_star)?).abs());
    }
    Ok(worst)
}

/// Natural-parameter nodes of a shift law for `fam`, as used by
/// [`hedge_expfam_optimum`].
pub fn expfam_shift_nodes(fam: &ExpFam, shift: &ShiftLaw, eta_center: f64) -> Result<Vec<(f64, f64)>> {
    match fam.omega() {
        Omega::Positive => ShiftLaw::new(shift.form, eta_center)?.nodes(),
        Omega::Real => ShiftLaw::additive_nodes(shift.form, eta_center),
    }
}
