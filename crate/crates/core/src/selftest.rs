//! The invariant suite behind `asymscore selftest`: one named check per
//! module property, each reporting pass or fail with a short detail line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asymmetry::{
    acceleration_class, expfam_param_verdict, location_sweep, loss_diff_root, scale_sweep, scale_sweep_families,
    scaling_exponent, Comparison, Monotonicity,
};
use crate::divergence::{divergence, expected_loss, specialization_difference, Method};
use crate::error::Result;
use crate::families::{
    expect, expfam_descriptor, make_family, Distribution, ExpFam, Law, LocationFamily, ScaleFamily, Shape,
};
use crate::forecasts::{affine_to, quantile_to_distribution, validate_quantiles, Forecast, Mixture, QuantileForecast};
use crate::harness::{default_axes, fractional_ranks, heatmap, standardized_ranking, RankBy, ScoredRecord};
use crate::hedging::{
    bregman_certificate, expfam_shift_nodes, hedge_expfam_optimum, hedge_expfam_param_optimum, optimal_scale,
    ShiftForm, ShiftLaw,
};
use crate::quad::QuadConfig;
use crate::scoring::{score, LossSpec, WeightFunction};
use crate::special::{lambert_w, normal_quantile, Branch};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = std::result::Result<String, String>;

fn ok<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fam(kind: &str, p: &[f64]) -> Distribution {
    make_family(kind, p).expect("fixture parameters are valid")
}

fn expfam(kind: &str, p: &[f64]) -> ExpFam {
    expfam_descriptor(kind, p).expect("fixture parameters are valid")
}

/// The catalog descriptors at the nuisance values used throughout the suite.
pub fn catalog_fixtures() -> Vec<(String, ExpFam)> {
    [
        ("generalized-gamma-scale", vec![2.0, 1.5]),
        ("gamma-scale", vec![3.0]),
        ("exponential-scale", vec![]),
        ("weibull-scale", vec![2.0]),
        ("laplace-scale", vec![]),
        ("normal-scale", vec![]),
        ("log-normal-log-scale", vec![0.0]),
        ("inverse-gamma-scale", vec![3.0]),
        ("generalized-gamma-shape", vec![1.0, 2.0]),
        ("gamma-shape", vec![1.0]),
        ("pareto-shape", vec![1.0]),
        ("inverse-gaussian-shape", vec![1.0]),
        ("beta-shape", vec![2.0]),
        ("poisson-rate", vec![]),
    ]
    .into_iter()
    .map(|(k, p)| (k.to_string(), expfam(k, &p)))
    .collect()
}

/// Direction in the conventional parameter: scale families favour
/// overestimating σ, everything else favours underestimating.
pub fn expected_catalog_verdict(name: &str) -> Comparison {
    let scale = name.ends_with("-scale") && name != "inverse-gamma-scale";
    if scale {
        Comparison::UnderPenalized
    } else {
        Comparison::OverPenalized
    }
}

/// Directions for the scale sweep, keyed by loss tag.
pub fn expected_scale_verdict(tag: &str) -> Option<Comparison> {
    match tag {
        "crps" => Some(Comparison::OverPenalized),
        t if t.starts_with("energy") => Some(Comparison::OverPenalized),
        "quadratic" | "ds" => Some(Comparison::UnderPenalized),
        "spherical" => Some(Comparison::Symmetric),
        _ => None,
    }
}

fn family_fixtures() -> Vec<Distribution> {
    vec![
        fam("normal", &[0.5, 2.0]),
        fam("exponential", &[1.5]),
        fam("laplace", &[-1.0, 0.7]),
        fam("weibull", &[2.0, 1.7]),
        fam("gamma", &[3.0, 0.5]),
        fam("generalized-gamma", &[1.3, 2.5, 1.5]),
        fam("log-normal", &[0.2, 0.5]),
        fam("inverse-gamma", &[3.0, 2.0]),
        fam("pareto", &[1.5, 3.0]),
        fam("inverse-gaussian", &[1.0, 2.0]),
        fam("beta", &[2.0, 3.5]),
        fam("cauchy", &[0.0, 1.0]),
        fam("asymmetric-laplace", &[0.0, 1.0, 0.2]),
        fam("uniform", &[-1.0, 3.0]),
    ]
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

// families

fn density_and_quantiles(_: u64) -> Check {
    let cfg = QuadConfig::default();
    for d in family_fixtures() {
        let mass = expect(&d, |_| 1.0, &cfg).value;
        ensure!((mass - 1.0).abs() < 1e-8, "{d:?}: mass {mass}");
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let r = (d.cdf(d.quantile(p)) - p).abs();
            ensure!(r < 1e-8, "{d:?}: cdf(quantile({p})) off by {r}");
        }
    }
    let pois = fam("poisson", &[3.5]);
    let mass = expect(&pois, |_| 1.0, &cfg).value;
    ensure!((mass - 1.0).abs() < 1e-12, "poisson pmf sums to {mass}");
    Ok(format!("{} laws", family_fixtures().len() + 1))
}

fn bregman_nonnegative(_: u64) -> Check {
    let mut n = 0;
    for (name, f) in catalog_fixtures() {
        let etas: Vec<f64> = match f.omega() {
            crate::families::Omega::Positive => vec![0.3, 0.9, 1.7, 4.0],
            crate::families::Omega::Real => vec![-1.5, -0.2, 0.6, 2.0],
        };
        for &a in &etas {
            for &b in &etas {
                let d = ok(f.bregman(a, b))?;
                ensure!(d >= -1e-14, "{name}: d_A({a}, {b}) = {d}");
                ensure!((a == b) == (d.abs() < 1e-14), "{name}: d_A({a}, {b}) = {d}");
                n += 1;
            }
        }
    }
    Ok(format!("{n} pairs"))
}

fn exponential_member_matches(_: u64) -> Check {
    let f = expfam("exponential-scale", &[]);
    for &s in &[0.4, 1.0, 2.5] {
        let m = ok(f.member(1.0 / s))?;
        let e = fam("exponential", &[s]);
        for i in 0..50 {
            let x = 0.1 * i as f64 * s;
            ensure!((m.pdf(x) - e.pdf(x)).abs() < 1e-14, "σ={s}, x={x}");
        }
    }
    Ok("pointwise".into())
}

fn sampling_moments(seed: u64) -> Check {
    let cfg = QuadConfig::default();
    let n = 100_000;
    for (k, d) in family_fixtures().into_iter().enumerate() {
        let (m, v) = (d.mean(), d.variance());
        if !v.is_finite() {
            continue;
        }
        let mu4 = expect(&d, |x| (x - m).powi(4), &cfg).value;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let em = xs.iter().sum::<f64>() / n as f64;
        let ev = xs.iter().map(|x| (x - em) * (x - em)).sum::<f64>() / (n - 1) as f64;
        let se_m = (v / n as f64).sqrt();
        let se_v = ((mu4 - v * v) / n as f64).sqrt();
        ensure!((em - m).abs() < 5.0 * se_m, "{d:?}: mean {em} vs {m}");
        if mu4.is_finite() {
            ensure!((ev - v).abs() < 5.0 * se_v, "{d:?}: variance {ev} vs {v}");
        }
    }
    Ok(format!("{n} draws per law"))
}

// forecasts

/// The 23 levels of a standard quantile submission.
pub fn standard_levels() -> Vec<f64> {
    let mut l = vec![0.01, 0.025];
    l.extend((1..=19).map(|i| i as f64 * 0.05));
    l.extend([0.975, 0.99]);
    l
}

fn quantile_round_trip(_: u64) -> Check {
    let levels = standard_levels();
    for (m, s) in [(0.0, 1.0), (3.0, 0.2), (-10.0, 7.0)] {
        let values: Vec<f64> = levels.iter().map(|&t| m + s * normal_quantile(t)).collect();
        let q = validate_quantiles(QuantileForecast::new(levels.clone(), values.clone())).map_err(|r| r.to_string())?;
        let d = ok(quantile_to_distribution(&q))?;
        for (t, v) in levels.iter().zip(&values) {
            let back = d.quantile(*t);
            ensure!((back - v).abs() < 1e-8 * v.abs().max(1.0), "level {t}: {back} vs {v}");
        }
        for i in 0..levels.len() - 1 {
            let mass = d.cdf(values[i + 1]) - d.cdf(values[i]);
            ensure!((mass - (levels[i + 1] - levels[i])).abs() < 1e-10, "segment {i} mass {mass}");
        }
        let total = expect(&d, |_| 1.0, &QuadConfig::default()).value;
        ensure!((total - 1.0).abs() < 1e-8, "total mass {total}");
    }
    Ok("3 forecasts".into())
}

fn affine_to_identity(_: u64) -> Check {
    let levels = standard_levels();
    let values: Vec<f64> = levels.iter().map(|&t| 1.0 + 2.0 * normal_quantile(t)).collect();
    let q = validate_quantiles(QuantileForecast::new(levels, values)).map_err(|r| r.to_string())?;
    let mix = ok(Mixture::new(vec![fam("normal", &[-1.0, 0.5]), fam("laplace", &[2.0, 1.0])], vec![0.3, 0.7]))?;
    let forecasts: Vec<Forecast> = vec![
        ok(quantile_to_distribution(&q))?.into(),
        fam("gamma", &[2.0, 1.5]).into(),
        mix.into(),
    ];
    for f in &forecasts {
        let g = ok(affine_to(f, f.mean(), f.variance().sqrt()))?;
        let (a, b) = (f.law().unwrap(), g.law().unwrap());
        for i in -30..=30 {
            let x = f.mean() + 0.2 * i as f64;
            ensure!((a.pdf(x) - b.pdf(x)).abs() < 1e-12, "pdf differs at {x}");
        }
    }
    Ok(format!("{} forecasts", forecasts.len()))
}

// scoring

fn quadratic_penalty_needed(_: u64) -> Check {
    let (f, g) = (fam("normal", &[0.0, 0.1]), fam("normal", &[0.0, 1.0]));
    let cfg = QuadConfig::with_tol(1e-13, 1e-11);
    let partial_f = expect(&g, |y| -2.0 * f.pdf(y), &cfg).value;
    let partial_g = expect(&g, |y| -2.0 * g.pdf(y), &cfg).value;
    ensure!(partial_f < partial_g, "partial loss did not reward F: {partial_f} vs {partial_g}");
    let d = ok(divergence(&LossSpec::Quadratic, &f, &g))?;
    ensure!(d > 0.0, "full quadratic divergence {d}");
    Ok(format!("partial {partial_f:.4} < {partial_g:.4}, full d = {d:.4}"))
}

fn oracle_triple(spec: &LossSpec, f: &Distribution, g: &Distribution, draws: usize, seed: u64) -> Check {
    let fc: Forecast = f.clone().into();
    let quad = ok(expected_loss(spec, &fc, g, Method::Quadrature))?.value;
    if let Ok(c) = expected_loss(spec, &fc, g, Method::ClosedForm) {
        ensure!(rel_close(c.value, quad, 1e-6), "{} {f:?} {g:?}: closed {} vs quadrature {quad}", spec.tag(), c.value);
    }
    let mc = ok(expected_loss(spec, &fc, g, Method::MonteCarlo { draws, seed }))?;
    let se = mc.std_error.unwrap_or(0.0);
    ensure!(
        (mc.value - quad).abs() <= (3.0 * se).max(1e-6),
        "{} {f:?} {g:?}: monte carlo {} ± {se} vs quadrature {quad}",
        spec.tag(),
        mc.value
    );
    Ok(String::new())
}

/// Random (F, G) pairs from the families with closed-form expected losses.
pub fn oracle_pairs(rng: &mut ChaCha8Rng, count: usize) -> Vec<(Distribution, Distribution)> {
    (0..count)
        .map(|i| {
            if i % 2 == 0 {
                (
                    fam("normal", &[rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0)]),
                    fam("normal", &[rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0)]),
                )
            } else {
                (fam("exponential", &[rng.random_range(0.5..2.0)]), fam("exponential", &[rng.random_range(0.5..2.0)]))
            }
        })
        .collect()
}

fn oracle_consistency(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = oracle_pairs(&mut rng, 4);
    let specs = [
        LossSpec::Log,
        LossSpec::Quadratic,
        LossSpec::Spherical,
        LossSpec::Crps,
        LossSpec::Energy { beta: 1.5 },
        LossSpec::DawidSebastiani,
    ];
    for spec in &specs {
        for (k, (f, g)) in pairs.iter().enumerate() {
            if matches!(spec, LossSpec::Energy { .. }) && f.shape != Shape::Normal {
                continue;
            }
            oracle_triple(spec, f, g, 100_000, seed.wrapping_add(k as u64))?;
        }
    }
    let tw = LossSpec::TwCrps(WeightFunction::power(1.0));
    oracle_triple(&tw, &fam("exponential", &[1.3]), &fam("exponential", &[0.8]), 5_000, seed)?;
    Ok(format!("{} triples", specs.len() * pairs.len() + 1))
}

fn crps_homogeneity(_: u64) -> Check {
    for d in [fam("normal", &[0.3, 1.2]), fam("gamma", &[2.0, 1.0]), fam("laplace", &[0.0, 0.5])] {
        for &s in &[0.5, 3.0] {
            for &y in &[-0.7, 0.4, 2.2] {
                if d.support().lo > y {
                    continue;
                }
                let a = ok(score(&LossSpec::Crps, &d.scaled(s).into(), s * y))?;
                let b = s * ok(score(&LossSpec::Crps, &d.clone().into(), y))?;
                ensure!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{d:?} σ={s} y={y}: {a} vs {b}");
            }
        }
    }
    Ok("3 laws".into())
}

fn ds_depends_on_moments(_: u64) -> Check {
    let n = fam("normal", &[0.0, 1.0]);
    let u = fam("uniform", &[-(3f64.sqrt()), 3f64.sqrt()]);
    for &y in &[-2.0, 0.0, 0.5, 1.5] {
        let a = ok(score(&LossSpec::DawidSebastiani, &n.clone().into(), y))?;
        let b = ok(score(&LossSpec::DawidSebastiani, &u.clone().into(), y))?;
        ensure!((a - b).abs() < 1e-12, "y={y}: {a} vs {b}");
    }
    Ok("normal vs uniform".into())
}

// divergence

fn random_pair(rng: &mut ChaCha8Rng) -> (Distribution, Distribution) {
    let one = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.5) {
            fam("normal", &[rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0)])
        } else {
            fam("laplace", &[rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0)])
        }
    };
    let f = one(rng);
    (f, one(rng))
}

fn divergence_symmetry(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symmetric = [
        LossSpec::Crps,
        LossSpec::TwCrps(WeightFunction::power(2.0)),
        LossSpec::Quadratic,
        LossSpec::Energy { beta: 1.5 },
    ];
    for _ in 0..30 {
        let (f, g) = random_pair(&mut rng);
        for spec in &symmetric {
            let (a, b) = (ok(divergence(spec, &f, &g))?, ok(divergence(spec, &g, &f))?);
            ensure!((a - b).abs() < 1e-8, "{} {f:?} {g:?}: {a} vs {b}", spec.tag());
        }
    }
    let (f, g) = (fam("normal", &[0.0, 0.5]), fam("normal", &[0.0, 2.0]));
    for spec in [LossSpec::Log, LossSpec::Spherical, LossSpec::DawidSebastiani] {
        let (a, b) = (ok(divergence(&spec, &f, &g))?, ok(divergence(&spec, &g, &f))?);
        ensure!((a - b).abs() > 1e-3, "{} unexpectedly symmetric: {a} vs {b}", spec.tag());
    }
    Ok("30 pairs".into())
}

fn rescalability(_: u64) -> Check {
    let specs = [
        LossSpec::Crps,
        LossSpec::Energy { beta: 1.5 },
        LossSpec::Quadratic,
        LossSpec::Log,
        LossSpec::DawidSebastiani,
        LossSpec::TwCrps(WeightFunction::power(0.5)),
    ];
    let (f, g) = (fam("gamma", &[2.0, 1.0]), fam("exponential", &[1.0]));
    for spec in &specs {
        let h = ok(scaling_exponent(spec))?;
        for &(s, t) in &[(1.5, 2.0), (0.7, 0.4), (3.0, 1.3)] {
            let lhs = ok(divergence(spec, &f.scaled(s), &g.scaled(t)))?;
            let rhs = h.h(t) * ok(divergence(spec, &f.scaled(s / t), &g))?;
            ensure!(rel_close(lhs, rhs, 1e-7), "{} σ={s} τ={t}: {lhs} vs {rhs}", spec.tag());
        }
    }
    Ok(format!("{} losses", specs.len()))
}

fn translation_invariance(_: u64) -> Check {
    let specs = [
        LossSpec::Log,
        LossSpec::Quadratic,
        LossSpec::Spherical,
        LossSpec::Crps,
        LossSpec::TwCrps(WeightFunction::power(0.0)),
        LossSpec::Energy { beta: 1.5 },
        LossSpec::DawidSebastiani,
    ];
    let (f, g) = (fam("normal", &[0.0, 1.2]), fam("laplace", &[0.0, 1.0]));
    for spec in &specs {
        for &(m, n) in &[(0.5, -0.3), (2.0, 1.0)] {
            let a = ok(divergence(spec, &f.shifted(m), &g.shifted(n)))?;
            let b = ok(divergence(spec, &f.shifted(m - n), &g))?;
            ensure!((a - b).abs() < 1e-7 * a.abs().max(1.0), "{} μ={m} ν={n}: {a} vs {b}", spec.tag());
        }
    }
    Ok(format!("{} losses", specs.len()))
}

/// Largest deviation from the two spherical scale identities over `count`
/// random (σ, τ) pairs on each family.
pub fn spherical_identity_error(seed: u64, count: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sp = LossSpec::Spherical;
    let mut worst: f64 = 0.0;
    for base in [fam("normal", &[0.0, 1.0]), fam("exponential", &[1.0]), fam("gamma", &[3.0, 1.0])] {
        for _ in 0..count {
            let (s, t): (f64, f64) = (rng.random_range(0.3..4.0), rng.random_range(0.3..4.0));
            let d = divergence(&sp, &base.scaled(s), &base.scaled(t))?;
            let a = t.powf(-0.5) * divergence(&sp, &base.scaled(s / t), &base)?;
            let b = (s / t).sqrt() * divergence(&sp, &base.scaled(t), &base.scaled(s))?;
            worst = worst.max((d - a).abs()).max((d - b).abs());
        }
    }
    Ok(worst)
}

fn spherical_identities(seed: u64) -> Check {
    let w = ok(spherical_identity_error(seed, 20))?;
    ensure!(w < 1e-7, "largest deviation {w}");
    Ok(format!("largest deviation {w:.2e}"))
}

/// Fixtures with ℓ(F, G) < ℓ(H, G): F is close to G, H is not.
pub fn aggregation_fixture() -> (Distribution, Distribution, Distribution) {
    (fam("normal", &[0.2, 1.1]), fam("normal", &[1.0, 1.6]), fam("normal", &[0.0, 1.0]))
}

fn aggregation_signs(_: u64) -> Check {
    let (f, h, g) = aggregation_fixture();
    let cases = [
        (LossSpec::Log, 0),
        (LossSpec::DawidSebastiani, 0),
        (LossSpec::Crps, 1),
        (LossSpec::Energy { beta: 1.5 }, 1),
        (LossSpec::Quadratic, -1),
    ];
    for (spec, sign) in &cases {
        let d = ok(specialization_difference(spec, &f, &h, &g, 4.0))?;
        let got = if d.abs() < 1e-9 { 0 } else { d.signum() as i32 };
        ensure!(got == *sign, "{}: difference {d}", spec.tag());
    }
    Ok("σ = 4".into())
}

fn cauchy_kl_symmetric(_: u64) -> Check {
    let fam_c = ScaleFamily::new(fam("cauchy", &[0.0, 1.0]));
    for &s in &[2.0, 5.0] {
        let a = ok(divergence(&LossSpec::Log, &fam_c.member(s), &fam_c.base))?;
        let b = ok(divergence(&LossSpec::Log, &fam_c.member(1.0 / s), &fam_c.base))?;
        ensure!((a - b).abs() < 1e-6, "σ={s}: {a} vs {b}");
    }
    Ok("σ ∈ {2, 5}".into())
}

// asymmetry

/// The losses swept for scale asymmetry.
pub fn scale_specs() -> Vec<LossSpec> {
    vec![
        LossSpec::Crps,
        LossSpec::Energy { beta: 1.5 },
        LossSpec::Quadratic,
        LossSpec::DawidSebastiani,
        LossSpec::Spherical,
    ]
}

fn scale_sweep_check(_: u64) -> Check {
    let rows = ok(scale_sweep(&scale_specs(), &scale_sweep_families(), &[1.5, 2.0, 5.0]))?;
    for r in &rows {
        let want = expected_scale_verdict(&r.loss).expect("tags from scale_specs");
        ensure!(r.verdict.comparison == want, "{} on {} at σ={}: {}", r.loss, r.family, r.param, r.verdict.comparison);
    }
    Ok(format!("{} verdicts", rows.len()))
}

fn catalog_sweep_check(_: u64) -> Check {
    let mut n = 0;
    for (name, f) in catalog_fixtures() {
        for &eta in &[0.5, 1.0, 2.0] {
            for &theta in &[1.5, 3.0] {
                let v = ok(expfam_param_verdict(&f, f.from_natural(eta), theta))?;
                ensure!(v.comparison == expected_catalog_verdict(&name), "{name} η={eta} θ={theta}: {}", v.comparison);
                n += 1;
            }
        }
    }
    Ok(format!("{n} verdicts"))
}

fn location_sweep_check(_: u64) -> Check {
    let specs = [
        LossSpec::Log,
        LossSpec::Quadratic,
        LossSpec::Spherical,
        LossSpec::Crps,
        LossSpec::Energy { beta: 1.5 },
        LossSpec::DawidSebastiani,
    ];
    let bases = [fam("normal", &[0.0, 1.0]), fam("laplace", &[0.0, 1.0]), fam("uniform", &[-1.0, 1.0])];
    let rows = ok(location_sweep(&specs, &bases, &[0.5, 2.0]))?;
    for r in &rows {
        ensure!(r.verdict.comparison == Comparison::Symmetric, "{} on {} at μ={}: margin {}", r.loss, r.family, r.param, r.verdict.margin);
    }
    for p in [0.2, 0.8] {
        let al = LocationFamily::new(fam("asymmetric-laplace", &[0.0, 1.0, p]));
        let v = ok(crate::asymmetry::location_verdict(&LossSpec::Log, &al, 1.0))?;
        ensure!(v.asymmetric_base && v.comparison != Comparison::Symmetric, "asymmetric Laplace p={p} not flagged");
    }
    Ok(format!("{} symmetric verdicts", rows.len()))
}

fn monotonicity_probe(_: u64) -> Check {
    // Every catalog entry has u³A″(u) increasing (a·u for A = −a ln η + bη,
    // γ u² ψ′-type growth for the shape families, e^η sinh u for Poisson).
    for (name, f) in catalog_fixtures() {
        for &eta in &[0.5, 1.0, 2.0] {
            for &theta in &[1.5, 3.0] {
                let c = acceleration_class(&f, eta, theta);
                ensure!(c == Monotonicity::Increasing, "{name} η={eta} θ={theta}: {}", c.as_str());
            }
        }
    }
    Ok("all increasing".into())
}

/// Largest Lambert residual and largest loss-difference residual over
/// `count` random points each.
pub fn lambert_residuals(seed: u64, count: usize) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w_res: f64 = 0.0;
    let e = (-1f64).exp();
    for _ in 0..count {
        let x = rng.random_range(-e..0.0);
        for b in [Branch::Principal, Branch::MinusOne] {
            let w = lambert_w(b, x)?;
            w_res = w_res.max((w * w.exp() - x).abs());
        }
        let x = rng.random_range(0.0..10.0);
        let w = lambert_w(Branch::Principal, x)?;
        w_res = w_res.max((w * w.exp() - x).abs());
    }
    let f = expfam("exponential-scale", &[]);
    let mut l_res: f64 = 0.0;
    for _ in 0..count {
        let (eta, eta2) = (rng.random_range(0.2..5.0), rng.random_range(0.2..5.0));
        let (a, b) = loss_diff_root(&f, eta, eta2)?;
        let target = f.bregman(eta2, eta)?;
        for r in [a, b] {
            l_res = l_res.max((f.bregman(r, eta)? - target).abs());
        }
        // The nontrivial root lies on the other side of η.
        if (eta2 - eta).abs() > 1e-6 && (b - eta).signum() == (eta2 - eta).signum() {
            return Err(crate::error::Error::InvalidArgument(format!(
                "root {b} on the same side of η={eta} as η₂={eta2}"
            )));
        }
    }
    Ok((w_res, l_res))
}

fn lambert_roots(seed: u64) -> Check {
    let (w, l) = ok(lambert_residuals(seed, 1000))?;
    ensure!(w < 1e-12, "Lambert residual {w}");
    ensure!(l < 1e-9, "loss-difference residual {l}");
    Ok(format!("W residual {w:.1e}, loss residual {l:.1e}"))
}

// hedging

fn propriety_floor(_: u64) -> Check {
    let base = ScaleFamily::new(fam("exponential", &[1.0]));
    for spec in [LossSpec::Crps, LossSpec::Quadratic] {
        for a in [1.5, 2.0, 4.0] {
            let shift = ok(ShiftLaw::new(ShiftForm::TwoPoint { a }, 1.0))?;
            let hedge = ok(optimal_scale(&spec, &base, &shift))?;
            let mix: Forecast = ok(Mixture::new(vec![base.member(a), base.member(1.0 / a)], vec![0.5, 0.5]))?.into();
            let star: Forecast = base.member(hedge.optimum).into();
            let (mut lm, mut ls) = (0.0, 0.0);
            for (s, w) in ok(shift.nodes())? {
                lm += w * ok(expected_loss(&spec, &mix, &base.member(s), Method::Auto))?.value;
                ls += w * ok(expected_loss(&spec, &star, &base.member(s), Method::Auto))?.value;
            }
            ensure!(lm <= ls + 1e-8 * ls.abs().max(1.0), "{} a={a}: mixture {lm} > hedge {ls}", spec.tag());
        }
    }
    Ok("crps and quadratic".into())
}

fn bregman_certificate_check(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (name, f) in catalog_fixtures() {
        let center = match f.omega() {
            crate::families::Omega::Positive => 1.0,
            crate::families::Omega::Real => 0.3,
        };
        let shift = ok(ShiftLaw::new(ShiftForm::TwoPoint { a: 2.0 }, 1.0))?;
        let r = ok(hedge_expfam_optimum(&f, &shift, center))?;
        let nodes = ok(expfam_shift_nodes(&f, &shift, center))?;
        let probes: Vec<f64> = (0..20)
            .map(|_| match f.omega() {
                crate::families::Omega::Positive => rng.random_range(0.2..4.0),
                crate::families::Omega::Real => rng.random_range(-2.0..2.0),
            })
            .collect();
        let c = ok(bregman_certificate(&f, &nodes, r.optimum, &probes))?;
        ensure!(c < 1e-7, "{name}: certificate gap {c}");
        worst = worst.max(c);
    }
    Ok(format!("largest gap {worst:.1e}"))
}

fn generalized_gamma_jensen(_: u64) -> Check {
    for g in [0.5, 1.0, 2.0] {
        for k in [1.0, 3.0] {
            let f = expfam("generalized-gamma-scale", &[g, k]);
            for a in [1.5, 4.0] {
                let shift = ok(ShiftLaw::new(ShiftForm::TwoPoint { a }, 1.0))?;
                let r = ok(hedge_expfam_param_optimum(&f, &shift))?;
                ensure!(r.optimum > 1.0, "γ={g} k={k} a={a}: σ* = {}", r.optimum);
            }
        }
    }
    Ok("12 fixtures".into())
}

fn reversal_bookkeeping(_: u64) -> Check {
    let e = ScaleFamily::new(fam("exponential", &[1.0]));
    for a in [1.5, 2.0, 5.0] {
        let x = ok(divergence(&LossSpec::Log, &e.base, &e.member(a)))?;
        let y = ok(divergence(&LossSpec::Log, &e.member(1.0 / a), &e.base))?;
        ensure!((x - y).abs() < 1e-7, "a={a}: {x} vs {y}");
    }
    Ok("3 shifts".into())
}

// harness

fn heatmap_argmin(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = fam("normal", &[0.0, 1.0]);
    let pairs: Vec<(Forecast, f64)> = (0..10_000).map(|_| (target.clone().into(), target.sample(&mut rng))).collect();
    let (mu, sigma) = default_axes();
    let (dm, ds) = (mu[1] - mu[0], sigma[1] - sigma[0]);
    for spec in [LossSpec::Log, LossSpec::Crps] {
        let grid = ok(heatmap(&spec, &pairs, &mu, &sigma))?;
        let (m, s) = grid.argmin_point().ok_or("no finite cell")?;
        ensure!((m.abs() <= dm + 1e-12) && ((s - 1.0).abs() <= ds + 1e-12), "{}: argmin ({m}, {s})", spec.tag());
    }
    Ok("log and crps".into())
}

fn ranking_invariance(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = ["a", "b", "c", "d", "e"];
    let mut recs = Vec::new();
    for task in 0..20 {
        for n in &names[..rng.random_range(2..=5)] {
            recs.push(ScoredRecord {
                forecaster: n.to_string(),
                location: format!("L{task}"),
                date: "2021-01-02".into(),
                horizon: "1".into(),
                loss: rng.random_range(0.0..10.0),
                variance: 1.0,
            });
        }
    }
    let base = ok(standardized_ranking(&recs, RankBy::Loss))?;
    let mut moved = recs.clone();
    for task in 0..20 {
        let (a, b) = (rng.random_range(-5.0..5.0), rng.random_range(0.1..10.0));
        for r in moved.iter_mut().filter(|r| r.location == format!("L{task}")) {
            r.loss = a + b * r.loss;
        }
    }
    let after = ok(standardized_ranking(&moved, RankBy::Loss))?;
    for (k, v) in &base.mean_rank {
        ensure!((v - after.mean_rank[k]).abs() < 1e-12, "{k}: {v} vs {}", after.mean_rank[k]);
    }
    // Full panel: the average of all standardized ranks is (n + 1)/(2n).
    for n in 2..=6 {
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let mean = fractional_ranks(&values).iter().sum::<f64>() / (n * n) as f64;
        let want = (n + 1) as f64 / (2 * n) as f64;
        ensure!((mean - want).abs() < 1e-15, "n={n}: {mean} vs {want}");
    }
    Ok("20 tasks".into())
}

type CheckFn = fn(u64) -> Check;

const CHECKS: &[(&str, &str, CheckFn)] = &[
    ("families", "density mass and cdf/quantile round trip", density_and_quantiles),
    ("families", "Bregman divergence nonnegative, zero iff equal", bregman_nonnegative),
    ("families", "exponential descriptor member matches family", exponential_member_matches),
    ("families", "sample moments within 5 SE", sampling_moments),
    ("forecasts", "quantile round trip and segment masses", quantile_round_trip),
    ("forecasts", "affine_to at own moments is the identity", affine_to_identity),
    ("scoring", "quadratic loss needs its integral penalty", quadratic_penalty_needed),
    ("scoring", "closed form, quadrature and Monte Carlo agree", oracle_consistency),
    ("scoring", "CRPS positively homogeneous", crps_homogeneity),
    ("scoring", "DS depends only on mean and variance", ds_depends_on_moments),
    ("divergence", "symmetric and asymmetric divergences", divergence_symmetry),
    ("divergence", "rescalability with h(τ) = τ^γ", rescalability),
    ("divergence", "translation invariance", translation_invariance),
    ("divergence", "spherical scale identities", spherical_identities),
    ("divergence", "aggregation sign pattern", aggregation_signs),
    ("divergence", "Cauchy KL symmetric in log σ", cauchy_kl_symmetric),
    ("asymmetry", "scale sweep directions", scale_sweep_check),
    ("asymmetry", "exponential family catalog directions", catalog_sweep_check),
    ("asymmetry", "location sweep symmetric", location_sweep_check),
    ("asymmetry", "acceleration probe class", monotonicity_probe),
    ("asymmetry", "Lambert roots", lambert_roots),
    ("hedging", "mixture floor below scale hedge", propriety_floor),
    ("hedging", "Bregman optimality certificate", bregman_certificate_check),
    ("hedging", "generalized gamma hedge inflates", generalized_gamma_jensen),
    ("hedging", "log-loss reversal bookkeeping", reversal_bookkeeping),
    ("harness", "heatmap argmin at the truth", heatmap_argmin),
    ("harness", "rank invariance and panel mean", ranking_invariance),
];

/// Runs every check; results come back in a fixed order whatever the thread
/// count.
pub fn run_selftest(seed: u64) -> Vec<CheckOutcome> {
    CHECKS
        .par_iter()
        .map(|&(module, name, check)| {
            let (passed, detail) = match std::panic::catch_unwind(|| check(seed)) {
                Ok(Ok(d)) => (true, d),
                Ok(Err(d)) => (false, d),
                Err(_) => (false, "panicked".to_string()),
            };
            CheckOutcome {
                module,
                name,
                passed,
                detail,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_checks_pass() {
        for f in [exponential_member_matches as CheckFn, ds_depends_on_moments, aggregation_signs, ranking_invariance] {
            assert!(f(7).is_ok(), "{:?}", f(7));
        }
    }
}
