//! Does inverting a forecast's dispersion error bring it closer to the truth?

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use rayon::prelude::*;

use crate::divergence::divergence;
use crate::error::{Error, Result};
use crate::families::Law;
use crate::forecasts::{kde_fit, KdeDensity};
use crate::scoring::LossSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    /// KL(G ‖ F), induced by log loss.
    Kl,
    /// ∫(F − G)², induced by the CRPS.
    Cramer,
}

impl DivergenceKind {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "kl" | "log" => Ok(DivergenceKind::Kl),
            "cramer" | "crps" => Ok(DivergenceKind::Cramer),
            _ => Err(Error::InvalidArgument(format!("unknown divergence `{text}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DivergenceKind::Kl => "kl",
            DivergenceKind::Cramer => "cramer",
        }
    }

    fn spec(&self) -> LossSpec {
        match self {
            DivergenceKind::Kl => LossSpec::Log,
            DivergenceKind::Cramer => LossSpec::Crps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRecord {
    /// sd(F)/sd(G) of the fitted densities.
    pub a: f64,
    /// d(F, G) after moving F to G's mean.
    pub d_original: f64,
    /// d(F′, G) where F′ has G's mean and standard deviation sd(G)/a.
    pub d_flipped: f64,
}

impl DispersionRecord {
    pub const CSV_HEADER: &'static str = "unit,a,d_original,d_flipped,divergence";

    pub fn csv(&self, unit: &str, kind: DivergenceKind) -> String {
        format!("{unit},{},{},{},{}", self.a, self.d_original, self.d_flipped, kind.as_str())
    }
}

fn moved(f: &KdeDensity, mean: f64, sd: f64) -> KdeDensity {
    let b = sd / f.variance().sqrt();
    f.affine(mean - b * f.mean(), b)
}

/// Fits KDEs to both samples, aligns F's mean with G's, and compares
/// d(F, G) with the divergence of F rescaled so its dispersion error is
/// inverted (ratio a becomes 1/a).
pub fn dispersion_flip(f_samples: &[f64], g_samples: &[f64], kind: DivergenceKind) -> Result<DispersionRecord> {
    let f = kde_fit(f_samples)?;
    let g = kde_fit(g_samples)?;
    let (mg, sg) = (g.mean(), g.variance().sqrt());
    let sf = f.variance().sqrt();
    let a = sf / sg;
    let original = moved(&f, mg, sf);
    let flipped = moved(&f, mg, sg / a);
    let spec = kind.spec();
    Ok(DispersionRecord {
        a,
        d_original: divergence(&spec, &original, &g)?,
        d_flipped: divergence(&spec, &flipped, &g)?,
    })
}

/// Replicated flips on normal samples: F ~ N(0, sd_f²) against G ~ N(0, sd_g²),
/// `n` draws each. Replicate r uses the stream seeded by `seed + r`.
pub fn synthetic_flips(
    sd_f: f64,
    sd_g: f64,
    n: usize,
    replicates: usize,
    kind: DivergenceKind,
    seed: u64,
) -> Result<Vec<DispersionRecord>> {
    let (nf, ng) = (
        Normal::new(0.0, sd_f).map_err(|_| Error::Domain {
            name: "sd_f",
            value: sd_f,
            domain: "> 0",
        })?,
        Normal::new(0.0, sd_g).map_err(|_| Error::Domain {
            name: "sd_g",
            value: sd_g,
            domain: "> 0",
        })?,
    );
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r));
            let f: Vec<f64> = (0..n).map(|_| nf.sample(&mut rng)).collect();
            let g: Vec<f64> = (0..n).map(|_| ng.sample(&mut rng)).collect();
            dispersion_flip(&f, &g, kind)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::Normal;

    fn draws(sd: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sd).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn identical_samples_give_zero() {
        let x = draws(1.0, 100, 1);
        for kind in [DivergenceKind::Kl, DivergenceKind::Cramer] {
            let r = dispersion_flip(&x, &x, kind).unwrap();
            assert!((r.a - 1.0).abs() < 1e-12);
            assert!(r.d_original.abs() < 1e-9 && r.d_flipped.abs() < 1e-9);
        }
    }

    #[test]
    fn overdispersed_cramer_prefers_deflation() {
        let r = dispersion_flip(&draws(2.0, 300, 2), &draws(1.0, 300, 3), DivergenceKind::Cramer).unwrap();
        assert!(r.a > 1.0 && r.d_flipped < r.d_original);
    }

    #[test]
    fn underdispersed_kl_prefers_inflation() {
        let r = dispersion_flip(&draws(0.5, 300, 4), &draws(1.0, 300, 5), DivergenceKind::Kl).unwrap();
        assert!(r.a < 1.0 && r.d_flipped < r.d_original);
    }
}
