//! Expected-loss surfaces over a (mean, standard deviation) grid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::divergence::{divergence, self_loss};
use crate::error::{Error, Result};
use crate::families::{make_family, Distribution, Law};
use crate::forecasts::{affine_to, Forecast};
use crate::scoring::{score, LossSpec};

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// The default grid: μ ∈ [−2, 2] and σ ∈ [0.2, 2.2], 41 points each.
pub fn default_axes() -> (Vec<f64>, Vec<f64>) {
    (linspace(-2.0, 2.0, 41), linspace(0.2, 2.2, 41))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub mu_axis: Vec<f64>,
    /// Forecast standard deviations.
    pub sigma_axis: Vec<f64>,
    /// `cells[i][j]` belongs to (mu_axis[i], sigma_axis[j]); may be +∞.
    pub cells: Vec<Vec<f64>>,
    /// Index of the smallest finite cell.
    pub argmin: Option<(usize, usize)>,
}

impl HeatmapGrid {
    fn new(mu_axis: Vec<f64>, sigma_axis: Vec<f64>, flat: Vec<f64>) -> Self {
        let ns = sigma_axis.len();
        let cells: Vec<Vec<f64>> = flat.chunks(ns.max(1)).map(|c| c.to_vec()).collect();
        let mut argmin = None;
        let mut best = f64::INFINITY;
        for (i, row) in cells.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v.is_finite() && v < best {
                    best = v;
                    argmin = Some((i, j));
                }
            }
        }
        HeatmapGrid {
            mu_axis,
            sigma_axis,
            cells,
            argmin,
        }
    }

    /// Cell at the grid point nearest to (μ, σ).
    pub fn cell(&self, mu: f64, sigma: f64) -> f64 {
        let near = |axis: &[f64], x: f64| {
            (0..axis.len())
                .min_by(|&a, &b| (axis[a] - x).abs().total_cmp(&(axis[b] - x).abs()))
                .unwrap_or(0)
        };
        self.cells[near(&self.mu_axis, mu)][near(&self.sigma_axis, sigma)]
    }

    pub fn argmin_point(&self) -> Option<(f64, f64)> {
        self.argmin.map(|(i, j)| (self.mu_axis[i], self.sigma_axis[j]))
    }

    pub const CSV_HEADER: &'static str = "mu,sigma,loss";

    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::with_capacity(self.mu_axis.len() * self.sigma_axis.len());
        for (i, m) in self.mu_axis.iter().enumerate() {
            for (j, s) in self.sigma_axis.iter().enumerate() {
                rows.push(format!("{m},{s},{}", self.cells[i][j]));
            }
        }
        rows
    }
}

fn check_axes(mu_axis: &[f64], sigma_axis: &[f64]) -> Result<()> {
    if mu_axis.is_empty() || sigma_axis.is_empty() {
        return Err(Error::InvalidArgument("heatmap axes must be non-empty".into()));
    }
    if sigma_axis.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidArgument("sigma axis must be positive".into()));
    }
    Ok(())
}

/// cell(μ, σ) = mean over pairs of ℓ(affine_to(F, μ, σ), y).
pub fn heatmap(spec: &LossSpec, pairs: &[(Forecast, f64)], mu_axis: &[f64], sigma_axis: &[f64]) -> Result<HeatmapGrid> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    check_axes(mu_axis, sigma_axis)?;
    // Standardize each forecast once; the grid then only shifts and scales.
    let standard: Vec<(Forecast, f64)> = pairs
        .iter()
        .map(|(f, y)| Ok((affine_to(f, 0.0, 1.0)?, *y)))
        .collect::<Result<_>>()?;
    let coords: Vec<(f64, f64)> = mu_axis
        .iter()
        .flat_map(|&m| sigma_axis.iter().map(move |&s| (m, s)))
        .collect();
    let flat: Vec<f64> = coords
        .par_iter()
        .map(|&(m, s)| {
            let mut total = 0.0;
            for (f, y) in &standard {
                total += score(spec, &f.affine(m, s), *y)?;
            }
            Ok(total / standard.len() as f64)
        })
        .collect::<Result<_>>()?;
    Ok(HeatmapGrid::new(mu_axis.to_vec(), sigma_axis.to_vec(), flat))
}

/// `n` standard normal forecasts paired with outcomes drawn from the same law.
pub fn synthetic_normal_pairs(n: usize, seed: u64) -> Vec<(Forecast, f64)> {
    let g = make_family("normal", &[0.0, 1.0]).expect("standard normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (Forecast::from(g), g.sample(&mut rng))).collect()
}

/// Zero-mean, unit-variance asymmetric Laplace law with skew p.
pub fn standard_asymmetric_laplace(p: f64) -> Result<Distribution> {
    let base = make_family("asymmetric-laplace", &[0.0, 1.0, p])?;
    let (m, v) = (base.mean(), base.variance());
    Ok(base.affine(-m / v.sqrt(), 1.0 / v.sqrt()))
}

/// Expected-loss grids ℓ(F_{μ,σ}, G) against the standardized asymmetric
/// Laplace target G, with forecasts from the same family moved to mean μ and
/// standard deviation σ. One grid per loss.
pub fn asymmetric_laplace_grid(p: f64, specs: &[LossSpec], mu_axis: &[f64], sigma_axis: &[f64]) -> Result<Vec<HeatmapGrid>> {
    check_axes(mu_axis, sigma_axis)?;
    let target = standard_asymmetric_laplace(p)?;
    let coords: Vec<(f64, f64)> = mu_axis
        .iter()
        .flat_map(|&m| sigma_axis.iter().map(move |&s| (m, s)))
        .collect();
    specs
        .iter()
        .map(|spec| {
            let entropy = self_loss(spec, &target)?;
            let flat: Vec<f64> = coords
                .par_iter()
                .map(|&(m, s)| {
                    // The standardized target has mean 0 and sd 1.
                    let f = target.affine(m, s);
                    Ok(entropy + divergence(spec, &f, &target)?)
                })
                .collect::<Result<_>>()?;
            Ok(HeatmapGrid::new(mu_axis.to_vec(), sigma_axis.to_vec(), flat))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.2, 2.2, 41);
        assert_eq!(v.len(), 41);
        assert!((v[16] - 1.0).abs() < 1e-12 && (v[40] - 2.2).abs() < 1e-12);
    }

    #[test]
    fn small_normal_heatmap() {
        let f: Forecast = make_family("normal", &[5.0, 3.0]).unwrap().into();
        let pairs: Vec<(Forecast, f64)> = [-1.0, -0.3, 0.0, 0.4, 1.1].iter().map(|&y| (f.clone(), y)).collect();
        let g = heatmap(&LossSpec::DawidSebastiani, &pairs, &[-0.5, 0.0, 0.5], &[0.5, 1.0]).unwrap();
        let want: f64 = [-1.0f64, -0.3, 0.0, 0.4, 1.1].iter().map(|y| (y - 0.5) * (y - 0.5)).sum::<f64>() / 5.0;
        assert!((g.cell(0.5, 1.0) - want).abs() < 1e-12);
        assert!(matches!(heatmap(&LossSpec::Log, &[], &[0.0], &[1.0]), Err(Error::EmptyPairs)));
    }

    #[test]
    fn argmin_ignores_infinite_cells() {
        let g = HeatmapGrid::new(vec![0.0, 1.0], vec![1.0], vec![f64::INFINITY, 2.0]);
        assert_eq!(g.argmin, Some((1, 0)));
    }

    #[test]
    fn standardized_al_moments() {
        let d = standard_asymmetric_laplace(0.2).unwrap();
        assert!(d.mean().abs() < 1e-12 && (d.variance() - 1.0).abs() < 1e-12);
    }
}
