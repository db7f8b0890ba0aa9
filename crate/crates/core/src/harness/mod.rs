//! Experiment pipelines: loss heatmaps, standardized rankings, dispersion
//! comparisons and target standardization.

pub mod dispersion;
pub mod heatmap;
pub mod io;
pub mod ranking;
pub mod standardize;

pub use dispersion::{dispersion_flip, synthetic_flips, DispersionRecord, DivergenceKind};
pub use heatmap::{asymmetric_laplace_grid, default_axes, heatmap, linspace, standard_asymmetric_laplace, synthetic_normal_pairs, HeatmapGrid};
pub use ranking::{fractional_ranks, ranking_table, standardized_ranking, RankBy, RankSummary, RankingRow, ScoredRecord};
pub use standardize::{standardize_targets, RollingStandardizer, Standardized, Standardizer};
