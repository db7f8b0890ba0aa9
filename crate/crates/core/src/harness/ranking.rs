//! Standardized ranks of forecasters within (location, date, horizon) tasks.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    pub forecaster: String,
    pub location: String,
    pub date: String,
    pub horizon: String,
    /// May be +∞, never NaN.
    pub loss: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankBy {
    Loss,
    Variance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankSummary {
    /// Mean standardized rank per forecaster over the tasks it entered.
    pub mean_rank: BTreeMap<String, f64>,
    /// Tasks with a single forecaster, which carry no ranking information.
    pub skipped_groups: usize,
}

/// Fractional (average) ranks, 1-based, of `values` in ascending order.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Within each task, ranks divided by the number of forecasters; averaged
/// per forecaster over the tasks it entered (missing entries are not imputed).
pub fn standardized_ranking(records: &[ScoredRecord], by: RankBy) -> Result<RankSummary> {
    let mut groups: BTreeMap<(&str, &str, &str), Vec<&ScoredRecord>> = BTreeMap::new();
    for r in records {
        let v = match by {
            RankBy::Loss => r.loss,
            RankBy::Variance => r.variance,
        };
        if v.is_nan() {
            return Err(Error::Data(format!("NaN value for forecaster `{}`", r.forecaster)));
        }
        groups
            .entry((r.location.as_str(), r.date.as_str(), r.horizon.as_str()))
            .or_default()
            .push(r);
    }
    let mut totals: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut skipped = 0;
    for ((loc, date, h), members) in &groups {
        let mut names: Vec<&str> = members.iter().map(|r| r.forecaster.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Data(format!(
                "duplicate forecaster in task ({loc}, {date}, {h})"
            )));
        }
        if members.len() < 2 {
            skipped += 1;
            continue;
        }
        let values: Vec<f64> = members
            .iter()
            .map(|r| match by {
                RankBy::Loss => r.loss,
                RankBy::Variance => r.variance,
            })
            .collect();
        let n = members.len() as f64;
        for (r, rank) in members.iter().zip(fractional_ranks(&values)) {
            let e = totals.entry(r.forecaster.clone()).or_insert((0.0, 0));
            e.0 += rank / n;
            e.1 += 1;
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} single-forecaster task(s) while ranking");
    }
    Ok(RankSummary {
        mean_rank: totals.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect(),
        skipped_groups: skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub forecaster: String,
    pub loss_tag: String,
    pub mean_std_rank: f64,
    pub mean_std_variance_rank: f64,
}

impl RankingRow {
    pub const CSV_HEADER: &'static str = "forecaster,loss_tag,mean_std_rank,mean_std_variance_rank";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{}",
            self.forecaster, self.loss_tag, self.mean_std_rank, self.mean_std_variance_rank
        )
    }
}

/// One row per (forecaster, loss) from records already scored under each loss.
pub fn ranking_table(by_loss: &[(String, Vec<ScoredRecord>)]) -> Result<Vec<RankingRow>> {
    let mut rows = Vec::new();
    for (tag, records) in by_loss {
        let loss = standardized_ranking(records, RankBy::Loss)?;
        let var = standardized_ranking(records, RankBy::Variance)?;
        for (name, r) in &loss.mean_rank {
            rows.push(RankingRow {
                forecaster: name.clone(),
                loss_tag: tag.clone(),
                mean_std_rank: *r,
                mean_std_variance_rank: var.mean_rank.get(name).copied().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(f: &str, task: &str, loss: f64) -> ScoredRecord {
        ScoredRecord {
            forecaster: f.into(),
            location: task.into(),
            date: "2021-01-02".into(),
            horizon: "1".into(),
            loss,
            variance: 1.0,
        }
    }

    #[test]
    fn simple_and_tied_groups() {
        let r = standardized_ranking(&[rec("a", "x", 1.0), rec("b", "x", 2.0)], RankBy::Loss).unwrap();
        assert_eq!(r.mean_rank["a"], 0.5);
        assert_eq!(r.mean_rank["b"], 1.0);
        let t = standardized_ranking(&[rec("a", "x", 1.0), rec("b", "x", 1.0)], RankBy::Loss).unwrap();
        assert_eq!(t.mean_rank["a"], 0.75);
        assert_eq!(t.mean_rank["b"], 0.75);
    }

    #[test]
    fn singletons_skipped() {
        let r = standardized_ranking(&[rec("a", "x", 1.0), rec("a", "y", 1.0), rec("b", "y", 3.0)], RankBy::Loss)
            .unwrap();
        assert_eq!(r.skipped_groups, 1);
        assert_eq!(r.mean_rank["a"], 0.5);
    }

    #[test]
    fn infinite_loss_ranks_last() {
        assert_eq!(fractional_ranks(&[f64::INFINITY, 0.0, 5.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn duplicate_forecaster_rejected() {
        assert!(standardized_ranking(&[rec("a", "x", 1.0), rec("a", "x", 2.0)], RankBy::Loss).is_err());
    }
}
