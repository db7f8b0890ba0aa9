//! CSV ingestion of quantile forecasts and targets, and the scoring pipeline
//! that turns them into ranked records.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::forecasts::{quantile_to_distribution, validate_quantiles, Forecast, ForecastMeta, QuantileForecast, ValidQuantiles};
use crate::harness::ranking::ScoredRecord;
use crate::harness::standardize::Standardizer;
use crate::scoring::{score, LossSpec};

/// A record refused at ingestion, with a machine-readable reason code.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRecord {
    pub source: &'static str,
    pub meta: ForecastMeta,
    pub reason: String,
    pub detail: String,
}

impl RejectedRecord {
    pub const CSV_HEADER: &'static str = "source,forecaster,location,date,horizon,reason,detail";

    fn new(source: &'static str, meta: ForecastMeta, reason: &str, detail: String) -> Self {
        RejectedRecord {
            source,
            meta,
            reason: reason.to_string(),
            detail,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ForecastRow {
    forecaster: String,
    location: String,
    date: String,
    horizon: String,
    level: String,
    value: String,
}

#[derive(Debug, Deserialize)]
struct TargetRow {
    location: String,
    date: String,
    horizon: String,
    observed: String,
}

fn reader(path: &Path, required: &[&str]) -> Result<csv::Reader<File>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    for col in required {
        if !headers.iter().any(|h| h == *col) {
            return Err(Error::Data(format!("{}: missing column `{col}`", path.display())));
        }
    }
    Ok(rdr)
}

fn valid_date(d: &str) -> bool {
    NaiveDate::parse_from_str(d, "%Y-%m-%d").is_ok()
}

/// Reads `forecaster,location,date,horizon,level,value` rows, grouping them
/// into one quantile forecast per (forecaster, location, date, horizon).
/// Forecasts with unparsable rows, atoms or crossings are rejected whole.
pub fn read_forecasts(path: &Path) -> Result<(Vec<ValidQuantiles>, Vec<RejectedRecord>)> {
    let mut rdr = reader(path, &["forecaster", "location", "date", "horizon", "level", "value"])?;
    let mut groups: BTreeMap<ForecastMeta, Vec<(f64, f64)>> = BTreeMap::new();
    let mut broken: BTreeMap<ForecastMeta, (String, String)> = BTreeMap::new();
    for row in rdr.deserialize::<ForecastRow>() {
        let row = row?;
        let meta = ForecastMeta {
            forecaster: row.forecaster,
            location: row.location,
            date: row.date,
            horizon: row.horizon,
        };
        if !valid_date(&meta.date) {
            broken
                .entry(meta.clone())
                .or_insert_with(|| ("bad_date".into(), format!("`{}` is not an ISO-8601 date", meta.date)));
        }
        match (row.level.parse::<f64>(), row.value.parse::<f64>()) {
            (Ok(l), Ok(v)) => groups.entry(meta).or_default().push((l, v)),
            _ => {
                broken.entry(meta.clone()).or_insert_with(|| {
                    ("parse_error".into(), format!("level `{}`, value `{}`", row.level, row.value))
                });
                groups.entry(meta).or_default();
            }
        }
    }
    let mut ok = Vec::new();
    let mut rejected = Vec::new();
    for (meta, mut pts) in groups {
        if let Some((reason, detail)) = broken.remove(&meta) {
            rejected.push(RejectedRecord::new("forecast", meta, &reason, detail));
            continue;
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let q = QuantileForecast::new(pts.iter().map(|p| p.0).collect(), pts.iter().map(|p| p.1).collect())
            .with_meta(meta.clone());
        match validate_quantiles(q) {
            Ok(v) => ok.push(v),
            Err(r) => rejected.push(RejectedRecord::new("forecast", meta, r.code(), r.to_string())),
        }
    }
    Ok((ok, rejected))
}

pub type TargetKey = (String, String, String);

/// Reads `location,date,horizon,observed` rows.
pub fn read_targets(path: &Path) -> Result<(BTreeMap<TargetKey, f64>, Vec<RejectedRecord>)> {
    let mut rdr = reader(path, &["location", "date", "horizon", "observed"])?;
    let mut out = BTreeMap::new();
    let mut rejected = Vec::new();
    for row in rdr.deserialize::<TargetRow>() {
        let row = row?;
        let meta = ForecastMeta {
            forecaster: String::new(),
            location: row.location.clone(),
            date: row.date.clone(),
            horizon: row.horizon.clone(),
        };
        if !valid_date(&row.date) {
            rejected.push(RejectedRecord::new("target", meta, "bad_date", row.date.clone()));
            continue;
        }
        match row.observed.parse::<f64>() {
            Ok(y) if y.is_finite() => {
                if out.insert((row.location, row.date, row.horizon), y).is_some() {
                    rejected.push(RejectedRecord::new("target", meta, "duplicate", "repeated target".into()));
                }
            }
            _ => rejected.push(RejectedRecord::new("target", meta, "parse_error", row.observed)),
        }
    }
    Ok((out, rejected))
}

/// Replaces each target by its standardized value, series by series: one
/// series per (location, horizon), ordered by date.
pub fn standardize_target_map(
    targets: &BTreeMap<TargetKey, f64>,
    standardizer: &dyn Standardizer,
) -> Result<BTreeMap<TargetKey, f64>> {
    let mut series: BTreeMap<(&str, &str), Vec<(&str, f64)>> = BTreeMap::new();
    for ((loc, date, h), y) in targets {
        series.entry((loc.as_str(), h.as_str())).or_default().push((date.as_str(), *y));
    }
    let mut out = BTreeMap::new();
    for ((loc, h), pts) in series {
        // BTreeMap order already sorts ISO dates chronologically.
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let z = standardizer.standardize(&ys)?;
        for ((date, _), v) in pts.iter().zip(z.values) {
            out.insert((loc.to_string(), date.to_string(), h.to_string()), v);
        }
    }
    Ok(out)
}

/// A quantile forecast converted to a density and paired with its outcome.
#[derive(Debug, Clone)]
pub struct Paired {
    pub meta: ForecastMeta,
    pub forecast: Forecast,
    pub observed: f64,
}

/// Converts each forecast to its tail-extended density and attaches the
/// matching target; forecasts without a target or with degenerate spacing are
/// rejected.
pub fn pair_forecasts(
    forecasts: &[ValidQuantiles],
    targets: &BTreeMap<TargetKey, f64>,
) -> (Vec<Paired>, Vec<RejectedRecord>) {
    let mut pairs = Vec::new();
    let mut rejected = Vec::new();
    for q in forecasts {
        let meta = q.inner().meta.clone();
        let key = (meta.location.clone(), meta.date.clone(), meta.horizon.clone());
        let Some(&y) = targets.get(&key) else {
            rejected.push(RejectedRecord::new("forecast", meta, "missing_target", String::new()));
            continue;
        };
        match quantile_to_distribution(q) {
            Ok(d) => pairs.push(Paired {
                meta,
                forecast: d.into(),
                observed: y,
            }),
            Err(e) => rejected.push(RejectedRecord::new("forecast", meta, "degenerate_spacing", e.to_string())),
        }
    }
    (pairs, rejected)
}

/// Scores every pair under every loss, in parallel, preserving input order.
pub fn score_pairs(pairs: &[Paired], specs: &[LossSpec]) -> Result<Vec<(String, Vec<ScoredRecord>)>> {
    specs
        .iter()
        .map(|spec| {
            let records = pairs
                .par_iter()
                .map(|p| {
                    let loss = score(spec, &p.forecast, p.observed)?;
                    let variance = p.forecast.law().map_or(f64::NAN, |l| l.variance());
                    Ok(ScoredRecord {
                        forecaster: p.meta.forecaster.clone(),
                        location: p.meta.location.clone(),
                        date: p.meta.date.clone(),
                        horizon: p.meta.horizon.clone(),
                        loss,
                        variance,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((spec.tag(), records))
        })
        .collect()
}

/// Reads `unit,kind,value` rows, kind being `forecast` or `observed`.
pub fn read_dispersion_samples(path: &Path) -> Result<BTreeMap<String, (Vec<f64>, Vec<f64>)>> {
    #[derive(Deserialize)]
    struct Row {
        unit: String,
        kind: String,
        value: f64,
    }
    let mut rdr = reader(path, &["unit", "kind", "value"])?;
    let mut out: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        let e = out.entry(row.unit).or_default();
        match row.kind.as_str() {
            "forecast" => e.0.push(row.value),
            "observed" => e.1.push(row.value),
            other => return Err(Error::Data(format!("unknown sample kind `{other}`"))),
        }
    }
    Ok(out)
}

/// Writes a header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_rejected(path: &Path, rejected: &[RejectedRecord]) -> Result<()> {
    write_csv(
        path,
        RejectedRecord::CSV_HEADER,
        rejected.iter().map(|r| {
            [
                r.source,
                &r.meta.forecaster,
                &r.meta.location,
                &r.meta.date,
                &r.meta.horizon,
                &r.reason,
                &r.detail,
            ]
            .iter()
            .map(|s| csv_field(s))
            .collect::<Vec<_>>()
            .join(",")
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn forecasts_grouped_and_rejected() {
        let mut csv = String::from("forecaster,location,date,horizon,level,value\n");
        for (l, v) in [(0.1, -1.0), (0.5, 0.0), (0.9, 1.0), (0.25, -0.5), (0.75, 0.5)] {
            csv += &format!("good,US,2021-01-02,1,{l},{v}\n");
        }
        for (l, v) in [(0.1, -1.0), (0.25, 0.0), (0.5, 0.0), (0.9, 1.0)] {
            csv += &format!("atom,US,2021-01-02,1,{l},{v}\n");
        }
        csv += "bad,US,2021-13-40,1,0.5,0\n";
        let f = file(&csv);
        let (ok, rej) = read_forecasts(f.path()).unwrap();
        assert_eq!(ok.len(), 1);
        assert_eq!(ok[0].inner().levels, vec![0.1, 0.25, 0.5, 0.75, 0.9]);
        let reasons: Vec<&str> = rej.iter().map(|r| r.reason.as_str()).collect();
        assert_eq!(reasons, vec!["atom", "bad_date"]);
    }

    #[test]
    fn missing_column_is_data_error() {
        let f = file("location,date,observed\nUS,2021-01-02,3\n");
        assert!(matches!(read_targets(f.path()), Err(Error::Data(_))));
    }

    #[test]
    fn targets_and_pairing() {
        let t = file("location,date,horizon,observed\nUS,2021-01-02,1,0.3\nUS,2021-01-09,1,x\n");
        let (targets, rej) = read_targets(t.path()).unwrap();
        assert_eq!(targets.len(), 1);
        assert_eq!(rej[0].reason, "parse_error");
        let q = QuantileForecast::new(vec![0.1, 0.25, 0.5, 0.75, 0.9], vec![-1.0, -0.5, 0.0, 0.5, 1.0]).with_meta(
            ForecastMeta {
                forecaster: "a".into(),
                location: "US".into(),
                date: "2021-01-02".into(),
                horizon: "1".into(),
            },
        );
        let (pairs, rej) = pair_forecasts(&[validate_quantiles(q).unwrap()], &targets);
        assert!(rej.is_empty());
        assert_eq!(pairs[0].observed, 0.3);
        let scored = score_pairs(&pairs, &[LossSpec::Crps]).unwrap();
        assert!(scored[0].1[0].loss > 0.0);
    }
}
