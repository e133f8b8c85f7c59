//! Clip-level feature tables and their rank correlations with scores.

use serde::Serialize;

use super::correlation::{signed_rank_variance, spearman};
use crate::error::{Error, Result};

/// Columns treated as outcomes when no targets are given.
pub const DEFAULT_TARGETS: [&str; 3] = ["f1_speaker", "f1_addressee", "f1_side"];

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    /// Numeric column names, excluding `clip_id`.
    pub columns: Vec<String>,
    pub clip_ids: Vec<String>,
    /// Row-major values, one row per clip.
    pub values: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.values.iter().map(|r| r[k]).collect())
    }
}

pub fn parse_feature_csv(bytes: &[u8]) -> Result<FeatureTable> {
    let context = "feature table".to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = rdr.headers().map_err(|e| Error::Parse {
        context: context.clone(),
        row: 0,
        message: e.to_string(),
    })?;
    if header.get(0) != Some("clip_id") {
        return Err(Error::Parse {
            context,
            row: 0,
            message: "first column must be clip_id".into(),
        });
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut clip_ids = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            context: context.clone(),
            row,
            message: e.to_string(),
        })?;
        let mut vals = Vec::with_capacity(columns.len());
        for (name, field) in columns.iter().zip(rec.iter().skip(1)) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                context: context.clone(),
                row,
                message: format!("column {name}: {field:?} is not a number"),
            })?;
            vals.push(v);
        }
        clip_ids.push(rec[0].to_string());
        values.push(vals);
    }
    Ok(FeatureTable {
        columns,
        clip_ids,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureCorrelation {
    pub feature: String,
    pub target: String,
    pub rho: f64,
    pub p: f64,
    /// `sign(rho) * rho^2 * 100`
    pub signed_r2: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub results: Vec<FeatureCorrelation>,
    /// Feature/target pairs that could not be correlated, with the reason.
    pub skipped: Vec<(String, String, String)>,
}

/// Spearman correlation of every non-target column against every target.
pub fn correlate_features(table: &FeatureTable, targets: &[&str]) -> Result<CorrelationReport> {
    for t in targets {
        if !table.columns.iter().any(|c| c == t) {
            return Err(Error::invalid(format!(
                "feature table has no target column {t}"
            )));
        }
    }
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for t in targets {
        let y = table.column(t).expect("checked");
        for f in table
            .columns
            .iter()
            .filter(|c| !targets.contains(&c.as_str()))
        {
            let x = table.column(f).expect("own column");
            match spearman(&x, &y) {
                Ok(c) => results.push(FeatureCorrelation {
                    feature: f.clone(),
                    target: t.to_string(),
                    rho: c.rho,
                    p: c.p,
                    signed_r2: signed_rank_variance(c.rho),
                    n: c.n,
                }),
                Err(e) => skipped.push((f.clone(), t.to_string(), e.to_string())),
            }
        }
    }
    Ok(CorrelationReport { results, skipped })
}
