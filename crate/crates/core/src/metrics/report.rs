use serde::Serialize;
use serde_json::{json, Value};

use super::{Aggregation, Scores, METRIC_NAMES};
use crate::stats::bootstrap::Interval;

/// Lower/upper percentile bounds per metric, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScoreIntervals {
    pub lo: Scores,
    pub hi: Scores,
}

impl ScoreIntervals {
    pub fn from_intervals(iv: &[Interval]) -> Self {
        let lo: Vec<f64> = iv.iter().map(|i| i.lo).collect();
        let hi: Vec<f64> = iv.iter().map(|i| i.hi).collect();
        ScoreIntervals {
            lo: Scores::from_slice(&lo),
            hi: Scores::from_slice(&hi),
        }
    }

    pub fn to_intervals(&self) -> Vec<Interval> {
        self.lo
            .to_array()
            .iter()
            .zip(self.hi.to_array())
            .map(|(&lo, hi)| Interval {
                point: f64::NAN,
                lo,
                hi,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub scores: Scores,
    pub ci: Option<ScoreIntervals>,
    pub n_utterances: usize,
    pub n_clips: usize,
    pub aggregation: Aggregation,
    pub filter_nondialogic: bool,
}

/// Rounds to two decimals for display-oriented fields.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn rounded_scores(s: &Scores) -> Value {
    let mut m = serde_json::Map::new();
    for (k, v) in METRIC_NAMES.iter().zip(s.to_array()) {
        m.insert((*k).to_string(), json!(round2(v)));
    }
    Value::Object(m)
}

fn raw_scores(s: &Scores) -> Value {
    serde_json::to_value(s).expect("scores serialize")
}

fn ci_value(ci: &ScoreIntervals, round: bool) -> Value {
    let f = |x: f64| if round { round2(x) } else { x };
    let mut m = serde_json::Map::new();
    for ((k, lo), hi) in METRIC_NAMES
        .iter()
        .zip(ci.lo.to_array())
        .zip(ci.hi.to_array())
    {
        m.insert((*k).to_string(), json!([f(lo), f(hi)]));
    }
    Value::Object(m)
}

impl MetricReport {
    /// JSON view: two-decimal percentages up front, full precision under
    /// `raw`. Keys keep a fixed order.
    pub fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        m.insert("scores".into(), rounded_scores(&self.scores));
        if let Some(ci) = &self.ci {
            m.insert("ci".into(), ci_value(ci, true));
        }
        m.insert("n_utterances".into(), json!(self.n_utterances));
        m.insert("n_clips".into(), json!(self.n_clips));
        m.insert("aggregation".into(), json!(self.aggregation));
        m.insert("filter_nondialogic".into(), json!(self.filter_nondialogic));
        let mut raw = serde_json::Map::new();
        raw.insert("scores".into(), raw_scores(&self.scores));
        if let Some(ci) = &self.ci {
            raw.insert("ci".into(), ci_value(ci, false));
        }
        m.insert("raw".into(), Value::Object(raw));
        Value::Object(m)
    }

    /// Fixed-width table with one row per metric.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<22}{:>10}{:>22}\n",
            "metric", "score", "95% CI"
        ));
        let his = self.ci.map(|c| (c.lo.to_array(), c.hi.to_array()));
        for (i, (name, v)) in METRIC_NAMES.iter().zip(self.scores.to_array()).enumerate() {
            let ci = match &his {
                Some((lo, hi)) => format!("[{:.2}--{:.2}]", lo[i], hi[i]),
                None => "-".to_string(),
            };
            out.push_str(&format!("{name:<22}{v:>10.2}{ci:>22}\n"));
        }
        out.push_str(&format!(
            "{} utterances in {} clips ({:?} thread aggregation)\n",
            self.n_utterances, self.n_clips, self.aggregation
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_key_order_and_rounding() {
        let s = Scores::from_slice(&[34.6666, 19.49, 36.98, 92.674, 83.34, 76.2, 31.93]);
        let r = MetricReport {
            scores: s,
            ci: None,
            n_utterances: 10,
            n_clips: 2,
            aggregation: Aggregation::Macro,
            filter_nondialogic: false,
        };
        let text = serde_json::to_string(&r.to_json()).unwrap();
        assert!(
            text.starts_with(r#"{"scores":{"speaker_acc":34.67,"addressee_f1":19.49"#),
            "{text}"
        );
        assert!(text.contains(r#""raw":{"scores":{"speaker_acc":34.6666"#));
        assert!(r.to_table().contains("link_f1"));
    }
}
