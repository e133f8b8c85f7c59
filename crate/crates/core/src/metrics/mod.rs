//! Evaluation of predicted conversation structure against gold.
//!
//! Seven scores are reported: speaker accuracy, addressee and
//! side-participant set F1, reply-link F1, and three thread-clustering
//! scores (1 - NVI, one-to-one overlap, exact-match F1).
//!
//! Role scores pool every utterance in the corpus. Thread scores depend on
//! [`Aggregation`]: `Macro` (default) averages per-clip scores with equal
//! weight, `Micro` pools the underlying counts across clips.

mod assignment;
mod report;
mod scores;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::StructureRecord;
use crate::error::{Error, Result};
use crate::stats::bootstrap::{bootstrap_multi, BootstrapConfig, Interval};
use crate::threads::{derive_threads, link_set};

pub use assignment::max_weight_assignment;
pub use report::{MetricReport, ScoreIntervals};
pub use scores::{
    align, contingency, exact_match, exact_match_count, link_f1, nvi_score, one_to_one,
    one_to_one_overlap, role_set_f1, set_f1, speaker_accuracy, variation_of_information, Prf,
};

pub const METRIC_NAMES: [&str; 7] = [
    "speaker_acc",
    "addressee_f1",
    "side_participant_f1",
    "link_f1",
    "nvi_score",
    "one_to_one",
    "exact_match_f1",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Micro,
    #[default]
    Macro,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Aggregation::Micro),
            "macro" => Ok(Aggregation::Macro),
            _ => Err(Error::invalid(format!(
                "unknown aggregation {s:?} (micro|macro)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvalConfig {
    pub aggregation: Aggregation,
    /// Exclude lines the gold marks extra-diegetic or monologue.
    pub filter_nondialogic: bool,
    pub bootstrap: Option<BootstrapConfig>,
}

/// The seven scores, as percentages in [0, 100].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub speaker_acc: f64,
    pub addressee_f1: f64,
    pub side_participant_f1: f64,
    pub link_f1: f64,
    pub nvi_score: f64,
    pub one_to_one: f64,
    pub exact_match_f1: f64,
}

impl Scores {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.speaker_acc,
            self.addressee_f1,
            self.side_participant_f1,
            self.link_f1,
            self.nvi_score,
            self.one_to_one,
            self.exact_match_f1,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Scores {
        Scores {
            speaker_acc: v[0],
            addressee_f1: v[1],
            side_participant_f1: v[2],
            link_f1: v[3],
            nvi_score: v[4],
            one_to_one: v[5],
            exact_match_f1: v[6],
        }
    }

    /// Component-wise mean.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Scores>) -> Option<Scores> {
        let mut acc = [0.0; 7];
        let mut k = 0usize;
        for s in items {
            for (a, x) in acc.iter_mut().zip(s.to_array()) {
                *a += x;
            }
            k += 1;
        }
        (k > 0).then(|| Scores::from_slice(&acc.map(|a| a / k as f64)))
    }
}

/// Sufficient statistics of one clip's evaluation, from which any
/// aggregation (and any bootstrap resample) can be computed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClipScores {
    pub clip_id: String,
    pub n_utterances: usize,
    pub speaker_hits: usize,
    pub addressee_f1_sum: f64,
    pub side_f1_sum: f64,
    pub link_tp: usize,
    pub link_pred: usize,
    pub link_gold: usize,
    /// Elements of the (possibly filtered) thread partition.
    pub n_threaded: usize,
    /// 1 - NVI as a fraction.
    pub nvi: f64,
    pub one_to_one_overlap: u64,
    pub em_matched: usize,
    pub em_pred: usize,
    pub em_gold: usize,
}

/// Scores one clip.
pub fn score_clip(
    clip_id: &str,
    gold: &[StructureRecord],
    pred: &[StructureRecord],
    filter_nondialogic: bool,
) -> Result<ClipScores> {
    let pairs = align(gold, pred).map_err(|e| Error::Coverage(format!("clip {clip_id}: {e}")))?;
    let keep: std::collections::BTreeSet<usize> = pairs
        .iter()
        .filter(|(g, _)| !(filter_nondialogic && g.is_nondialogic()))
        .map(|(g, _)| g.line_idx)
        .collect();

    let mut s = ClipScores {
        clip_id: clip_id.to_string(),
        n_utterances: 0,
        speaker_hits: 0,
        addressee_f1_sum: 0.0,
        side_f1_sum: 0.0,
        link_tp: 0,
        link_pred: 0,
        link_gold: 0,
        n_threaded: 0,
        nvi: 1.0,
        one_to_one_overlap: 0,
        em_matched: 0,
        em_pred: 0,
        em_gold: 0,
    };
    for (g, p) in pairs.iter().filter(|(g, _)| keep.contains(&g.line_idx)) {
        s.n_utterances += 1;
        s.speaker_hits += usize::from(g.speaker == p.speaker);
        s.addressee_f1_sum += set_f1(&g.addressees, &p.addressees);
        s.side_f1_sum += set_f1(&g.side_participants, &p.side_participants);
    }

    let mut gold_links = link_set(gold);
    let mut pred_links = link_set(pred);
    gold_links.retain(|l| keep.contains(&l));
    pred_links.retain(|l| keep.contains(&l));
    s.link_tp = gold_links.intersection_len(&pred_links);
    s.link_pred = pred_links.len();
    s.link_gold = gold_links.len();

    let gold_threads = derive_threads(gold).restrict(|l| keep.contains(&l));
    let pred_threads = derive_threads(pred).restrict(|l| keep.contains(&l));
    s.n_threaded = gold_threads.n();
    s.nvi = nvi_score(&gold_threads, &pred_threads)? / 100.0;
    s.one_to_one_overlap = one_to_one_overlap(&gold_threads, &pred_threads)?;
    s.em_matched = exact_match_count(&gold_threads, &pred_threads)?;
    s.em_pred = pred_threads.num_clusters();
    s.em_gold = gold_threads.num_clusters();
    Ok(s)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Aggregates per-clip statistics into corpus scores (percentages).
pub fn aggregate(units: &[&ClipScores], aggregation: Aggregation) -> Scores {
    let n_utt: usize = units.iter().map(|u| u.n_utterances).sum();
    let n = n_utt as f64;
    let speaker = ratio(
        units.iter().map(|u| u.speaker_hits).sum::<usize>() as f64,
        n,
    );
    let addr = ratio(units.iter().map(|u| u.addressee_f1_sum).sum(), n);
    let side = ratio(units.iter().map(|u| u.side_f1_sum).sum(), n);

    let threaded: Vec<&&ClipScores> = units.iter().filter(|u| u.n_threaded > 0).collect();
    let (link, nvi, o2o, em) = match aggregation {
        Aggregation::Macro => {
            let k = threaded.len() as f64;
            let mean =
                |f: &dyn Fn(&ClipScores) -> f64| ratio(threaded.iter().map(|u| f(u)).sum(), k);
            (
                mean(&|u| Prf::from_counts(u.link_tp, u.link_pred, u.link_gold).f1),
                mean(&|u| u.nvi),
                mean(&|u| u.one_to_one_overlap as f64 / u.n_threaded as f64),
                mean(&|u| Prf::from_counts(u.em_matched, u.em_pred, u.em_gold).f1),
            )
        }
        Aggregation::Micro => {
            let sum =
                |f: &dyn Fn(&ClipScores) -> usize| threaded.iter().map(|u| f(u)).sum::<usize>();
            let total = sum(&|u| u.n_threaded) as f64;
            (
                Prf::from_counts(
                    sum(&|u| u.link_tp),
                    sum(&|u| u.link_pred),
                    sum(&|u| u.link_gold),
                )
                .f1,
                ratio(
                    threaded.iter().map(|u| u.nvi * u.n_threaded as f64).sum(),
                    total,
                ),
                ratio(
                    threaded.iter().map(|u| u.one_to_one_overlap as f64).sum(),
                    total,
                ),
                Prf::from_counts(
                    sum(&|u| u.em_matched),
                    sum(&|u| u.em_pred),
                    sum(&|u| u.em_gold),
                )
                .f1,
            )
        }
    };
    Scores::from_slice(&[speaker, addr, side, link, nvi, o2o, em].map(|x| 100.0 * x))
}

/// Scores every clip in `gold` against `pred`. Both must cover the same
/// clip ids; clips are processed in sorted id order.
pub fn evaluate_corpus(
    gold: &BTreeMap<String, Vec<StructureRecord>>,
    pred: &BTreeMap<String, Vec<StructureRecord>>,
    config: &EvalConfig,
) -> Result<MetricReport> {
    if gold.keys().ne(pred.keys()) {
        let missing: Vec<_> = gold.keys().filter(|k| !pred.contains_key(*k)).collect();
        let extra: Vec<_> = pred.keys().filter(|k| !gold.contains_key(*k)).collect();
        return Err(Error::Coverage(format!(
            "clip sets differ: missing from prediction {missing:?}, not in gold {extra:?}"
        )));
    }
    let units = gold
        .iter()
        .map(|(id, g)| score_clip(id, g, &pred[id], config.filter_nondialogic))
        .collect::<Result<Vec<_>>>()?;
    report_from_units(&units, config)
}

pub fn report_from_units(units: &[ClipScores], config: &EvalConfig) -> Result<MetricReport> {
    let refs: Vec<&ClipScores> = units.iter().collect();
    let scores = aggregate(&refs, config.aggregation);
    let ci = match &config.bootstrap {
        Some(b) => {
            let intervals: Vec<Interval> = bootstrap_multi(
                units,
                |sample| aggregate(sample, config.aggregation).to_array().to_vec(),
                b,
            )?;
            Some(ScoreIntervals::from_intervals(&intervals))
        }
        None => None,
    };
    Ok(MetricReport {
        scores,
        ci,
        n_utterances: units.iter().map(|u| u.n_utterances).sum(),
        n_clips: units.len(),
        aggregation: config.aggregation,
        filter_nondialogic: config.filter_nondialogic,
    })
}
