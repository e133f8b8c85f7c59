//! Inter-annotator agreement as the mean of pairwise metric comparisons.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::StructureRecord;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_corpus, Aggregation, EvalConfig, Scores};

/// One annotator's records, keyed by clip id.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatorBatch {
    pub annotator_id: String,
    pub records_by_clip: BTreeMap<String, Vec<StructureRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairAgreement {
    pub a: String,
    pub b: String,
    pub shared_clips: usize,
    /// Mean of the a-as-gold and b-as-gold evaluations.
    pub scores: Scores,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementReport {
    pub overall: Scores,
    pub per_pair: Vec<PairAgreement>,
    /// Pairs skipped for lack of shared clips.
    pub skipped: Vec<(String, String)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AgreementConfig {
    pub aggregation: Aggregation,
    pub filter_nondialogic: bool,
}

fn shared(
    a: &AnnotatorBatch,
    b: &AnnotatorBatch,
) -> (
    BTreeMap<String, Vec<StructureRecord>>,
    BTreeMap<String, Vec<StructureRecord>>,
) {
    let mut ga = BTreeMap::new();
    let mut gb = BTreeMap::new();
    for (clip, ra) in &a.records_by_clip {
        if let Some(rb) = b.records_by_clip.get(clip) {
            ga.insert(clip.clone(), ra.clone());
            gb.insert(clip.clone(), rb.clone());
        }
    }
    (ga, gb)
}

/// Evaluates every unordered annotator pair in both directions, averages
/// the two directions, then averages over pairs with equal weight.
pub fn pairwise_agreement(
    batches: &[AnnotatorBatch],
    config: AgreementConfig,
) -> Result<AgreementReport> {
    if batches.len() < 2 {
        return Err(Error::invalid("agreement needs at least two annotators"));
    }
    let mut ids: Vec<&str> = batches.iter().map(|b| b.annotator_id.as_str()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("duplicate annotator id"));
    }
    let mut order: Vec<&AnnotatorBatch> = batches.iter().collect();
    order.sort_by(|x, y| x.annotator_id.cmp(&y.annotator_id));

    let eval = EvalConfig {
        aggregation: config.aggregation,
        filter_nondialogic: config.filter_nondialogic,
        bootstrap: None,
    };
    let mut per_pair = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            let (a, b) = (order[i], order[j]);
            let (ra, rb) = shared(a, b);
            if ra.is_empty() {
                skipped.push((a.annotator_id.clone(), b.annotator_id.clone()));
                continue;
            }
            let ab = evaluate_corpus(&ra, &rb, &eval)?;
            let ba = evaluate_corpus(&rb, &ra, &eval)?;
            per_pair.push(PairAgreement {
                a: a.annotator_id.clone(),
                b: b.annotator_id.clone(),
                shared_clips: ra.len(),
                scores: Scores::mean([&ab.scores, &ba.scores]).expect("two directions"),
            });
        }
    }
    let overall = Scores::mean(per_pair.iter().map(|p| &p.scores))
        .ok_or_else(|| Error::invalid("no annotator pair shares any clip"))?;
    Ok(AgreementReport {
        overall,
        per_pair,
        skipped,
    })
}
