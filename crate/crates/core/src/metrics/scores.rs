//! Per-utterance and per-clip scoring primitives.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;

use super::assignment::max_weight_assignment;
use crate::corpus::{Participant, ParticipantKind, StructureRecord};
use crate::error::{Error, Result};
use crate::threads::{LinkSet, ThreadPartition};

/// Precision, recall and their harmonic mean, as fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// From a true-positive count and the predicted/gold totals. Both
    /// totals zero is a perfect (vacuous) score; a single zero total gives 0.
    pub fn from_counts(tp: usize, n_pred: usize, n_gold: usize) -> Prf {
        if n_pred == 0 && n_gold == 0 {
            return Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let precision = if n_pred == 0 {
            0.0
        } else {
            tp as f64 / n_pred as f64
        };
        let recall = if n_gold == 0 {
            0.0
        } else {
            tp as f64 / n_gold as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

fn by_line<'a>(
    records: &'a [StructureRecord],
    what: &str,
) -> Result<BTreeMap<usize, &'a StructureRecord>> {
    let mut m = BTreeMap::new();
    for r in records {
        if m.insert(r.line_idx, r).is_some() {
            return Err(Error::Coverage(format!(
                "{what} has line {} twice",
                r.line_idx
            )));
        }
    }
    Ok(m)
}

/// Pairs gold and predicted records by line; both must cover the same lines.
pub fn align<'a>(
    gold: &'a [StructureRecord],
    pred: &'a [StructureRecord],
) -> Result<Vec<(&'a StructureRecord, &'a StructureRecord)>> {
    let g = by_line(gold, "gold")?;
    let p = by_line(pred, "prediction")?;
    if g.len() != p.len() || g.keys().zip(p.keys()).any(|(a, b)| a != b) {
        let gs: BTreeSet<_> = g.keys().collect();
        let ps: BTreeSet<_> = p.keys().collect();
        let missing: Vec<_> = gs.difference(&ps).collect();
        let extra: Vec<_> = ps.difference(&gs).collect();
        return Err(Error::Coverage(format!(
            "prediction lacks lines {missing:?} and has extra lines {extra:?}"
        )));
    }
    Ok(g.into_values().zip(p.into_values()).collect())
}

/// Fraction of lines whose predicted speaker equals the gold speaker.
pub fn speaker_accuracy(gold: &[StructureRecord], pred: &[StructureRecord]) -> Result<f64> {
    let pairs = align(gold, pred)?;
    if pairs.is_empty() {
        return Ok(1.0);
    }
    let hits = pairs.iter().filter(|(g, p)| g.speaker == p.speaker).count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Per-utterance set F1. The explicit `none` token is treated as the empty
/// set; both empty scores 1 and exactly one empty scores 0.
pub fn set_f1(gold: &BTreeSet<Participant>, pred: &BTreeSet<Participant>) -> f64 {
    let real = |s: &BTreeSet<Participant>| -> usize {
        s.iter()
            .filter(|p| p.kind() != ParticipantKind::None)
            .count()
    };
    let (ng, np) = (real(gold), real(pred));
    let tp = gold
        .intersection(pred)
        .filter(|p| p.kind() != ParticipantKind::None)
        .count();
    Prf::from_counts(tp, np, ng).f1
}

/// Macro average of per-utterance set F1 over aligned set lists.
pub fn role_set_f1(
    gold_sets: &[BTreeSet<Participant>],
    pred_sets: &[BTreeSet<Participant>],
) -> Result<f64> {
    if gold_sets.len() != pred_sets.len() {
        return Err(Error::Coverage(format!(
            "{} gold sets vs {} predicted sets",
            gold_sets.len(),
            pred_sets.len()
        )));
    }
    if gold_sets.is_empty() {
        return Ok(1.0);
    }
    let sum: f64 = gold_sets
        .iter()
        .zip(pred_sets)
        .map(|(g, p)| set_f1(g, p))
        .sum();
    Ok(sum / gold_sets.len() as f64)
}

/// Binary-classification score over exact (child, parent) pairs.
pub fn link_f1(gold: &LinkSet, pred: &LinkSet) -> Prf {
    Prf::from_counts(gold.intersection_len(pred), pred.len(), gold.len())
}

fn check_same_elements(gold: &ThreadPartition, pred: &ThreadPartition) -> Result<()> {
    if gold.n() != pred.n() || gold.elements() != pred.elements() {
        return Err(Error::ElementMismatch(format!(
            "gold has {} elements, prediction has {}",
            gold.n(),
            pred.n()
        )));
    }
    Ok(())
}

/// Contingency counts `M[i][j] = |gold_i ∩ pred_j|`.
pub fn contingency(gold: &ThreadPartition, pred: &ThreadPartition) -> Vec<Vec<u64>> {
    let mut label = BTreeMap::new();
    for (j, c) in pred.clusters().iter().enumerate() {
        for &x in c {
            label.insert(x, j);
        }
    }
    gold.clusters()
        .iter()
        .map(|c| {
            let mut row = vec![0u64; pred.num_clusters()];
            for x in c {
                row[label[x]] += 1;
            }
            row
        })
        .collect()
}

/// Variation of information in bits.
pub fn variation_of_information(gold: &ThreadPartition, pred: &ThreadPartition) -> Result<f64> {
    check_same_elements(gold, pred)?;
    let n = gold.n() as f64;
    if gold.n() == 0 {
        return Ok(0.0);
    }
    let m = contingency(gold, pred);
    let row: Vec<u64> = m.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<u64> = (0..pred.num_clusters())
        .map(|j| m.iter().map(|r| r[j]).sum())
        .collect();
    // Summed as H(C|C') + H(C'|C) so identical partitions give exactly zero.
    let mut vi = 0.0;
    for (i, r) in m.iter().enumerate() {
        for (j, &nij) in r.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                vi += nij / n * ((row[i] as f64 / nij).log2() + (col[j] as f64 / nij).log2());
            }
        }
    }
    Ok(vi.max(0.0))
}

/// `100 * (1 - VI / log2 n)`, clamped to [0, 100]; 100 when n <= 1.
pub fn nvi_score(gold: &ThreadPartition, pred: &ThreadPartition) -> Result<f64> {
    let vi = variation_of_information(gold, pred)?;
    if gold.n() <= 1 {
        return Ok(100.0);
    }
    Ok((100.0 * (1.0 - vi / (gold.n() as f64).log2())).clamp(0.0, 100.0))
}

/// Largest total overlap achievable by a one-to-one cluster pairing.
pub fn one_to_one_overlap(gold: &ThreadPartition, pred: &ThreadPartition) -> Result<u64> {
    check_same_elements(gold, pred)?;
    Ok(max_weight_assignment(&contingency(gold, pred)).1)
}

/// One-to-one overlap as a percentage of all elements.
pub fn one_to_one(gold: &ThreadPartition, pred: &ThreadPartition) -> Result<f64> {
    let overlap = one_to_one_overlap(gold, pred)?;
    if gold.n() == 0 {
        return Ok(100.0);
    }
    Ok(100.0 * overlap as f64 / gold.n() as f64)
}

/// Number of gold clusters reproduced exactly by some predicted cluster.
pub fn exact_match_count(gold: &ThreadPartition, pred: &ThreadPartition) -> Result<usize> {
    check_same_elements(gold, pred)?;
    let predicted: HashSet<&[usize]> = pred.clusters().iter().map(Vec::as_slice).collect();
    Ok(gold
        .clusters()
        .iter()
        .filter(|c| predicted.contains(c.as_slice()))
        .count())
}

pub fn exact_match(gold: &ThreadPartition, pred: &ThreadPartition) -> Result<Prf> {
    let matched = exact_match_count(gold, pred)?;
    Ok(Prf::from_counts(
        matched,
        pred.num_clusters(),
        gold.num_clusters(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::normalize_name;
    use approx::assert_abs_diff_eq;

    fn part(c: &[&[usize]]) -> ThreadPartition {
        ThreadPartition::from_clusters(c.iter().map(|x| x.to_vec()).collect()).unwrap()
    }

    fn names(n: &[&str]) -> BTreeSet<Participant> {
        n.iter().map(|x| normalize_name(x).unwrap()).collect()
    }

    fn speakers(s: &[&str]) -> Vec<StructureRecord> {
        s.iter()
            .enumerate()
            .map(|(i, n)| StructureRecord::new(i + 1, normalize_name(n).unwrap(), i + 1))
            .collect()
    }

    #[test]
    fn speaker_acc() {
        let g = speakers(&["a", "b", "a", "b"]);
        assert_eq!(speaker_accuracy(&g, &g).unwrap(), 1.0);
        assert_eq!(
            speaker_accuracy(&g, &speakers(&["a", "b", "b", "b"])).unwrap(),
            0.75
        );
        let g = speakers(&["sheldon cooper"]);
        assert_eq!(
            speaker_accuracy(&g, &speakers(&["Sheldon Cooper"])).unwrap(),
            1.0
        );
        assert!(speaker_accuracy(&g, &speakers(&["a", "b"])).is_err());
    }

    #[test]
    fn set_scores() {
        assert_eq!(set_f1(&names(&["penny"]), &names(&["penny"])), 1.0);
        assert_abs_diff_eq!(
            set_f1(&names(&["sheldon", "amy"]), &names(&["amy"])),
            2.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(set_f1(&names(&[]), &names(&[])), 1.0);
        assert_eq!(set_f1(&names(&["a"]), &names(&[])), 0.0);
        assert_eq!(set_f1(&names(&["none"]), &names(&[])), 1.0);
        assert!(role_set_f1(&[names(&[])], &[]).is_err());
    }

    #[test]
    fn links() {
        let g: LinkSet = [(12, 11), (14, 13)].into_iter().collect();
        assert_eq!(link_f1(&g, &g).f1, 1.0);
        let g: LinkSet = [(2, 1), (3, 2)].into_iter().collect();
        let p: LinkSet = [(2, 1), (3, 1)].into_iter().collect();
        let s = link_f1(&g, &p);
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
        let g: LinkSet = [(2, 1)].into_iter().collect();
        assert_eq!(link_f1(&g, &LinkSet::new()).f1, 0.0);
        assert_eq!(link_f1(&LinkSet::new(), &LinkSet::new()).f1, 1.0);
    }

    #[test]
    fn nvi_examples() {
        let g = part(&[&[1, 2], &[3, 4]]);
        assert_eq!(nvi_score(&g, &g).unwrap(), 100.0);
        assert_abs_diff_eq!(
            nvi_score(&g, &part(&[&[1, 2, 3, 4]])).unwrap(),
            50.0,
            epsilon = 1e-12
        );
        let singles = part(&[&[1], &[2], &[3], &[4]]);
        assert_abs_diff_eq!(
            nvi_score(&singles, &part(&[&[1, 2, 3, 4]])).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_eq!(nvi_score(&part(&[&[1]]), &part(&[&[1]])).unwrap(), 100.0);
        assert!(nvi_score(&g, &part(&[&[1, 2, 3]])).is_err());
    }

    #[test]
    fn one_to_one_examples() {
        let g = part(&[&[1, 2], &[3, 4]]);
        assert_eq!(one_to_one(&g, &g).unwrap(), 100.0);
        assert_eq!(one_to_one(&g, &part(&[&[1, 2, 3], &[4]])).unwrap(), 75.0);
        assert_eq!(
            one_to_one(&part(&[&[1, 2, 3, 4]]), &part(&[&[1], &[2], &[3], &[4]])).unwrap(),
            25.0
        );
        assert!(one_to_one(&g, &part(&[&[1, 2, 5, 4]])).is_err());
    }

    #[test]
    fn exact_match_examples() {
        let g = part(&[&[1, 2], &[3, 4]]);
        assert_eq!(exact_match(&g, &g).unwrap().f1, 1.0);
        let s = exact_match(&g, &part(&[&[1, 2], &[3], &[4]])).unwrap();
        assert_abs_diff_eq!(s.precision, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.recall, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.f1, 0.4, epsilon = 1e-15);
        assert_eq!(
            exact_match(&part(&[&[1, 2, 3]]), &part(&[&[1], &[2, 3]]))
                .unwrap()
                .f1,
            0.0
        );
    }
}
