//! Weighted log-odds with an informative Dirichlet prior, stratified by
//! show and combined with Stouffer's method.
//!
//! For term `t` in show `s`, with prior counts `alpha_t = C * p_t` from the
//! pooled background frequency `p_t` and `alpha_0 = C`:
//!
//! ```text
//! delta = ln((y_a + alpha_t) / (n_a + alpha_0 - y_a - alpha_t))
//!       - ln((y_b + alpha_t) / (n_b + alpha_0 - y_b - alpha_t))
//! sigma2 = 1 / (y_a + alpha_t) + 1 / (y_b + alpha_t)
//! zeta = delta / sqrt(sigma2)
//! ```
//!
//! The prior strength `C` is calibrated by permuting document group labels
//! within each show and picking the grid value whose null z-scores have a
//! standard deviation closest to one.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::bootstrap::stream_rng;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Group {
    A,
    B,
}

/// Lowercased word tokens. Apostrophes are kept only between letters or
/// digits, so `I've` becomes `i've` while quoted words lose their quotes.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text
        .chars()
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if c == '\''
            && !cur.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            cur.push('\'');
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Per-show, per-group term counts plus pooled background frequencies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermCounts {
    pub terms: Vec<String>,
    pub shows: Vec<ShowCounts>,
    /// Sums to 1 over `terms`.
    pub background: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShowCounts {
    pub show_id: String,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
}

impl ShowCounts {
    pub fn total_a(&self) -> u64 {
        self.a.iter().sum()
    }

    pub fn total_b(&self) -> u64 {
        self.b.iter().sum()
    }
}

impl TermCounts {
    /// Builds counts from per-show `(show_id, group a counts, group b counts)`
    /// and derives background frequencies from the pooled totals.
    pub fn new(terms: Vec<String>, shows: Vec<(String, Vec<u64>, Vec<u64>)>) -> Result<Self> {
        let v = terms.len();
        let mut pooled = vec![0u64; v];
        let mut out = Vec::with_capacity(shows.len());
        for (show_id, a, b) in shows {
            if a.len() != v || b.len() != v {
                return Err(Error::invalid(format!(
                    "show {show_id}: count vectors do not match vocabulary size {v}"
                )));
            }
            for t in 0..v {
                pooled[t] += a[t] + b[t];
            }
            out.push(ShowCounts { show_id, a, b });
        }
        let total: u64 = pooled.iter().sum();
        if total == 0 {
            return Err(Error::invalid("no term occurrences"));
        }
        Ok(TermCounts {
            terms,
            shows: out,
            background: pooled.iter().map(|&c| c as f64 / total as f64).collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TermShowScore {
    pub delta: f64,
    pub sigma2: f64,
    pub zeta: f64,
}

fn score_term(
    ya: f64,
    yb: f64,
    na: f64,
    nb: f64,
    alpha: f64,
    alpha0: f64,
) -> Option<TermShowScore> {
    let (num_a, den_a) = (ya + alpha, na + alpha0 - ya - alpha);
    let (num_b, den_b) = (yb + alpha, nb + alpha0 - yb - alpha);
    if num_a <= 0.0 || num_b <= 0.0 || den_a <= 0.0 || den_b <= 0.0 {
        return None;
    }
    let delta = (num_a / den_a).ln() - (num_b / den_b).ln();
    let sigma2 = 1.0 / num_a + 1.0 / num_b;
    Some(TermShowScore {
        delta,
        sigma2,
        zeta: delta / sigma2.sqrt(),
    })
}

/// Scores every term in every show; result is indexed `[show][term]`.
pub fn weighted_logodds(counts: &TermCounts, c_star: f64) -> Result<Vec<Vec<TermShowScore>>> {
    if !(c_star > 0.0 && c_star.is_finite()) {
        return Err(Error::invalid(format!(
            "prior strength must be positive, got {c_star}"
        )));
    }
    counts
        .shows
        .iter()
        .map(|s| {
            let (na, nb) = (s.total_a() as f64, s.total_b() as f64);
            (0..counts.terms.len())
                .map(|t| {
                    let alpha = c_star * counts.background[t];
                    score_term(s.a[t] as f64, s.b[t] as f64, na, nb, alpha, c_star).ok_or_else(
                        || {
                            Error::invalid(format!(
                                "term {:?} in show {}: non-positive log-odds denominator",
                                counts.terms[t], s.show_id
                            ))
                        },
                    )
                })
                .collect()
        })
        .collect()
}

/// Equal-weight Stouffer combination `sum(z) / sqrt(k)`.
pub fn stouffer(zetas: &[f64]) -> f64 {
    if zetas.is_empty() {
        return 0.0;
    }
    zetas.iter().sum::<f64>() / (zetas.len() as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermResult {
    pub term: String,
    pub per_show: Vec<TermShowScore>,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogOddsResult {
    pub c_star: f64,
    pub show_ids: Vec<String>,
    /// Sorted by descending `z`, ties by term.
    pub terms: Vec<TermResult>,
}

pub fn log_odds(counts: &TermCounts, c_star: f64) -> Result<LogOddsResult> {
    let scores = weighted_logodds(counts, c_star)?;
    let mut terms: Vec<TermResult> = counts
        .terms
        .iter()
        .enumerate()
        .map(|(t, term)| {
            let per_show: Vec<TermShowScore> = scores.iter().map(|s| s[t]).collect();
            let z = stouffer(&per_show.iter().map(|s| s.zeta).collect::<Vec<_>>());
            TermResult {
                term: term.clone(),
                per_show,
                z,
            }
        })
        .collect();
    terms.sort_by(|x, y| y.z.total_cmp(&x.z).then_with(|| x.term.cmp(&y.term)));
    Ok(LogOddsResult {
        c_star,
        show_ids: counts.shows.iter().map(|s| s.show_id.clone()).collect(),
        terms,
    })
}

/// A token bag with its show and group label; the unit permuted during
/// calibration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub show_id: String,
    pub group: Group,
    pub terms: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentCorpus {
    pub vocab: Vec<String>,
    pub docs: Vec<Document>,
}

impl DocumentCorpus {
    /// Tokenizes texts and keeps terms whose pooled count is at least
    /// `min_count`. Vocabulary is sorted.
    pub fn from_texts<'a, I>(items: I, min_count: u64) -> Self
    where
        I: IntoIterator<Item = (&'a str, Group, &'a str)>,
    {
        let raw: Vec<(String, Group, Vec<String>)> = items
            .into_iter()
            .map(|(show, g, text)| (show.to_string(), g, tokenize(text)))
            .collect();
        let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
        for (_, _, toks) in &raw {
            for t in toks {
                *freq.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let vocab: Vec<String> = freq
            .iter()
            .filter(|(_, &c)| c >= min_count)
            .map(|(t, _)| t.to_string())
            .collect();
        let index: HashMap<&str, usize> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let docs = raw
            .iter()
            .map(|(show, g, toks)| Document {
                show_id: show.clone(),
                group: *g,
                terms: toks
                    .iter()
                    .filter_map(|t| index.get(t.as_str()).copied())
                    .collect(),
            })
            .collect();
        DocumentCorpus { vocab, docs }
    }

    fn shows(&self) -> Vec<String> {
        let mut s: Vec<String> = self.docs.iter().map(|d| d.show_id.clone()).collect();
        s.sort();
        s.dedup();
        s
    }

    fn counts_with(&self, groups: &[Group]) -> Result<TermCounts> {
        let v = self.vocab.len();
        let mut per: BTreeMap<&str, (Vec<u64>, Vec<u64>)> = BTreeMap::new();
        for (d, g) in self.docs.iter().zip(groups) {
            let e = per
                .entry(d.show_id.as_str())
                .or_insert_with(|| (vec![0; v], vec![0; v]));
            let side = if *g == Group::A { &mut e.0 } else { &mut e.1 };
            for &t in &d.terms {
                side[t] += 1;
            }
        }
        TermCounts::new(
            self.vocab.clone(),
            per.into_iter()
                .map(|(s, (a, b))| (s.to_string(), a, b))
                .collect(),
        )
    }

    pub fn term_counts(&self) -> Result<TermCounts> {
        let groups: Vec<Group> = self.docs.iter().map(|d| d.group).collect();
        self.counts_with(&groups)
    }
}

/// Logarithmic grid from 1 to 10^4 with four points per decade.
pub fn default_grid() -> Vec<f64> {
    (0..=16).map(|i| 10f64.powf(i as f64 / 4.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub c_star: f64,
    /// (candidate, pooled null-z standard deviation) for each grid value.
    pub null_sd: Vec<(f64, f64)>,
    pub permutations: usize,
}

/// Null-z standard deviation for each candidate over permuted corpora.
pub fn null_sd(
    corpus: &DocumentCorpus,
    grid: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let shows = corpus.shows();
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, d) in corpus.docs.iter().enumerate() {
        members.entry(d.show_id.as_str()).or_default().push(i);
    }
    if let Some((s, m)) = members.iter().find(|(_, m)| m.len() < 2) {
        return Err(Error::invalid(format!(
            "show {s} has {} document(s); calibration needs at least two per show",
            m.len()
        )));
    }
    if shows.is_empty() {
        return Err(Error::invalid("empty document corpus"));
    }
    let base: Vec<Group> = corpus.docs.iter().map(|d| d.group).collect();
    // (sum, sum of squares, count) per candidate and permutation
    let moments: Vec<Result<Vec<(f64, f64, usize)>>> = (0..permutations)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let mut groups = base.clone();
            for idx in members.values() {
                let mut labels: Vec<Group> = idx.iter().map(|&i| base[i]).collect();
                labels.shuffle(&mut rng);
                for (&i, g) in idx.iter().zip(labels) {
                    groups[i] = g;
                }
            }
            let counts = corpus.counts_with(&groups)?;
            grid.iter()
                .map(|&c| {
                    let scores = weighted_logodds(&counts, c)?;
                    let mut m = (0.0, 0.0, 0usize);
                    for z in scores.iter().flatten().map(|s| s.zeta) {
                        m.0 += z;
                        m.1 += z * z;
                        m.2 += 1;
                    }
                    Ok(m)
                })
                .collect()
        })
        .collect();
    let mut acc = vec![(0.0, 0.0, 0usize); grid.len()];
    for m in moments {
        for (a, x) in acc.iter_mut().zip(m?) {
            a.0 += x.0;
            a.1 += x.1;
            a.2 += x.2;
        }
    }
    Ok(acc
        .iter()
        .map(|&(s, ss, n)| {
            let n = n as f64;
            let mean = s / n;
            ((ss / n - mean * mean) * n / (n - 1.0)).max(0.0).sqrt()
        })
        .collect())
}

/// Picks the grid value whose permutation-null z-scores have standard
/// deviation closest to 1 (ties go to the smaller value).
pub fn calibrate_prior(
    corpus: &DocumentCorpus,
    grid: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<Calibration> {
    if grid.is_empty() {
        return Err(Error::invalid("empty prior-strength grid"));
    }
    if permutations == 0 {
        return Err(Error::invalid("calibration needs at least one permutation"));
    }
    let sds = null_sd(corpus, grid, permutations, seed)?;
    let mut pairs: Vec<(f64, f64)> = grid.iter().copied().zip(sds).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = pairs
        .iter()
        .min_by(|a, b| {
            (a.1 - 1.0)
                .abs()
                .total_cmp(&(b.1 - 1.0).abs())
                .then(a.0.total_cmp(&b.0))
        })
        .expect("non-empty grid");
    Ok(Calibration {
        c_star: best.0,
        null_sd: pairs.clone(),
        permutations,
    })
}
