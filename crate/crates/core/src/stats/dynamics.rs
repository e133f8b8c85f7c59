//! Who starts and who holds threads, by gender, relative to speaking time.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::bootstrap::{bootstrap_ci, stream_rng, BootstrapConfig, Interval};
use crate::corpus::{Clip, Gender, GenderMap, Participant};
use crate::error::{Error, Result};
use crate::threads::{thread_events, EventOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsConfig {
    pub events: EventOptions,
    pub bootstrap: BootstrapConfig,
    /// Sign-flip permutations for the mean-delta p-value.
    pub permutations: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            events: EventOptions::default(),
            bootstrap: BootstrapConfig::default(),
            permutations: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClipShare {
    pub clip_id: String,
    pub female_events: usize,
    pub gendered_events: usize,
    pub female_time_share: Option<f64>,
    /// Female share of events minus female share of speaking time.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShareSummary {
    pub female_events: usize,
    pub gendered_events: usize,
    pub raw_share: Option<Interval>,
    pub mean_delta: Option<Interval>,
    pub p_value: Option<f64>,
    pub per_clip: Vec<ClipShare>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreadShares {
    pub start: ShareSummary,
    pub hold: ShareSummary,
}

fn female_time_share(clip: &Clip, genders: &GenderMap) -> Result<Option<f64>> {
    let (mut female, mut total) = (0i64, 0i64);
    for r in clip.gold_records()? {
        let Some(u) = clip.utterance(r.line_idx) else {
            continue;
        };
        if let Some(g) = genders.binary(&clip.show_id, &r.speaker) {
            let d = u.duration().millis();
            total += d;
            if g == Gender::Female {
                female += d;
            }
        }
    }
    Ok((total > 0).then(|| female as f64 / total as f64))
}

fn clip_share(
    clip: &Clip,
    actors: &[(usize, Participant)],
    genders: &GenderMap,
    time: Option<f64>,
) -> ClipShare {
    let gendered: Vec<Gender> = actors
        .iter()
        .filter_map(|(_, p)| genders.binary(&clip.show_id, p))
        .collect();
    let female = gendered.iter().filter(|g| **g == Gender::Female).count();
    let delta = match (gendered.len(), time) {
        (0, _) | (_, None) => None,
        (n, Some(t)) => Some(female as f64 / n as f64 - t),
    };
    ClipShare {
        clip_id: clip.clip_id.clone(),
        female_events: female,
        gendered_events: gendered.len(),
        female_time_share: time,
        delta,
    }
}

/// Two-sided sign-flip permutation p-value for a zero mean.
pub fn sign_flip_p(values: &[f64], permutations: usize, seed: u64) -> f64 {
    if values.is_empty() || permutations == 0 {
        return 1.0;
    }
    let observed = (values.iter().sum::<f64>() / values.len() as f64).abs();
    let hits: usize = (0..permutations)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let s: f64 = values
                .iter()
                .map(|v| if rng.random_bool(0.5) { -v } else { *v })
                .sum();
            usize::from((s / values.len() as f64).abs() >= observed - 1e-12)
        })
        .sum();
    (1 + hits) as f64 / (1 + permutations) as f64
}

fn summarize(per_clip: Vec<ClipShare>, config: &DynamicsConfig) -> Result<ShareSummary> {
    let female_events = per_clip.iter().map(|c| c.female_events).sum();
    let gendered_events: usize = per_clip.iter().map(|c| c.gendered_events).sum();
    let units: Vec<(usize, usize)> = per_clip
        .iter()
        .filter(|c| c.gendered_events > 0)
        .map(|c| (c.female_events, c.gendered_events))
        .collect();
    let raw_share = if units.is_empty() {
        None
    } else {
        Some(bootstrap_ci(
            &units,
            |s| {
                let (f, n) = s.iter().fold((0, 0), |a, u| (a.0 + u.0, a.1 + u.1));
                f as f64 / n as f64
            },
            &config.bootstrap,
        )?)
    };
    let deltas: Vec<f64> = per_clip.iter().filter_map(|c| c.delta).collect();
    let (mean_delta, p_value) = if deltas.is_empty() {
        (None, None)
    } else {
        (
            Some(bootstrap_ci(
                &deltas,
                super::bootstrap::mean_of,
                &config.bootstrap,
            )?),
            Some(sign_flip_p(
                &deltas,
                config.permutations,
                config.bootstrap.seed,
            )),
        )
    };
    Ok(ShareSummary {
        female_events,
        gendered_events,
        raw_share,
        mean_delta,
        p_value,
        per_clip,
    })
}

/// Female share of thread starts and holds, corpus-wide and per clip
/// relative to female speaking time.
pub fn gender_thread_shares(
    clips: &[Clip],
    genders: &GenderMap,
    config: &DynamicsConfig,
) -> Result<ThreadShares> {
    if genders.is_empty() {
        return Err(Error::invalid("gender map is empty"));
    }
    let mut starts = Vec::with_capacity(clips.len());
    let mut holds = Vec::with_capacity(clips.len());
    for clip in clips {
        let ev = thread_events(clip.gold_records()?, config.events);
        let time = female_time_share(clip, genders)?;
        starts.push(clip_share(clip, &ev.starters, genders, time));
        holds.push(clip_share(clip, &ev.holders, genders, time));
    }
    Ok(ThreadShares {
        start: summarize(starts, config)?,
        hold: summarize(holds, config)?,
    })
}
