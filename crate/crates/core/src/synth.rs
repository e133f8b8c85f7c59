//! Random valid clips and partitions for tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::corpus::{CastMember, Clip, Gender, Participant, Seconds, StructureRecord, Utterance};
use crate::threads::ThreadPartition;

pub fn cast(n: usize) -> Vec<Participant> {
    (0..n)
        .map(|i| Participant::regular(&format!("p{i}")).expect("valid name"))
        .collect()
}

/// Records for lines 1..=n_lines. Every reply points backwards, role sets
/// are disjoint and exclude the speaker.
pub fn random_records<R: Rng + ?Sized>(
    rng: &mut R,
    n_lines: usize,
    people: &[Participant],
) -> Vec<StructureRecord> {
    (1..=n_lines)
        .map(|line| {
            let speaker = people.choose(rng).expect("non-empty cast").clone();
            let reply_to = if line == 1 || rng.random_bool(0.25) {
                line
            } else {
                rng.random_range(1..line)
            };
            let mut addressees = Vec::new();
            let mut side = Vec::new();
            for p in people.iter().filter(|p| **p != speaker) {
                match rng.random_range(0..4) {
                    0 => addressees.push(p.clone()),
                    1 => side.push(p.clone()),
                    _ => {}
                }
            }
            let mut r = StructureRecord::new(line, speaker, reply_to)
                .with_addressees(addressees)
                .with_side_participants(side);
            r.extra_diegetic = rng.random_bool(0.03);
            r
        })
        .collect()
}

/// A clip with transcript, cast and gold annotations.
pub fn random_clip<R: Rng + ?Sized>(
    rng: &mut R,
    clip_id: &str,
    n_lines: usize,
    n_people: usize,
) -> Clip {
    let people = cast(n_people);
    let gold = random_records(rng, n_lines, &people);
    let mut t = 0;
    let utterances = gold
        .iter()
        .map(|r| {
            let start = t;
            t += rng.random_range(300..4000);
            Utterance {
                clip_id: clip_id.to_string(),
                line_idx: r.line_idx,
                start: Seconds::from_millis(start),
                end: Seconds::from_millis(t),
                speaker_hint: Some(r.speaker.label()),
                text: format!("line {}", r.line_idx),
            }
        })
        .collect();
    let mut clip = Clip::new(clip_id);
    clip.cast = people
        .into_iter()
        .enumerate()
        .map(|(i, participant)| CastMember {
            participant,
            gender: Some(if i % 2 == 0 {
                Gender::Female
            } else {
                Gender::Male
            }),
        })
        .collect();
    clip.utterances = utterances;
    clip.gold = Some(gold);
    clip
}

/// Random partition of `0..n` into at most `max_clusters` non-empty clusters.
pub fn random_partition<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_clusters: usize,
) -> ThreadPartition {
    let k = max_clusters.clamp(1, n.max(1));
    ThreadPartition::from_labels((0..n).map(|e| (e, rng.random_range(0..k))))
        .expect("labels partition the elements")
}
