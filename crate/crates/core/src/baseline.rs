//! Face-frequency heuristic baseline.
//!
//! Speakers are the face seen during the most words of a line; the
//! addressee is the most frequent other face over the current and previous
//! line; every other face in that window is a side-participant. Each line
//! replies to the one before it.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::corpus::{normalize_name, Clip, Participant, Seconds, StructureRecord};
use crate::error::{Error, Result};

/// On-screen intervals of one participant's face within a clip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceTrack {
    pub clip_id: String,
    pub participant: Participant,
    /// Sorted, each with `start < end`.
    pub spans: Vec<(Seconds, Seconds)>,
}

impl FaceTrack {
    pub fn new(
        clip_id: &str,
        participant: Participant,
        mut spans: Vec<(Seconds, Seconds)>,
    ) -> Result<Self> {
        if let Some((s, e)) = spans.iter().find(|(s, e)| s >= e) {
            return Err(Error::invalid(format!(
                "face span [{s}, {e}] for {participant} is empty or reversed"
            )));
        }
        spans.sort();
        Ok(FaceTrack {
            clip_id: clip_id.to_string(),
            participant,
            spans,
        })
    }

    fn first_seen(&self) -> Option<Seconds> {
        self.spans.first().map(|s| s.0)
    }

    fn visible_during(&self, start: Seconds, end: Seconds) -> bool {
        self.spans.iter().any(|&(s, e)| {
            if start == end {
                s <= start && start < e
            } else {
                start < e && s < end
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordToken {
    pub line_idx: usize,
    pub word: String,
    pub start: Seconds,
    pub end: Seconds,
}

#[derive(Deserialize)]
struct RawFaces {
    clip_id: String,
    faces: Vec<RawFace>,
}

#[derive(Deserialize)]
struct RawFace {
    name: String,
    spans: Vec<(f64, f64)>,
}

/// Parses `{"clip_id": .., "faces": [{"name": .., "spans": [[s, e], ..]}]}`.
pub fn parse_faces_json(bytes: &[u8]) -> Result<Vec<FaceTrack>> {
    let raw: RawFaces = serde_json::from_slice(bytes).map_err(|source| Error::Json {
        context: "face tracks".into(),
        source,
    })?;
    raw.faces
        .into_iter()
        .map(|f| {
            let spans = f
                .spans
                .iter()
                .map(|&(s, e)| (Seconds::from_secs_f64(s), Seconds::from_secs_f64(e)))
                .collect();
            FaceTrack::new(&raw.clip_id, normalize_name(&f.name)?, spans)
        })
        .collect()
}

/// Parses word timings (`line_idx word start end`, with header).
pub fn parse_words_tsv(bytes: &[u8]) -> Result<Vec<WordToken>> {
    let context = "word tokens".to_string();
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        context: context.clone(),
        row: 0,
        message: e.to_string(),
    })?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .unwrap_or("")
        .trim_end_matches('\r')
        .split('\t')
        .collect();
    if header != ["line_idx", "word", "start", "end"] {
        return Err(Error::Parse {
            context,
            row: 0,
            message: "expected header line_idx\\tword\\tstart\\tend".into(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        let err = |message: String| Error::Parse {
            context: context.clone(),
            row,
            message,
        };
        if f.len() != 4 {
            return Err(err(format!("expected 4 columns, found {}", f.len())));
        }
        let line_idx = f[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| err(e.to_string()))?;
        let start = f[2].parse::<Seconds>().map_err(err)?;
        let end = f[3].parse::<Seconds>().map_err(err)?;
        if start > end {
            return Err(err(format!("start {start} after end {end}")));
        }
        out.push(WordToken {
            line_idx,
            word: f[1].to_string(),
            start,
            end,
        });
    }
    Ok(out)
}

/// Counts, per line, the words during which each face is on screen.
pub fn face_word_counts(
    tracks: &[FaceTrack],
    words: &[WordToken],
) -> BTreeMap<(usize, Participant), usize> {
    let mut counts = BTreeMap::new();
    for w in words {
        let mut seen = BTreeSet::new();
        for t in tracks {
            if t.visible_during(w.start, w.end) && seen.insert(&t.participant) {
                *counts
                    .entry((w.line_idx, t.participant.clone()))
                    .or_insert(0) += 1;
            }
        }
    }
    counts
}

fn line_ids(clip: &Clip) -> Vec<usize> {
    if !clip.utterances.is_empty() {
        clip.utterances.iter().map(|u| u.line_idx).collect()
    } else {
        clip.gold
            .as_ref()
            .map(|g| {
                g.iter()
                    .map(|r| r.line_idx)
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect()
            })
            .unwrap_or_default()
    }
}

/// Previous-line linking with placeholder roles.
pub fn run_reply_only_baseline(clip: &Clip) -> Vec<StructureRecord> {
    let lines = line_ids(clip);
    lines
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let parent = if i == 0 { l } else { lines[i - 1] };
            StructureRecord::new(l, Participant::unknown(), parent)
        })
        .collect()
}

/// Orders candidates by count (desc), then first on-screen appearance,
/// then canonical name.
fn pick<'a>(
    counts: &BTreeMap<&'a Participant, usize>,
    first_seen: &BTreeMap<&Participant, Seconds>,
    exclude: Option<&Participant>,
) -> Option<&'a Participant> {
    counts
        .iter()
        .filter(|(p, &c)| c > 0 && Some(**p) != exclude)
        .min_by(|(pa, ca), (pb, cb)| {
            cb.cmp(ca)
                .then_with(|| first_seen.get(*pa).cmp(&first_seen.get(*pb)))
                .then_with(|| pa.name().cmp(pb.name()))
        })
        .map(|(p, _)| *p)
}

/// Full face-based baseline.
pub fn run_baseline(
    clip: &Clip,
    tracks: &[FaceTrack],
    words: &[WordToken],
) -> Vec<StructureRecord> {
    let tracks: Vec<&FaceTrack> = tracks
        .iter()
        .filter(|t| t.clip_id == clip.clip_id)
        .collect();
    let owned: Vec<FaceTrack> = tracks.iter().map(|t| (*t).clone()).collect();
    let counts = face_word_counts(&owned, words);
    let mut first_seen: BTreeMap<&Participant, Seconds> = BTreeMap::new();
    for t in &tracks {
        if let Some(s) = t.first_seen() {
            let e = first_seen.entry(&t.participant).or_insert(s);
            *e = (*e).min(s);
        }
    }
    let line_counts = |line: usize| -> BTreeMap<&Participant, usize> {
        counts
            .iter()
            .filter(|((l, _), _)| *l == line)
            .map(|((_, p), &c)| (p, c))
            .collect()
    };

    let lines = line_ids(clip);
    let mut out = Vec::with_capacity(lines.len());
    for (i, &line) in lines.iter().enumerate() {
        let here = line_counts(line);
        let mut window = here.clone();
        if i > 0 {
            for (p, c) in line_counts(lines[i - 1]) {
                *window.entry(p).or_insert(0) += c;
            }
        }
        let speaker = pick(&here, &first_seen, None);
        let addressee = pick(&window, &first_seen, speaker);
        let side: BTreeSet<Participant> = window
            .iter()
            .filter(|(p, &c)| c > 0 && Some(**p) != speaker && Some(**p) != addressee)
            .map(|(p, _)| (*p).clone())
            .collect();
        let parent = if i == 0 { line } else { lines[i - 1] };
        let mut r = StructureRecord::new(
            line,
            speaker.cloned().unwrap_or_else(Participant::unknown),
            parent,
        );
        r.addressees = addressee.into_iter().cloned().collect();
        r.side_participants = side;
        out.push(r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Utterance;

    fn p(n: &str) -> Participant {
        normalize_name(n).unwrap()
    }

    fn secs(ms: i64) -> Seconds {
        Seconds::from_millis(ms)
    }

    fn clip(n: usize) -> Clip {
        let mut c = Clip::new("c");
        c.utterances = (1..=n)
            .map(|i| Utterance {
                clip_id: "c".into(),
                line_idx: i,
                start: secs((i as i64 - 1) * 1000),
                end: secs(i as i64 * 1000),
                speaker_hint: None,
                text: String::new(),
            })
            .collect();
        c
    }

    /// `words` words evenly spaced over line `line` (1 s per line).
    fn words(line: usize, words: usize) -> Vec<WordToken> {
        let base = (line as i64 - 1) * 1000;
        let step = 1000 / words as i64;
        (0..words as i64)
            .map(|k| WordToken {
                line_idx: line,
                word: format!("w{k}"),
                start: secs(base + k * step),
                end: secs(base + (k + 1) * step),
            })
            .collect()
    }

    #[test]
    fn counts_by_overlap() {
        let all = FaceTrack::new("c", p("a"), vec![(secs(0), secs(10_000))]).unwrap();
        assert_eq!(face_word_counts(&[all], &words(1, 5))[&(1, p("a"))], 5);
        // words are 250 ms each; visible through the end of word 2
        let partial = FaceTrack::new("c", p("b"), vec![(secs(0), secs(500))]).unwrap();
        assert_eq!(face_word_counts(&[partial], &words(1, 4))[&(1, p("b"))], 2);
        assert!(face_word_counts(&[], &words(1, 4)).is_empty());
    }

    #[test]
    fn argmax_roles() {
        // line 2 counts {a:5, b:2}; window over lines 1-2 {a:5, b:4, c:1}
        let c = clip(2);
        let mut w = words(1, 2);
        w.extend(words(2, 5));
        let tracks = vec![
            FaceTrack::new("c", p("a"), vec![(secs(1000), secs(2000))]).unwrap(),
            FaceTrack::new(
                "c",
                p("b"),
                vec![(secs(0), secs(1000)), (secs(1000), secs(1400))],
            )
            .unwrap(),
            FaceTrack::new("c", p("c"), vec![(secs(100), secs(400))]).unwrap(),
        ];
        let out = run_baseline(&c, &tracks, &w);
        let counts = face_word_counts(&tracks, &w);
        assert_eq!(counts[&(2, p("a"))], 5);
        assert_eq!(counts[&(2, p("b"))], 2);
        assert_eq!(counts[&(1, p("b"))], 2);
        assert_eq!(counts[&(1, p("c"))], 1);
        assert_eq!(out[1].speaker, p("a"));
        assert_eq!(out[1].addressees, [p("b")].into_iter().collect());
        assert_eq!(out[1].side_participants, [p("c")].into_iter().collect());
    }

    #[test]
    fn single_face_clip() {
        let c = clip(3);
        let w: Vec<_> = (1..=3).flat_map(|l| words(l, 3)).collect();
        let t = FaceTrack::new("c", p("a"), vec![(secs(0), secs(3000))]).unwrap();
        for r in run_baseline(&c, &[t], &w) {
            assert_eq!(r.speaker, p("a"));
            assert!(r.addressees.is_empty() && r.side_participants.is_empty());
        }
    }

    #[test]
    fn no_faces_means_unknown_speaker() {
        let out = run_baseline(&clip(2), &[], &words(1, 3));
        assert_eq!(out[0].speaker, Participant::unknown());
        assert!(out[0].addressees.is_empty());
    }

    #[test]
    fn ties_break_by_first_appearance_then_name() {
        let c = clip(1);
        let w = words(1, 2);
        let mk = |n: &str, s: i64| FaceTrack::new("c", p(n), vec![(secs(s), secs(2000))]).unwrap();
        let out = run_baseline(&c, &[mk("zed", 0), mk("amy", 0), mk("bob", -500)], &w);
        assert_eq!(out[0].speaker, p("bob"));
        assert_eq!(out[0].addressees, [p("amy")].into_iter().collect());
    }

    #[test]
    fn previous_line_links() {
        let replies: Vec<_> = run_reply_only_baseline(&clip(4))
            .iter()
            .map(|r| r.reply_to)
            .collect();
        assert_eq!(replies, vec![1, 1, 2, 3]);
        let replies: Vec<_> = run_baseline(&clip(4), &[], &[])
            .iter()
            .map(|r| r.reply_to)
            .collect();
        assert_eq!(replies, vec![1, 1, 2, 3]);
    }

    #[test]
    fn parses_inputs() {
        let faces = br#"{"clip_id":"c","faces":[{"name":"Penny","spans":[[1.5,0.5]]}]}"#;
        assert!(parse_faces_json(faces).is_err());
        let faces = br#"{"clip_id":"c","faces":[{"name":"Penny","spans":[[2.0,3.0],[0.5,1.5]]}]}"#;
        let t = parse_faces_json(faces).unwrap();
        assert_eq!(t[0].spans[0], (secs(500), secs(1500)));
        let w = parse_words_tsv(b"line_idx\tword\tstart\tend\n1\thi\t0.000\t0.250\n").unwrap();
        assert_eq!(w[0].end, secs(250));
        assert!(parse_words_tsv(b"line_idx\tword\tstart\tend\nx\thi\t0\t1\n").is_err());
    }
}
