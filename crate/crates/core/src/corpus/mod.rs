//! Clips, transcripts, cast lists and per-utterance structure annotations.
//!
//! Parsing is lenient by default: structurally readable input always loads,
//! and invariant checks are reported separately through [`validate_clip`] and
//! [`validate_records`]. The checked entry point [`parse_annotation_json`]
//! combines both and rejects anything that violates an invariant.

mod load;
mod parse;
mod participant;
mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use load::{
    load_annotations, load_corpus, load_gender_map, AnnotationSet, Corpus, GenderMap, UNKNOWN_SHOW,
};
pub use parse::{
    bundle_to_json, parse_annotation_bundle, parse_annotation_json,
    parse_annotation_json_unchecked, parse_cast_json, parse_participant_tsv, parse_transcript_tsv,
    records_to_json, CastList, ParseOptions, ParticipantRow,
};
pub use participant::{
    normalize_name, CastMember, Gender, Participant, ParticipantKind, OFF_SCREEN_SUFFIX,
};
pub use validate::{validate_clip, validate_records, Code, Diagnostic, Severity, Violation};

/// A timestamp or duration in seconds, stored as whole milliseconds so that
/// values read from text round-trip exactly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Seconds(i64);

impl Seconds {
    pub const ZERO: Seconds = Seconds(0);

    pub fn from_millis(ms: i64) -> Self {
        Seconds(ms)
    }

    /// Rounds to the nearest millisecond.
    pub fn from_secs_f64(s: f64) -> Self {
        Seconds((s * 1000.0).round() as i64)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl std::ops::Sub for Seconds {
    type Output = Seconds;

    fn sub(self, rhs: Seconds) -> Seconds {
        Seconds(self.0 - rhs.0)
    }
}

impl fmt::Display for Seconds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:03}", abs / 1000, abs % 1000)
    }
}

impl FromStr for Seconds {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        let digits_ok = |x: &str| x.bytes().all(|b| b.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty())
            || !digits_ok(int_part)
            || !digits_ok(frac_part)
        {
            return Err(format!("not a decimal timestamp: {s:?}"));
        }
        let whole: i64 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| format!("timestamp out of range: {s:?}"))?
        };
        let mut frac = 0i64;
        for (i, b) in frac_part.bytes().take(3).enumerate() {
            frac += i64::from(b - b'0') * 10i64.pow(2 - i as u32);
        }
        if frac_part.len() > 3 && frac_part.as_bytes()[3] >= b'5' {
            frac += 1;
        }
        let ms = whole * 1000 + frac;
        Ok(Seconds(if neg { -ms } else { ms }))
    }
}

impl Serialize for Seconds {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_secs_f64())
    }
}

impl<'de> Deserialize<'de> for Seconds {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Seconds::from_secs_f64(f64::deserialize(d)?))
    }
}

/// One transcribed line of a clip.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Utterance {
    pub clip_id: String,
    /// 1-based position within the clip.
    pub line_idx: usize,
    pub start: Seconds,
    pub end: Seconds,
    /// Speaker label carried over from automatic preprocessing, unverified.
    pub speaker_hint: Option<String>,
    pub text: String,
}

impl Utterance {
    pub fn duration(&self) -> Seconds {
        self.end - self.start
    }
}

/// Gold or predicted structure for one utterance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureRecord {
    pub line_idx: usize,
    pub speaker: Participant,
    pub addressees: BTreeSet<Participant>,
    pub side_participants: BTreeSet<Participant>,
    /// Parent line; equal to `line_idx` when the utterance opens a thread.
    pub reply_to: usize,
    pub extra_diegetic: bool,
    pub monologue: bool,
}

impl StructureRecord {
    pub fn new(line_idx: usize, speaker: Participant, reply_to: usize) -> Self {
        StructureRecord {
            line_idx,
            speaker,
            addressees: BTreeSet::new(),
            side_participants: BTreeSet::new(),
            reply_to,
            extra_diegetic: false,
            monologue: false,
        }
    }

    pub fn with_addressees<I: IntoIterator<Item = Participant>>(mut self, it: I) -> Self {
        self.addressees = it.into_iter().collect();
        self
    }

    pub fn with_side_participants<I: IntoIterator<Item = Participant>>(mut self, it: I) -> Self {
        self.side_participants = it.into_iter().collect();
        self
    }

    pub fn starts_thread(&self) -> bool {
        self.reply_to == self.line_idx
    }

    pub fn is_nondialogic(&self) -> bool {
        self.extra_diegetic || self.monologue
    }
}

/// A clip with its cast, transcript and (optionally) gold structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clip {
    pub clip_id: String,
    pub show_id: String,
    pub cast: Vec<CastMember>,
    pub utterances: Vec<Utterance>,
    pub gold: Option<Vec<StructureRecord>>,
}

impl Clip {
    pub fn new(clip_id: impl Into<String>) -> Self {
        Clip {
            clip_id: clip_id.into(),
            show_id: UNKNOWN_SHOW.to_string(),
            cast: Vec::new(),
            utterances: Vec::new(),
            gold: None,
        }
    }

    /// Number of lines, taken from the transcript when present and from the
    /// gold annotations otherwise.
    pub fn len(&self) -> usize {
        if !self.utterances.is_empty() {
            self.utterances.len()
        } else {
            self.gold.as_ref().map_or(0, Vec::len)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn utterance(&self, line_idx: usize) -> Option<&Utterance> {
        self.utterances
            .get(line_idx.wrapping_sub(1))
            .filter(|u| u.line_idx == line_idx)
            .or_else(|| self.utterances.iter().find(|u| u.line_idx == line_idx))
    }

    pub fn gold_records(&self) -> Result<&[StructureRecord]> {
        self.gold
            .as_deref()
            .ok_or_else(|| Error::invalid(format!("clip {} has no gold annotations", self.clip_id)))
    }
}
