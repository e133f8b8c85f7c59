use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::participant::ParticipantKind;
use super::{Clip, StructureRecord};

/// Machine-readable diagnostic codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Code {
    Malformed,
    UnknownKey,
    ForwardLink,
    DuplicateLine,
    RoleOverlap,
    SpeakerInRoles,
    MissingRecord,
    ExtraRecord,
    NoncontiguousLines,
    BadInterval,
    Overlap,
    UnknownParticipant,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Malformed => "MALFORMED",
            Code::UnknownKey => "UNKNOWN_KEY",
            Code::ForwardLink => "FORWARD_LINK",
            Code::DuplicateLine => "DUPLICATE_LINE",
            Code::RoleOverlap => "ROLE_OVERLAP",
            Code::SpeakerInRoles => "SPEAKER_IN_ROLES",
            Code::MissingRecord => "MISSING_RECORD",
            Code::ExtraRecord => "EXTRA_RECORD",
            Code::NoncontiguousLines => "NONCONTIGUOUS_LINES",
            Code::BadInterval => "BAD_INTERVAL",
            Code::Overlap => "OVERLAP",
            Code::UnknownParticipant => "UNKNOWN_PARTICIPANT",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An invariant violation found in a list of records.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub line_idx: Option<usize>,
    pub code: Code,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line_idx {
            Some(l) => write!(f, "[{}] line {l}: {}", self.code, self.message),
            None => write!(f, "[{}] {}", self.code, self.message),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub clip_id: String,
    pub line_idx: Option<usize>,
    /// Second line involved, for pairwise problems such as overlaps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_line: Option<usize>,
    pub code: Code,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Checks per-record invariants and line uniqueness.
///
/// Placeholder tokens (`unknown`, `crowd`, `none`) are exempt from the
/// disjointness and speaker-exclusion checks, since an unidentified speaker
/// may legitimately address an unidentified listener.
pub fn validate_records(records: &[StructureRecord]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for r in records {
        let line = Some(r.line_idx);
        if !seen.insert(r.line_idx) {
            out.push(Violation {
                line_idx: line,
                code: Code::DuplicateLine,
                message: format!("line_idx {} appears more than once", r.line_idx),
            });
        }
        if r.reply_to > r.line_idx {
            out.push(Violation {
                line_idx: line,
                code: Code::ForwardLink,
                message: format!("reply_to {} points forward", r.reply_to),
            });
        }
        let shared: Vec<String> = r
            .addressees
            .intersection(&r.side_participants)
            .filter(|p| !p.is_placeholder())
            .map(|p| p.label())
            .collect();
        if !shared.is_empty() {
            out.push(Violation {
                line_idx: line,
                code: Code::RoleOverlap,
                message: format!("both addressee and side-participant: {}", shared.join(", ")),
            });
        }
        if !r.speaker.is_placeholder()
            && (r.addressees.contains(&r.speaker) || r.side_participants.contains(&r.speaker))
        {
            out.push(Violation {
                line_idx: line,
                code: Code::SpeakerInRoles,
                message: format!("speaker {} also listed as a listener", r.speaker),
            });
        }
    }
    out
}

/// Returns every diagnostic for a clip; empty iff all invariants hold.
/// Overlapping utterance intervals are warnings.
pub fn validate_clip(clip: &Clip) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |line_idx, other_line, code, severity, message: String| {
        out.push(Diagnostic {
            clip_id: clip.clip_id.clone(),
            line_idx,
            other_line,
            code,
            severity,
            message,
        })
    };

    for (i, u) in clip.utterances.iter().enumerate() {
        if u.line_idx != i + 1 {
            push(
                Some(u.line_idx),
                None,
                Code::NoncontiguousLines,
                Severity::Error,
                format!("utterance #{} has line_idx {}", i + 1, u.line_idx),
            );
        }
        if u.start > u.end {
            push(
                Some(u.line_idx),
                None,
                Code::BadInterval,
                Severity::Error,
                format!("start {} after end {}", u.start, u.end),
            );
        }
    }
    for w in clip.utterances.windows(2) {
        if w[0].end > w[1].start {
            push(
                Some(w[0].line_idx),
                Some(w[1].line_idx),
                Code::Overlap,
                Severity::Warning,
                format!("end {} overlaps next start {}", w[0].end, w[1].start),
            );
        }
    }

    let Some(gold) = &clip.gold else {
        return out;
    };
    for v in validate_records(gold) {
        push(v.line_idx, None, v.code, Severity::Error, v.message);
    }

    let by_line: BTreeMap<usize, &StructureRecord> = gold.iter().map(|r| (r.line_idx, r)).collect();
    if clip.utterances.is_empty() {
        for (expected, &line) in (1..).zip(by_line.keys()) {
            if line != expected {
                push(
                    Some(line),
                    None,
                    Code::NoncontiguousLines,
                    Severity::Error,
                    format!("expected line {expected}, found {line}"),
                );
                break;
            }
        }
    } else {
        let lines: BTreeSet<usize> = clip.utterances.iter().map(|u| u.line_idx).collect();
        for &l in lines.iter().filter(|l| !by_line.contains_key(l)) {
            push(
                Some(l),
                None,
                Code::MissingRecord,
                Severity::Error,
                "no annotation for utterance".into(),
            );
        }
        for &l in by_line.keys().filter(|l| !lines.contains(l)) {
            push(
                Some(l),
                None,
                Code::ExtraRecord,
                Severity::Error,
                "annotation without utterance".into(),
            );
        }
    }

    if !clip.cast.is_empty() {
        let cast: BTreeSet<&str> = clip.cast.iter().map(|c| c.participant.name()).collect();
        for r in gold {
            let names = std::iter::once(&r.speaker)
                .chain(&r.addressees)
                .chain(&r.side_participants);
            for p in names {
                if p.kind() == ParticipantKind::Regular && !cast.contains(p.name()) {
                    push(
                        Some(r.line_idx),
                        None,
                        Code::UnknownParticipant,
                        Severity::Error,
                        format!("{} is not in the cast list", p.label()),
                    );
                }
            }
        }
    }
    out
}
