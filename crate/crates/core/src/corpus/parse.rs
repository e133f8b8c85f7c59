use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::participant::{normalize_name, Gender, Participant};
use super::validate::{validate_records, Code, Violation};
use super::{Seconds, StructureRecord, Utterance};
use crate::error::{Error, Result};

const TRANSCRIPT_HEADER: [&str; 4] = ["start", "end", "speaker", "text"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Reject unknown keys in annotation objects.
    pub strict: bool,
}

fn split_tsv_line(line: &str) -> Vec<&str> {
    line.strip_suffix('\r')
        .unwrap_or(line)
        .split('\t')
        .collect()
}

/// Parses a processed transcript (`start end speaker text`, tab-separated).
/// Lines are numbered 1..n in file order.
pub fn parse_transcript_tsv(bytes: &[u8], clip_id: &str) -> Result<Vec<Utterance>> {
    let context = format!("transcript {clip_id}");
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        context: context.clone(),
        row: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut lines = text.lines();
    let header = lines.next().map(split_tsv_line).unwrap_or_default();
    let header: Vec<String> = header
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    if header != TRANSCRIPT_HEADER {
        return Err(Error::Parse {
            context,
            row: 0,
            message: format!(
                "expected header {:?}, found {:?}",
                TRANSCRIPT_HEADER.join("\t"),
                header.join("\t")
            ),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_tsv_line(line);
        if fields.len() != 4 {
            return Err(Error::Parse {
                context,
                row,
                message: format!("expected 4 tab-separated columns, found {}", fields.len()),
            });
        }
        let parse_time = |s: &str| {
            s.parse::<Seconds>().map_err(|message| Error::Parse {
                context: context.clone(),
                row,
                message,
            })
        };
        let start = parse_time(fields[0])?;
        let end = parse_time(fields[1])?;
        if start > end {
            return Err(Error::Parse {
                context,
                row,
                message: format!("start {start} is after end {end}"),
            });
        }
        let hint = fields[2].trim();
        out.push(Utterance {
            clip_id: clip_id.to_string(),
            line_idx: out.len() + 1,
            start,
            end,
            speaker_hint: (!hint.is_empty()).then(|| hint.to_string()),
            text: fields[3].to_string(),
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RawRecord {
    #[serde(alias = "line_index")]
    line_idx: Value,
    speaker: Value,
    #[serde(default, alias = "addressees")]
    addressee: Value,
    #[serde(default, alias = "side_participants")]
    side_participant: Value,
    reply_to: Value,
    #[serde(default)]
    extra_diegetic: Option<bool>,
    #[serde(default)]
    monologue: Option<bool>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

struct RecordReader<'a> {
    opts: ParseOptions,
    violations: &'a mut Vec<Violation>,
    position: usize,
}

impl RecordReader<'_> {
    fn fail(&mut self, line_idx: Option<usize>, code: Code, message: String) {
        self.violations.push(Violation {
            line_idx,
            code,
            message: format!("record #{}: {message}", self.position),
        });
    }

    fn index(&mut self, v: &Value, key: &str, line: Option<usize>) -> Option<usize> {
        match v.as_u64() {
            Some(n) if n >= 1 => Some(n as usize),
            _ => {
                self.fail(
                    line,
                    Code::Malformed,
                    format!("`{key}` must be a positive integer, got {v}"),
                );
                None
            }
        }
    }

    fn name(&mut self, v: &Value, key: &str, line: Option<usize>) -> Option<Participant> {
        let Some(s) = v.as_str() else {
            self.fail(
                line,
                Code::Malformed,
                format!("`{key}` must be a string, got {v}"),
            );
            return None;
        };
        match normalize_name(s) {
            Ok(p) => Some(p),
            Err(_) => {
                self.fail(
                    line,
                    Code::Malformed,
                    format!("`{key}` holds an empty name"),
                );
                None
            }
        }
    }

    fn name_set(&mut self, v: &Value, key: &str, line: Option<usize>) -> BTreeSet<Participant> {
        match v {
            Value::Null => BTreeSet::new(),
            Value::Array(items) => items
                .iter()
                .filter_map(|x| self.name(x, key, line))
                .collect(),
            // a bare string is accepted as a one-element list
            Value::String(_) => self.name(v, key, line).into_iter().collect(),
            other => {
                self.fail(
                    line,
                    Code::Malformed,
                    format!("`{key}` must be an array of names, got {other}"),
                );
                BTreeSet::new()
            }
        }
    }

    fn record(&mut self, value: &Value) -> Option<StructureRecord> {
        let raw: RawRecord = match serde_json::from_value(value.clone()) {
            Ok(r) => r,
            Err(e) => {
                self.fail(None, Code::Malformed, e.to_string());
                return None;
            }
        };
        let line = raw.line_idx.as_u64().map(|n| n as usize);
        if self.opts.strict && !raw.extra.is_empty() {
            let keys: Vec<_> = raw.extra.keys().cloned().collect();
            self.fail(line, Code::UnknownKey, format!("unknown key(s) {keys:?}"));
        }
        let line_idx = self.index(&raw.line_idx, "line_idx", line);
        let reply_to = self.index(&raw.reply_to, "reply_to", line);
        let speaker = self.name(&raw.speaker, "speaker", line);
        let addressees = self.name_set(&raw.addressee, "addressee", line);
        let side_participants = self.name_set(&raw.side_participant, "side_participant", line);
        Some(StructureRecord {
            line_idx: line_idx?,
            speaker: speaker?,
            addressees,
            side_participants,
            reply_to: reply_to?,
            extra_diegetic: raw.extra_diegetic.unwrap_or(false),
            monologue: raw.monologue.unwrap_or(false),
        })
    }
}

fn json_value(bytes: &[u8], context: &str) -> Result<Value> {
    serde_json::from_slice(bytes).map_err(|source| Error::Json {
        context: context.to_string(),
        source,
    })
}

fn read_record_array(
    items: &[Value],
    opts: ParseOptions,
) -> (Vec<StructureRecord>, Vec<Violation>) {
    let mut violations = Vec::new();
    let mut records = Vec::new();
    for (i, v) in items.iter().enumerate() {
        let mut reader = RecordReader {
            opts,
            violations: &mut violations,
            position: i + 1,
        };
        if let Some(r) = reader.record(v) {
            records.push(r);
        }
    }
    (records, violations)
}

fn expect_array<'a>(v: &'a Value, context: &str) -> Result<&'a [Value]> {
    v.as_array().map(Vec::as_slice).ok_or_else(|| {
        Error::invalid(format!(
            "{context}: expected a JSON array of annotation objects"
        ))
    })
}

/// Reads annotation objects without checking structural invariants. Only
/// records whose fields cannot be read at all produce an error.
pub fn parse_annotation_json_unchecked(
    bytes: &[u8],
    opts: ParseOptions,
) -> Result<Vec<StructureRecord>> {
    let value = json_value(bytes, "annotations")?;
    let (records, violations) = read_record_array(expect_array(&value, "annotations")?, opts);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(records)
}

/// Reads and validates annotation objects; every violation is reported.
pub fn parse_annotation_json(bytes: &[u8], opts: ParseOptions) -> Result<Vec<StructureRecord>> {
    let value = json_value(bytes, "annotations")?;
    let (records, mut violations) = read_record_array(expect_array(&value, "annotations")?, opts);
    violations.extend(validate_records(&records));
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(records)
}

/// Reads either a single clip's array (keyed by `default_clip`) or an object
/// mapping clip ids to arrays. Records are not invariant-checked.
pub fn parse_annotation_bundle(
    bytes: &[u8],
    default_clip: &str,
    opts: ParseOptions,
) -> Result<BTreeMap<String, Vec<StructureRecord>>> {
    let value = json_value(bytes, default_clip)?;
    let mut out = BTreeMap::new();
    let mut push = |clip: &str, items: &[Value]| -> Result<()> {
        let (records, violations) = read_record_array(items, opts);
        if !violations.is_empty() {
            return Err(Error::Validation(
                violations
                    .into_iter()
                    .map(|mut v| {
                        v.message = format!("clip {clip}: {}", v.message);
                        v
                    })
                    .collect(),
            ));
        }
        out.insert(clip.to_string(), records);
        Ok(())
    };
    match &value {
        Value::Array(items) => push(default_clip, items)?,
        Value::Object(map) => {
            for (clip, items) in map {
                push(clip, expect_array(items, clip)?)?;
            }
        }
        _ => {
            return Err(Error::invalid(format!(
                "{default_clip}: expected an array of annotations or an object keyed by clip id"
            )))
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct RecordOut<'a> {
    line_idx: usize,
    speaker: &'a Participant,
    addressee: &'a BTreeSet<Participant>,
    side_participant: &'a BTreeSet<Participant>,
    reply_to: usize,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    extra_diegetic: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    monologue: bool,
}

impl<'a> From<&'a StructureRecord> for RecordOut<'a> {
    fn from(r: &'a StructureRecord) -> Self {
        RecordOut {
            line_idx: r.line_idx,
            speaker: &r.speaker,
            addressee: &r.addressees,
            side_participant: &r.side_participants,
            reply_to: r.reply_to,
            extra_diegetic: r.extra_diegetic,
            monologue: r.monologue,
        }
    }
}

/// Serializes records in the annotation-file shape. Role sets are emitted in
/// sorted order; flags only when set.
pub fn records_to_json(records: &[StructureRecord]) -> String {
    let out: Vec<RecordOut<'_>> = records.iter().map(RecordOut::from).collect();
    serde_json::to_string_pretty(&out).expect("records serialize")
}

/// Serializer for multi-clip prediction files.
pub fn bundle_to_json(bundle: &BTreeMap<String, Vec<StructureRecord>>) -> String {
    let out: BTreeMap<&str, Vec<RecordOut<'_>>> = bundle
        .iter()
        .map(|(k, v)| (k.as_str(), v.iter().map(RecordOut::from).collect()))
        .collect();
    serde_json::to_string_pretty(&out).expect("records serialize")
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct CastList {
    pub clip_id: String,
    pub show_id: String,
    pub cast: Vec<String>,
}

pub fn parse_cast_json(bytes: &[u8]) -> Result<CastList> {
    serde_json::from_slice(bytes).map_err(|source| Error::Json {
        context: "cast list".into(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParticipantRow {
    pub participant: Participant,
    pub gender: Gender,
    pub show_id: String,
}

/// Parses participant metadata (`canonical_name gender show_id`).
pub fn parse_participant_tsv(bytes: &[u8]) -> Result<Vec<ParticipantRow>> {
    let context = "participant metadata".to_string();
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        context: context.clone(),
        row: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .map(split_tsv_line)
        .unwrap_or_default()
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    if header != ["canonical_name", "gender", "show_id"] {
        return Err(Error::Parse {
            context,
            row: 0,
            message: "expected header canonical_name\\tgender\\tshow_id".into(),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_tsv_line(line);
        if fields.len() != 3 {
            return Err(Error::Parse {
                context,
                row: i + 1,
                message: format!("expected 3 columns, found {}", fields.len()),
            });
        }
        let participant = normalize_name(fields[0]).map_err(|_| Error::Parse {
            context: context.clone(),
            row: i + 1,
            message: "empty canonical_name".into(),
        })?;
        out.push(ParticipantRow {
            participant,
            gender: Gender::parse(fields[1]),
            show_id: fields[2].trim().to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ParticipantKind;

    const FIG2_TSV: &str = "start\tend\tspeaker\ttext\n\
0.031\t0.711\tsheldon cooper\tI'll find us seats?\n\
1.171\t2.272\tstephanie barnett\tOh no, we have seats.\n\
2.292\t3.692\tleonard hofstadter\tNot the right seats.\n";

    #[test]
    fn transcript_rows() {
        let u = parse_transcript_tsv(FIG2_TSV.as_bytes(), "s02e09_seg02_clip_04").unwrap();
        assert_eq!(u.len(), 3);
        assert_eq!(u[0].line_idx, 1);
        assert_eq!(u[0].start, Seconds::from_millis(31));
        assert_eq!(u[0].end, Seconds::from_millis(711));
        assert_eq!(u[0].text, "I'll find us seats?");
        assert_eq!(u[0].speaker_hint.as_deref(), Some("sheldon cooper"));
        assert_eq!(u[2].line_idx, 3);
    }

    #[test]
    fn transcript_header_only() {
        assert!(parse_transcript_tsv(b"start\tend\tspeaker\ttext\n", "c")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn transcript_errors_name_the_row() {
        let bad = "start\tend\tspeaker\ttext\n2.0\t1.0\ta\thi\n";
        match parse_transcript_tsv(bad.as_bytes(), "c") {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 1),
            other => panic!("{other:?}"),
        }
        let short = "start\tend\tspeaker\ttext\n1.0\t2.0\thi\n";
        assert!(matches!(
            parse_transcript_tsv(short.as_bytes(), "c"),
            Err(Error::Parse { row: 1, .. })
        ));
        let nan = "start\tend\tspeaker\ttext\n0.0\t1.0\ta\tx\nx\t1.0\ta\thi\n";
        assert!(matches!(
            parse_transcript_tsv(nan.as_bytes(), "c"),
            Err(Error::Parse { row: 2, .. })
        ));
    }

    #[test]
    fn annotation_example() {
        let json = r#"[{"line_idx":2,"speaker":"stephanie barnett","addressee":["sheldon cooper"],"side_participant":["leonard hofstadter"],"reply_to":1}]"#;
        let r = &parse_annotation_json(json.as_bytes(), ParseOptions::default()).unwrap()[0];
        assert_eq!(r.line_idx, 2);
        assert_eq!(r.addressees.len(), 1);
        assert_eq!(r.side_participants.len(), 1);
        assert_eq!(r.reply_to, 1);
        assert!(!r.extra_diegetic && !r.monologue);
    }

    #[test]
    fn overlapping_roles_rejected() {
        let json = r#"[{"line_idx":1,"speaker":"b","addressee":["a"],"side_participant":["a"],"reply_to":1}]"#;
        match parse_annotation_json(json.as_bytes(), ParseOptions::default()) {
            Err(Error::Validation(v)) => assert_eq!(v[0].code, Code::RoleOverlap),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn self_link_accepted() {
        let json =
            r#"[{"line_idx":1,"speaker":"b","addressee":[],"side_participant":[],"reply_to":1}]"#;
        let r = parse_annotation_json(json.as_bytes(), ParseOptions::default()).unwrap();
        assert!(r[0].starts_thread());
    }

    #[test]
    fn every_violation_listed() {
        let json = r#"[
            {"line_idx":1,"speaker":"a","addressee":[],"side_participant":[],"reply_to":2},
            {"line_idx":1,"speaker":"a","addressee":["b"],"side_participant":["b"],"reply_to":1}
        ]"#;
        let Err(Error::Validation(v)) =
            parse_annotation_json(json.as_bytes(), ParseOptions::default())
        else {
            panic!()
        };
        let codes: Vec<_> = v.iter().map(|x| x.code).collect();
        assert!(codes.contains(&Code::ForwardLink));
        assert!(codes.contains(&Code::DuplicateLine));
        assert!(codes.contains(&Code::RoleOverlap));
    }

    #[test]
    fn strict_rejects_unknown_keys() {
        let json = r#"[{"line_idx":1,"speaker":"a","addressee":[],"side_participant":[],"reply_to":1,"mood":"ok"}]"#;
        assert!(parse_annotation_json(json.as_bytes(), ParseOptions::default()).is_ok());
        assert!(parse_annotation_json(json.as_bytes(), ParseOptions { strict: true }).is_err());
    }

    #[test]
    fn llm_schema_aliases() {
        let json = r#"[{"line_index":1,"speaker":"Unknown","addressees":["crowd"],"side_participants":[],"reply_to":1}]"#;
        let r = parse_annotation_json(json.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(r[0].speaker.kind(), ParticipantKind::Unknown);
        assert_eq!(
            r[0].addressees.iter().next().unwrap().kind(),
            ParticipantKind::Crowd
        );
    }

    #[test]
    fn bundle_forms() {
        let single =
            br#"[{"line_idx":1,"speaker":"a","addressee":[],"side_participant":[],"reply_to":1}]"#;
        let b = parse_annotation_bundle(single, "c1", ParseOptions::default()).unwrap();
        assert_eq!(b.keys().collect::<Vec<_>>(), ["c1"]);
        let multi = br#"{"x":[{"line_idx":1,"speaker":"a","addressee":[],"side_participant":[],"reply_to":1}],"y":[]}"#;
        let b = parse_annotation_bundle(multi, "ignored", ParseOptions::default()).unwrap();
        assert_eq!(b.len(), 2);
        assert!(b["y"].is_empty());
    }

    #[test]
    fn participant_metadata() {
        let tsv =
            "canonical_name\tgender\tshow_id\nPenny\tfemale\tbbt\nsheldon cooper\tmale\tbbt\n";
        let rows = parse_participant_tsv(tsv.as_bytes()).unwrap();
        assert_eq!(rows[0].participant.name(), "penny");
        assert_eq!(rows[1].gender, Gender::Male);
    }
}
