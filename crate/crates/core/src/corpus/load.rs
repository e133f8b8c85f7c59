//! Filesystem layout for corpora.
//!
//! A corpus directory holds, per clip `<id>`:
//! `<id>.tsv` (transcript), `<id>.json` (annotations) and optionally
//! `<id>.cast.json`. A `participants.tsv` metadata table may sit alongside.
//! Annotation sources may also be a single JSON file: an array for one clip
//! (named by the file stem) or an object keyed by clip id.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::parse::{
    parse_annotation_bundle, parse_cast_json, parse_participant_tsv, parse_transcript_tsv,
    ParseOptions, ParticipantRow,
};
use super::participant::{normalize_name, CastMember, Gender, Participant};
use super::{Clip, StructureRecord};
use crate::error::{Error, Result};

pub const UNKNOWN_SHOW: &str = "unknown";
const METADATA_FILE: &str = "participants.tsv";
const SIDECAR_SUFFIXES: [&str; 3] = [".cast.json", ".faces.json", ".words.tsv"];

/// Gender lookup keyed by show and canonical name, with a name-only
/// fallback when the name is unambiguous across shows.
#[derive(Clone, Debug, Default)]
pub struct GenderMap {
    by_show: BTreeMap<(String, String), Gender>,
    by_name: BTreeMap<String, Option<Gender>>,
}

impl GenderMap {
    pub fn from_rows(rows: &[ParticipantRow]) -> Self {
        let mut m = GenderMap::default();
        for r in rows {
            m.insert(&r.show_id, &r.participant, r.gender);
        }
        m
    }

    pub fn insert(&mut self, show_id: &str, p: &Participant, gender: Gender) {
        let name = p.name().to_string();
        self.by_show
            .insert((show_id.to_string(), name.clone()), gender);
        self.by_name
            .entry(name)
            .and_modify(|g| {
                if *g != Some(gender) {
                    *g = None;
                }
            })
            .or_insert(Some(gender));
    }

    pub fn get(&self, show_id: &str, p: &Participant) -> Option<Gender> {
        if p.is_placeholder() {
            return None;
        }
        self.by_show
            .get(&(show_id.to_string(), p.name().to_string()))
            .copied()
            .or_else(|| self.by_name.get(p.name()).copied().flatten())
    }

    /// Female/male only; unspecified genders count as unknown.
    pub fn binary(&self, show_id: &str, p: &Participant) -> Option<Gender> {
        self.get(show_id, p).filter(|g| *g != Gender::Unspecified)
    }

    pub fn is_empty(&self) -> bool {
        self.by_show.is_empty()
    }

    pub fn len(&self) -> usize {
        self.by_show.len()
    }
}

pub fn load_gender_map(path: &Path) -> Result<GenderMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(GenderMap::from_rows(&parse_participant_tsv(&bytes)?))
}

/// Annotations for a set of clips plus the files they were read from.
#[derive(Clone, Debug, Default)]
pub struct AnnotationSet {
    pub clips: BTreeMap<String, Vec<StructureRecord>>,
    pub files: Vec<PathBuf>,
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    /// Sorted by clip id.
    pub clips: Vec<Clip>,
    pub gender: GenderMap,
    pub files: Vec<PathBuf>,
}

impl Corpus {
    pub fn clip(&self, clip_id: &str) -> Option<&Clip> {
        self.clips
            .binary_search_by(|c| c.clip_id.as_str().cmp(clip_id))
            .ok()
            .map(|i| &self.clips[i])
    }

    pub fn annotations(&self) -> BTreeMap<String, Vec<StructureRecord>> {
        self.clips
            .iter()
            .filter_map(|c| c.gold.clone().map(|g| (c.clip_id.clone(), g)))
            .collect()
    }
}

fn stem_of(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    for suffix in SIDECAR_SUFFIXES.iter().chain([".json", ".tsv"].iter()) {
        if let Some(s) = name.strip_suffix(suffix) {
            return s.to_string();
        }
    }
    name
}

fn is_sidecar(name: &str) -> bool {
    SIDECAR_SUFFIXES.iter().any(|s| name.ends_with(s))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn merge_bundle(
    into: &mut BTreeMap<String, Vec<StructureRecord>>,
    path: &Path,
    opts: ParseOptions,
) -> Result<()> {
    let bundle = parse_annotation_bundle(&read(path)?, &stem_of(path), opts)?;
    for (clip, records) in bundle {
        if into.insert(clip.clone(), records).is_some() {
            return Err(Error::invalid(format!(
                "clip {clip} annotated twice (again in {})",
                path.display()
            )));
        }
    }
    Ok(())
}

/// Loads annotations from a file or a corpus directory.
pub fn load_annotations(path: &Path, opts: ParseOptions) -> Result<AnnotationSet> {
    let mut set = AnnotationSet::default();
    if path.is_dir() {
        for p in sorted_entries(path)? {
            let name = file_name(&p);
            if name.ends_with(".json") && !is_sidecar(&name) {
                merge_bundle(&mut set.clips, &p, opts)?;
                set.files.push(p);
            }
        }
    } else {
        merge_bundle(&mut set.clips, path, opts)?;
        set.files.push(path.to_path_buf());
    }
    Ok(set)
}

/// Loads a corpus directory (or a single annotation file) into clips.
pub fn load_corpus(path: &Path, opts: ParseOptions) -> Result<Corpus> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ));
    }
    let mut corpus = Corpus::default();
    let mut transcripts = BTreeMap::new();
    let mut casts = BTreeMap::new();
    let mut annotations = BTreeMap::new();

    let entries = if path.is_dir() {
        sorted_entries(path)?
    } else {
        vec![path.to_path_buf()]
    };
    for p in entries {
        let name = file_name(&p);
        if name == METADATA_FILE {
            corpus.gender = load_gender_map(&p)?;
        } else if name.ends_with(".cast.json") {
            let cast = parse_cast_json(&read(&p)?)?;
            casts.insert(cast.clip_id.clone(), cast);
        } else if name.ends_with(".tsv") && !is_sidecar(&name) {
            let id = stem_of(&p);
            transcripts.insert(id.clone(), parse_transcript_tsv(&read(&p)?, &id)?);
        } else if name.ends_with(".json") && !is_sidecar(&name) {
            merge_bundle(&mut annotations, &p, opts)?;
        } else {
            continue;
        }
        corpus.files.push(p);
    }

    let mut ids: Vec<String> = transcripts
        .keys()
        .chain(annotations.keys())
        .cloned()
        .collect();
    ids.sort();
    ids.dedup();
    for id in ids {
        let mut clip = Clip::new(id.clone());
        if let Some(u) = transcripts.remove(&id) {
            clip.utterances = u;
        }
        clip.gold = annotations.remove(&id);
        if let Some(cast) = casts.remove(&id) {
            clip.show_id = cast.show_id.clone();
            for name in &cast.cast {
                let participant = normalize_name(name)?;
                let gender = corpus.gender.get(&clip.show_id, &participant);
                clip.cast.push(CastMember {
                    participant,
                    gender,
                });
            }
        }
        corpus.clips.push(clip);
    }
    Ok(corpus)
}
