use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Marker appended to a character name when the character is known to the
/// audience but not present within the scope of the clip.
pub const OFF_SCREEN_SUFFIX: &str = "_OS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticipantKind {
    Regular,
    /// Never identified within the clip.
    Unknown,
    /// A group of unidentifiable people.
    Crowd,
    /// Explicitly nobody (e.g. a monologue addressee).
    None,
    OffScreen,
}

impl ParticipantKind {
    /// Reserved tokens that stand in for a participant rather than naming one.
    pub fn is_placeholder(self) -> bool {
        matches!(
            self,
            ParticipantKind::Unknown | ParticipantKind::Crowd | ParticipantKind::None
        )
    }
}

/// A reference to a conversational participant, normalized to its canonical
/// lowercase form.
///
/// Ordering is by name first so that role sets serialize alphabetically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Participant {
    name: String,
    kind: ParticipantKind,
}

impl Participant {
    pub fn regular(name: &str) -> Result<Self> {
        let p = normalize_name(name)?;
        if p.kind != ParticipantKind::Regular {
            return Err(Error::InvalidName(name.to_string()));
        }
        Ok(p)
    }

    pub fn unknown() -> Self {
        Participant {
            name: "unknown".into(),
            kind: ParticipantKind::Unknown,
        }
    }

    pub fn none() -> Self {
        Participant {
            name: "none".into(),
            kind: ParticipantKind::None,
        }
    }

    pub fn crowd() -> Self {
        Participant {
            name: "crowd".into(),
            kind: ParticipantKind::Crowd,
        }
    }

    /// Canonical name; for off-screen participants this is the base name
    /// without the marker.
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ParticipantKind {
        self.kind
    }

    pub fn is_placeholder(&self) -> bool {
        self.kind.is_placeholder()
    }

    /// The surface form used in annotation files. Feeding it back through
    /// [`normalize_name`] yields `self`.
    pub fn label(&self) -> String {
        match self.kind {
            ParticipantKind::OffScreen => format!("{}{}", self.name, OFF_SCREEN_SUFFIX),
            _ => self.name.clone(),
        }
    }
}

impl fmt::Display for Participant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Serialize for Participant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Participant {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        normalize_name(&raw).map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for Participant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        normalize_name(s)
    }
}

/// Lowercases, trims and collapses whitespace, then classifies reserved
/// tokens (`unknown`, `crowd`, `none`) and the `_OS` off-screen marker.
pub fn normalize_name(raw: &str) -> Result<Participant> {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    if collapsed.is_empty() {
        return Err(Error::InvalidName(raw.to_string()));
    }
    let suffix_len = OFF_SCREEN_SUFFIX.len();
    let is_off_screen = collapsed.len() >= suffix_len
        && collapsed.is_char_boundary(collapsed.len() - suffix_len)
        && collapsed[collapsed.len() - suffix_len..].eq_ignore_ascii_case(OFF_SCREEN_SUFFIX);
    if is_off_screen {
        let base = collapsed[..collapsed.len() - suffix_len]
            .trim()
            .to_lowercase();
        if base.is_empty() {
            return Err(Error::InvalidName(raw.to_string()));
        }
        return Ok(Participant {
            name: base,
            kind: ParticipantKind::OffScreen,
        });
    }
    let name = collapsed.to_lowercase();
    let kind = match name.as_str() {
        "unknown" => ParticipantKind::Unknown,
        "crowd" => ParticipantKind::Crowd,
        "none" => ParticipantKind::None,
        _ => ParticipantKind::Regular,
    };
    Ok(Participant { name, kind })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
    Unspecified,
}

impl Gender {
    pub fn parse(raw: &str) -> Gender {
        match raw.trim().to_ascii_lowercase().as_str() {
            "female" | "f" | "woman" => Gender::Female,
            "male" | "m" | "man" => Gender::Male,
            _ => Gender::Unspecified,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Unspecified => "unspecified",
        }
    }
}

/// A cast-list entry: a participant plus optional metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CastMember {
    pub participant: Participant,
    pub gender: Option<Gender>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowercases_and_trims() {
        let p = normalize_name("Sheldon  Cooper ").unwrap();
        assert_eq!(p.name(), "sheldon cooper");
        assert_eq!(p.kind(), ParticipantKind::Regular);
    }

    #[test]
    fn reserved_tokens() {
        assert_eq!(
            normalize_name("crowd").unwrap().kind(),
            ParticipantKind::Crowd
        );
        assert_eq!(
            normalize_name(" Unknown").unwrap().kind(),
            ParticipantKind::Unknown
        );
        assert_eq!(
            normalize_name("NONE").unwrap().kind(),
            ParticipantKind::None
        );
    }

    #[test]
    fn off_screen_marker() {
        let p = normalize_name("barney_OS").unwrap();
        assert_eq!(p.kind(), ParticipantKind::OffScreen);
        assert_eq!(p.name(), "barney");
        assert_eq!(p.label(), "barney_OS");
        assert_eq!(normalize_name(&p.label()).unwrap(), p);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(normalize_name("   ").is_err());
        assert!(normalize_name("").is_err());
        assert!(normalize_name("_OS").is_err());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(raw in "[ A-Za-z_é]{1,20}") {
            if let Ok(p) = normalize_name(&raw) {
                prop_assert_eq!(normalize_name(&p.label()).unwrap(), p);
            }
        }
    }
}
