//! Gendered role observations and their conditional distributions.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::{Clip, Gender, GenderMap, Participant};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Speaker,
    Addressee,
    SideParticipant,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Speaker, Role::Addressee, Role::SideParticipant];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Speaker => "speaker",
            Role::Addressee => "addressee",
            Role::SideParticipant => "side_participant",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoleObservation {
    pub role: Role,
    pub female: bool,
    pub show_id: String,
}

impl RoleObservation {
    pub fn new(role: Role, female: bool, show_id: impl Into<String>) -> Self {
        RoleObservation {
            role,
            female,
            show_id: show_id.into(),
        }
    }
}

/// One observation per (utterance, participant, role) for participants whose
/// gender is female or male. Others are skipped silently.
pub fn role_observations(clips: &[Clip], genders: &GenderMap) -> Result<Vec<RoleObservation>> {
    if genders.is_empty() {
        return Err(Error::invalid("gender map is empty"));
    }
    let mut out = Vec::new();
    for clip in clips {
        let records = clip.gold_records()?;
        let mut push = |role: Role, p: &Participant| {
            if let Some(g) = genders.binary(&clip.show_id, p) {
                out.push(RoleObservation::new(
                    role,
                    g == Gender::Female,
                    clip.show_id.clone(),
                ));
            }
        };
        for r in records {
            push(Role::Speaker, &r.speaker);
            for p in &r.addressees {
                push(Role::Addressee, p);
            }
            for p in &r.side_participants {
                push(Role::SideParticipant, p);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoleDistributions {
    /// role -> (P(female | role), P(male | role))
    pub gender_given_role: BTreeMap<Role, [f64; 2]>,
    /// "female"/"male" -> P(role | gender) over speaker, addressee, side-participant
    pub role_given_gender: BTreeMap<String, [f64; 3]>,
    pub counts: BTreeMap<Role, [u64; 2]>,
    pub warnings: Vec<String>,
}

pub fn role_distributions(observations: &[RoleObservation]) -> RoleDistributions {
    let mut counts: BTreeMap<Role, [u64; 2]> = Role::ALL.iter().map(|&r| (r, [0, 0])).collect();
    for o in observations {
        counts.get_mut(&o.role).expect("all roles present")[usize::from(!o.female)] += 1;
    }
    let mut warnings = Vec::new();
    let mut gender_given_role = BTreeMap::new();
    for (&role, c) in &counts {
        let n = c[0] + c[1];
        if n == 0 {
            warnings.push(format!("no observations for role {}", role.as_str()));
            continue;
        }
        gender_given_role.insert(role, [c[0] as f64 / n as f64, c[1] as f64 / n as f64]);
    }
    let mut role_given_gender = BTreeMap::new();
    for (gi, name) in ["female", "male"].iter().enumerate() {
        let col: Vec<u64> = Role::ALL.iter().map(|r| counts[r][gi]).collect();
        let n: u64 = col.iter().sum();
        if n == 0 {
            warnings.push(format!("no observations for gender {name}"));
            continue;
        }
        let mut row = [0.0; 3];
        for (slot, &c) in row.iter_mut().zip(&col) {
            *slot = c as f64 / n as f64;
        }
        role_given_gender.insert(name.to_string(), row);
    }
    RoleDistributions {
        gender_given_role,
        role_given_gender,
        counts,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(spec: &[(Role, bool, usize)]) -> Vec<RoleObservation> {
        spec.iter()
            .flat_map(|&(r, f, k)| std::iter::repeat_n(RoleObservation::new(r, f, "s"), k))
            .collect()
    }

    #[test]
    fn hand_counted_table() {
        // speakers: 3 f, 1 m; addressees: 1 f, 3 m; side: 2 f, 2 m
        let o = obs(&[
            (Role::Speaker, true, 3),
            (Role::Speaker, false, 1),
            (Role::Addressee, true, 1),
            (Role::Addressee, false, 3),
            (Role::SideParticipant, true, 2),
            (Role::SideParticipant, false, 2),
        ]);
        assert_eq!(o.len(), 12);
        let d = role_distributions(&o);
        assert_eq!(d.gender_given_role[&Role::Speaker], [0.75, 0.25]);
        assert_eq!(d.gender_given_role[&Role::Addressee], [0.25, 0.75]);
        assert_eq!(d.role_given_gender["female"], [0.5, 1.0 / 6.0, 2.0 / 6.0]);
        assert_eq!(d.role_given_gender["male"], [1.0 / 6.0, 0.5, 2.0 / 6.0]);
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn uniform_and_empty_cells() {
        let o = obs(&[
            (Role::Speaker, true, 2),
            (Role::Speaker, false, 2),
            (Role::Addressee, true, 2),
            (Role::Addressee, false, 2),
        ]);
        let d = role_distributions(&o);
        assert_eq!(d.gender_given_role[&Role::Speaker], [0.5, 0.5]);
        assert!(!d.gender_given_role.contains_key(&Role::SideParticipant));
        assert_eq!(d.warnings.len(), 1);
        for row in d.role_given_gender.values() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
