//! Relation labels of the SemEval-2010 Task 8 inventory.
//!
//! Nine directed relation types, each in two argument orders, plus the
//! undirected `Other` class: 19 labels with dense ids `0..19`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const NUM_TYPES: usize = 9;
pub const NUM_LABELS: usize = 2 * NUM_TYPES + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationType {
    CauseEffect,
    ComponentWhole,
    ContentContainer,
    EntityDestination,
    EntityOrigin,
    InstrumentAgency,
    MemberCollection,
    MessageTopic,
    ProductProducer,
}

impl RelationType {
    pub const ALL: [RelationType; NUM_TYPES] = [
        RelationType::CauseEffect,
        RelationType::ComponentWhole,
        RelationType::ContentContainer,
        RelationType::EntityDestination,
        RelationType::EntityOrigin,
        RelationType::InstrumentAgency,
        RelationType::MemberCollection,
        RelationType::MessageTopic,
        RelationType::ProductProducer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationType::CauseEffect => "Cause-Effect",
            RelationType::ComponentWhole => "Component-Whole",
            RelationType::ContentContainer => "Content-Container",
            RelationType::EntityDestination => "Entity-Destination",
            RelationType::EntityOrigin => "Entity-Origin",
            RelationType::InstrumentAgency => "Instrument-Agency",
            RelationType::MemberCollection => "Member-Collection",
            RelationType::MessageTopic => "Message-Topic",
            RelationType::ProductProducer => "Product-Producer",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Argument order of a directed relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    /// `(e1,e2)`: the first entity fills the first role.
    Forward,
    /// `(e2,e1)`
    Backward,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationLabel {
    Directed(RelationType, Direction),
    Other,
}

impl RelationLabel {
    /// All labels in id order.
    pub fn all() -> impl Iterator<Item = RelationLabel> {
        (0..NUM_LABELS).map(|id| RelationLabel::from_id(id).expect("id in range"))
    }

    pub fn id(self) -> usize {
        match self {
            RelationLabel::Directed(ty, Direction::Forward) => 2 * ty.index(),
            RelationLabel::Directed(ty, Direction::Backward) => 2 * ty.index() + 1,
            RelationLabel::Other => NUM_LABELS - 1,
        }
    }

    pub fn from_id(id: usize) -> Option<Self> {
        if id == NUM_LABELS - 1 {
            return Some(RelationLabel::Other);
        }
        let ty = *RelationType::ALL.get(id / 2)?;
        let dir = if id.is_multiple_of(2) {
            Direction::Forward
        } else {
            Direction::Backward
        };
        Some(RelationLabel::Directed(ty, dir))
    }

    /// Same relation type with swapped arguments; `Other` is its own inverse.
    pub fn inverse(self) -> Self {
        match self {
            RelationLabel::Directed(ty, dir) => RelationLabel::Directed(ty, dir.flip()),
            RelationLabel::Other => RelationLabel::Other,
        }
    }

    pub fn relation_type(self) -> Option<RelationType> {
        match self {
            RelationLabel::Directed(ty, _) => Some(ty),
            RelationLabel::Other => None,
        }
    }

    pub fn is_directed(self) -> bool {
        !matches!(self, RelationLabel::Other)
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationLabel::Directed(ty, Direction::Forward) => write!(f, "{}(e1,e2)", ty.name()),
            RelationLabel::Directed(ty, Direction::Backward) => write!(f, "{}(e2,e1)", ty.name()),
            RelationLabel::Other => f.write_str("Other"),
        }
    }
}

impl FromStr for RelationLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact == "Other" {
            return Ok(RelationLabel::Other);
        }
        let (name, args) = compact
            .split_once('(')
            .ok_or_else(|| Error::Data(format!("unknown relation `{s}`")))?;
        let ty = RelationType::ALL
            .iter()
            .copied()
            .find(|ty| ty.name() == name)
            .ok_or_else(|| Error::Data(format!("unknown relation type `{name}`")))?;
        let dir = match args {
            "e1,e2)" => Direction::Forward,
            "e2,e1)" => Direction::Backward,
            _ => return Err(Error::Data(format!("malformed relation arguments in `{s}`"))),
        };
        Ok(RelationLabel::Directed(ty, dir))
    }
}

impl Serialize for RelationLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RelationLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_map_is_a_bijection_over_19_ids() {
        let labels: Vec<_> = RelationLabel::all().collect();
        assert_eq!(labels.len(), 19);
        for (id, label) in labels.iter().enumerate() {
            assert_eq!(label.id(), id);
            let text = label.to_string();
            assert_eq!(text.parse::<RelationLabel>().unwrap(), *label);
        }
        let mut strings: Vec<_> = labels.iter().map(|l| l.to_string()).collect();
        strings.sort();
        strings.dedup();
        assert_eq!(strings.len(), 19);
        assert_eq!(RelationLabel::from_id(19), None);
    }

    #[test]
    fn parses_directed_and_other() {
        assert_eq!(
            "Content-Container(e1,e2)".parse::<RelationLabel>().unwrap(),
            RelationLabel::Directed(RelationType::ContentContainer, Direction::Forward)
        );
        assert_eq!("Other".parse::<RelationLabel>().unwrap(), RelationLabel::Other);
        assert!("Foo-Bar(e1,e2)".parse::<RelationLabel>().is_err());
        assert!("Cause-Effect(e1,e3)".parse::<RelationLabel>().is_err());
    }

    #[test]
    fn inverse_is_an_involution() {
        for label in RelationLabel::all() {
            assert_eq!(label.inverse().inverse(), label);
            assert_eq!(label.inverse().relation_type(), label.relation_type());
        }
        assert_eq!(RelationLabel::Other.inverse(), RelationLabel::Other);
    }
}
