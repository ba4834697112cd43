use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityType {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "ORG")]
    Org,
}

impl EntityType {
    pub const ALL: [EntityType; 3] = [EntityType::Per, EntityType::Loc, EntityType::Org];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Per => "PER",
            EntityType::Loc => "LOC",
            EntityType::Org => "ORG",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PER" => Ok(EntityType::Per),
            "LOC" => Ok(EntityType::Loc),
            "ORG" => Ok(EntityType::Org),
            other => Err(Error::InvalidTags(format!("unknown entity type {other:?}"))),
        }
    }
}

/// One IOB tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    O,
    B(EntityType),
    I(EntityType),
}

impl Tag {
    pub fn entity_type(self) -> Option<EntityType> {
        match self {
            Tag::O => None,
            Tag::B(t) | Tag::I(t) => Some(t),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(t) => write!(f, "B-{t}"),
            Tag::I(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    /// Parses `O`, `B-T` or `I-T` for `T` in PER/LOC/ORG. MISC is not a
    /// valid tag here; the CoNLL reader rewrites it before this point.
    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Tag::O);
        }
        match s.split_once('-') {
            Some(("B", t)) => Ok(Tag::B(t.parse()?)),
            Some(("I", t)) => Ok(Tag::I(t.parse()?)),
            _ => Err(Error::InvalidTags(format!("unknown tag {s:?}"))),
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A typed, contiguous, inclusive token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub etype: EntityType,
    pub start: usize,
    pub end: usize,
}

impl EntitySpan {
    pub fn new(etype: EntityType, start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { etype, start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

impl fmt::Display for EntitySpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.etype, self.start, self.end)
    }
}

pub(crate) fn check_iob(tags: &[Tag]) -> std::result::Result<(), String> {
    let mut prev = Tag::O;
    for (k, &tag) in tags.iter().enumerate() {
        if let Tag::I(t) = tag {
            if prev.entity_type() != Some(t) {
                return Err(format!("{tag} at position {k} follows {prev}"));
            }
        }
        prev = tag;
    }
    Ok(())
}

/// Rewrites every dangling `I-X` (after `O` or a different type) to `B-X`.
/// Returns the number of tags changed.
pub fn repair_iob(tags: &mut [Tag]) -> usize {
    let mut repairs = 0;
    let mut prev = Tag::O;
    for tag in tags.iter_mut() {
        if let Tag::I(t) = *tag {
            if prev.entity_type() != Some(t) {
                *tag = Tag::B(t);
                repairs += 1;
            }
        }
        prev = *tag;
    }
    repairs
}

/// Decodes IOB tags into spans sorted by start. A `B-` tag always opens a new
/// span, so adjacent entities of the same type stay distinct.
pub fn spans_from_iob(tags: &[Tag]) -> Result<Vec<EntitySpan>> {
    check_iob(tags).map_err(Error::InvalidTags)?;
    let mut spans: Vec<EntitySpan> = Vec::new();
    for (k, &tag) in tags.iter().enumerate() {
        match tag {
            Tag::O => {}
            Tag::B(t) => spans.push(EntitySpan::new(t, k, k)),
            Tag::I(_) => spans.last_mut().expect("checked above").end = k,
        }
    }
    Ok(spans)
}

/// Encodes spans as `n` IOB tags. Spans may arrive in any order.
pub fn iob_from_spans(spans: &[EntitySpan], n: usize) -> Result<Vec<Tag>> {
    let mut tags = vec![Tag::O; n];
    let mut sorted = spans.to_vec();
    sorted.sort_by_key(|s| s.start);
    for pair in sorted.windows(2) {
        if pair[0].overlaps(&pair[1]) {
            return Err(Error::OverlappingSpans(format!(
                "{} and {}",
                pair[0], pair[1]
            )));
        }
    }
    for span in &sorted {
        if span.start > span.end || span.end >= n {
            return Err(Error::InvalidTags(format!(
                "span {span} out of bounds for {n} tokens"
            )));
        }
        tags[span.start] = Tag::B(span.etype);
        for tag in &mut tags[span.start + 1..=span.end] {
            *tag = Tag::I(span.etype);
        }
    }
    Ok(tags)
}
