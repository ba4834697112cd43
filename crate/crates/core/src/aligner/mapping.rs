use std::collections::BTreeSet;

use crate::corpus_io::AlignmentLinks;
use crate::error::{Error, Result};

/// One-to-many index map: every key in `0..domain` maps to a (possibly empty)
/// set of indices in `0..codomain`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionalMapping {
    sets: Vec<BTreeSet<usize>>,
    codomain: usize,
}

impl DirectionalMapping {
    pub fn new(domain: usize, codomain: usize) -> Self {
        Self {
            sets: vec![BTreeSet::new(); domain],
            codomain,
        }
    }

    pub fn from_sets(sets: Vec<BTreeSet<usize>>, codomain: usize) -> Result<Self> {
        if let Some((k, v)) = sets
            .iter()
            .enumerate()
            .find_map(|(k, s)| s.iter().find(|&&v| v >= codomain).map(|&v| (k, v)))
        {
            return Err(Error::InvalidTags(format!(
                "mapping {k} -> {v} outside codomain of size {codomain}"
            )));
        }
        Ok(Self { sets, codomain })
    }

    /// The english-to-target view of source/target-oriented links.
    pub fn source_to_target(
        links: &AlignmentLinks,
        src_len: usize,
        tgt_len: usize,
    ) -> Result<Self> {
        Self::build(links.pairs(), src_len, tgt_len)
    }

    /// The target-to-english view of source/target-oriented links.
    pub fn target_to_source(
        links: &AlignmentLinks,
        src_len: usize,
        tgt_len: usize,
    ) -> Result<Self> {
        Self::build(links.pairs().map(|(i, j)| (j, i)), tgt_len, src_len)
    }

    fn build(
        pairs: impl Iterator<Item = (usize, usize)>,
        domain: usize,
        codomain: usize,
    ) -> Result<Self> {
        let mut m = Self::new(domain, codomain);
        for (k, v) in pairs {
            if k >= domain || v >= codomain {
                return Err(Error::InvalidTags(format!(
                    "link {k}-{v} outside {domain}x{codomain}"
                )));
            }
            m.sets[k].insert(v);
        }
        Ok(m)
    }

    /// Adds `key -> value`. Panics when either index is out of range.
    pub fn insert(&mut self, key: usize, value: usize) {
        assert!(value < self.codomain, "value {value} outside codomain");
        self.sets[key].insert(value);
    }

    pub fn get(&self, key: usize) -> &BTreeSet<usize> {
        &self.sets[key]
    }

    pub fn domain(&self) -> usize {
        self.sets.len()
    }

    pub fn codomain(&self) -> usize {
        self.codomain
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BTreeSet<usize>)> {
        self.sets.iter().enumerate()
    }

    /// Every `(key, value)` pair as a link set.
    pub fn to_links(&self) -> AlignmentLinks {
        self.iter()
            .flat_map(|(k, s)| s.iter().map(move |&v| (k, v)))
            .collect()
    }

    /// Pointwise subset test.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.sets.len() == other.sets.len()
            && self
                .sets
                .iter()
                .zip(&other.sets)
                .all(|(a, b)| a.is_subset(b))
    }
}
