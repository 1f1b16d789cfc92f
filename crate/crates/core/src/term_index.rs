//! Lower-cased term haystack for substring search.
//!
//! Every searchable description (active, attached to an active concept) is
//! lower-cased and appended to one buffer followed by `\n`. A substring scan
//! over the buffer then maps each hit back to its entry by binary search on
//! the entry start offsets. Terms never contain `\n`, so a needle without one
//! cannot match across entries.

use memchr::memmem;

use crate::model::{Concept, Description};

/// Match quality, best first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MatchTier {
    Exact = 0,
    Prefix = 1,
    Substring = 2,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct TermIndex {
    pub(crate) haystack: Vec<u8>,
    /// Offset of each entry in `haystack`.
    pub(crate) starts: Vec<u32>,
    /// Description position of each entry.
    pub(crate) descriptions: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct TermMatch {
    pub(crate) description: u32,
    pub(crate) tier: MatchTier,
}

impl TermIndex {
    pub(crate) fn build(concepts: &[Concept], descriptions: &[Description], concept_pos: &[usize]) -> Self {
        let mut index = TermIndex::default();
        for (i, d) in descriptions.iter().enumerate() {
            if !d.active || !concepts[concept_pos[i]].active {
                continue;
            }
            index.starts.push(index.haystack.len() as u32);
            index.descriptions.push(i as u32);
            index.haystack.extend_from_slice(d.term.to_lowercase().as_bytes());
            index.haystack.push(b'\n');
        }
        index
    }

    fn entry_end(&self, entry: usize) -> usize {
        // Exclusive of the trailing separator.
        self.starts
            .get(entry + 1)
            .map_or(self.haystack.len(), |&s| s as usize)
            - 1
    }

    /// All entries containing `needle`, which must already be lower-cased.
    pub(crate) fn find(&self, needle: &str) -> Vec<TermMatch> {
        let mut out = Vec::new();
        if needle.is_empty() || needle.contains('\n') {
            return out;
        }
        let mut last_entry = usize::MAX;
        for at in memmem::find_iter(&self.haystack, needle.as_bytes()) {
            let entry = self.starts.partition_point(|&s| s as usize <= at) - 1;
            if entry == last_entry {
                continue;
            }
            last_entry = entry;
            let start = self.starts[entry] as usize;
            let tier = if at != start {
                MatchTier::Substring
            } else if self.entry_end(entry) - start == needle.len() {
                MatchTier::Exact
            } else {
                MatchTier::Prefix
            };
            out.push(TermMatch { description: self.descriptions[entry], tier });
        }
        out
    }

    /// Structural consistency against a description table of `descriptions` rows.
    pub(crate) fn well_formed(&self, descriptions: usize) -> bool {
        self.starts.len() == self.descriptions.len()
            && self.starts.first().is_none_or(|&s| s == 0)
            && self.starts.windows(2).all(|w| w[0] < w[1])
            && self
                .starts
                .last()
                .is_none_or(|&s| (s as usize) < self.haystack.len())
            && self.haystack.last().is_none_or(|&b| b == b'\n')
            && self.descriptions.iter().all(|&d| (d as usize) < descriptions)
            && std::str::from_utf8(&self.haystack).is_ok()
    }
}
