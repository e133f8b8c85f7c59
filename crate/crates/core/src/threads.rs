//! Reply-to links, thread partitions and thread-dynamics events.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{Participant, StructureRecord};
use crate::error::{Error, Result};

/// Directed (child, parent) reply links with `parent < child`. Thread-opening
/// self-links are never members.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinkSet {
    links: BTreeSet<(usize, usize)>,
}

impl LinkSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a link; self-links are ignored. Returns false if the child
    /// already has a parent or the link points forward.
    pub fn insert(&mut self, child: usize, parent: usize) -> bool {
        if child == parent || parent > child || self.parent_of(child).is_some() {
            return false;
        }
        self.links.insert((child, parent))
    }

    pub fn parent_of(&self, child: usize) -> Option<usize> {
        self.links
            .range((child, 0)..=(child, usize::MAX))
            .next()
            .map(|&(_, p)| p)
    }

    pub fn contains(&self, child: usize, parent: usize) -> bool {
        self.links.contains(&(child, parent))
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    pub fn intersection_len(&self, other: &LinkSet) -> usize {
        self.links.intersection(&other.links).count()
    }

    /// Keeps only links whose endpoints both satisfy `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(usize) -> bool) {
        self.links.retain(|&(c, p)| keep(c) && keep(p));
    }
}

impl FromIterator<(usize, usize)> for LinkSet {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        let mut s = LinkSet::new();
        for (c, p) in iter {
            s.insert(c, p);
        }
        s
    }
}

/// Returns `{(i, reply_to_i) : reply_to_i != i}`.
pub fn link_set(records: &[StructureRecord]) -> LinkSet {
    records.iter().map(|r| (r.line_idx, r.reply_to)).collect()
}

/// Disjoint, non-empty clusters of line indices.
///
/// Each cluster is sorted ascending and clusters are ordered by their
/// smallest member, so equal partitions compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ThreadPartition {
    clusters: Vec<Vec<usize>>,
    n: usize,
}

impl ThreadPartition {
    /// Builds a partition, canonicalizing cluster order. Fails on empty or
    /// overlapping clusters.
    pub fn from_clusters(clusters: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(clusters.len());
        for mut c in clusters {
            if c.is_empty() {
                return Err(Error::invalid("empty cluster"));
            }
            c.sort_unstable();
            for &x in &c {
                if !seen.insert(x) {
                    return Err(Error::invalid(format!(
                        "element {x} appears in two clusters"
                    )));
                }
            }
            out.push(c);
        }
        out.sort_unstable_by_key(|c| c[0]);
        Ok(ThreadPartition {
            n: seen.len(),
            clusters: out,
        })
    }

    /// Groups elements by label.
    pub fn from_labels<L: Ord>(items: impl IntoIterator<Item = (usize, L)>) -> Result<Self> {
        let mut groups: BTreeMap<L, Vec<usize>> = BTreeMap::new();
        for (x, l) in items {
            groups.entry(l).or_default().push(x);
        }
        Self::from_clusters(groups.into_values().collect())
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn elements(&self) -> BTreeSet<usize> {
        self.clusters.iter().flatten().copied().collect()
    }

    /// Intersects every cluster with the kept elements, dropping clusters
    /// that become empty.
    pub fn restrict(&self, mut keep: impl FnMut(usize) -> bool) -> ThreadPartition {
        let clusters: Vec<Vec<usize>> = self
            .clusters
            .iter()
            .map(|c| c.iter().copied().filter(|&x| keep(x)).collect::<Vec<_>>())
            .filter(|c| !c.is_empty())
            .collect();
        let n = clusters.iter().map(Vec::len).sum();
        ThreadPartition { clusters, n }
    }
}

/// Union-find over dense indices with path compression and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns false when `a` and `b` were already connected.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Threads are the connected components of the reply-to graph. Links to
/// lines absent from `records` are ignored.
pub fn derive_threads(records: &[StructureRecord]) -> ThreadPartition {
    let lines: Vec<usize> = records
        .iter()
        .map(|r| r.line_idx)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<usize, usize> = lines.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let mut sets = DisjointSets::new(lines.len());
    for r in records {
        if r.reply_to == r.line_idx {
            continue;
        }
        if let (Some(&c), Some(&p)) = (index.get(&r.line_idx), index.get(&r.reply_to)) {
            sets.union(c, p);
        }
    }
    let labelled: Vec<(usize, usize)> = lines
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, sets.find(i)))
        .collect();
    ThreadPartition::from_labels(labelled).expect("components are disjoint")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventOptions {
    /// Drop events whose utterance is flagged extra-diegetic or monologue.
    pub exclude_nondialogic: bool,
}

impl Default for EventOptions {
    fn default() -> Self {
        EventOptions {
            exclude_nondialogic: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ThreadEvents {
    /// (line, speaker) of mid-clip thread-opening utterances.
    pub starters: Vec<(usize, Participant)>,
    /// (replying line, speaker of the parent) for every reply that is not
    /// a same-speaker continuation.
    pub holders: Vec<(usize, Participant)>,
}

/// Extracts who starts threads and who receives replies.
///
/// The clip-initial line never counts as a start; replies to one's own
/// previous line are continuations and do not count as holding.
pub fn thread_events(records: &[StructureRecord], opts: EventOptions) -> ThreadEvents {
    let by_line: BTreeMap<usize, &StructureRecord> =
        records.iter().map(|r| (r.line_idx, r)).collect();
    let first = by_line.keys().next().copied();
    let mut ev = ThreadEvents::default();
    for (&line, r) in &by_line {
        if opts.exclude_nondialogic && r.is_nondialogic() {
            continue;
        }
        if r.starts_thread() {
            if Some(line) != first {
                ev.starters.push((line, r.speaker.clone()));
            }
        } else if let Some(parent) = by_line.get(&r.reply_to) {
            if parent.speaker != r.speaker {
                ev.holders.push((line, parent.speaker.clone()));
            }
        }
    }
    ev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::normalize_name;

    fn rec(line: usize, speaker: &str, reply: usize) -> StructureRecord {
        StructureRecord::new(line, normalize_name(speaker).unwrap(), reply)
    }

    fn example_rows() -> Vec<StructureRecord> {
        vec![
            rec(11, "leonard", 11),
            rec(12, "penny", 11),
            rec(13, "penny", 13),
            rec(14, "amy", 13),
        ]
    }

    #[test]
    fn example_threads() {
        let t = derive_threads(&example_rows());
        assert_eq!(t.clusters(), &[vec![11, 12], vec![13, 14]]);
        let reindexed: Vec<_> = [(1, 1), (2, 1), (3, 3), (4, 3)]
            .iter()
            .map(|&(l, r)| rec(l, "x", r))
            .collect();
        assert_eq!(
            derive_threads(&reindexed).clusters(),
            &[vec![1, 2], vec![3, 4]]
        );
    }

    #[test]
    fn self_links_and_chains() {
        let singles: Vec<_> = (1..=5).map(|i| rec(i, "x", i)).collect();
        assert_eq!(derive_threads(&singles).num_clusters(), 5);
        let chain: Vec<_> = (1..=4).map(|i| rec(i, "x", i.max(2) - 1)).collect();
        assert_eq!(derive_threads(&chain).clusters(), &[vec![1, 2, 3, 4]]);
    }

    #[test]
    fn links() {
        let l = link_set(&example_rows());
        assert_eq!(l.iter().collect::<Vec<_>>(), vec![(12, 11), (14, 13)]);
        let singles: Vec<_> = (1..=3).map(|i| rec(i, "x", i)).collect();
        assert!(link_set(&singles).is_empty());
        let chain = vec![rec(1, "a", 1), rec(2, "b", 1), rec(3, "c", 2)];
        assert_eq!(
            link_set(&chain).iter().collect::<Vec<_>>(),
            vec![(2, 1), (3, 2)]
        );
    }

    #[test]
    fn example_events() {
        let ev = thread_events(&example_rows(), EventOptions::default());
        let names = |v: &[(usize, Participant)]| {
            v.iter()
                .map(|(l, p)| (*l, p.name().to_string()))
                .collect::<Vec<_>>()
        };
        assert_eq!(names(&ev.starters), vec![(13, "penny".to_string())]);
        assert_eq!(
            names(&ev.holders),
            vec![(12, "leonard".to_string()), (14, "penny".to_string())]
        );
    }

    #[test]
    fn continuation_is_not_holding() {
        let ev = thread_events(&[rec(1, "a", 1), rec(2, "a", 1)], EventOptions::default());
        assert!(ev.starters.is_empty());
        assert!(ev.holders.is_empty());
    }

    #[test]
    fn nondialogic_filter() {
        let mut rows = vec![rec(1, "a", 1), rec(2, "b", 2)];
        rows[1].monologue = true;
        assert!(thread_events(&rows, EventOptions::default())
            .starters
            .is_empty());
        let ev = thread_events(
            &rows,
            EventOptions {
                exclude_nondialogic: false,
            },
        );
        assert_eq!(ev.starters.len(), 1);
    }

    #[test]
    fn partition_rejects_overlap() {
        assert!(ThreadPartition::from_clusters(vec![vec![1, 2], vec![2]]).is_err());
        assert!(ThreadPartition::from_clusters(vec![vec![]]).is_err());
        let p = ThreadPartition::from_clusters(vec![vec![4, 3], vec![2, 1]]).unwrap();
        assert_eq!(p.clusters(), &[vec![1, 2], vec![3, 4]]);
        assert_eq!(p.restrict(|x| x != 2).clusters(), &[vec![1], vec![3, 4]]);
    }
}
