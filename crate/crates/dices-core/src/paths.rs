//! Path machinery: weighted shortest paths, a K-shortest-path catalog per
//! switch pair, path edit distance, and random alternative selection.
//!
//! Every routine here is deterministic. Shortest-path ties are broken by
//! fewest hops, then by the lexicographically smallest link-id sequence;
//! catalog entries are ordered by ascending total delay with the same
//! lexicographic rule. Link indices follow link-id order (see [`Network`]),
//! so sequences of `LinkIdx` compare exactly like sequences of link ids.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::net::{Flow, LinkIdx, Network, PathSeq, SwitchIdx};

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("no path from {0:?} to {1:?}")]
    Unreachable(String, String),
    #[error("weight vector has {0} entries, network has {1} links")]
    WeightSize(usize, usize),
    #[error("link weight {0} outside [1, {1}]")]
    BadWeight(f64, f64),
    #[error("catalog has no entry for pair ({0:?}, {1:?})")]
    MissingPair(String, String),
}

/// Ceiling for adjustable link weights.
pub const W_MAX: f64 = 1e6;

/// One weight per link, always inside `[1, w_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    w_max: f64,
}

impl WeightVector {
    /// All-ones weights, the neutral starting point.
    pub fn unit(net: &Network) -> Self {
        WeightVector {
            weights: vec![1.0; net.link_count()],
            w_max: W_MAX,
        }
    }

    pub fn with_max(net: &Network, w_max: f64) -> Self {
        WeightVector {
            weights: vec![1.0; net.link_count()],
            w_max,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn get(&self, e: LinkIdx) -> f64 {
        self.weights[e]
    }

    /// Sets a weight, clamping into `[1, w_max]`.
    pub fn set(&mut self, e: LinkIdx, w: f64) {
        self.weights[e] = w.clamp(1.0, self.w_max);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn validate(&self, net: &Network) -> Result<(), PathError> {
        if self.weights.len() != net.link_count() {
            return Err(PathError::WeightSize(self.weights.len(), net.link_count()));
        }
        for &w in &self.weights {
            if !(1.0..=self.w_max).contains(&w) || !w.is_finite() {
                return Err(PathError::BadWeight(w, self.w_max));
            }
        }
        Ok(())
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Cost {
    weight: f64,
    hops: u32,
}

impl Cost {
    const ZERO: Cost = Cost { weight: 0.0, hops: 0 };

    fn plus(self, w: f64) -> Cost {
        Cost {
            weight: self.weight + w,
            hops: self.hops + 1,
        }
    }
}

impl Eq for Cost {}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.hops.cmp(&other.hops))
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct HeapEntry {
    cost: Cost,
    node: SwitchIdx,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.node == other.node
    }
}
impl Eq for HeapEntry {}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap; node index settles exact cost ties.
        other
            .cost
            .cmp(&self.cost)
            .then(other.node.cmp(&self.node))
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cost of reaching the terminal from every switch, by Dijkstra over the
/// reversed graph. `None` where the terminal is unreachable.
fn costs_to_terminal<W>(net: &Network, terminal: SwitchIdx, weight: &W) -> Vec<Option<Cost>>
where
    W: Fn(LinkIdx) -> Option<f64>,
{
    let mut dist: Vec<Option<Cost>> = vec![None; net.switch_count()];
    let mut done = vec![false; net.switch_count()];
    let mut heap = BinaryHeap::new();
    dist[terminal] = Some(Cost::ZERO);
    heap.push(HeapEntry { cost: Cost::ZERO, node: terminal });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        for &e in net.in_links(node) {
            let Some(w) = weight(e) else { continue };
            let from = net.link(e).from;
            if done[from] {
                continue;
            }
            let next = cost.plus(w);
            if dist[from].is_none_or(|d| next < d) {
                dist[from] = Some(next);
                heap.push(HeapEntry { cost: next, node: from });
            }
        }
    }
    dist
}

/// Walks forward from `source`, always taking the smallest-id link that stays
/// on an optimal path. Positive weights make the result simple and finite.
fn walk_optimal<W>(
    net: &Network,
    source: SwitchIdx,
    terminal: SwitchIdx,
    dist: &[Option<Cost>],
    weight: &W,
) -> Option<Vec<LinkIdx>>
where
    W: Fn(LinkIdx) -> Option<f64>,
{
    dist[source]?;
    let mut path = Vec::new();
    let mut at = source;
    while at != terminal {
        let here = dist[at].unwrap();
        let mut chosen = None;
        for &e in net.out_links(at) {
            let Some(w) = weight(e) else { continue };
            let to = net.link(e).to;
            let Some(rest) = dist[to] else { continue };
            // Out-links come in ascending id order, so the first link whose
            // cost decomposes exactly is the lexicographic choice.
            if rest.plus(w) == here {
                chosen = Some((e, to));
                break;
            }
        }
        let (e, to) = chosen?;
        path.push(e);
        at = to;
    }
    Some(path)
}

/// Minimum-weight path under `weights`. Ties fall to fewest hops, then to the
/// lexicographically smallest link-id sequence.
pub fn shortest_path(
    net: &Network,
    source: SwitchIdx,
    terminal: SwitchIdx,
    weights: &WeightVector,
) -> Result<PathSeq, PathError> {
    weights.validate(net)?;
    let w = |e: LinkIdx| Some(weights.get(e));
    let dist = costs_to_terminal(net, terminal, &w);
    let path = walk_optimal(net, source, terminal, &dist, &w).ok_or_else(|| {
        PathError::Unreachable(
            net.switch_id(source).to_string(),
            net.switch_id(terminal).to_string(),
        )
    })?;
    Ok(Arc::new(path))
}

/// Shortest path by propagation delay with links in `banned_links` removed
/// and paths through `banned_switches` forbidden. Exact integer delays keep
/// tie detection precise.
fn delay_shortest_masked(
    net: &Network,
    source: SwitchIdx,
    terminal: SwitchIdx,
    banned_links: &BTreeSet<LinkIdx>,
    banned_switches: &[bool],
) -> Option<Vec<LinkIdx>> {
    if banned_switches[source] || banned_switches[terminal] {
        return None;
    }
    let w = |e: LinkIdx| {
        if banned_links.contains(&e) {
            return None;
        }
        let link = net.link(e);
        if banned_switches[link.from] || banned_switches[link.to] {
            return None;
        }
        Some(link.delay_ms as f64)
    };
    let dist = costs_to_terminal(net, terminal, &w);
    walk_optimal(net, source, terminal, &dist, &w)
}

fn path_delay(net: &Network, path: &[LinkIdx]) -> u64 {
    path.iter().map(|&e| net.link(e).delay_ms).sum()
}

/// Up to `k` loop-free paths between `source` and `terminal`, ordered by
/// ascending total delay, ties by fewer links, then by lexicographic link-id
/// sequence.
///
/// Yen's algorithm: each new path is the best spur off an already accepted
/// one. Candidate ordering uses the same (delay, length, sequence) key as
/// the result and as the masked Dijkstra that generates spurs.
pub fn k_shortest_by_delay(
    net: &Network,
    source: SwitchIdx,
    terminal: SwitchIdx,
    k: usize,
) -> Vec<PathSeq> {
    if k == 0 {
        return Vec::new();
    }
    let no_links = BTreeSet::new();
    let no_switches = vec![false; net.switch_count()];
    let Some(first) = delay_shortest_masked(net, source, terminal, &no_links, &no_switches) else {
        return Vec::new();
    };
    let mut accepted: Vec<Vec<LinkIdx>> = vec![first];
    let mut candidates: BTreeMap<(u64, usize, Vec<LinkIdx>), ()> = BTreeMap::new();

    while accepted.len() < k {
        let prev = accepted.last().unwrap().clone();
        for spur_pos in 0..prev.len() {
            let root = &prev[..spur_pos];
            let spur_node = if spur_pos == 0 {
                source
            } else {
                net.link(prev[spur_pos - 1]).to
            };

            // Remove the next hop of every accepted path sharing this root.
            let mut banned_links = BTreeSet::new();
            for path in &accepted {
                if path.len() > spur_pos && path[..spur_pos] == *root {
                    banned_links.insert(path[spur_pos]);
                }
            }
            // Keep the spur from re-entering the root.
            let mut banned_switches = vec![false; net.switch_count()];
            let mut at = source;
            for &e in root {
                banned_switches[at] = true;
                at = net.link(e).to;
            }

            if let Some(spur) =
                delay_shortest_masked(net, spur_node, terminal, &banned_links, &banned_switches)
            {
                let mut candidate = root.to_vec();
                candidate.extend(spur);
                let key = (path_delay(net, &candidate), candidate.len(), candidate);
                candidates.entry(key).or_insert(());
            }
        }
        let Some((key, ())) = candidates.pop_first() else {
            break;
        };
        accepted.push(key.2);
    }
    accepted.into_iter().map(Arc::new).collect()
}

/// Precomputed path alternatives per ordered switch pair.
#[derive(Debug, Clone)]
pub struct PathCatalog {
    k: usize,
    entries: BTreeMap<(SwitchIdx, SwitchIdx), Vec<PathSeq>>,
}

impl PathCatalog {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn paths(&self, source: SwitchIdx, terminal: SwitchIdx) -> Option<&[PathSeq]> {
        self.entries
            .get(&(source, terminal))
            .map(|v| v.as_slice())
    }

    pub fn pair_count(&self) -> usize {
        self.entries.len()
    }
}

/// Catalog over every ordered switch pair. Pairs without any path are left
/// out, so `paths` distinguishes "no entry" from "routed".
pub fn build_catalog(net: &Network, k: usize) -> PathCatalog {
    let pairs = (0..net.switch_count())
        .flat_map(|s| (0..net.switch_count()).map(move |t| (s, t)))
        .filter(|(s, t)| s != t);
    build_catalog_for_pairs(net, k, pairs)
}

/// Catalog restricted to the pairs that will actually be requested. Scales to
/// large networks where the full pair square would be wasteful.
pub fn build_catalog_for_pairs(
    net: &Network,
    k: usize,
    pairs: impl IntoIterator<Item = (SwitchIdx, SwitchIdx)>,
) -> PathCatalog {
    let mut entries = BTreeMap::new();
    for (s, t) in pairs {
        if s == t || entries.contains_key(&(s, t)) {
            continue;
        }
        let paths = k_shortest_by_delay(net, s, t, k);
        if !paths.is_empty() {
            entries.insert((s, t), paths);
        }
    }
    PathCatalog { k, entries }
}

/// Replaces the flow's path with one drawn uniformly from the catalog entry
/// for its pair, excluding the current path. A flow whose only option is its
/// current path comes back unchanged.
pub fn alternative_flow<R: Rng>(
    flow: &Flow,
    net: &Network,
    catalog: &PathCatalog,
    rng: &mut R,
) -> Result<Flow, PathError> {
    let paths = catalog
        .paths(flow.request.source, flow.request.terminal)
        .ok_or_else(|| {
            PathError::MissingPair(
                net.switch_id(flow.request.source).to_string(),
                net.switch_id(flow.request.terminal).to_string(),
            )
        })?;
    let current: &[LinkIdx] = &flow.path;
    let options: Vec<&PathSeq> = paths.iter().filter(|p| p.as_slice() != current).collect();
    if options.is_empty() {
        return Ok(flow.clone());
    }
    let pick = options[rng.gen_range(0..options.len())].clone();
    Ok(Flow::new(flow.request.clone(), pick))
}

/// Edit distance between two paths over link identities:
/// `|a| + |b| - 2 * LCS(a, b)`. Zero exactly for identical paths.
pub fn edit_distance(a: &[LinkIdx], b: &[LinkIdx]) -> usize {
    if a.is_empty() || b.is_empty() {
        return a.len() + b.len();
    }
    // One-row DP over the LCS table.
    let mut row = vec![0usize; b.len() + 1];
    for &x in a {
        let mut diag = 0;
        for (j, &y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    a.len() + b.len() - 2 * row[b.len()]
}
