//! Network model: switches, directed capacitated links, requests, flows.
//!
//! A network is a directed graph `G = (V, E)` where every link carries an
//! integer bandwidth in Mbps and an integer propagation delay in ms. Traffic
//! enters as requests; a request routed over a concrete path becomes a flow.
//! Rates are tracked internally in Kbps so that per-link throughput stays an
//! exact integer (sub-Mbps rates such as 64 Kbps audio streams are common).

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

/// Index of a switch inside a [`Network`], stable for its lifetime.
pub type SwitchIdx = usize;
/// Index of a link inside a [`Network`]. Links are stored sorted by link id,
/// so ascending `LinkIdx` is ascending lexicographic id order.
pub type LinkIdx = usize;

/// A routed path, shared cheaply between flow sets.
pub type PathSeq = Arc<Vec<LinkIdx>>;

/// Directed link described by a topology file or builder.
#[derive(Debug, Clone, Deserialize, PartialEq, Eq)]
pub struct LinkSpec {
    pub from: String,
    pub to: String,
    pub bandwidth_mbps: u64,
    pub delay_ms: u64,
}

/// Directed link between two switches.
#[derive(Debug, Clone)]
pub struct Link {
    /// Derived id, `"<from>-><to>"`. Unique because at most one directed link
    /// may exist per ordered switch pair.
    pub id: String,
    pub from: SwitchIdx,
    pub to: SwitchIdx,
    pub bandwidth_mbps: u64,
    pub delay_ms: u64,
}

impl Link {
    pub fn capacity_kbps(&self) -> u64 {
        self.bandwidth_mbps * 1000
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("duplicate switch id {0:?}")]
    DuplicateSwitch(String),
    #[error("link {0:?} references unknown switch {1:?}")]
    UnknownSwitch(String, String),
    #[error("self loop on switch {0:?}")]
    SelfLoop(String),
    #[error("duplicate link {0:?}")]
    DuplicateLink(String),
    #[error("link {0:?} must have bandwidth >= 1 Mbps")]
    ZeroBandwidth(String),
    #[error("link {0:?} must have delay >= 1 ms")]
    ZeroDelay(String),
    #[error("topology has no switches")]
    Empty,
    #[error("failed to parse topology: {0}")]
    Parse(String),
}

/// Immutable directed network. Switches and links are kept sorted by their
/// string ids so every index-based iteration is deterministic.
#[derive(Debug, Clone)]
pub struct Network {
    switches: Vec<String>,
    links: Vec<Link>,
    switch_index: HashMap<String, SwitchIdx>,
    link_index: HashMap<String, LinkIdx>,
    out_links: Vec<Vec<LinkIdx>>,
    in_links: Vec<Vec<LinkIdx>>,
    by_pair: HashMap<(SwitchIdx, SwitchIdx), LinkIdx>,
    total_delay_ms: u64,
}

impl Network {
    pub fn new(mut switches: Vec<String>, specs: Vec<LinkSpec>) -> Result<Self, TopologyError> {
        if switches.is_empty() {
            return Err(TopologyError::Empty);
        }
        switches.sort();
        let mut switch_index = HashMap::new();
        for (i, s) in switches.iter().enumerate() {
            if switch_index.insert(s.clone(), i).is_some() {
                return Err(TopologyError::DuplicateSwitch(s.clone()));
            }
        }

        let mut links = Vec::with_capacity(specs.len());
        for spec in specs {
            let id = format!("{}->{}", spec.from, spec.to);
            let from = *switch_index
                .get(&spec.from)
                .ok_or_else(|| TopologyError::UnknownSwitch(id.clone(), spec.from.clone()))?;
            let to = *switch_index
                .get(&spec.to)
                .ok_or_else(|| TopologyError::UnknownSwitch(id.clone(), spec.to.clone()))?;
            if from == to {
                return Err(TopologyError::SelfLoop(spec.from));
            }
            if spec.bandwidth_mbps == 0 {
                return Err(TopologyError::ZeroBandwidth(id));
            }
            if spec.delay_ms == 0 {
                return Err(TopologyError::ZeroDelay(id));
            }
            links.push(Link {
                id,
                from,
                to,
                bandwidth_mbps: spec.bandwidth_mbps,
                delay_ms: spec.delay_ms,
            });
        }
        links.sort_by(|a, b| a.id.cmp(&b.id));

        let mut link_index = HashMap::new();
        let mut by_pair = HashMap::new();
        let mut out_links = vec![Vec::new(); switches.len()];
        let mut in_links = vec![Vec::new(); switches.len()];
        for (e, link) in links.iter().enumerate() {
            if link_index.insert(link.id.clone(), e).is_some() {
                return Err(TopologyError::DuplicateLink(link.id.clone()));
            }
            by_pair.insert((link.from, link.to), e);
            out_links[link.from].push(e);
            in_links[link.to].push(e);
        }
        let total_delay_ms = links.iter().map(|l| l.delay_ms).sum();

        Ok(Network {
            switches,
            links,
            switch_index,
            link_index,
            out_links,
            in_links,
            by_pair,
            total_delay_ms,
        })
    }

    pub fn switch_count(&self) -> usize {
        self.switches.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn switch_id(&self, s: SwitchIdx) -> &str {
        &self.switches[s]
    }

    pub fn switch_idx(&self, id: &str) -> Option<SwitchIdx> {
        self.switch_index.get(id).copied()
    }

    pub fn link(&self, e: LinkIdx) -> &Link {
        &self.links[e]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_idx(&self, id: &str) -> Option<LinkIdx> {
        self.link_index.get(id).copied()
    }

    pub fn link_between(&self, from: SwitchIdx, to: SwitchIdx) -> Option<LinkIdx> {
        self.by_pair.get(&(from, to)).copied()
    }

    /// Outgoing links of `s` in ascending link-id order.
    pub fn out_links(&self, s: SwitchIdx) -> &[LinkIdx] {
        &self.out_links[s]
    }

    /// Incoming links of `s` in ascending link-id order.
    pub fn in_links(&self, s: SwitchIdx) -> &[LinkIdx] {
        &self.in_links[s]
    }

    /// Sum of propagation delays over every link in the network.
    pub fn total_delay_ms(&self) -> u64 {
        self.total_delay_ms
    }
}

/// Transport class of a request, deciding how the flow reacts to contention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Rate-adaptive (TCP-class): backs off to its max-min fair share.
    Elastic,
    /// Fixed-rate (UDP-class): always offers its full rate.
    Inelastic,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Elastic => write!(f, "elastic"),
            Protocol::Inelastic => write!(f, "inelastic"),
        }
    }
}

#[derive(Debug, Error)]
pub enum RequestError {
    #[error("request {0:?}: source equals terminal")]
    Loopback(String),
    #[error("request {0:?}: rate must be positive")]
    ZeroRate(String),
    #[error("request {0:?}: departure {1} ms not after arrival {2} ms")]
    DepartureBeforeArrival(String, u64, u64),
}

/// A demand to carry `rate_kbps` from `source` to `terminal`, active from
/// `arrival_ms` until `departure_ms` (or forever when `None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub id: String,
    pub source: SwitchIdx,
    pub terminal: SwitchIdx,
    pub rate_kbps: u64,
    pub protocol: Protocol,
    pub arrival_ms: u64,
    pub departure_ms: Option<u64>,
}

impl Request {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        source: SwitchIdx,
        terminal: SwitchIdx,
        rate_kbps: u64,
        protocol: Protocol,
        arrival_ms: u64,
        departure_ms: Option<u64>,
    ) -> Result<Self, RequestError> {
        let id = id.into();
        if source == terminal {
            return Err(RequestError::Loopback(id));
        }
        if rate_kbps == 0 {
            return Err(RequestError::ZeroRate(id));
        }
        if let Some(d) = departure_ms {
            if d <= arrival_ms {
                return Err(RequestError::DepartureBeforeArrival(id, d, arrival_ms));
            }
        }
        Ok(Request {
            id,
            source,
            terminal,
            rate_kbps,
            protocol,
            arrival_ms,
            departure_ms,
        })
    }

    pub fn rate_mbps(&self) -> f64 {
        self.rate_kbps as f64 / 1000.0
    }
}

/// A request pinned to a concrete path.
#[derive(Debug, Clone)]
pub struct Flow {
    pub request: Arc<Request>,
    pub path: PathSeq,
}

impl Flow {
    pub fn new(request: Arc<Request>, path: PathSeq) -> Self {
        Flow { request, path }
    }
}

/// Why a flow is not a valid routing of its request over a given network.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FlowViolation {
    #[error("flow {0:?}: empty path")]
    EmptyPath(String),
    #[error("flow {0:?}: unknown link index {1} at position {2}")]
    UnknownLink(String, usize, usize),
    #[error("flow {0:?}: path does not start at the request source")]
    WrongSource(String),
    #[error("flow {0:?}: path does not end at the request terminal")]
    WrongTerminal(String),
    #[error("flow {0:?}: discontinuity at path index {1}")]
    Discontinuity(String, usize),
    #[error("flow {0:?}: switch {1:?} visited twice")]
    RepeatedSwitch(String, String),
}

/// Checks that `flow.path` is a simple directed path from the request source
/// to its terminal made of consecutive links of `net`.
pub fn validate_flow(net: &Network, flow: &Flow) -> Result<(), FlowViolation> {
    let id = || flow.request.id.clone();
    if flow.path.is_empty() {
        return Err(FlowViolation::EmptyPath(id()));
    }
    for (pos, &e) in flow.path.iter().enumerate() {
        if e >= net.link_count() {
            return Err(FlowViolation::UnknownLink(id(), e, pos));
        }
    }
    let first = net.link(flow.path[0]);
    if first.from != flow.request.source {
        return Err(FlowViolation::WrongSource(id()));
    }
    let last = net.link(*flow.path.last().unwrap());
    if last.to != flow.request.terminal {
        return Err(FlowViolation::WrongTerminal(id()));
    }
    let mut visited = vec![false; net.switch_count()];
    visited[first.from] = true;
    let mut at = first.from;
    for (pos, &e) in flow.path.iter().enumerate() {
        let link = net.link(e);
        if link.from != at {
            return Err(FlowViolation::Discontinuity(id(), pos));
        }
        at = link.to;
        if visited[at] {
            return Err(FlowViolation::RepeatedSwitch(
                id(),
                net.switch_id(at).to_string(),
            ));
        }
        visited[at] = true;
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum FlowSetError {
    #[error("duplicate flow for request {0:?}")]
    DuplicateRequest(String),
}

/// One flow per request, canonically sorted by request id. The sorted order
/// makes position-wise pairing of two flow sets over the same requests
/// well defined and keeps every iteration deterministic.
#[derive(Debug, Clone, Default)]
pub struct FlowSet {
    flows: Vec<Flow>,
}

impl FlowSet {
    pub fn new(mut flows: Vec<Flow>) -> Result<Self, FlowSetError> {
        flows.sort_by(|a, b| a.request.id.cmp(&b.request.id));
        for w in flows.windows(2) {
            if w[0].request.id == w[1].request.id {
                return Err(FlowSetError::DuplicateRequest(w[0].request.id.clone()));
            }
        }
        Ok(FlowSet { flows })
    }

    pub fn empty() -> Self {
        FlowSet::default()
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn get(&self, i: usize) -> &Flow {
        &self.flows[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Flow> {
        self.flows.iter()
    }

    pub fn position(&self, request_id: &str) -> Option<usize> {
        self.flows
            .binary_search_by(|f| f.request.id.as_str().cmp(request_id))
            .ok()
    }

    /// Replaces the path at position `i`, keeping the request untouched.
    pub fn set_path(&mut self, i: usize, path: PathSeq) {
        self.flows[i].path = path;
    }

    /// Inserts a flow, keeping canonical order.
    pub fn insert(&mut self, flow: Flow) -> Result<(), FlowSetError> {
        match self
            .flows
            .binary_search_by(|f| f.request.id.cmp(&flow.request.id))
        {
            Ok(_) => Err(FlowSetError::DuplicateRequest(flow.request.id.clone())),
            Err(pos) => {
                self.flows.insert(pos, flow);
                Ok(())
            }
        }
    }

    pub fn remove(&mut self, request_id: &str) -> Option<Flow> {
        self.position(request_id).map(|i| self.flows.remove(i))
    }

    /// Offered load per link in Kbps, from request rates.
    pub fn link_loads_kbps(&self, net: &Network) -> Vec<u64> {
        let mut loads = vec![0u64; net.link_count()];
        for flow in &self.flows {
            for &e in flow.path.iter() {
                loads[e] += flow.request.rate_kbps;
            }
        }
        loads
    }

    /// Distinct links used by any flow, ascending.
    pub fn used_links(&self, net: &Network) -> Vec<LinkIdx> {
        let mut used = vec![false; net.link_count()];
        for flow in &self.flows {
            for &e in flow.path.iter() {
                used[e] = true;
            }
        }
        (0..net.link_count()).filter(|&e| used[e]).collect()
    }
}

impl<'a> IntoIterator for &'a FlowSet {
    type Item = &'a Flow;
    type IntoIter = std::slice::Iter<'a, Flow>;
    fn into_iter(self) -> Self::IntoIter {
        self.flows.iter()
    }
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("unknown link index {0}")]
    UnknownLink(usize),
    #[error("congestion threshold {0} outside (0, 1]")]
    BadThreshold(f64),
}

/// Total offered rate on `link` in Kbps (exact integer arithmetic).
pub fn throughput_kbps(net: &Network, link: LinkIdx, flows: &FlowSet) -> Result<u64, NetError> {
    if link >= net.link_count() {
        return Err(NetError::UnknownLink(link));
    }
    let mut total = 0u64;
    for flow in flows {
        if flow.path.contains(&link) {
            total += flow.request.rate_kbps;
        }
    }
    Ok(total)
}

/// Total offered rate on `link` in Mbps.
pub fn throughput_mbps(net: &Network, link: LinkIdx, flows: &FlowSet) -> Result<f64, NetError> {
    Ok(throughput_kbps(net, link, flows)? as f64 / 1000.0)
}

/// Offered rate divided by capacity. May exceed 1 when the link is
/// oversubscribed.
pub fn utilization(net: &Network, link: LinkIdx, flows: &FlowSet) -> Result<f64, NetError> {
    let t = throughput_kbps(net, link, flows)?;
    Ok(t as f64 / net.link(link).capacity_kbps() as f64)
}

/// A flow set congests the network when some link utilization strictly
/// exceeds `threshold`. Returns the offending links sorted by descending
/// utilization, ties by ascending link id.
pub fn is_congested(
    net: &Network,
    flows: &FlowSet,
    threshold: f64,
) -> Result<(bool, Vec<LinkIdx>), NetError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(NetError::BadThreshold(threshold));
    }
    let loads = flows.link_loads_kbps(net);
    let mut over: Vec<(f64, LinkIdx)> = loads
        .iter()
        .enumerate()
        .filter_map(|(e, &kbps)| {
            let util = kbps as f64 / net.link(e).capacity_kbps() as f64;
            (util > threshold).then_some((util, e))
        })
        .collect();
    over.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let links: Vec<LinkIdx> = over.into_iter().map(|(_, e)| e).collect();
    Ok((!links.is_empty(), links))
}
