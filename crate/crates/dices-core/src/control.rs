//! The periodic control loop: monitor, analyze, compute, apply.
//!
//! Every `delta_ms` the controller snapshots the flows that arrived before
//! the tick boundary and checks the congestion threshold against their
//! request rates. A static policy (min-hop, capacity-scaled OSPF) only
//! monitors. The adaptive policy reacts to congestion by searching for a
//! better placement of the current flows, installing the knee of the
//! resulting trade-off front, and re-pricing the links it uses so that
//! later arrivals steer around them.
//!
//! Applying takes effect immediately by default; `apply_latency_ms` delays
//! it to model rule installation time, in which case the newest computed
//! placement wins if a tick fires again before the previous one landed.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::forwarding::{forward, ForwardingPolicy, PolicyKind};
use crate::net::{is_congested, Flow, FlowSet, LinkIdx, Network, Request};
use crate::paths::{PathCatalog, PathError, WeightVector, W_MAX};
use crate::search::{
    run_search, FitnessTriple, GenerationStat, SearchConfig, SearchError,
};
use crate::weights::{adjust_weights, WeightPolicy};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    /// Control period in ms.
    pub delta_ms: u64,
    /// Delay between computing a new placement and it taking effect.
    pub apply_latency_ms: u64,
    /// Reset weights of links unused by the new placement back to 1 instead
    /// of keeping their previous prices.
    pub reset_untouched_weights: bool,
    /// Ceiling for adjusted link weights.
    pub w_max: f64,
    pub search: SearchConfig,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            delta_ms: 1000,
            apply_latency_ms: 0,
            reset_untouched_weights: false,
            w_max: W_MAX,
            search: SearchConfig::default(),
        }
    }
}

/// What the compute phase did in one adapting tick.
#[derive(Debug, Clone)]
pub struct AdaptationDetail {
    /// Wall-clock time of search plus weight adjustment, ms.
    pub compute_ms: f64,
    pub evaluations: u64,
    pub generations: u64,
    pub best_fitness: FitnessTriple,
    /// Flows whose path differs from the installed placement.
    pub flows_changed: usize,
    /// Links whose weight changed.
    pub weights_changed: usize,
    /// Per-generation search progress, when tracing was requested.
    pub trace: Vec<GenerationStat>,
}

/// Monitor snapshot of one tick, with the compute outcome if any.
#[derive(Debug, Clone)]
pub struct AdaptationRecord {
    pub tick: u64,
    pub time_ms: u64,
    /// Maximum request-rate utilization at the boundary.
    pub max_util: f64,
    pub congested: bool,
    /// Offending links, most utilized first.
    pub congested_links: Vec<LinkIdx>,
    pub detail: Option<AdaptationDetail>,
}

struct PendingApply {
    at_ms: u64,
    flows: FlowSet,
    weights: WeightVector,
}

/// One controller instance drives one network for the length of a run.
pub struct Controller {
    config: ControllerConfig,
    policy: ForwardingPolicy,
    rng: ChaCha8Rng,
    pending: Option<PendingApply>,
}

impl Controller {
    pub fn new(net: &Network, kind: PolicyKind, config: ControllerConfig, seed: u64) -> Self {
        let policy = ForwardingPolicy::new(kind, net, config.w_max);
        Controller {
            config,
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: None,
        }
    }

    pub fn policy(&self) -> &ForwardingPolicy {
        &self.policy
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    /// Routes a newly arrived request over the current link weights.
    pub fn place(&self, net: &Network, request: Arc<Request>) -> Result<Flow, PathError> {
        forward(net, request, &self.policy)
    }

    /// Installs a placement and weight vector that reached its apply time.
    /// Returns true if something was applied.
    pub fn poll_pending(&mut self, now_ms: u64, flows: &mut FlowSet) -> bool {
        if self.pending.as_ref().is_some_and(|p| p.at_ms <= now_ms) {
            let pending = self.pending.take().unwrap();
            apply_placement(flows, &pending.flows);
            self.policy.install_weights(pending.weights);
            true
        } else {
            false
        }
    }

    /// Runs tick `tick` at its boundary. `flows` must hold exactly the
    /// requests that arrived before the boundary and have not departed.
    pub fn tick(
        &mut self,
        net: &Network,
        flows: &mut FlowSet,
        catalog: &PathCatalog,
        tick: u64,
        trace: bool,
    ) -> Result<AdaptationRecord, SearchError> {
        let time_ms = tick * self.config.delta_ms;
        let threshold = self.config.search.threshold;
        let (congested, congested_links) = is_congested(net, flows, threshold)
            .map_err(|e| SearchError::BadConfig(e.to_string()))?;
        let max_util = max_utilization(net, flows);

        let mut record = AdaptationRecord {
            tick,
            time_ms,
            max_util,
            congested,
            congested_links,
            detail: None,
        };
        if !congested || !self.policy.is_dynamic() || flows.is_empty() {
            return Ok(record);
        }

        let started = Instant::now();
        let outcome = run_search(net, flows, catalog, &self.config.search, &mut self.rng, trace)?;
        let weights = adjust_weights(
            net,
            &outcome.best,
            self.policy.weights(),
            WeightPolicy {
                threshold,
                reset_untouched: self.config.reset_untouched_weights,
            },
        );
        let compute_ms = started.elapsed().as_secs_f64() * 1000.0;

        let flows_changed = placement_diff(flows, &outcome.best);
        let weights_changed = (0..net.link_count())
            .filter(|&e| self.policy.weights().get(e) != weights.get(e))
            .count();

        if self.config.apply_latency_ms == 0 {
            apply_placement(flows, &outcome.best);
            self.policy.install_weights(weights);
            self.pending = None;
        } else {
            self.pending = Some(PendingApply {
                at_ms: time_ms + self.config.apply_latency_ms,
                flows: outcome.best.clone(),
                weights,
            });
        }

        record.detail = Some(AdaptationDetail {
            compute_ms,
            evaluations: outcome.evaluations,
            generations: outcome.generations,
            best_fitness: outcome.best_fitness,
            flows_changed,
            weights_changed,
            trace: outcome.trace,
        });
        Ok(record)
    }
}

/// Maximum request-rate utilization over all links.
pub fn max_utilization(net: &Network, flows: &FlowSet) -> f64 {
    let loads = flows.link_loads_kbps(net);
    (0..net.link_count())
        .map(|e| loads[e] as f64 / net.link(e).capacity_kbps() as f64)
        .fold(0.0, f64::max)
}

/// Count of positions whose path differs between two placements of the same
/// requests.
fn placement_diff(a: &FlowSet, b: &FlowSet) -> usize {
    debug_assert_eq!(a.len(), b.len());
    (0..a.len())
        .filter(|&i| *a.get(i).path != *b.get(i).path)
        .count()
}

/// Rewrites the paths of `flows` to those of `placement`. The request sets
/// are identical by construction; flows that arrived after the snapshot do
/// not exist in either.
fn apply_placement(flows: &mut FlowSet, placement: &FlowSet) {
    debug_assert_eq!(flows.len(), placement.len());
    for i in 0..placement.len() {
        debug_assert_eq!(flows.get(i).request.id, placement.get(i).request.id);
        if *flows.get(i).path != *placement.get(i).path {
            flows.set_path(i, placement.get(i).path.clone());
        }
    }
}
