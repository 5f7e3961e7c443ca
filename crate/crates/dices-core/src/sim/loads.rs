//! Per-step traffic resolution: what each flow offers, what survives, and
//! how long it takes.
//!
//! Inelastic flows offer their full rate on every link of their path.
//! Elastic flows adapt: they share what the inelastic traffic leaves over,
//! by demand-bounded max-min fairness, so they never overload a link on
//! their own. Loss therefore comes from inelastic overload only: a link
//! forwards the fraction `cap / offered` of the inelastic traffic crossing
//! it (capped at 1), and a flow's delivered rate is its offered rate times
//! the product of those survival fractions along its path.
//!
//! Per-link latency grows with utilization as `l(e) / (1 - util)`, with the
//! utilization term capped at 0.95 so a saturated link costs at most twenty
//! times its idle delay.

use crate::net::{FlowSet, Network, Protocol};

/// Cap on the utilization term of the latency multiplier.
const Q_UTIL_CAP: f64 = 0.95;

/// Allocation slack treated as zero, in Kbps. Well below any meaningful
/// rate (the smallest request is 1 Kbps), far above f64 rounding noise.
const EPS_KBPS: f64 = 1e-6;

/// Resolved traffic state of one simulation step.
#[derive(Debug, Clone)]
pub struct StepMeasurement {
    /// Offered inelastic load per link, Kbps.
    pub inelastic_kbps: Vec<u64>,
    /// Elastic max-min allocation crossing each link, Kbps.
    pub elastic_kbps: Vec<f64>,
    /// Fraction of inelastic traffic a link forwards, `min(1, cap/offered)`.
    pub survival: Vec<f64>,
    /// Latency multiplier per link, `1 / (1 - min(util, 0.95))`.
    pub q_factor: Vec<f64>,
    /// Per-flow metrics, indexed like the flow set.
    pub flows: Vec<FlowStepMetrics>,
}

/// What one flow experienced during one step.
#[derive(Debug, Clone, Copy)]
pub struct FlowStepMetrics {
    /// Rate put on the wire: the request rate for inelastic flows, the
    /// max-min share for elastic ones.
    pub offered_kbps: f64,
    pub delivered_kbps: f64,
    /// End-to-end latency over the flow's path at current load.
    pub delay_ms: f64,
}

/// Resolves offered loads, elastic shares, loss and latency for the flows
/// currently in the network.
pub fn measure_step(net: &Network, flows: &FlowSet) -> StepMeasurement {
    let n_links = net.link_count();
    let mut inelastic = vec![0u64; n_links];
    for flow in flows {
        if flow.request.protocol == Protocol::Inelastic {
            for &e in flow.path.iter() {
                inelastic[e] += flow.request.rate_kbps;
            }
        }
    }

    let elastic_alloc = max_min_allocations(net, flows, &inelastic);

    let mut elastic = vec![0.0f64; n_links];
    for (i, flow) in flows.iter().enumerate() {
        if flow.request.protocol == Protocol::Elastic {
            for &e in flow.path.iter() {
                elastic[e] += elastic_alloc[i];
            }
        }
    }

    let mut survival = vec![1.0f64; n_links];
    let mut q_factor = vec![1.0f64; n_links];
    for e in 0..n_links {
        let cap = net.link(e).capacity_kbps() as f64;
        let offered = inelastic[e] as f64;
        if offered > cap {
            survival[e] = cap / offered;
        }
        let util = (inelastic[e] as f64 + elastic[e]) / cap;
        q_factor[e] = 1.0 / (1.0 - util.min(Q_UTIL_CAP));
    }

    let flows_out = flows
        .iter()
        .enumerate()
        .map(|(i, flow)| {
            let offered = match flow.request.protocol {
                Protocol::Inelastic => flow.request.rate_kbps as f64,
                Protocol::Elastic => elastic_alloc[i],
            };
            let delivered = match flow.request.protocol {
                // Elastic rates already fit the residual capacity.
                Protocol::Elastic => offered,
                Protocol::Inelastic => {
                    offered * flow.path.iter().map(|&e| survival[e]).product::<f64>()
                }
            };
            let delay_ms = flow
                .path
                .iter()
                .map(|&e| net.link(e).delay_ms as f64 * q_factor[e])
                .sum();
            FlowStepMetrics {
                offered_kbps: offered,
                delivered_kbps: delivered,
                delay_ms,
            }
        })
        .collect();

    StepMeasurement {
        inelastic_kbps: inelastic,
        elastic_kbps: elastic,
        survival,
        q_factor,
        flows: flows_out,
    }
}

/// Demand-bounded max-min fair allocation of the elastic flows over the
/// capacity left by inelastic traffic. Returns one entry per flow position;
/// inelastic positions are zero.
///
/// Progressive filling: raise all unfrozen allocations at the same speed,
/// freeze a flow when it reaches its demand or when a link it crosses runs
/// out of residual capacity.
pub fn max_min_allocations(net: &Network, flows: &FlowSet, inelastic: &[u64]) -> Vec<f64> {
    let n_links = net.link_count();
    let mut residual: Vec<f64> = (0..n_links)
        .map(|e| (net.link(e).capacity_kbps() as f64 - inelastic[e] as f64).max(0.0))
        .collect();

    let mut alloc = vec![0.0f64; flows.len()];
    let mut active: Vec<usize> = flows
        .iter()
        .enumerate()
        .filter(|(_, f)| f.request.protocol == Protocol::Elastic)
        .map(|(i, _)| i)
        .collect();

    let mut crossing = vec![0usize; n_links];
    for &i in &active {
        for &e in flows.get(i).path.iter() {
            crossing[e] += 1;
        }
    }

    while !active.is_empty() {
        let mut inc = f64::INFINITY;
        for e in 0..n_links {
            if crossing[e] > 0 {
                inc = inc.min(residual[e] / crossing[e] as f64);
            }
        }
        for &i in &active {
            inc = inc.min(flows.get(i).request.rate_kbps as f64 - alloc[i]);
        }

        if inc > 0.0 {
            for &i in &active {
                alloc[i] += inc;
            }
            for e in 0..n_links {
                if crossing[e] > 0 {
                    residual[e] -= inc * crossing[e] as f64;
                }
            }
        }

        let before = active.len();
        active.retain(|&i| {
            let flow = flows.get(i);
            let demand_met = alloc[i] >= flow.request.rate_kbps as f64 - EPS_KBPS;
            let blocked = flow.path.iter().any(|&e| residual[e] <= EPS_KBPS);
            if demand_met {
                alloc[i] = flow.request.rate_kbps as f64;
            }
            if demand_met || blocked {
                for &e in flow.path.iter() {
                    crossing[e] -= 1;
                }
                false
            } else {
                true
            }
        });
        debug_assert!(active.len() < before, "progressive filling must advance");
    }
    alloc
}
