//! Link weight adjustment after an adaptation.
//!
//! Once a new flow placement is chosen, weights on its links are raised in
//! proportion to how close each link sits to the congestion threshold, so
//! that requests arriving between adaptations are steered away from links
//! with little headroom. Links at or above the threshold get the maximum
//! weight; links untouched by the placement keep their previous weights by
//! default (optionally they reset to 1).

use crate::net::{FlowSet, Network};
use crate::paths::WeightVector;

/// Options for [`adjust_weights`].
#[derive(Debug, Clone, Copy)]
pub struct WeightPolicy {
    /// Congestion threshold `u` in (0, 1].
    pub threshold: f64,
    /// Whether links outside the placement drop back to weight 1 instead of
    /// keeping possibly stale values from earlier adaptations.
    pub reset_untouched: bool,
}

/// New weight vector for the links used by `best`:
/// `w(e) = delay(e) * u / (u - util(e))` while `util(e) < u`, else the
/// maximum weight. Results clamp into `[1, w_max]`.
pub fn adjust_weights(
    net: &Network,
    best: &FlowSet,
    current: &WeightVector,
    policy: WeightPolicy,
) -> WeightVector {
    let u = policy.threshold;
    let mut next = if policy.reset_untouched {
        WeightVector::with_max(net, current.w_max())
    } else {
        current.clone()
    };

    let loads = best.link_loads_kbps(net);
    for e in best.used_links(net) {
        let link = net.link(e);
        let util = loads[e] as f64 / link.capacity_kbps() as f64;
        let w = if util < u {
            link.delay_ms as f64 * u / (u - util)
        } else {
            current.w_max()
        };
        next.set(e, w);
    }
    next
}
