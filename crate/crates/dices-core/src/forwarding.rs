//! Forwarding policies: how an arriving request is turned into a flow.
//!
//! All three policies route on the weighted shortest path and never inspect
//! utilization; they differ only in where the link weights come from.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::net::{Flow, Network, Request};
use crate::paths::{shortest_path, PathError, WeightVector};

/// Which weight scheme a [`ForwardingPolicy`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Dynamic weights, all ones at start, replaced by the weight controller.
    Dices,
    /// Reactive forwarding: constant unit weights, minimum hop count.
    Rfwd,
    /// Static weights proportional to inverse bandwidth.
    Ospf,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Dices => write!(f, "dices"),
            PolicyKind::Rfwd => write!(f, "rfwd"),
            PolicyKind::Ospf => write!(f, "ospf"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dices" => Ok(PolicyKind::Dices),
            "rfwd" => Ok(PolicyKind::Rfwd),
            "ospf" => Ok(PolicyKind::Ospf),
            other => Err(format!("unknown policy {other:?} (dices, rfwd, ospf)")),
        }
    }
}

/// A policy kind plus its current weight vector.
#[derive(Debug, Clone)]
pub struct ForwardingPolicy {
    kind: PolicyKind,
    weights: WeightVector,
}

impl ForwardingPolicy {
    pub fn new(kind: PolicyKind, net: &Network, w_max: f64) -> Self {
        let weights = match kind {
            PolicyKind::Dices | PolicyKind::Rfwd => WeightVector::with_max(net, w_max),
            PolicyKind::Ospf => ospf_weights(net, w_max),
        };
        ForwardingPolicy { kind, weights }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Whether the weight controller may replace this policy's weights.
    pub fn is_dynamic(&self) -> bool {
        self.kind == PolicyKind::Dices
    }

    /// Installs controller-computed weights. Baseline policies keep their
    /// weights fixed for their whole lifetime, so this is restricted to the
    /// dynamic policy.
    pub fn install_weights(&mut self, weights: WeightVector) {
        debug_assert!(self.is_dynamic(), "static policy weights are immutable");
        if self.is_dynamic() {
            self.weights = weights;
        }
    }
}

/// Inverse-bandwidth weights: `w(e) = round(C_max / c(e))`, floored at 1,
/// where `C_max` is the largest bandwidth in the network.
fn ospf_weights(net: &Network, w_max: f64) -> WeightVector {
    let c_max = net
        .links()
        .iter()
        .map(|l| l.bandwidth_mbps)
        .max()
        .unwrap_or(1) as f64;
    let mut w = WeightVector::with_max(net, w_max);
    for e in 0..net.link_count() {
        let ratio = c_max / net.link(e).bandwidth_mbps as f64;
        w.set(e, ratio.round().max(1.0));
    }
    w
}

/// Routes `request` on the policy's current weighted shortest path.
pub fn forward(
    net: &Network,
    request: Arc<Request>,
    policy: &ForwardingPolicy,
) -> Result<Flow, PathError> {
    let path = shortest_path(net, request.source, request.terminal, policy.weights())?;
    Ok(Flow::new(request, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{LinkSpec, Protocol};

    fn mk(from: &str, to: &str, bw: u64, delay: u64) -> LinkSpec {
        LinkSpec {
            from: from.into(),
            to: to.into(),
            bandwidth_mbps: bw,
            delay_ms: delay,
        }
    }

    /// a -> b direct over a thin link, a -> c -> b over fat links.
    fn thin_direct() -> Network {
        Network::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                mk("a", "b", 10, 25),
                mk("a", "c", 100, 25),
                mk("c", "b", 100, 25),
            ],
        )
        .unwrap()
    }

    fn request(net: &Network, from: &str, to: &str) -> Arc<Request> {
        Arc::new(
            Request::new(
                "q",
                net.switch_idx(from).unwrap(),
                net.switch_idx(to).unwrap(),
                1000,
                Protocol::Inelastic,
                0,
                None,
            )
            .unwrap(),
        )
    }

    #[test]
    fn rfwd_takes_minimum_hops() {
        let net = thin_direct();
        let policy = ForwardingPolicy::new(PolicyKind::Rfwd, &net, 1e6);
        let flow = forward(&net, request(&net, "a", "b"), &policy).unwrap();
        assert_eq!(flow.path.len(), 1);
        assert_eq!(net.link(flow.path[0]).id, "a->b");
    }

    #[test]
    fn ospf_avoids_thin_links() {
        // Thin direct link costs round(100/10) = 10, the 2-hop detour 1 + 1.
        let net = thin_direct();
        let policy = ForwardingPolicy::new(PolicyKind::Ospf, &net, 1e6);
        assert_eq!(policy.weights().get(net.link_idx("a->b").unwrap()), 10.0);
        assert_eq!(policy.weights().get(net.link_idx("a->c").unwrap()), 1.0);
        let flow = forward(&net, request(&net, "a", "b"), &policy).unwrap();
        let ids: Vec<&str> = flow.path.iter().map(|&e| net.link(e).id.as_str()).collect();
        assert_eq!(ids, ["a->c", "c->b"]);
    }

    #[test]
    fn dices_starts_from_unit_weights_and_accepts_updates() {
        let net = thin_direct();
        let mut policy = ForwardingPolicy::new(PolicyKind::Dices, &net, 1e6);
        let flow = forward(&net, request(&net, "a", "b"), &policy).unwrap();
        assert_eq!(flow.path.len(), 1);

        let mut w = WeightVector::unit(&net);
        w.set(net.link_idx("a->b").unwrap(), 500.0);
        policy.install_weights(w);
        let flow = forward(&net, request(&net, "a", "b"), &policy).unwrap();
        assert_eq!(flow.path.len(), 2);
    }

    #[test]
    fn policy_kind_parses() {
        assert_eq!("dices".parse::<PolicyKind>().unwrap(), PolicyKind::Dices);
        assert_eq!("rfwd".parse::<PolicyKind>().unwrap(), PolicyKind::Rfwd);
        assert_eq!("ospf".parse::<PolicyKind>().unwrap(), PolicyKind::Ospf);
        assert!("static".parse::<PolicyKind>().is_err());
    }
}
