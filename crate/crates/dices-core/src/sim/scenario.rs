//! Traffic scenarios: which requests hit the network and when.
//!
//! A scenario file is TOML with a `topology` (builtin name, or resolved by
//! the caller), a `horizon_ms`, and `[[requests]]` entries carrying endpoint
//! switch names, a rate in Kbps, a protocol (`elastic` reacts to available
//! bandwidth like TCP, `inelastic` keeps sending like UDP media), an
//! `arrival_ms` and an optional `departure_ms`.
//!
//! Setting `disaster_profile = true` additionally expands the standard
//! disaster response traffic mix against the `[placement]` table, which maps
//! the roles RM (resource management), MC (mission control), CS (city
//! operations), GS (ground station), EN-N and EN-D (external network,
//! national and disaster side) to switches.
//!
//! Builtin scenarios: `exp1` (stepwise load increase on `complete-5`),
//! `exp2-size-N` (fixed load on `complete-N`), `exp2-reqs-N` (a fixed total
//! load split over N requests on `complete-5`), `exp3` (the disaster
//! profile on `ems`).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::net::{Network, Protocol, Request, RequestError};
use crate::topo::complete_switch_name;

const EXP1: &str = include_str!("../../data/exp1.toml");
const EXP3: &str = include_str!("../../data/exp3.toml");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to parse scenario: {0}")]
    Parse(String),
    #[error("request {0:?} references unknown switch {1:?}")]
    UnknownSwitch(String, String),
    #[error("duplicate request id {0:?}")]
    DuplicateId(String),
    #[error("placement is missing role {0:?}")]
    MissingRole(String),
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error(transparent)]
    Request(#[from] RequestError),
}

/// One request as written in a scenario file: endpoints by switch name.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRequest {
    pub id: String,
    pub source: String,
    pub terminal: String,
    pub rate_kbps: u64,
    pub protocol: Protocol,
    #[serde(default)]
    pub arrival_ms: u64,
    #[serde(default)]
    pub departure_ms: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    topology: String,
    horizon_ms: u64,
    #[serde(default)]
    disaster_profile: bool,
    #[serde(default)]
    placement: BTreeMap<String, String>,
    #[serde(default)]
    requests: Vec<ScenarioRequest>,
}

/// A parsed scenario, still in terms of switch names. Bind it to a network
/// with [`TrafficScenario::bind`] before simulation.
#[derive(Debug, Clone)]
pub struct TrafficScenario {
    pub name: String,
    pub topology: String,
    pub horizon_ms: u64,
    pub requests: Vec<ScenarioRequest>,
}

impl TrafficScenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if file.horizon_ms == 0 {
            return Err(ScenarioError::ZeroHorizon);
        }
        let mut requests = file.requests;
        if file.disaster_profile {
            requests.extend(disaster_requests(&file.placement)?);
        }
        let mut seen = BTreeMap::new();
        for r in &requests {
            if seen.insert(r.id.clone(), ()).is_some() {
                return Err(ScenarioError::DuplicateId(r.id.clone()));
            }
        }
        Ok(TrafficScenario {
            name: file.name.unwrap_or_default(),
            topology: file.topology,
            horizon_ms: file.horizon_ms,
            requests,
        })
    }

    /// Resolves switch names against `net` and materializes the requests.
    pub fn bind(&self, net: &Network) -> Result<Vec<Arc<Request>>, ScenarioError> {
        let mut out = Vec::with_capacity(self.requests.len());
        for r in &self.requests {
            let source = net.switch_idx(&r.source).ok_or_else(|| {
                ScenarioError::UnknownSwitch(r.id.clone(), r.source.clone())
            })?;
            let terminal = net.switch_idx(&r.terminal).ok_or_else(|| {
                ScenarioError::UnknownSwitch(r.id.clone(), r.terminal.clone())
            })?;
            out.push(Arc::new(Request::new(
                r.id.clone(),
                source,
                terminal,
                r.rate_kbps,
                r.protocol,
                r.arrival_ms,
                r.departure_ms,
            )?));
        }
        Ok(out)
    }
}

/// The standard disaster response traffic mix, expanded against a placement.
/// All requests arrive at time zero and stay for the whole run.
pub fn disaster_requests(
    placement: &BTreeMap<String, String>,
) -> Result<Vec<ScenarioRequest>, ScenarioError> {
    let role = |name: &str| {
        placement
            .get(name)
            .cloned()
            .ok_or_else(|| ScenarioError::MissingRole(name.to_string()))
    };
    let rm = role("RM")?;
    let mc = role("MC")?;
    let cs = role("CS")?;
    let en_n = role("EN-N")?;
    let en_d = role("EN-D")?;

    let mut out = Vec::new();
    let mut batch = |prefix: &str, count: usize, from: &str, to: &str, rate: u64, p: Protocol| {
        for i in 1..=count {
            out.push(ScenarioRequest {
                id: format!("{prefix}-{i}"),
                source: from.to_string(),
                terminal: to.to_string(),
                rate_kbps: rate,
                protocol: p,
                arrival_ms: 0,
                departure_ms: None,
            });
        }
    };

    // Field telemetry into mission control.
    batch("sensor", 5, &rm, &mc, 100, Protocol::Elastic);
    // Voice and video conferencing between city operations and mission
    // control, one leg per direction.
    batch("audio-mc", 4, &cs, &mc, 64, Protocol::Inelastic);
    batch("video-mc", 2, &cs, &mc, 10_000, Protocol::Inelastic);
    batch("audio-cs", 4, &mc, &cs, 64, Protocol::Inelastic);
    batch("video-cs", 2, &mc, &cs, 10_000, Protocol::Inelastic);
    // Map download for the command post.
    batch("map", 1, &mc, &cs, 30_000, Protocol::Elastic);
    // Bulk exchange between the national and the disaster network.
    batch("ext-nd", 5, &en_n, &en_d, 20_000, Protocol::Inelastic);
    batch("ext-dn", 5, &en_d, &en_n, 20_000, Protocol::Inelastic);
    Ok(out)
}

fn exp2_size(n: usize) -> TrafficScenario {
    let requests = (1..=5)
        .map(|i| ScenarioRequest {
            id: format!("load-{i}"),
            source: complete_switch_name(0, n),
            terminal: complete_switch_name(1, n),
            rate_kbps: 30_000,
            protocol: Protocol::Inelastic,
            arrival_ms: 0,
            departure_ms: None,
        })
        .collect();
    TrafficScenario {
        name: format!("exp2-size-{n}"),
        topology: format!("complete-{n}"),
        horizon_ms: 3000,
        requests,
    }
}

/// `n` parallel requests between one pair, totaling exactly 150 Mbps: the
/// first `150000 mod n` requests get the ceiling share, the rest the floor.
fn exp2_reqs(n: usize) -> TrafficScenario {
    const TOTAL_KBPS: u64 = 150_000;
    let base = TOTAL_KBPS / n as u64;
    let extra = (TOTAL_KBPS % n as u64) as usize;
    let width = n.to_string().len();
    let requests = (0..n)
        .map(|i| ScenarioRequest {
            id: format!("load-{:0width$}", i + 1),
            source: complete_switch_name(0, 5),
            terminal: complete_switch_name(1, 5),
            rate_kbps: base + u64::from(i < extra),
            protocol: Protocol::Inelastic,
            arrival_ms: 0,
            departure_ms: None,
        })
        .collect();
    TrafficScenario {
        name: format!("exp2-reqs-{n}"),
        topology: "complete-5".to_string(),
        horizon_ms: 3000,
        requests,
    }
}

/// Resolves a builtin scenario by name; `None` if the name is not a builtin.
pub fn builtin_scenario(name: &str) -> Option<TrafficScenario> {
    match name {
        "exp1" => Some(TrafficScenario::from_toml(EXP1).expect("bundled exp1 is valid")),
        "exp3" => Some(TrafficScenario::from_toml(EXP3).expect("bundled exp3 is valid")),
        _ => {
            if let Some(n) = name.strip_prefix("exp2-size-") {
                let n: usize = n.parse().ok()?;
                return if n >= 2 { Some(exp2_size(n)) } else { None };
            }
            if let Some(n) = name.strip_prefix("exp2-reqs-") {
                let n: usize = n.parse().ok()?;
                return if (1..=150_000).contains(&n) {
                    Some(exp2_reqs(n))
                } else {
                    None
                };
            }
            None
        }
    }
}
