//! Core library for DICES, a periodic search-based congestion controller
//! for software-defined networks, together with the flow-level machinery
//! needed to study it: network and request models, weighted shortest-path
//! forwarding, path catalogs, a multi-objective evolutionary search over
//! flow placements, link weight adaptation, and a deterministic simulator
//! with static baselines to compare against.

pub mod control;
pub mod forwarding;
pub mod net;
pub mod paths;
pub mod search;
pub mod sim;
pub mod topo;
pub mod weights;

pub use control::{
    AdaptationDetail, AdaptationRecord, Controller, ControllerConfig, max_utilization,
};
pub use forwarding::{forward, ForwardingPolicy, PolicyKind};
pub use net::{
    Flow, FlowSet, Link, LinkIdx, LinkSpec, Network, PathSeq, Protocol, Request, SwitchIdx,
};
pub use paths::{
    build_catalog, build_catalog_for_pairs, edit_distance, shortest_path, PathCatalog, PathError,
    WeightVector, W_MAX,
};
pub use search::{
    evaluate, knee_select, non_dominated_sort, run_search, FitnessTriple, SearchConfig,
    SearchOutcome,
};
pub use sim::scenario::{builtin_scenario, disaster_requests, ScenarioError, TrafficScenario};
pub use sim::{run_scenario, FlowRow, FlowTickRow, RunConfig, RunResult, SimError, TickRow};
pub use topo::{builtin_topology, complete_topology, parse_topology};
pub use weights::{adjust_weights, WeightPolicy};
