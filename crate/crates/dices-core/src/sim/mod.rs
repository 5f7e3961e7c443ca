//! Deterministic flow-level simulator.
//!
//! Time advances in fixed steps of `dt_ms`. At every step, in order:
//! departures whose time has come, any placement whose apply latency
//! elapsed, the controller tick if the step sits on a period boundary, then
//! arrivals stamped at this time. The tick therefore sees exactly the
//! requests that arrived strictly before its boundary, and a departure
//! scheduled on the boundary is already gone. After the bookkeeping the
//! step's traffic is resolved by [`loads::measure_step`] and accumulated
//! into per-tick and per-flow records.
//!
//! Runs are reproducible: the seed feeds the search, everything else is
//! deterministic.

pub mod loads;
pub mod scenario;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::control::{AdaptationRecord, Controller, ControllerConfig};
use crate::forwarding::PolicyKind;
use crate::net::{FlowSet, Network, PathSeq, Protocol};
use crate::paths::{build_catalog_for_pairs, PathError};
use crate::search::SearchError;
use crate::sim::scenario::{ScenarioError, TrafficScenario};

pub use crate::sim::scenario::builtin_scenario;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("dt must be positive and divide the control period")]
    BadStep,
    #[error("horizon must be a multiple of dt")]
    BadHorizon,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("duplicate flow for request {0:?}")]
    DuplicateRequest(String),
}

/// How to run one simulation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub policy: PolicyKind,
    pub seed: u64,
    /// Simulation step in ms.
    pub dt_ms: u64,
    pub controller: ControllerConfig,
    /// Keep per-generation search progress in the adaptation records.
    pub trace_search: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            policy: PolicyKind::Dices,
            seed: 1,
            dt_ms: 100,
            controller: ControllerConfig::default(),
            trace_search: false,
        }
    }
}

/// One control period of a finished run.
#[derive(Debug, Clone)]
pub struct TickRow {
    pub tick: u64,
    pub time_ms: u64,
    /// Monitor view at the boundary: maximum request-rate utilization.
    pub max_util: f64,
    pub congested: bool,
    pub adapted: bool,
    /// Wall-clock compute time of this tick's adaptation, ms.
    pub compute_ms: f64,
    pub evaluations: u64,
    pub flows_changed: usize,
    pub weights_changed: usize,
    /// Means over the steps of the period.
    pub offered_kbps: f64,
    pub delivered_kbps: f64,
    /// Lost fraction of offered traffic over the period.
    pub loss: f64,
    /// Offered-weighted mean latency over the period, ms.
    pub mean_delay_ms: f64,
}

/// One flow's means over one control period it was active in.
#[derive(Debug, Clone)]
pub struct FlowTickRow {
    pub tick: u64,
    pub id: String,
    pub class: String,
    pub protocol: Protocol,
    /// Means over the flow's active steps in the period.
    pub offered_kbps: f64,
    pub delivered_kbps: f64,
    pub loss: f64,
    pub mean_delay_ms: f64,
}

/// One request's totals over a finished run.
#[derive(Debug, Clone)]
pub struct FlowRow {
    pub id: String,
    /// Request id with a trailing `-<number>` stripped, grouping streams of
    /// the same kind.
    pub class: String,
    pub source: String,
    pub terminal: String,
    pub protocol: Protocol,
    pub rate_kbps: u64,
    pub arrival_ms: u64,
    /// Departure, or the horizon if the flow stayed.
    pub end_ms: u64,
    pub steps_active: u64,
    /// Means over the flow's active steps.
    pub offered_kbps: f64,
    pub delivered_kbps: f64,
    pub loss: f64,
    pub mean_delay_ms: f64,
    /// Times the controller moved this flow to another path.
    pub reroutes: u64,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub policy: PolicyKind,
    pub seed: u64,
    pub ticks: Vec<TickRow>,
    /// Per-period breakdown of every flow active in that period.
    pub flow_ticks: Vec<FlowTickRow>,
    pub flows: Vec<FlowRow>,
    /// Monitor records of every tick, with compute details where they ran.
    pub records: Vec<AdaptationRecord>,
}

impl RunResult {
    /// Lost fraction of all offered traffic over the whole run.
    pub fn total_loss(&self) -> f64 {
        let offered: f64 = self
            .flows
            .iter()
            .map(|f| f.offered_kbps * f.steps_active as f64)
            .sum();
        let delivered: f64 = self
            .flows
            .iter()
            .map(|f| f.delivered_kbps * f.steps_active as f64)
            .sum();
        if offered > 0.0 {
            1.0 - delivered / offered
        } else {
            0.0
        }
    }
}

struct FlowAccum {
    offered_sum: f64,
    delivered_sum: f64,
    delay_sum: f64,
    steps: u64,
    reroutes: u64,
    end_ms: u64,
}

#[derive(Default)]
struct PeriodAccum {
    protocol: Option<Protocol>,
    offered_sum: f64,
    delivered_sum: f64,
    delay_sum: f64,
    steps: u64,
}

fn flush_flow_ticks(
    rows: &mut Vec<FlowTickRow>,
    acc: &mut BTreeMap<String, PeriodAccum>,
    tick: u64,
) {
    for (id, a) in std::mem::take(acc) {
        let steps = a.steps.max(1) as f64;
        rows.push(FlowTickRow {
            tick,
            class: class_of(&id),
            id,
            protocol: a.protocol.expect("accumulated flow has a protocol"),
            offered_kbps: a.offered_sum / steps,
            delivered_kbps: a.delivered_sum / steps,
            loss: if a.offered_sum > 0.0 {
                1.0 - a.delivered_sum / a.offered_sum
            } else {
                0.0
            },
            mean_delay_ms: a.delay_sum / steps,
        });
    }
}

/// Runs `scenario` on `net` under one policy and seed.
pub fn run_scenario(
    net: &Network,
    scenario: &TrafficScenario,
    config: &RunConfig,
) -> Result<RunResult, SimError> {
    let dt = config.dt_ms;
    let delta = config.controller.delta_ms;
    if dt == 0 || !delta.is_multiple_of(dt) {
        return Err(SimError::BadStep);
    }
    if !scenario.horizon_ms.is_multiple_of(dt) {
        return Err(SimError::BadHorizon);
    }

    let requests = scenario.bind(net)?;
    // The catalog covers exactly the pairs that can occur; built once,
    // outside any timed compute phase.
    let pairs = requests.iter().map(|r| (r.source, r.terminal));
    let catalog = build_catalog_for_pairs(net, config.controller.search.catalog_k, pairs);

    let mut arrivals: Vec<_> = requests.clone();
    arrivals.sort_by(|a, b| (a.arrival_ms, &a.id).cmp(&(b.arrival_ms, &b.id)));
    let mut departures: Vec<_> = requests
        .iter()
        .filter_map(|r| r.departure_ms.map(|d| (d, r.id.clone())))
        .collect();
    departures.sort();

    let mut controller = Controller::new(net, config.policy, config.controller.clone(), config.seed);
    let mut flows = FlowSet::empty();
    let mut accums: BTreeMap<String, FlowAccum> = BTreeMap::new();
    let mut ticks: Vec<TickRow> = Vec::new();
    let mut flow_ticks: Vec<FlowTickRow> = Vec::new();
    let mut period: BTreeMap<String, PeriodAccum> = BTreeMap::new();
    let mut records: Vec<AdaptationRecord> = Vec::new();

    // Per-tick running sums, folded into the row when the period ends.
    let mut steps_in_tick = 0u64;
    let mut offered_sum = 0.0;
    let mut delivered_sum = 0.0;
    let mut delay_weighted_sum = 0.0;

    let mut next_arrival = 0usize;
    let mut next_departure = 0usize;
    let steps = scenario.horizon_ms / dt;

    for step in 0..steps {
        let now = step * dt;

        while next_departure < departures.len() && departures[next_departure].0 <= now {
            let id = &departures[next_departure].1;
            if flows.remove(id).is_some() {
                accums.get_mut(id).expect("departed flow was active").end_ms = now;
            }
            next_departure += 1;
        }

        let snapshot: Option<Vec<(String, PathSeq)>> = if controller.policy().is_dynamic() {
            Some(
                flows
                    .iter()
                    .map(|f| (f.request.id.clone(), f.path.clone()))
                    .collect(),
            )
        } else {
            None
        };

        let mut applied = controller.poll_pending(now, &mut flows);
        if now.is_multiple_of(delta) {
            // Close the previous period's rows.
            if steps_in_tick > 0 {
                let open = ticks.last_mut().expect("open tick row");
                flush_flow_ticks(&mut flow_ticks, &mut period, open.tick);
                finish_tick_row(
                    open,
                    steps_in_tick,
                    offered_sum,
                    delivered_sum,
                    delay_weighted_sum,
                );
            }
            steps_in_tick = 0;
            offered_sum = 0.0;
            delivered_sum = 0.0;
            delay_weighted_sum = 0.0;

            let record = controller.tick(net, &mut flows, &catalog, now / delta, config.trace_search)?;
            applied = applied || record.detail.is_some();
            ticks.push(tick_row_from_record(&record));
            records.push(record);
        }
        if applied {
            if let Some(before) = &snapshot {
                for (id, old_path) in before {
                    if let Some(i) = flows.position(id) {
                        if *flows.get(i).path != **old_path {
                            accums.get_mut(id).expect("rerouted flow was active").reroutes += 1;
                        }
                    }
                }
            }
        }

        while next_arrival < arrivals.len() && arrivals[next_arrival].arrival_ms <= now {
            let request = arrivals[next_arrival].clone();
            let flow = controller.place(net, request.clone())?;
            flows
                .insert(flow)
                .map_err(|_| SimError::DuplicateRequest(request.id.clone()))?;
            accums.insert(
                request.id.clone(),
                FlowAccum {
                    offered_sum: 0.0,
                    delivered_sum: 0.0,
                    delay_sum: 0.0,
                    steps: 0,
                    reroutes: 0,
                    end_ms: scenario.horizon_ms,
                },
            );
            next_arrival += 1;
        }

        let m = loads::measure_step(net, &flows);
        let mut step_offered = 0.0;
        let mut step_delivered = 0.0;
        let mut step_delay_weighted = 0.0;
        for (i, flow) in flows.iter().enumerate() {
            let fm = &m.flows[i];
            let accum = accums.get_mut(&flow.request.id).expect("active flow");
            accum.offered_sum += fm.offered_kbps;
            accum.delivered_sum += fm.delivered_kbps;
            accum.delay_sum += fm.delay_ms;
            accum.steps += 1;
            let p = period.entry(flow.request.id.clone()).or_default();
            p.protocol = Some(flow.request.protocol);
            p.offered_sum += fm.offered_kbps;
            p.delivered_sum += fm.delivered_kbps;
            p.delay_sum += fm.delay_ms;
            p.steps += 1;
            step_offered += fm.offered_kbps;
            step_delivered += fm.delivered_kbps;
            step_delay_weighted += fm.offered_kbps * fm.delay_ms;
        }
        offered_sum += step_offered;
        delivered_sum += step_delivered;
        delay_weighted_sum += step_delay_weighted;
        steps_in_tick += 1;
    }
    if steps_in_tick > 0 {
        let open = ticks.last_mut().expect("open tick row");
        flush_flow_ticks(&mut flow_ticks, &mut period, open.tick);
        finish_tick_row(
            open,
            steps_in_tick,
            offered_sum,
            delivered_sum,
            delay_weighted_sum,
        );
    }

    let mut flow_rows: Vec<FlowRow> = Vec::with_capacity(accums.len());
    for request in &requests {
        let Some(a) = accums.get(&request.id) else {
            // Arrived at or after the horizon: never active.
            continue;
        };
        let steps = a.steps.max(1) as f64;
        let offered = a.offered_sum / steps;
        let delivered = a.delivered_sum / steps;
        flow_rows.push(FlowRow {
            id: request.id.clone(),
            class: class_of(&request.id),
            source: net.switch_id(request.source).to_string(),
            terminal: net.switch_id(request.terminal).to_string(),
            protocol: request.protocol,
            rate_kbps: request.rate_kbps,
            arrival_ms: request.arrival_ms,
            end_ms: a.end_ms,
            steps_active: a.steps,
            offered_kbps: offered,
            delivered_kbps: delivered,
            loss: if a.offered_sum > 0.0 {
                1.0 - a.delivered_sum / a.offered_sum
            } else {
                0.0
            },
            mean_delay_ms: a.delay_sum / steps,
            reroutes: a.reroutes,
        });
    }
    flow_rows.sort_by(|a, b| a.id.cmp(&b.id));

    Ok(RunResult {
        policy: config.policy,
        seed: config.seed,
        ticks,
        flow_ticks,
        flows: flow_rows,
        records,
    })
}

/// Request id without a trailing `-<number>` stream index.
pub fn class_of(id: &str) -> String {
    match id.rsplit_once('-') {
        Some((head, tail)) if !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) => {
            head.to_string()
        }
        _ => id.to_string(),
    }
}

fn tick_row_from_record(record: &AdaptationRecord) -> TickRow {
    let detail = record.detail.as_ref();
    TickRow {
        tick: record.tick,
        time_ms: record.time_ms,
        max_util: record.max_util,
        congested: record.congested,
        adapted: detail.is_some(),
        compute_ms: detail.map_or(0.0, |d| d.compute_ms),
        evaluations: detail.map_or(0, |d| d.evaluations),
        flows_changed: detail.map_or(0, |d| d.flows_changed),
        weights_changed: detail.map_or(0, |d| d.weights_changed),
        offered_kbps: 0.0,
        delivered_kbps: 0.0,
        loss: 0.0,
        mean_delay_ms: 0.0,
    }
}

fn finish_tick_row(
    row: &mut TickRow,
    steps: u64,
    offered_sum: f64,
    delivered_sum: f64,
    delay_weighted_sum: f64,
) {
    row.offered_kbps = offered_sum / steps as f64;
    row.delivered_kbps = delivered_sum / steps as f64;
    row.loss = if offered_sum > 0.0 {
        1.0 - delivered_sum / offered_sum
    } else {
        0.0
    };
    row.mean_delay_ms = if offered_sum > 0.0 {
        delay_weighted_sum / offered_sum
    } else {
        0.0
    };
}
