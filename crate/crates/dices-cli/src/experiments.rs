//! Drivers for the packaged experiments and their summary arithmetic.

use std::collections::BTreeMap;

use dices_core::sim::class_of;
use dices_core::{
    builtin_scenario, builtin_topology, run_scenario, ControllerConfig, FlowTickRow, Network,
    PolicyKind, RunConfig, RunResult, SearchConfig, SimError, TrafficScenario,
};

use crate::stats::{median, ols, LinFit, StatsError};

/// Runs `repeat` copies of the scenario, seeded `base.seed + i`.
pub fn run_many(
    net: &Network,
    scenario: &TrafficScenario,
    base: &RunConfig,
    repeat: u64,
) -> Result<Vec<RunResult>, SimError> {
    (0..repeat)
        .map(|i| {
            let mut config = base.clone();
            config.seed = base.seed + i;
            run_scenario(net, scenario, &config)
        })
        .collect()
}

/// One timed compute step of a scaling sweep.
#[derive(Debug, Clone)]
pub struct Exp2Row {
    pub switches: usize,
    pub links: usize,
    pub requests: usize,
    pub seed: u64,
    pub search_ms: f64,
}

/// Compute time against network size: five fixed requests on growing
/// complete graphs.
pub fn exp2_size_sweep(
    sizes: &[usize],
    seeds: u64,
    search: &SearchConfig,
) -> Result<Vec<Exp2Row>, SimError> {
    let mut rows = Vec::new();
    for &n in sizes {
        for (seed, search_ms) in timed_runs(&format!("exp2-size-{n}"), seeds, search)? {
            rows.push(Exp2Row {
                switches: n,
                links: n * (n - 1),
                requests: 5,
                seed,
                search_ms,
            });
        }
    }
    Ok(rows)
}

/// Compute time against demand size: growing request counts on the
/// five-switch complete graph.
pub fn exp2_request_sweep(
    counts: &[usize],
    seeds: u64,
    search: &SearchConfig,
) -> Result<Vec<Exp2Row>, SimError> {
    let mut rows = Vec::new();
    for &m in counts {
        for (seed, search_ms) in timed_runs(&format!("exp2-reqs-{m}"), seeds, search)? {
            rows.push(Exp2Row {
                switches: 5,
                links: 20,
                requests: m,
                seed,
                search_ms,
            });
        }
    }
    Ok(rows)
}

fn timed_runs(
    scenario_name: &str,
    seeds: u64,
    search: &SearchConfig,
) -> Result<Vec<(u64, f64)>, SimError> {
    let scenario = builtin_scenario(scenario_name).expect("sweep scenarios are builtin");
    let net = builtin_topology(&scenario.topology).expect("sweep topologies are builtin");
    (1..=seeds)
        .map(|seed| {
            let config = RunConfig {
                policy: PolicyKind::Dices,
                seed,
                controller: ControllerConfig {
                    search: *search,
                    ..ControllerConfig::default()
                },
                ..RunConfig::default()
            };
            let run = run_scenario(&net, &scenario, &config)?;
            let first = run
                .ticks
                .iter()
                .find(|t| t.adapted)
                .expect("the sweep load always crosses the threshold");
            Ok((seed, first.compute_ms))
        })
        .collect()
}

/// OLS over the per-x medians of raw `(x, wall-clock ms)` samples.
pub fn summarize_exp2(samples: &[(f64, f64)]) -> Result<LinFit, StatsError> {
    let mut groups: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &(x, y) in samples {
        groups.entry(x.to_bits()).or_default().push(y);
    }
    let points: Vec<(f64, f64)> = groups
        .into_iter()
        .map(|(bits, ys)| (f64::from_bits(bits), median(&ys)))
        .collect();
    ols(&points)
}

/// One traffic class of a demand-weighted summary.
#[derive(Debug, Clone)]
pub struct ClassStat {
    pub class: String,
    /// Nominal demand of the class (rate times stream count), Kbps.
    pub weight_kbps: f64,
    pub delay_ms: f64,
    pub loss: f64,
}

/// Demand-weighted digest of one run.
#[derive(Debug, Clone)]
pub struct Exp3Table {
    pub classes: Vec<ClassStat>,
    /// Overall means, weighted by each class's nominal demand.
    pub delay_ms: f64,
    pub loss: f64,
}

/// Folds per-period flow rows into a per-class table. Within a class the
/// delay is the offered-volume-weighted mean of its rows; the overall line
/// weights classes by nominal demand from the scenario, so a starved stream
/// still counts at full weight.
pub fn summarize_exp3(scenario: &TrafficScenario, rows: &[FlowTickRow]) -> Exp3Table {
    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    for r in &scenario.requests {
        *weights.entry(class_of(&r.id)).or_default() += r.rate_kbps as f64;
    }

    #[derive(Default)]
    struct Acc {
        offered: f64,
        delivered: f64,
        delay_offered: f64,
        delay_plain: f64,
        rows: u64,
    }
    let mut accs: BTreeMap<&str, Acc> = BTreeMap::new();
    for row in rows {
        let a = accs.entry(row.class.as_str()).or_default();
        a.offered += row.offered_kbps;
        a.delivered += row.delivered_kbps;
        a.delay_offered += row.offered_kbps * row.mean_delay_ms;
        a.delay_plain += row.mean_delay_ms;
        a.rows += 1;
    }

    let mut classes = Vec::with_capacity(weights.len());
    let (mut delay_num, mut loss_num, mut weight_sum) = (0.0, 0.0, 0.0);
    for (class, &weight) in &weights {
        let (delay, loss) = match accs.get(class.as_str()) {
            Some(a) if a.offered > 0.0 => {
                (a.delay_offered / a.offered, 1.0 - a.delivered / a.offered)
            }
            // A fully starved class has no offered volume to weight by;
            // report the plain mean of what its paths measured.
            Some(a) if a.rows > 0 => (a.delay_plain / a.rows as f64, 0.0),
            _ => (0.0, 0.0),
        };
        delay_num += weight * delay;
        loss_num += weight * loss;
        weight_sum += weight;
        classes.push(ClassStat {
            class: class.clone(),
            weight_kbps: weight,
            delay_ms: delay,
            loss,
        });
    }
    Exp3Table {
        classes,
        delay_ms: if weight_sum > 0.0 {
            delay_num / weight_sum
        } else {
            0.0
        },
        loss: if weight_sum > 0.0 {
            loss_num / weight_sum
        } else {
            0.0
        },
    }
}

/// One seeded policy run of the disaster scenario, summarized.
#[derive(Debug, Clone)]
pub struct Exp3Run {
    pub policy: PolicyKind,
    pub seed: u64,
    pub table: Exp3Table,
}

pub const EXP3_POLICIES: [PolicyKind; 3] =
    [PolicyKind::Dices, PolicyKind::Rfwd, PolicyKind::Ospf];

/// Runs the disaster scenario under every policy with seeds 1..=seeds.
pub fn exp3_compare(seeds: u64, search: &SearchConfig) -> Result<Vec<Exp3Run>, SimError> {
    let scenario = builtin_scenario("exp3").expect("exp3 is builtin");
    let net = builtin_topology(&scenario.topology).expect("ems is builtin");
    let mut runs = Vec::new();
    for policy in EXP3_POLICIES {
        for seed in 1..=seeds {
            let config = RunConfig {
                policy,
                seed,
                controller: ControllerConfig {
                    search: *search,
                    ..ControllerConfig::default()
                },
                ..RunConfig::default()
            };
            let run = run_scenario(&net, &scenario, &config)?;
            runs.push(Exp3Run {
                policy,
                seed,
                table: summarize_exp3(&scenario, &run.flow_ticks),
            });
        }
    }
    Ok(runs)
}

/// Median delay and loss of one policy's runs, per class and overall.
/// `None` when the policy never ran.
pub fn exp3_policy_summary(
    runs: &[Exp3Run],
    policy: PolicyKind,
) -> Option<(Vec<ClassStat>, f64, f64)> {
    let mine: Vec<&Exp3Run> = runs.iter().filter(|r| r.policy == policy).collect();
    let first = mine.first()?;
    let pick = |f: &dyn Fn(&Exp3Run) -> f64| median(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
    let delay = pick(&|r| r.table.delay_ms);
    let loss = pick(&|r| r.table.loss);
    let classes = first
        .table
        .classes
        .iter()
        .enumerate()
        .map(|(k, base)| ClassStat {
            class: base.class.clone(),
            weight_kbps: base.weight_kbps,
            delay_ms: pick(&|r| r.table.classes[k].delay_ms),
            loss: pick(&|r| r.table.classes[k].loss),
        })
        .collect();
    Some((classes, delay, loss))
}
