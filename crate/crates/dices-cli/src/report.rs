//! CSV renderers for run results.
//!
//! The schemas are frozen (documented in the README). Every field except
//! the wall-clock `search_ms` column is a pure function of topology,
//! scenario, policy and seed, so reruns reproduce the files byte for byte
//! apart from that one column.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use dices_core::{Protocol, RunResult};

pub const TICKS_HEADER: &str = "tick,time_ms,max_util,congested,adapted,search_ms,evaluations,\
fit_util,fit_cost,fit_delay_ms,flows_changed,weights_changed,offered_mbps,delivered_mbps,loss,\
mean_delay_ms";
pub const FLOWS_HEADER: &str =
    "tick,flow,class,protocol,offered_mbps,delivered_mbps,loss,delay_ms";
pub const SUMMARY_HEADER: &str =
    "policy,seed,flows,adaptations,offered_mbps,delivered_mbps,loss,mean_delay_ms";
pub const TRACE_HEADER: &str = "tick,generation,evaluations,front_size,best_util,best_cost,\
best_delay_ms,median_util,median_cost,median_delay_ms";

/// One row per control period, with the compute outcome where one ran.
/// Fitness columns stay empty on ticks without an adaptation; a knee whose
/// delay objective was undefined leaves `fit_delay_ms` empty too.
pub fn ticks_csv(run: &RunResult) -> String {
    let mut out = String::with_capacity(64 * (run.ticks.len() + 1));
    out.push_str(TICKS_HEADER);
    out.push('\n');
    for (row, record) in run.ticks.iter().zip(&run.records) {
        let (fit_util, fit_cost, fit_delay) = match &record.detail {
            Some(d) => (
                format!("{:.6}", d.best_fitness.util),
                d.best_fitness.cost.to_string(),
                if d.best_fitness.delay_defined {
                    d.best_fitness.delay_ms.to_string()
                } else {
                    String::new()
                },
            ),
            None => (String::new(), String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{:.6},{},{},{:.3},{},{},{},{},{},{},{:.3},{:.3},{:.6},{:.3}",
            row.tick,
            row.time_ms,
            row.max_util,
            row.congested as u8,
            row.adapted as u8,
            row.compute_ms,
            row.evaluations,
            fit_util,
            fit_cost,
            fit_delay,
            row.flows_changed,
            row.weights_changed,
            row.offered_kbps / 1000.0,
            row.delivered_kbps / 1000.0,
            row.loss,
            row.mean_delay_ms,
        )
        .expect("write to string");
    }
    out
}

/// One row per flow per control period it was active in.
pub fn flows_csv(run: &RunResult) -> String {
    let mut out = String::with_capacity(48 * (run.flow_ticks.len() + 1));
    out.push_str(FLOWS_HEADER);
    out.push('\n');
    for row in &run.flow_ticks {
        writeln!(
            out,
            "{},{},{},{},{:.3},{:.3},{:.6},{:.3}",
            row.tick,
            row.id,
            row.class,
            protocol_name(row.protocol),
            row.offered_kbps / 1000.0,
            row.delivered_kbps / 1000.0,
            row.loss,
            row.mean_delay_ms,
        )
        .expect("write to string");
    }
    out
}

/// One row per seeded run plus a closing `median` row. All runs must come
/// from the same invocation (same policy and scenario).
pub fn summary_csv(runs: &[RunResult]) -> String {
    assert!(!runs.is_empty(), "summary of no runs");
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');

    let mut columns: Vec<[f64; 6]> = Vec::with_capacity(runs.len());
    for run in runs {
        let row = summary_of(run);
        writeln!(
            out,
            "{},{},{},{},{:.3},{:.3},{:.6},{:.3}",
            run.policy, run.seed, row[0] as u64, row[1] as u64, row[2], row[3], row[4], row[5],
        )
        .expect("write to string");
        columns.push(row);
    }
    let med = |k: usize| crate::stats::median(&columns.iter().map(|c| c[k]).collect::<Vec<_>>());
    writeln!(
        out,
        "{},median,{:.1},{:.1},{:.3},{:.3},{:.6},{:.3}",
        runs[0].policy,
        med(0),
        med(1),
        med(2),
        med(3),
        med(4),
        med(5),
    )
    .expect("write to string");
    out
}

/// flows, adaptations, offered mbps, delivered mbps, loss, weighted delay.
fn summary_of(run: &RunResult) -> [f64; 6] {
    let adaptations = run.ticks.iter().filter(|t| t.adapted).count() as f64;
    let offered_rate =
        run.ticks.iter().map(|t| t.offered_kbps).sum::<f64>() / run.ticks.len().max(1) as f64;
    let delivered_rate =
        run.ticks.iter().map(|t| t.delivered_kbps).sum::<f64>() / run.ticks.len().max(1) as f64;
    let volume: f64 = run
        .flows
        .iter()
        .map(|f| f.offered_kbps * f.steps_active as f64)
        .sum();
    let delay = if volume > 0.0 {
        run.flows
            .iter()
            .map(|f| f.mean_delay_ms * f.offered_kbps * f.steps_active as f64)
            .sum::<f64>()
            / volume
    } else {
        0.0
    };
    [
        run.flows.len() as f64,
        adaptations,
        offered_rate / 1000.0,
        delivered_rate / 1000.0,
        run.total_loss(),
        delay,
    ]
}

/// Per-generation search progress of every adapting tick, when the run was
/// traced.
pub fn trace_csv(run: &RunResult) -> String {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for record in &run.records {
        let Some(detail) = &record.detail else {
            continue;
        };
        for g in &detail.trace {
            writeln!(
                out,
                "{},{},{},{},{:.6},{:.3},{:.3},{:.6},{:.3},{:.3}",
                record.tick,
                g.generation,
                g.evaluations,
                g.front_size,
                g.best[0],
                g.best[1],
                g.best[2],
                g.median[0],
                g.median[1],
                g.median[2],
            )
            .expect("write to string");
        }
    }
    out
}

/// Writes ticks.csv and flows.csv (and search_trace.csv when traced) into
/// `dir`, creating it as needed.
pub fn write_run(dir: &Path, run: &RunResult, trace: bool) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("ticks.csv"), ticks_csv(run))?;
    fs::write(dir.join("flows.csv"), flows_csv(run))?;
    if trace {
        fs::write(dir.join("search_trace.csv"), trace_csv(run))?;
    }
    Ok(())
}

fn protocol_name(p: Protocol) -> &'static str {
    match p {
        Protocol::Elastic => "elastic",
        Protocol::Inelastic => "inelastic",
    }
}
