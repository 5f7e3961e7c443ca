//! `dices`: run traffic scenarios under a forwarding policy and emit CSV
//! metrics, plus drivers for the packaged scaling and comparison
//! experiments.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dices_cli::{
    exp2_request_sweep, exp2_size_sweep, exp3_compare, exp3_policy_summary, load_scenario,
    load_topology, run_many, summarize_exp2, summary_csv, write_run, Exp2Row, LinFit,
    BUILTIN_SCENARIOS, BUILTIN_TOPOLOGIES, EXP3_POLICIES,
};
use dices_core::{ControllerConfig, PolicyKind, RunConfig, SearchConfig};

#[derive(Parser)]
#[command(
    name = "dices",
    version,
    about = "Periodic search-based congestion control on a flow-level network simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario under one policy and write per-run CSV metrics.
    Run(RunArgs),
    /// Sweep compute time over network and request-set sizes, with OLS fits.
    Exp2(Exp2Args),
    /// Compare the three policies on the EMS disaster scenario.
    Exp3(Exp3Args),
    /// Print the builtin topology and scenario names.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario: builtin name or path to a TOML file.
    #[arg(long)]
    scenario: String,
    /// Topology override: builtin name or path (default: the scenario's).
    #[arg(long)]
    topology: Option<String>,
    #[arg(long, default_value = "dices")]
    policy: PolicyKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of runs, seeded seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    repeat: u64,
    /// Control period of the adaptation loop, ms.
    #[arg(long, default_value_t = 1000)]
    delta_ms: u64,
    /// Simulation step, ms; must divide the control period.
    #[arg(long, default_value_t = 100)]
    dt_ms: u64,
    /// Delay between computing a placement and installing it, ms.
    #[arg(long, default_value_t = 0)]
    apply_latency_ms: u64,
    /// Congestion threshold u.
    #[arg(long, default_value_t = 0.8)]
    threshold: f64,
    /// Search population size.
    #[arg(long, default_value_t = 100)]
    psize: usize,
    /// Search budget in fitness evaluations per adaptation.
    #[arg(long, default_value_t = 10_000)]
    neval: u64,
    /// Alternative paths kept per switch pair.
    #[arg(long, default_value_t = 8)]
    catalog_k: usize,
    /// Output directory for ticks.csv, flows.csv and summary.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write per-generation search progress to search_trace.csv.
    #[arg(long)]
    trace_search: bool,
}

#[derive(Args)]
struct Exp2Args {
    /// Seeded runs per sweep point.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct Exp3Args {
    /// Seeded runs per policy.
    #[arg(long, default_value_t = 50)]
    seeds: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Exp2(args) => cmd_exp2(args),
        Command::Exp3(args) => cmd_exp3(args),
        Command::List => cmd_list(),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let net = match &args.topology {
        Some(spec) => load_topology(spec)?,
        None => load_topology(&scenario.topology)
            .with_context(|| format!("topology of scenario {:?}", scenario.name))?,
    };
    let config = RunConfig {
        policy: args.policy,
        seed: args.seed,
        dt_ms: args.dt_ms,
        controller: ControllerConfig {
            delta_ms: args.delta_ms,
            apply_latency_ms: args.apply_latency_ms,
            search: SearchConfig {
                psize: args.psize,
                neval: args.neval,
                catalog_k: args.catalog_k,
                threshold: args.threshold,
                ..SearchConfig::default()
            },
            ..ControllerConfig::default()
        },
        trace_search: args.trace_search,
    };

    let runs = run_many(&net, &scenario, &config, args.repeat)?;
    fs::create_dir_all(&args.out)?;
    if runs.len() == 1 {
        write_run(&args.out, &runs[0], args.trace_search)?;
    } else {
        for run in &runs {
            write_run(&args.out.join(format!("seed-{}", run.seed)), run, args.trace_search)?;
        }
    }
    fs::write(args.out.join("summary.csv"), summary_csv(&runs))?;

    println!(
        "{} on {}, policy {}, {} run(s)",
        scenario.name,
        scenario.topology,
        args.policy,
        runs.len()
    );
    for run in &runs {
        let adaptations = run.ticks.iter().filter(|t| t.adapted).count();
        let worst = run.ticks.iter().map(|t| t.max_util).fold(0.0, f64::max);
        println!(
            "  seed {}: loss {:.2}%, peak util {:.2}, {} adaptation(s)",
            run.seed,
            100.0 * run.total_loss(),
            worst,
            adaptations
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

const SWEEP_POINTS: [usize; 10] = [5, 10, 15, 20, 25, 30, 35, 40, 45, 50];

fn cmd_exp2(args: Exp2Args) -> Result<()> {
    let search = SearchConfig::default();

    let size_rows = exp2_size_sweep(&SWEEP_POINTS, args.seeds, &search)?;
    let fit_links = summarize_exp2(&samples(&size_rows, |r| r.links))?;
    let req_rows = exp2_request_sweep(&SWEEP_POINTS, args.seeds, &search)?;
    let fit_reqs = summarize_exp2(&samples(&req_rows, |r| r.requests))?;

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("exp2_size.csv"), exp2_csv(&size_rows))?;
    fs::write(args.out.join("exp2_reqs.csv"), exp2_csv(&req_rows))?;

    println!("compute time scaling, {} seeds per point", args.seeds);
    println!("  vs links:    {}", describe_fit(&fit_links, "|E|"));
    println!("  vs requests: {}", describe_fit(&fit_reqs, "|F|"));
    println!("wrote {}", args.out.display());
    Ok(())
}

fn samples(rows: &[Exp2Row], x: impl Fn(&Exp2Row) -> usize) -> Vec<(f64, f64)> {
    rows.iter().map(|r| (x(r) as f64, r.search_ms)).collect()
}

fn exp2_csv(rows: &[Exp2Row]) -> String {
    let mut out = String::from("switches,links,requests,seed,search_ms\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.3}",
            r.switches, r.links, r.requests, r.seed, r.search_ms
        )
        .expect("write to string");
    }
    out
}

fn describe_fit(fit: &LinFit, x: &str) -> String {
    format!(
        "time_ms = {:.3} + {:.5} * {x}, R^2 = {:.3}{}",
        fit.intercept,
        fit.slope,
        fit.r2,
        if fit.constant_y { " (constant y)" } else { "" }
    )
}

fn cmd_exp3(args: Exp3Args) -> Result<()> {
    let runs = exp3_compare(args.seeds, &SearchConfig::default())?;

    let mut runs_csv = String::from("policy,seed,delay_ms,loss\n");
    for r in &runs {
        writeln!(
            runs_csv,
            "{},{},{:.3},{:.6}",
            r.policy, r.seed, r.table.delay_ms, r.table.loss
        )
        .expect("write to string");
    }
    let mut class_csv = String::from("policy,class,weight_mbps,delay_ms,loss\n");

    println!("disaster scenario on ems, {} seeds per policy", args.seeds);
    for policy in EXP3_POLICIES {
        let (classes, delay, loss) =
            exp3_policy_summary(&runs, policy).expect("every policy ran");
        println!("  {policy}: delay {delay:.1} ms, loss {:.2}%", 100.0 * loss);
        for c in &classes {
            writeln!(
                class_csv,
                "{},{},{:.3},{:.3},{:.6}",
                policy,
                c.class,
                c.weight_kbps / 1000.0,
                c.delay_ms,
                c.loss
            )
            .expect("write to string");
        }
    }

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("exp3_runs.csv"), runs_csv)?;
    fs::write(args.out.join("exp3_classes.csv"), class_csv)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_list() -> Result<()> {
    println!("topologies: {BUILTIN_TOPOLOGIES}");
    println!("scenarios:  {BUILTIN_SCENARIOS}");
    Ok(())
}
