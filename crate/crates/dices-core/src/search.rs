//! Evolutionary search over flow placements.
//!
//! Given the current flow set, the search looks for alternative placements of
//! the same requests that trade off three objectives, all minimized:
//!
//! 1. `util`: the maximum link utilization across the network,
//! 2. `cost`: total path edit distance from the current placement, a proxy
//!    for the number of forwarding rule changes needed,
//! 3. `delay`: total propagation delay over the distinct links used, defined
//!    only for placements that stay at or below the congestion threshold.
//!
//! The engine is a generational non-dominated sort with an elitist archive:
//! offspring come from binary tournaments, single-point crossover on the
//! canonically ordered flow vector, and per-flow mutation that swaps in a
//! catalog alternative. The returned placement is the knee of the final
//! non-dominated front, the member closest to the ideal corner after
//! per-objective min-max normalization.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::net::{FlowSet, Network};
use crate::paths::{alternative_flow, edit_distance, PathCatalog, PathError};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("flow set is empty")]
    EmptyFlowSet,
    #[error("candidate and baseline route different requests at position {0}")]
    RequestMismatch(usize),
    #[error("invalid search config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// Objective values of one placement. `delay_ms` holds the sentinel value
/// (strictly larger than any feasible delay sum) when the placement exceeds
/// the congestion threshold; the flag tells the two cases apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessTriple {
    pub util: f64,
    pub cost: u64,
    pub delay_ms: u64,
    pub delay_defined: bool,
}

impl FitnessTriple {
    fn objective(&self, k: usize) -> f64 {
        match k {
            0 => self.util,
            1 => self.cost as f64,
            _ => self.delay_ms as f64,
        }
    }
}

/// Sentinel delay for placements over the threshold: one more than an upper
/// bound on any defined delay sum of `n_flows` flows.
pub fn undefined_delay_sentinel(net: &Network, n_flows: usize) -> u64 {
    n_flows as u64 * net.total_delay_ms() + 1
}

/// Pareto dominance, all objectives minimized. The sentinel delay makes any
/// over-threshold placement comparable (and worse on delay) than any defined
/// one.
pub fn dominates(a: &FitnessTriple, b: &FitnessTriple) -> bool {
    let no_worse = a.util <= b.util && a.cost <= b.cost && a.delay_ms <= b.delay_ms;
    let better = a.util < b.util || a.cost < b.cost || a.delay_ms < b.delay_ms;
    no_worse && better
}

/// Search parameters. `threshold` is the congestion bound `u` shared with
/// the rest of the controller.
#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Population and archive size; even and at least 2.
    pub psize: usize,
    /// Crossover probability per offspring pair.
    pub cprob: f64,
    /// Per-flow mutation probability; `None` means `1 / |F|`.
    pub mprob: Option<f64>,
    /// Budget in fitness evaluations; the loop stops at the generation
    /// boundary where the running total reaches it.
    pub neval: u64,
    /// Optional hard cap on generations, as an alternative way to read the
    /// budget. `None` leaves evaluations as the only stop.
    pub max_generations: Option<u64>,
    /// Congestion threshold `u` in (0, 1].
    pub threshold: f64,
    /// Paths kept per switch pair when building catalogs.
    pub catalog_k: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            psize: 100,
            cprob: 0.8,
            mprob: None,
            neval: 10_000,
            max_generations: None,
            threshold: 0.8,
            catalog_k: 8,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.psize < 2 || !self.psize.is_multiple_of(2) {
            return Err(SearchError::BadConfig(format!(
                "psize {} must be even and at least 2",
                self.psize
            )));
        }
        if !(0.0..=1.0).contains(&self.cprob) {
            return Err(SearchError::BadConfig(format!("cprob {}", self.cprob)));
        }
        if let Some(m) = self.mprob {
            if !(0.0..=1.0).contains(&m) {
                return Err(SearchError::BadConfig(format!("mprob {m}")));
            }
        }
        if self.neval == 0 {
            return Err(SearchError::BadConfig("neval must be positive".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(SearchError::BadConfig(format!(
                "threshold {} outside (0, 1]",
                self.threshold
            )));
        }
        if self.catalog_k == 0 {
            return Err(SearchError::BadConfig("catalog_k must be positive".into()));
        }
        Ok(())
    }
}

/// Per-generation progress snapshot, kept when tracing is on.
#[derive(Debug, Clone)]
pub struct GenerationStat {
    pub generation: u64,
    pub evaluations: u64,
    /// Minimum per objective over the current best front.
    pub best: [f64; 3],
    /// Median per objective over the current best front.
    pub median: [f64; 3],
    pub front_size: usize,
    pub front_fitness: Vec<FitnessTriple>,
}

/// Result of one search run.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: FlowSet,
    pub best_fitness: FitnessTriple,
    /// Final non-dominated front (placements and their fitness).
    pub front: Vec<(FlowSet, FitnessTriple)>,
    pub evaluations: u64,
    pub generations: u64,
    pub trace: Vec<GenerationStat>,
}

/// Fitness of `candidate` against `baseline` (the placement currently
/// installed). Both must route the same requests in canonical order.
pub fn evaluate(
    net: &Network,
    baseline: &FlowSet,
    candidate: &FlowSet,
    threshold: f64,
) -> Result<FitnessTriple, SearchError> {
    if baseline.len() != candidate.len() {
        return Err(SearchError::RequestMismatch(
            baseline.len().min(candidate.len()),
        ));
    }
    for i in 0..baseline.len() {
        if baseline.get(i).request.id != candidate.get(i).request.id {
            return Err(SearchError::RequestMismatch(i));
        }
    }
    let mut scratch = vec![0u64; net.link_count()];
    Ok(fitness_of(net, baseline, candidate, threshold, &mut scratch))
}

/// Shared fitness kernel. The utilization and delay objectives scan the full
/// link table, so one evaluation costs O(|E| + |F| * path length).
fn fitness_of(
    net: &Network,
    baseline: &FlowSet,
    candidate: &FlowSet,
    threshold: f64,
    loads: &mut [u64],
) -> FitnessTriple {
    loads.fill(0);
    for flow in candidate {
        for &e in flow.path.iter() {
            loads[e] += flow.request.rate_kbps;
        }
    }
    let mut util = 0.0f64;
    let mut delay_ms = 0u64;
    for (e, &load) in loads.iter().enumerate() {
        if load > 0 {
            let link = net.link(e);
            let u = load as f64 / link.capacity_kbps() as f64;
            if u > util {
                util = u;
            }
            delay_ms += link.delay_ms;
        }
    }
    let mut cost = 0u64;
    for i in 0..candidate.len() {
        cost += edit_distance(&baseline.get(i).path, &candidate.get(i).path) as u64;
    }
    let delay_defined = util <= threshold;
    if !delay_defined {
        delay_ms = undefined_delay_sentinel(net, candidate.len());
    }
    FitnessTriple {
        util,
        cost,
        delay_ms,
        delay_defined,
    }
}

/// Fast non-dominated sort. Returns fronts of indices into `points`, rank 0
/// first; indices inside a front stay in ascending order.
pub fn non_dominated_sort(points: &[FitnessTriple]) -> Vec<Vec<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominated[i].push(j);
                count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominated[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::take(&mut current));
        current = next;
    }
    fronts
}

/// Crowding distance per front member. Boundary members per objective get
/// infinity; interior members accumulate the normalized gap between their
/// neighbors. An objective with zero range contributes nothing.
pub fn crowding_distance(front: &[FitnessTriple]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0f64; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..3 {
        order.sort_by(|&a, &b| front[a].objective(k).total_cmp(&front[b].objective(k)).then(a.cmp(&b)));
        let lo = front[order[0]].objective(k);
        let hi = front[order[n - 1]].objective(k);
        let range = hi - lo;
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        if range == 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let gap = front[order[w + 1]].objective(k) - front[order[w - 1]].objective(k);
            dist[order[w]] += gap / range;
        }
    }
    dist
}

/// Index of the knee member of a non-dominated front: the one closest to the
/// origin after per-objective min-max normalization. Members with undefined
/// delay are ignored unless the whole front is undefined, in which case the
/// delay objective is dropped instead.
pub fn knee_select(front: &[FitnessTriple]) -> Option<usize> {
    if front.is_empty() {
        return None;
    }
    let defined: Vec<usize> = (0..front.len()).filter(|&i| front[i].delay_defined).collect();
    let (members, objectives): (Vec<usize>, usize) = if defined.is_empty() {
        ((0..front.len()).collect(), 2)
    } else {
        (defined, 3)
    };

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in &members {
        for k in 0..objectives {
            lo[k] = lo[k].min(front[i].objective(k));
            hi[k] = hi[k].max(front[i].objective(k));
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for &i in &members {
        let mut d2 = 0.0;
        for k in 0..objectives {
            let range = hi[k] - lo[k];
            let v = if range == 0.0 {
                0.0
            } else {
                (front[i].objective(k) - lo[k]) / range
            };
            d2 += v * v;
        }
        let better = match best {
            None => true,
            Some((bd, bi)) => {
                d2 < bd
                    || (d2 == bd
                        && (front[i].util, front[i].cost, front[i].delay_ms)
                            < (front[bi].util, front[bi].cost, front[bi].delay_ms))
            }
        };
        if better {
            best = Some((d2, i));
        }
    }
    best.map(|(_, i)| i)
}

struct Individual {
    flows: FlowSet,
    fitness: Option<FitnessTriple>,
    rank: usize,
    crowding: f64,
}

impl Individual {
    fn fresh(flows: FlowSet) -> Self {
        Individual {
            flows,
            fitness: None,
            rank: usize::MAX,
            crowding: 0.0,
        }
    }
}

/// Mutates each flow independently with probability `mprob`, drawing the
/// replacement path from the catalog.
fn mutate(
    net: &Network,
    catalog: &PathCatalog,
    flows: &FlowSet,
    mprob: f64,
    rng: &mut ChaCha8Rng,
) -> Result<FlowSet, PathError> {
    let mut out = flows.clone();
    for i in 0..out.len() {
        if rng.gen_bool(mprob) {
            let alt = alternative_flow(out.get(i), net, catalog, rng)?;
            out.set_path(i, alt.path);
        }
    }
    Ok(out)
}

/// Single-point crossover on the canonically ordered flow vector. With fewer
/// than two flows the children are plain copies.
fn crossover(a: &FlowSet, b: &FlowSet, rng: &mut ChaCha8Rng) -> (FlowSet, FlowSet) {
    let n = a.len();
    if n < 2 {
        return (a.clone(), b.clone());
    }
    let cut = rng.gen_range(1..n);
    let mut ca = a.clone();
    let mut cb = b.clone();
    for i in cut..n {
        ca.set_path(i, b.get(i).path.clone());
        cb.set_path(i, a.get(i).path.clone());
    }
    (ca, cb)
}

/// Binary tournament by rank, then crowding distance, then a seeded coin.
fn tournament<'a>(archive: &'a [Individual], rng: &mut ChaCha8Rng) -> &'a Individual {
    let a = &archive[rng.gen_range(0..archive.len())];
    let b = &archive[rng.gen_range(0..archive.len())];
    if a.rank != b.rank {
        return if a.rank < b.rank { a } else { b };
    }
    if a.crowding != b.crowding {
        return if a.crowding > b.crowding { a } else { b };
    }
    if rng.gen_bool(0.5) {
        a
    } else {
        b
    }
}

/// Initial population: the incumbent placement plus `psize - 1` mutants of it.
fn initial_population(
    net: &Network,
    catalog: &PathCatalog,
    incumbent: &FlowSet,
    mprob: f64,
    psize: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Individual>, PathError> {
    let mut population = Vec::with_capacity(psize);
    population.push(Individual::fresh(incumbent.clone()));
    for _ in 1..psize {
        population.push(Individual::fresh(mutate(net, catalog, incumbent, mprob, rng)?));
    }
    Ok(population)
}

/// Runs the search from the installed placement `incumbent`. Deterministic
/// for a given RNG state; the catalog must cover every request pair.
pub fn run_search(
    net: &Network,
    incumbent: &FlowSet,
    catalog: &PathCatalog,
    config: &SearchConfig,
    rng: &mut ChaCha8Rng,
    trace: bool,
) -> Result<SearchOutcome, SearchError> {
    config.validate()?;
    if incumbent.is_empty() {
        return Err(SearchError::EmptyFlowSet);
    }
    let mprob = config.mprob.unwrap_or(1.0 / incumbent.len() as f64);
    let mut loads = vec![0u64; net.link_count()];

    let mut population = initial_population(net, catalog, incumbent, mprob, config.psize, rng)?;
    let mut archive: Vec<Individual> = Vec::new();
    let mut evaluations = 0u64;
    let mut generations = 0u64;
    let mut stats = Vec::new();

    let best_front = loop {
        generations += 1;
        for ind in &mut population {
            if ind.fitness.is_none() {
                ind.fitness = Some(fitness_of(
                    net,
                    incumbent,
                    &ind.flows,
                    config.threshold,
                    &mut loads,
                ));
                evaluations += 1;
            }
        }

        // Merge offspring with the elite archive, then re-rank everything.
        let mut merged: Vec<Individual> = std::mem::take(&mut population);
        merged.append(&mut archive);
        let points: Vec<FitnessTriple> = merged.iter().map(|m| m.fitness.unwrap()).collect();
        let fronts = non_dominated_sort(&points);

        let current_front: Vec<(FlowSet, FitnessTriple)> = fronts[0]
            .iter()
            .map(|&i| (merged[i].flows.clone(), points[i]))
            .collect();
        if trace {
            stats.push(front_stat(generations, evaluations, &current_front));
        }

        // Refill the archive front by front; the front that overflows is
        // truncated by descending crowding distance.
        let mut next_archive: Vec<Individual> = Vec::with_capacity(config.psize);
        let mut by_index: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
        'fill: for (rank, front) in fronts.iter().enumerate() {
            let crowding = crowding_distance(&front.iter().map(|&i| points[i]).collect::<Vec<_>>());
            let mut order: Vec<usize> = (0..front.len()).collect();
            if front.len() > config.psize - next_archive.len() {
                order.sort_by(|&x, &y| {
                    crowding[y].total_cmp(&crowding[x]).then(front[x].cmp(&front[y]))
                });
            }
            for &pos in &order {
                if next_archive.len() == config.psize {
                    break 'fill;
                }
                let mut ind = by_index[front[pos]].take().unwrap();
                ind.rank = rank;
                ind.crowding = crowding[pos];
                next_archive.push(ind);
            }
        }
        archive = next_archive;

        let out_of_budget = evaluations >= config.neval
            || config.max_generations.is_some_and(|g| generations >= g);
        if out_of_budget {
            break current_front;
        }

        // Breed the next generation from the archive.
        let mut offspring = Vec::with_capacity(config.psize);
        while offspring.len() < config.psize {
            let pa = tournament(&archive, rng);
            let pb = tournament(&archive, rng);
            let (ca, cb) = if rng.gen_bool(config.cprob) {
                crossover(&pa.flows, &pb.flows, rng)
            } else {
                (pa.flows.clone(), pb.flows.clone())
            };
            for child in [ca, cb] {
                if offspring.len() < config.psize {
                    let mutated = mutate(net, catalog, &child, mprob, rng)?;
                    offspring.push(Individual::fresh(mutated));
                }
            }
        }
        population = offspring;
    };

    let front_points: Vec<FitnessTriple> = best_front.iter().map(|(_, f)| *f).collect();
    let knee = knee_select(&front_points).expect("front is never empty");
    Ok(SearchOutcome {
        best: best_front[knee].0.clone(),
        best_fitness: front_points[knee],
        front: best_front,
        evaluations,
        generations,
        trace: stats,
    })
}

fn front_stat(
    generation: u64,
    evaluations: u64,
    front: &[(FlowSet, FitnessTriple)],
) -> GenerationStat {
    let mut best = [f64::INFINITY; 3];
    let mut median = [0.0; 3];
    for k in 0..3 {
        let mut values: Vec<f64> = front.iter().map(|(_, f)| f.objective(k)).collect();
        values.sort_by(f64::total_cmp);
        best[k] = values[0];
        median[k] = values[values.len() / 2];
    }
    GenerationStat {
        generation,
        evaluations,
        best,
        median,
        front_size: front.len(),
        front_fitness: front.iter().map(|(_, f)| *f).collect(),
    }
}
