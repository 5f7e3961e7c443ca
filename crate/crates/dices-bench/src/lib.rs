//! Input builders shared by the criterion targets: the disaster-response
//! instance at full load, and synthetic fitness populations.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use dices_core::{
    build_catalog_for_pairs, builtin_scenario, builtin_topology, forward, FitnessTriple, FlowSet,
    ForwardingPolicy, Network, PathCatalog, PolicyKind, W_MAX,
};

/// The EMS network with every disaster-profile request routed on its
/// delay-shortest path, plus the catalog the search draws from.
pub fn disaster_instance() -> (Network, FlowSet, PathCatalog) {
    let scenario = builtin_scenario("exp3").expect("builtin");
    let net = builtin_topology(&scenario.topology).expect("builtin");
    let requests = scenario.bind(&net).expect("scenario matches its topology");
    let policy = ForwardingPolicy::new(PolicyKind::Dices, &net, W_MAX);
    let flows = requests
        .iter()
        .map(|r| forward(&net, r.clone(), &policy).expect("ems is connected"))
        .collect();
    let incumbent = FlowSet::new(flows).expect("scenario ids are unique");
    let catalog =
        build_catalog_for_pairs(&net, 8, requests.iter().map(|r| (r.source, r.terminal)));
    (net, incumbent, catalog)
}

/// Fitness points on a coarse grid so duplicates and ties occur at the
/// rates real search populations produce them.
pub fn random_population(n: usize, seed: u64) -> Vec<FitnessTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| FitnessTriple {
            util: rng.gen_range(0..=20) as f64 / 20.0,
            cost: rng.gen_range(0..30),
            delay_ms: rng.gen_range(0..2_000),
            delay_defined: true,
        })
        .collect()
}
