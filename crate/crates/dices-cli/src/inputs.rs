//! Resolution of `--topology` and `--scenario` arguments: builtin names
//! first, then paths to TOML files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dices_core::{builtin_scenario, builtin_topology, parse_topology, Network, TrafficScenario};

pub const BUILTIN_TOPOLOGIES: &str = "ems, example6, complete-<N>";
pub const BUILTIN_SCENARIOS: &str = "exp1, exp3, exp2-size-<N>, exp2-reqs-<N>";

pub fn load_topology(spec: &str) -> Result<Network> {
    if let Some(net) = builtin_topology(spec) {
        return Ok(net);
    }
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
        return parse_topology(&text).with_context(|| format!("parsing topology {spec}"));
    }
    bail!("unknown topology {spec:?}: not a builtin ({BUILTIN_TOPOLOGIES}) and not a file");
}

pub fn load_scenario(spec: &str) -> Result<TrafficScenario> {
    if let Some(scenario) = builtin_scenario(spec) {
        return Ok(scenario);
    }
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
        return TrafficScenario::from_toml(&text)
            .with_context(|| format!("parsing scenario {spec}"));
    }
    bail!("unknown scenario {spec:?}: not a builtin ({BUILTIN_SCENARIOS}) and not a file");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve_without_touching_the_filesystem() {
        assert_eq!(load_topology("ems").unwrap().switch_count(), 7);
        assert_eq!(load_topology("complete-9").unwrap().switch_count(), 9);
        assert_eq!(load_scenario("exp1").unwrap().requests.len(), 10);
        assert_eq!(load_scenario("exp2-reqs-7").unwrap().requests.len(), 7);
    }

    #[test]
    fn unknown_names_fail_with_the_builtin_list() {
        let err = load_topology("no-such-thing").unwrap_err().to_string();
        assert!(err.contains("complete-<N>"), "{err}");
        let err = load_scenario("no-such-thing").unwrap_err().to_string();
        assert!(err.contains("exp2-size-<N>"), "{err}");
    }

    #[test]
    fn files_resolve_after_builtins() {
        let dir = std::env::temp_dir().join(format!("dices-inputs-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("two.toml");
        fs::write(
            &path,
            r#"
            switches = ["a", "b"]
            symmetric = true
            [[links]]
            from = "a"
            to = "b"
            bandwidth_mbps = 10
            delay_ms = 5
            "#,
        )
        .unwrap();
        let net = load_topology(path.to_str().unwrap()).unwrap();
        assert_eq!(net.link_count(), 2);
        fs::remove_dir_all(&dir).unwrap();
    }
}
