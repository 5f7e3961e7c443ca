//! Topology files and builtin topologies.
//!
//! A topology file is TOML: a `switches` list and a `[[links]]` table per
//! directed link with `from`, `to`, `bandwidth_mbps` and `delay_ms`. Setting
//! `symmetric = true` at the top level installs the reverse of every listed
//! link as well, which keeps files for bidirectional networks at half size.
//!
//! Builtins resolve by name:
//! - `ems`: a seven-switch emergency management network mixing fiber and
//!   satellite links,
//! - `example6`: a six-switch ring with two satellite chords,
//! - `complete-N`: the complete directed graph on N switches with uniform
//!   100 Mbps / 25 ms links, e.g. `complete-5`.

use serde::Deserialize;

use crate::net::{LinkSpec, Network, TopologyError};

const EMS: &str = include_str!("../data/ems.toml");
const EXAMPLE6: &str = include_str!("../data/example6.toml");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    switches: Vec<String>,
    #[serde(default)]
    symmetric: bool,
    #[serde(default)]
    links: Vec<LinkSpec>,
}

/// Parses a TOML topology. With `symmetric = true` the reverse of a listed
/// link must not also appear explicitly, or it counts as a duplicate.
pub fn parse_topology(text: &str) -> Result<Network, TopologyError> {
    let file: TopologyFile =
        toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
    let mut specs = file.links;
    if file.symmetric {
        let mirrored: Vec<LinkSpec> = specs
            .iter()
            .map(|l| LinkSpec {
                from: l.to.clone(),
                to: l.from.clone(),
                bandwidth_mbps: l.bandwidth_mbps,
                delay_ms: l.delay_ms,
            })
            .collect();
        specs.extend(mirrored);
    }
    Network::new(file.switches, specs)
}

/// Name of switch `i` (zero based) in `complete-N`, zero padded so that the
/// lexicographic switch order equals the numeric order: `complete-5` has
/// `s1..s5`, `complete-50` has `s01..s50`.
pub fn complete_switch_name(i: usize, n: usize) -> String {
    let width = n.to_string().len();
    format!("s{:0width$}", i + 1)
}

/// Complete directed graph on `n >= 2` switches, 100 Mbps / 25 ms per link.
pub fn complete_topology(n: usize) -> Network {
    assert!(n >= 2, "complete topology needs at least 2 switches");
    let switches: Vec<String> = (0..n).map(|i| complete_switch_name(i, n)).collect();
    let mut specs = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                specs.push(LinkSpec {
                    from: switches[i].clone(),
                    to: switches[j].clone(),
                    bandwidth_mbps: 100,
                    delay_ms: 25,
                });
            }
        }
    }
    Network::new(switches, specs).expect("complete graph is always valid")
}

/// Resolves a builtin topology by name; `None` if the name is not a builtin.
pub fn builtin_topology(name: &str) -> Option<Network> {
    match name {
        "ems" => Some(parse_topology(EMS).expect("bundled ems topology is valid")),
        "example6" => Some(parse_topology(EXAMPLE6).expect("bundled example6 topology is valid")),
        _ => {
            let n: usize = name.strip_prefix("complete-")?.parse().ok()?;
            if n >= 2 {
                Some(complete_topology(n))
            } else {
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_directed_links_verbatim() {
        let net = parse_topology(
            r#"
            switches = ["a", "b"]
            [[links]]
            from = "a"
            to = "b"
            bandwidth_mbps = 10
            delay_ms = 5
            "#,
        )
        .unwrap();
        assert_eq!(net.link_count(), 1);
        assert!(net.link_idx("a->b").is_some());
        assert!(net.link_idx("b->a").is_none());
    }

    #[test]
    fn symmetric_installs_both_directions() {
        let net = parse_topology(
            r#"
            switches = ["a", "b", "c"]
            symmetric = true
            [[links]]
            from = "a"
            to = "b"
            bandwidth_mbps = 10
            delay_ms = 5
            [[links]]
            from = "b"
            to = "c"
            bandwidth_mbps = 20
            delay_ms = 7
            "#,
        )
        .unwrap();
        assert_eq!(net.link_count(), 4);
        let back = net.link(net.link_idx("b->a").unwrap());
        assert_eq!(back.bandwidth_mbps, 10);
        assert_eq!(back.delay_ms, 5);
    }

    #[test]
    fn symmetric_rejects_an_explicit_reverse() {
        let err = parse_topology(
            r#"
            switches = ["a", "b"]
            symmetric = true
            [[links]]
            from = "a"
            to = "b"
            bandwidth_mbps = 10
            delay_ms = 5
            [[links]]
            from = "b"
            to = "a"
            bandwidth_mbps = 10
            delay_ms = 5
            "#,
        )
        .unwrap_err();
        assert!(matches!(err, TopologyError::DuplicateLink(_)));
    }

    #[test]
    fn rejects_unknown_fields_and_garbage() {
        assert!(matches!(
            parse_topology("switches = [\"a\"]\nspeed = 3"),
            Err(TopologyError::Parse(_))
        ));
        assert!(matches!(
            parse_topology("not even toml ["),
            Err(TopologyError::Parse(_))
        ));
    }

    #[test]
    fn ems_shape() {
        let net = builtin_topology("ems").unwrap();
        assert_eq!(net.switch_count(), 7);
        assert_eq!(net.link_count(), 30);
        // Satellite reach: s5 connects only to s4 and the ground station s7.
        let s5 = net.switch_idx("s5").unwrap();
        let mut peers: Vec<&str> = net
            .out_links(s5)
            .iter()
            .map(|&e| net.switch_id(net.link(e).to))
            .collect();
        peers.sort();
        assert_eq!(peers, ["s4", "s7"]);
        // Fiber at 100/25, satellite at 10/275.
        let fiber = net.link(net.link_idx("s1->s6").unwrap());
        assert_eq!((fiber.bandwidth_mbps, fiber.delay_ms), (100, 25));
        let sat = net.link(net.link_idx("s7->s1").unwrap());
        assert_eq!((sat.bandwidth_mbps, sat.delay_ms), (10, 275));
    }

    #[test]
    fn example6_shape() {
        let net = builtin_topology("example6").unwrap();
        assert_eq!(net.switch_count(), 6);
        assert_eq!(net.link_count(), 16);
    }

    #[test]
    fn complete_names_and_sizes() {
        assert_eq!(complete_switch_name(0, 5), "s1");
        assert_eq!(complete_switch_name(4, 5), "s5");
        assert_eq!(complete_switch_name(0, 50), "s01");
        assert_eq!(complete_switch_name(49, 50), "s50");

        let net = builtin_topology("complete-5").unwrap();
        assert_eq!(net.switch_count(), 5);
        assert_eq!(net.link_count(), 20);
        let net = builtin_topology("complete-12").unwrap();
        assert_eq!(net.link_count(), 12 * 11);
    }

    #[test]
    fn unknown_builtins_resolve_to_none() {
        assert!(builtin_topology("complete-1").is_none());
        assert!(builtin_topology("complete-x").is_none());
        assert!(builtin_topology("mesh").is_none());
    }
}
