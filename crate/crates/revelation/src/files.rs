//! Instance files: a small TOML dialect with exact rationals as strings.
//!
//! ```toml
//! states = ["w", "v"]
//! actions = ["a", "b", "c"]
//! prob = ["1/2", "1/2"]
//! dm_partition = [["w", "v"]]
//!
//! [u_d]
//! w = ["0", "6", "0"]
//! v = ["4", "0", "2"]
//!
//! [u_e]
//! w = ["0", "2", "4"]
//! v = ["0", "2", "4"]
//!
//! [partitions]      # optional named partitions
//! fine = [["w"], ["v"]]
//! ```
//!
//! Utility rows are keyed by state and list one value per action, in action
//! order. Rationals are written `n` or `n/d` with a positive denominator;
//! nothing is ever parsed as floating point. The name `full` is reserved
//! for the all-singletons partition.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rational::Rational;
use crate::space::StateSpace;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    states: Vec<String>,
    actions: Vec<String>,
    prob: Vec<String>,
    dm_partition: Vec<Vec<String>>,
    u_d: BTreeMap<String, Vec<String>>,
    u_e: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    partitions: BTreeMap<String, Vec<Vec<String>>>,
}

fn parse_rational(field: &str, raw: &str) -> Result<Rational> {
    raw.parse()
        .map_err(|e| Error::Parse(format!("{field}: {e}")))
}

fn utility_table(
    name: &str,
    states: &[String],
    rows: &BTreeMap<String, Vec<String>>,
) -> Result<Vec<Vec<Rational>>> {
    for key in rows.keys() {
        if !states.contains(key) {
            return Err(Error::Parse(format!("{name} has a row for unknown state {key:?}")));
        }
    }
    states
        .iter()
        .map(|state| {
            let row = rows
                .get(state)
                .ok_or_else(|| Error::Parse(format!("{name} is missing a row for state {state:?}")))?;
            row.iter()
                .enumerate()
                .map(|(i, raw)| parse_rational(&format!("{name}.{state}[{i}]"), raw))
                .collect()
        })
        .collect()
}

fn partition_from_names(
    field: &str,
    ground: &StateSpace,
    blocks: &[Vec<String>],
) -> Result<crate::partition::Partition> {
    let indexed = blocks
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|name| {
                    ground.state_index(name).ok_or_else(|| {
                        Error::Parse(format!("{field} mentions unknown state {name:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    crate::partition::Partition::new(ground.n_states(), indexed)
        .map_err(|e| Error::Parse(format!("{field}: {e}")))
}

/// Parses and validates an instance from TOML text.
pub fn load_instance_str(text: &str) -> Result<Instance> {
    let file: InstanceFile =
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim().to_string()))?;
    let prob = file
        .prob
        .iter()
        .enumerate()
        .map(|(i, raw)| parse_rational(&format!("prob[{i}]"), raw))
        .collect::<Result<Vec<_>>>()?;
    let util_d = utility_table("u_d", &file.states, &file.u_d)?;
    let util_e = utility_table("u_e", &file.states, &file.u_e)?;
    let ground = StateSpace::new(file.states, file.actions, prob, util_d, util_e)
        .map_err(Error::InvalidSpace)?;
    let dm_partition = partition_from_names("dm_partition", &ground, &file.dm_partition)?;
    let mut named = BTreeMap::new();
    for (name, blocks) in &file.partitions {
        if name == "full" {
            return Err(Error::Parse(
                "partition name \"full\" is reserved for the all-singletons partition".into(),
            ));
        }
        named.insert(
            name.clone(),
            partition_from_names(&format!("partitions.{name}"), &ground, blocks)?,
        );
    }
    Instance::new(ground, dm_partition)?.with_named_partitions(named)
}

/// Loads an instance from a file path.
pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    load_instance_str(&text)
}

/// Serializes an instance back to the TOML dialect. Only ground-level
/// instances round-trip; coarsened spaces are in-memory objects.
pub fn instance_to_string(instance: &Instance) -> Result<String> {
    let ground = instance.ground();
    let states = ground.states().to_vec();
    let name_of = |s: usize| states[s].clone();
    let blocks_of = |p: &crate::partition::Partition| -> Vec<Vec<String>> {
        p.blocks().iter().map(|b| b.iter().map(|&s| name_of(s)).collect()).collect()
    };
    let row_of = |player, s: usize| -> Vec<String> {
        ground.util_row(player, s).iter().map(|v| v.to_string()).collect()
    };
    let file = InstanceFile {
        states: states.clone(),
        actions: ground.actions().to_vec(),
        prob: (0..ground.n_states()).map(|s| ground.prob(s).to_string()).collect(),
        dm_partition: blocks_of(instance.dm_partition()),
        u_d: states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), row_of(crate::space::Player::DecisionMaker, i)))
            .collect(),
        u_e: states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), row_of(crate::space::Player::Expert, i)))
            .collect(),
        partitions: instance
            .named_partitions()
            .iter()
            .map(|(k, v)| (k.clone(), blocks_of(v)))
            .collect(),
    };
    toml::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes an instance to a file.
pub fn save_instance(instance: &Instance, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_string(instance)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const GOOD: &str = r#"
        states = ["w", "v"]
        actions = ["a", "b", "c"]
        prob = ["1/2", "1/2"]
        dm_partition = [["w", "v"]]

        [u_d]
        w = ["0", "6", "0"]
        v = ["4", "0", "2"]

        [u_e]
        w = ["0", "2", "4"]
        v = ["0", "2", "4"]
    "#;

    #[test]
    fn loads_a_well_formed_file() {
        let instance = load_instance_str(GOOD).unwrap();
        assert_eq!(instance.ground().n_states(), 2);
        assert_eq!(instance.digest(), fixtures::example_one().digest());
    }

    #[test]
    fn digest_is_stable_across_loads() {
        let a = load_instance_str(GOOD).unwrap();
        let b = load_instance_str(GOOD).unwrap();
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn bad_probability_sum_is_a_validation_error() {
        let text = GOOD.replace("\"1/2\", \"1/2\"", "\"1/2\", \"1/3\"");
        match load_instance_str(&text) {
            Err(Error::InvalidSpace(errors)) => {
                assert!(errors.to_string().contains("probabilities sum to 5/6"), "{errors}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_state_row_is_named_in_the_error() {
        let text = GOOD.replace("[u_d]\n        w =", "[u_d]\n        x =");
        match load_instance_str(&text) {
            Err(Error::Parse(msg)) => {
                assert!(
                    msg.contains("unknown state \"x\"") || msg.contains("missing a row"),
                    "{msg}"
                );
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rationals_name_the_field() {
        let text = GOOD.replace("\"1/2\", \"1/2\"", "\"1/2\", \"0.5\"");
        match load_instance_str(&text) {
            Err(Error::Parse(msg)) => assert!(msg.contains("prob[1]"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reserved_partition_name_is_rejected() {
        let text = format!("{GOOD}\n[partitions]\nfull = [[\"w\"], [\"v\"]]\n");
        assert!(matches!(load_instance_str(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn round_trip_preserves_the_digest() {
        for instance in [fixtures::example_one(), fixtures::example_two()] {
            let text = instance_to_string(&instance).unwrap();
            let reloaded = load_instance_str(&text).unwrap();
            assert_eq!(reloaded.digest(), instance.digest());
            assert_eq!(
                reloaded.named_partitions().keys().collect::<Vec<_>>(),
                instance.named_partitions().keys().collect::<Vec<_>>()
            );
        }
    }
}
