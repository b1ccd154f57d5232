//! A problem instance: the ground space anchoring every awareness level,
//! the decision maker's initial partition, and optional named partitions.

use crate::error::{Error, Result};
use crate::partition::{enumerate_partitions_between, partition_refines, Partition};
use crate::refinement::{coarsen, RefinementMap};
use crate::space::StateSpace;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// The ground space is the expert's maximal awareness; every awareness level
/// in play is a partition of its state set. The decision maker starts at
/// `dm_partition`.
#[derive(Clone, Debug)]
pub struct Instance {
    ground: StateSpace,
    dm_partition: Partition,
    named_partitions: BTreeMap<String, Partition>,
}

impl Instance {
    pub fn new(ground: StateSpace, dm_partition: Partition) -> Result<Self> {
        if dm_partition.ground_size() != ground.n_states() {
            return Err(Error::GroundMismatch);
        }
        Ok(Instance { ground, dm_partition, named_partitions: BTreeMap::new() })
    }

    pub fn with_named_partitions(
        mut self,
        named: BTreeMap<String, Partition>,
    ) -> Result<Self> {
        for p in named.values() {
            if p.ground_size() != self.ground.n_states() {
                return Err(Error::GroundMismatch);
            }
        }
        self.named_partitions = named;
        Ok(self)
    }

    pub fn ground(&self) -> &StateSpace {
        &self.ground
    }

    pub fn dm_partition(&self) -> &Partition {
        &self.dm_partition
    }

    pub fn named_partitions(&self) -> &BTreeMap<String, Partition> {
        &self.named_partitions
    }

    pub fn singletons(&self) -> Partition {
        Partition::singletons(self.ground.n_states())
    }

    /// The coarse space seen at awareness level `p`, with the map from the
    /// ground space onto it.
    pub fn space_of(&self, p: &Partition) -> Result<(StateSpace, RefinementMap)> {
        coarsen(&self.ground, p)
    }

    /// Every awareness level reachable in this instance: the partitions
    /// between the decision maker's initial partition and full awareness.
    pub fn interval(&self) -> Result<Vec<Partition>> {
        enumerate_partitions_between(&self.dm_partition, &self.singletons())
    }

    /// The same ground problem rooted at a different initial awareness.
    /// `root` must be a (weak) coarsening of full awareness and contain the
    /// current root's information or sit anywhere in the lattice; it only
    /// has to partition the ground states.
    pub fn with_root(&self, root: Partition) -> Result<Self> {
        if root.ground_size() != self.ground.n_states() {
            return Err(Error::GroundMismatch);
        }
        Ok(Instance {
            ground: self.ground.clone(),
            dm_partition: root,
            named_partitions: self.named_partitions.clone(),
        })
    }

    /// Resolves a partition argument: `full` means full awareness, anything
    /// else must be a named partition from the instance.
    pub fn resolve_partition(&self, name: &str) -> Result<Partition> {
        if name == "full" {
            return Ok(self.singletons());
        }
        self.named_partitions
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Precondition(format!("unknown partition name {name:?}")))
    }

    /// Builds a partition from blocks of state names.
    pub fn partition_from_names(&self, blocks: &[Vec<String>]) -> Result<Partition> {
        let indexed = blocks
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|name| {
                        self.ground
                            .state_index(name)
                            .ok_or_else(|| Error::InvalidPartition(format!("unknown state {name}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(self.ground.n_states(), indexed)
    }

    pub fn render_partition(&self, p: &Partition) -> String {
        p.render(self.ground.states())
    }

    /// Stable digest over the label-free content: the ground space's
    /// canonical form plus the initial partition expressed through state
    /// keys rather than names.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.ground.canonical_form().as_str().as_bytes());
        let keys = self.ground.state_canonical_keys();
        let mut blocks: Vec<String> = self
            .dm_partition
            .blocks()
            .iter()
            .map(|b| {
                let mut ks: Vec<&str> = b.iter().map(|&s| keys[s].as_str()).collect();
                ks.sort();
                ks.join("|")
            })
            .collect();
        blocks.sort();
        hasher.update(blocks.join("\x1e").as_bytes());
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The same instance with states renamed in place (order preserved).
    pub fn with_state_names(&self, names: &[String]) -> Result<Self> {
        if names.len() != self.ground.n_states() {
            return Err(Error::Precondition("wrong number of state names".into()));
        }
        let ground = StateSpace::new(
            names.to_vec(),
            self.ground.actions().to_vec(),
            (0..self.ground.n_states()).map(|s| self.ground.prob(s).clone()).collect(),
            (0..self.ground.n_states())
                .map(|s| self.ground.util_row(crate::space::Player::DecisionMaker, s).to_vec())
                .collect(),
            (0..self.ground.n_states())
                .map(|s| self.ground.util_row(crate::space::Player::Expert, s).to_vec())
                .collect(),
        )
        .map_err(Error::InvalidSpace)?;
        Ok(Instance {
            ground,
            dm_partition: self.dm_partition.clone(),
            named_partitions: self.named_partitions.clone(),
        })
    }

    /// The same instance with ground states listed in permuted order. State
    /// `perm[i]` of the original becomes state `i` of the result.
    pub fn with_permuted_states(&self, perm: &[usize]) -> Result<Self> {
        let n = self.ground.n_states();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::Precondition("not a permutation of the states".into()));
        }
        let pick = |f: &dyn Fn(usize) -> Vec<crate::rational::Rational>| -> Vec<Vec<_>> {
            perm.iter().map(|&i| f(i)).collect()
        };
        let ground = StateSpace::new(
            perm.iter().map(|&i| self.ground.states()[i].clone()).collect(),
            self.ground.actions().to_vec(),
            perm.iter().map(|&i| self.ground.prob(i).clone()).collect(),
            pick(&|i| self.ground.util_row(crate::space::Player::DecisionMaker, i).to_vec()),
            pick(&|i| self.ground.util_row(crate::space::Player::Expert, i).to_vec()),
        )
        .map_err(Error::InvalidSpace)?;
        // old index -> new index
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let remap = |p: &Partition| -> Result<Partition> {
            Partition::new(
                n,
                p.blocks()
                    .iter()
                    .map(|b| b.iter().map(|&s| inverse[s]).collect())
                    .collect(),
            )
        };
        let dm_partition = remap(&self.dm_partition)?;
        let named_partitions = self
            .named_partitions
            .iter()
            .map(|(k, v)| Ok((k.clone(), remap(v)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(Instance { ground, dm_partition, named_partitions })
    }

    /// True when `p` sits between the initial awareness and full awareness.
    pub fn in_interval(&self, p: &Partition) -> Result<bool> {
        partition_refines(&self.dm_partition, p)
    }
}
