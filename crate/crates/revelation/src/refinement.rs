//! Coarsening a ground space through a partition, refinement maps between
//! awareness levels, and value-preserving lifts of contracts.

use crate::error::{Error, Result};
use crate::partition::{partition_refines, Partition};
use crate::rational::Rational;
use crate::space::{Contract, Player, StateSpace};

/// A surjection from the states of a finer space onto the states of a
/// coarser one, recorded as one coarse index per fine state.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RefinementMap {
    fine_id: u64,
    coarse_id: u64,
    n_coarse: usize,
    assignment: Vec<usize>,
}

impl RefinementMap {
    /// Builds a map from `fine` onto `coarse`. Arity and index bounds are
    /// enforced here; surjectivity and the aggregation laws are the business
    /// of [`check_refinement`].
    pub fn new(fine: &StateSpace, coarse: &StateSpace, assignment: Vec<usize>) -> Result<Self> {
        if assignment.len() != fine.n_states() {
            return Err(Error::Precondition(format!(
                "assignment covers {} fine states but the space has {}",
                assignment.len(),
                fine.n_states()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&c| c >= coarse.n_states()) {
            return Err(Error::Precondition(format!(
                "assignment targets coarse state {bad} but the space has {}",
                coarse.n_states()
            )));
        }
        Ok(RefinementMap {
            fine_id: fine.id(),
            coarse_id: coarse.id(),
            n_coarse: coarse.n_states(),
            assignment,
        })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn coarse_of(&self, fine_state: usize) -> usize {
        self.assignment[fine_state]
    }

    pub(crate) fn fine_id(&self) -> u64 {
        self.fine_id
    }

    pub(crate) fn coarse_id(&self) -> u64 {
        self.coarse_id
    }
}

/// Views the ground space through a partition: block probabilities are sums,
/// block utilities are probability-weighted conditional averages, so that a
/// plan already expressible at the coarse level keeps its value exactly.
///
/// Returns the coarse space together with the map sending each ground state
/// to its block.
pub fn coarsen(ground: &StateSpace, partition: &Partition) -> Result<(StateSpace, RefinementMap)> {
    if partition.ground_size() != ground.n_states() {
        return Err(Error::GroundMismatch);
    }
    let mut states = Vec::with_capacity(partition.num_blocks());
    let mut prob = Vec::with_capacity(partition.num_blocks());
    let mut util_d = Vec::with_capacity(partition.num_blocks());
    let mut util_e = Vec::with_capacity(partition.num_blocks());
    for block in partition.blocks() {
        let names: Vec<&str> = block.iter().map(|&s| ground.states()[s].as_str()).collect();
        states.push(format!("{{{}}}", names.join(",")));
        let block_prob: Rational = block.iter().map(|&s| ground.prob(s).clone()).sum();
        for (player, table) in [(Player::DecisionMaker, &mut util_d), (Player::Expert, &mut util_e)]
        {
            let row: Vec<Rational> = (0..ground.n_actions())
                .map(|a| {
                    let weighted: Rational = block
                        .iter()
                        .map(|&s| ground.util(player, s, a) * ground.prob(s))
                        .sum();
                    weighted / &block_prob
                })
                .collect();
            table.push(row);
        }
        prob.push(block_prob);
    }
    let coarse = StateSpace::new(states, ground.actions().to_vec(), prob, util_d, util_e)
        .map_err(Error::InvalidSpace)?;
    let assignment = (0..ground.n_states()).map(|s| partition.block_of(s)).collect();
    let map = RefinementMap::new(ground, &coarse, assignment)?;
    Ok((coarse, map))
}

/// Outcome of verifying the aggregation laws for a candidate refinement.
#[derive(Clone, Debug)]
pub struct RefinementCheck {
    pub holds: bool,
    pub reasons: Vec<String>,
}

/// Verifies that `map` exhibits `fine` as a refinement of `coarse`:
/// the map is surjective, probabilities aggregate exactly, and each coarse
/// utility is the conditional average of the fine utilities it covers.
pub fn check_refinement(
    coarse: &StateSpace,
    fine: &StateSpace,
    map: &RefinementMap,
) -> RefinementCheck {
    let mut reasons = Vec::new();
    if map.fine_id() != fine.id() || map.coarse_id() != coarse.id() {
        return RefinementCheck {
            holds: false,
            reasons: vec!["map does not connect these spaces".into()],
        };
    }
    if coarse.actions() != fine.actions() {
        reasons.push("action lists differ".into());
    }
    let mut preimages: Vec<Vec<usize>> = vec![Vec::new(); coarse.n_states()];
    for (f, &c) in map.assignment().iter().enumerate() {
        preimages[c].push(f);
    }
    for (c, pre) in preimages.iter().enumerate() {
        if pre.is_empty() {
            reasons.push(format!(
                "not surjective: coarse state {} has no fine states",
                coarse.states()[c]
            ));
            continue;
        }
        let prob_sum: Rational = pre.iter().map(|&f| fine.prob(f).clone()).sum();
        if &prob_sum != coarse.prob(c) {
            reasons.push(format!(
                "(H1) fails at {}: expected {}, found {}",
                coarse.states()[c],
                coarse.prob(c),
                prob_sum
            ));
        }
        if reasons.iter().any(|r| r == "action lists differ") || prob_sum.is_zero() {
            continue;
        }
        for player in Player::BOTH {
            for a in 0..coarse.n_actions() {
                let weighted: Rational =
                    pre.iter().map(|&f| fine.util(player, f, a) * fine.prob(f)).sum();
                let conditional = weighted / &prob_sum;
                if &conditional != coarse.util(player, c, a) {
                    reasons.push(format!(
                        "(H2) fails at ({},{}) for player {}: expected {}, found {}",
                        coarse.states()[c],
                        coarse.actions()[a],
                        player,
                        conditional,
                        coarse.util(player, c, a)
                    ));
                }
            }
        }
    }
    RefinementCheck { holds: reasons.is_empty(), reasons }
}

/// Pulls a coarse contract back to the fine space: each fine state adopts
/// the action its block chose. Expected values are preserved exactly for
/// both players.
pub fn lift_contract(contract: &Contract, map: &RefinementMap) -> Result<Contract> {
    if contract.space_id() != map.coarse_id() {
        return Err(Error::SpaceMismatch);
    }
    let choices = map
        .assignment()
        .iter()
        .map(|&c| contract.action_at(c))
        .collect();
    Ok(Contract::from_raw(map.fine_id(), choices))
}

/// The natural map between two coarsenings of the same ground space when
/// `finer` refines `coarser`: each block of `finer` lands in the block of
/// `coarser` containing it.
pub fn connecting_map(
    ground: &StateSpace,
    coarser: &Partition,
    finer: &Partition,
) -> Result<(StateSpace, StateSpace, RefinementMap)> {
    if !partition_refines(coarser, finer)? {
        return Err(Error::Precondition(
            "the second partition must refine the first".into(),
        ));
    }
    let (coarse_space, _) = coarsen(ground, coarser)?;
    let (fine_space, _) = coarsen(ground, finer)?;
    let assignment: Vec<usize> = finer
        .blocks()
        .iter()
        .map(|b| coarser.block_of(b[0]))
        .collect();
    let map = RefinementMap::new(&fine_space, &coarse_space, assignment)?;
    Ok((coarse_space, fine_space, map))
}
