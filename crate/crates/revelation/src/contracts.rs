//! Exhaustive enumeration and constrained optimization over the finite
//! contract set of a state space, plus Pareto analysis.
//!
//! Exhaustive enumeration is the core engine at desk scale; a size guard
//! rejects larger requests instead of approximating, because downstream
//! checks need exact argmax sets.

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::space::{Contract, Player, StateSpace};

/// Default ceiling on `|actions| ^ |states|` for exhaustive enumeration.
pub const DEFAULT_CONTRACT_CAP: u128 = 1_000_000;

/// A lower bound a contract's expected value must meet for one player.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ValueConstraint {
    pub player: Player,
    pub threshold: Rational,
}

impl ValueConstraint {
    pub fn expert_at_least(threshold: Rational) -> Self {
        ValueConstraint { player: Player::Expert, threshold }
    }
}

/// A contract together with both players' exact expected values.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PayoffPoint {
    pub contract: Contract,
    pub value_d: Rational,
    pub value_e: Rational,
}

impl PayoffPoint {
    pub fn value(&self, player: Player) -> &Rational {
        match player {
            Player::DecisionMaker => &self.value_d,
            Player::Expert => &self.value_e,
        }
    }
}

fn contract_count(space: &StateSpace) -> u128 {
    let mut count: u128 = 1;
    for _ in 0..space.n_states() {
        count = count.saturating_mul(space.n_actions() as u128);
    }
    count
}

/// All contracts of the space in lexicographic order over the state list
/// (last state varies fastest), guarded by `cap`.
pub fn enumerate_contracts_capped(space: &StateSpace, cap: u128) -> Result<Vec<Contract>> {
    let count = contract_count(space);
    if count > cap {
        return Err(Error::ContractGuard { count, cap });
    }
    let n = space.n_states();
    let m = space.n_actions();
    let mut out = Vec::with_capacity(count as usize);
    let mut choices = vec![0usize; n];
    loop {
        out.push(Contract::new(space, choices.clone())?);
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            choices[k] += 1;
            if choices[k] < m {
                break;
            }
            choices[k] = 0;
        }
    }
}

/// All contracts under the default size guard.
pub fn enumerate_contracts(space: &StateSpace) -> Result<Vec<Contract>> {
    enumerate_contracts_capped(space, DEFAULT_CONTRACT_CAP)
}

/// Every contract with both expected values, in enumeration order.
pub fn evaluate_all(space: &StateSpace) -> Result<Vec<PayoffPoint>> {
    enumerate_contracts(space)?
        .into_iter()
        .map(|contract| {
            let value_d = space.expected_value(&contract, Player::DecisionMaker)?;
            let value_e = space.expected_value(&contract, Player::Expert)?;
            Ok(PayoffPoint { contract, value_d, value_e })
        })
        .collect()
}

pub(crate) fn argmax_points(
    points: &[PayoffPoint],
    objective: Player,
    constraints: &[ValueConstraint],
) -> Vec<PayoffPoint> {
    let mut best: Option<&Rational> = None;
    let mut ties: Vec<&PayoffPoint> = Vec::new();
    for point in points {
        if constraints.iter().any(|c| point.value(c.player) < &c.threshold) {
            continue;
        }
        let objective_value = point.value(objective);
        match best {
            Some(b) if objective_value < b => {}
            Some(b) if objective_value == b => ties.push(point),
            _ => {
                best = Some(objective_value);
                ties = vec![point];
            }
        }
    }
    ties.into_iter().cloned().collect()
}

/// The full argmax set: contracts maximizing the objective player's value
/// among those meeting every constraint. Empty iff nothing is feasible.
pub fn constrained_optimum(
    space: &StateSpace,
    objective: Player,
    constraints: &[ValueConstraint],
) -> Result<Vec<PayoffPoint>> {
    Ok(argmax_points(&evaluate_all(space)?, objective, constraints))
}

fn dominates(a: &PayoffPoint, b: &PayoffPoint) -> bool {
    a.value_d >= b.value_d
        && a.value_e >= b.value_e
        && (a.value_d > b.value_d || a.value_e > b.value_e)
}

/// All contracts not Pareto-dominated by any other contract of the space.
pub fn pareto_frontier(space: &StateSpace) -> Result<Vec<PayoffPoint>> {
    let points = evaluate_all(space)?;
    Ok(points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .cloned()
        .collect())
}

/// Membership test for a single contract against the whole contract set.
pub fn is_pareto_optimal(space: &StateSpace, contract: &Contract) -> Result<bool> {
    let point = PayoffPoint {
        value_d: space.expected_value(contract, Player::DecisionMaker)?,
        value_e: space.expected_value(contract, Player::Expert)?,
        contract: contract.clone(),
    };
    Ok(!evaluate_all(space)?.iter().any(|q| dominates(q, &point)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;
    use crate::refinement::coarsen;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn ri(n: i64) -> Rational {
        Rational::integer(n)
    }

    fn example_one() -> StateSpace {
        StateSpace::new(
            vec!["w".into(), "v".into()],
            vec!["a".into(), "b".into(), "c".into()],
            vec![r(1, 2), r(1, 2)],
            vec![vec![ri(0), ri(6), ri(0)], vec![ri(4), ri(0), ri(2)]],
            vec![vec![ri(0), ri(2), ri(4)], vec![ri(0), ri(2), ri(4)]],
        )
        .unwrap()
    }

    fn example_two() -> StateSpace {
        StateSpace::new(
            vec!["w".into(), "v".into(), "u".into()],
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![r(1, 3), r(1, 3), r(1, 3)],
            vec![
                vec![ri(2), ri(0), ri(0), ri(0)],
                vec![ri(2), ri(3), ri(0), ri(0)],
                vec![ri(2), ri(2), ri(4), ri(3)],
            ],
            vec![
                vec![ri(1), ri(2), ri(0), ri(0)],
                vec![ri(1), ri(2), ri(1), ri(0)],
                vec![ri(1), ri(2), ri(1), ri(3)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn enumeration_counts_and_order() {
        let ground = example_one();
        let (coarse, _) = coarsen(&ground, &Partition::trivial(2)).unwrap();
        assert_eq!(enumerate_contracts(&coarse).unwrap().len(), 3);
        let all = enumerate_contracts(&ground).unwrap();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0].choices(), &[0, 0]);
        assert_eq!(all[1].choices(), &[0, 1]);
        assert_eq!(all[8].choices(), &[2, 2]);
        assert_eq!(enumerate_contracts(&example_two()).unwrap().len(), 64);
    }

    #[test]
    fn size_guard_rejects_oversized_requests() {
        let ground = example_two();
        match enumerate_contracts_capped(&ground, 10) {
            Err(Error::ContractGuard { count, cap }) => {
                assert_eq!(count, 64);
                assert_eq!(cap, 10);
            }
            other => panic!("expected guard, got {other:?}"),
        }
    }

    #[test]
    fn constrained_optimum_with_expert_floor() {
        let ground = example_one();
        let best = constrained_optimum(
            &ground,
            Player::DecisionMaker,
            &[ValueConstraint::expert_at_least(ri(2))],
        )
        .unwrap();
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].contract.render(&ground).unwrap(), "w->b, v->c");
        assert_eq!(best[0].value_d, ri(4));
        assert_eq!(best[0].value_e, ri(3));
    }

    #[test]
    fn unconstrained_optimum_ignores_the_expert() {
        let ground = example_one();
        let best = constrained_optimum(&ground, Player::DecisionMaker, &[]).unwrap();
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].contract.render(&ground).unwrap(), "w->b, v->a");
        assert_eq!(best[0].value_d, ri(5));
        assert_eq!(best[0].value_e, ri(1));
    }

    #[test]
    fn constrained_optimum_on_the_larger_example() {
        let ground = example_two();
        let best = constrained_optimum(
            &ground,
            Player::DecisionMaker,
            &[ValueConstraint::expert_at_least(r(5, 3))],
        )
        .unwrap();
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].contract.render(&ground).unwrap(), "w->a, v->b, u->d");
        assert_eq!(best[0].value_d, r(8, 3));
        assert_eq!(best[0].value_e, ri(2));
    }

    #[test]
    fn infeasible_constraints_yield_the_empty_set() {
        let ground = example_two();
        let best = constrained_optimum(
            &ground,
            Player::DecisionMaker,
            &[ValueConstraint::expert_at_least(ri(3))],
        )
        .unwrap();
        assert!(best.is_empty());
    }

    #[test]
    fn tighter_constraints_never_improve_the_objective() {
        let ground = example_two();
        let loose = constrained_optimum(&ground, Player::DecisionMaker, &[]).unwrap();
        let tight = constrained_optimum(
            &ground,
            Player::DecisionMaker,
            &[ValueConstraint::expert_at_least(r(5, 3))],
        )
        .unwrap();
        assert!(tight[0].value_d <= loose[0].value_d);
    }

    #[test]
    fn pareto_frontier_membership() {
        let ground = example_two();
        let abd = Contract::from_action_names(&ground, &["a", "b", "d"]).unwrap();
        assert!(is_pareto_optimal(&ground, &abd).unwrap());
        // The partial-awareness favourite is dominated once everything is visible.
        let abb = Contract::from_action_names(&ground, &["a", "b", "b"]).unwrap();
        assert!(!is_pareto_optimal(&ground, &abb).unwrap());

        let g1 = example_one();
        let ba = Contract::from_action_names(&g1, &["b", "a"]).unwrap();
        assert!(is_pareto_optimal(&g1, &ba).unwrap());
    }

    #[test]
    fn single_state_frontier_drops_dominated_constants() {
        let ground = example_one();
        let (coarse, _) = coarsen(&ground, &Partition::trivial(2)).unwrap();
        let frontier = pareto_frontier(&coarse).unwrap();
        let rendered: Vec<String> =
            frontier.iter().map(|p| p.contract.render(&coarse).unwrap()).collect();
        assert_eq!(rendered, vec!["{w,v}->b", "{w,v}->c"]);
    }
}
