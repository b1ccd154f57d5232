//! Built-in worked examples and counterexample strategies.
//!
//! Two small instances exercise every corner of the solver: a two-state
//! conflict where one-shot disclosure already pays off, and a three-state
//! instance where the expert strictly prefers gradual disclosure. Both ship
//! as `fixtures/*.instance` files too. The module also provides a
//! deliberately non-incentive-compatible strategy and a naive mechanism,
//! used as negative controls by the test suites.

use crate::error::Result;
use crate::game::{myopic_frontier, ProposalStep, Strategy, TieBreak};
use crate::instance::Instance;
use crate::partition::Partition;
use crate::rational::Rational;
use crate::space::{Contract, StateSpace};
use std::collections::BTreeMap;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn ri(n: i64) -> Rational {
    Rational::integer(n)
}

/// Two equally likely states `w`, `v`; actions `a`, `b`, `c`. The expert
/// ranks actions the same way in both states, the decision maker does not,
/// and the unaware decision maker starts from `{w,v}`.
pub fn example_one() -> Instance {
    let ground = StateSpace::new(
        vec!["w".into(), "v".into()],
        vec!["a".into(), "b".into(), "c".into()],
        vec![r(1, 2), r(1, 2)],
        vec![vec![ri(0), ri(6), ri(0)], vec![ri(4), ri(0), ri(2)]],
        vec![vec![ri(0), ri(2), ri(4)], vec![ri(0), ri(2), ri(4)]],
    )
    .expect("fixture is well formed");
    let mut named = BTreeMap::new();
    named.insert("coarse".to_string(), Partition::trivial(2));
    Instance::new(ground, Partition::trivial(2))
        .and_then(|i| i.with_named_partitions(named))
        .expect("fixture is well formed")
}

/// Three equally likely states `w`, `v`, `u`; actions `a`..`d`. Full
/// disclosure in one step caps the expert at 4/3, while revealing
/// `{w} {v,u}` first and the rest afterwards earns her 2.
pub fn example_two() -> Instance {
    let ground = StateSpace::new(
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
    .expect("fixture is well formed");
    let mut named = BTreeMap::new();
    named.insert(
        "split".to_string(),
        Partition::new(3, vec![vec![0], vec![1, 2]]).expect("valid partition"),
    );
    Instance::new(ground, Partition::trivial(3))
        .and_then(|i| i.with_named_partitions(named))
        .expect("fixture is well formed")
}

/// A strategy that re-proposes the unconstrained decision-maker optimum at
/// every awareness level, ignoring earlier offers. Not incentive
/// compatible: a disclosure can lower the expert's payoff, so she stops
/// revealing.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyStrategy;

impl Strategy for GreedyStrategy {
    fn propose(&self, _history: &[ProposalStep], space: &StateSpace) -> Result<Contract> {
        let frontier = myopic_frontier(space, None)?;
        Ok(TieBreak::ExpertMin.select(space, &frontier)?.contract.clone())
    }
}

pub fn greedy_strategy() -> GreedyStrategy {
    GreedyStrategy
}

/// Wraps a strategy so it only ever sees anonymized state labels. Used to
/// confirm that strategy outputs do not depend on labels.
pub struct StateRelabelled<S>(pub S);

pub fn relabelled<S: Strategy>(inner: S) -> StateRelabelled<S> {
    StateRelabelled(inner)
}

fn anonymize(space: &StateSpace) -> Result<StateSpace> {
    let n = space.n_states();
    let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    StateSpace::new(
        names,
        space.actions().to_vec(),
        (0..n).map(|s| space.prob(s).clone()).collect(),
        (0..n)
            .map(|s| space.util_row(crate::space::Player::DecisionMaker, s).to_vec())
            .collect(),
        (0..n).map(|s| space.util_row(crate::space::Player::Expert, s).to_vec()).collect(),
    )
    .map_err(crate::error::Error::InvalidSpace)
}

impl<S: Strategy> Strategy for StateRelabelled<S> {
    fn propose(&self, history: &[ProposalStep], space: &StateSpace) -> Result<Contract> {
        let masked_history = history
            .iter()
            .map(|step| {
                let masked_space = anonymize(&step.space)?;
                let contract = Contract::new(&masked_space, step.contract.choices().to_vec())?;
                Ok(ProposalStep {
                    space: masked_space,
                    contract,
                    value_d: step.value_d.clone(),
                    value_e: step.value_e.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let masked_space = anonymize(space)?;
        let proposal = self.0.propose(&masked_history, &masked_space)?;
        Contract::new(space, proposal.choices().to_vec())
    }
}

/// A mechanism that ignores incentives entirely: it hands the decision
/// maker his unconstrained optimum on the join space. Revealing more can
/// then hurt the expert, so truthful revelation fails.
#[derive(Clone, Copy, Debug, Default)]
pub struct NaiveJoinMechanism;

impl crate::mechanisms::Mechanism for NaiveJoinMechanism {
    fn outcome(
        &self,
        instance: &Instance,
        report_d: &Partition,
        report_e: &Partition,
    ) -> Result<crate::mechanisms::MechanismOutcome> {
        let join_space = crate::mechanisms::join_reports(instance, report_d, report_e)?;
        let frontier = myopic_frontier(&join_space, None)?;
        let chosen = TieBreak::ExpertMin.select(&join_space, &frontier)?;
        Ok(crate::mechanisms::MechanismOutcome {
            report_d: report_d.clone(),
            report_e: report_e.clone(),
            contract: chosen.contract.clone(),
            value_d: chosen.value_d.clone(),
            value_e: chosen.value_e.clone(),
            join_space,
        })
    }
}

pub fn naive_join_mechanism() -> NaiveJoinMechanism {
    NaiveJoinMechanism
}
