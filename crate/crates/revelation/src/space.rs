//! Finite state spaces with exact probabilities and two payoff tables.
//!
//! A [`StateSpace`] models one awareness level: a finite set of states, a
//! strictly positive probability for each, and a total utility table per
//! player. Contracts are state-contingent action plans over such a space.

use crate::error::{Error, Result};
use crate::rational::Rational;
use sha2::{Digest, Sha256};
use std::fmt;

/// Field separator for internal encodings. Excluded from identifiers, so
/// encodings are unambiguous.
const SEP: char = '\x1f';

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Player {
    DecisionMaker,
    Expert,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::DecisionMaker, Player::Expert];

    /// Single-letter tag used in messages and encodings.
    pub fn tag(self) -> &'static str {
        match self {
            Player::DecisionMaker => "d",
            Player::Expert => "e",
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A single violated invariant found while validating a state space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpaceViolation {
    NoStates,
    NoActions,
    DuplicateState(String),
    DuplicateAction(String),
    BadIdentifier(String),
    ProbabilityArity { expected: usize, found: usize },
    ZeroProbability { state: String },
    NegativeProbability { state: String, prob: Rational },
    ProbabilitySum { sum: Rational },
    UtilityRows { player: Player, expected: usize, found: usize },
    UtilityArity { player: Player, state: String, expected: usize, found: usize },
}

impl fmt::Display for SpaceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceViolation::NoStates => write!(f, "state list is empty"),
            SpaceViolation::NoActions => write!(f, "action list is empty"),
            SpaceViolation::DuplicateState(s) => write!(f, "duplicate state identifier {s}"),
            SpaceViolation::DuplicateAction(a) => write!(f, "duplicate action identifier {a}"),
            SpaceViolation::BadIdentifier(s) => {
                write!(f, "identifier {s:?} is empty, too long, or contains whitespace/control characters")
            }
            SpaceViolation::ProbabilityArity { expected, found } => {
                write!(f, "probability vector has {found} entries for {expected} states")
            }
            SpaceViolation::ZeroProbability { state } => {
                write!(f, "state {state} has zero probability")
            }
            SpaceViolation::NegativeProbability { state, prob } => {
                write!(f, "state {state} has negative probability {prob}")
            }
            SpaceViolation::ProbabilitySum { sum } => write!(f, "probabilities sum to {sum}"),
            SpaceViolation::UtilityRows { player, expected, found } => {
                write!(f, "utility table for player {player} has {found} rows for {expected} states")
            }
            SpaceViolation::UtilityArity { player, state, expected, found } => {
                write!(f, "utility row for player {player}, state {state} has {found} entries for {expected} actions")
            }
        }
    }
}

/// Every invariant violated by a candidate state space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceErrors(pub Vec<SpaceViolation>);

impl fmt::Display for SpaceErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.0 {
            if !first {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

fn identifier_ok(s: &str) -> bool {
    !s.is_empty()
        && s.chars().count() <= 256
        && !s.chars().any(|c| c.is_whitespace() || c.is_control())
}

/// One awareness level: states, actions, exact probabilities, and total
/// utility tables for both players.
#[derive(Clone, Debug)]
pub struct StateSpace {
    states: Vec<String>,
    actions: Vec<String>,
    prob: Vec<Rational>,
    util_d: Vec<Vec<Rational>>,
    util_e: Vec<Vec<Rational>>,
    id: u64,
}

impl PartialEq for StateSpace {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for StateSpace {}

impl StateSpace {
    /// Validates every invariant and builds the space. On failure the error
    /// enumerates all violations, not just the first.
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        prob: Vec<Rational>,
        util_d: Vec<Vec<Rational>>,
        util_e: Vec<Vec<Rational>>,
    ) -> std::result::Result<Self, SpaceErrors> {
        let mut violations = Vec::new();
        if states.is_empty() {
            violations.push(SpaceViolation::NoStates);
        }
        if actions.is_empty() {
            violations.push(SpaceViolation::NoActions);
        }
        let dup_state: fn(String) -> SpaceViolation = SpaceViolation::DuplicateState;
        let dup_action: fn(String) -> SpaceViolation = SpaceViolation::DuplicateAction;
        for (list, dup) in [(&states, dup_state), (&actions, dup_action)] {
            for (i, name) in list.iter().enumerate() {
                if !identifier_ok(name) {
                    violations.push(SpaceViolation::BadIdentifier(name.clone()));
                }
                if list[..i].contains(name) {
                    violations.push(dup(name.clone()));
                }
            }
        }
        if prob.len() != states.len() {
            violations.push(SpaceViolation::ProbabilityArity {
                expected: states.len(),
                found: prob.len(),
            });
        } else {
            for (s, p) in states.iter().zip(&prob) {
                if p.is_zero() {
                    violations.push(SpaceViolation::ZeroProbability { state: s.clone() });
                } else if p.is_negative() {
                    violations.push(SpaceViolation::NegativeProbability {
                        state: s.clone(),
                        prob: p.clone(),
                    });
                }
            }
            let sum: Rational = prob.iter().cloned().sum();
            if sum != Rational::one() {
                violations.push(SpaceViolation::ProbabilitySum { sum });
            }
        }
        for (player, table) in [(Player::DecisionMaker, &util_d), (Player::Expert, &util_e)] {
            if table.len() != states.len() {
                violations.push(SpaceViolation::UtilityRows {
                    player,
                    expected: states.len(),
                    found: table.len(),
                });
                continue;
            }
            for (s, row) in states.iter().zip(table) {
                if row.len() != actions.len() {
                    violations.push(SpaceViolation::UtilityArity {
                        player,
                        state: s.clone(),
                        expected: actions.len(),
                        found: row.len(),
                    });
                }
            }
        }
        if !violations.is_empty() {
            return Err(SpaceErrors(violations));
        }
        let mut space = StateSpace { states, actions, prob, util_d, util_e, id: 0 };
        space.id = fingerprint(&space.labeled_encoding());
        Ok(space)
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn prob(&self, state: usize) -> &Rational {
        &self.prob[state]
    }

    pub fn util(&self, player: Player, state: usize, action: usize) -> &Rational {
        match player {
            Player::DecisionMaker => &self.util_d[state][action],
            Player::Expert => &self.util_e[state][action],
        }
    }

    pub fn util_row(&self, player: Player, state: usize) -> &[Rational] {
        match player {
            Player::DecisionMaker => &self.util_d[state],
            Player::Expert => &self.util_e[state],
        }
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    /// Structural fingerprint over the labeled content. Two spaces with the
    /// same states, actions, probabilities and utilities (in the same order)
    /// share an id; contracts carry it to detect cross-space misuse.
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Exact expected value of a contract for one player:
    /// the sum over states of `util(state, chosen action) * prob(state)`.
    pub fn expected_value(&self, contract: &Contract, player: Player) -> Result<Rational> {
        if contract.space_id != self.id {
            return Err(Error::SpaceMismatch);
        }
        let mut total = Rational::zero();
        for (state, &action) in contract.choices.iter().enumerate() {
            total += self.util(player, state, action) * &self.prob[state];
        }
        Ok(total)
    }

    fn labeled_encoding(&self) -> String {
        let mut out = String::new();
        push_list(&mut out, self.states.iter());
        push_list(&mut out, self.actions.iter());
        push_list(&mut out, self.prob.iter().map(|p| p.to_string()));
        for table in [&self.util_d, &self.util_e] {
            for row in table {
                push_list(&mut out, row.iter().map(|v| v.to_string()));
            }
        }
        out
    }

    /// Indices of the actions sorted by name; the order used by all
    /// label-free encodings.
    fn sorted_action_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.actions.len()).collect();
        order.sort_by(|&a, &b| self.actions[a].cmp(&self.actions[b]));
        order
    }

    /// A label-free key per state: probability plus both utility rows read
    /// in sorted-action order. States with equal keys are interchangeable.
    pub(crate) fn state_canonical_keys(&self) -> Vec<String> {
        let order = self.sorted_action_order();
        self.states
            .iter()
            .enumerate()
            .map(|(s, _)| {
                let mut key = format!("p={}", self.prob[s]);
                for table in [&self.util_d, &self.util_e] {
                    key.push(SEP);
                    for &a in &order {
                        key.push_str(&table[s][a].to_string());
                        key.push(',');
                    }
                }
                key
            })
            .collect()
    }

    /// Deterministic, label-free encoding: equal encodings iff the spaces
    /// coincide up to a probability- and payoff-preserving bijection of
    /// states (same action names required).
    pub fn canonical_form(&self) -> CanonicalForm {
        let order = self.sorted_action_order();
        let mut keys = self.state_canonical_keys();
        keys.sort();
        let mut out = String::from("actions=");
        for &a in &order {
            out.push_str(&self.actions[a]);
            out.push(SEP);
        }
        out.push_str("states=");
        for key in keys {
            out.push_str(&key);
            out.push(SEP);
        }
        CanonicalForm(out)
    }

    /// Hex digest of the canonical form; stable across runs and relabelings.
    pub fn digest(&self) -> String {
        self.canonical_form().digest()
    }
}

fn push_list<I, S>(out: &mut String, items: I)
where
    I: Iterator<Item = S>,
    S: AsRef<str>,
{
    for item in items {
        out.push_str(item.as_ref());
        out.push(SEP);
    }
    out.push(SEP);
}

fn fingerprint(encoding: &str) -> u64 {
    let hash = Sha256::digest(encoding.as_bytes());
    u64::from_be_bytes(hash[..8].try_into().expect("sha256 output is long enough"))
}

/// Label-free encoding of a state space, comparable for equivalence.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CanonicalForm(String);

impl CanonicalForm {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.0.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A state-contingent plan of action over one specific state space.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Contract {
    space_id: u64,
    choices: Vec<usize>,
}

impl Contract {
    /// Builds a contract from one action index per state.
    pub fn new(space: &StateSpace, choices: Vec<usize>) -> Result<Self> {
        if choices.len() != space.n_states() {
            return Err(Error::Precondition(format!(
                "contract assigns {} states but the space has {}",
                choices.len(),
                space.n_states()
            )));
        }
        if let Some(&bad) = choices.iter().find(|&&a| a >= space.n_actions()) {
            return Err(Error::Precondition(format!(
                "contract uses action index {bad} but the space has {} actions",
                space.n_actions()
            )));
        }
        Ok(Contract { space_id: space.id(), choices })
    }

    /// Builds a contract from one action name per state, in state order.
    pub fn from_action_names(space: &StateSpace, names: &[&str]) -> Result<Self> {
        let choices = names
            .iter()
            .map(|n| {
                space
                    .action_index(n)
                    .ok_or_else(|| Error::Precondition(format!("unknown action {n}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Contract::new(space, choices)
    }

    /// The constant contract choosing one action in every state.
    pub fn constant(space: &StateSpace, action: usize) -> Result<Self> {
        Contract::new(space, vec![action; space.n_states()])
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn action_at(&self, state: usize) -> usize {
        self.choices[state]
    }

    pub(crate) fn space_id(&self) -> u64 {
        self.space_id
    }

    pub(crate) fn from_raw(space_id: u64, choices: Vec<usize>) -> Self {
        Contract { space_id, choices }
    }

    /// Human-readable rendering, e.g. `w->a, v->b`.
    pub fn render(&self, space: &StateSpace) -> Result<String> {
        if self.space_id != space.id() {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .choices
            .iter()
            .enumerate()
            .map(|(s, &a)| format!("{}->{}", space.states()[s], space.actions()[a]))
            .collect::<Vec<_>>()
            .join(", "))
    }

    /// Label-free encoding: (state key, action name) pairs, sorted. Two
    /// contracts that differ only by a relabeling of interchangeable states
    /// encode identically.
    pub fn canonical_encoding(&self, space: &StateSpace) -> Result<String> {
        if self.space_id != space.id() {
            return Err(Error::SpaceMismatch);
        }
        let keys = space.state_canonical_keys();
        let mut entries: Vec<String> = self
            .choices
            .iter()
            .enumerate()
            .map(|(s, &a)| format!("{}=>{}", keys[s], space.actions()[a]))
            .collect();
        entries.sort();
        Ok(entries.join(&SEP.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn ri(n: i64) -> Rational {
        Rational::integer(n)
    }

    pub(crate) fn example_one_ground() -> StateSpace {
        StateSpace::new(
            vec!["w".into(), "v".into()],
            vec!["a".into(), "b".into(), "c".into()],
            vec![r(1, 2), r(1, 2)],
            vec![vec![ri(0), ri(6), ri(0)], vec![ri(4), ri(0), ri(2)]],
            vec![vec![ri(0), ri(2), ri(4)], vec![ri(0), ri(2), ri(4)]],
        )
        .unwrap()
    }

    #[test]
    fn accepts_a_well_formed_space() {
        let s = example_one_ground();
        assert_eq!(s.n_states(), 2);
        assert_eq!(s.n_actions(), 3);
    }

    #[test]
    fn reports_probability_sum_violation() {
        let err = StateSpace::new(
            vec!["w".into(), "v".into()],
            vec!["a".into()],
            vec![r(1, 2), r(1, 3)],
            vec![vec![ri(0)], vec![ri(0)]],
            vec![vec![ri(0)], vec![ri(0)]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("probabilities sum to 5/6"), "{err}");
    }

    #[test]
    fn reports_zero_probability_state() {
        let err = StateSpace::new(
            vec!["w".into(), "v".into(), "u".into()],
            vec!["a".into()],
            vec![r(1, 3), r(2, 3), ri(0)],
            vec![vec![ri(0)]; 3],
            vec![vec![ri(0)]; 3],
        )
        .unwrap_err();
        assert!(err.to_string().contains("state u has zero probability"), "{err}");
    }

    #[test]
    fn reports_every_violation_at_once() {
        let err = StateSpace::new(
            vec!["w".into(), "w".into()],
            vec!["a".into(), "b".into()],
            vec![r(1, 2), r(1, 3)],
            vec![vec![ri(0), ri(0)]],
            vec![vec![ri(0)], vec![ri(0), ri(0)]],
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duplicate state identifier w"), "{msg}");
        assert!(msg.contains("probabilities sum to 5/6"), "{msg}");
        assert!(msg.contains("has 1 rows for 2 states"), "{msg}");
        assert!(msg.contains("has 1 entries for 2 actions"), "{msg}");
    }

    #[test]
    fn expected_value_matches_hand_arithmetic() {
        let s = example_one_ground();
        let b = Contract::constant(&s, 1).unwrap();
        assert_eq!(s.expected_value(&b, Player::DecisionMaker).unwrap(), ri(3));
        assert_eq!(s.expected_value(&b, Player::Expert).unwrap(), ri(2));
    }

    #[test]
    fn expected_value_rejects_foreign_contracts() {
        let s = example_one_ground();
        let other = StateSpace::new(
            vec!["x".into()],
            vec!["a".into()],
            vec![ri(1)],
            vec![vec![ri(0)]],
            vec![vec![ri(0)]],
        )
        .unwrap();
        let c = Contract::constant(&other, 0).unwrap();
        assert!(matches!(s.expected_value(&c, Player::Expert), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn canonical_form_ignores_state_labels_and_order() {
        let s = example_one_ground();
        let renamed = StateSpace::new(
            vec!["s1".into(), "s2".into()],
            vec!["a".into(), "b".into(), "c".into()],
            vec![r(1, 2), r(1, 2)],
            vec![vec![ri(0), ri(6), ri(0)], vec![ri(4), ri(0), ri(2)]],
            vec![vec![ri(0), ri(2), ri(4)], vec![ri(0), ri(2), ri(4)]],
        )
        .unwrap();
        let swapped = StateSpace::new(
            vec!["v".into(), "w".into()],
            vec!["a".into(), "b".into(), "c".into()],
            vec![r(1, 2), r(1, 2)],
            vec![vec![ri(4), ri(0), ri(2)], vec![ri(0), ri(6), ri(0)]],
            vec![vec![ri(0), ri(2), ri(4)], vec![ri(0), ri(2), ri(4)]],
        )
        .unwrap();
        assert_eq!(s.canonical_form(), renamed.canonical_form());
        assert_eq!(s.canonical_form(), swapped.canonical_form());
    }

    #[test]
    fn canonical_form_distinguishes_different_payoffs() {
        let s = example_one_ground();
        let altered = StateSpace::new(
            vec!["w".into(), "v".into()],
            vec!["a".into(), "b".into(), "c".into()],
            vec![r(1, 2), r(1, 2)],
            vec![vec![ri(0), ri(6), ri(1)], vec![ri(4), ri(0), ri(2)]],
            vec![vec![ri(0), ri(2), ri(4)], vec![ri(0), ri(2), ri(4)]],
        )
        .unwrap();
        assert_ne!(s.canonical_form(), altered.canonical_form());
    }
}
