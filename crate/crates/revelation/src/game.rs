//! The dynamic revelation game.
//!
//! The expert discloses awareness along a strictly refining chain of
//! partitions; at each disclosure the decision maker proposes a contract on
//! the revealed space. Earlier proposals stay on the table, so the expert's
//! payoff can only ratchet upwards under an incentive-compatible strategy.
//! This module implements strategies (in particular the myopic family),
//! expert best responses by exhaustive chain enumeration and by dynamic
//! programming, transcripts, and the strategy-level property checks.

use crate::contracts::{argmax_points, evaluate_all, PayoffPoint, ValueConstraint};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::partition::{partition_refines, Partition};
use crate::rational::Rational;
use crate::refinement::RefinementMap;
use crate::space::{CanonicalForm, Contract, Player, StateSpace};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Ceiling on the number of revelation chains any exhaustive walk may visit.
pub const DEFAULT_CHAIN_CAP: usize = 100_000;

/// How to resolve ties among the decision maker's optimal contracts.
///
/// `ExpertMin` picks the proposal worst for the expert (the point-wise
/// decision-maker-optimal robust strategy); `ExpertMax` picks the one best
/// for the expert (the strategy behind the decision-maker-optimal
/// mechanism). Remaining ties fall back to the lexicographically smallest
/// label-free contract encoding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum TieBreak {
    ExpertMin,
    ExpertMax,
}

impl TieBreak {
    pub fn label(self) -> &'static str {
        match self {
            TieBreak::ExpertMin => "expert-min",
            TieBreak::ExpertMax => "expert-max",
        }
    }

    fn fold<'a>(self, acc: &'a Rational, v: &'a Rational) -> &'a Rational {
        match self {
            TieBreak::ExpertMin => {
                if v < acc {
                    v
                } else {
                    acc
                }
            }
            TieBreak::ExpertMax => {
                if v > acc {
                    v
                } else {
                    acc
                }
            }
        }
    }

    /// Selects one point from a nonempty tie set of payoff points, all of
    /// which share the same objective value.
    pub fn select<'a>(
        self,
        space: &StateSpace,
        candidates: &'a [PayoffPoint],
    ) -> Result<&'a PayoffPoint> {
        if candidates.is_empty() {
            return Err(Error::Precondition("tie-break over an empty set".into()));
        }
        let extreme = candidates
            .iter()
            .map(|p| &p.value_e)
            .reduce(|acc, v| self.fold(acc, v))
            .expect("nonempty");
        let mut finalists: Vec<&PayoffPoint> =
            candidates.iter().filter(|p| &p.value_e == extreme).collect();
        finalists.sort_by_cached_key(|p| {
            (
                p.contract
                    .canonical_encoding(space)
                    .expect("candidate lives on this space"),
                p.contract.choices().to_vec(),
            )
        });
        Ok(finalists[0])
    }
}

/// The decision-maker-optimal tie set at one awareness level: contracts
/// maximizing the decision maker's value subject to the expert receiving at
/// least `reservation` (her value from the previous proposal). `None` means
/// the opening round, which is unconstrained.
pub fn myopic_frontier(
    space: &StateSpace,
    reservation: Option<&Rational>,
) -> Result<Vec<PayoffPoint>> {
    let constraints: Vec<ValueConstraint> = reservation
        .map(|r| vec![ValueConstraint::expert_at_least(r.clone())])
        .unwrap_or_default();
    Ok(argmax_points(&evaluate_all(space)?, Player::DecisionMaker, &constraints))
}

/// One round of play: the revealed space, the proposal made on it, and the
/// proposal's exact expected values there.
#[derive(Clone, Debug)]
pub struct ProposalStep {
    pub space: StateSpace,
    pub contract: Contract,
    pub value_d: Rational,
    pub value_e: Rational,
}

/// A decision-maker strategy, evaluated incrementally: given the prior
/// rounds and the newly revealed space, produce the next proposal. The
/// incremental form makes history-adaptedness structural; implementations
/// should depend on the revealed payoffs only, never on state labels.
pub trait Strategy {
    fn propose(&self, history: &[ProposalStep], space: &StateSpace) -> Result<Contract>;
}

/// The myopic strategy: at every level, optimize for the decision maker as
/// if nothing further will be revealed, constrained only by the expert's
/// payoff from the previous proposal.
#[derive(Clone, Copy, Debug)]
pub struct MyopicStrategy {
    tiebreak: TieBreak,
}

impl MyopicStrategy {
    pub fn tiebreak(&self) -> TieBreak {
        self.tiebreak
    }
}

pub fn make_myopic_strategy(tiebreak: TieBreak) -> MyopicStrategy {
    MyopicStrategy { tiebreak }
}

impl Strategy for MyopicStrategy {
    fn propose(&self, history: &[ProposalStep], space: &StateSpace) -> Result<Contract> {
        let reservation = history.last().map(|step| step.value_e.clone());
        let frontier = myopic_frontier(space, reservation.as_ref())?;
        Ok(self.tiebreak.select(space, &frontier)?.contract.clone())
    }
}

/// A strictly refining chain of awareness levels, starting at the decision
/// maker's initial partition.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RevelationSequence {
    chain: Vec<Partition>,
}

impl RevelationSequence {
    pub fn new(instance: &Instance, chain: Vec<Partition>) -> Result<Self> {
        if chain.is_empty() {
            return Err(Error::Precondition("revelation sequence is empty".into()));
        }
        if &chain[0] != instance.dm_partition() {
            return Err(Error::Precondition(
                "revelation sequence must start at the decision maker's awareness".into(),
            ));
        }
        for pair in chain.windows(2) {
            if !partition_refines(&pair[0], &pair[1])? || pair[0] == pair[1] {
                return Err(Error::Precondition(
                    "each revelation must strictly refine its predecessor".into(),
                ));
            }
        }
        Ok(RevelationSequence { chain })
    }

    pub fn chain(&self) -> &[Partition] {
        &self.chain
    }

    pub fn last(&self) -> &Partition {
        self.chain.last().expect("nonempty")
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn render(&self, instance: &Instance) -> String {
        self.chain
            .iter()
            .map(|p| instance.render_partition(p))
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

/// The record of one play-through: revelations, proposals, final payoffs,
/// and the expert's awareness rent.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub sequence: RevelationSequence,
    pub steps: Vec<ProposalStep>,
    pub payoff_d: Rational,
    pub payoff_e: Rational,
    pub rent: Rational,
}

impl Transcript {
    pub fn final_contract(&self) -> &Contract {
        &self.steps.last().expect("nonempty").contract
    }

    pub fn final_space(&self) -> &StateSpace {
        &self.steps.last().expect("nonempty").space
    }
}

/// Structural properties of a strategy, verified exhaustively over every
/// revelation chain of the instance.
#[derive(Clone, Debug)]
pub struct StrategyProperties {
    /// The expert's payoff never falls along any chain.
    pub ic: bool,
    /// Every awareness level is the endpoint of some expert best response.
    pub fully_revealing: bool,
    /// The decision maker's payoff never falls along any chain.
    pub vd_monotone: bool,
    pub witnesses: Vec<String>,
}

// ---------------------------------------------------------------------------
// Lattice: the interval of awareness levels with precomputed spaces/payoffs
// ---------------------------------------------------------------------------

pub(crate) struct LatticeNode {
    pub partition: Partition,
    pub space: StateSpace,
    #[allow(dead_code)]
    pub ground_map: RefinementMap,
    pub canon: CanonicalForm,
    pub payoffs: Vec<PayoffPoint>,
}

pub(crate) struct Lattice {
    pub nodes: Vec<LatticeNode>,
    pub root: usize,
    /// `refines[i][j]`: node `j` weakly refines node `i`.
    pub refines: Vec<Vec<bool>>,
    /// Strictly finer successors of each node, ascending.
    pub finer: Vec<Vec<usize>>,
    index: BTreeMap<Partition, usize>,
}

impl Lattice {
    pub fn build(instance: &Instance) -> Result<Self> {
        let parts = instance.interval()?;
        let mut nodes = Vec::with_capacity(parts.len());
        let mut index = BTreeMap::new();
        for (i, partition) in parts.into_iter().enumerate() {
            let (space, ground_map) = instance.space_of(&partition)?;
            let payoffs = evaluate_all(&space)?;
            let canon = space.canonical_form();
            index.insert(partition.clone(), i);
            nodes.push(LatticeNode { partition, space, ground_map, canon, payoffs });
        }
        let n = nodes.len();
        let mut refines = vec![vec![false; n]; n];
        let mut finer = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                refines[i][j] = partition_refines(&nodes[i].partition, &nodes[j].partition)?;
                if refines[i][j] && i != j {
                    finer[i].push(j);
                }
            }
        }
        let root = index[instance.dm_partition()];
        Ok(Lattice { nodes, root, refines, finer, index })
    }

    pub fn index_of(&self, p: &Partition) -> Result<usize> {
        self.index
            .get(p)
            .copied()
            .ok_or_else(|| Error::Precondition("partition outside the instance interval".into()))
    }

    pub fn sequence(&self, instance: &Instance, chain: &[usize]) -> Result<RevelationSequence> {
        RevelationSequence::new(
            instance,
            chain.iter().map(|&i| self.nodes[i].partition.clone()).collect(),
        )
    }

    /// The natural refinement map between two comparable nodes: each block
    /// of the finer partition lands in the coarser block containing it.
    pub fn connecting_map(&self, coarser: usize, finer: usize) -> Result<RefinementMap> {
        let coarse = &self.nodes[coarser];
        let fine = &self.nodes[finer];
        let assignment: Vec<usize> = fine
            .partition
            .blocks()
            .iter()
            .map(|b| coarse.partition.block_of(b[0]))
            .collect();
        RefinementMap::new(&fine.space, &coarse.space, assignment)
    }

    /// Walks every chain from `start`, restricted to nodes the expert type
    /// `top` can reveal, evaluating `strategy` incrementally. `visit` sees
    /// each chain exactly once, with its full evaluation.
    pub fn walk_strategy(
        &self,
        strategy: &dyn Strategy,
        start: usize,
        top: Option<usize>,
        cap: usize,
        visit: &mut dyn FnMut(&[usize], &[ProposalStep]) -> Result<()>,
    ) -> Result<()> {
        let mut chain = Vec::new();
        let mut steps = Vec::new();
        let mut visited = 0usize;
        self.walk_rec(strategy, start, top, cap, &mut chain, &mut steps, &mut visited, visit)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_rec(
        &self,
        strategy: &dyn Strategy,
        node: usize,
        top: Option<usize>,
        cap: usize,
        chain: &mut Vec<usize>,
        steps: &mut Vec<ProposalStep>,
        visited: &mut usize,
        visit: &mut dyn FnMut(&[usize], &[ProposalStep]) -> Result<()>,
    ) -> Result<()> {
        *visited += 1;
        if *visited > cap {
            return Err(Error::ChainGuard { cap });
        }
        let space = &self.nodes[node].space;
        let contract = strategy.propose(steps, space)?;
        let value_d = space.expected_value(&contract, Player::DecisionMaker)?;
        let value_e = space.expected_value(&contract, Player::Expert)?;
        chain.push(node);
        steps.push(ProposalStep { space: space.clone(), contract, value_d, value_e });
        let result = (|| -> Result<()> {
            visit(chain, steps)?;
            for &next in &self.finer[node] {
                if top.map_or(true, |t| self.refines[next][t]) {
                    self.walk_rec(strategy, next, top, cap, chain, steps, visited, visit)?;
                }
            }
            Ok(())
        })();
        chain.pop();
        steps.pop();
        result
    }
}

// ---------------------------------------------------------------------------
// Myopic fast path: proposals depend only on (node, reservation)
// ---------------------------------------------------------------------------

#[derive(Clone)]
pub(crate) struct MyopicChoice {
    pub payoff_idx: usize,
    pub value_d: Rational,
    pub value_e: Rational,
}

#[derive(Default)]
pub(crate) struct MyopicCache {
    choices: HashMap<(usize, Option<Rational>, TieBreak), MyopicChoice>,
}

impl MyopicCache {
    pub fn new() -> Self {
        MyopicCache::default()
    }
}

/// The tie-broken myopic proposal at a node under a reservation, cached.
pub(crate) fn myopic_choice(
    lattice: &Lattice,
    cache: &mut MyopicCache,
    node: usize,
    reservation: Option<&Rational>,
    tiebreak: TieBreak,
) -> Result<MyopicChoice> {
    let cache_key = (node, reservation.cloned(), tiebreak);
    if let Some(found) = cache.choices.get(&cache_key) {
        return Ok(found.clone());
    }
    let payoffs = &lattice.nodes[node].payoffs;
    let feasible = |p: &PayoffPoint| reservation.map_or(true, |r| &p.value_e >= r);
    let best = payoffs
        .iter()
        .filter(|p| feasible(p))
        .map(|p| &p.value_d)
        .max()
        .ok_or_else(|| Error::Precondition("no contract satisfies the reservation".into()))?
        .clone();
    let extreme = payoffs
        .iter()
        .filter(|p| feasible(p) && p.value_d == best)
        .map(|p| &p.value_e)
        .reduce(|acc, v| tiebreak.fold(acc, v))
        .expect("argmax nonempty")
        .clone();
    let space = &lattice.nodes[node].space;
    let mut finalist: Option<(String, Vec<usize>, usize)> = None;
    for (i, point) in payoffs.iter().enumerate() {
        if point.value_d != best || point.value_e != extreme || !feasible(point) {
            continue;
        }
        let tag = (
            point.contract.canonical_encoding(space)?,
            point.contract.choices().to_vec(),
        );
        if finalist.as_ref().map_or(true, |(k, c, _)| (&tag.0, &tag.1) < (&k, &c)) {
            finalist = Some((tag.0, tag.1, i));
        }
    }
    let (_, _, payoff_idx) = finalist.expect("argmax nonempty");
    let choice = MyopicChoice {
        payoff_idx,
        value_d: payoffs[payoff_idx].value_d.clone(),
        value_e: payoffs[payoff_idx].value_e.clone(),
    };
    cache.choices.insert(cache_key, choice.clone());
    Ok(choice)
}

/// One myopic play-through at the lattice level.
pub(crate) struct MyopicRun {
    pub chain: Vec<usize>,
    pub proposals: Vec<MyopicChoice>,
}

impl MyopicRun {
    pub fn final_node(&self) -> usize {
        *self.chain.last().expect("nonempty")
    }

    pub fn final_value_e(&self) -> &Rational {
        &self.proposals.last().expect("nonempty").value_e
    }

    pub fn final_value_d(&self) -> &Rational {
        &self.proposals.last().expect("nonempty").value_d
    }
}

/// Every myopic run from `start` whose revelations stay within what expert
/// type `top` can show.
pub(crate) fn myopic_runs(
    lattice: &Lattice,
    cache: &mut MyopicCache,
    tiebreak: TieBreak,
    start: usize,
    top: Option<usize>,
    cap: usize,
) -> Result<Vec<MyopicRun>> {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        lattice: &Lattice,
        cache: &mut MyopicCache,
        tiebreak: TieBreak,
        node: usize,
        top: Option<usize>,
        cap: usize,
        chain: &mut Vec<usize>,
        proposals: &mut Vec<MyopicChoice>,
        visited: &mut usize,
        out: &mut Vec<MyopicRun>,
    ) -> Result<()> {
        *visited += 1;
        if *visited > cap {
            return Err(Error::ChainGuard { cap });
        }
        let reservation = proposals.last().map(|c| c.value_e.clone());
        let choice = myopic_choice(lattice, cache, node, reservation.as_ref(), tiebreak)?;
        chain.push(node);
        proposals.push(choice);
        out.push(MyopicRun { chain: chain.clone(), proposals: proposals.clone() });
        for &next in &lattice.finer[node] {
            if top.map_or(true, |t| lattice.refines[next][t]) {
                rec(lattice, cache, tiebreak, next, top, cap, chain, proposals, visited, out)?;
            }
        }
        chain.pop();
        proposals.pop();
        Ok(())
    }
    let mut out = Vec::new();
    let mut chain = Vec::new();
    let mut proposals = Vec::new();
    let mut visited = 0usize;
    rec(
        lattice, cache, tiebreak, start, top, cap, &mut chain, &mut proposals, &mut visited,
        &mut out,
    )?;
    Ok(out)
}

/// The expert-best myopic runs from `start` for expert type `top`: the
/// argmax of the final expert value over all runs.
pub(crate) fn myopic_best_runs(
    lattice: &Lattice,
    cache: &mut MyopicCache,
    tiebreak: TieBreak,
    start: usize,
    top: usize,
) -> Result<Vec<MyopicRun>> {
    let runs = myopic_runs(lattice, cache, tiebreak, start, Some(top), DEFAULT_CHAIN_CAP)?;
    let best = runs
        .iter()
        .map(|r| r.final_value_e().clone())
        .max()
        .expect("at least the singleton chain exists");
    Ok(runs.into_iter().filter(|r| r.final_value_e() == &best).collect())
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Record of one evaluated chain.
pub(crate) struct ChainRecord {
    pub chain: Vec<usize>,
    pub final_node: usize,
    pub value_d: Rational,
    pub value_e: Rational,
}

pub(crate) fn collect_chain_records(
    lattice: &Lattice,
    strategy: &dyn Strategy,
    top: Option<usize>,
) -> Result<Vec<ChainRecord>> {
    let mut records = Vec::new();
    lattice.walk_strategy(
        strategy,
        lattice.root,
        top,
        DEFAULT_CHAIN_CAP,
        &mut |chain, steps| {
            let last = steps.last().expect("nonempty");
            records.push(ChainRecord {
                chain: chain.to_vec(),
                final_node: *chain.last().expect("nonempty"),
                value_d: last.value_d.clone(),
                value_e: last.value_e.clone(),
            });
            Ok(())
        },
    )?;
    Ok(records)
}

/// Chain records for the myopic strategy via the cached fast path.
pub(crate) fn myopic_chain_records(
    lattice: &Lattice,
    cache: &mut MyopicCache,
    tiebreak: TieBreak,
) -> Result<Vec<ChainRecord>> {
    let runs = myopic_runs(lattice, cache, tiebreak, lattice.root, None, DEFAULT_CHAIN_CAP)?;
    Ok(runs
        .into_iter()
        .map(|run| ChainRecord {
            final_node: run.final_node(),
            value_d: run.final_value_d().clone(),
            value_e: run.final_value_e().clone(),
            chain: run.chain,
        })
        .collect())
}

/// All prefixes of all best responses, as node-index chains.
pub(crate) fn reachable_chain_set(
    lattice: &Lattice,
    records: &[ChainRecord],
) -> BTreeSet<Vec<usize>> {
    let n = lattice.nodes.len();
    let mut reached = BTreeSet::new();
    for p in 0..n {
        let reachable: Vec<&ChainRecord> =
            records.iter().filter(|r| lattice.refines[r.final_node][p]).collect();
        let best = reachable.iter().map(|r| &r.value_e).max().expect("nonempty").clone();
        for record in reachable.iter().filter(|r| r.value_e == best) {
            for len in 1..=record.chain.len() {
                reached.insert(record.chain[..len].to_vec());
            }
        }
    }
    reached
}

/// Best-response value computation on a prebuilt lattice.
pub(crate) fn best_response_dp_on(
    lattice: &Lattice,
    cache: &mut MyopicCache,
    tiebreak: TieBreak,
    top: usize,
) -> Result<Rational> {
    let mut memo: HashMap<(usize, Option<Rational>), Rational> = HashMap::new();

    fn value(
        lattice: &Lattice,
        cache: &mut MyopicCache,
        memo: &mut HashMap<(usize, Option<Rational>), Rational>,
        tiebreak: TieBreak,
        node: usize,
        reservation: Option<&Rational>,
        top: usize,
    ) -> Result<Rational> {
        let key = (node, reservation.cloned());
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let choice = myopic_choice(lattice, cache, node, reservation, tiebreak)?;
        let mut best = choice.value_e.clone();
        for i in 0..lattice.finer[node].len() {
            let next = lattice.finer[node][i];
            if lattice.refines[next][top] {
                let continued =
                    value(lattice, cache, memo, tiebreak, next, Some(&choice.value_e), top)?;
                best = best.max(continued);
            }
        }
        memo.insert(key, best.clone());
        Ok(best)
    }

    value(lattice, cache, &mut memo, tiebreak, lattice.root, None, top)
}

/// The expert's best responses against `strategy` for type
/// `expert_partition`: all value-maximal revelation chains, reported up to
/// equivalence of the revealed spaces.
pub fn best_responses(
    instance: &Instance,
    strategy: &dyn Strategy,
    expert_partition: &Partition,
) -> Result<Vec<RevelationSequence>> {
    if !instance.in_interval(expert_partition)? {
        return Err(Error::Precondition(
            "expert partition must refine the decision maker's awareness".into(),
        ));
    }
    let lattice = Lattice::build(instance)?;
    let top = lattice.index_of(expert_partition)?;
    let records = collect_chain_records(&lattice, strategy, Some(top))?;
    let best = records.iter().map(|r| &r.value_e).max().expect("nonempty").clone();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for record in records.iter().filter(|r| r.value_e == best) {
        let canon = record
            .chain
            .iter()
            .map(|&i| lattice.nodes[i].canon.as_str())
            .collect::<Vec<_>>()
            .join("\x1e");
        if seen.insert(canon) {
            out.push(lattice.sequence(instance, &record.chain)?);
        }
    }
    Ok(out)
}

/// The maximal expert value attainable against the myopic strategy, by
/// memoized recursion over (awareness level, reservation) pairs. Agrees
/// with exhaustive enumeration wherever both run.
pub fn best_response_dp(
    instance: &Instance,
    tiebreak: TieBreak,
    expert_partition: &Partition,
) -> Result<Rational> {
    if !instance.in_interval(expert_partition)? {
        return Err(Error::Precondition(
            "expert partition must refine the decision maker's awareness".into(),
        ));
    }
    let lattice = Lattice::build(instance)?;
    let top = lattice.index_of(expert_partition)?;
    let mut cache = MyopicCache::new();
    best_response_dp_on(&lattice, &mut cache, tiebreak, top)
}

/// Exhaustively checks incentive compatibility, full revelation, and
/// decision-maker monotonicity of a strategy over every chain of the
/// instance's awareness interval.
pub fn check_strategy_properties(
    instance: &Instance,
    strategy: &dyn Strategy,
) -> Result<StrategyProperties> {
    let lattice = Lattice::build(instance)?;
    let n = lattice.nodes.len();
    let mut ic = true;
    let mut vd_monotone = true;
    let mut witnesses = Vec::new();
    let mut value_exact: Vec<Option<Rational>> = vec![None; n];

    lattice.walk_strategy(
        strategy,
        lattice.root,
        None,
        DEFAULT_CHAIN_CAP,
        &mut |chain, steps| {
            if steps.len() >= 2 {
                let prev = &steps[steps.len() - 2];
                let last = steps.last().expect("nonempty");
                if last.value_e < prev.value_e && ic {
                    ic = false;
                    witnesses.push(format!(
                        "expert value falls from {} to {} along {}",
                        prev.value_e,
                        last.value_e,
                        render_chain(&lattice, instance, chain),
                    ));
                }
                if last.value_d < prev.value_d && vd_monotone {
                    vd_monotone = false;
                    witnesses.push(format!(
                        "decision maker value falls from {} to {} along {}",
                        prev.value_d,
                        last.value_d,
                        render_chain(&lattice, instance, chain),
                    ));
                }
            }
            let last = steps.last().expect("nonempty");
            let node = *chain.last().expect("nonempty");
            let slot = &mut value_exact[node];
            if slot.as_ref().map_or(true, |v| last.value_e > *v) {
                *slot = Some(last.value_e.clone());
            }
            Ok(())
        },
    )?;

    let mut fully_revealing = true;
    for p in 0..n {
        // Best-response value for expert type p: the max over chains ending
        // at any level p can reveal.
        let best_upto = (0..n)
            .filter(|&q| lattice.refines[q][p])
            .filter_map(|q| value_exact[q].clone())
            .max()
            .expect("every type can at least hear the opening offer");
        let exact = value_exact[p].clone().expect("every node ends some chain");
        if exact != best_upto {
            fully_revealing = false;
            witnesses.push(format!(
                "no best response of type {} reveals everything: best {} vs {} when stopping there",
                instance.render_partition(&lattice.nodes[p].partition),
                best_upto,
                exact,
            ));
        }
    }
    Ok(StrategyProperties { ic, fully_revealing, vd_monotone, witnesses })
}

fn render_chain(lattice: &Lattice, instance: &Instance, chain: &[usize]) -> String {
    chain
        .iter()
        .map(|&i| instance.render_partition(&lattice.nodes[i].partition))
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// Plays `strategy` against a fixed expert revelation sequence and records
/// the transcript, including the awareness rent.
pub fn play(
    instance: &Instance,
    strategy: &dyn Strategy,
    expert_sequence: &RevelationSequence,
) -> Result<Transcript> {
    let mut steps: Vec<ProposalStep> = Vec::new();
    for partition in expert_sequence.chain() {
        let (space, _) = instance.space_of(partition)?;
        let contract = strategy.propose(&steps, &space)?;
        let value_d = space.expected_value(&contract, Player::DecisionMaker)?;
        let value_e = space.expected_value(&contract, Player::Expert)?;
        steps.push(ProposalStep { space, contract, value_d, value_e });
    }
    let last = steps.last().expect("sequence nonempty");
    let payoff_d = last.value_d.clone();
    let payoff_e = last.value_e.clone();
    let mut transcript = Transcript {
        sequence: expert_sequence.clone(),
        steps,
        payoff_d,
        payoff_e,
        rent: Rational::zero(),
    };
    transcript.rent = awareness_rent(&transcript, instance)?;
    Ok(transcript)
}

/// The expert's payoff premium over what she would receive if the decision
/// maker were fully aware and simply optimized for himself: the final
/// expert payoff minus the expert value of the unconstrained ground optimum
/// (tie-broken against the expert).
pub fn awareness_rent(transcript: &Transcript, instance: &Instance) -> Result<Rational> {
    let ground = instance.ground();
    let optimum = argmax_points(&evaluate_all(ground)?, Player::DecisionMaker, &[]);
    let baseline = TieBreak::ExpertMin.select(ground, &optimum)?.value_e.clone();
    Ok(&transcript.payoff_e - &baseline)
}

/// Two strategies are effectively equivalent when, for every expert type,
/// their best responses induce the same set of (payoffs, final awareness)
/// outcomes.
pub fn effective_equivalence(
    instance: &Instance,
    first: &dyn Strategy,
    second: &dyn Strategy,
) -> Result<bool> {
    let lattice = Lattice::build(instance)?;
    type OutcomeSet = BTreeSet<(Rational, Rational, CanonicalForm)>;
    let outcomes_of = |strategy: &dyn Strategy| -> Result<Vec<OutcomeSet>> {
        let records = collect_chain_records(&lattice, strategy, None)?;
        let n = lattice.nodes.len();
        let mut per_type = Vec::with_capacity(n);
        for p in 0..n {
            let reachable: Vec<&ChainRecord> = records
                .iter()
                .filter(|r| lattice.refines[r.final_node][p])
                .collect();
            let best = reachable.iter().map(|r| &r.value_e).max().expect("nonempty").clone();
            per_type.push(
                reachable
                    .iter()
                    .filter(|r| r.value_e == best)
                    .map(|r| {
                        (
                            r.value_d.clone(),
                            r.value_e.clone(),
                            lattice.nodes[r.final_node].canon.clone(),
                        )
                    })
                    .collect(),
            );
        }
        Ok(per_type)
    };
    Ok(outcomes_of(first)? == outcomes_of(second)?)
}

/// Every sequence some expert type could take the play through: all
/// prefixes of all best responses, across every type in the interval.
pub fn reachable_sequences(
    instance: &Instance,
    strategy: &dyn Strategy,
) -> Result<Vec<RevelationSequence>> {
    let lattice = Lattice::build(instance)?;
    let records = collect_chain_records(&lattice, strategy, None)?;
    let reached = reachable_chain_set(&lattice, &records);
    let mut ordered: Vec<Vec<usize>> = reached.into_iter().collect();
    ordered.sort_by_key(|c| (c.len(), c.clone()));
    ordered
        .into_iter()
        .map(|chain| lattice.sequence(instance, &chain))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn ri(n: i64) -> Rational {
        Rational::integer(n)
    }

    fn seq(instance: &Instance, blocks: &[&[&[usize]]]) -> RevelationSequence {
        let n = instance.ground().n_states();
        let chain = blocks
            .iter()
            .map(|p| Partition::new(n, p.iter().map(|b| b.to_vec()).collect()).unwrap())
            .collect();
        RevelationSequence::new(instance, chain).unwrap()
    }

    #[test]
    fn myopic_frontier_matches_the_worked_narrative() {
        let ex2 = fixtures::example_two();
        let (coarse, _) = ex2.space_of(&Partition::trivial(3)).unwrap();
        let opening = myopic_frontier(&coarse, None).unwrap();
        assert_eq!(opening.len(), 1);
        assert_eq!(opening[0].contract.render(&coarse).unwrap(), "{w,v,u}->a");
        assert_eq!(opening[0].value_d, ri(2));

        let split = Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap();
        let (mid, _) = ex2.space_of(&split).unwrap();
        let second = myopic_frontier(&mid, Some(&ri(1))).unwrap();
        assert_eq!(second.len(), 1);
        assert_eq!(second[0].value_d, r(7, 3));
        assert_eq!(second[0].value_e, r(5, 3));

        let ground = ex2.ground();
        let third = myopic_frontier(ground, Some(&r(5, 3))).unwrap();
        assert_eq!(third.len(), 1);
        assert_eq!(third[0].contract.render(ground).unwrap(), "w->a, v->b, u->d");
        assert_eq!((&third[0].value_d, &third[0].value_e), (&r(8, 3), &ri(2)));

        let oneshot = myopic_frontier(ground, Some(&ri(1))).unwrap();
        assert_eq!(oneshot.len(), 1);
        assert_eq!(oneshot[0].contract.render(ground).unwrap(), "w->a, v->b, u->c");
        assert_eq!((&oneshot[0].value_d, &oneshot[0].value_e), (&ri(3), &r(4, 3)));
    }

    #[test]
    fn myopic_strategy_walks_the_three_round_narrative() {
        let ex2 = fixtures::example_two();
        let strategy = make_myopic_strategy(TieBreak::ExpertMin);
        let full = seq(&ex2, &[&[&[0, 1, 2]], &[&[0], &[1, 2]], &[&[0], &[1], &[2]]]);
        let transcript = play(&ex2, &strategy, &full).unwrap();
        let rendered: Vec<String> = transcript
            .steps
            .iter()
            .map(|s| s.contract.render(&s.space).unwrap())
            .collect();
        assert_eq!(
            rendered,
            vec!["{w,v,u}->a", "{w}->a, {v,u}->b", "{w}->a, {v}->b, {u}->d"]
        );
        assert_eq!(transcript.payoff_d, r(8, 3));
        assert_eq!(transcript.payoff_e, ri(2));
        assert_eq!(transcript.rent, r(2, 3));
    }

    #[test]
    fn single_round_play_matches_the_opening_offer() {
        let ex2 = fixtures::example_two();
        let strategy = make_myopic_strategy(TieBreak::ExpertMin);
        let stay = seq(&ex2, &[&[&[0, 1, 2]]]);
        let transcript = play(&ex2, &strategy, &stay).unwrap();
        assert_eq!(transcript.payoff_d, ri(2));
        assert_eq!(transcript.payoff_e, ri(1));
    }

    #[test]
    fn two_state_play_reaches_the_constrained_optimum() {
        let ex1 = fixtures::example_one();
        let strategy = make_myopic_strategy(TieBreak::ExpertMin);
        let full = seq(&ex1, &[&[&[0, 1]], &[&[0], &[1]]]);
        let transcript = play(&ex1, &strategy, &full).unwrap();
        let rendered: Vec<String> = transcript
            .steps
            .iter()
            .map(|s| s.contract.render(&s.space).unwrap())
            .collect();
        assert_eq!(rendered, vec!["{w,v}->b", "{w}->b, {v}->c"]);
        assert_eq!(transcript.payoff_d, ri(4));
        assert_eq!(transcript.payoff_e, ri(3));
        assert_eq!(transcript.rent, ri(2));
    }

    #[test]
    fn best_responses_find_the_gradual_disclosure() {
        let ex2 = fixtures::example_two();
        let strategy = make_myopic_strategy(TieBreak::ExpertMin);
        let best = best_responses(&ex2, &strategy, &Partition::singletons(3)).unwrap();
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].len(), 3);
        assert_eq!(
            best[0].chain()[1],
            Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap()
        );
        let value = play(&ex2, &strategy, &best[0]).unwrap().payoff_e;
        assert_eq!(value, ri(2));
    }

    #[test]
    fn partial_expert_type_stops_at_its_awareness() {
        let ex2 = fixtures::example_two();
        let strategy = make_myopic_strategy(TieBreak::ExpertMin);
        let split = Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap();
        let best = best_responses(&ex2, &strategy, &split).unwrap();
        let values: Vec<Rational> = best
            .iter()
            .map(|s| play(&ex2, &strategy, s).unwrap().payoff_e)
            .collect();
        assert!(values.iter().all(|v| v == &r(5, 3)));
        assert!(best.iter().any(|s| s.last() == &split));
    }

    #[test]
    fn two_state_expert_prefers_full_disclosure() {
        let ex1 = fixtures::example_one();
        let strategy = make_myopic_strategy(TieBreak::ExpertMin);
        let best = best_responses(&ex1, &strategy, &Partition::singletons(2)).unwrap();
        assert_eq!(best.len(), 1);
        assert_eq!(best[0].len(), 2);
        assert_eq!(play(&ex1, &strategy, &best[0]).unwrap().payoff_e, ri(3));
    }

    #[test]
    fn dp_value_matches_enumeration() {
        let ex2 = fixtures::example_two();
        assert_eq!(
            best_response_dp(&ex2, TieBreak::ExpertMin, &Partition::singletons(3)).unwrap(),
            ri(2)
        );
        let split = Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap();
        assert_eq!(best_response_dp(&ex2, TieBreak::ExpertMin, &split).unwrap(), r(5, 3));
        let ex1 = fixtures::example_one();
        assert_eq!(
            best_response_dp(&ex1, TieBreak::ExpertMin, &Partition::singletons(2)).unwrap(),
            ri(3)
        );
    }

    #[test]
    fn myopic_strategies_are_ic_and_fully_revealing() {
        for instance in [fixtures::example_one(), fixtures::example_two()] {
            for tiebreak in [TieBreak::ExpertMin, TieBreak::ExpertMax] {
                let strategy = make_myopic_strategy(tiebreak);
                let report = check_strategy_properties(&instance, &strategy).unwrap();
                assert!(report.ic, "{:?}", report.witnesses);
                assert!(report.fully_revealing, "{:?}", report.witnesses);
                assert!(report.vd_monotone, "{:?}", report.witnesses);
            }
        }
    }

    #[test]
    fn greedy_reproposal_breaks_incentive_compatibility() {
        let ex1 = fixtures::example_one();
        let report = check_strategy_properties(&ex1, &fixtures::greedy_strategy()).unwrap();
        assert!(!report.ic);
        assert!(!report.fully_revealing);
        // The drop is exactly the b -> (b,a) reproposal.
        assert!(
            report.witnesses.iter().any(|w| w.contains("falls from 2 to 1")),
            "{:?}",
            report.witnesses
        );
    }

    #[test]
    fn effective_equivalence_examples() {
        let ex1 = fixtures::example_one();
        let myopic = make_myopic_strategy(TieBreak::ExpertMin);
        assert!(effective_equivalence(&ex1, &myopic, &myopic).unwrap());
        assert!(!effective_equivalence(&ex1, &myopic, &fixtures::greedy_strategy()).unwrap());

        let ex2 = fixtures::example_two();
        let wrapped = fixtures::relabelled(make_myopic_strategy(TieBreak::ExpertMin));
        assert!(effective_equivalence(&ex2, &myopic, &wrapped).unwrap());
    }

    #[test]
    fn reachable_sequences_cover_prefixes_of_best_responses() {
        let ex2 = fixtures::example_two();
        let strategy = make_myopic_strategy(TieBreak::ExpertMin);
        let reached = reachable_sequences(&ex2, &strategy).unwrap();
        let split = Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap();
        let two_round = seq(&ex2, &[&[&[0, 1, 2]], &[&[0], &[1, 2]]]);
        assert!(reached.iter().any(|s| s == &two_round));
        assert!(reached.iter().any(|s| s.len() == 1));
        assert!(reached.iter().any(|s| s.len() == 3 && s.chain()[1] == split));

        let ex1 = fixtures::example_one();
        let reached = reachable_sequences(&ex1, &strategy).unwrap();
        assert!(reached.iter().any(|s| s.len() == 1));
        assert!(reached.iter().any(|s| s.len() == 2));
    }

    #[test]
    fn sequences_validate_their_shape() {
        let ex2 = fixtures::example_two();
        let sing = Partition::singletons(3);
        assert!(RevelationSequence::new(&ex2, vec![sing.clone()]).is_err());
        assert!(RevelationSequence::new(
            &ex2,
            vec![Partition::trivial(3), Partition::trivial(3)]
        )
        .is_err());
        assert!(RevelationSequence::new(&ex2, vec![Partition::trivial(3), sing]).is_ok());
    }

    #[test]
    fn tie_break_prefers_the_requested_extreme() {
        let ex2 = fixtures::example_two();
        // At {{v},{w,u}} with reservation 1 the frontier holds two contracts
        // with equal decision-maker value and expert values 4/3 vs 1.
        let cross = Partition::new(3, vec![vec![1], vec![0, 2]]).unwrap();
        let (space, _) = ex2.space_of(&cross).unwrap();
        let frontier = myopic_frontier(&space, Some(&ri(1))).unwrap();
        assert_eq!(frontier.len(), 2);
        let min = TieBreak::ExpertMin.select(&space, &frontier).unwrap();
        let max = TieBreak::ExpertMax.select(&space, &frontier).unwrap();
        assert_eq!(min.value_e, ri(1));
        assert_eq!(max.value_e, r(4, 3));
        assert_eq!(min.value_d, max.value_d);
    }
}
