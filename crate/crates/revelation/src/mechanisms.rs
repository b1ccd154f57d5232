//! The boundary mechanisms and their ex-post audits.
//!
//! A mechanism maps a pair of reported awareness levels to a contract on
//! the finer (join) space; reports must be comparable, since awareness is
//! hard information. Two mechanisms bound what any individually rational,
//! incentive compatible, Pareto optimal mechanism can deliver: one plays
//! the revelation game on the decision maker's behalf and is point-wise
//! best for him, the dual one hands the choice to the expert subject to the
//! decision maker's stand-alone value and is point-wise best for her.

use crate::contracts::{argmax_points, PayoffPoint, ValueConstraint};
use crate::error::{Error, Result};
use crate::game::{
    myopic_best_runs, myopic_choice, Lattice, MyopicCache, MyopicRun, TieBreak,
};
use crate::instance::Instance;
use crate::partition::{partition_refines, Partition};
use crate::rational::Rational;
use crate::space::{Contract, Player, StateSpace};
use std::collections::BTreeMap;

/// Which boundary mechanism to run.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MechanismKind {
    DmOptimal,
    ExpertOptimal,
}

impl MechanismKind {
    pub fn label(self) -> &'static str {
        match self {
            MechanismKind::DmOptimal => "dm-optimal",
            MechanismKind::ExpertOptimal => "expert-optimal",
        }
    }
}

/// The resolved outcome for one report pair: the contract on the join space
/// and both players' exact values there.
#[derive(Clone, Debug)]
pub struct MechanismOutcome {
    pub report_d: Partition,
    pub report_e: Partition,
    pub join_space: StateSpace,
    pub contract: Contract,
    pub value_d: Rational,
    pub value_e: Rational,
}

/// Anything that maps comparable report pairs to outcomes; lets the audit
/// run against externally supplied (e.g. deliberately broken) mechanisms.
pub trait Mechanism {
    fn outcome(
        &self,
        instance: &Instance,
        report_d: &Partition,
        report_e: &Partition,
    ) -> Result<MechanismOutcome>;
}

/// The join of two comparable reports: the coarsening of the ground space
/// by the finer of the two. Incomparable reports are rejected.
pub fn join_reports(
    instance: &Instance,
    report_d: &Partition,
    report_e: &Partition,
) -> Result<StateSpace> {
    let e_finer = partition_refines(report_d, report_e)?;
    let d_finer = partition_refines(report_e, report_d)?;
    let finer = if e_finer {
        report_e
    } else if d_finer {
        report_d
    } else {
        return Err(Error::IncompatibleReports);
    };
    Ok(instance.space_of(finer)?.0)
}

/// Deterministic pick among expert-best myopic runs: highest final decision
/// maker value first, then the lexicographically smallest chain.
fn select_run(lattice: &Lattice, mut runs: Vec<MyopicRun>) -> MyopicRun {
    runs.sort_by_cached_key(|run| {
        let canon: Vec<&str> =
            run.chain.iter().map(|&i| lattice.nodes[i].canon.as_str()).collect();
        (
            std::cmp::Reverse(run.final_value_d().clone()),
            canon.join("\x1e"),
            run.chain.clone(),
        )
    });
    runs.into_iter().next().expect("best runs are nonempty")
}

fn outcome_from(
    lattice: &Lattice,
    i_d: usize,
    i_e: usize,
    join: usize,
    final_node: usize,
    contract: &Contract,
) -> Result<MechanismOutcome> {
    let contract_on_join = if final_node == join {
        contract.clone()
    } else {
        let map = lattice.connecting_map(final_node, join)?;
        crate::refinement::lift_contract(contract, &map)?
    };
    let join_space = lattice.nodes[join].space.clone();
    let value_d = join_space.expected_value(&contract_on_join, Player::DecisionMaker)?;
    let value_e = join_space.expected_value(&contract_on_join, Player::Expert)?;
    Ok(MechanismOutcome {
        report_d: lattice.nodes[i_d].partition.clone(),
        report_e: lattice.nodes[i_e].partition.clone(),
        join_space,
        contract: contract_on_join,
        value_d,
        value_e,
    })
}

/// Decision-maker-optimal mechanism at lattice level. When the expert's
/// report refines his own, the decision maker plays the myopic strategy
/// with the expert-favourable tie-break from his report onwards and the
/// expert best-responds; otherwise he simply takes his stand-alone optimum.
pub(crate) fn mech_dm_on(
    lattice: &Lattice,
    cache: &mut MyopicCache,
    i_d: usize,
    i_e: usize,
) -> Result<MechanismOutcome> {
    if lattice.refines[i_d][i_e] {
        let runs = myopic_best_runs(lattice, cache, TieBreak::ExpertMax, i_d, i_e)?;
        let run = select_run(lattice, runs);
        let final_node = run.final_node();
        let idx = run.proposals.last().expect("nonempty").payoff_idx;
        let contract = lattice.nodes[final_node].payoffs[idx].contract.clone();
        outcome_from(lattice, i_d, i_e, i_e, final_node, &contract)
    } else if lattice.refines[i_e][i_d] {
        let choice = myopic_choice(lattice, cache, i_d, None, TieBreak::ExpertMax)?;
        let contract = lattice.nodes[i_d].payoffs[choice.payoff_idx].contract.clone();
        outcome_from(lattice, i_d, i_e, i_d, i_d, &contract)
    } else {
        Err(Error::IncompatibleReports)
    }
}

/// Expert-optimal mechanism at lattice level: on the join space, maximize
/// the expert's value subject to the decision maker keeping at least his
/// stand-alone optimum on his reported space; among that tie set, hand the
/// decision maker the most.
pub(crate) fn mech_expert_on(
    lattice: &Lattice,
    cache: &mut MyopicCache,
    i_d: usize,
    i_e: usize,
) -> Result<MechanismOutcome> {
    let join = if lattice.refines[i_d][i_e] {
        i_e
    } else if lattice.refines[i_e][i_d] {
        i_d
    } else {
        return Err(Error::IncompatibleReports);
    };
    let stand_alone = myopic_choice(lattice, cache, i_d, None, TieBreak::ExpertMax)?.value_d;
    let join_node = &lattice.nodes[join];
    let expert_best = argmax_points(
        &join_node.payoffs,
        Player::Expert,
        &[ValueConstraint { player: Player::DecisionMaker, threshold: stand_alone }],
    );
    let dm_best = argmax_points(&expert_best, Player::DecisionMaker, &[]);
    let mut finalists: Vec<&PayoffPoint> = dm_best.iter().collect();
    finalists.sort_by_cached_key(|p| {
        (
            p.contract
                .canonical_encoding(&join_node.space)
                .expect("candidate lives on the join space"),
            p.contract.choices().to_vec(),
        )
    });
    let chosen = finalists
        .first()
        .expect("the stand-alone optimum lifted to the join is always feasible");
    outcome_from(lattice, i_d, i_e, join, join, &chosen.contract)
}

fn lattice_for_reports(instance: &Instance, report_d: &Partition) -> Result<Lattice> {
    Lattice::build(&instance.with_root(report_d.clone())?)
}

fn run_mechanism(
    instance: &Instance,
    kind: MechanismKind,
    report_d: &Partition,
    report_e: &Partition,
) -> Result<MechanismOutcome> {
    // Comparability first, so incomparable pairs fail cleanly.
    join_reports(instance, report_d, report_e)?;
    let expert_finer = partition_refines(report_d, report_e)?;
    let lattice = lattice_for_reports(instance, report_d)?;
    let i_d = lattice.index_of(report_d)?;
    // A coarser expert report only matters through comparability; the join
    // is then the decision maker's own space.
    let i_e = if expert_finer { lattice.index_of(report_e)? } else { i_d };
    let mut cache = MyopicCache::new();
    let mut outcome = match kind {
        MechanismKind::DmOptimal => mech_dm_on(&lattice, &mut cache, i_d, i_e)?,
        MechanismKind::ExpertOptimal => mech_expert_on(&lattice, &mut cache, i_d, i_e)?,
    };
    outcome.report_e = report_e.clone();
    Ok(outcome)
}

/// The decision-maker-optimal boundary mechanism for one report pair.
pub fn mech_dm(
    instance: &Instance,
    report_d: &Partition,
    report_e: &Partition,
) -> Result<MechanismOutcome> {
    run_mechanism(instance, MechanismKind::DmOptimal, report_d, report_e)
}

/// The expert-optimal boundary mechanism for one report pair.
pub fn mech_expert(
    instance: &Instance,
    report_d: &Partition,
    report_e: &Partition,
) -> Result<MechanismOutcome> {
    run_mechanism(instance, MechanismKind::ExpertOptimal, report_d, report_e)
}

/// Result of the ex-post audit over every comparable report pair.
#[derive(Clone, Debug)]
pub struct AuditReport {
    /// The decision maker never does worse than his stand-alone optimum.
    pub ir: bool,
    /// No coarser misreport by the decision maker raises his value.
    pub ic_d: bool,
    /// No coarser misreport by the expert raises her value.
    pub ic_e: bool,
    /// No contract on the join space Pareto-dominates the outcome.
    pub po: bool,
    pub witnesses: Vec<String>,
}

impl AuditReport {
    pub fn all_hold(&self) -> bool {
        self.ir && self.ic_d && self.ic_e && self.po
    }
}

type OutcomeTable = BTreeMap<(usize, usize), MechanismOutcome>;

fn comparable_pairs(lattice: &Lattice) -> Vec<(usize, usize)> {
    let n = lattice.nodes.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if lattice.refines[i][j] || lattice.refines[j][i] {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn standard_outcome_table(
    instance: &Instance,
    kind: MechanismKind,
) -> Result<(Lattice, OutcomeTable)> {
    let lattice = Lattice::build(instance)?;
    let mut cache = MyopicCache::new();
    let mut table = OutcomeTable::new();
    for (i, j) in comparable_pairs(&lattice) {
        let outcome = match kind {
            MechanismKind::DmOptimal => mech_dm_on(&lattice, &mut cache, i, j)?,
            MechanismKind::ExpertOptimal => mech_expert_on(&lattice, &mut cache, i, j)?,
        };
        table.insert((i, j), outcome);
    }
    Ok((lattice, table))
}

fn trait_outcome_table(
    instance: &Instance,
    mechanism: &dyn Mechanism,
) -> Result<(Lattice, OutcomeTable)> {
    let lattice = Lattice::build(instance)?;
    let mut table = OutcomeTable::new();
    for (i, j) in comparable_pairs(&lattice) {
        let outcome = mechanism.outcome(
            instance,
            &lattice.nodes[i].partition,
            &lattice.nodes[j].partition,
        )?;
        table.insert((i, j), outcome);
    }
    Ok((lattice, table))
}

fn audit_table(instance: &Instance, lattice: &Lattice, table: &OutcomeTable) -> Result<AuditReport> {
    let mut report = AuditReport { ir: true, ic_d: true, ic_e: true, po: true, witnesses: vec![] };
    let n = lattice.nodes.len();
    let mut cache = MyopicCache::new();
    let label = |i: usize| instance.render_partition(&lattice.nodes[i].partition);
    for (&(i, j), outcome) in table {
        let join = if lattice.refines[i][j] { j } else { i };
        if outcome.join_space.id() != lattice.nodes[join].space.id() {
            return Err(Error::MapMismatch);
        }
        // Individual rationality against the stand-alone optimum.
        let stand_alone = myopic_choice(lattice, &mut cache, i, None, TieBreak::ExpertMax)?.value_d;
        if outcome.value_d < stand_alone {
            report.ir = false;
            report.witnesses.push(format!(
                "ir: reports ({}, {}) give the decision maker {} below his stand-alone {}",
                label(i),
                label(j),
                outcome.value_d,
                stand_alone,
            ));
        }
        // Decision maker misreports: any strictly coarser report.
        for coarser in 0..n {
            if coarser != i && lattice.refines[coarser][i] {
                if let Some(misreported) = table.get(&(coarser, j)) {
                    if misreported.value_d > outcome.value_d {
                        report.ic_d = false;
                        report.witnesses.push(format!(
                            "ic_d: decision maker of type {} gains by reporting {} against {} ({} > {})",
                            label(i),
                            label(coarser),
                            label(j),
                            misreported.value_d,
                            outcome.value_d,
                        ));
                    }
                }
            }
        }
        // Expert misreports: any strictly coarser report.
        for coarser in 0..n {
            if coarser != j && lattice.refines[coarser][j] {
                if let Some(misreported) = table.get(&(i, coarser)) {
                    if misreported.value_e > outcome.value_e {
                        report.ic_e = false;
                        report.witnesses.push(format!(
                            "ic_e: expert of type {} gains by reporting {} against {} ({} > {})",
                            label(j),
                            label(coarser),
                            label(i),
                            misreported.value_e,
                            outcome.value_e,
                        ));
                    }
                }
            }
        }
        // Pareto optimality on the join space.
        for point in &lattice.nodes[join].payoffs {
            let weakly_better =
                point.value_d >= outcome.value_d && point.value_e >= outcome.value_e;
            let strictly =
                point.value_d > outcome.value_d || point.value_e > outcome.value_e;
            if weakly_better && strictly {
                report.po = false;
                report.witnesses.push(format!(
                    "po: reports ({}, {}) dominated by {} with values ({}, {})",
                    label(i),
                    label(j),
                    point.contract.render(&lattice.nodes[join].space)?,
                    point.value_d,
                    point.value_e,
                ));
                break;
            }
        }
    }
    Ok(report)
}

/// Audits one of the boundary mechanisms over every comparable report pair
/// of the instance's awareness interval.
pub fn audit_mechanism(instance: &Instance, kind: MechanismKind) -> Result<AuditReport> {
    let (lattice, table) = standard_outcome_table(instance, kind)?;
    audit_table(instance, &lattice, &table)
}

/// Audits an arbitrary mechanism; used to demonstrate failures on naive
/// constructions.
pub fn audit_mechanism_with(instance: &Instance, mechanism: &dyn Mechanism) -> Result<AuditReport> {
    let (lattice, table) = trait_outcome_table(instance, mechanism)?;
    audit_table(instance, &lattice, &table)
}

/// Point-wise payoff comparison of the two boundary mechanisms.
#[derive(Clone, Debug)]
pub struct ComparisonRow {
    pub report_d: String,
    pub report_e: String,
    pub dm_mech: (Rational, Rational),
    pub expert_mech: (Rational, Rational),
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub violations: Vec<String>,
}

impl ComparisonReport {
    /// True when the decision-maker mechanism is point-wise best for him and
    /// the expert mechanism point-wise best for her.
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For every comparable report pair, checks that the decision-maker
/// mechanism weakly beats the expert mechanism on his value and vice versa.
pub fn compare_mechanisms(instance: &Instance) -> Result<ComparisonReport> {
    let (lattice, dm_table) = standard_outcome_table(instance, MechanismKind::DmOptimal)?;
    let (_, expert_table) = standard_outcome_table(instance, MechanismKind::ExpertOptimal)?;
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (&(i, j), dm_outcome) in &dm_table {
        let expert_outcome = &expert_table[&(i, j)];
        let row = ComparisonRow {
            report_d: instance.render_partition(&lattice.nodes[i].partition),
            report_e: instance.render_partition(&lattice.nodes[j].partition),
            dm_mech: (dm_outcome.value_d.clone(), dm_outcome.value_e.clone()),
            expert_mech: (expert_outcome.value_d.clone(), expert_outcome.value_e.clone()),
        };
        if dm_outcome.value_d < expert_outcome.value_d {
            violations.push(format!(
                "reports ({}, {}): decision-maker mechanism pays him {} < {}",
                row.report_d, row.report_e, dm_outcome.value_d, expert_outcome.value_d,
            ));
        }
        if expert_outcome.value_e < dm_outcome.value_e {
            violations.push(format!(
                "reports ({}, {}): expert mechanism pays her {} < {}",
                row.report_d, row.report_e, expert_outcome.value_e, dm_outcome.value_e,
            ));
        }
        rows.push(row);
    }
    Ok(ComparisonReport { rows, violations })
}
