//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.
//! The corpus covers the two worked examples plus 200 seeded random
//! instances with up to 4 states, up to 3 actions, and integer payoffs in
//! 0..=6 so that ties are common.

use revelation::contracts::{constrained_optimum, is_pareto_optimal, ValueConstraint};
use revelation::fixtures;
use revelation::game::{
    best_response_dp, best_responses, check_strategy_properties, make_myopic_strategy, play,
    RevelationSequence, TieBreak,
};
use revelation::oracle::{
    check_dp_agreement, check_lift_invariance, check_mechanism_audits,
    check_mechanism_dominance, check_sampled_deviations, check_single_step_deviations,
    check_tiebreak_dominance, random_instance, InstanceSpec,
};
use revelation::{Instance, Partition, Player, Rational};
use std::sync::OnceLock;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn ri(n: i64) -> Rational {
    Rational::integer(n)
}

/// 200 deterministic instances at desk scale (2-4 states, 2-3 actions).
fn corpus() -> &'static [Instance] {
    static CORPUS: OnceLock<Vec<Instance>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        (0..200u64)
            .map(|seed| {
                let spec =
                    InstanceSpec::new(seed, 2 + (seed as usize % 3), 2 + (seed as usize % 2));
                random_instance(&spec).expect("corpus specs are within bounds")
            })
            .collect()
    })
}

fn criterion(number: u32, description: &str, run: impl FnOnce() -> Result<(), String>) {
    match run() {
        Ok(()) => println!("[acceptance] criterion {number} ({description}): PASS"),
        Err(message) => {
            println!("[acceptance] criterion {number} ({description}): FAIL - {message}");
            panic!("criterion {number} failed: {message}");
        }
    }
}

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

#[test]
fn criterion_1_two_state_golden_values() {
    criterion(1, "two-state example golden values", || {
        let instance = fixtures::example_one();
        let ground = instance.ground();
        let (coarse, _) = instance.space_of(instance.dm_partition()).map_err(|e| e.to_string())?;

        let coarse_opt = constrained_optimum(&coarse, Player::DecisionMaker, &[])
            .map_err(|e| e.to_string())?;
        expect("coarse optimum size", coarse_opt.len(), 1)?;
        expect(
            "coarse optimum contract",
            coarse_opt[0].contract.render(&coarse).map_err(|e| e.to_string())?,
            "{w,v}->b".to_string(),
        )?;
        expect("coarse optimum values", (coarse_opt[0].value_d.clone(), coarse_opt[0].value_e.clone()), (ri(3), ri(2)))?;

        let unconstrained = constrained_optimum(ground, Player::DecisionMaker, &[])
            .map_err(|e| e.to_string())?;
        expect(
            "unconstrained ground values",
            (unconstrained[0].value_d.clone(), unconstrained[0].value_e.clone()),
            (ri(5), ri(1)),
        )?;

        let constrained = constrained_optimum(
            ground,
            Player::DecisionMaker,
            &[ValueConstraint::expert_at_least(ri(2))],
        )
        .map_err(|e| e.to_string())?;
        expect(
            "constrained ground values",
            (constrained[0].value_d.clone(), constrained[0].value_e.clone()),
            (ri(4), ri(3)),
        )?;
        // The constrained contract Pareto-dominates the coarse outcome.
        if !(constrained[0].value_d > coarse_opt[0].value_d
            && constrained[0].value_e > coarse_opt[0].value_e)
        {
            return Err("constrained optimum does not dominate the coarse outcome".into());
        }
        if !is_pareto_optimal(ground, &constrained[0].contract).map_err(|e| e.to_string())? {
            return Err("constrained optimum is not on the Pareto frontier".into());
        }
        Ok(())
    });
}

#[test]
fn criterion_2_three_state_golden_values() {
    criterion(2, "three-state example golden values", || {
        let instance = fixtures::example_two();
        let strategy = make_myopic_strategy(TieBreak::ExpertMin);
        let trivial = Partition::trivial(3);
        let split = Partition::new(3, vec![vec![0], vec![1, 2]]).map_err(|e| e.to_string())?;
        let full = Partition::singletons(3);

        let chain = |parts: Vec<Partition>| {
            RevelationSequence::new(&instance, parts).map_err(|e| e.to_string())
        };
        let payoffs = |seq: &RevelationSequence| -> Result<(Rational, Rational), String> {
            let t = play(&instance, &strategy, seq).map_err(|e| e.to_string())?;
            Ok((t.payoff_d, t.payoff_e))
        };

        expect("initial round", payoffs(&chain(vec![trivial.clone()])?)?, (ri(2), ri(1)))?;
        expect(
            "one-shot full revelation",
            payoffs(&chain(vec![trivial.clone(), full.clone()])?)?,
            (ri(3), r(4, 3)),
        )?;
        expect(
            "partial revelation",
            payoffs(&chain(vec![trivial.clone(), split.clone()])?)?,
            (r(7, 3), r(5, 3)),
        )?;
        expect(
            "two-round outcome",
            payoffs(&chain(vec![trivial.clone(), split.clone(), full.clone()])?)?,
            (r(8, 3), ri(2)),
        )?;

        let best = best_responses(&instance, &strategy, &full).map_err(|e| e.to_string())?;
        expect("best response count", best.len(), 1)?;
        expect(
            "best response chain",
            best[0].chain().to_vec(),
            vec![trivial, split, full],
        )?;
        let best_value = payoffs(&best[0])?.1;
        expect("best response value", best_value.clone(), ri(2))?;
        if best_value <= r(4, 3) {
            return Err("gradual disclosure does not beat one-shot revelation".into());
        }
        Ok(())
    });
}

#[test]
fn criterion_3_full_revelation_property() {
    criterion(3, "myopic strategies are IC and fully revealing", || {
        let mut instances: Vec<Instance> =
            vec![fixtures::example_one(), fixtures::example_two()];
        instances.extend(corpus().iter().cloned());
        for (i, instance) in instances.iter().enumerate() {
            for tiebreak in [TieBreak::ExpertMin, TieBreak::ExpertMax] {
                let props = check_strategy_properties(instance, &make_myopic_strategy(tiebreak))
                    .map_err(|e| e.to_string())?;
                if !props.ic || !props.fully_revealing {
                    return Err(format!(
                        "instance {i} ({}) {}: ic={} fully_revealing={}",
                        instance.digest(),
                        tiebreak.label(),
                        props.ic,
                        props.fully_revealing
                    ));
                }
            }
        }
        // The non-IC control must fail to be fully revealing.
        let control = check_strategy_properties(
            &fixtures::example_one(),
            &fixtures::greedy_strategy(),
        )
        .map_err(|e| e.to_string())?;
        if control.fully_revealing {
            return Err("greedy control strategy reported fully_revealing=true".into());
        }
        Ok(())
    });
}

#[test]
fn criterion_4_robustness_necessary_conditions() {
    criterion(4, "monotonicity and deviation dominance", || {
        let mut instances: Vec<Instance> =
            vec![fixtures::example_one(), fixtures::example_two()];
        instances.extend(corpus().iter().cloned());
        for (i, instance) in instances.iter().enumerate() {
            for tiebreak in [TieBreak::ExpertMin, TieBreak::ExpertMax] {
                let props = check_strategy_properties(instance, &make_myopic_strategy(tiebreak))
                    .map_err(|e| e.to_string())?;
                if !props.vd_monotone {
                    return Err(format!(
                        "instance {i}: vd_monotone=false under {}",
                        tiebreak.label()
                    ));
                }
            }
            let single = check_single_step_deviations(instance).map_err(|e| e.to_string())?;
            if !single.passed {
                return Err(format!("instance {i}: {}", single.witnesses.join(" | ")));
            }
            let sampled = check_sampled_deviations(instance).map_err(|e| e.to_string())?;
            if !sampled.passed {
                return Err(format!("instance {i}: {}", sampled.witnesses.join(" | ")));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_5_tiebreak_dominance() {
    criterion(5, "expert-min tie-break is point-wise best for the decision maker", || {
        let mut instances: Vec<Instance> =
            vec![fixtures::example_one(), fixtures::example_two()];
        instances.extend(corpus().iter().cloned());
        for (i, instance) in instances.iter().enumerate() {
            let check = check_tiebreak_dominance(instance).map_err(|e| e.to_string())?;
            if !check.passed {
                return Err(format!("instance {i}: {}", check.witnesses.join(" | ")));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_6_mechanism_properties() {
    criterion(6, "mechanism audits and point-wise dominance", || {
        let mut instances: Vec<Instance> =
            vec![fixtures::example_one(), fixtures::example_two()];
        instances.extend(corpus().iter().cloned());
        for (i, instance) in instances.iter().enumerate() {
            let audits = check_mechanism_audits(instance).map_err(|e| e.to_string())?;
            if !audits.passed {
                return Err(format!("instance {i}: {}", audits.witnesses.join(" | ")));
            }
            let dominance = check_mechanism_dominance(instance).map_err(|e| e.to_string())?;
            if !dominance.passed {
                return Err(format!("instance {i}: {}", dominance.witnesses.join(" | ")));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_7_solver_equivalence() {
    criterion(7, "memoized solver equals exhaustive enumeration", || {
        let mut instances: Vec<Instance> =
            vec![fixtures::example_one(), fixtures::example_two()];
        instances.extend(corpus().iter().cloned());
        for (i, instance) in instances.iter().enumerate() {
            let check = check_dp_agreement(instance).map_err(|e| e.to_string())?;
            if !check.passed {
                return Err(format!("instance {i}: {}", check.witnesses.join(" | ")));
            }
        }
        // Cross-check a slice through the public enumeration API as well.
        for instance in corpus().iter().step_by(23) {
            let interval = instance.interval().map_err(|e| e.to_string())?;
            for tiebreak in [TieBreak::ExpertMin, TieBreak::ExpertMax] {
                let strategy = make_myopic_strategy(tiebreak);
                for expert in &interval {
                    let dp = best_response_dp(instance, tiebreak, expert)
                        .map_err(|e| e.to_string())?;
                    let brute = best_responses(instance, &strategy, expert)
                        .map_err(|e| e.to_string())?
                        .iter()
                        .map(|seq| {
                            play(instance, &strategy, seq).map(|t| t.payoff_e)
                        })
                        .collect::<revelation::Result<Vec<_>>>()
                        .map_err(|e| e.to_string())?
                        .into_iter()
                        .max()
                        .expect("best responses are nonempty");
                    if dp != brute {
                        return Err(format!(
                            "instance {}: dp {dp} vs enumeration {brute}",
                            instance.digest()
                        ));
                    }
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_8_lift_invariance() {
    criterion(8, "contract values survive awareness refinement exactly", || {
        let mut instances: Vec<Instance> =
            vec![fixtures::example_one(), fixtures::example_two()];
        instances.extend(corpus().iter().cloned());
        for (i, instance) in instances.iter().enumerate() {
            let check = check_lift_invariance(instance).map_err(|e| e.to_string())?;
            if !check.passed {
                return Err(format!("instance {i}: {}", check.witnesses.join(" | ")));
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_9_scope_note() {
    criterion(9, "desk-scale substitution for infinite quantifiers", || {
        // The structural claims quantify over infinite strategy, mechanism,
        // and type spaces; criteria 3-6 substitute exhaustive desk-scale
        // verification plus property-based sampling as specified. This test
        // records the substitution and pins the corpus shape.
        let sizes: Vec<(usize, usize)> = corpus()
            .iter()
            .map(|i| (i.ground().n_states(), i.ground().n_actions()))
            .collect();
        expect("corpus size", sizes.len(), 200)?;
        if sizes.iter().any(|&(s, a)| s > 4 || a > 3) {
            return Err("corpus exceeds the declared desk scale".into());
        }
        Ok(())
    });
}
