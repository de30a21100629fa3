//! Most permissive controller, controlled system and liability.

use std::collections::BTreeSet;

use crate::automaton::{ContractAutomaton, StateId, StateVector, Transition};
use crate::label::ActionVector;

/// States from which no accepting state is reachable.
pub fn redundant_states(a: &ContractAutomaton) -> BTreeSet<StateVector> {
    let co = a.coreachable_by(|_| true);
    (0..a.num_states())
        .map(StateId)
        .filter(|s| !co.contains(s))
        .map(|s| a.state(s).clone())
        .collect()
}

/// The sub-automaton keeping only match transitions (all states kept).
pub fn match_only(a: &ContractAutomaton) -> ContractAutomaton {
    let transitions = a
        .transitions()
        .iter()
        .filter(|t| t.action.is_match())
        .map(|t| (a.state(t.source).clone(), t.action.clone(), a.state(t.target).clone()));
    ContractAutomaton::new(
        a.rank(),
        a.states().iter().cloned(),
        a.initial_state().clone(),
        a.accepting().iter().map(|&s| a.state(s).clone()),
        transitions,
    )
    .expect("sub-automaton of a valid automaton is valid")
}

/// Most permissive strong controller: match transitions between states that
/// are not redundant in the match-only sub-automaton, trimmed to what is
/// reachable. An empty language yields the bare initial state.
pub fn mpc(a: &ContractAutomaton) -> ContractAutomaton {
    let live = a.coreachable_by(|t| t.action.is_match());
    a.restrict(|t| t.action.is_match() && live.contains(&t.source) && live.contains(&t.target))
}

/// A transition spelled out with its states.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateTransition {
    pub from: StateVector,
    pub action: ActionVector,
    pub to: StateVector,
}

impl StateTransition {
    pub(crate) fn of(a: &ContractAutomaton, t: &Transition) -> Self {
        StateTransition {
            from: a.state(t.source).clone(),
            action: t.action.clone(),
            to: a.state(t.target).clone(),
        }
    }
}

impl std::fmt::Display for StateTransition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.from, self.action, self.to)
    }
}

/// A transition of the controlled system into the sink state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SinkTransition {
    pub from: StateVector,
    pub action: ActionVector,
}

/// The controller together with the transitions of the original automaton
/// that leave it, redirected to a sink state `⊥` without successors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlledSystem {
    base: ContractAutomaton,
    controller: ContractAutomaton,
    sinks: Vec<SinkTransition>,
    /// The transitions of `base` each sink stands for, in the same order.
    underlying: Vec<StateTransition>,
}

impl ControlledSystem {
    pub fn base(&self) -> &ContractAutomaton {
        &self.base
    }

    pub fn controller(&self) -> &ContractAutomaton {
        &self.controller
    }

    pub fn sink_transitions(&self) -> &[SinkTransition] {
        &self.sinks
    }

    pub fn underlying_transitions(&self) -> &[StateTransition] {
        &self.underlying
    }

    pub(crate) fn from_parts(
        base: ContractAutomaton,
        controller: ContractAutomaton,
        sinks: Vec<SinkTransition>,
        underlying: Vec<StateTransition>,
    ) -> Self {
        ControlledSystem {
            base,
            controller,
            sinks,
            underlying,
        }
    }

    pub fn has_sink(&self, from: &StateVector, action: &ActionVector) -> bool {
        self.sinks.iter().any(|s| &s.from == from && &s.action == action)
    }
}

pub fn controlled_system(a: &ContractAutomaton) -> ControlledSystem {
    let controller = mpc(a);
    let mut sinks = Vec::new();
    let mut underlying = Vec::new();
    for q in controller.states() {
        let Some(src) = a.state_id(q) else { continue };
        let kept = controller.state_id(q).expect("iterating controller states");
        for t in a.outgoing(src) {
            if !controller.enables(kept, &t.action) {
                sinks.push(SinkTransition {
                    from: q.clone(),
                    action: t.action.clone(),
                });
                underlying.push(StateTransition::of(a, t));
            }
        }
    }
    ControlledSystem {
        base: a.clone(),
        controller,
        sinks,
        underlying,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Liability {
    /// 0-based positions of participants active on some sink transition.
    pub participants: BTreeSet<usize>,
    pub transitions: Vec<StateTransition>,
}

pub fn liable(cs: &ControlledSystem) -> Liability {
    let participants = cs
        .sinks
        .iter()
        .flat_map(|s| {
            s.action
                .labels()
                .iter()
                .enumerate()
                .filter(|(_, l)| !l.is_idle())
                .map(|(i, _)| i)
        })
        .collect();
    Liability {
        participants,
        transitions: cs.underlying.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use crate::product;

    fn av(s: &str) -> ActionVector {
        s.parse().unwrap()
    }

    fn sv(s: &str) -> StateVector {
        StateVector::new(s.split(','))
    }

    #[test]
    fn redundant_in_match_only_toy_exchange() {
        let p = product(&samples::toy_exchange()).unwrap();
        let got = redundant_states(&match_only(&p));
        let expected: BTreeSet<_> = ["q1,q2,q1", "q1,q0,q1", "q1,q1,q1"].iter().map(|s| sv(s)).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn redundant_examples() {
        let [alice, ..] = samples::toy_exchange();
        assert!(redundant_states(&alice).is_empty());
        let trap = ContractAutomaton::principal(
            "q0",
            &["q1"],
            &[("q0", crate::Label::offer("a"), "q1"), ("q0", crate::Label::offer("b"), "t")],
        )
        .unwrap();
        assert_eq!(redundant_states(&trap), BTreeSet::from([sv("t")]));
    }

    #[test]
    fn toy_exchange_controller() {
        let p = product(&samples::toy_exchange()).unwrap();
        let k = mpc(&p);
        let states: BTreeSet<_> = k.states().iter().cloned().collect();
        let expected: BTreeSet<_> = ["q0,q0,q0", "q1,q2,q0", "q0,q1,q1", "q1,q3,q1"].iter().map(|s| sv(s)).collect();
        assert_eq!(states, expected);
        assert_eq!(k.transitions().len(), 4);
        assert!(k.has_transition(&sv("q0,q0,q0"), &av("(!a,?a,-)"), &sv("q1,q2,q0")));
        assert!(k.has_transition(&sv("q0,q1,q1"), &av("(!a,?a,-)"), &sv("q1,q3,q1")));
        assert!(k.has_transition(&sv("q0,q0,q0"), &av("(-,!b,?b)"), &sv("q0,q1,q1")));
        assert!(k.has_transition(&sv("q1,q2,q0"), &av("(-,!b,?b)"), &sv("q1,q3,q1")));
    }

    #[test]
    fn branching_gap_controller_has_seven_states() {
        let p = product(&samples::branching_gap()).unwrap();
        let k = mpc(&p);
        assert_eq!(k.num_states(), 7);
        assert!(k.has_transition(&sv("q0_1,q0_2,q0_3"), &av("(-,!c,?c)"), &sv("q0_1,q2_2,q3_3")));
        assert!(k.has_transition(&sv("q0_1,q0_2,q0_3"), &av("(!b,-,?b)"), &sv("q2_1,q0_2,q1_3")));
        assert!(k.has_transition(&sv("q0_1,q2_2,q3_3"), &av("(!a,?a,-)"), &sv("q1_1,q1_2,q3_3")));
        assert!(!k.enables(k.initial(), &av("(!a,?a,-)")));
    }

    #[test]
    fn empty_language_controller() {
        let lonely = [
            ContractAutomaton::principal("q0", &["q1"], &[("q0", crate::Label::offer("a"), "q1")]).unwrap(),
            ContractAutomaton::principal("q0", &["q1"], &[("q0", crate::Label::offer("b"), "q1")]).unwrap(),
        ];
        let k = mpc(&product(&lonely).unwrap());
        assert_eq!(k.num_states(), 1);
        assert!(k.transitions().is_empty());
    }

    #[test]
    fn strongly_safe_controller_is_identity() {
        let a = samples::loop_then_exit();
        assert_eq!(mpc(&a), a);
        assert!(controlled_system(&a).sink_transitions().is_empty());
        assert_eq!(liable(&controlled_system(&a)), Liability::default());
    }

    #[test]
    fn toy_exchange_controlled_system_and_liability() {
        let p = product(&samples::toy_exchange()).unwrap();
        let cs = controlled_system(&p);
        assert_eq!(cs.sink_transitions().len(), 2);
        assert!(cs.has_sink(&sv("q1,q2,q0"), &av("(-,-,?a)")));
        assert!(cs.has_sink(&sv("q0,q0,q0"), &av("(!a,-,?a)")));
        let l = liable(&cs);
        assert_eq!(l.participants, BTreeSet::from([0, 2]));
        let ts: BTreeSet<_> = l.transitions.iter().map(|t| t.to_string()).collect();
        assert_eq!(
            ts,
            BTreeSet::from([
                "(<q0,q0,q0>, (!a,-,?a), <q1,q0,q1>)".to_owned(),
                "(<q1,q2,q0>, (-,-,?a), <q1,q2,q1>)".to_owned(),
            ])
        );
    }

    #[test]
    fn relay_has_sink_at_q9() {
        let p = product(&samples::relay()).unwrap();
        let cs = controlled_system(&p);
        assert!(cs.has_sink(&sv("a1,b4,c5"), &av("(-,-,!d)")));
    }

    #[test]
    fn branching_gap_liable_includes_first_lend() {
        let p = product(&samples::branching_gap()).unwrap();
        let l = liable(&controlled_system(&p));
        assert!(l.transitions.contains(&StateTransition {
            from: sv("q0_1,q0_2,q0_3"),
            action: av("(!a,?a,-)"),
            to: sv("q1_1,q1_2,q0_3"),
        }));
    }
}
