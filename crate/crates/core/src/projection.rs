//! Translation of contract automata into communicating systems.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::automaton::ContractAutomaton;
use crate::cfsm::{CfsmAction, Channel, CommunicatingMachine, CommunicatingSystem, Endpoint, Finality};
use crate::label::{ActionVector, Classification};

/// What participant `p` does when the automaton fires `v`; `None` when it is
/// not involved.
pub fn translate_action(v: &ActionVector, p: usize) -> Option<CfsmAction> {
    use Endpoint::{Environment, Participant};
    match v.classification() {
        Classification::Match {
            name,
            offerer,
            requester,
        } => {
            let ch = Channel::between(offerer, requester);
            if p == offerer {
                Some(CfsmAction::send(ch, name))
            } else if p == requester {
                Some(CfsmAction::receive(ch, name))
            } else {
                None
            }
        }
        Classification::Offer { name, offerer } if p == offerer => {
            Some(CfsmAction::send(Channel::new(Participant(offerer), Environment), name))
        }
        Classification::Request { name, requester } if p == requester => {
            Some(CfsmAction::receive(Channel::new(Environment, Participant(requester)), name))
        }
        _ => None,
    }
}

/// One machine per participant, built from the local components of `a`'s
/// states and trimmed to locally reachable states. Final configurations are
/// exactly `a`'s accepting vectors.
pub fn project(a: &ContractAutomaton) -> CommunicatingSystem {
    let machines = (0..a.rank()).map(|p| project_machine(a, p)).collect();
    let finality = Finality::Vector(
        a.accepting()
            .iter()
            .map(|&s| a.state(s).components().to_vec())
            .collect(),
    );
    CommunicatingSystem::new(a.participant_names(), machines, finality)
        .expect("projection of a valid automaton is a valid system")
}

fn project_machine(a: &ContractAutomaton, p: usize) -> CommunicatingMachine {
    let local = |s| a.state(s).component(p).to_owned();
    let states: BTreeSet<String> = (0..a.num_states()).map(|i| local(crate::automaton::StateId(i))).collect();
    let accepting: BTreeSet<String> = a.accepting().iter().map(|&s| local(s)).collect();
    let transitions = a.transitions().iter().filter_map(|t| {
        translate_action(&t.action, p).map(|act| (local(t.source), act, local(t.target)))
    });
    CommunicatingMachine::new(states, &local(a.initial()), accepting, transitions)
        .expect("local states of a valid automaton are valid")
        .trimmed()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("action vector {vector} at position {position} has no translation")]
pub struct UndefinedTranslation {
    pub position: usize,
    pub vector: String,
}

/// Word translation: a match becomes its send followed by its receive, a
/// lone offer or request its single environment action.
pub fn translate_word(phi: &[ActionVector]) -> Result<Vec<CfsmAction>, UndefinedTranslation> {
    let mut out = Vec::with_capacity(phi.len() * 2);
    for (k, v) in phi.iter().enumerate() {
        let undefined = || UndefinedTranslation {
            position: k + 1,
            vector: v.to_string(),
        };
        match v.classification() {
            Classification::Match { offerer, requester, .. } => {
                out.push(translate_action(v, offerer).ok_or_else(undefined)?);
                out.push(translate_action(v, requester).ok_or_else(undefined)?);
            }
            Classification::Offer { offerer: i, .. } | Classification::Request { requester: i, .. } => {
                out.push(translate_action(v, i).ok_or_else(undefined)?);
            }
            Classification::Invalid => return Err(undefined()),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use crate::synthesis::mpc;
    use crate::product;
    use proptest::prelude::*;

    fn av(s: &str) -> ActionVector {
        s.parse().unwrap()
    }

    fn names(n: usize) -> Vec<String> {
        crate::automaton::default_participant_names(n)
    }

    fn show(m: &CommunicatingMachine, n: usize) -> BTreeSet<String> {
        m.transitions()
            .iter()
            .map(|t| format!("{} {} {}", m.state(t.source), t.action.render(&names(n)), m.state(t.target)))
            .collect()
    }

    #[test]
    fn translate_action_table() {
        let v = av("(!a,?a,-)");
        let r = |p| translate_action(&v, p).map(|a| a.render(&names(3)));
        assert_eq!(r(0).as_deref(), Some("AB!a"));
        assert_eq!(r(1).as_deref(), Some("AB?a"));
        assert_eq!(r(2), None);
        let offer = av("(!b,-)");
        assert_eq!(translate_action(&offer, 0).unwrap().render(&names(2)), "A-!b");
        let req = av("(-,-,?c)");
        assert_eq!(translate_action(&req, 2).unwrap().render(&names(3)), "-C?c");
        assert_eq!(translate_action(&req, 0), None);
    }

    #[test]
    fn relay_word() {
        let phi = [av("(!a,?a,-)"), av("(-,?c,!c)"), av("(-,!ok,?ok)")];
        let w = translate_word(&phi).unwrap();
        assert_eq!(
            crate::cfsm::render_trace(&w, &names(3)),
            "AB!a,AB?a,CB!c,CB?c,BC!ok,BC?ok"
        );
        assert!(translate_word(&[]).unwrap().is_empty());
        let one = translate_word(&[av("(!b,-,?b)")]).unwrap();
        assert_eq!(crate::cfsm::render_trace(&one, &names(3)), "AC!b,AC?b");
    }

    #[test]
    fn branching_gap_machines_as_drawn() {
        let sys = project(&mpc(&product(&samples::branching_gap()).unwrap()));
        let [a, b, c] = [0, 1, 2].map(|p| show(&sys.machines()[p], 3));
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(
            a,
            set(&["q0_1 AB!a q1_1", "q0_1 AC!b q2_1", "q2_1 AB!a q1_1", "q1_1 AB!a q1_1"])
        );
        assert_eq!(
            b,
            set(&["q0_2 BC!c q2_2", "q2_2 AB?a q1_2", "q0_2 AB?a q1_2", "q1_2 AB?a q1_2"])
        );
        assert_eq!(
            c,
            set(&["q0_3 AC?b q1_3", "q0_3 BC?c q3_3", "q1_3 BC?c q2_3", "q3_3 AC?b q2_3"])
        );
        assert!(!sys.uses_environment());
    }

    #[test]
    fn four_party_machines() {
        let sys = project(&mpc(&product(&samples::four_party()).unwrap()));
        let labels = |p: usize| -> BTreeSet<String> {
            sys.machines()[p].transitions().iter().map(|t| sys.render(&t.action)).collect()
        };
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(labels(0), set(&["AC!a", "AD!a"]));
        assert_eq!(labels(1), set(&["BC!a", "BD!a"]));
        assert_eq!(labels(2), set(&["AC?a", "BC?a"]));
        assert_eq!(labels(3), set(&["AD?a", "BD?a"]));
    }

    #[test]
    fn empty_controller_projects_to_inert_machines() {
        let lonely = [
            ContractAutomaton::principal("q0", &["q1"], &[("q0", crate::Label::offer("a"), "q1")]).unwrap(),
            ContractAutomaton::principal("q0", &["q1"], &[("q0", crate::Label::offer("b"), "q1")]).unwrap(),
        ];
        let sys = project(&mpc(&product(&lonely).unwrap()));
        for m in sys.machines() {
            assert_eq!(m.states().len(), 1);
            assert!(m.transitions().is_empty());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn match_projection_properties(seed in any::<u64>(), rank in 2usize..4) {
            let ops = crate::oracle::generate_random_system(
                &crate::oracle::GeneratorParams { rank, max_states: 3, max_actions: 3 },
                seed,
            );
            let p = product(&ops).unwrap();
            let k = mpc(&p);
            let sys = project(&k);
            prop_assert!(!sys.uses_environment());
            for t in k.transitions() {
                let involved: Vec<_> = (0..rank).filter_map(|q| translate_action(&t.action, q)).collect();
                prop_assert_eq!(involved.len(), 2);
                prop_assert_eq!(involved[0].channel, involved[1].channel);
                prop_assert_eq!(&involved[0].name, &involved[1].name);
                prop_assert_ne!(involved[0].polarity, involved[1].polarity);
            }
            // word length and alternation on every accepted word of p up to length 4
            for w in crate::oracle::accepted_words(&p, 4) {
                let tr = translate_word(&w).unwrap();
                let matches = w.iter().filter(|v| v.is_match()).count();
                prop_assert_eq!(tr.len(), 2 * matches + (w.len() - matches));
                if matches == w.len() {
                    for pair in tr.chunks(2) {
                        prop_assert_eq!(pair[1].clone(), pair[0].dual());
                        prop_assert!(pair[0].is_send());
                    }
                }
            }
        }
    }
}
