//! Decision procedures on contract automata.

use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::{ContractAutomaton, StateId, StateVector};
use crate::label::{ActionVector, Label, ShapeError};
use crate::synthesis::StateTransition;

/// Index of the offering participant of a match or offer action.
pub fn snd(v: &ActionVector) -> Result<usize, ShapeError> {
    v.sender()
}

/// Index of the requesting participant of a match or request action.
pub fn rcv(v: &ActionVector) -> Result<usize, ShapeError> {
    v.receiver()
}

/// Every accepted word is a non-empty sequence of matches. Decided on the
/// trim part (reachable and co-reachable): it must contain only matches.
pub fn is_strongly_safe(a: &ContractAutomaton) -> bool {
    strong_safety_witness(a).is_none()
}

/// A non-match transition lying on some accepting path, if any.
pub fn strong_safety_witness(a: &ContractAutomaton) -> Option<StateTransition> {
    let reach = a.reachable();
    let co = a.coreachable_by(|_| true);
    a.transitions()
        .iter()
        .find(|t| {
            !t.action.is_match()
                && reach.contains(&t.source)
                && co.contains(&t.target)
        })
        .map(|t| StateTransition::of(a, t))
}

/// Some accepting state is reachable through match transitions only.
pub fn admits_strong_agreement(a: &ContractAutomaton) -> bool {
    strong_agreement_witness(a).is_some()
}

/// A shortest all-match accepted word, if one exists.
pub fn strong_agreement_witness(a: &ContractAutomaton) -> Option<Vec<ActionVector>> {
    let mut parent: BTreeMap<StateId, Option<(StateId, ActionVector)>> =
        BTreeMap::from([(a.initial(), None)]);
    let mut queue = std::collections::VecDeque::from([a.initial()]);
    while let Some(s) = queue.pop_front() {
        if a.is_accepting(s) {
            let mut word = Vec::new();
            let mut cur = s;
            while let Some(Some((p, act))) = parent.get(&cur) {
                word.push(act.clone());
                cur = *p;
            }
            word.reverse();
            return Some(word);
        }
        for t in a.outgoing(s).filter(|t| t.action.is_match()) {
            if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(t.target) {
                e.insert(Some((s, t.action.clone())));
                queue.push_back(t.target);
            }
        }
    }
    None
}

/// A violation of the branching condition: `action` is enabled at
/// `enabled_at`, the sender is in the same local state at `missing_at`, but
/// `action` is not enabled there.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct BranchingWitness {
    pub enabled_at: StateVector,
    pub missing_at: StateVector,
    pub action: ActionVector,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchingReport {
    pub holds: bool,
    pub witness: Option<BranchingWitness>,
}

/// Checks that every match enabled somewhere is enabled at every reachable
/// state where its sender is in the same local state.
///
/// Indexed by (sender, sender's local state); the witness returned on
/// failure is the smallest `(enabled_at, missing_at, action)` triple.
pub fn branching_condition(a: &ContractAutomaton) -> BranchingReport {
    let reach = a.reachable();
    // (sender, local state) -> match action -> smallest state enabling it
    let mut required: BTreeMap<(usize, &str), BTreeMap<&ActionVector, StateId>> = BTreeMap::new();
    for &s in &reach {
        for t in a.outgoing(s).filter(|t| t.action.is_match()) {
            let i = t.action.sender().expect("match has a sender");
            required
                .entry((i, a.state(s).component(i)))
                .or_default()
                .entry(&t.action)
                .or_insert(s);
        }
    }
    let mut best: Option<(StateId, StateId, &ActionVector)> = None;
    for &s in &reach {
        let q = a.state(s);
        for i in 0..a.rank() {
            let Some(actions) = required.get(&(i, q.component(i))) else {
                continue;
            };
            for (&action, &first) in actions {
                if a.enables(s, action) {
                    continue;
                }
                let cand = (first, s, action);
                if best.as_ref().is_none_or(|b| cand < *b) {
                    best = Some(cand);
                }
            }
        }
    }
    BranchingReport {
        holds: best.is_none(),
        witness: best.map(|(q1, q2, action)| BranchingWitness {
            enabled_at: a.state(q1).clone(),
            missing_at: a.state(q2).clone(),
            action: action.clone(),
        }),
    }
}

/// States where some participant can both offer and request.
pub fn mixed_choice_states(a: &ContractAutomaton) -> BTreeSet<StateVector> {
    (0..a.num_states())
        .map(StateId)
        .filter(|&s| {
            (0..a.rank()).any(|i| {
                let labels: Vec<&Label> = a.outgoing(s).map(|t| &t.action.labels()[i]).collect();
                labels.iter().any(|l| matches!(l, Label::Offer(_)))
                    && labels.iter().any(|l| matches!(l, Label::Request(_)))
            })
        })
        .map(|s| a.state(s).clone())
        .collect()
}
