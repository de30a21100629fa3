//! The contract automaton data model.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::label::{complementary, is_identifier, ActionVector, Label};

/// A tuple of local state names, one per principal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateVector(Vec<String>);

impl StateVector {
    pub fn new<S: Into<String>>(components: impl IntoIterator<Item = S>) -> Self {
        StateVector(components.into_iter().map(Into::into).collect())
    }

    pub fn components(&self) -> &[String] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn component(&self, i: usize) -> &str {
        &self.0[i]
    }

    pub(crate) fn concat<'a>(parts: impl IntoIterator<Item = &'a StateVector>) -> Self {
        StateVector(parts.into_iter().flat_map(|p| p.0.iter().cloned()).collect())
    }
}

impl From<&[&str]> for StateVector {
    fn from(parts: &[&str]) -> Self {
        StateVector::new(parts.iter().copied())
    }
}

impl<const N: usize> From<[&str; N]> for StateVector {
    fn from(parts: [&str; N]) -> Self {
        StateVector::new(parts)
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0.join(","))
    }
}

/// Index of a state inside one automaton. Ids follow the sorted order of the
/// state vectors, so comparing ids compares states lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub source: StateId,
    pub action: ActionVector,
    pub target: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("rank must be positive")]
    ZeroRank,
    #[error("state {state} has {found} components but the automaton has rank {rank}")]
    StateRank {
        state: String,
        found: usize,
        rank: usize,
    },
    #[error("state component `{0}` is not a valid state name")]
    BadStateName(String),
    #[error("action vector {action} has length {found} but the automaton has rank {rank}")]
    ActionRank {
        action: String,
        found: usize,
        rank: usize,
    },
    #[error("action name `{0}` is not an identifier")]
    BadActionName(String),
    #[error("transition refers to undeclared state {0}")]
    UndeclaredState(String),
    #[error("initial state {0} is not declared")]
    UndeclaredInitial(String),
    #[error("accepting state {0} is not declared")]
    UndeclaredAccepting(String),
    #[error("initial state must not be accepting")]
    InitialAccepting,
    #[error("participant {index} is idle in {action} but moves from {from} to {to}")]
    IdleMoved {
        index: usize,
        action: String,
        from: String,
        to: String,
    },
    #[error("automaton is not deterministic: {from} --{action}--> both {to1} and {to2}")]
    Nondeterministic {
        from: String,
        action: String,
        to1: String,
        to2: String,
    },
    #[error("expected {rank} participant names, got {found}")]
    ParticipantCount { rank: usize, found: usize },
    #[error("participant name `{0}` is invalid or repeated")]
    BadParticipant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("principal check requires rank 1, found rank {0}")]
pub struct RankError(pub usize);

/// A deterministic contract automaton of rank `n`.
///
/// States and transitions are kept sorted; the state set may contain states
/// unreachable from the initial one (principal files sometimes do).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractAutomaton {
    rank: usize,
    participants: Option<Vec<String>>,
    states: Vec<StateVector>,
    index: BTreeMap<StateVector, StateId>,
    initial: StateId,
    accepting: BTreeSet<StateId>,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
}

impl ContractAutomaton {
    /// Builds and validates an automaton.
    pub fn new(
        rank: usize,
        states: impl IntoIterator<Item = StateVector>,
        initial: StateVector,
        accepting: impl IntoIterator<Item = StateVector>,
        transitions: impl IntoIterator<Item = (StateVector, ActionVector, StateVector)>,
    ) -> Result<Self, ValidationError> {
        if rank == 0 {
            return Err(ValidationError::ZeroRank);
        }
        let states: BTreeSet<StateVector> = states.into_iter().collect();
        for s in &states {
            if s.rank() != rank {
                return Err(ValidationError::StateRank {
                    state: s.to_string(),
                    found: s.rank(),
                    rank,
                });
            }
            if let Some(bad) = s.components().iter().find(|c| !is_state_name(c)) {
                return Err(ValidationError::BadStateName(bad.clone()));
            }
        }
        let states: Vec<StateVector> = states.into_iter().collect();
        let index: BTreeMap<StateVector, StateId> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), StateId(i)))
            .collect();
        let initial_id = *index
            .get(&initial)
            .ok_or_else(|| ValidationError::UndeclaredInitial(initial.to_string()))?;
        let mut accepting_ids = BTreeSet::new();
        for f in accepting {
            let id = index
                .get(&f)
                .ok_or_else(|| ValidationError::UndeclaredAccepting(f.to_string()))?;
            accepting_ids.insert(*id);
        }
        if accepting_ids.contains(&initial_id) {
            return Err(ValidationError::InitialAccepting);
        }

        let mut ts = BTreeSet::new();
        for (from, action, to) in transitions {
            let lookup = |s: &StateVector| {
                index
                    .get(s)
                    .copied()
                    .ok_or_else(|| ValidationError::UndeclaredState(s.to_string()))
            };
            if action.rank() != rank {
                return Err(ValidationError::ActionRank {
                    action: action.to_string(),
                    found: action.rank(),
                    rank,
                });
            }
            if let Some(n) = action.labels().iter().filter_map(Label::name).find(|n| !n.is_well_formed()) {
                return Err(ValidationError::BadActionName(n.to_string()));
            }
            let source = lookup(&from)?;
            let target = lookup(&to)?;
            for (i, l) in action.labels().iter().enumerate() {
                if l.is_idle() && from.component(i) != to.component(i) {
                    return Err(ValidationError::IdleMoved {
                        index: i,
                        action: action.to_string(),
                        from: from.to_string(),
                        to: to.to_string(),
                    });
                }
            }
            ts.insert(Transition {
                source,
                action,
                target,
            });
        }
        let transitions: Vec<Transition> = ts.into_iter().collect();
        for w in transitions.windows(2) {
            if w[0].source == w[1].source && w[0].action == w[1].action {
                return Err(ValidationError::Nondeterministic {
                    from: states[w[0].source.0].to_string(),
                    action: w[0].action.to_string(),
                    to1: states[w[0].target.0].to_string(),
                    to2: states[w[1].target.0].to_string(),
                });
            }
        }
        let mut outgoing = vec![Vec::new(); states.len()];
        for (i, t) in transitions.iter().enumerate() {
            outgoing[t.source.0].push(i);
        }
        Ok(ContractAutomaton {
            rank,
            participants: None,
            states,
            index,
            initial: initial_id,
            accepting: accepting_ids,
            transitions,
            outgoing,
        })
    }

    /// Rank-1 automaton from `(from, label, to)` triples with plain state
    /// names. States are those mentioned plus the initial one.
    pub fn principal(
        initial: &str,
        accepting: &[&str],
        transitions: &[(&str, Label, &str)],
    ) -> Result<Self, ValidationError> {
        let mut states: BTreeSet<StateVector> = BTreeSet::new();
        states.insert(StateVector::new([initial]));
        states.extend(accepting.iter().map(|s| StateVector::new([*s])));
        let mut ts = Vec::new();
        for (from, label, to) in transitions {
            let action = ActionVector::new(vec![label.clone()]).map_err(|_| {
                ValidationError::ActionRank {
                    action: label.to_string(),
                    found: 1,
                    rank: 1,
                }
            })?;
            states.insert(StateVector::new([*from]));
            states.insert(StateVector::new([*to]));
            ts.push((StateVector::new([*from]), action, StateVector::new([*to])));
        }
        ContractAutomaton::new(
            1,
            states,
            StateVector::new([initial]),
            accepting.iter().map(|s| StateVector::new([*s])),
            ts,
        )
    }

    /// Attaches participant names (one per rank position).
    pub fn with_participants(mut self, names: Vec<String>) -> Result<Self, ValidationError> {
        if names.len() != self.rank {
            return Err(ValidationError::ParticipantCount {
                rank: self.rank,
                found: names.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if !is_identifier(n) || !seen.insert(n.as_str()) {
                return Err(ValidationError::BadParticipant(n.clone()));
            }
        }
        self.participants = Some(names);
        Ok(self)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn declared_participants(&self) -> Option<&[String]> {
        self.participants.as_deref()
    }

    /// Declared names, or `A, B, C, …` (`P1..Pn` above rank 26).
    pub fn participant_names(&self) -> Vec<String> {
        self.participants
            .clone()
            .unwrap_or_else(|| default_participant_names(self.rank))
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> &StateVector {
        &self.states[id.0]
    }

    pub fn state_id(&self, s: &StateVector) -> Option<StateId> {
        self.index.get(s).copied()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn initial_state(&self) -> &StateVector {
        self.state(self.initial)
    }

    pub fn accepting(&self) -> &BTreeSet<StateId> {
        &self.accepting
    }

    pub fn is_accepting(&self, id: StateId) -> bool {
        self.accepting.contains(&id)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn outgoing(&self, id: StateId) -> impl Iterator<Item = &Transition> + '_ {
        self.outgoing[id.0].iter().map(move |&i| &self.transitions[i])
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Target of the transition from `from` labelled `action`, if any.
    pub fn successor(&self, from: StateId, action: &ActionVector) -> Option<StateId> {
        self.outgoing(from)
            .find(|t| &t.action == action)
            .map(|t| t.target)
    }

    pub fn enables(&self, from: StateId, action: &ActionVector) -> bool {
        self.successor(from, action).is_some()
    }

    /// `(from, action, to)` with states spelled out.
    pub fn has_transition(&self, from: &StateVector, action: &ActionVector, to: &StateVector) -> bool {
        match (self.state_id(from), self.state_id(to)) {
            (Some(f), Some(t)) => self.successor(f, action) == Some(t),
            _ => false,
        }
    }

    /// Whether the word drives the automaton from its initial state into an
    /// accepting state.
    pub fn accepts(&self, word: &[ActionVector]) -> bool {
        let mut cur = self.initial;
        for a in word {
            match self.successor(cur, a) {
                Some(next) => cur = next,
                None => return false,
            }
        }
        self.is_accepting(cur)
    }

    /// States reachable from the initial one using transitions that pass
    /// `keep`.
    pub fn reachable_by(&self, keep: impl Fn(&Transition) -> bool) -> BTreeSet<StateId> {
        let mut seen = BTreeSet::from([self.initial]);
        let mut queue = VecDeque::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            for t in self.outgoing(s).filter(|t| keep(t)) {
                if seen.insert(t.target) {
                    queue.push_back(t.target);
                }
            }
        }
        seen
    }

    pub fn reachable(&self) -> BTreeSet<StateId> {
        self.reachable_by(|_| true)
    }

    /// States from which an accepting state is reachable via transitions
    /// passing `keep`.
    pub fn coreachable_by(&self, keep: impl Fn(&Transition) -> bool) -> BTreeSet<StateId> {
        let mut incoming: Vec<Vec<StateId>> = vec![Vec::new(); self.states.len()];
        for t in self.transitions.iter().filter(|t| keep(t)) {
            incoming[t.target.0].push(t.source);
        }
        let mut seen: BTreeSet<StateId> = self.accepting.clone();
        let mut queue: VecDeque<StateId> = seen.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            for &p in &incoming[s.0] {
                if seen.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Restriction to the given transitions, keeping only states reachable
    /// from the initial state through them.
    pub(crate) fn restrict(&self, keep: impl Fn(&Transition) -> bool) -> ContractAutomaton {
        let reach = self.reachable_by(&keep);
        let transitions: Vec<_> = self
            .transitions
            .iter()
            .filter(|t| reach.contains(&t.source) && keep(t))
            .map(|t| {
                (
                    self.state(t.source).clone(),
                    t.action.clone(),
                    self.state(t.target).clone(),
                )
            })
            .collect();
        let restricted = ContractAutomaton::new(
            self.rank,
            reach.iter().map(|&s| self.state(s).clone()),
            self.initial_state().clone(),
            self.accepting
                .iter()
                .filter(|s| reach.contains(s))
                .map(|&s| self.state(s).clone()),
            transitions,
        )
        .expect("restriction of a valid automaton is valid");
        ContractAutomaton {
            participants: self.participants.clone(),
            ..restricted
        }
    }

    /// Copy trimmed to the states reachable from the initial state.
    pub fn trim_unreachable(&self) -> ContractAutomaton {
        self.restrict(|_| true)
    }
}

fn is_state_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '\''))
}

pub fn default_participant_names(rank: usize) -> Vec<String> {
    if rank <= 26 {
        (0..rank).map(|i| ((b'A' + i as u8) as char).to_string()).collect()
    } else {
        (1..=rank).map(|i| format!("P{i}")).collect()
    }
}

/// A principal never carries two complementary labels.
pub fn validate_principal(a: &ContractAutomaton) -> Result<bool, RankError> {
    if a.rank() != 1 {
        return Err(RankError(a.rank()));
    }
    let ts = a.transitions();
    Ok(!ts
        .iter()
        .enumerate()
        .any(|(i, t1)| ts[i + 1..].iter().any(|t2| complementary(&t1.action, &t2.action))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    fn av(s: &str) -> ActionVector {
        s.parse().unwrap()
    }

    #[test]
    fn principal_property() {
        let [alice, bob, carol] = samples::toy_exchange();
        assert_eq!(validate_principal(&alice), Ok(true));
        assert_eq!(validate_principal(&bob), Ok(true));
        assert_eq!(validate_principal(&carol), Ok(true));
        let both = ContractAutomaton::principal(
            "q0",
            &["q2"],
            &[("q0", Label::offer("a"), "q1"), ("q1", Label::request("a"), "q2")],
        )
        .unwrap();
        assert_eq!(validate_principal(&both), Ok(false));
    }

    #[test]
    fn principal_check_needs_rank_one() {
        let prod = crate::product(&samples::toy_exchange()).unwrap();
        assert_eq!(validate_principal(&prod), Err(RankError(3)));
    }

    #[test]
    fn rejects_accepting_initial() {
        let err = ContractAutomaton::principal("q0", &["q0"], &[]).unwrap_err();
        assert_eq!(err, ValidationError::InitialAccepting);
        assert_eq!(err.to_string(), "initial state must not be accepting");
    }

    #[test]
    fn rejects_nondeterminism_and_idle_moves() {
        let err = ContractAutomaton::principal(
            "q0",
            &["q1"],
            &[("q0", Label::offer("a"), "q1"), ("q0", Label::offer("a"), "q2")],
        )
        .unwrap_err();
        assert!(matches!(err, ValidationError::Nondeterministic { .. }));

        let q0 = StateVector::from(["x", "y"]);
        let q1 = StateVector::from(["x2", "y2"]);
        let err = ContractAutomaton::new(
            2,
            [q0.clone(), q1.clone()],
            q0.clone(),
            [q1.clone()],
            [(q0, av("(!a,-)"), q1)],
        )
        .unwrap_err();
        assert!(matches!(err, ValidationError::IdleMoved { index: 1, .. }));
    }

    #[test]
    fn rejects_rank_mismatch() {
        let q0 = StateVector::from(["x"]);
        let err = ContractAutomaton::new(1, [q0.clone()], q0.clone(), [], [(q0.clone(), av("(!a,?a)"), q0)])
            .unwrap_err();
        assert!(matches!(err, ValidationError::ActionRank { found: 2, .. }));
    }

    #[test]
    fn accepts_words_of_the_toy_exchange() {
        let prod = crate::product(&samples::toy_exchange()).unwrap();
        assert!(prod.accepts(&[av("(!a,?a,-)"), av("(-,!b,?b)")]));
        assert!(prod.accepts(&[av("(!a,-,?a)"), av("(-,?a,-)"), av("(-,!b,-)")]));
        assert!(!prod.accepts(&[]));
        assert!(!prod.accepts(&[av("(!a,?a,-)")]));
        assert!(!prod.accepts(&[av("(!a,?a)")]));
    }

    #[test]
    fn default_names() {
        assert_eq!(default_participant_names(3), vec!["A", "B", "C"]);
        assert_eq!(default_participant_names(27)[26], "P27");
    }
}
