//! Product of contract automata.
//!
//! The product runs all operands side by side. Whenever two operands can
//! fire complementary actions from the current composite state they must
//! synchronise: the product contains the match, and neither lone action.
//! Actions nobody can complement are interleaved as they are.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::automaton::{ContractAutomaton, StateId, StateVector, ValidationError};
use crate::label::{complementary, ActionVector, Label};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProductError {
    #[error("product needs at least one operand")]
    EmptyOperands,
    #[error("product is not a valid contract automaton: {0}")]
    Invalid(#[from] ValidationError),
}

/// Composes `operands` in one n-ary pass. Only the part reachable from the
/// initial state is built.
pub fn product(operands: &[ContractAutomaton]) -> Result<ContractAutomaton, ProductError> {
    if operands.is_empty() {
        return Err(ProductError::EmptyOperands);
    }
    let ranks: Vec<usize> = operands.iter().map(ContractAutomaton::rank).collect();
    let rank: usize = ranks.iter().sum();
    let offsets: Vec<usize> = ranks
        .iter()
        .scan(0, |acc, r| {
            let o = *acc;
            *acc += r;
            Some(o)
        })
        .collect();

    let embed = |op: usize, action: &ActionVector| -> Vec<Label> {
        let mut labels = vec![Label::Idle; rank];
        labels[offsets[op]..offsets[op] + ranks[op]].clone_from_slice(action.labels());
        labels
    };

    let start: Vec<StateId> = operands.iter().map(ContractAutomaton::initial).collect();
    let mut seen: HashMap<Vec<StateId>, ()> = HashMap::from([(start.clone(), ())]);
    let mut queue = VecDeque::from([start.clone()]);
    let mut states = Vec::new();
    let mut transitions = Vec::new();

    while let Some(cur) = queue.pop_front() {
        let enabled: Vec<Vec<_>> = operands
            .iter()
            .zip(&cur)
            .map(|(op, &s)| op.outgoing(s).collect())
            .collect();
        let mut moves: Vec<(Vec<Label>, Vec<StateId>)> = Vec::new();

        for (i, ti) in enabled.iter().enumerate() {
            for t in ti {
                let mut complemented = false;
                for (j, tj) in enabled.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    for u in tj.iter().filter(|u| complementary(&t.action, &u.action)) {
                        complemented = true;
                        // each unordered pair is emitted once, from its smaller index
                        if i < j {
                            let mut labels = embed(i, &t.action);
                            labels[offsets[j]..offsets[j] + ranks[j]]
                                .clone_from_slice(u.action.labels());
                            let mut next = cur.clone();
                            next[i] = t.target;
                            next[j] = u.target;
                            moves.push((labels, next));
                        }
                    }
                }
                if !complemented {
                    let mut next = cur.clone();
                    next[i] = t.target;
                    moves.push((embed(i, &t.action), next));
                }
            }
        }

        let here = compose_state(operands, &cur);
        for (labels, next) in moves {
            transitions.push((
                here.clone(),
                ActionVector::from_labels_unchecked(labels),
                compose_state(operands, &next),
            ));
            if seen.insert(next.clone(), ()).is_none() {
                queue.push_back(next);
            }
        }
        states.push((here, cur));
    }

    let accepting: BTreeSet<StateVector> = states
        .iter()
        .filter(|(_, ids)| {
            operands
                .iter()
                .zip(ids)
                .all(|(op, &s)| op.is_accepting(s))
        })
        .map(|(sv, _)| sv.clone())
        .collect();
    let initial = compose_state(operands, &start);
    let result = ContractAutomaton::new(
        rank,
        states.into_iter().map(|(sv, _)| sv),
        initial,
        accepting,
        transitions,
    )?;

    if operands.iter().all(|op| op.declared_participants().is_some()) {
        let names = operands
            .iter()
            .flat_map(|op| op.declared_participants().unwrap().iter().cloned())
            .collect();
        if let Ok(named) = result.clone().with_participants(names) {
            return Ok(named);
        }
    }
    Ok(result)
}

fn compose_state(operands: &[ContractAutomaton], ids: &[StateId]) -> StateVector {
    StateVector::concat(operands.iter().zip(ids).map(|(op, &s)| op.state(s)))
}
