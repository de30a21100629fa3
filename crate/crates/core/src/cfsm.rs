//! Communicating finite-state machines and systems of them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::label::{is_identifier, ActionName};

/// One end of a channel: a participant (by position) or the anonymous
/// environment `-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Participant(usize),
    Environment,
}

impl Endpoint {
    pub fn index(self) -> Option<usize> {
        match self {
            Endpoint::Participant(i) => Some(i),
            Endpoint::Environment => None,
        }
    }

    fn render(self, names: &[String]) -> &str {
        match self {
            Endpoint::Participant(i) => names.get(i).map_or("?", String::as_str),
            Endpoint::Environment => "-",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Channel {
    pub from: Endpoint,
    pub to: Endpoint,
}

impl Channel {
    pub fn new(from: Endpoint, to: Endpoint) -> Self {
        Channel { from, to }
    }

    pub fn between(from: usize, to: usize) -> Self {
        Channel::new(Endpoint::Participant(from), Endpoint::Participant(to))
    }

    pub fn touches_environment(&self) -> bool {
        self.from == Endpoint::Environment || self.to == Endpoint::Environment
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Send,
    Receive,
}

/// `pq!a` (fired by `p`) or `pq?a` (fired by `q`).
///
/// The derived order (sender, receiver, send before receive, name) is the
/// canonical order used to break ties during exploration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CfsmAction {
    pub channel: Channel,
    pub polarity: Polarity,
    pub name: ActionName,
}

impl CfsmAction {
    pub fn send(channel: Channel, name: impl Into<ActionName>) -> Self {
        CfsmAction {
            channel,
            polarity: Polarity::Send,
            name: name.into(),
        }
    }

    pub fn receive(channel: Channel, name: impl Into<ActionName>) -> Self {
        CfsmAction {
            channel,
            polarity: Polarity::Receive,
            name: name.into(),
        }
    }

    /// The endpoint that fires this action.
    pub fn subject(&self) -> Endpoint {
        match self.polarity {
            Polarity::Send => self.channel.from,
            Polarity::Receive => self.channel.to,
        }
    }

    pub fn is_send(&self) -> bool {
        self.polarity == Polarity::Send
    }

    /// The same message seen from the other end.
    pub fn dual(&self) -> Self {
        CfsmAction {
            channel: self.channel,
            polarity: match self.polarity {
                Polarity::Send => Polarity::Receive,
                Polarity::Receive => Polarity::Send,
            },
            name: self.name.clone(),
        }
    }

    /// Renders as `AB!a` using the given participant names.
    pub fn render(&self, names: &[String]) -> String {
        let op = match self.polarity {
            Polarity::Send => '!',
            Polarity::Receive => '?',
        };
        format!(
            "{}{}{}{}",
            self.channel.from.render(names),
            self.channel.to.render(names),
            op,
            self.name
        )
    }
}

pub fn render_trace(trace: &[CfsmAction], names: &[String]) -> String {
    trace
        .iter()
        .map(|a| a.render(names))
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MachineTransition {
    pub source: usize,
    pub action: CfsmAction,
    pub target: usize,
}

/// A finite automaton over send/receive actions. States are kept sorted and
/// addressed by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunicatingMachine {
    states: Vec<String>,
    initial: usize,
    accepting: BTreeSet<usize>,
    transitions: Vec<MachineTransition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("machine state name {0:?} is not an identifier")]
    BadStateName(String),
    #[error("machine transition mentions undeclared state {0:?}")]
    UndeclaredState(String),
    #[error("machine initial state {0:?} is not declared")]
    UndeclaredInitial(String),
    #[error("machine accepting state {0:?} is not declared")]
    UndeclaredAccepting(String),
}

impl CommunicatingMachine {
    pub fn new(
        states: impl IntoIterator<Item = String>,
        initial: &str,
        accepting: impl IntoIterator<Item = String>,
        transitions: impl IntoIterator<Item = (String, CfsmAction, String)>,
    ) -> Result<Self, MachineError> {
        let states: Vec<String> = states
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if let Some(bad) = states.iter().find(|s| !is_state_name(s)) {
            return Err(MachineError::BadStateName(bad.clone()));
        }
        let id = |s: &str| states.binary_search_by(|x| x.as_str().cmp(s)).ok();
        let initial = id(initial).ok_or_else(|| MachineError::UndeclaredInitial(initial.into()))?;
        let accepting = accepting
            .into_iter()
            .map(|s| id(&s).ok_or(MachineError::UndeclaredAccepting(s)))
            .collect::<Result<BTreeSet<_>, _>>()?;
        let mut ts = BTreeSet::new();
        for (from, action, to) in transitions {
            let source = id(&from).ok_or(MachineError::UndeclaredState(from))?;
            let target = id(&to).ok_or(MachineError::UndeclaredState(to))?;
            ts.insert(MachineTransition {
                source,
                action,
                target,
            });
        }
        Ok(CommunicatingMachine {
            states,
            initial,
            accepting,
            transitions: ts.into_iter().collect(),
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &str {
        &self.states[i]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.binary_search_by(|x| x.as_str().cmp(name)).ok()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn accepting(&self) -> &BTreeSet<usize> {
        &self.accepting
    }

    pub fn transitions(&self) -> &[MachineTransition] {
        &self.transitions
    }

    pub fn outgoing(&self, state: usize) -> impl Iterator<Item = &MachineTransition> + '_ {
        let lo = self.transitions.partition_point(|t| t.source < state);
        self.transitions[lo..].iter().take_while(move |t| t.source == state)
    }

    /// Same source and action never lead to different targets.
    pub fn is_deterministic(&self) -> bool {
        self.transitions
            .windows(2)
            .all(|w| (w[0].source, &w[0].action) != (w[1].source, &w[1].action))
    }

    /// Copy without states unreachable from the initial one.
    pub fn trimmed(&self) -> CommunicatingMachine {
        let mut seen = BTreeSet::from([self.initial]);
        let mut stack = vec![self.initial];
        while let Some(s) = stack.pop() {
            for t in self.outgoing(s) {
                if seen.insert(t.target) {
                    stack.push(t.target);
                }
            }
        }
        let name = |i: usize| self.states[i].clone();
        CommunicatingMachine::new(
            seen.iter().map(|&i| name(i)),
            &self.states[self.initial],
            self.accepting.iter().filter(|s| seen.contains(s)).map(|&i| name(i)),
            self.transitions
                .iter()
                .filter(|t| seen.contains(&t.source))
                .map(|t| (name(t.source), t.action.clone(), name(t.target))),
        )
        .expect("trimmed copy of a valid machine is valid")
    }
}

pub(crate) fn is_state_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '\''))
}

/// How final configurations are recognised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finality {
    /// Every machine sits in one of its own accepting states.
    Local,
    /// The control vector (by local state names) is one of these.
    Vector(BTreeSet<Vec<String>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("communicating system needs at least one participant")]
    NoParticipants,
    #[error("{machines} machines for {participants} participants")]
    MachineCount { participants: usize, machines: usize },
    #[error("participant name {0:?} is not an identifier or is repeated")]
    BadParticipant(String),
    #[error("machine {machine} fires an action on channel {channel} it is not the subject of")]
    WrongSubject { machine: String, channel: String },
    #[error("channel {0} is not between two distinct participants")]
    BadChannel(String),
    #[error("accepting vector has {found} components, expected {expected}")]
    FinalityRank { expected: usize, found: usize },
}

/// Machines indexed like `participants`; channels are all ordered pairs of
/// distinct participants, plus `-` ends where machines use them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunicatingSystem {
    participants: Vec<String>,
    machines: Vec<CommunicatingMachine>,
    finality: Finality,
    /// `Finality::Vector` translated to local state indices; vectors naming
    /// states absent from a machine can never be reached and are dropped.
    final_vectors: BTreeSet<Vec<usize>>,
}

impl CommunicatingSystem {
    pub fn new(
        participants: Vec<String>,
        machines: Vec<CommunicatingMachine>,
        finality: Finality,
    ) -> Result<Self, SystemError> {
        if participants.is_empty() {
            return Err(SystemError::NoParticipants);
        }
        if machines.len() != participants.len() {
            return Err(SystemError::MachineCount {
                participants: participants.len(),
                machines: machines.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for p in &participants {
            if !is_identifier(p) || !seen.insert(p.as_str()) {
                return Err(SystemError::BadParticipant(p.clone()));
            }
        }
        let n = participants.len();
        for (p, m) in machines.iter().enumerate() {
            for t in m.transitions() {
                let ch = t.action.channel;
                let in_range = |e: Endpoint| e.index().is_none_or(|i| i < n);
                if ch.from == ch.to || !in_range(ch.from) || !in_range(ch.to) {
                    return Err(SystemError::BadChannel(format!("{:?}", ch)));
                }
                if t.action.subject() != Endpoint::Participant(p) {
                    return Err(SystemError::WrongSubject {
                        machine: participants[p].clone(),
                        channel: t.action.render(&participants),
                    });
                }
            }
        }
        let mut final_vectors = BTreeSet::new();
        if let Finality::Vector(vs) = &finality {
            for v in vs {
                if v.len() != n {
                    return Err(SystemError::FinalityRank {
                        expected: n,
                        found: v.len(),
                    });
                }
                let ids: Option<Vec<usize>> =
                    v.iter().zip(&machines).map(|(s, m)| m.state_index(s)).collect();
                final_vectors.extend(ids);
            }
        }
        Ok(CommunicatingSystem {
            participants,
            machines,
            finality,
            final_vectors,
        })
    }

    pub fn participants(&self) -> &[String] {
        &self.participants
    }

    pub fn machines(&self) -> &[CommunicatingMachine] {
        &self.machines
    }

    pub fn finality(&self) -> &Finality {
        &self.finality
    }

    pub fn participant_index(&self, name: &str) -> Option<usize> {
        self.participants.iter().position(|p| p == name)
    }

    pub fn initial_control(&self) -> Vec<usize> {
        self.machines.iter().map(CommunicatingMachine::initial).collect()
    }

    pub fn is_accepting_control(&self, control: &[usize]) -> bool {
        match self.finality {
            Finality::Local => self
                .machines
                .iter()
                .zip(control)
                .all(|(m, s)| m.accepting().contains(s)),
            Finality::Vector(_) => self.final_vectors.contains(control),
        }
    }

    pub fn uses_environment(&self) -> bool {
        self.machines
            .iter()
            .flat_map(|m| m.transitions())
            .any(|t| t.action.channel.touches_environment())
    }

    /// Channels between declared participants, in canonical order.
    pub fn channels(&self) -> Vec<Channel> {
        let n = self.participants.len();
        (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| Channel::between(p, q)))
            .collect()
    }

    pub fn render(&self, action: &CfsmAction) -> String {
        action.render(&self.participants)
    }

    pub fn render_trace(&self, trace: &[CfsmAction]) -> String {
        render_trace(trace, &self.participants)
    }

    /// Local state names of a control vector.
    pub fn control_names(&self, control: &[usize]) -> Vec<String> {
        self.machines
            .iter()
            .zip(control)
            .map(|(m, &s)| m.state(s).to_owned())
            .collect()
    }

    /// Messages per channel name, used for text reports.
    pub fn describe_buffers(&self, buffers: &BTreeMap<Channel, Vec<ActionName>>) -> Vec<String> {
        buffers
            .iter()
            .map(|(ch, w)| {
                let names: Vec<&str> = w.iter().map(ActionName::as_str).collect();
                format!(
                    "{}{}={}",
                    ch.from.render(&self.participants),
                    ch.to.render(&self.participants),
                    names.join(".")
                )
            })
            .collect()
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Participant(i) => write!(f, "{}", i + 1),
            Endpoint::Environment => f.write_str("-"),
        }
    }
}
