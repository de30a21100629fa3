//! File formats, trace syntax and DOT export.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{ContractAutomaton, StateVector};
use crate::cfsm::{
    CfsmAction, Channel, CommunicatingMachine, CommunicatingSystem, Endpoint, Finality, Polarity,
};
use crate::label::{ActionKind, ActionName, ActionVector, Label};
use crate::runtime::{NodeClass, ReachabilityGraph};
use crate::synthesis::{ControlledSystem, SinkTransition, StateTransition};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

fn parse_error(e: serde_json::Error) -> IoError {
    IoError::Parse {
        line: e.line(),
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}

// ---------------------------------------------------------------------------
// automata

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LabelKind {
    Offer,
    Request,
    Idle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelFile {
    kind: LabelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionFile {
    from: Vec<String>,
    labels: Vec<LabelFile>,
    to: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AutomatonFile {
    rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    participants: Option<Vec<String>>,
    states: Vec<Vec<String>>,
    initial: Vec<String>,
    accepting: Vec<Vec<String>>,
    transitions: Vec<TransitionFile>,
}

fn label_to_file(l: &Label) -> LabelFile {
    match l {
        Label::Idle => LabelFile {
            kind: LabelKind::Idle,
            name: None,
        },
        Label::Offer(n) => LabelFile {
            kind: LabelKind::Offer,
            name: Some(n.as_str().to_owned()),
        },
        Label::Request(n) => LabelFile {
            kind: LabelKind::Request,
            name: Some(n.as_str().to_owned()),
        },
    }
}

fn label_from_file(l: &LabelFile) -> Result<Label, IoError> {
    let named = |make: fn(ActionName) -> Label| match &l.name {
        Some(n) if ActionName::new(n.as_str()).is_well_formed() => Ok(make(ActionName::new(n.as_str()))),
        Some(n) => Err(IoError::Validation(format!("action name {n:?} is not an identifier"))),
        None => Err(IoError::Validation("offer and request labels need a name".into())),
    };
    match l.kind {
        LabelKind::Idle => Ok(Label::Idle),
        LabelKind::Offer => named(Label::Offer),
        LabelKind::Request => named(Label::Request),
    }
}

fn vector_from_file(labels: &[LabelFile]) -> Result<ActionVector, IoError> {
    let labels = labels.iter().map(label_from_file).collect::<Result<Vec<_>, _>>()?;
    ActionVector::new(labels).map_err(|e| IoError::Validation(e.to_string()))
}

fn automaton_to_file(a: &ContractAutomaton) -> AutomatonFile {
    AutomatonFile {
        rank: a.rank(),
        participants: a.declared_participants().map(<[String]>::to_vec),
        states: a.states().iter().map(|s| s.components().to_vec()).collect(),
        initial: a.initial_state().components().to_vec(),
        accepting: a.accepting().iter().map(|&s| a.state(s).components().to_vec()).collect(),
        transitions: a
            .transitions()
            .iter()
            .map(|t| TransitionFile {
                from: a.state(t.source).components().to_vec(),
                labels: t.action.labels().iter().map(label_to_file).collect(),
                to: a.state(t.target).components().to_vec(),
            })
            .collect(),
    }
}

fn automaton_from_file(f: AutomatonFile) -> Result<ContractAutomaton, IoError> {
    let transitions = f
        .transitions
        .iter()
        .map(|t| Ok((StateVector::new(t.from.clone()), vector_from_file(&t.labels)?, StateVector::new(t.to.clone()))))
        .collect::<Result<Vec<_>, IoError>>()?;
    let a = ContractAutomaton::new(
        f.rank,
        f.states.into_iter().map(StateVector::new),
        StateVector::new(f.initial),
        f.accepting.into_iter().map(StateVector::new),
        transitions,
    )
    .map_err(|e| IoError::Validation(e.to_string()))?;
    match f.participants {
        Some(names) => a.with_participants(names).map_err(|e| IoError::Validation(e.to_string())),
        None => Ok(a),
    }
}

pub fn automaton_from_json(text: &str) -> Result<ContractAutomaton, IoError> {
    automaton_from_file(serde_json::from_str(text).map_err(parse_error)?)
}

/// Sorted, two-space indented, newline terminated.
pub fn automaton_to_json(a: &ContractAutomaton) -> String {
    let mut s = serde_json::to_string_pretty(&automaton_to_file(a)).expect("automaton serializes");
    s.push('\n');
    s
}

pub fn load_automaton(path: impl AsRef<Path>) -> Result<ContractAutomaton, IoError> {
    automaton_from_json(&read(path.as_ref())?)
}

pub fn save_automaton(a: &ContractAutomaton, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &automaton_to_json(a))
}

// ---------------------------------------------------------------------------
// controlled systems

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SinkFile {
    from: Vec<String>,
    labels: Vec<LabelFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlledFile {
    controller: AutomatonFile,
    sink_transitions: Vec<SinkFile>,
    liable_transitions: Vec<TransitionFile>,
}

pub fn controlled_to_json(cs: &ControlledSystem) -> String {
    let f = ControlledFile {
        controller: automaton_to_file(cs.controller()),
        sink_transitions: cs
            .sink_transitions()
            .iter()
            .map(|s| SinkFile {
                from: s.from.components().to_vec(),
                labels: s.action.labels().iter().map(label_to_file).collect(),
            })
            .collect(),
        liable_transitions: cs
            .underlying_transitions()
            .iter()
            .map(|t| TransitionFile {
                from: t.from.components().to_vec(),
                labels: t.action.labels().iter().map(label_to_file).collect(),
                to: t.to.components().to_vec(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&f).expect("controlled system serializes");
    s.push('\n');
    s
}

/// Reads a file written by `controlled_to_json`. The base automaton is
/// rebuilt from the controller and the liable transitions.
pub fn controlled_from_json(text: &str) -> Result<ControlledSystem, IoError> {
    let f: ControlledFile = serde_json::from_str(text).map_err(parse_error)?;
    let invalid = |e: crate::automaton::ValidationError| IoError::Validation(e.to_string());
    let participants = f.controller.participants.clone();
    let controller = automaton_from_file(f.controller)?;
    let mut sinks = Vec::new();
    for s in &f.sink_transitions {
        let from = StateVector::new(s.from.clone());
        if controller.state_id(&from).is_none() {
            return Err(IoError::Validation(format!("sink transition source {from} is not a controller state")));
        }
        sinks.push(SinkTransition {
            from,
            action: vector_from_file(&s.labels)?,
        });
    }
    let mut underlying = Vec::new();
    for t in &f.liable_transitions {
        underlying.push(StateTransition {
            from: StateVector::new(t.from.clone()),
            action: vector_from_file(&t.labels)?,
            to: StateVector::new(t.to.clone()),
        });
    }
    let paired = sinks.len() == underlying.len()
        && sinks.iter().zip(&underlying).all(|(s, u)| s.from == u.from && s.action == u.action);
    if !paired {
        return Err(IoError::Validation(
            "liable transitions must list the transition behind each sink transition, in order".into(),
        ));
    }
    let states: BTreeSet<StateVector> = controller
        .states()
        .iter()
        .cloned()
        .chain(underlying.iter().map(|u| u.to.clone()))
        .collect();
    let transitions = controller
        .transitions()
        .iter()
        .map(|t| (controller.state(t.source).clone(), t.action.clone(), controller.state(t.target).clone()))
        .chain(underlying.iter().map(|u| (u.from.clone(), u.action.clone(), u.to.clone())));
    let mut base = ContractAutomaton::new(
        controller.rank(),
        states,
        controller.initial_state().clone(),
        controller.accepting().iter().map(|&s| controller.state(s).clone()),
        transitions,
    )
    .map_err(invalid)?;
    if let Some(names) = participants {
        base = base.with_participants(names).map_err(invalid)?;
    }
    Ok(ControlledSystem::from_parts(base, controller, sinks, underlying))
}

// ---------------------------------------------------------------------------
// communicating systems

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PolarityFile {
    Send,
    Receive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineTransitionFile {
    from: String,
    sender: String,
    receiver: String,
    kind: PolarityFile,
    name: String,
    to: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineFile {
    participant: String,
    states: Vec<String>,
    initial: String,
    accepting: Vec<String>,
    transitions: Vec<MachineTransitionFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
enum FinalityFile {
    Local,
    Vector { accepting: Vec<Vec<String>> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    machines: Vec<MachineFile>,
    finality: FinalityFile,
}

fn endpoint_name(e: Endpoint, names: &[String]) -> String {
    match e {
        Endpoint::Participant(i) => names[i].clone(),
        Endpoint::Environment => "-".into(),
    }
}

fn endpoint_from_name(s: &str, names: &[String]) -> Result<Endpoint, IoError> {
    if s == "-" {
        return Ok(Endpoint::Environment);
    }
    names
        .iter()
        .position(|n| n == s)
        .map(Endpoint::Participant)
        .ok_or_else(|| IoError::Validation(format!("channel end {s:?} is not a declared participant")))
}

fn machine_to_file(m: &CommunicatingMachine, p: usize, names: &[String]) -> MachineFile {
    MachineFile {
        participant: names[p].clone(),
        states: m.states().to_vec(),
        initial: m.state(m.initial()).to_owned(),
        accepting: m.accepting().iter().map(|&s| m.state(s).to_owned()).collect(),
        transitions: m
            .transitions()
            .iter()
            .map(|t| MachineTransitionFile {
                from: m.state(t.source).to_owned(),
                sender: endpoint_name(t.action.channel.from, names),
                receiver: endpoint_name(t.action.channel.to, names),
                kind: match t.action.polarity {
                    Polarity::Send => PolarityFile::Send,
                    Polarity::Receive => PolarityFile::Receive,
                },
                name: t.action.name.as_str().to_owned(),
                to: m.state(t.target).to_owned(),
            })
            .collect(),
    }
}

pub fn system_to_json(sys: &CommunicatingSystem) -> String {
    let names = sys.participants();
    let f = SystemFile {
        machines: sys
            .machines()
            .iter()
            .enumerate()
            .map(|(p, m)| machine_to_file(m, p, names))
            .collect(),
        finality: match sys.finality() {
            Finality::Local => FinalityFile::Local,
            Finality::Vector(vs) => FinalityFile::Vector {
                accepting: vs.iter().cloned().collect(),
            },
        },
    };
    let mut s = serde_json::to_string_pretty(&f).expect("system serializes");
    s.push('\n');
    s
}

pub fn system_from_json(text: &str) -> Result<CommunicatingSystem, IoError> {
    let f: SystemFile = serde_json::from_str(text).map_err(parse_error)?;
    let names: Vec<String> = f.machines.iter().map(|m| m.participant.clone()).collect();
    let mut machines = Vec::new();
    for m in &f.machines {
        let mut ts = Vec::new();
        for t in &m.transitions {
            if !ActionName::new(t.name.as_str()).is_well_formed() {
                return Err(IoError::Validation(format!("action name {:?} is not an identifier", t.name)));
            }
            let ch = Channel::new(endpoint_from_name(&t.sender, &names)?, endpoint_from_name(&t.receiver, &names)?);
            let action = match t.kind {
                PolarityFile::Send => CfsmAction::send(ch, t.name.as_str()),
                PolarityFile::Receive => CfsmAction::receive(ch, t.name.as_str()),
            };
            ts.push((t.from.clone(), action, t.to.clone()));
        }
        machines.push(
            CommunicatingMachine::new(m.states.clone(), &m.initial, m.accepting.clone(), ts)
                .map_err(|e| IoError::Validation(format!("machine {}: {e}", m.participant)))?,
        );
    }
    let finality = match f.finality {
        FinalityFile::Local => Finality::Local,
        FinalityFile::Vector { accepting } => Finality::Vector(accepting.into_iter().collect()),
    };
    CommunicatingSystem::new(names, machines, finality).map_err(|e| IoError::Validation(e.to_string()))
}

pub fn load_system(path: impl AsRef<Path>) -> Result<CommunicatingSystem, IoError> {
    system_from_json(&read(path.as_ref())?)
}

pub fn save_system(sys: &CommunicatingSystem, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &system_to_json(sys))
}

// ---------------------------------------------------------------------------
// traces

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceSyntaxError {
    #[error("trace item {0:?} has no '!' or '?'")]
    NoPolarity(String),
    #[error("trace item {0:?} has a malformed action name")]
    BadName(String),
    #[error("trace item {0:?} does not split into two known channel ends")]
    UnknownChannel(String),
    #[error("trace item {0:?} splits into channel ends in more than one way")]
    Ambiguous(String),
}

/// Parses `AB!a,AB?a,...`. Channel ends are participant names or `-`; with
/// multi-letter names every split of the prefix is tried and must be unique.
pub fn parse_trace(text: &str, participants: &[String]) -> Result<Vec<CfsmAction>, TraceSyntaxError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|item| parse_trace_item(item.trim(), participants)).collect()
}

fn parse_trace_item(item: &str, participants: &[String]) -> Result<CfsmAction, TraceSyntaxError> {
    let pos = item
        .find(['!', '?'])
        .ok_or_else(|| TraceSyntaxError::NoPolarity(item.to_owned()))?;
    let (chan, rest) = item.split_at(pos);
    let polarity = if rest.starts_with('!') { Polarity::Send } else { Polarity::Receive };
    let name = ActionName::new(&rest[1..]);
    if !name.is_well_formed() {
        return Err(TraceSyntaxError::BadName(item.to_owned()));
    }
    let end = |s: &str| -> Option<Endpoint> {
        if s == "-" {
            Some(Endpoint::Environment)
        } else {
            participants.iter().position(|p| p == s).map(Endpoint::Participant)
        }
    };
    let splits: BTreeSet<Channel> = chan
        .char_indices()
        .skip(1)
        .filter_map(|(k, _)| Some(Channel::new(end(&chan[..k])?, end(&chan[k..])?)))
        .filter(|ch| ch.from != ch.to)
        .collect();
    let mut it = splits.into_iter();
    match (it.next(), it.next()) {
        (Some(channel), None) => Ok(CfsmAction {
            channel,
            polarity,
            name,
        }),
        (None, _) => Err(TraceSyntaxError::UnknownChannel(item.to_owned())),
        (Some(_), Some(_)) => Err(TraceSyntaxError::Ambiguous(item.to_owned())),
    }
}

// ---------------------------------------------------------------------------
// DOT

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn action_prefix(v: &ActionVector) -> &'static str {
    match v.kind() {
        ActionKind::Match => "match",
        ActionKind::Offer => "offer",
        ActionKind::Request => "request",
    }
}

fn dot_automaton_body(out: &mut String, a: &ContractAutomaton) {
    for (i, s) in a.states().iter().enumerate() {
        let shape = if a.is_accepting(crate::automaton::StateId(i)) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  n{i} [label={}, shape={shape}];", quote(&s.to_string()));
    }
    let _ = writeln!(out, "  start [shape=point];");
    let _ = writeln!(out, "  start -> n{};", a.initial().0);
    for t in a.transitions() {
        let label = format!("{}:{}", action_prefix(&t.action), t.action);
        let _ = writeln!(out, "  n{} -> n{} [label={}];", t.source.0, t.target.0, quote(&label));
    }
}

pub fn dot_automaton(a: &ContractAutomaton) -> String {
    let mut out = String::from("digraph automaton {\n  rankdir=LR;\n");
    dot_automaton_body(&mut out, a);
    out.push_str("}\n");
    out
}

/// The controller plus a filled `⊥` node collecting the sink transitions.
pub fn dot_controlled(cs: &ControlledSystem) -> String {
    let k = cs.controller();
    let mut out = String::from("digraph controlled {\n  rankdir=LR;\n");
    dot_automaton_body(&mut out, k);
    if !cs.sink_transitions().is_empty() {
        let _ = writeln!(out, "  sink [label=\"⊥\", shape=box, style=filled, fillcolor=black, fontcolor=white];");
    }
    for s in cs.sink_transitions() {
        let from = k.state_id(&s.from).expect("sink source is a controller state").0;
        let label = format!("{}:{}", action_prefix(&s.action), s.action);
        let _ = writeln!(out, "  n{from} -> sink [label={}, style=dashed];", quote(&label));
    }
    out.push_str("}\n");
    out
}

pub fn dot_machine(m: &CommunicatingMachine, names: &[String], title: &str) -> String {
    let mut out = format!("digraph {} {{\n  rankdir=LR;\n", quote(title));
    for (i, s) in m.states().iter().enumerate() {
        let shape = if m.accepting().contains(&i) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  n{i} [label={}, shape={shape}];", quote(s));
    }
    let _ = writeln!(out, "  start [shape=point];");
    let _ = writeln!(out, "  start -> n{};", m.initial());
    for t in m.transitions() {
        let _ = writeln!(out, "  n{} -> n{} [label={}];", t.source, t.target, quote(&t.action.render(names)));
    }
    out.push_str("}\n");
    out
}

/// Every machine as its own cluster.
pub fn dot_system(sys: &CommunicatingSystem) -> String {
    let names = sys.participants();
    let mut out = String::from("digraph system {\n  rankdir=LR;\n");
    for (p, m) in sys.machines().iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{p} {{\n    label={};", quote(&names[p]));
        for (i, s) in m.states().iter().enumerate() {
            let shape = if m.accepting().contains(&i) { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "    m{p}_{i} [label={}, shape={shape}];", quote(s));
        }
        let _ = writeln!(out, "    start{p} [shape=point];\n    start{p} -> m{p}_{};", m.initial());
        for t in m.transitions() {
            let _ = writeln!(
                out,
                "    m{p}_{} -> m{p}_{} [label={}];",
                t.source,
                t.target,
                quote(&t.action.render(names))
            );
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

/// Configurations labelled by control states and buffer contents; final
/// ones double-circled, deadlocks filled.
pub fn dot_reachability(sys: &CommunicatingSystem, g: &ReachabilityGraph, classes: &[NodeClass]) -> String {
    let mut out = String::from("digraph reachability {\n");
    for (i, c) in g.nodes.iter().enumerate() {
        let mut label = format!("<{}>", sys.control_names(&c.control).join(","));
        for b in sys.describe_buffers(&c.buffers) {
            let _ = write!(label, " {b}");
        }
        let style = match classes[i] {
            NodeClass::Final => "shape=doublecircle",
            NodeClass::Deadlock => "shape=box, style=filled, fillcolor=black, fontcolor=white",
            NodeClass::Doomed => "shape=box, style=dashed",
            NodeClass::Live => "shape=box",
        };
        let _ = writeln!(out, "  c{i} [label={}, {style}];", quote(&label));
    }
    for (i, edges) in g.edges.iter().enumerate() {
        for (a, j) in edges {
            let _ = writeln!(out, "  c{i} -> c{j} [label={}];", quote(&sys.render(a)));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::product;
    use crate::projection::project;
    use crate::samples;
    use crate::synthesis::{controlled_system, mpc};
    use proptest::prelude::*;

    const ALICE: &str = r#"{
  "rank": 1,
  "states": [["q0"], ["q1"]],
  "initial": ["q0"],
  "accepting": [["q1"]],
  "transitions": [
    {"from": ["q0"], "labels": [{"kind": "offer", "name": "a"}], "to": ["q1"]}
  ]
}"#;

    #[test]
    fn loads_alice() {
        let a = automaton_from_json(ALICE).unwrap();
        let [alice, ..] = samples::toy_exchange();
        assert_eq!(a, alice);
    }

    #[test]
    fn rejects_accepting_initial() {
        let bad = ALICE.replace(r#""accepting": [["q1"]]"#, r#""accepting": [["q0"]]"#);
        let err = automaton_from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("initial state must not be accepting"), "{err}");
    }

    #[test]
    fn parse_error_has_line() {
        let err = automaton_from_json("{\n  \"rank\": 1,\n  oops\n}").unwrap_err();
        assert!(matches!(err, IoError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn rejects_invalid_vector() {
        let bad = ALICE.replace(r#"[{"kind": "offer", "name": "a"}]"#, r#"[{"kind": "idle"}]"#);
        assert!(matches!(automaton_from_json(&bad), Err(IoError::Validation(_))));
    }

    #[test]
    fn quad_round_trip() {
        let p = product(&samples::four_party()).unwrap();
        let text = automaton_to_json(&p);
        assert_eq!(automaton_from_json(&text).unwrap(), p);
        assert_eq!(automaton_to_json(&automaton_from_json(&text).unwrap()), text);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("quad.json");
        save_automaton(&p, &path).unwrap();
        assert_eq!(load_automaton(&path).unwrap(), p);
    }

    #[test]
    fn system_round_trip() {
        for sys in [
            project(&mpc(&product(&samples::relay()).unwrap())),
            project(&product(&samples::toy_exchange()).unwrap()),
        ] {
            let text = system_to_json(&sys);
            let back = system_from_json(&text).unwrap();
            assert_eq!(back, sys);
            assert_eq!(system_to_json(&back), text);
        }
    }

    #[test]
    fn traces() {
        let names: Vec<String> = ["A", "B", "C"].map(String::from).to_vec();
        let t = parse_trace("AC!a, AC?a,BC!a", &names).unwrap();
        assert_eq!(crate::cfsm::render_trace(&t, &names), "AC!a,AC?a,BC!a");
        assert!(parse_trace("", &names).unwrap().is_empty());
        assert_eq!(parse_trace("A-!b", &names).unwrap()[0].channel.to, Endpoint::Environment);
        assert!(matches!(parse_trace("AD!a", &names), Err(TraceSyntaxError::UnknownChannel(_))));
        assert!(matches!(parse_trace("ABa", &names), Err(TraceSyntaxError::NoPolarity(_))));
        let long: Vec<String> = ["A", "AB", "B", "BB"].map(String::from).to_vec();
        assert!(matches!(parse_trace("ABB!x", &long), Err(TraceSyntaxError::Ambiguous(_))));
        assert_eq!(parse_trace("ABA!x", &long).unwrap()[0].channel, Channel::between(1, 0));
    }

    #[test]
    fn dot_controller_of_toy_exchange() {
        let k = mpc(&product(&samples::toy_exchange()).unwrap());
        let d = dot_automaton(&k);
        assert_eq!(d.matches(" -> n").count(), 4 + 1);
        assert_eq!(d.matches("shape=doublecircle").count(), 1);
        assert!(d.contains("<q1,q3,q1>\", shape=doublecircle"));
        assert!(d.contains("match:(!a,?a,-)"));
        assert_eq!(d, dot_automaton(&k));
        let empty = mpc(&product(&[
            ContractAutomaton::principal("q0", &["q1"], &[("q0", Label::offer("a"), "q1")]).unwrap(),
        ])
        .unwrap());
        let d = dot_automaton(&empty);
        assert_eq!(d.matches("shape=circle").count(), 1);
        assert_eq!(d.matches(" -> n").count(), 1);
    }

    #[test]
    fn dot_controlled_has_sink() {
        let cs = controlled_system(&product(&samples::toy_exchange()).unwrap());
        let d = dot_controlled(&cs);
        assert!(d.contains("style=filled"));
        assert_eq!(d.matches("-> sink").count(), 2);
        assert!(d.contains("request:(-,-,?a)"));
        let back = controlled_from_json(&controlled_to_json(&cs)).unwrap();
        assert_eq!(back.sink_transitions(), cs.sink_transitions());
        assert_eq!(dot_controlled(&back), d);
    }

    fn arb_label() -> impl Strategy<Value = LabelFile> {
        prop_oneof![
            Just(LabelFile { kind: LabelKind::Idle, name: None }),
            "[a-c]".prop_map(|n| LabelFile { kind: LabelKind::Offer, name: Some(n) }),
            "[a-c]".prop_map(|n| LabelFile { kind: LabelKind::Request, name: Some(n) }),
        ]
    }

    fn seeds(target: &str) -> Vec<String> {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
        let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.iter().map(|f| std::fs::read_to_string(f).unwrap()).collect()
    }

    #[test]
    fn fuzz_seeds_round_trip() {
        for text in seeds("automaton_json") {
            let a = automaton_from_json(&text).unwrap();
            assert_eq!(automaton_from_json(&automaton_to_json(&a)).unwrap(), a);
        }
        for text in seeds("system_json") {
            let sys = system_from_json(&text).unwrap();
            assert_eq!(system_from_json(&system_to_json(&sys)).unwrap(), sys);
        }
        for text in seeds("controlled_json") {
            let cs = controlled_from_json(&text).unwrap();
            assert_eq!(controlled_from_json(&controlled_to_json(&cs)).unwrap(), cs);
        }
        let vectors: Vec<_> = seeds("action_vector").iter().map(|t| t.parse::<ActionVector>().is_ok()).collect();
        assert_eq!(vectors, [false, true, true, true]);
        for text in seeds("trace") {
            let (head, trace) = text.split_once('\n').unwrap();
            let names: Vec<String> = head.split(',').map(str::to_owned).collect();
            let t = parse_trace(trace, &names).unwrap();
            assert_eq!(crate::cfsm::render_trace(&t, &names), trace);
        }
    }

    proptest! {
        #[test]
        fn random_products_round_trip(seed in any::<u64>(), rank in 1usize..4) {
            let ops = crate::oracle::generate_random_system(
                &crate::oracle::GeneratorParams { rank, max_states: 3, max_actions: 3 },
                seed,
            );
            let p = product(&ops).unwrap();
            let text = automaton_to_json(&p);
            prop_assert_eq!(automaton_from_json(&text).unwrap(), p.clone());
            let sys = project(&mpc(&p));
            prop_assert_eq!(system_from_json(&system_to_json(&sys)).unwrap(), sys);
        }

        #[test]
        fn label_files_never_panic(labels in proptest::collection::vec(arb_label(), 1..4)) {
            let _ = vector_from_file(&labels);
        }
    }
}
