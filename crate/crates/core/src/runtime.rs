//! Execution of communicating systems: configurations, bounded FIFO
//! semantics and breadth-first exploration.

use std::collections::{BTreeMap, HashMap, VecDeque};

use thiserror::Error;

use crate::cfsm::{CfsmAction, Channel, CommunicatingSystem, Endpoint, Polarity};
use crate::label::ActionName;

/// Control states plus the contents of every non-empty channel.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub control: Vec<usize>,
    pub buffers: BTreeMap<Channel, Vec<ActionName>>,
}

impl Configuration {
    pub fn initial(sys: &CommunicatingSystem) -> Self {
        Configuration {
            control: sys.initial_control(),
            buffers: BTreeMap::new(),
        }
    }

    pub fn is_stable(&self) -> bool {
        self.buffers.is_empty()
    }

    pub fn buffered(&self) -> usize {
        self.buffers.values().map(Vec::len).sum()
    }

    pub fn buffer(&self, ch: Channel) -> &[ActionName] {
        self.buffers.get(&ch).map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    /// At most one message in flight in the whole system.
    OneBuffer,
    /// At most `k` messages on each channel.
    PerChannel(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Semantics {
    pub bound: Bound,
    /// Sends to `-` are absorbed at once; receives from `-` never fire.
    pub env_mode: bool,
}

impl Default for Semantics {
    fn default() -> Self {
        Semantics {
            bound: Bound::OneBuffer,
            env_mode: false,
        }
    }
}

impl Semantics {
    pub fn with_env_mode(self, env_mode: bool) -> Self {
        Semantics { env_mode, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("system uses environment channels; enable environment mode to explore it")]
    EnvironmentChannelsPresent,
    #[error("action is not enabled in this configuration")]
    NotEnabled,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace stuck at step {step}: {action} is not enabled")]
pub struct TraceStuck {
    /// 1-based position of the first action that cannot fire.
    pub step: usize,
    pub action: String,
    pub configuration: Configuration,
}

/// Every action enabled at `c` with its successor, in canonical order.
pub fn successors(
    sys: &CommunicatingSystem,
    sem: Semantics,
    c: &Configuration,
) -> Vec<(CfsmAction, Configuration)> {
    let mut out = Vec::new();
    for (p, m) in sys.machines().iter().enumerate() {
        for t in m.outgoing(c.control[p]) {
            if let Some(next) = fire(sem, c, p, &t.action, t.target) {
                out.push((t.action.clone(), next));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    out
}

fn fire(sem: Semantics, c: &Configuration, p: usize, action: &CfsmAction, target: usize) -> Option<Configuration> {
    let ch = action.channel;
    let mut next = c.clone();
    next.control[p] = target;
    match action.polarity {
        Polarity::Send if ch.to == Endpoint::Environment => sem.env_mode.then_some(next),
        Polarity::Send => {
            let room = match sem.bound {
                Bound::OneBuffer => c.buffers.is_empty(),
                Bound::PerChannel(k) => c.buffer(ch).len() < k,
            };
            if !room {
                return None;
            }
            next.buffers.entry(ch).or_default().push(action.name.clone());
            Some(next)
        }
        Polarity::Receive if ch.from == Endpoint::Environment => None,
        Polarity::Receive => {
            let queue = next.buffers.get_mut(&ch)?;
            if queue.first() != Some(&action.name) {
                return None;
            }
            queue.remove(0);
            if queue.is_empty() {
                next.buffers.remove(&ch);
            }
            Some(next)
        }
    }
}

/// Fires `action` at `c`. With nondeterministic machines the first
/// successor in canonical order is taken.
pub fn step(
    sys: &CommunicatingSystem,
    sem: Semantics,
    c: &Configuration,
    action: &CfsmAction,
) -> Result<Configuration, RuntimeError> {
    let p = action.subject().index().ok_or(RuntimeError::NotEnabled)?;
    let m = sys.machines().get(p).ok_or(RuntimeError::NotEnabled)?;
    m.outgoing(*c.control.get(p).ok_or(RuntimeError::NotEnabled)?)
        .filter(|t| &t.action == action)
        .find_map(|t| fire(sem, c, p, action, t.target))
        .ok_or(RuntimeError::NotEnabled)
}

/// Fires `trace` from the initial configuration.
pub fn run_trace(
    sys: &CommunicatingSystem,
    sem: Semantics,
    trace: &[CfsmAction],
) -> Result<Configuration, TraceStuck> {
    let mut c = Configuration::initial(sys);
    for (k, a) in trace.iter().enumerate() {
        c = step(sys, sem, &c, a).map_err(|_| TraceStuck {
            step: k + 1,
            action: sys.render(a),
            configuration: c.clone(),
        })?;
    }
    Ok(c)
}

/// The reachability graph. Node 0 is the initial configuration and nodes are
/// numbered in breadth-first discovery order.
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    pub nodes: Vec<Configuration>,
    pub edges: Vec<Vec<(CfsmAction, usize)>>,
    parent: Vec<Option<(usize, CfsmAction)>>,
}

impl ReachabilityGraph {
    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// A shortest trace reaching `node`, ties broken by canonical order.
    pub fn trace_to(&self, node: usize) -> Vec<CfsmAction> {
        let mut trace = Vec::new();
        let mut cur = node;
        while let Some((p, a)) = &self.parent[cur] {
            trace.push(a.clone());
            cur = *p;
        }
        trace.reverse();
        trace
    }

    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        self.nodes.iter().position(|n| n == c)
    }
}

pub fn explore(sys: &CommunicatingSystem, sem: Semantics) -> Result<ReachabilityGraph, RuntimeError> {
    if !sem.env_mode && sys.uses_environment() {
        return Err(RuntimeError::EnvironmentChannelsPresent);
    }
    let init = Configuration::initial(sys);
    let mut index: HashMap<Configuration, usize> = HashMap::from([(init.clone(), 0)]);
    let mut g = ReachabilityGraph {
        nodes: vec![init],
        edges: Vec::new(),
        parent: vec![None],
    };
    let mut k = 0;
    while k < g.nodes.len() {
        let mut out = Vec::new();
        for (a, next) in successors(sys, sem, &g.nodes[k]) {
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = g.nodes.len();
                    index.insert(next.clone(), id);
                    g.nodes.push(next);
                    g.parent.push(Some((k, a.clone())));
                    id
                }
            };
            out.push((a, id));
        }
        g.edges.push(out);
        k += 1;
    }
    Ok(g)
}

/// Exploration under the 1-buffer semantics.
pub fn reachable_1buffer(sys: &CommunicatingSystem) -> Result<ReachabilityGraph, RuntimeError> {
    explore(sys, Semantics::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeClass {
    /// Stable with an accepting control vector.
    Final,
    /// Not final and without successors.
    Deadlock,
    /// Not a deadlock, but no final configuration is reachable.
    Doomed,
    Live,
}

pub fn classify_configurations(sys: &CommunicatingSystem, g: &ReachabilityGraph) -> Vec<NodeClass> {
    let n = g.nodes.len();
    let is_final: Vec<bool> = g
        .nodes
        .iter()
        .map(|c| c.is_stable() && sys.is_accepting_control(&c.control))
        .collect();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (src, out) in g.edges.iter().enumerate() {
        for &(_, dst) in out {
            incoming[dst].push(src);
        }
    }
    let mut good = is_final.clone();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| good[i]).collect();
    while let Some(v) = queue.pop_front() {
        for &u in &incoming[v] {
            if !good[u] {
                good[u] = true;
                queue.push_back(u);
            }
        }
    }
    (0..n)
        .map(|i| {
            if is_final[i] {
                NodeClass::Final
            } else if g.edges[i].is_empty() {
                NodeClass::Deadlock
            } else if !good[i] {
                NodeClass::Doomed
            } else {
                NodeClass::Live
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceReport {
    pub convergent: bool,
    /// Shortest trace to a deadlock or doomed configuration.
    pub counterexample: Option<Vec<CfsmAction>>,
    pub configurations: usize,
    pub edges: usize,
}

pub fn is_convergent(sys: &CommunicatingSystem, sem: Semantics) -> Result<ConvergenceReport, RuntimeError> {
    let g = explore(sys, sem)?;
    let classes = classify_configurations(sys, &g);
    let bad = classes
        .iter()
        .position(|c| matches!(c, NodeClass::Deadlock | NodeClass::Doomed));
    Ok(ConvergenceReport {
        convergent: bad.is_none(),
        counterexample: bad.map(|i| g.trace_to(i)),
        configurations: g.nodes.len(),
        edges: g.num_edges(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeadlockReport {
    pub deadlock_free: bool,
    /// Shortest trace to a deadlock configuration.
    pub counterexample: Option<Vec<CfsmAction>>,
    pub configurations: usize,
    pub edges: usize,
}

pub fn is_deadlock_free(sys: &CommunicatingSystem, sem: Semantics) -> Result<DeadlockReport, RuntimeError> {
    let g = explore(sys, sem)?;
    let classes = classify_configurations(sys, &g);
    let bad = classes.iter().position(|c| *c == NodeClass::Deadlock);
    Ok(DeadlockReport {
        deadlock_free: bad.is_none(),
        counterexample: bad.map(|i| g.trace_to(i)),
        configurations: g.nodes.len(),
        edges: g.num_edges(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfsm::{CommunicatingMachine, Finality};
    use crate::projection::{project, translate_word};
    use crate::samples;
    use crate::synthesis::mpc;
    use crate::product;
    use proptest::prelude::*;

    fn av(s: &str) -> crate::ActionVector {
        s.parse().unwrap()
    }

    fn system_of(ops: &[crate::ContractAutomaton]) -> CommunicatingSystem {
        project(&mpc(&product(ops).unwrap()))
    }

    fn act(sys: &CommunicatingSystem, s: &str) -> CfsmAction {
        crate::io::parse_trace(s, sys.participants()).unwrap().remove(0)
    }

    #[test]
    fn quad_steps() {
        let sys = system_of(&samples::four_party());
        let c0 = Configuration::initial(&sys);
        let c1 = step(&sys, Semantics::default(), &c0, &act(&sys, "AC!a")).unwrap();
        assert_eq!(c1.buffer(Channel::between(0, 2)).len(), 1);
        assert_ne!(c1.control[0], c0.control[0]);
        let c2 = step(&sys, Semantics::default(), &c1, &act(&sys, "AC?a")).unwrap();
        assert!(c2.is_stable());
        assert_ne!(c2.control[2], c0.control[2]);
        assert_eq!(
            step(&sys, Semantics::default(), &c0, &act(&sys, "AC?a")),
            Err(RuntimeError::NotEnabled)
        );
    }

    #[test]
    fn quad_counterexample() {
        let sys = system_of(&samples::four_party());
        let r = is_convergent(&sys, Semantics::default()).unwrap();
        assert!(!r.convergent);
        assert_eq!(sys.render_trace(&r.counterexample.unwrap()), "AC!a,AC?a,BC!a");
        let stuck = run_trace(&sys, Semantics::default(), &crate::io::parse_trace("AC!a,BC!a", sys.participants()).unwrap());
        assert_eq!(stuck.unwrap_err().step, 2);
    }

    #[test]
    fn toy_exchange_converges() {
        let sys = system_of(&samples::toy_exchange());
        let r = is_convergent(&sys, Semantics::default()).unwrap();
        assert!(r.convergent, "{:?}", r.counterexample.map(|t| sys.render_trace(&t)));
        let g = reachable_1buffer(&sys).unwrap();
        let run = translate_word(&[av("(!a,?a,-)"), av("(-,!b,?b)")]).unwrap();
        let end = run_trace(&sys, Semantics::default(), &run).unwrap();
        let i = g.index_of(&end).unwrap();
        assert_eq!(classify_configurations(&sys, &g)[i], NodeClass::Final);
    }

    #[test]
    fn branching_gap_deadlock_free_not_convergent() {
        let sys = system_of(&samples::branching_gap());
        assert!(is_deadlock_free(&sys, Semantics::default()).unwrap().deadlock_free);
        let r = is_convergent(&sys, Semantics::default()).unwrap();
        assert!(!r.convergent);
        // already doomed after the send: C can never get b or c
        assert_eq!(sys.render_trace(&r.counterexample.unwrap()), "AB!a");
        let after = run_trace(&sys, Semantics::default(), &crate::io::parse_trace("AB!a,AB?a", sys.participants()).unwrap()).unwrap();
        let g = reachable_1buffer(&sys).unwrap();
        assert_eq!(classify_configurations(&sys, &g)[g.index_of(&after).unwrap()], NodeClass::Doomed);
    }

    #[test]
    fn relay_deadlock() {
        let sys = system_of(&samples::relay());
        let phi = [av("(!a,?a,-)"), av("(-,?c,!c)"), av("(-,!ok,?ok)")];
        let mut trace = translate_word(&phi).unwrap();
        trace.push(act(&sys, "CA!d"));
        let end = run_trace(&sys, Semantics::default(), &trace).unwrap();
        assert_eq!(end.buffer(Channel::between(2, 0)).len(), 1);
        assert!(successors(&sys, Semantics::default(), &end).is_empty());
        assert!(!is_deadlock_free(&sys, Semantics::default()).unwrap().deadlock_free);
    }

    #[test]
    fn inert_system() {
        let m = CommunicatingMachine::new(["q0".to_owned()], "q0", ["q0".to_owned()], []).unwrap();
        let sys = CommunicatingSystem::new(
            vec!["A".into()],
            vec![m],
            Finality::Vector([vec!["q0".to_owned()]].into()),
        )
        .unwrap();
        let g = reachable_1buffer(&sys).unwrap();
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.num_edges(), 0);
        assert!(is_deadlock_free(&sys, Semantics::default()).unwrap().deadlock_free);
        assert_eq!(run_trace(&sys, Semantics::default(), &[]).unwrap(), Configuration::initial(&sys));
    }

    #[test]
    fn environment_mode() {
        let toy = product(&samples::toy_exchange()).unwrap();
        let sys = project(&toy);
        assert!(sys.uses_environment());
        assert_eq!(reachable_1buffer(&sys).unwrap_err(), RuntimeError::EnvironmentChannelsPresent);
        let sem = Semantics::default().with_env_mode(true);
        let g = explore(&sys, sem).unwrap();
        assert!(g.nodes.iter().all(|c| c.buffered() <= 1));
        assert!(g
            .nodes
            .iter()
            .all(|c| c.buffers.keys().all(|ch| !ch.touches_environment())));
    }

    #[test]
    fn per_channel_bound() {
        let sys = system_of(&samples::four_party());
        let sem = Semantics {
            bound: Bound::PerChannel(1),
            env_mode: false,
        };
        let g = explore(&sys, sem).unwrap();
        // A and B may both have sent before anyone reads
        assert!(g.nodes.iter().any(|c| c.buffered() == 2));
        assert!(g.nodes.iter().all(|c| c.buffers.values().all(|w| w.len() <= 1)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]
        #[test]
        fn explored_configuration_invariants(seed in any::<u64>(), rank in 2usize..4) {
            let ops = crate::oracle::generate_random_system(
                &crate::oracle::GeneratorParams { rank, max_states: 3, max_actions: 3 },
                seed,
            );
            let sys = system_of(&ops);
            let g = reachable_1buffer(&sys).unwrap();
            let classes = classify_configurations(&sys, &g);
            for (c, class) in g.nodes.iter().zip(&classes) {
                prop_assert!(c.buffered() <= 1);
                if *class == NodeClass::Final {
                    prop_assert!(c.is_stable());
                }
            }
            let conv = is_convergent(&sys, Semantics::default()).unwrap();
            let dl = is_deadlock_free(&sys, Semantics::default()).unwrap();
            prop_assert!(!conv.convergent || dl.deadlock_free);
            if let Some(t) = conv.counterexample {
                prop_assert!(run_trace(&sys, Semantics::default(), &t).is_ok());
            }
            // node count bound: product of local state counts times (1 + channels × names)
            let locals: usize = sys.machines().iter().map(|m| m.states().len()).product();
            let names = 3;
            prop_assert!(g.nodes.len() <= locals * (1 + sys.channels().len() * names));
        }
    }
}
