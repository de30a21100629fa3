//! Cross-checks between the orchestration side (automata, controllers) and
//! the choreography side (communicating systems), plus a seeded generator of
//! small random principals to run them on.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{admits_strong_agreement, branching_condition};
use crate::automaton::{ContractAutomaton, StateId};
use crate::cfsm::{render_trace, CfsmAction, CommunicatingSystem, Polarity};
use crate::label::{ActionVector, Label};
use crate::product::product;
use crate::projection::project;
use crate::runtime::{
    classify_configurations, explore, is_convergent, successors, Configuration, NodeClass, Semantics,
};
use crate::synthesis::{controlled_system, liable, match_only, mpc, StateTransition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub details: Vec<String>,
}

impl Verdict {
    fn from_violations(violations: Vec<String>) -> Self {
        Verdict {
            status: if violations.is_empty() { Status::Pass } else { Status::Fail },
            details: violations,
        }
    }

    fn skipped(reason: impl Into<String>) -> Self {
        Verdict {
            status: Status::Skipped,
            details: vec![reason.into()],
        }
    }
}

// ---------------------------------------------------------------------------
// generator

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorParams {
    /// Number of principals.
    pub rank: usize,
    pub max_states: usize,
    /// Size of the shared action alphabet.
    pub max_actions: usize,
}

const ALPHABET: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];

/// Deterministic in `(params, seed)`. Each principal fixes one polarity per
/// action name, so it never carries complementary labels.
pub fn generate_random_system(params: &GeneratorParams, seed: u64) -> Vec<ContractAutomaton> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = &ALPHABET[..params.max_actions.clamp(1, ALPHABET.len())];
    (0..params.rank.max(1))
        .map(|_| {
            let n = rng.gen_range(1..=params.max_states.max(1));
            let offers: Vec<bool> = names.iter().map(|_| rng.gen_bool(0.5)).collect();
            let label = |k: usize| {
                if offers[k] {
                    Label::offer(names[k])
                } else {
                    Label::request(names[k])
                }
            };
            let state = |i: usize| format!("q{i}");
            let mut ts = Vec::new();
            for s in 0..n {
                for k in 0..names.len() {
                    if rng.gen_bool(0.4) {
                        ts.push((state(s), label(k), state(rng.gen_range(0..n))));
                    }
                }
            }
            if !ts.iter().any(|(s, _, _)| s == "q0") {
                let k = rng.gen_range(0..names.len());
                ts.push((state(0), label(k), state(rng.gen_range(0..n))));
            }
            let mut accepting: Vec<String> = (1..n).filter(|_| rng.gen_bool(0.5)).map(state).collect();
            if n > 1 && accepting.is_empty() {
                accepting.push(state(rng.gen_range(1..n)));
            }
            let acc: Vec<&str> = accepting.iter().map(String::as_str).collect();
            let ts: Vec<(&str, Label, &str)> =
                ts.iter().map(|(a, l, b)| (a.as_str(), l.clone(), b.as_str())).collect();
            ContractAutomaton::principal("q0", &acc, &ts).expect("generated principal is valid")
        })
        .collect()
}

// ---------------------------------------------------------------------------
// languages

/// A shortest word accepted by exactly one of the two (deterministic)
/// automata, if any.
pub fn language_difference(a: &ContractAutomaton, b: &ContractAutomaton) -> Option<Vec<ActionVector>> {
    type Pair = (Option<StateId>, Option<StateId>);
    let start: Pair = (Some(a.initial()), Some(b.initial()));
    let mut parent: HashMap<Pair, Option<(Pair, ActionVector)>> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    while let Some(pair @ (sa, sb)) = queue.pop_front() {
        let acc_a = sa.is_some_and(|s| a.is_accepting(s));
        let acc_b = sb.is_some_and(|s| b.is_accepting(s));
        if acc_a != acc_b {
            let mut word = Vec::new();
            let mut cur = pair;
            while let Some(Some((p, v))) = parent.get(&cur) {
                word.push(v.clone());
                cur = *p;
            }
            word.reverse();
            return Some(word);
        }
        let mut letters: BTreeSet<&ActionVector> = BTreeSet::new();
        letters.extend(sa.into_iter().flat_map(|s| a.outgoing(s)).map(|t| &t.action));
        letters.extend(sb.into_iter().flat_map(|s| b.outgoing(s)).map(|t| &t.action));
        for v in letters {
            let next = (
                sa.and_then(|s| a.successor(s, v)),
                sb.and_then(|s| b.successor(s, v)),
            );
            if next == (None, None) || parent.contains_key(&next) {
                continue;
            }
            parent.insert(next, Some((pair, v.clone())));
            queue.push_back(next);
        }
    }
    None
}

/// All accepted words of length at most `max_len`.
pub fn accepted_words(a: &ContractAutomaton, max_len: usize) -> BTreeSet<Vec<ActionVector>> {
    let live = a.coreachable_by(|_| true);
    let mut out = BTreeSet::new();
    let mut stack = vec![(a.initial(), Vec::new())];
    while let Some((s, word)) = stack.pop() {
        if a.is_accepting(s) {
            out.insert(word.clone());
        }
        if word.len() == max_len {
            continue;
        }
        for t in a.outgoing(s).filter(|t| live.contains(&t.target)) {
            let mut w = word.clone();
            w.push(t.action.clone());
            stack.push((t.target, w));
        }
    }
    out
}

/// Length bound of the explicit enumeration cross-check.
pub fn enumeration_bound(a: &ContractAutomaton) -> usize {
    (a.num_states() + 1).min(8)
}

/// Checks that `controller` accepts exactly the strong agreements of `a`,
/// both exactly and by explicit enumeration of short words.
pub fn check_controller_language(a: &ContractAutomaton, controller: &ContractAutomaton) -> Verdict {
    let mut violations = Vec::new();
    if let Some(w) = language_difference(&match_only(a), controller) {
        violations.push(format!("distinguishing word {}", show_word(&w)));
    }
    let bound = enumeration_bound(a);
    let expected: BTreeSet<_> = accepted_words(a, bound)
        .into_iter()
        .filter(|w| w.iter().all(ActionVector::is_match))
        .collect();
    let got = accepted_words(controller, bound);
    for w in expected.symmetric_difference(&got).take(3) {
        violations.push(format!("enumeration disagrees on {}", show_word(w)));
    }
    Verdict::from_violations(violations)
}

fn show_word(w: &[ActionVector]) -> String {
    if w.is_empty() {
        return "ε".into();
    }
    w.iter().map(ToString::to_string).collect::<Vec<_>>().join("")
}

// ---------------------------------------------------------------------------
// runs of the controller against executions of its projection

fn matching_vector(rank: usize, action: &CfsmAction) -> Option<ActionVector> {
    let i = action.channel.from.index()?;
    let j = action.channel.to.index()?;
    Some(ActionVector::matching(rank, &action.name, i, j))
}

/// Stable successors reached by one send and its receive, with both actions.
fn exchanges(sys: &CommunicatingSystem, c: &Configuration) -> Vec<(CfsmAction, Configuration, CfsmAction, Configuration)> {
    let sem = Semantics::default();
    let mut out = Vec::new();
    for (send, mid) in successors(sys, sem, c) {
        if send.polarity != Polarity::Send {
            continue;
        }
        for (recv, end) in successors(sys, sem, &mid) {
            if recv == send.dual() {
                out.push((send.clone(), mid.clone(), recv, end));
            }
        }
    }
    out
}

/// Every run of the controller of `a` with at most `depth` steps translates
/// to an execution of its projection.
pub fn check_runs_replay(a: &ContractAutomaton, depth: usize) -> Verdict {
    let k = mpc(a);
    let sys = project(&k);
    let names = sys.participants().to_vec();
    let sem = Semantics::default();
    let start = (k.initial(), Configuration::initial(&sys));
    let mut seen = BTreeSet::from([start.clone()]);
    let mut frontier = vec![(start, Vec::<ActionVector>::new())];
    let mut violations = Vec::new();
    for _ in 0..depth {
        let mut next_frontier = Vec::new();
        for ((s, c), run) in frontier {
            for t in k.outgoing(s) {
                let [send, recv] = match crate::projection::translate_word(std::slice::from_ref(&t.action)) {
                    Ok(w) if w.len() == 2 => [w[0].clone(), w[1].clone()],
                    _ => {
                        violations.push(format!("controller transition {} is not a match", t.action));
                        continue;
                    }
                };
                let ends: Vec<Configuration> = successors(&sys, sem, &c)
                    .into_iter()
                    .filter(|(x, _)| *x == send)
                    .flat_map(|(_, mid)| successors(&sys, sem, &mid).into_iter().filter(|(x, _)| *x == recv))
                    .map(|(_, end)| end)
                    .collect();
                let mut longer = run.clone();
                longer.push(t.action.clone());
                if ends.is_empty() {
                    violations.push(format!(
                        "run {} does not replay as {}",
                        show_word(&longer),
                        render_trace(&crate::projection::translate_word(&longer).unwrap_or_default(), &names)
                    ));
                }
                for end in ends {
                    if seen.insert((t.target, end.clone())) {
                        next_frontier.push(((t.target, end), longer.clone()));
                    }
                }
            }
        }
        frontier = next_frontier;
    }
    Verdict::from_violations(violations)
}

/// Every execution of the projected controller made of whole exchanges (at
/// most `depth` of them) is a run of `a`.
pub fn check_executions_are_runs(a: &ContractAutomaton, depth: usize) -> Verdict {
    let sys = project(&mpc(a));
    let names = sys.participants().to_vec();
    let start = (a.initial(), Configuration::initial(&sys));
    let mut seen = BTreeSet::from([start.clone()]);
    let mut frontier = vec![(start, Vec::<CfsmAction>::new())];
    let mut violations = Vec::new();
    for _ in 0..depth {
        let mut next_frontier = Vec::new();
        for ((s, c), trace) in frontier {
            for (send, _, recv, end) in exchanges(&sys, &c) {
                let mut longer = trace.clone();
                longer.extend([send.clone(), recv]);
                let Some(v) = matching_vector(a.rank(), &send) else { continue };
                match a.successor(s, &v) {
                    Some(s2) => {
                        if seen.insert((s2, end.clone())) {
                            next_frontier.push(((s2, end), longer));
                        }
                    }
                    None => violations.push(format!(
                        "execution {} is not a run of the automaton",
                        render_trace(&longer, &names)
                    )),
                }
            }
        }
        frontier = next_frontier;
    }
    Verdict::from_violations(violations)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchingConvergenceVerdict {
    pub status: Status,
    pub branching: bool,
    pub convergent: bool,
    pub details: Vec<String>,
}

/// The controller has the branching condition iff its projection is
/// convergent. Controllers with empty language are skipped: the condition
/// holds vacuously while the lone initial configuration is a deadlock.
pub fn check_branching_convergence(a: &ContractAutomaton) -> BranchingConvergenceVerdict {
    let k = mpc(a);
    let bc = branching_condition(&k);
    let sys = project(&k);
    let conv = is_convergent(&sys, Semantics::default()).expect("controller projections have no environment channels");
    let mut details = Vec::new();
    if let Some(w) = &bc.witness {
        details.push(format!(
            "branching witness: {} enabled at {}, missing at {}",
            w.action, w.enabled_at, w.missing_at
        ));
    }
    if let Some(t) = &conv.counterexample {
        details.push(format!("convergence counterexample: {}", sys.render_trace(t)));
    }
    let status = if !admits_strong_agreement(&k) {
        details.insert(0, "controller has empty language".into());
        Status::Skipped
    } else if bc.holds == conv.convergent {
        Status::Pass
    } else {
        Status::Fail
    };
    BranchingConvergenceVerdict {
        status,
        branching: bc.holds,
        convergent: conv.convergent,
        details,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiabilityMapping {
    pub trace: Vec<CfsmAction>,
    pub class: NodeClass,
    /// The automaton run the trace stands for, including the step that
    /// completes a trailing send.
    pub run: Vec<ActionVector>,
    /// First liable transition on `run`, if any.
    pub liable: Option<StateTransition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiabilityVerdict {
    /// Deadlocks map to runs through liable transitions (needs the
    /// branching condition of the automaton).
    pub deadlocks: Verdict,
    /// Non-deadlock configurations that cannot reach a final one map to
    /// runs through liable transitions.
    pub doomed: Verdict,
    pub mappings: Vec<LiabilityMapping>,
    /// Liable transitions no bad execution leads through. Informational:
    /// liability does not imply a bad execution.
    pub unexercised: Vec<StateTransition>,
}

pub fn check_liability_deadlock_link(a: &ContractAutomaton, depth: usize) -> LiabilityVerdict {
    let cs = controlled_system(a);
    let liability = liable(&cs);
    let liable_set: BTreeSet<&StateTransition> = liability.transitions.iter().collect();
    let sys = project(cs.controller());
    let names = sys.participants().to_vec();
    let g = explore(&sys, Semantics::default()).expect("controller projections have no environment channels");
    let classes = classify_configurations(&sys, &g);
    let node_of: HashMap<&Configuration, usize> = g.nodes.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let sem = Semantics::default();

    let step_in_a = |s: Option<StateId>, v: &ActionVector| -> (Option<StateId>, Option<StateTransition>) {
        let Some(s) = s else { return (None, None) };
        match a.successor(s, v) {
            Some(t) => {
                let st = StateTransition {
                    from: a.state(s).clone(),
                    action: v.clone(),
                    to: a.state(t).clone(),
                };
                let hit = liable_set.contains(&st).then_some(st);
                (Some(t), hit)
            }
            None => (None, None),
        }
    };

    #[derive(Clone)]
    struct Path {
        trace: Vec<CfsmAction>,
        run: Vec<ActionVector>,
        liable: Option<StateTransition>,
    }

    let mut mappings: Vec<LiabilityMapping> = Vec::new();
    let mut reported: BTreeSet<usize> = BTreeSet::new();
    let mut deadlock_violations = Vec::new();
    let mut doomed_violations = Vec::new();
    let mut exercised: BTreeSet<StateTransition> = BTreeSet::new();

    // `in_a`: the run is still a run of `a`
    let mut record = |node: usize, in_a: bool, path: &Path| {
        let class = classes[node];
        if !matches!(class, NodeClass::Deadlock | NodeClass::Doomed) {
            return;
        }
        if let Some(l) = &path.liable {
            exercised.insert(l.clone());
        }
        if !(in_a && path.liable.is_some()) {
            let msg = format!(
                "{} reaches a {} configuration without a liable transition",
                render_trace(&path.trace, &names),
                if class == NodeClass::Deadlock { "deadlock" } else { "doomed" }
            );
            if class == NodeClass::Deadlock {
                deadlock_violations.push(msg);
            } else {
                doomed_violations.push(msg);
            }
        }
        if reported.insert(node) {
            mappings.push(LiabilityMapping {
                trace: path.trace.clone(),
                class,
                run: path.run.clone(),
                liable: path.liable.clone(),
            });
        }
    };

    let start = Path {
        trace: Vec::new(),
        run: Vec::new(),
        liable: None,
    };
    record(0, true, &start);
    let mut seen = BTreeSet::from([(Some(a.initial()), 0usize, false)]);
    let mut frontier = vec![(Some(a.initial()), Configuration::initial(&sys), start)];
    for _ in 0..depth {
        let mut next_frontier = Vec::new();
        for (s, c, path) in frontier {
            for (send, mid) in successors(&sys, sem, &c) {
                let Some(v) = matching_vector(a.rank(), &send).filter(|_| send.is_send()) else {
                    continue;
                };
                let (s2, hit) = step_in_a(s, &v);

                // the send alone: completed by its match, or by the sender's
                // lone offer when the automaton has no such match
                let mut pending = path.clone();
                pending.trace.push(send.clone());
                if s2.is_some() {
                    pending.run.push(v.clone());
                    pending.liable = pending.liable.or(hit.clone());
                    record(node_of[&mid], true, &pending);
                } else {
                    let i = send.channel.from.index().expect("send between participants");
                    let offer = ActionVector::single(a.rank(), i, Label::Offer(send.name.clone()))
                        .expect("offer vector");
                    let (s_off, off_hit) = step_in_a(s, &offer);
                    if s_off.is_some() {
                        pending.run.push(offer);
                        pending.liable = pending.liable.or(off_hit);
                    }
                    record(node_of[&mid], s.is_some(), &pending);
                }

                for (recv, end) in successors(&sys, sem, &mid) {
                    if recv != send.dual() {
                        continue;
                    }
                    let mut full = path.clone();
                    full.trace.extend([send.clone(), recv]);
                    full.run.push(v.clone());
                    full.liable = full.liable.or(hit.clone());
                    let end_node = node_of[&end];
                    record(end_node, s2.is_some(), &full);
                    if seen.insert((s2, end_node, full.liable.is_some())) {
                        next_frontier.push((s2, end, full));
                    }
                }
            }
        }
        frontier = next_frontier;
    }

    // with an empty controller the initial configuration is a deadlock
    // reached by the empty trace, which traverses nothing
    let empty = !admits_strong_agreement(cs.controller());
    let skip = |reason: &str, violations: Vec<String>| {
        let mut v = Verdict::skipped(reason);
        v.details.extend(violations);
        v
    };
    let deadlocks = if empty {
        skip("controller has empty language", deadlock_violations)
    } else if !branching_condition(a).holds {
        skip("automaton lacks the branching condition", deadlock_violations)
    } else {
        Verdict::from_violations(deadlock_violations)
    };
    let doomed = if empty {
        skip("controller has empty language", doomed_violations)
    } else {
        Verdict::from_violations(doomed_violations)
    };
    let unexercised = liability
        .transitions
        .iter()
        .filter(|t| !exercised.contains(*t))
        .cloned()
        .collect();
    LiabilityVerdict {
        deadlocks,
        doomed,
        mappings,
        unexercised,
    }
}

// ---------------------------------------------------------------------------
// batch runs

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyParams {
    pub generator: GeneratorParams,
    pub trials: usize,
    pub seed: u64,
    /// Run length bound; defaults to twice the product's state count.
    pub depth: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
}

impl Tally {
    fn add(&mut self, s: Status) {
        match s {
            Status::Pass => self.pass += 1,
            Status::Fail => self.fail += 1,
            Status::Skipped => self.skipped += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub trials: usize,
    pub language: Tally,
    pub runs_replay: Tally,
    pub executions_are_runs: Tally,
    pub branching_convergence: Tally,
    pub liability_deadlock: Tally,
    pub liability_doomed: Tally,
    /// `seed: check: detail` for every failing check.
    pub failures: Vec<String>,
    pub product_states: usize,
    pub product_transitions: usize,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs every check on `trials` generated systems, trial `t` using seed
/// `seed + t`.
pub fn run_verify(params: &VerifyParams) -> VerifyReport {
    let mut report = VerifyReport {
        trials: params.trials,
        ..VerifyReport::default()
    };
    for t in 0..params.trials {
        let seed = params.seed.wrapping_add(t as u64);
        let ops = generate_random_system(&params.generator, seed);
        let p = match product(&ops) {
            Ok(p) => p,
            Err(e) => {
                report.failures.push(format!("{seed}: product: {e}"));
                continue;
            }
        };
        report.product_states += p.num_states();
        report.product_transitions += p.transitions().len();
        let depth = params.depth.unwrap_or(2 * p.num_states());
        let k = mpc(&p);
        let checks = {
            let lang = check_controller_language(&p, &k);
            let snd = check_runs_replay(&p, depth);
            let cmp = check_executions_are_runs(&p, depth);
            let t2 = check_branching_convergence(&p);
            let li = check_liability_deadlock_link(&p, depth);
            [
                ("language", lang.status, lang.details),
                ("runs-replay", snd.status, snd.details),
                ("executions-are-runs", cmp.status, cmp.details),
                ("branching-convergence", t2.status, t2.details),
                ("liability-deadlock", li.deadlocks.status, li.deadlocks.details),
                ("liability-doomed", li.doomed.status, li.doomed.details),
            ]
        };
        for (name, status, details) in checks {
            let tally = match name {
                "language" => &mut report.language,
                "runs-replay" => &mut report.runs_replay,
                "executions-are-runs" => &mut report.executions_are_runs,
                "branching-convergence" => &mut report.branching_convergence,
                "liability-deadlock" => &mut report.liability_deadlock,
                _ => &mut report.liability_doomed,
            };
            tally.add(status);
            if status == Status::Fail {
                report
                    .failures
                    .push(format!("{seed}: {name}: {}", details.join("; ")));
            }
        }
    }
    report
}
