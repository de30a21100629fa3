//! Small reference systems used throughout the tests and as CLI fixtures.

use crate::automaton::{ContractAutomaton, StateVector};
use crate::label::{ActionVector, Label};

fn principal(initial: &str, accepting: &[&str], ts: &[(&str, Label, &str)]) -> ContractAutomaton {
    ContractAutomaton::principal(initial, accepting, ts).expect("sample principal is valid")
}

fn offer(n: &str) -> Label {
    Label::offer(n)
}

fn request(n: &str) -> Label {
    Label::request(n)
}

/// Three kids swapping toys: one lends a plane, one trades a bike for the
/// plane, one wants either.
pub fn toy_exchange() -> [ContractAutomaton; 3] {
    let lender = principal("q0", &["q1"], &[("q0", offer("a"), "q1")]);
    let trader = principal(
        "q0",
        &["q3"],
        &[
            ("q0", request("a"), "q2"),
            ("q2", offer("b"), "q3"),
            ("q0", offer("b"), "q1"),
            ("q1", request("a"), "q3"),
        ],
    );
    let taker = principal(
        "q0",
        &["q1"],
        &[("q0", request("a"), "q1"), ("q0", request("b"), "q1")],
    );
    [lender, trader, taker]
}

/// Three principals whose product satisfies the branching condition while
/// its controller does not.
pub fn branching_gap() -> [ContractAutomaton; 3] {
    let a = principal(
        "q0_1",
        &["q1_1"],
        &[
            ("q0_1", offer("a"), "q1_1"),
            ("q0_1", offer("b"), "q2_1"),
            ("q2_1", offer("a"), "q1_1"),
            ("q1_1", offer("a"), "q1_1"),
        ],
    );
    let b = principal(
        "q0_2",
        &["q1_2"],
        &[
            ("q0_2", request("a"), "q1_2"),
            ("q0_2", offer("c"), "q2_2"),
            ("q2_2", request("a"), "q1_2"),
            ("q1_2", request("a"), "q1_2"),
        ],
    );
    let c = principal(
        "q0_3",
        &["q1_3", "q2_3", "q3_3"],
        &[
            ("q0_3", request("b"), "q1_3"),
            ("q0_3", request("c"), "q3_3"),
            ("q1_3", request("c"), "q2_3"),
            ("q3_3", request("b"), "q2_3"),
        ],
    );
    [a, b, c]
}

/// Two offerers and two requesters of the same action.
pub fn four_party() -> [ContractAutomaton; 4] {
    let giver = || principal("q0", &["q1"], &[("q0", offer("a"), "q1")]);
    let getter = || principal("q0", &["q1"], &[("q0", request("a"), "q1")]);
    [giver(), giver(), getter(), getter()]
}

/// A relay whose controller has a reachable deadlock: the third party may
/// send `d` before the first is ready to read it.
pub fn relay() -> [ContractAutomaton; 3] {
    let a = principal(
        "a0",
        &["a3"],
        &[
            ("a0", offer("a"), "a1"),
            ("a1", request("ok"), "a2"),
            ("a2", request("d"), "a3"),
        ],
    );
    let b = principal(
        "b0",
        &["b5"],
        &[
            ("b0", request("a"), "b1"),
            ("b1", request("c"), "b3"),
            ("b0", request("c"), "b2"),
            ("b2", request("a"), "b3"),
            ("b3", offer("ok"), "b4"),
            ("b4", offer("ok"), "b5"),
        ],
    );
    let c = principal(
        "c0",
        &["c3"],
        &[
            ("c0", request("a"), "c1"),
            ("c1", offer("ok"), "c2"),
            ("c2", offer("d"), "c3"),
            ("c0", offer("c"), "c4"),
            ("c4", request("ok"), "c5"),
            ("c5", offer("d"), "c3"),
        ],
    );
    [a, b, c]
}

/// Rank-3 automaton looping on a match before a final match.
pub fn loop_then_exit() -> ContractAutomaton {
    let q0 = StateVector::from(["s0", "t0", "u0"]);
    let q1 = StateVector::from(["s1", "t0", "u1"]);
    let av = |s: &str| s.parse::<ActionVector>().unwrap();
    ContractAutomaton::new(
        3,
        [q0.clone(), q1.clone()],
        q0.clone(),
        [q1.clone()],
        [(q0.clone(), av("(!a,?a,-)"), q0.clone()), (q0, av("(!b,-,?b)"), q1)],
    )
    .expect("sample automaton is valid")
}

/// Two parties that may either send or receive first.
pub fn mixed_choice_race() -> [ContractAutomaton; 2] {
    let a = principal(
        "q0",
        &["q1"],
        &[("q0", offer("a"), "q1"), ("q0", request("b"), "q1")],
    );
    let b = principal(
        "q0",
        &["q1"],
        &[("q0", offer("b"), "q1"), ("q0", request("a"), "q1")],
    );
    [a, b]
}

/// Two parties swapping in either order.
pub fn mixed_choice_swap() -> [ContractAutomaton; 2] {
    let a = principal(
        "q0",
        &["q3"],
        &[
            ("q0", offer("a"), "q1"),
            ("q1", request("b"), "q3"),
            ("q0", request("b"), "q2"),
            ("q2", offer("a"), "q3"),
        ],
    );
    let b = principal(
        "q0",
        &["q3"],
        &[
            ("q0", offer("b"), "q1"),
            ("q1", request("a"), "q3"),
            ("q0", request("a"), "q2"),
            ("q2", offer("b"), "q3"),
        ],
    );
    [a, b]
}
