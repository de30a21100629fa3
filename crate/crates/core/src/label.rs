//! Labels and action vectors.
//!
//! A [`Label`] is one principal's contribution to a move: it offers an
//! action, requests it, or stays idle. An [`ActionVector`] is a tuple of
//! labels, one per principal, and is always one of three shapes: a lone
//! request, a lone offer, or a match pairing an offer with a request on the
//! same action name.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An action identifier. Case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionName(String);

impl ActionName {
    pub fn new(name: impl Into<String>) -> Self {
        ActionName(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Non-empty, ASCII alphanumerics and `_` only.
    pub fn is_well_formed(&self) -> bool {
        is_identifier(&self.0)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl From<&str> for ActionName {
    fn from(s: &str) -> Self {
        ActionName(s.to_owned())
    }
}

impl From<String> for ActionName {
    fn from(s: String) -> Self {
        ActionName(s)
    }
}

impl fmt::Display for ActionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One principal's move inside an action vector.
///
/// The derived ordering (`Idle < Offer < Request`, then by name) is the
/// canonical label order used for sorting and witness selection.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Idle,
    Offer(ActionName),
    Request(ActionName),
}

impl Label {
    pub fn offer(name: impl Into<ActionName>) -> Self {
        Label::Offer(name.into())
    }

    pub fn request(name: impl Into<ActionName>) -> Self {
        Label::Request(name.into())
    }

    /// The involution swapping offers and requests on the same name.
    pub fn complement(&self) -> Label {
        match self {
            Label::Idle => Label::Idle,
            Label::Offer(n) => Label::Request(n.clone()),
            Label::Request(n) => Label::Offer(n.clone()),
        }
    }

    pub fn is_idle(&self) -> bool {
        matches!(self, Label::Idle)
    }

    pub fn name(&self) -> Option<&ActionName> {
        match self {
            Label::Idle => None,
            Label::Offer(n) | Label::Request(n) => Some(n),
        }
    }
}

/// Text form: `!a` offers `a`, `?a` requests `a`, `-` is idle.
impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Idle => f.write_str("-"),
            Label::Offer(n) => write!(f, "!{n}"),
            Label::Request(n) => write!(f, "?{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelSyntaxError {
    #[error("empty label")]
    Empty,
    #[error("label `{0}` must be `-`, `!name` or `?name`")]
    BadPrefix(String),
    #[error("action name `{0}` is not an identifier")]
    BadName(String),
}

impl FromStr for Label {
    type Err = LabelSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(LabelSyntaxError::Empty);
        }
        if s == "-" {
            return Ok(Label::Idle);
        }
        let (ctor, rest): (fn(ActionName) -> Label, &str) = match s.split_at(1) {
            ("!", rest) => (Label::Offer, rest),
            ("?", rest) => (Label::Request, rest),
            _ => return Err(LabelSyntaxError::BadPrefix(s.to_owned())),
        };
        if !is_identifier(rest) {
            return Err(LabelSyntaxError::BadName(rest.to_owned()));
        }
        Ok(ctor(ActionName::new(rest)))
    }
}

/// Result of classifying a raw label tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Classification {
    Request { name: ActionName, requester: usize },
    Offer { name: ActionName, offerer: usize },
    Match { name: ActionName, offerer: usize, requester: usize },
    Invalid,
}

/// Classifies a tuple of labels as a request, offer or match action.
pub fn classify(labels: &[Label]) -> Classification {
    let mut busy = labels.iter().enumerate().filter(|(_, l)| !l.is_idle());
    let first = busy.next();
    let second = busy.next();
    if busy.next().is_some() {
        return Classification::Invalid;
    }
    match (first, second) {
        (Some((i, Label::Request(n))), None) => Classification::Request {
            name: n.clone(),
            requester: i,
        },
        (Some((i, Label::Offer(n))), None) => Classification::Offer {
            name: n.clone(),
            offerer: i,
        },
        (Some((i, Label::Offer(a))), Some((j, Label::Request(b))))
        | (Some((j, Label::Request(b))), Some((i, Label::Offer(a))))
            if a == b =>
        {
            Classification::Match {
                name: a.clone(),
                offerer: i,
                requester: j,
            }
        }
        _ => Classification::Invalid,
    }
}

/// The three well-formed action shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Request,
    Offer,
    Match,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("action vector {0} is not a request, offer or match action")]
    NotAnAction(String),
    #[error("action vector must have at least one entry")]
    Empty,
    #[error("{op} is undefined on {kind:?} action {vector}")]
    WrongKind {
        op: &'static str,
        kind: ActionKind,
        vector: String,
    },
}

/// A well-formed action: a tuple of labels of rank `n` fitting exactly one of
/// the request, offer or match shapes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionVector {
    labels: Vec<Label>,
}

impl ActionVector {
    pub fn new(labels: Vec<Label>) -> Result<Self, ShapeError> {
        if labels.is_empty() {
            return Err(ShapeError::Empty);
        }
        if classify(&labels) == Classification::Invalid {
            return Err(ShapeError::NotAnAction(render_labels(&labels)));
        }
        Ok(ActionVector { labels })
    }

    /// A match of rank `rank` with the offer at `offerer` and the request at
    /// `requester`.
    pub fn matching(rank: usize, name: &ActionName, offerer: usize, requester: usize) -> Self {
        assert!(offerer != requester && offerer < rank && requester < rank);
        let mut labels = vec![Label::Idle; rank];
        labels[offerer] = Label::Offer(name.clone());
        labels[requester] = Label::Request(name.clone());
        ActionVector { labels }
    }

    /// A lone label of rank `rank` at `position`.
    pub fn single(rank: usize, position: usize, label: Label) -> Result<Self, ShapeError> {
        let mut labels = vec![Label::Idle; rank];
        if position < rank {
            labels[position] = label;
        }
        ActionVector::new(labels)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn classification(&self) -> Classification {
        classify(&self.labels)
    }

    pub fn kind(&self) -> ActionKind {
        match self.classification() {
            Classification::Request { .. } => ActionKind::Request,
            Classification::Offer { .. } => ActionKind::Offer,
            Classification::Match { .. } => ActionKind::Match,
            Classification::Invalid => unreachable!("ActionVector is validated on construction"),
        }
    }

    pub fn is_match(&self) -> bool {
        self.kind() == ActionKind::Match
    }

    /// The action name the vector is "on".
    pub fn name(&self) -> &ActionName {
        self.labels
            .iter()
            .find_map(Label::name)
            .expect("well-formed action has a non-idle entry")
    }

    /// Whether participant `i` does anything in this action.
    pub fn involves(&self, i: usize) -> bool {
        self.labels.get(i).is_some_and(|l| !l.is_idle())
    }

    /// Index of the offering participant. Defined on offers and matches.
    pub fn sender(&self) -> Result<usize, ShapeError> {
        match self.classification() {
            Classification::Offer { offerer, .. } | Classification::Match { offerer, .. } => {
                Ok(offerer)
            }
            _ => Err(self.wrong_kind("snd")),
        }
    }

    /// Index of the requesting participant. Defined on requests and matches.
    pub fn receiver(&self) -> Result<usize, ShapeError> {
        match self.classification() {
            Classification::Request { requester, .. }
            | Classification::Match { requester, .. } => Ok(requester),
            _ => Err(self.wrong_kind("rcv")),
        }
    }

    fn wrong_kind(&self, op: &'static str) -> ShapeError {
        ShapeError::WrongKind {
            op,
            kind: self.kind(),
            vector: self.to_string(),
        }
    }

    /// Concatenates per-operand vectors; used by the product.
    pub(crate) fn from_labels_unchecked(labels: Vec<Label>) -> Self {
        debug_assert!(classify(&labels) != Classification::Invalid);
        ActionVector { labels }
    }
}

/// Complementarity of two actions: equal length, and one is an offer on
/// some name while the other is a request on the same name.
pub fn complementary(v1: &ActionVector, v2: &ActionVector) -> bool {
    if v1.rank() != v2.rank() {
        return false;
    }
    match (v1.classification(), v2.classification()) {
        (Classification::Offer { name: a, .. }, Classification::Request { name: b, .. })
        | (Classification::Request { name: a, .. }, Classification::Offer { name: b, .. }) => {
            a == b
        }
        _ => false,
    }
}

fn render_labels(labels: &[Label]) -> String {
    let parts: Vec<String> = labels.iter().map(Label::to_string).collect();
    format!("({})", parts.join(","))
}

impl fmt::Display for ActionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_labels(&self.labels))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionSyntaxError {
    #[error(transparent)]
    Label(#[from] LabelSyntaxError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Parses `(!a,?a,-)`; the parentheses are optional.
impl FromStr for ActionVector {
    type Err = ActionSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let inner = s
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .unwrap_or(s);
        let labels = inner
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<Label>, _>>()?;
        Ok(ActionVector::new(labels)?)
    }
}
