//! The algebra of experimental setups.
//!
//! A setup is a set of open slits. Setups are written as expressions over slit
//! labels joined with `v` (or `∨`), e.g. `(a v a') v a''`. The join is treated
//! as associative and commutative, so every expression canonicalizes to a
//! [`Configuration`]: the sorted set of slits it leaves open.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SetupError {
    #[error("syntax error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("slit `{0}` appears more than once")]
    DuplicateSlit(String),
    #[error("invalid slit label `{0}`")]
    InvalidLabel(String),
    #[error("association variants need at least 3 slits, got {0}")]
    TooFewSlits(usize),
    #[error("a configuration must contain at least one open slit")]
    EmptyConfiguration,
}

/// Label of a single slit, e.g. `a`, `a'`, `a''`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SlitId(String);

fn is_label_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

impl SlitId {
    pub fn new(label: impl Into<String>) -> Result<Self, SetupError> {
        let label = label.into();
        // `v` alone is the join token.
        if label.is_empty() || label == "v" || !label.chars().all(is_label_char) {
            return Err(SetupError::InvalidLabel(label));
        }
        Ok(SlitId(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SlitId {
    type Error = SetupError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        SlitId::new(value)
    }
}

impl From<SlitId> for String {
    fn from(value: SlitId) -> Self {
        value.0
    }
}

impl fmt::Display for SlitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Convenience for building slit lists in code and tests.
pub fn slits(labels: &[&str]) -> Result<Vec<SlitId>, SetupError> {
    labels.iter().map(|l| SlitId::new(*l)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SetupExpr {
    Atom(SlitId),
    Join(Box<SetupExpr>, Box<SetupExpr>),
}

impl SetupExpr {
    pub fn atom(id: SlitId) -> Self {
        SetupExpr::Atom(id)
    }

    pub fn join(left: SetupExpr, right: SetupExpr) -> Self {
        SetupExpr::Join(Box::new(left), Box::new(right))
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&SlitId> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a SlitId>) {
        match self {
            SetupExpr::Atom(id) => out.push(id),
            SetupExpr::Join(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    /// Checks that no slit is opened twice.
    pub fn validate(&self) -> Result<(), SetupError> {
        let mut seen = BTreeSet::new();
        for leaf in self.leaves() {
            if !seen.insert(leaf) {
                return Err(SetupError::DuplicateSlit(leaf.to_string()));
            }
        }
        Ok(())
    }

    /// Swap the children of every join.
    pub fn mirrored(&self) -> Self {
        match self {
            SetupExpr::Atom(id) => SetupExpr::Atom(id.clone()),
            SetupExpr::Join(l, r) => SetupExpr::join(r.mirrored(), l.mirrored()),
        }
    }
}

/// Pretty-prints with the minimum parentheses needed under left association.
impl fmt::Display for SetupExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetupExpr::Atom(id) => write!(f, "{id}"),
            SetupExpr::Join(l, r) => {
                write!(f, "{l} v ")?;
                match **r {
                    SetupExpr::Atom(_) => write!(f, "{r}"),
                    SetupExpr::Join(..) => write!(f, "({r})"),
                }
            }
        }
    }
}

pub fn render(expr: &SetupExpr) -> String {
    expr.to_string()
}

/// A non-empty, sorted, duplicate-free set of open slits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration(BTreeSet<SlitId>);

impl Configuration {
    pub fn new(open: impl IntoIterator<Item = SlitId>) -> Result<Self, SetupError> {
        let set: BTreeSet<SlitId> = open.into_iter().collect();
        if set.is_empty() {
            return Err(SetupError::EmptyConfiguration);
        }
        Ok(Configuration(set))
    }

    pub fn single(id: SlitId) -> Self {
        Configuration(BTreeSet::from([id]))
    }

    pub fn contains(&self, id: &SlitId) -> bool {
        self.0.contains(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SlitId> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(&self, other: &Configuration) -> Configuration {
        Configuration(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_disjoint(&self, other: &Configuration) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn labels(&self) -> Vec<String> {
        self.0.iter().map(|s| s.to_string()).collect()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

/// Flattens all joins into the set of open slits.
pub fn canonicalize(expr: &SetupExpr) -> Configuration {
    Configuration(expr.leaves().into_iter().cloned().collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Label(String),
    Join,
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, SetupError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' {
            tokens.push((pos, Token::Open));
            chars.next();
        } else if c == ')' {
            tokens.push((pos, Token::Close));
            chars.next();
        } else if c == '∨' {
            tokens.push((pos, Token::Join));
            chars.next();
        } else if is_label_char(c) {
            let mut label = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !is_label_char(c) {
                    break;
                }
                label.push(c);
                chars.next();
            }
            if label == "v" {
                tokens.push((pos, Token::Join));
            } else {
                tokens.push((pos, Token::Label(label)));
            }
        } else {
            return Err(SetupError::Syntax {
                position: pos,
                expected: "slit label, `(`, `)` or `v`".into(),
            });
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn error(&self, expected: &str) -> SetupError {
        SetupError::Syntax {
            position: self.offset(),
            expected: expected.to_string(),
        }
    }

    // expr := primary ("v" primary)*
    fn expr(&mut self) -> Result<SetupExpr, SetupError> {
        let mut lhs = self.primary()?;
        while self.peek() == Some(&Token::Join) {
            self.pos += 1;
            let rhs = self.primary()?;
            lhs = SetupExpr::join(lhs, rhs);
        }
        Ok(lhs)
    }

    // primary := label | "(" expr ")"
    fn primary(&mut self) -> Result<SetupExpr, SetupError> {
        match self.peek().cloned() {
            Some(Token::Label(label)) => {
                self.pos += 1;
                Ok(SetupExpr::Atom(SlitId::new(label)?))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(self.error("`)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(self.error("slit label or `(`")),
        }
    }
}

/// Parses a setup expression. `v` and `∨` are synonyms and associate to the left.
pub fn parse_setup(text: &str) -> Result<SetupExpr, SetupError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        end: text.len(),
    };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("`v` or end of input"));
    }
    expr.validate()?;
    Ok(expr)
}

/// Every full binary bracketing of `leaves`, in a fixed order.
pub fn association_trees(leaves: &[SlitId]) -> Vec<SetupExpr> {
    match leaves.len() {
        0 => Vec::new(),
        1 => vec![SetupExpr::Atom(leaves[0].clone())],
        n => {
            let mut out = Vec::new();
            for split in (1..n).rev() {
                let lefts = association_trees(&leaves[..split]);
                let rights = association_trees(&leaves[split..]);
                for l in &lefts {
                    for r in &rights {
                        out.push(SetupExpr::join(l.clone(), r.clone()));
                    }
                }
            }
            out
        }
    }
}

/// All unordered pairs of distinct bracketings of the same leaf sequence.
///
/// For three slits this is the single pair `((a v a') v a'', a v (a' v a''))`.
pub fn association_variants(slits: &[SlitId]) -> Result<Vec<(SetupExpr, SetupExpr)>, SetupError> {
    if slits.len() < 3 {
        return Err(SetupError::TooFewSlits(slits.len()));
    }
    let unique: BTreeSet<&SlitId> = slits.iter().collect();
    if unique.len() != slits.len() {
        let dup = slits
            .iter()
            .enumerate()
            .find(|(i, s)| slits[..*i].contains(s))
            .map(|(_, s)| s.to_string())
            .unwrap_or_default();
        return Err(SetupError::DuplicateSlit(dup));
    }
    let trees = association_trees(slits);
    let mut pairs = Vec::with_capacity(trees.len() * (trees.len() - 1) / 2);
    for i in 0..trees.len() {
        for j in i + 1..trees.len() {
            pairs.push((trees[i].clone(), trees[j].clone()));
        }
    }
    Ok(pairs)
}
