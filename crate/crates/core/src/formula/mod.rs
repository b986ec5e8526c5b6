//! The formula language: agents, formulas, formula sets and the machinery
//! (closures, fully expanded sets) the tableau is built from.

mod closure;
pub(crate) mod expansion;
mod parser;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use closure::{closure, extended_closure, ClosureIndex, FormulaBits, Shape};
pub use expansion::{
    full_expansions, is_fully_expanded, minimal_fully_expanded_extensions, DecisionScope, SrMode,
};
pub use parser::{parse, parse_unchecked};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown agent `{name}` at position {pos}")]
    UnknownAgent { name: String, pos: usize },
    #[error("invalid agent name `{0}` (expected [a-z][a-zA-Z0-9_]*)")]
    InvalidAgentName(String),
    #[error("the agent set must not be empty")]
    EmptyAgentSet,
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Agent(Arc<str>);

impl Agent {
    pub fn new(name: &str) -> Result<Self, FormulaError> {
        if is_identifier(name) {
            Ok(Agent(Arc::from(name)))
        } else {
            Err(FormulaError::InvalidAgentName(name.to_string()))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A non-empty set of agents, iterated in lexicographic order.
///
/// The one-agent restriction of the decision procedure is enforced by the
/// tableau, not here: the model enumerator is also used with a single agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentSet(BTreeSet<Agent>);

impl AgentSet {
    pub fn new<I, S>(names: I) -> Result<Self, FormulaError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let agents = names
            .into_iter()
            .map(|n| Agent::new(n.as_ref().trim()))
            .collect::<Result<BTreeSet<_>, _>>()?;
        if agents.is_empty() {
            return Err(FormulaError::EmptyAgentSet);
        }
        Ok(AgentSet(agents))
    }

    /// Parses a comma separated list such as `a,b`.
    pub fn parse_list(list: &str) -> Result<Self, FormulaError> {
        AgentSet::new(list.split(',').filter(|s| !s.trim().is_empty()))
    }

    /// The agents occurring in `formula`.
    pub fn of_formula(formula: &Formula) -> Option<Self> {
        let mut agents = BTreeSet::new();
        formula.collect_agents(&mut agents);
        if agents.is_empty() {
            None
        } else {
            Some(AgentSet(agents))
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, agent: &Agent) -> bool {
        self.0.contains(agent)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Agent> {
        self.0.iter()
    }

    pub fn position(&self, agent: &Agent) -> Option<usize> {
        self.0.iter().position(|a| a == agent)
    }

    pub fn get(&self, index: usize) -> Option<&Agent> {
        self.0.iter().nth(index)
    }

    /// True if every agent of `formula` is a member of this set.
    pub fn covers(&self, formula: &Formula) -> bool {
        let mut agents = BTreeSet::new();
        formula.collect_agents(&mut agents);
        agents.is_subset(&self.0)
    }
}

impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(Agent::name).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// Formulas over atoms, negation, conjunction, individual knowledge `K{a}`,
/// distributed knowledge `D` and common knowledge `C`.
///
/// Derived connectives are desugared by the parser; structural equality is
/// formula identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Arc<str>),
    Not(Arc<Formula>),
    And(Arc<Formula>, Arc<Formula>),
    Knows(Agent, Arc<Formula>),
    Dist(Arc<Formula>),
    Common(Arc<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Atom(Arc::from(name))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Arc::new(self))
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(Arc::new(self), Arc::new(other))
    }

    pub fn knows(agent: &Agent, child: Formula) -> Self {
        Formula::Knows(agent.clone(), Arc::new(child))
    }

    pub fn dist(child: Formula) -> Self {
        Formula::Dist(Arc::new(child))
    }

    pub fn common(child: Formula) -> Self {
        Formula::Common(Arc::new(child))
    }

    pub fn or(self, other: Formula) -> Self {
        self.not().and(other.not()).not()
    }

    pub fn implies(self, other: Formula) -> Self {
        self.and(other.not()).not()
    }

    pub fn iff(self, other: Formula) -> Self {
        self.clone().implies(other.clone()).and(other.implies(self))
    }

    /// `¬φ` for `φ` given, i.e. the syntactic negation without simplification.
    pub fn negated(&self) -> Formula {
        self.clone().not()
    }

    /// The body `φ` if this formula is `¬φ`.
    pub fn negation_body(&self) -> Option<&Formula> {
        match self {
            Formula::Not(inner) => Some(inner),
            _ => None,
        }
    }

    pub fn is_eventuality(&self) -> bool {
        matches!(self, Formula::Not(inner) if matches!(**inner, Formula::Common(_)))
    }

    /// `¬K_aφ` or `¬Dφ`: the formulas that label tableau edges.
    pub fn is_diamond(&self) -> bool {
        matches!(self, Formula::Not(inner)
            if matches!(**inner, Formula::Knows(..) | Formula::Dist(_)))
    }

    /// Number of connectives (atoms excluded).
    pub fn connectives(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(c) | Formula::Knows(_, c) | Formula::Dist(c) | Formula::Common(c) => {
                1 + c.connectives()
            }
            Formula::And(l, r) => 1 + l.connectives() + r.connectives(),
        }
    }

    /// Number of symbols: connectives plus atom occurrences.
    pub fn length(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Not(c) | Formula::Knows(_, c) | Formula::Dist(c) | Formula::Common(c) => {
                1 + c.length()
            }
            Formula::And(l, r) => 1 + l.length() + r.length(),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(p) => {
                out.insert(p.to_string());
            }
            Formula::Not(c) | Formula::Knows(_, c) | Formula::Dist(c) | Formula::Common(c) => {
                c.collect_atoms(out)
            }
            Formula::And(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    fn collect_agents(&self, out: &mut BTreeSet<Agent>) {
        match self {
            Formula::Atom(_) => {}
            Formula::Knows(a, c) => {
                out.insert(a.clone());
                c.collect_agents(out);
            }
            Formula::Not(c) | Formula::Dist(c) | Formula::Common(c) => c.collect_agents(out),
            Formula::And(l, r) => {
                l.collect_agents(out);
                r.collect_agents(out);
            }
        }
    }

    /// ASCII rendering in the input grammar; `parse` inverts it.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, false);
        out
    }

    fn render_into(&self, out: &mut String, operand: bool) {
        match self {
            Formula::Atom(p) => out.push_str(p),
            Formula::Not(c) => {
                out.push('~');
                c.render_into(out, true);
            }
            Formula::Knows(a, c) => {
                out.push_str("K{");
                out.push_str(a.name());
                out.push_str("} ");
                c.render_into(out, true);
            }
            Formula::Dist(c) => {
                out.push_str("D ");
                c.render_into(out, true);
            }
            Formula::Common(c) => {
                out.push_str("C ");
                c.render_into(out, true);
            }
            Formula::And(l, r) => {
                if operand {
                    out.push('(');
                }
                // `&` is left associative: only a right-nested conjunction needs parentheses.
                l.render_into(out, false);
                out.push_str(" & ");
                r.render_into(out, true);
                if operand {
                    out.push(')');
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// All subformulae of `formula`, itself included.
pub fn subformulae(formula: &Formula) -> FormulaSet {
    let mut set = FormulaSet::new();
    fn walk(f: &Formula, set: &mut FormulaSet) {
        if !set.insert(f.clone()) {
            return;
        }
        match f {
            Formula::Atom(_) => {}
            Formula::Not(c) | Formula::Knows(_, c) | Formula::Dist(c) | Formula::Common(c) => {
                walk(c, set)
            }
            Formula::And(l, r) => {
                walk(l, set);
                walk(r, set);
            }
        }
    }
    walk(formula, &mut set);
    set
}

/// A duplicate-free, canonically ordered set of formulas.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormulaSet(BTreeSet<Formula>);

impl FormulaSet {
    pub fn new() -> Self {
        FormulaSet(BTreeSet::new())
    }

    pub fn insert(&mut self, formula: Formula) -> bool {
        self.0.insert(formula)
    }

    pub fn remove(&mut self, formula: &Formula) -> bool {
        self.0.remove(formula)
    }

    pub fn contains(&self, formula: &Formula) -> bool {
        self.0.contains(formula)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Formula> {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &FormulaSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &FormulaSet) -> FormulaSet {
        FormulaSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn extend<I: IntoIterator<Item = Formula>>(&mut self, items: I) {
        self.0.extend(items)
    }

    /// Members sorted by their rendering.
    pub fn rendered(&self) -> Vec<String> {
        let mut out: Vec<String> = self.0.iter().map(Formula::render).collect();
        out.sort();
        out
    }
}

impl FromIterator<Formula> for FormulaSet {
    fn from_iter<I: IntoIterator<Item = Formula>>(iter: I) -> Self {
        FormulaSet(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a FormulaSet {
    type Item = &'a Formula;
    type IntoIter = std::collections::btree_set::Iter<'a, Formula>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for FormulaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.rendered().join(", "))
    }
}

/// True iff some `χ` and `¬χ` are both members.
pub fn is_patently_inconsistent(set: &FormulaSet) -> bool {
    set.iter().any(|f| set.contains(&f.negated()))
}

/// An eventuality `¬Cφ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Eventuality(Formula);

impl Eventuality {
    pub fn new(formula: Formula) -> Option<Self> {
        formula.is_eventuality().then_some(Eventuality(formula))
    }

    pub fn formula(&self) -> &Formula {
        &self.0
    }

    /// `φ` of `¬Cφ`.
    pub fn body(&self) -> &Formula {
        match &self.0 {
            Formula::Not(inner) => match &**inner {
                Formula::Common(body) => body,
                _ => unreachable!("eventuality invariant"),
            },
            _ => unreachable!("eventuality invariant"),
        }
    }

    /// `¬φ`, whose presence realizes the eventuality.
    pub fn goal(&self) -> Formula {
        self.body().negated()
    }
}

impl fmt::Display for Eventuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Every eventuality occurring in one of `sets`, deduplicated and sorted by rendering.
pub fn eventualities_of<'a, I>(sets: I) -> Vec<Eventuality>
where
    I: IntoIterator<Item = &'a FormulaSet>,
{
    let mut found: BTreeSet<(String, Formula)> = BTreeSet::new();
    for set in sets {
        for f in set.iter().filter(|f| f.is_eventuality()) {
            found.insert((f.render(), f.clone()));
        }
    }
    found
        .into_iter()
        .filter_map(|(_, f)| Eventuality::new(f))
        .collect()
}
