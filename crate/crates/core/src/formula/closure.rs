//! Closure, extended closure, and a dense index over the extended closure.
//!
//! The tableau represents formula sets as bitsets over `ecl(θ)`; the index
//! orders members by their rendering so that iteration order, branch order
//! and output order coincide.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use super::{AgentSet, Formula, FormulaSet};
use crate::formula::expansion::DecisionScope;

/// The closure of `roots`: closed under subformulae, `K_aφ ⇒ Dφ`, and
/// `Cφ ⇒ K_a(φ ∧ Cφ)` for every agent.
fn closure_of(roots: &[Formula], agents: &AgentSet) -> FormulaSet {
    let mut set = FormulaSet::new();
    let mut work: Vec<Formula> = roots.to_vec();
    while let Some(f) = work.pop() {
        if set.contains(&f) {
            continue;
        }
        match &f {
            Formula::Atom(_) => {}
            Formula::Not(c) | Formula::Dist(c) => work.push((**c).clone()),
            Formula::And(l, r) => {
                work.push((**l).clone());
                work.push((**r).clone());
            }
            Formula::Knows(_, c) => {
                work.push((**c).clone());
                work.push(Formula::Dist(c.clone()));
            }
            Formula::Common(c) => {
                work.push((**c).clone());
                for a in agents.iter() {
                    work.push(Formula::knows(a, (**c).clone().and(f.clone())));
                }
            }
        }
        set.insert(f);
    }
    set
}

pub fn closure(theta: &Formula, agents: &AgentSet) -> FormulaSet {
    closure_of(std::slice::from_ref(theta), agents)
}

pub fn extended_closure(theta: &Formula, agents: &AgentSet) -> FormulaSet {
    let cl = closure(theta, agents);
    let negations: Vec<Formula> = cl.iter().map(Formula::negated).collect();
    let mut ecl = cl;
    ecl.extend(negations);
    ecl
}

/// The top-level shape of an indexed formula, with children as indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Atom,
    Not(usize),
    And(usize, usize),
    /// Agent position in the agent set, then the child.
    Knows(usize, usize),
    Dist(usize),
    Common(usize),
}

/// A formula set as a bitset over a [`ClosureIndex`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormulaBits(FixedBitSet);

impl FormulaBits {
    pub fn with_capacity(len: usize) -> Self {
        FormulaBits(FixedBitSet::with_capacity(len))
    }

    pub fn insert(&mut self, i: usize) -> bool {
        !self.0.put(i)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(i)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn is_subset(&self, other: &FormulaBits) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Member indices in ascending (rendering) order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }
}

/// Dense numbering of an extended closure plus the structural links the
/// expansion and construction rules need.
#[derive(Debug, Clone)]
pub struct ClosureIndex {
    agents: AgentSet,
    formulas: Vec<Formula>,
    rendered: Vec<String>,
    positions: HashMap<Formula, usize>,
    shapes: Vec<Shape>,
    negations: Vec<Option<usize>>,
    in_closure: Vec<bool>,
    /// `Dφ` for `K_aφ`.
    dist_shadow: Vec<Option<usize>>,
    /// `K_a(φ ∧ Cφ)` for every agent, for `Cφ`.
    unfoldings: Vec<Vec<usize>>,
    /// `¬K_a(φ ∧ Cφ)` for every agent, for `¬Cφ`.
    witnesses: Vec<Vec<usize>>,
    /// `¬φ` for `¬Cφ`.
    goals: Vec<Option<usize>>,
    decisions_literal: Vec<Vec<usize>>,
    decisions_default: Vec<Vec<usize>>,
}

impl ClosureIndex {
    pub fn new(theta: &Formula, agents: &AgentSet) -> Self {
        Self::for_roots(std::slice::from_ref(theta), agents)
    }

    /// Index over the extended closure of several formulas at once.
    pub fn for_roots(roots: &[Formula], agents: &AgentSet) -> Self {
        let cl = closure_of(roots, agents);
        let mut members: Vec<(String, Formula, bool)> = Vec::with_capacity(2 * cl.len());
        for f in cl.iter() {
            members.push((f.render(), f.clone(), true));
        }
        for f in cl.iter() {
            let n = f.negated();
            if !cl.contains(&n) {
                members.push((n.render(), n, false));
            }
        }
        members.sort_by(|a, b| a.0.cmp(&b.0));

        let positions: HashMap<Formula, usize> = members
            .iter()
            .enumerate()
            .map(|(i, (_, f, _))| (f.clone(), i))
            .collect();
        let at = |f: &Formula| positions[f];
        let len = members.len();
        let mut shapes = Vec::with_capacity(len);
        let mut negations = Vec::with_capacity(len);
        let mut dist_shadow = vec![None; len];
        let mut unfoldings = vec![Vec::new(); len];
        let mut witnesses = vec![Vec::new(); len];
        let mut goals = vec![None; len];
        for (i, (_, f, _)) in members.iter().enumerate() {
            shapes.push(match f {
                Formula::Atom(_) => Shape::Atom,
                Formula::Not(c) => Shape::Not(at(c)),
                Formula::And(l, r) => Shape::And(at(l), at(r)),
                Formula::Knows(a, c) => {
                    dist_shadow[i] = Some(at(&Formula::Dist(c.clone())));
                    Shape::Knows(
                        agents.position(a).expect("agent outside the agent set"),
                        at(c),
                    )
                }
                Formula::Dist(c) => Shape::Dist(at(c)),
                Formula::Common(c) => {
                    unfoldings[i] = agents
                        .iter()
                        .map(|a| at(&Formula::knows(a, (**c).clone().and(f.clone()))))
                        .collect();
                    Shape::Common(at(c))
                }
            });
            negations.push(positions.get(&f.negated()).copied());
            if let Formula::Not(inner) = f {
                if let Formula::Common(body) = &**inner {
                    goals[i] = Some(at(&body.negated()));
                    witnesses[i] = agents
                        .iter()
                        .map(|a| {
                            at(&Formula::knows(a, (**body).clone().and((**inner).clone())).not())
                        })
                        .collect();
                }
            }
        }

        let mut index = ClosureIndex {
            agents: agents.clone(),
            in_closure: members.iter().map(|m| m.2).collect(),
            rendered: members.iter().map(|m| m.0.clone()).collect(),
            formulas: members.into_iter().map(|m| m.1).collect(),
            positions,
            shapes,
            negations,
            dist_shadow,
            unfoldings,
            witnesses,
            goals,
            decisions_literal: Vec::new(),
            decisions_default: Vec::new(),
        };
        for i in 0..len {
            let (literal, default) = index.decision_lists(i);
            index.decisions_literal.push(literal);
            index.decisions_default.push(default);
        }
        index
    }

    fn decision_lists(&self, i: usize) -> (Vec<usize>, Vec<usize>) {
        let mut literal = Vec::new();
        let mut default = Vec::new();
        let mut stack = vec![i];
        let mut seen = vec![false; self.len()];
        while let Some(j) = stack.pop() {
            if std::mem::replace(&mut seen[j], true) {
                continue;
            }
            match self.shapes[j] {
                Shape::Atom => {}
                Shape::Not(c) | Shape::Dist(c) => stack.push(c),
                Shape::And(l, r) => {
                    stack.push(l);
                    stack.push(r);
                }
                Shape::Knows(_, c) => stack.push(c),
                Shape::Common(c) => {
                    stack.push(c);
                    default.extend_from_slice(&self.unfoldings[j]);
                }
            }
            if matches!(self.shapes[j], Shape::Knows(..) | Shape::Dist(_)) {
                literal.push(j);
            }
        }
        literal.sort_unstable();
        default.extend_from_slice(&literal);
        default.sort_unstable();
        default.dedup();
        (literal, default)
    }

    pub fn agents(&self) -> &AgentSet {
        &self.agents
    }

    /// `|ecl|`.
    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn formula(&self, i: usize) -> &Formula {
        &self.formulas[i]
    }

    pub fn rendered(&self, i: usize) -> &str {
        &self.rendered[i]
    }

    pub fn position(&self, formula: &Formula) -> Option<usize> {
        self.positions.get(formula).copied()
    }

    pub fn shape(&self, i: usize) -> Shape {
        self.shapes[i]
    }

    /// Index of `¬φ` for the member `φ`, when it lies in the extended closure.
    pub fn negation(&self, i: usize) -> Option<usize> {
        self.negations[i]
    }

    /// True for members of the closure proper (as opposed to added negations).
    pub fn in_closure(&self, i: usize) -> bool {
        self.in_closure[i]
    }

    pub fn dist_shadow(&self, i: usize) -> Option<usize> {
        self.dist_shadow[i]
    }

    pub fn unfoldings(&self, i: usize) -> &[usize] {
        &self.unfoldings[i]
    }

    pub fn witnesses(&self, i: usize) -> &[usize] {
        &self.witnesses[i]
    }

    pub fn goal(&self, i: usize) -> Option<usize> {
        self.goals[i]
    }

    pub fn is_eventuality(&self, i: usize) -> bool {
        self.goals[i].is_some()
    }

    /// The K/D formulas a set containing member `i` has to decide, ascending.
    pub fn decisions(&self, i: usize, scope: DecisionScope) -> &[usize] {
        match scope {
            DecisionScope::Subformulas => &self.decisions_literal[i],
            DecisionScope::WithCommonUnfoldings => &self.decisions_default[i],
        }
    }

    /// For `¬K_aφ` the pair `(Some(a), φ)`, for `¬Dφ` the pair `(None, φ)`.
    pub fn diamond(&self, i: usize) -> Option<(Option<usize>, usize)> {
        match self.shapes[i] {
            Shape::Not(j) => match self.shapes[j] {
                Shape::Knows(a, body) => Some((Some(a), body)),
                Shape::Dist(body) => Some((None, body)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn empty_bits(&self) -> FormulaBits {
        FormulaBits::with_capacity(self.len())
    }

    /// `None` if some member lies outside the extended closure.
    pub fn bits_of(&self, set: &FormulaSet) -> Option<FormulaBits> {
        let mut bits = self.empty_bits();
        for f in set {
            bits.insert(self.position(f)?);
        }
        Some(bits)
    }

    pub fn set_of(&self, bits: &FormulaBits) -> FormulaSet {
        bits.ones().map(|i| self.formulas[i].clone()).collect()
    }

    /// Rendered members in rendering order.
    pub fn render_bits(&self, bits: &FormulaBits) -> Vec<&str> {
        bits.ones().map(|i| self.rendered(i)).collect()
    }

    pub fn is_patently_inconsistent(&self, bits: &FormulaBits) -> bool {
        bits.ones()
            .any(|i| self.negations[i].is_some_and(|n| bits.contains(n)))
    }
}
