//! Fully expanded sets and the expansion of a prestate into states.

use std::collections::HashSet;

use super::closure::{ClosureIndex, FormulaBits, Shape};
use super::{subformulae, AgentSet, Formula, FormulaSet};

/// Which K/D formulas a fully expanded set must decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecisionScope {
    /// Exactly the K/D subformulae of members.
    Subformulas,
    /// Additionally `K_a(φ ∧ Cφ)` for every agent and every subformula `Cφ`
    /// of a member. Without these, a successor can acquire `K_a(φ ∧ Cφ)` by
    /// unfolding a `Cφ` its predecessor never decided, which breaks the
    /// K-transfer conditions of the extracted Hintikka structure.
    #[default]
    WithCommonUnfoldings,
}

/// How a prestate is expanded into states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SrMode {
    /// Every `¬Cφ` branches over every agent's `¬K_a(φ ∧ Cφ)`, and every
    /// `¬(φ ∧ ψ)` over `¬φ` and `¬ψ`, even when a disjunct is already
    /// present; no superset filtering. Without the second branch an
    /// eventuality whose goal is only reachable through an optional
    /// disjunct (as in `C ¬C p`) is never realized.
    #[default]
    ChoiceComplete,
    /// Only ⊂-minimal fully expanded extensions.
    StrictMinimal,
}

/// Checks all clauses of the definition directly on formulas.
pub fn is_fully_expanded(set: &FormulaSet, agents: &AgentSet, scope: DecisionScope) -> bool {
    let decided = |g: &Formula| set.contains(g) || set.contains(&g.negated());
    for f in set {
        let ok = match f {
            Formula::Not(inner) => match &**inner {
                Formula::Not(g) => set.contains(g),
                Formula::And(l, r) => set.contains(&l.negated()) || set.contains(&r.negated()),
                Formula::Common(g) => agents.iter().any(|a| {
                    set.contains(&Formula::knows(a, (**g).clone().and((**inner).clone())).not())
                }),
                _ => true,
            },
            Formula::And(l, r) => set.contains(l) && set.contains(r),
            Formula::Knows(_, g) => set.contains(&Formula::Dist(g.clone())),
            Formula::Dist(g) => set.contains(g),
            Formula::Common(g) => agents
                .iter()
                .all(|a| set.contains(&Formula::knows(a, (**g).clone().and(f.clone())))),
            Formula::Atom(_) => true,
        };
        if !ok {
            return false;
        }
        for sub in subformulae(f).iter() {
            match sub {
                Formula::Knows(..) | Formula::Dist(_) if !decided(sub) => return false,
                Formula::Common(g) if scope == DecisionScope::WithCommonUnfoldings => {
                    let undecided = agents
                        .iter()
                        .any(|a| !decided(&Formula::knows(a, (**g).clone().and(sub.clone()))));
                    if undecided {
                        return false;
                    }
                }
                _ => {}
            }
        }
    }
    true
}

/// Adds everything the deterministic clauses force.
fn saturate(index: &ClosureIndex, bits: &mut FormulaBits) {
    let mut stack: Vec<usize> = bits.ones().collect();
    let add = |bits: &mut FormulaBits, stack: &mut Vec<usize>, j: usize| {
        if bits.insert(j) {
            stack.push(j);
        }
    };
    while let Some(i) = stack.pop() {
        match index.shape(i) {
            Shape::Not(j) => {
                if let Shape::Not(k) = index.shape(j) {
                    add(bits, &mut stack, k);
                }
            }
            Shape::And(l, r) => {
                add(bits, &mut stack, l);
                add(bits, &mut stack, r);
            }
            Shape::Knows(..) => {
                let d = index.dist_shadow(i).expect("closure contains D-shadows");
                add(bits, &mut stack, d);
            }
            Shape::Dist(c) => add(bits, &mut stack, c),
            Shape::Common(_) => {
                for &u in index.unfoldings(i) {
                    add(bits, &mut stack, u);
                }
            }
            Shape::Atom => {}
        }
    }
}

fn with(bits: &FormulaBits, i: usize) -> FormulaBits {
    let mut next = bits.clone();
    next.insert(i);
    next
}

fn negation(index: &ClosureIndex, i: usize) -> usize {
    index
        .negation(i)
        .expect("negations of closure members lie in the extended closure")
}

/// The branches of the first open obligation, or `None` if `bits` is fully expanded.
fn branches(
    index: &ClosureIndex,
    bits: &FormulaBits,
    processed: &FormulaBits,
    scope: DecisionScope,
    mode: SrMode,
) -> Option<Vec<(FormulaBits, FormulaBits)>> {
    for i in bits.ones() {
        if !index.is_eventuality(i) {
            continue;
        }
        let witnesses = index.witnesses(i);
        let open = match mode {
            SrMode::ChoiceComplete => !processed.contains(i),
            SrMode::StrictMinimal => !witnesses.iter().any(|&w| bits.contains(w)),
        };
        if open {
            let done = with(processed, i);
            return Some(
                witnesses
                    .iter()
                    .map(|&w| (with(bits, w), done.clone()))
                    .collect(),
            );
        }
    }
    for i in bits.ones() {
        if let Shape::Not(j) = index.shape(i) {
            if let Shape::And(l, r) = index.shape(j) {
                let (nl, nr) = (negation(index, l), negation(index, r));
                let open = match mode {
                    SrMode::ChoiceComplete => !processed.contains(i),
                    SrMode::StrictMinimal => !bits.contains(nl) && !bits.contains(nr),
                };
                if open {
                    let done = with(processed, i);
                    return Some(vec![(with(bits, nl), done.clone()), (with(bits, nr), done)]);
                }
            }
        }
    }
    let undecided = bits
        .ones()
        .flat_map(|i| index.decisions(i, scope).iter().copied())
        .filter(|&psi| !bits.contains(psi) && !bits.contains(negation(index, psi)))
        .min();
    undecided.map(|psi| {
        vec![
            (with(bits, psi), processed.clone()),
            (with(bits, negation(index, psi)), processed.clone()),
        ]
    })
}

/// Expands `gamma` over `index`; results in discovery order, duplicate-free.
pub(crate) fn expand_bits(
    index: &ClosureIndex,
    gamma: &FormulaBits,
    scope: DecisionScope,
    mode: SrMode,
) -> Vec<FormulaBits> {
    let mut results = Vec::new();
    let mut emitted = HashSet::new();
    let mut visited = HashSet::new();
    let mut start = gamma.clone();
    saturate(index, &mut start);
    let mut stack = vec![(start, index.empty_bits())];
    while let Some((bits, processed)) = stack.pop() {
        if !visited.insert((bits.clone(), processed.clone())) {
            continue;
        }
        match branches(index, &bits, &processed, scope, mode) {
            None => {
                if emitted.insert(bits.clone()) {
                    results.push(bits);
                }
            }
            Some(children) => {
                // Reverse so the first branch is explored first.
                for (mut child, done) in children.into_iter().rev() {
                    saturate(index, &mut child);
                    stack.push((child, done));
                }
            }
        }
    }
    if mode == SrMode::StrictMinimal {
        let all = results.clone();
        results.retain(|r| !all.iter().any(|o| o != r && o.is_subset(r)));
    }
    results
}

fn expand_set(
    gamma: &FormulaSet,
    agents: &AgentSet,
    scope: DecisionScope,
    mode: SrMode,
) -> Vec<FormulaSet> {
    let roots: Vec<Formula> = gamma.iter().cloned().collect();
    let index = ClosureIndex::for_roots(&roots, agents);
    let bits = index
        .bits_of(gamma)
        .expect("roots lie in their own closure");
    expand_bits(&index, &bits, scope, mode)
        .iter()
        .map(|b| index.set_of(b))
        .collect()
}

/// The choice-complete expansions of `gamma`, as used by the tableau's state rule.
pub fn full_expansions(
    gamma: &FormulaSet,
    agents: &AgentSet,
    scope: DecisionScope,
) -> Vec<FormulaSet> {
    expand_set(gamma, agents, scope, SrMode::ChoiceComplete)
}

/// All ⊂-minimal fully expanded extensions of `gamma`.
pub fn minimal_fully_expanded_extensions(
    gamma: &FormulaSet,
    agents: &AgentSet,
    scope: DecisionScope,
) -> Vec<FormulaSet> {
    expand_set(gamma, agents, scope, SrMode::StrictMinimal)
}
