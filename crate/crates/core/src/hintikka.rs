//! Extraction of a Hintikka structure from an open final tableau: final tree
//! components, their stitching over the eventuality/state grid, and a
//! validator for conditions H1–H9.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::formula::{is_fully_expanded, AgentSet, DecisionScope, Formula, FormulaSet};
use crate::relation::Relation;
use crate::tableau::{NodeId, StateGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HintikkaError {
    #[error("the final tableau is closed: no surviving state contains {0}")]
    NotOpen(String),
    #[error("internal invariant breach: state {state} has no surviving successor for {label}")]
    MissingSuccessor { state: NodeId, label: String },
    #[error("internal invariant breach: {eventuality} is not realized at state {state}")]
    Unrealized { state: NodeId, eventuality: String },
}

/// Accessibility relation an edge contributes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    /// `R_a` for the agent at this position of the agent set.
    Agent(usize),
    Dist,
}

fn edge_kind(graph: &StateGraph, label: usize) -> EdgeKind {
    match graph.index().diamond(label) {
        Some((Some(a), _)) => EdgeKind::Agent(a),
        Some((None, _)) => EdgeKind::Dist,
        None => unreachable!("marked edges carry ¬K_aφ or ¬Dφ labels"),
    }
}

/// A tree-shaped fragment rooted at a final-tableau state.
///
/// Inner node 0 is the root; in the realizing case inner nodes `0..=m` are
/// the spine, ending in a state that contains the goal `¬φ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalTreeComponent {
    /// Closure index of the eventuality this component is built for.
    pub eventuality: Option<usize>,
    pub inner: Vec<NodeId>,
    /// `(parent inner node, label, child inner node)`.
    pub inner_edges: Vec<(usize, usize, usize)>,
    /// `(parent inner node, label, leaf state)`.
    pub leaves: Vec<(usize, usize, NodeId)>,
}

impl FinalTreeComponent {
    pub fn root(&self) -> NodeId {
        self.inner[0]
    }

    /// True if a path from the root through this component (leaves
    /// included) reaches a node containing `goal`.
    pub fn realizes(&self, graph: &StateGraph, goal: usize) -> bool {
        let reachable = self.reachable_inner();
        let inner = self
            .inner
            .iter()
            .zip(&reachable)
            .any(|(&s, &r)| r && graph.bits(s).contains(goal));
        inner
            || self
                .leaves
                .iter()
                .any(|&(p, _, s)| reachable[p] && graph.bits(s).contains(goal))
    }

    fn reachable_inner(&self) -> Vec<bool> {
        let mut seen = vec![false; self.inner.len()];
        seen[0] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for &(p, _, c) in &self.inner_edges {
                if seen[p] && !seen[c] {
                    seen[c] = true;
                    changed = true;
                }
            }
        }
        seen
    }

    /// Eventualities of the root that are not realized inside the component.
    pub fn deferred(&self, graph: &StateGraph) -> Vec<usize> {
        let index = graph.index();
        graph
            .bits(self.root())
            .ones()
            .filter(|&e| index.is_eventuality(e))
            .filter(|&e| !self.realizes(graph, index.goal(e).expect("eventuality")))
            .collect()
    }

    /// The literal deferral property: every deferred eventuality of the root
    /// belongs to every leaf. Returns the offending `(eventuality, leaf)` pairs.
    pub fn deferred_to_every_leaf(&self, graph: &StateGraph) -> Vec<(usize, NodeId)> {
        let mut out = Vec::new();
        for e in self.deferred(graph) {
            for &(_, _, leaf) in &self.leaves {
                if !graph.bits(leaf).contains(e) {
                    out.push((e, leaf));
                }
            }
        }
        out
    }

    /// The property stitching relies on: every deferred eventuality `¬Cφ` of
    /// the root belongs to the leaf reached along some chain of its
    /// `¬K_a(φ ∧ Cφ)` witnesses. Returns the eventualities without one.
    pub fn deferred_without_witness_leaf(&self, graph: &StateGraph) -> Vec<usize> {
        let index = graph.index();
        self.deferred(graph)
            .into_iter()
            .filter(|&e| {
                let witnesses = index.witnesses(e);
                // Follow witness-labelled edges from inner nodes holding `e`.
                let mut holds = vec![false; self.inner.len()];
                holds[0] = true;
                let mut changed = true;
                while changed {
                    changed = false;
                    for &(p, l, c) in &self.inner_edges {
                        if holds[p]
                            && !holds[c]
                            && witnesses.contains(&l)
                            && graph.bits(self.inner[c]).contains(e)
                        {
                            holds[c] = true;
                            changed = true;
                        }
                    }
                }
                !self.leaves.iter().any(|&(p, l, s)| {
                    holds[p] && witnesses.contains(&l) && graph.bits(s).contains(e)
                })
            })
            .collect()
    }
}

/// Successor of `state` for `label` with the smallest `NodeId`.
fn first_successor(
    graph: &StateGraph,
    state: NodeId,
    label: usize,
) -> Result<NodeId, HintikkaError> {
    graph
        .successors(state, label)
        .min()
        .ok_or_else(|| HintikkaError::MissingSuccessor {
            state,
            label: graph.index().rendered(label).to_string(),
        })
}

/// Shortest marked-edge path from `start` to a state containing `goal`,
/// preferring smaller `NodeId`s; each step carries the smallest label used.
fn realizing_path(graph: &StateGraph, start: NodeId, goal: usize) -> Option<Vec<(usize, NodeId)>> {
    let mut parent: HashMap<NodeId, (usize, NodeId)> = HashMap::new();
    let mut frontier = vec![start];
    let mut seen = std::collections::HashSet::from([start]);
    while !frontier.is_empty() {
        if let Some(&hit) = frontier.iter().find(|&&s| graph.bits(s).contains(goal)) {
            let mut path = Vec::new();
            let mut cur = hit;
            while cur != start {
                let (label, prev) = parent[&cur];
                path.push((label, cur));
                cur = prev;
            }
            path.reverse();
            return Some(path);
        }
        let mut next = Vec::new();
        for s in frontier {
            let mut out: Vec<(NodeId, usize)> =
                graph.edges_from(s).iter().map(|&(l, t)| (t, l)).collect();
            out.sort_unstable();
            for (t, l) in out {
                if seen.insert(t) {
                    parent.insert(t, (l, s));
                    next.push(t);
                }
            }
        }
        next.sort_unstable();
        frontier = next;
    }
    None
}

/// Builds `T_{Δ,ξ}`: a simple tree when `ξ ∉ Δ` (or no eventuality is
/// given), otherwise a tree around a shortest realizing path.
pub fn build_component(
    graph: &StateGraph,
    delta: NodeId,
    eventuality: Option<usize>,
) -> Result<FinalTreeComponent, HintikkaError> {
    let index = graph.index();
    let mut spine = vec![(None, delta)];
    if let Some(e) = eventuality.filter(|&e| graph.bits(delta).contains(e)) {
        let goal = index.goal(e).expect("eventuality");
        let path = realizing_path(graph, delta, goal).ok_or_else(|| HintikkaError::Unrealized {
            state: delta,
            eventuality: index.rendered(e).to_string(),
        })?;
        spine.extend(path.into_iter().map(|(l, s)| (Some(l), s)));
    }
    let mut component = FinalTreeComponent {
        eventuality,
        inner: spine.iter().map(|&(_, s)| s).collect(),
        inner_edges: Vec::new(),
        leaves: Vec::new(),
    };
    for (i, &(_, state)) in spine.iter().enumerate() {
        let spine_label = spine.get(i + 1).and_then(|&(l, _)| l);
        for label in graph.labels(state) {
            if Some(label) == spine_label {
                component.inner_edges.push((i, label, i + 1));
            } else {
                component
                    .leaves
                    .push((i, label, first_successor(graph, state, label)?));
            }
        }
    }
    Ok(component)
}

/// A multi-agent epistemic Hintikka structure over worlds `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Maehs {
    agents: AgentSet,
    labels: Vec<FormulaSet>,
    origins: Vec<Option<NodeId>>,
    ra: Vec<Relation>,
    rd: Relation,
    rc: Relation,
}

impl Maehs {
    /// A structure with `R_C` computed as the transitive closure of
    /// `R_D ∪ ⋃ R_a`.
    pub fn new(agents: AgentSet, labels: Vec<FormulaSet>, ra: Vec<Relation>, rd: Relation) -> Self {
        let rc = common_relation(&ra, &rd);
        Maehs::from_parts(agents, labels, ra, rd, rc)
    }

    /// A structure with an explicitly given `R_C`, which need not satisfy
    /// the structure condition.
    pub fn from_parts(
        agents: AgentSet,
        labels: Vec<FormulaSet>,
        ra: Vec<Relation>,
        rd: Relation,
        rc: Relation,
    ) -> Self {
        assert_eq!(ra.len(), agents.len(), "one relation per agent");
        let n = labels.len();
        assert!(
            ra.iter().chain([&rd, &rc]).all(|r| r.size() == n),
            "relations range over the worlds"
        );
        Maehs {
            agents,
            origins: vec![None; n],
            labels,
            ra,
            rd,
            rc,
        }
    }

    pub fn agents(&self) -> &AgentSet {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, world: usize) -> &FormulaSet {
        &self.labels[world]
    }

    pub fn labels(&self) -> &[FormulaSet] {
        &self.labels
    }

    /// The final-tableau state a stitched world was copied from.
    pub fn origin(&self, world: usize) -> Option<NodeId> {
        self.origins[world]
    }

    /// `R_a` for the agent at position `agent` of the agent set.
    pub fn ra(&self, agent: usize) -> &Relation {
        &self.ra[agent]
    }

    pub fn rd(&self) -> &Relation {
        &self.rd
    }

    pub fn rc(&self) -> &Relation {
        &self.rc
    }

    /// First world whose label contains `θ`.
    pub fn designated(&self, theta: &Formula) -> Option<usize> {
        self.labels.iter().position(|l| l.contains(theta))
    }
}

fn common_relation(ra: &[Relation], rd: &Relation) -> Relation {
    let mut union = rd.clone();
    for r in ra {
        union.union_with(r);
    }
    union.transitive_closure()
}

/// Stitches final tree components into a finite Hintikka structure for `θ`,
/// reusing a component instance `T_(i,j)` whenever it already exists.
pub fn stitch_hintikka(graph: &StateGraph, theta: &Formula) -> Result<Maehs, HintikkaError> {
    let index = graph.index();
    let agents = index.agents().clone();
    let columns: Vec<NodeId> = graph.states().collect();
    let column_of: HashMap<NodeId, usize> =
        columns.iter().enumerate().map(|(j, &s)| (s, j)).collect();
    let eventualities = graph.eventualities();
    let rows: Vec<Option<usize>> = if eventualities.is_empty() {
        vec![None]
    } else {
        eventualities.iter().map(|&e| Some(e)).collect()
    };
    let theta_index = index.position(theta);
    let q = columns
        .iter()
        .position(|&s| theta_index.is_some_and(|t| graph.bits(s).contains(t)))
        .ok_or_else(|| HintikkaError::NotOpen(theta.render()))?;
    let p = theta_index
        .and_then(|t| eventualities.iter().position(|&e| e == t))
        .unwrap_or(0);

    let mut worlds: Vec<NodeId> = Vec::new();
    let mut edges: Vec<(usize, EdgeKind, usize)> = Vec::new();
    let mut instances: HashMap<(usize, usize), usize> = HashMap::new();
    let mut components: HashMap<(usize, usize), FinalTreeComponent> = HashMap::new();
    // Leaf slots waiting for a component: (parent world, edge, row, column).
    let mut queue: VecDeque<(usize, EdgeKind, usize, usize)> = VecDeque::new();

    let mut instantiate = |row: usize,
                           col: usize,
                           worlds: &mut Vec<NodeId>,
                           edges: &mut Vec<(usize, EdgeKind, usize)>,
                           queue: &mut VecDeque<(usize, EdgeKind, usize, usize)>|
     -> Result<usize, HintikkaError> {
        if let Entry::Vacant(slot) = components.entry((row, col)) {
            slot.insert(build_component(graph, columns[col], rows[row])?);
        }
        let component = &components[&(row, col)];
        let base = worlds.len();
        worlds.extend(&component.inner);
        for &(parent, label, child) in &component.inner_edges {
            edges.push((base + parent, edge_kind(graph, label), base + child));
        }
        let next_row = (row + 1) % rows.len();
        for &(parent, label, leaf) in &component.leaves {
            queue.push_back((
                base + parent,
                edge_kind(graph, label),
                next_row,
                column_of[&leaf],
            ));
        }
        Ok(base)
    };

    let root = instantiate(p, q, &mut worlds, &mut edges, &mut queue)?;
    instances.insert((p, q), root);
    while let Some((parent, kind, row, col)) = queue.pop_front() {
        let target = match instances.get(&(row, col)) {
            Some(&r) => r,
            None => {
                let r = instantiate(row, col, &mut worlds, &mut edges, &mut queue)?;
                instances.insert((row, col), r);
                r
            }
        };
        edges.push((parent, kind, target));
    }

    let n = worlds.len();
    let mut ra = vec![Relation::empty(n); agents.len()];
    let mut rd = Relation::empty(n);
    for (s, kind, t) in edges {
        match kind {
            EdgeKind::Agent(a) => ra[a].insert(s, t),
            EdgeKind::Dist => rd.insert(s, t),
        };
    }
    let labels = worlds.iter().map(|&s| graph.formulas(s)).collect();
    let mut hs = Maehs::new(agents, labels, ra, rd);
    hs.origins = worlds.into_iter().map(Some).collect();
    Ok(hs)
}

/// Conditions checked by [`validate_hintikka`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    /// Non-empty world set and `R_C` the transitive closure of the union.
    Maes,
    H1,
    H2,
    H3,
    H4,
    H5,
    H6,
    H7,
    H8,
    H9,
    /// Some label contains `θ`.
    Theta,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub condition: Condition,
    pub world: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.world {
            Some(w) => write!(f, "{:?} at world {w}: {}", self.condition, self.detail),
            None => write!(f, "{:?}: {}", self.condition, self.detail),
        }
    }
}

/// Collects every violated condition; an empty result means `hs` is a
/// Hintikka structure for `θ`.
pub fn validate_hintikka(hs: &Maehs, theta: &Formula) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut report = |condition, world, detail: String| {
        out.push(Violation {
            condition,
            world,
            detail,
        })
    };
    let n = hs.len();
    if n == 0 {
        report(Condition::Maes, None, "no worlds".into());
    }
    let expected_rc = common_relation(&hs.ra, &hs.rd);
    if expected_rc != hs.rc {
        report(
            Condition::Maes,
            None,
            format!("R_C is {:?}, expected {:?}", hs.rc, expected_rc),
        );
    }
    let agent_of = |a| hs.agents.position(a);
    for s in 0..n {
        let h = &hs.labels[s];
        if !is_fully_expanded(h, &hs.agents, DecisionScope::Subformulas) {
            report(Condition::H2, Some(s), format!("{h} is not fully expanded"));
        }
        for f in h {
            if let Some(body) = f.negation_body() {
                if h.contains(body) {
                    report(Condition::H1, Some(s), format!("both {body} and {f}"));
                }
            }
            match f {
                Formula::Knows(a, body) => {
                    for t in agent_of(a).into_iter().flat_map(|a| hs.ra[a].successors(s)) {
                        if !hs.labels[t].contains(body) {
                            report(
                                Condition::H3,
                                Some(s),
                                format!("{f} but {body} missing at {t}"),
                            );
                        }
                    }
                }
                Formula::Dist(body) => {
                    for t in hs.rd.successors(s) {
                        if !hs.labels[t].contains(body) {
                            report(
                                Condition::H6,
                                Some(s),
                                format!("{f} but {body} missing at {t}"),
                            );
                        }
                    }
                }
                Formula::Not(inner) => {
                    let goal = |body: &Formula| body.negated();
                    match &**inner {
                        Formula::Knows(a, body) => {
                            let g = goal(body);
                            let ok = agent_of(a).is_some_and(|a| {
                                hs.ra[a].successors(s).any(|t| hs.labels[t].contains(&g))
                            });
                            if !ok {
                                report(
                                    Condition::H4,
                                    Some(s),
                                    format!("{f} has no R_{a}-successor with {g}"),
                                );
                            }
                        }
                        Formula::Dist(body) => {
                            let g = goal(body);
                            if !hs.rd.successors(s).any(|t| hs.labels[t].contains(&g)) {
                                report(
                                    Condition::H7,
                                    Some(s),
                                    format!("{f} has no R_D-successor with {g}"),
                                );
                            }
                        }
                        Formula::Common(body) => {
                            let g = goal(body);
                            if !hs.rc.successors(s).any(|t| hs.labels[t].contains(&g)) {
                                report(
                                    Condition::H9,
                                    Some(s),
                                    format!("{f} has no R_C-successor with {g}"),
                                );
                            }
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
        }
        let knows = |w: usize, agent: Option<&crate::formula::Agent>| -> FormulaSet {
            hs.labels[w]
                .iter()
                .filter(|f| matches!(f, Formula::Knows(b, _) if agent.is_none_or(|a| a == b)))
                .cloned()
                .collect()
        };
        for (a, agent) in hs.agents.iter().enumerate() {
            for t in hs.ra[a].successors(s) {
                let (here, there) = (knows(s, Some(agent)), knows(t, Some(agent)));
                if here != there {
                    report(
                        Condition::H5,
                        Some(s),
                        format!("K_{agent} formulas {here} at {s} but {there} at {t}"),
                    );
                }
            }
        }
        for t in hs.rd.successors(s) {
            let dist = |w: usize| -> FormulaSet {
                hs.labels[w]
                    .iter()
                    .filter(|f| matches!(f, Formula::Dist(_)))
                    .cloned()
                    .collect()
            };
            if dist(s) != dist(t) || knows(s, None) != knows(t, None) {
                report(
                    Condition::H8,
                    Some(s),
                    format!("D/K formulas differ between {s} and {t}"),
                );
            }
        }
    }
    if hs.designated(theta).is_none() {
        report(Condition::Theta, None, format!("no label contains {theta}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::tableau::{decide, TableauConfig, Verdict};

    fn ab() -> AgentSet {
        AgentSet::new(["a", "b"]).unwrap()
    }

    fn f(text: &str) -> Formula {
        parse(text, &ab()).unwrap()
    }

    fn set(items: &[&str]) -> FormulaSet {
        items.iter().map(|t| f(t)).collect()
    }

    fn final_tableau(text: &str) -> StateGraph {
        decide(&f(text), &ab(), TableauConfig::default())
            .unwrap()
            .final_tableau
    }

    #[test]
    fn single_world_structure() {
        let hs = stitch_hintikka(&final_tableau("p"), &f("p")).unwrap();
        assert_eq!(hs.len(), 1);
        assert_eq!(hs.label(0), &set(&["p"]));
        assert!(hs.rc().is_empty() && hs.rd().is_empty());
        assert!(validate_hintikka(&hs, &f("p")).is_empty());

        let hand = Maehs::new(
            ab(),
            vec![set(&["p"])],
            vec![Relation::empty(1); 2],
            Relation::empty(1),
        );
        assert_eq!(
            hand,
            Maehs {
                origins: vec![None],
                ..hs
            }
        );
    }

    #[test]
    fn closed_tableau_has_no_structure() {
        assert_eq!(
            stitch_hintikka(&final_tableau("p & ~p"), &f("p & ~p")),
            Err(HintikkaError::NotOpen("p & ~p".into()))
        );
    }

    #[test]
    fn validator_reports_constructed_violations() {
        // K_a p at s, (s,t) ∈ R_a, p ∉ H(t).
        let labels = vec![set(&["K{a} p", "D p", "p"]), set(&["q"])];
        let ra = vec![Relation::from_pairs(2, [(0, 1)]), Relation::empty(2)];
        let hs = Maehs::new(ab(), labels, ra, Relation::empty(2));
        let found: Vec<Condition> = validate_hintikka(&hs, &f("q"))
            .iter()
            .map(|v| v.condition)
            .collect();
        assert!(found.contains(&Condition::H3), "{found:?}");
        assert!(found.contains(&Condition::H5), "{found:?}");

        let hs = Maehs::new(
            ab(),
            vec![set(&["p", "~p", "~C q"])],
            vec![Relation::empty(1); 2],
            Relation::empty(1),
        );
        let found: Vec<Condition> = validate_hintikka(&hs, &f("r"))
            .iter()
            .map(|v| v.condition)
            .collect();
        for c in [
            Condition::H1,
            Condition::H2,
            Condition::H9,
            Condition::Theta,
        ] {
            assert!(found.contains(&c), "{c:?} missing from {found:?}");
        }

        let hs = Maehs::from_parts(
            ab(),
            vec![set(&["p"]), set(&["p"])],
            vec![Relation::from_pairs(2, [(0, 1)]), Relation::empty(2)],
            Relation::empty(2),
            Relation::empty(2),
        );
        let found: Vec<Condition> = validate_hintikka(&hs, &f("p"))
            .iter()
            .map(|v| v.condition)
            .collect();
        assert_eq!(found, vec![Condition::Maes]);
    }

    #[test]
    fn components_of_the_worked_example() {
        let graph = final_tableau("K{a} p & K{b} p & ~D C p");
        let index = graph.index();
        let ev = index.position(&f("~C p")).unwrap();
        for s in graph.states() {
            let c = build_component(&graph, s, Some(ev)).unwrap();
            assert_eq!(c.root(), s);
            if graph.bits(s).contains(ev) {
                let last = *c.inner.last().unwrap();
                assert!(graph.bits(last).contains(index.goal(ev).unwrap()));
                assert!(c.realizes(&graph, index.goal(ev).unwrap()));
            } else {
                // Simple tree: one leaf per diamond label.
                assert_eq!(c.inner, vec![s]);
                let labels: Vec<usize> = c.leaves.iter().map(|&(_, l, _)| l).collect();
                assert_eq!(labels, graph.labels(s));
            }
            for &(p, l, leaf) in &c.leaves {
                assert!(graph.edges_from(c.inner[p]).contains(&(l, leaf)));
                assert_eq!(Some(leaf), graph.successors(c.inner[p], l).min());
            }
        }
        // Under the literal decision clause the listed Δ1 survives; it does
        // not contain ¬Cp, so its component is a simple tree with one R_D child.
        let config = TableauConfig {
            decision_scope: DecisionScope::Subformulas,
            ..TableauConfig::default()
        };
        let graph = decide(&f("K{a} p & K{b} p & ~D C p"), &ab(), config)
            .unwrap()
            .final_tableau;
        let index = graph.index();
        let ev = index.position(&f("~C p")).unwrap();
        let theta = index.position(&f("K{a} p & K{b} p & ~D C p")).unwrap();
        let root = graph
            .states()
            .find(|&s| graph.bits(s).contains(theta))
            .unwrap();
        let c = build_component(&graph, root, Some(ev)).unwrap();
        assert_eq!(c.leaves.len(), 1);
        assert_eq!(edge_kind(&graph, c.leaves[0].1), EdgeKind::Dist);
    }

    #[test]
    fn states_without_diamonds_give_single_node_components() {
        let graph = final_tableau("~p & K{a} ~p");
        for s in graph.states().filter(|&s| graph.labels(s).is_empty()) {
            let c = build_component(&graph, s, None).unwrap();
            assert_eq!((c.inner.len(), c.leaves.len()), (1, 0));
        }
    }

    #[test]
    fn deferred_eventualities_follow_the_witness_chain_not_every_leaf() {
        let graph = final_tableau("~C p & K{a} p & K{b} p & ~K{b} q");
        let index = graph.index();
        let ev = index.position(&f("~C p")).unwrap();
        let mut counterexample = false;
        for s in graph.states() {
            let c = build_component(&graph, s, None).unwrap();
            assert!(c.deferred_without_witness_leaf(&graph).is_empty());
            if c.deferred(&graph).contains(&ev) && !c.deferred_to_every_leaf(&graph).is_empty() {
                counterexample = true;
            }
        }
        assert!(counterexample, "some leaf should miss the deferred ~C p");
    }

    #[test]
    fn worked_example_structure_validates() {
        let theta = f("K{a} p & K{b} p & ~D C p");
        let run = decide(&theta, &ab(), TableauConfig::default()).unwrap();
        assert_eq!(run.verdict, Verdict::Open);
        let hs = stitch_hintikka(&run.final_tableau, &theta).unwrap();
        assert_eq!(hs.designated(&theta), Some(0));
        let violations = validate_hintikka(&hs, &theta);
        assert!(violations.is_empty(), "{violations:#?}");
        for w in 0..hs.len() {
            let origin = hs.origin(w).unwrap();
            assert_eq!(hs.label(w), &run.final_tableau.formulas(origin));
        }
    }

    #[test]
    fn stitched_structures_validate_on_small_open_formulas() {
        for text in [
            "C p",
            "~C p",
            "~C p & ~C q",
            "~K{a} ~C p",
            "~C (p & ~K{b} q)",
            "~D p & ~K{a} q & C (p | q)",
            "K{a} ~C p & ~K{b} p",
        ] {
            let theta = f(text);
            let run = decide(&theta, &ab(), TableauConfig::default()).unwrap();
            assert_eq!(run.verdict, Verdict::Open, "{text}");
            let hs = stitch_hintikka(&run.final_tableau, &theta).unwrap();
            let violations = validate_hintikka(&hs, &theta);
            assert!(violations.is_empty(), "{text}: {violations:#?}");
        }
    }

    #[test]
    fn literal_decision_clause_breaks_h5() {
        let theta = f("~K{a} ~C p");
        let config = TableauConfig {
            decision_scope: DecisionScope::Subformulas,
            ..TableauConfig::default()
        };
        let run = decide(&theta, &ab(), config).unwrap();
        assert_eq!(run.verdict, Verdict::Open);
        let hs = stitch_hintikka(&run.final_tableau, &theta).unwrap();
        let found: Vec<Condition> = validate_hintikka(&hs, &theta)
            .iter()
            .map(|v| v.condition)
            .collect();
        assert!(found.contains(&Condition::H5), "{found:?}");
    }
}
