//! Construction phase: the pretableau of prestates and states.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::formula::expansion::expand_bits;
use crate::formula::{ClosureIndex, Formula, FormulaBits, FormulaSet, Shape};

use super::elimination::StateGraph;
use super::{NodeId, TableauConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    State,
    Prestate,
}

#[derive(Debug, Clone)]
pub struct Pretableau {
    index: Arc<ClosureIndex>,
    config: TableauConfig,
    root: NodeId,
    kinds: Vec<NodeKind>,
    bits: Vec<FormulaBits>,
    prestate_ids: HashMap<FormulaBits, NodeId>,
    state_ids: HashMap<FormulaBits, NodeId>,
    /// `st(Γ)` per expanded prestate, in expansion order.
    double: BTreeMap<NodeId, Vec<NodeId>>,
    /// Marked edges from each processed state, ordered by label.
    marked: BTreeMap<NodeId, Vec<(usize, NodeId)>>,
}

impl Pretableau {
    /// A pretableau holding only the initial prestate `{θ}`.
    pub fn new(theta: &Formula, index: Arc<ClosureIndex>, config: TableauConfig) -> Self {
        let mut root_bits = index.empty_bits();
        root_bits.insert(index.position(theta).expect("θ lies in its own closure"));
        let mut p = Pretableau {
            index,
            config,
            root: NodeId(0),
            kinds: Vec::new(),
            bits: Vec::new(),
            prestate_ids: HashMap::new(),
            state_ids: HashMap::new(),
            double: BTreeMap::new(),
            marked: BTreeMap::new(),
        };
        p.root = p.insert_prestate(root_bits).0;
        p
    }

    /// Builds the complete pretableau: SR on the newest prestates, then KR/DR
    /// on the newest states, until no new node appears.
    pub fn build(theta: &Formula, index: Arc<ClosureIndex>, config: TableauConfig) -> Self {
        let mut p = Pretableau::new(theta, index, config);
        let mut prestates = vec![p.root];
        while !prestates.is_empty() {
            let mut states = Vec::new();
            for gamma in prestates {
                let (_, created) = p.apply_sr(gamma);
                states.extend(created);
            }
            let mut next = Vec::new();
            for delta in states {
                if p.index.is_patently_inconsistent(&p.bits[delta.0]) {
                    continue;
                }
                let labels: Vec<usize> = p.bits[delta.0]
                    .ones()
                    .filter(|&i| p.index.diamond(i).is_some())
                    .collect();
                for label in labels {
                    let (gamma, new) = p.apply_diamond_rule(delta, label);
                    if new {
                        next.push(gamma);
                    }
                }
            }
            prestates = next;
        }
        p
    }

    fn push(&mut self, kind: NodeKind, bits: FormulaBits) -> NodeId {
        let id = NodeId(self.kinds.len());
        self.kinds.push(kind);
        self.bits.push(bits);
        id
    }

    /// Adds a prestate unless an equal one exists; returns it and whether it is new.
    pub fn insert_prestate(&mut self, bits: FormulaBits) -> (NodeId, bool) {
        if let Some(&id) = self.prestate_ids.get(&bits) {
            return (id, false);
        }
        let id = self.push(NodeKind::Prestate, bits.clone());
        self.prestate_ids.insert(bits, id);
        (id, true)
    }

    fn insert_state(&mut self, bits: FormulaBits) -> (NodeId, bool) {
        if let Some(&id) = self.state_ids.get(&bits) {
            return (id, false);
        }
        let id = self.push(NodeKind::State, bits.clone());
        self.state_ids.insert(bits, id);
        (id, true)
    }

    /// Rule SR. Returns `st(Γ)` and the states it created.
    pub fn apply_sr(&mut self, gamma: NodeId) -> (Vec<NodeId>, Vec<NodeId>) {
        assert_eq!(
            self.kinds[gamma.0],
            NodeKind::Prestate,
            "SR applies to prestates"
        );
        if let Some(st) = self.double.get(&gamma) {
            return (st.clone(), Vec::new());
        }
        let expansions = expand_bits(
            &self.index,
            &self.bits[gamma.0],
            self.config.decision_scope,
            self.config.sr_mode,
        );
        let mut st = Vec::new();
        let mut created = Vec::new();
        for delta in expansions {
            let (id, new) = self.insert_state(delta);
            if new {
                created.push(id);
            }
            if !st.contains(&id) {
                st.push(id);
            }
        }
        self.double.insert(gamma, st.clone());
        (st, created)
    }

    /// The prestate KR or DR creates for `label` in `delta`.
    fn successor_prestate(&self, delta: NodeId, label: usize) -> FormulaBits {
        let (agent, body) = self.index.diamond(label).expect("label is ¬K_aφ or ¬Dφ");
        let index = &self.index;
        let carried = |i: usize| -> bool {
            let core = match index.shape(i) {
                Shape::Not(j) => j,
                _ => i,
            };
            match (index.shape(core), agent) {
                (Shape::Knows(b, _), Some(a)) => a == b,
                (Shape::Knows(..), None) | (Shape::Dist(_), None) => true,
                _ => false,
            }
        };
        let mut gamma = index.empty_bits();
        gamma.insert(
            index
                .negation(body)
                .expect("negated body lies in the extended closure"),
        );
        for i in self.bits[delta.0].ones().filter(|&i| carried(i)) {
            gamma.insert(i);
        }
        gamma
    }

    /// Rule KR (for `¬K_aφ`) or DR (for `¬Dφ`).
    pub fn apply_diamond_rule(&mut self, delta: NodeId, label: usize) -> (NodeId, bool) {
        assert_eq!(
            self.kinds[delta.0],
            NodeKind::State,
            "KR/DR apply to states"
        );
        assert!(self.bits[delta.0].contains(label), "label must be a member");
        assert!(
            !self.index.is_patently_inconsistent(&self.bits[delta.0]),
            "KR/DR do not apply to patently inconsistent states"
        );
        let gamma = self.successor_prestate(delta, label);
        let (id, new) = self.insert_prestate(gamma);
        let edges = self.marked.entry(delta).or_default();
        if !edges.contains(&(label, id)) {
            edges.push((label, id));
            edges.sort();
        }
        (id, new)
    }

    /// Rule KR.
    pub fn apply_kr(&mut self, delta: NodeId, label: usize) -> (NodeId, bool) {
        assert!(
            matches!(self.index.diamond(label), Some((Some(_), _))),
            "KR needs ¬K_aφ"
        );
        self.apply_diamond_rule(delta, label)
    }

    /// Rule DR.
    pub fn apply_dr(&mut self, delta: NodeId, label: usize) -> (NodeId, bool) {
        assert!(
            matches!(self.index.diamond(label), Some((None, _))),
            "DR needs ¬Dφ"
        );
        self.apply_diamond_rule(delta, label)
    }

    pub fn index(&self) -> &ClosureIndex {
        &self.index
    }

    pub fn shared_index(&self) -> Arc<ClosureIndex> {
        self.index.clone()
    }

    pub fn config(&self) -> TableauConfig {
        self.config
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.kinds.len()).map(NodeId)
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.kinds[id.0]
    }

    pub fn bits(&self, id: NodeId) -> &FormulaBits {
        &self.bits[id.0]
    }

    pub fn formulas(&self, id: NodeId) -> FormulaSet {
        self.index.set_of(&self.bits[id.0])
    }

    pub fn prestates(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(|&n| self.kind(n) == NodeKind::Prestate)
    }

    pub fn states(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().filter(|&n| self.kind(n) == NodeKind::State)
    }

    /// `st(Γ)`.
    pub fn st(&self, gamma: NodeId) -> &[NodeId] {
        self.double.get(&gamma).map_or(&[], Vec::as_slice)
    }

    pub fn double_edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.double
            .iter()
            .flat_map(|(&g, st)| st.iter().map(move |&d| (g, d)))
    }

    /// `(state, label, prestate)` triples.
    pub fn marked_edges(&self) -> impl Iterator<Item = (NodeId, usize, NodeId)> + '_ {
        self.marked
            .iter()
            .flat_map(|(&d, es)| es.iter().map(move |&(l, g)| (d, l, g)))
    }

    /// Rule PR: drops prestates, rerouting every `Δ →χ Γ` to each state of `st(Γ)`.
    pub fn eliminate_prestates(&self) -> StateGraph {
        let states = self.states().map(|s| (s, self.bits[s.0].clone())).collect();
        let mut edges: BTreeMap<NodeId, Vec<(usize, NodeId)>> = BTreeMap::new();
        for (delta, label, gamma) in self.marked_edges() {
            let out = edges.entry(delta).or_default();
            for &target in self.st(gamma) {
                out.push((label, target));
            }
        }
        for out in edges.values_mut() {
            out.sort();
            out.dedup();
        }
        StateGraph::new(self.index.clone(), states, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{is_fully_expanded, parse, AgentSet, DecisionScope, SrMode};
    use crate::tableau::RankMode;

    fn ab() -> AgentSet {
        AgentSet::new(["a", "b"]).unwrap()
    }

    fn f(text: &str) -> Formula {
        parse(text, &ab()).unwrap()
    }

    fn set(items: &[&str]) -> FormulaSet {
        items.iter().map(|t| f(t)).collect()
    }

    const THETA: &str = "K{a} p & K{b} p & ~D C p";

    fn literal() -> TableauConfig {
        TableauConfig {
            rank_mode: RankMode::Min,
            decision_scope: DecisionScope::Subformulas,
            sr_mode: SrMode::ChoiceComplete,
            allow_single_agent: false,
        }
    }

    fn build(text: &str, config: TableauConfig) -> Pretableau {
        let theta = f(text);
        Pretableau::build(&theta, Arc::new(ClosureIndex::new(&theta, &ab())), config)
    }

    fn find(p: &Pretableau, kind: NodeKind, items: &[&str]) -> NodeId {
        let wanted = set(items);
        p.nodes()
            .find(|&n| p.kind(n) == kind && p.formulas(n) == wanted)
            .unwrap_or_else(|| panic!("no {kind:?} {wanted}"))
    }

    #[test]
    fn kr_and_dr_prestates() {
        let p = build(THETA, literal());
        let delta1 = find(
            &p,
            NodeKind::State,
            &[
                THETA,
                "K{a} p & K{b} p",
                "K{a} p",
                "K{b} p",
                "~D C p",
                "D p",
                "p",
            ],
        );
        let delta2 = find(
            &p,
            NodeKind::State,
            &[
                "~C p",
                "K{a} p",
                "K{b} p",
                "~D C p",
                "D p",
                "p",
                "~K{a}(p & C p)",
            ],
        );
        let delta3 = find(
            &p,
            NodeKind::State,
            &[
                "~C p",
                "K{a} p",
                "K{b} p",
                "~D C p",
                "D p",
                "p",
                "~K{b}(p & C p)",
            ],
        );
        let gamma1 = find(
            &p,
            NodeKind::Prestate,
            &["~C p", "K{a} p", "K{b} p", "~D C p", "D p"],
        );
        let chi0 = p.index().position(&f("~D C p")).unwrap();
        let chi1 = p.index().position(&f("~K{a}(p & C p)")).unwrap();
        let chi2 = p.index().position(&f("~K{b}(p & C p)")).unwrap();
        assert!(p.marked_edges().any(|e| e == (delta1, chi0, gamma1)));
        assert_eq!(p.st(gamma1), &[delta2, delta3]);

        let gamma2 = find(
            &p,
            NodeKind::Prestate,
            &["~(p & C p)", "K{a} p", "~K{a}(p & C p)"],
        );
        assert!(p.marked_edges().any(|e| e == (delta2, chi1, gamma2)));
        let gamma5 = find(
            &p,
            NodeKind::Prestate,
            &["~(p & C p)", "K{b} p", "~K{b}(p & C p)"],
        );
        assert!(p.marked_edges().any(|e| e == (delta3, chi2, gamma5)));
        // DR from Δ2 along ¬D C p carries the K and D formulas of both polarities.
        let gamma3 = find(
            &p,
            NodeKind::Prestate,
            &[
                "~C p",
                "K{a} p",
                "K{b} p",
                "~D C p",
                "D p",
                "~K{a}(p & C p)",
            ],
        );
        assert!(p.marked_edges().any(|e| e == (delta2, chi0, gamma3)));
    }

    #[test]
    fn trivial_rule_applications() {
        let mut p = build("~K{a} p", literal());
        let delta = find(&p, NodeKind::State, &["~K{a} p"]);
        let label = p.index().position(&f("~K{a} p")).unwrap();
        let (gamma, new) = p.apply_kr(delta, label);
        assert!(!new, "the construction already created it");
        assert_eq!(p.formulas(gamma), set(&["~p", "~K{a} p"]));

        let p = build("~D p", literal());
        let gamma = find(&p, NodeKind::Prestate, &["~p", "~D p"]);
        assert!(p.st(gamma).len() == 1);

        let p = build("p", literal());
        assert_eq!(p.node_count(), 2);
        assert_eq!(p.formulas(p.st(p.root())[0]), set(&["p"]));
    }

    #[test]
    fn identification_and_invariants() {
        for text in [THETA, "~C p & ~C ~p", "C ~K{a} p & ~D q", "~K{a} ~C p"] {
            for config in [literal(), TableauConfig::default()] {
                let p = build(text, config);
                let ecl = p.index().len();
                assert!(p.node_count() <= 2 * (1usize << ecl.min(30)));
                let mut seen = std::collections::HashSet::new();
                for n in p.nodes() {
                    assert!(
                        seen.insert((p.kind(n), p.bits(n).clone())),
                        "duplicate node"
                    );
                    if p.kind(n) == NodeKind::State {
                        assert!(is_fully_expanded(
                            &p.formulas(n),
                            &ab(),
                            config.decision_scope
                        ));
                    }
                }
                // Every consistent state has exactly one edge per label it contains.
                for s in p.states() {
                    if p.index().is_patently_inconsistent(p.bits(s)) {
                        assert!(p.marked_edges().all(|(d, _, _)| d != s));
                        continue;
                    }
                    let labels: Vec<usize> = p
                        .bits(s)
                        .ones()
                        .filter(|&i| p.index().diamond(i).is_some())
                        .collect();
                    let out: Vec<usize> =
                        p.marked_edges().filter(|e| e.0 == s).map(|e| e.1).collect();
                    assert_eq!(labels, out);
                }
                for g in p.prestates() {
                    assert!(!p.st(g).is_empty());
                }
            }
        }
    }

    #[test]
    fn prestate_elimination_reroutes_edges() {
        let p = build(THETA, literal());
        let t0 = p.eliminate_prestates();
        assert_eq!(t0.states().count(), p.states().count());
        for (delta, label, gamma) in p.marked_edges() {
            for &target in p.st(gamma) {
                assert!(t0.edges_from(delta).contains(&(label, target)));
            }
        }
        let expected: usize = p
            .states()
            .map(|d| {
                let mut v: Vec<(usize, NodeId)> = p
                    .marked_edges()
                    .filter(|e| e.0 == d)
                    .flat_map(|(_, l, g)| p.st(g).iter().map(move |&t| (l, t)))
                    .collect();
                v.sort();
                v.dedup();
                v.len()
            })
            .sum();
        assert_eq!(t0.edges().count(), expected);

        let t0 = build("p", literal()).eliminate_prestates();
        assert_eq!(t0.edges().count(), 0);
        assert_eq!(t0.states().count(), 1);
    }
}
