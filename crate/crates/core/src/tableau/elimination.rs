//! State elimination: rules E1–E3, eventuality ranks, and the elimination trace.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::formula::{ClosureIndex, FormulaBits, FormulaSet};

use super::{NodeId, RankMode};

/// A tableau without prestates: states joined by marked edges.
#[derive(Debug, Clone)]
pub struct StateGraph {
    index: Arc<ClosureIndex>,
    states: BTreeMap<NodeId, FormulaBits>,
    /// Outgoing `(label, target)` pairs, sorted.
    edges: BTreeMap<NodeId, Vec<(usize, NodeId)>>,
}

/// Graphs compare by nodes, labels and edges; the closure index is assumed shared.
impl PartialEq for StateGraph {
    fn eq(&self, other: &Self) -> bool {
        self.states == other.states && self.edges == other.edges
    }
}

impl Eq for StateGraph {}

impl StateGraph {
    pub(crate) fn new(
        index: Arc<ClosureIndex>,
        states: BTreeMap<NodeId, FormulaBits>,
        edges: BTreeMap<NodeId, Vec<(usize, NodeId)>>,
    ) -> Self {
        StateGraph {
            index,
            states,
            edges,
        }
    }

    pub fn index(&self) -> &ClosureIndex {
        &self.index
    }

    /// State ids in ascending order.
    pub fn states(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.states.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains_state(&self, id: NodeId) -> bool {
        self.states.contains_key(&id)
    }

    pub fn bits(&self, id: NodeId) -> &FormulaBits {
        &self.states[&id]
    }

    pub fn formulas(&self, id: NodeId) -> FormulaSet {
        self.index.set_of(&self.states[&id])
    }

    pub fn edges_from(&self, id: NodeId) -> &[(usize, NodeId)] {
        self.edges.get(&id).map_or(&[], Vec::as_slice)
    }

    /// `(source, label, target)` triples.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, usize, NodeId)> + '_ {
        self.edges
            .iter()
            .flat_map(|(&s, out)| out.iter().map(move |&(l, t)| (s, l, t)))
    }

    /// The `χ`-successors of `id`, ascending.
    pub fn successors(&self, id: NodeId, label: usize) -> impl Iterator<Item = NodeId> + '_ {
        self.edges_from(id)
            .iter()
            .filter(move |(l, _)| *l == label)
            .map(|&(_, t)| t)
    }

    /// The `¬K_aφ` / `¬Dφ` members of a state, ascending.
    pub fn labels(&self, id: NodeId) -> Vec<usize> {
        self.bits(id)
            .ones()
            .filter(|&i| self.index.diamond(i).is_some())
            .collect()
    }

    /// Eventualities occurring in some state, in rendering order.
    pub fn eventualities(&self) -> Vec<usize> {
        let mut found: Vec<usize> = self
            .states
            .values()
            .flat_map(|b| b.ones().filter(|&i| self.index.is_eventuality(i)))
            .collect();
        found.sort_unstable();
        found.dedup();
        found
    }

    /// The subgraph on the states `keep` accepts.
    pub fn restrict<F: Fn(NodeId) -> bool>(&self, keep: F) -> StateGraph {
        let states: BTreeMap<NodeId, FormulaBits> = self
            .states
            .iter()
            .filter(|(&id, _)| keep(id))
            .map(|(&id, b)| (id, b.clone()))
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|(id, _)| states.contains_key(id))
            .map(|(&id, out)| {
                let out: Vec<(usize, NodeId)> = out
                    .iter()
                    .copied()
                    .filter(|(_, t)| states.contains_key(t))
                    .collect();
                (id, out)
            })
            .filter(|(_, out)| !out.is_empty())
            .collect();
        StateGraph {
            index: self.index.clone(),
            states,
            edges,
        }
    }

    /// True if `self` is a node- and edge-subgraph of `other`.
    pub fn is_subgraph_of(&self, other: &StateGraph) -> bool {
        self.states
            .iter()
            .all(|(id, b)| other.states.get(id) == Some(b))
            && self
                .edges()
                .all(|(s, l, t)| other.edges_from(s).contains(&(l, t)))
    }
}

/// Rank of a state with respect to an eventuality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rank {
    Finite(usize),
    Omega,
}

impl Rank {
    fn succ(self) -> Rank {
        match self {
            Rank::Finite(n) => Rank::Finite(n + 1),
            Rank::Omega => Rank::Omega,
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Finite(n) => write!(f, "{n}"),
            Rank::Omega => f.write_str("ω"),
        }
    }
}

/// Dense view of a state graph with a liveness mask, used while eliminating.
struct Work<'g> {
    graph: &'g StateGraph,
    ids: Vec<NodeId>,
    alive: Vec<bool>,
    /// Per state: `(label, target position)`.
    succ: Vec<Vec<(usize, usize)>>,
    labels: Vec<Vec<usize>>,
}

impl<'g> Work<'g> {
    fn new(graph: &'g StateGraph) -> Self {
        let ids: Vec<NodeId> = graph.states().collect();
        let pos: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let succ = ids
            .iter()
            .map(|&id| {
                graph
                    .edges_from(id)
                    .iter()
                    .filter_map(|&(l, t)| pos.get(&t).map(|&p| (l, p)))
                    .collect()
            })
            .collect();
        let labels = ids.iter().map(|&id| graph.labels(id)).collect();
        Work {
            graph,
            alive: vec![true; ids.len()],
            ids,
            succ,
            labels,
        }
    }

    fn bits(&self, i: usize) -> &FormulaBits {
        self.graph.bits(self.ids[i])
    }

    /// Rank vectors of every Jacobi round, the last one being the fixpoint.
    fn rank_rounds(&self, eventuality: usize, mode: RankMode) -> Vec<Vec<Rank>> {
        let goal = self
            .graph
            .index()
            .goal(eventuality)
            .expect("rank is computed for eventualities");
        let n = self.ids.len();
        let mut ranks: Vec<Rank> = (0..n)
            .map(|i| {
                if self.alive[i] && self.bits(i).contains(goal) {
                    Rank::Finite(0)
                } else {
                    Rank::Omega
                }
            })
            .collect();
        let mut rounds = vec![ranks.clone()];
        loop {
            let mut next = ranks.clone();
            for i in (0..n).filter(|&i| self.alive[i] && ranks[i] != Rank::Finite(0)) {
                let live = || self.succ[i].iter().filter(|(_, t)| self.alive[*t]);
                let candidate = match mode {
                    RankMode::Min => live()
                        .map(|&(_, t)| ranks[t])
                        .min()
                        .unwrap_or(Rank::Omega)
                        .succ(),
                    RankMode::Strict => {
                        if self.labels[i].is_empty() {
                            Rank::Omega
                        } else {
                            self.labels[i]
                                .iter()
                                .map(|&chi| {
                                    live()
                                        .filter(|(l, _)| *l == chi)
                                        .map(|&(_, t)| ranks[t])
                                        .min()
                                        .unwrap_or(Rank::Omega)
                                })
                                .max()
                                .unwrap_or(Rank::Omega)
                                .succ()
                        }
                    }
                };
                next[i] = next[i].min(candidate);
            }
            if next == ranks {
                return rounds;
            }
            ranks = next;
            rounds.push(ranks.clone());
        }
    }

    fn ranks(&self, eventuality: usize, mode: RankMode) -> Vec<Rank> {
        self.rank_rounds(eventuality, mode)
            .pop()
            .expect("at least one round")
    }

    fn e1_applies(&self, i: usize) -> bool {
        self.graph.index().is_patently_inconsistent(self.bits(i))
    }

    /// The first label of state `i` without a live successor.
    fn e2_label(&self, i: usize) -> Option<usize> {
        self.labels[i]
            .iter()
            .copied()
            .find(|&chi| !self.succ[i].iter().any(|&(l, t)| l == chi && self.alive[t]))
    }

    fn e3_applies(&self, i: usize, eventuality: usize, ranks: &[Rank]) -> bool {
        self.bits(i).contains(eventuality) && ranks[i] == Rank::Omega
    }

    fn live_eventualities(&self) -> Vec<usize> {
        let index = self.graph.index();
        let mut found: Vec<usize> = (0..self.ids.len())
            .filter(|&i| self.alive[i])
            .flat_map(|i| self.bits(i).ones().filter(|&e| index.is_eventuality(e)))
            .collect();
        found.sort_unstable();
        found.dedup();
        found
    }

    fn result(&self) -> StateGraph {
        let alive: std::collections::HashSet<NodeId> = self
            .ids
            .iter()
            .zip(&self.alive)
            .filter(|(_, &a)| a)
            .map(|(&id, _)| id)
            .collect();
        self.graph.restrict(|id| alive.contains(&id))
    }
}

/// Ranks of every state of `graph` for the eventuality at index `eventuality`.
pub fn compute_ranks(
    graph: &StateGraph,
    eventuality: usize,
    mode: RankMode,
) -> BTreeMap<NodeId, Rank> {
    let work = Work::new(graph);
    work.ids
        .iter()
        .copied()
        .zip(work.ranks(eventuality, mode))
        .collect()
}

/// Like [`compute_ranks`], returning the rank map after every round.
pub fn compute_ranks_traced(
    graph: &StateGraph,
    eventuality: usize,
    mode: RankMode,
) -> Vec<BTreeMap<NodeId, Rank>> {
    let work = Work::new(graph);
    work.rank_rounds(eventuality, mode)
        .into_iter()
        .map(|r| work.ids.iter().copied().zip(r).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    E1,
    E2,
    E3,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::E1 => "E1",
            Rule::E2 => "E2",
            Rule::E3 => "E3",
        })
    }
}

/// One elimination stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub stage: usize,
    pub rule: Rule,
    pub node: NodeId,
    /// The unsupported label (E2) or unrealized eventuality (E3), rendered.
    pub reason: Option<String>,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stage={} rule={} node={} reason={}",
            self.stage,
            self.rule,
            self.node,
            self.reason.as_deref().unwrap_or("-")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("line {line}: malformed trace record `{text}`")]
    Malformed { line: usize, text: String },
    #[error("stage {stage}: expected stage number {expected}")]
    StageOrder { stage: usize, expected: usize },
    #[error("stage {stage}: node {node} is not a live state")]
    NotLive { stage: usize, node: NodeId },
    #[error("stage {stage}: {rule} does not apply to node {node}")]
    NotApplicable {
        stage: usize,
        rule: Rule,
        node: NodeId,
    },
    #[error("after the last stage {0} still applies")]
    NotFixpoint(Rule),
}

impl FromStr for TraceRecord {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let rest = line.strip_prefix("stage=").ok_or("missing stage")?;
        let (stage, rest) = rest.split_once(" rule=").ok_or("missing rule")?;
        let (rule, rest) = rest.split_once(" node=").ok_or("missing node")?;
        let (node, reason) = rest.split_once(" reason=").ok_or("missing reason")?;
        let rule = match rule {
            "E1" => Rule::E1,
            "E2" => Rule::E2,
            "E3" => Rule::E3,
            other => return Err(format!("unknown rule {other}")),
        };
        Ok(TraceRecord {
            stage: stage.parse().map_err(|_| "bad stage")?,
            rule,
            node: NodeId(node.parse().map_err(|_| "bad node")?),
            reason: (reason != "-").then(|| reason.to_string()),
        })
    }
}

/// The ordered removals of one elimination run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EliminationTrace {
    records: Vec<TraceRecord>,
}

impl EliminationTrace {
    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn removed_by(&self, rule: Rule) -> Vec<NodeId> {
        self.records
            .iter()
            .filter(|r| r.rule == rule)
            .map(|r| r.node)
            .collect()
    }

    fn push(&mut self, rule: Rule, node: NodeId, reason: Option<String>) {
        let stage = self.records.len() + 1;
        self.records.push(TraceRecord {
            stage,
            rule,
            node,
            reason,
        });
    }

    /// One line per record, each newline-terminated.
    pub fn to_text(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self, ReplayError> {
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| {
                l.trim().parse().map_err(|_| ReplayError::Malformed {
                    line: n + 1,
                    text: l.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(EliminationTrace { records })
    }
}

/// Runs E1 once over all states, then cycles E3/E2 over the eventualities
/// until a whole cycle removes nothing. One state is removed per stage;
/// candidates are visited in `NodeId` order.
pub fn eliminate_states(initial: &StateGraph, mode: RankMode) -> (StateGraph, EliminationTrace) {
    let mut work = Work::new(initial);
    let mut trace = EliminationTrace::default();
    let index = initial.index();
    let n = work.ids.len();

    for i in 0..n {
        if work.e1_applies(i) {
            work.alive[i] = false;
            trace.push(Rule::E1, work.ids[i], None);
        }
    }

    let e2_fixpoint = |work: &mut Work, trace: &mut EliminationTrace| -> bool {
        let mut removed = false;
        'scan: loop {
            for i in 0..n {
                if work.alive[i] {
                    if let Some(chi) = work.e2_label(i) {
                        work.alive[i] = false;
                        trace.push(Rule::E2, work.ids[i], Some(index.rendered(chi).to_string()));
                        removed = true;
                        continue 'scan;
                    }
                }
            }
            return removed;
        }
    };

    let eventualities = work.live_eventualities();
    if eventualities.is_empty() {
        e2_fixpoint(&mut work, &mut trace);
    } else {
        loop {
            let mut removed = false;
            for &ev in &eventualities {
                loop {
                    let ranks = work.ranks(ev, mode);
                    let Some(i) = (0..n).find(|&i| work.alive[i] && work.e3_applies(i, ev, &ranks))
                    else {
                        break;
                    };
                    work.alive[i] = false;
                    trace.push(Rule::E3, work.ids[i], Some(index.rendered(ev).to_string()));
                    removed = true;
                }
                removed |= e2_fixpoint(&mut work, &mut trace);
            }
            if !removed {
                break;
            }
        }
    }
    (work.result(), trace)
}

/// Re-applies a recorded trace to `initial`, checking that every step is a
/// legal rule application and that nothing applies afterwards.
pub fn replay(
    initial: &StateGraph,
    trace: &EliminationTrace,
    mode: RankMode,
) -> Result<StateGraph, ReplayError> {
    let mut work = Work::new(initial);
    let index = initial.index();
    let position = |rendered: &str| (0..index.len()).find(|&i| index.rendered(i) == rendered);
    for (k, record) in trace.records().iter().enumerate() {
        let stage = record.stage;
        if stage != k + 1 {
            return Err(ReplayError::StageOrder {
                stage,
                expected: k + 1,
            });
        }
        let i = work
            .ids
            .iter()
            .position(|&id| id == record.node)
            .filter(|&i| work.alive[i])
            .ok_or(ReplayError::NotLive {
                stage,
                node: record.node,
            })?;
        let not_applicable = ReplayError::NotApplicable {
            stage,
            rule: record.rule,
            node: record.node,
        };
        let reason = record.reason.as_deref().and_then(position);
        let ok = match record.rule {
            Rule::E1 => work.e1_applies(i),
            Rule::E2 => reason.is_some_and(|chi| {
                work.labels[i].contains(&chi)
                    && !work.succ[i].iter().any(|&(l, t)| l == chi && work.alive[t])
            }),
            Rule::E3 => reason.is_some_and(|ev| {
                index.is_eventuality(ev) && work.e3_applies(i, ev, &work.ranks(ev, mode))
            }),
        };
        if !ok {
            return Err(not_applicable);
        }
        work.alive[i] = false;
    }
    let live: Vec<usize> = (0..work.ids.len()).filter(|&i| work.alive[i]).collect();
    if live.iter().any(|&i| work.e1_applies(i)) {
        return Err(ReplayError::NotFixpoint(Rule::E1));
    }
    if live.iter().any(|&i| work.e2_label(i).is_some()) {
        return Err(ReplayError::NotFixpoint(Rule::E2));
    }
    for ev in work.live_eventualities() {
        let ranks = work.ranks(ev, mode);
        if live.iter().any(|&i| work.e3_applies(i, ev, &ranks)) {
            return Err(ReplayError::NotFixpoint(Rule::E3));
        }
    }
    Ok(work.result())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, AgentSet, Formula};
    use crate::tableau::{decide, TableauConfig};
    use proptest::prelude::*;

    fn ab() -> AgentSet {
        AgentSet::new(["a", "b"]).unwrap()
    }

    fn f(text: &str) -> Formula {
        parse(text, &ab()).unwrap()
    }

    /// Reference realization check: breadth-first search for a goal state.
    fn realized_by_search(graph: &StateGraph, start: NodeId, ev: usize) -> Option<usize> {
        let goal = graph.index().goal(ev).unwrap();
        let mut frontier = vec![start];
        let mut seen = std::collections::HashSet::from([start]);
        let mut dist = 0;
        while !frontier.is_empty() {
            if frontier.iter().any(|&s| graph.bits(s).contains(goal)) {
                return Some(dist);
            }
            let mut next = Vec::new();
            for s in frontier {
                for &(_, t) in graph.edges_from(s) {
                    if seen.insert(t) {
                        next.push(t);
                    }
                }
            }
            frontier = next;
            dist += 1;
        }
        None
    }

    #[test]
    fn min_rank_is_shortest_path_distance() {
        for text in [
            "K{a} p & K{b} p & ~D C p",
            "~C p & ~C q",
            "~C (p & ~K{b} q)",
        ] {
            let run = decide(&f(text), &ab(), TableauConfig::default()).unwrap();
            let graph = &run.initial;
            for ev in graph.eventualities() {
                let ranks = compute_ranks(graph, ev, RankMode::Min);
                for s in graph.states() {
                    let expected =
                        realized_by_search(graph, s, ev).map_or(Rank::Omega, Rank::Finite);
                    assert_eq!(ranks[&s], expected, "{text} state {s}");
                }
            }
        }
    }

    #[test]
    fn strict_rank_never_below_min_rank() {
        let run = decide(
            &f("K{a} p & K{b} p & ~D C p"),
            &ab(),
            TableauConfig::default(),
        )
        .unwrap();
        for ev in run.initial.eventualities() {
            let min = compute_ranks(&run.initial, ev, RankMode::Min);
            let strict = compute_ranks(&run.initial, ev, RankMode::Strict);
            for s in run.initial.states() {
                assert!(strict[&s] >= min[&s]);
            }
        }
    }

    #[test]
    fn trace_lines_round_trip() {
        let record = TraceRecord {
            stage: 3,
            rule: Rule::E2,
            node: NodeId(17),
            reason: Some("~K{a} (p & C p)".into()),
        };
        assert_eq!(
            record.to_string(),
            "stage=3 rule=E2 node=17 reason=~K{a} (p & C p)"
        );
        assert_eq!(record.to_string().parse::<TraceRecord>().unwrap(), record);
        let e1 = "stage=1 rule=E1 node=4 reason=-"
            .parse::<TraceRecord>()
            .unwrap();
        assert_eq!(e1.reason, None);
        assert!(EliminationTrace::parse("stage=1 rule=E9 node=1 reason=-").is_err());
    }

    #[test]
    fn replay_rejects_illegal_steps() {
        let run = decide(&f("p & ~p"), &ab(), TableauConfig::default()).unwrap();
        assert_eq!(
            replay(&run.initial, &run.trace, RankMode::Min).unwrap(),
            run.final_tableau
        );
        let empty = EliminationTrace::default();
        assert_eq!(
            replay(&run.initial, &empty, RankMode::Min),
            Err(ReplayError::NotFixpoint(Rule::E1))
        );
        let run = decide(&f("p"), &ab(), TableauConfig::default()).unwrap();
        let bogus = EliminationTrace::parse(&format!(
            "stage=1 rule=E1 node={} reason=-\n",
            run.initial.states().next().unwrap()
        ))
        .unwrap();
        assert!(matches!(
            replay(&run.initial, &bogus, RankMode::Min),
            Err(ReplayError::NotApplicable { .. })
        ));
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![Just(f("p")), Just(f("q"))];
        leaf.prop_recursive(4, 10, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| l.and(r)),
                inner
                    .clone()
                    .prop_map(|c| Formula::knows(&crate::formula::Agent::new("a").unwrap(), c)),
                inner
                    .clone()
                    .prop_map(|c| Formula::knows(&crate::formula::Agent::new("b").unwrap(), c)),
                inner.clone().prop_map(Formula::dist),
                inner.prop_map(Formula::common),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn elimination_invariants(theta in arb_formula(), strict in any::<bool>()) {
            let config = TableauConfig {
                rank_mode: if strict { RankMode::Strict } else { RankMode::Min },
                ..TableauConfig::default()
            };
            let run = decide(&theta, &ab(), config).unwrap();
            let fin = &run.final_tableau;
            prop_assert!(fin.is_subgraph_of(&run.initial));
            // Stages are consecutive, one removal each.
            for (k, r) in run.trace.records().iter().enumerate() {
                prop_assert_eq!(r.stage, k + 1);
            }
            prop_assert_eq!(run.trace.records().len() + fin.len(), run.initial.len());
            // E2: every surviving label keeps a surviving successor.
            for s in fin.states() {
                for chi in fin.labels(s) {
                    prop_assert!(fin.successors(s, chi).next().is_some());
                }
            }
            // E3: every surviving eventuality has a finite rank.
            for ev in fin.eventualities() {
                let ranks = compute_ranks(fin, ev, config.rank_mode);
                for s in fin.states().filter(|&s| fin.bits(s).contains(ev)) {
                    prop_assert!(ranks[&s] != Rank::Omega);
                }
            }
            // Rank rounds are monotone and bounded by the number of states.
            for ev in run.initial.eventualities() {
                let rounds = compute_ranks_traced(&run.initial, ev, config.rank_mode);
                prop_assert!(rounds.len() <= run.initial.len() + 1);
                for pair in rounds.windows(2) {
                    for s in run.initial.states() {
                        prop_assert!(pair[1][&s] <= pair[0][&s]);
                    }
                }
                for r in rounds.last().unwrap().values() {
                    if let Rank::Finite(k) = r {
                        prop_assert!(*k < run.initial.len());
                    }
                }
            }
            let text = run.trace.to_text();
            let parsed = EliminationTrace::parse(&text).unwrap();
            prop_assert_eq!(&parsed, &run.trace);
            prop_assert_eq!(&replay(&run.initial, &parsed, config.rank_mode).unwrap(), fin);
        }
    }
}
