//! The three-phase decision procedure: pretableau construction (SR, KR, DR),
//! prestate elimination (PR), and state elimination (E1–E3).

mod dot;
mod elimination;
mod pretableau;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{AgentSet, ClosureIndex, DecisionScope, Formula, SrMode};

pub use dot::DotStage;
pub use elimination::{
    compute_ranks, compute_ranks_traced, eliminate_states, replay, EliminationTrace, Rank,
    ReplayError, Rule, StateGraph, TraceRecord,
};
pub use pretableau::{NodeKind, Pretableau};

/// The graph left after prestate elimination.
pub type InitialTableau = StateGraph;
/// The graph left after state elimination.
pub type FinalTableau = StateGraph;

/// Dense node identifier shared by prestates and states; never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How eventuality ranks are updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankMode {
    /// `1 + min` over all successors: plain path existence.
    #[default]
    Min,
    /// `1 + max` over labels of the `min` over that label's successors.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TableauConfig {
    pub rank_mode: RankMode,
    pub decision_scope: DecisionScope,
    pub sr_mode: SrMode,
    /// Accept a single agent instead of rejecting it.
    pub allow_single_agent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableauError {
    #[error("at least 2 agents are required, got {0} (the one-agent case is plain S5)")]
    TooFewAgents(usize),
    #[error("formula mentions agents outside the agent set {0}")]
    AgentsNotCovered(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Open,
    Closed,
}

/// Open iff some surviving state contains `θ`.
pub fn verdict(tableau: &FinalTableau, theta: &Formula) -> Verdict {
    let found = tableau
        .index()
        .position(theta)
        .is_some_and(|i| tableau.states().any(|s| tableau.bits(s).contains(i)));
    if found {
        Verdict::Open
    } else {
        Verdict::Closed
    }
}

/// Every artefact of one run of the procedure.
#[derive(Debug, Clone)]
pub struct TableauRun {
    pub theta: Formula,
    pub config: TableauConfig,
    pub pretableau: Pretableau,
    pub initial: InitialTableau,
    pub final_tableau: FinalTableau,
    pub trace: EliminationTrace,
    pub verdict: Verdict,
}

impl TableauRun {
    pub fn index(&self) -> &ClosureIndex {
        self.pretableau.index()
    }
}

pub fn check_agents(
    theta: &Formula,
    agents: &AgentSet,
    config: &TableauConfig,
) -> Result<(), TableauError> {
    if agents.len() < 2 && !config.allow_single_agent {
        return Err(TableauError::TooFewAgents(agents.len()));
    }
    if !agents.covers(theta) {
        return Err(TableauError::AgentsNotCovered(agents.to_string()));
    }
    Ok(())
}

/// Runs all three phases for `θ` over `agents`.
pub fn decide(
    theta: &Formula,
    agents: &AgentSet,
    config: TableauConfig,
) -> Result<TableauRun, TableauError> {
    check_agents(theta, agents, &config)?;
    let index = Arc::new(ClosureIndex::new(theta, agents));
    let pretableau = Pretableau::build(theta, index, config);
    let initial = pretableau.eliminate_prestates();
    let (final_tableau, trace) = eliminate_states(&initial, config.rank_mode);
    let verdict = verdict(&final_tableau, theta);
    Ok(TableauRun {
        theta: theta.clone(),
        config,
        pretableau,
        initial,
        final_tableau,
        trace,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn ab() -> AgentSet {
        AgentSet::new(["a", "b"]).unwrap()
    }

    fn run(text: &str) -> TableauRun {
        decide(
            &parse(text, &ab()).unwrap(),
            &ab(),
            TableauConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn known_verdicts() {
        for text in [
            "p",
            "C p",
            "~K{a} p",
            "K{a} p & K{b} p & ~D C p",
            "~C p & K{a} p",
        ] {
            assert_eq!(run(text).verdict, Verdict::Open, "{text}");
        }
        for text in [
            "p & ~p",
            "K{a} p & ~D p",
            "C p & ~p",
            "C p & ~K{a} p",
            "D p & ~p",
        ] {
            assert_eq!(run(text).verdict, Verdict::Closed, "{text}");
        }
    }

    #[test]
    fn agent_restrictions() {
        let one = AgentSet::new(["a"]).unwrap();
        let p = parse("p", &one).unwrap();
        assert_eq!(
            decide(&p, &one, TableauConfig::default()).unwrap_err(),
            TableauError::TooFewAgents(1)
        );
        let config = TableauConfig {
            allow_single_agent: true,
            ..TableauConfig::default()
        };
        assert_eq!(decide(&p, &one, config).unwrap().verdict, Verdict::Open);
        let kc = crate::formula::parse_unchecked("K{c} p").unwrap();
        assert!(matches!(
            decide(&kc, &ab(), TableauConfig::default()),
            Err(TableauError::AgentsNotCovered(_))
        ));
    }

    #[test]
    fn sr_mode_matters_for_the_literal_decision_clause() {
        let theta = parse("K{a} p & K{b} p & ~D C p", &ab()).unwrap();
        let with = |decision_scope, sr_mode| {
            let config = TableauConfig {
                decision_scope,
                sr_mode,
                ..TableauConfig::default()
            };
            decide(&theta, &ab(), config).unwrap().verdict
        };
        // θ is satisfiable; only the strict-minimal/literal combination loses it.
        assert_eq!(
            with(DecisionScope::Subformulas, SrMode::StrictMinimal),
            Verdict::Closed
        );
        assert_eq!(
            with(DecisionScope::Subformulas, SrMode::ChoiceComplete),
            Verdict::Open
        );
        assert_eq!(
            with(DecisionScope::WithCommonUnfoldings, SrMode::StrictMinimal),
            Verdict::Open
        );
        assert_eq!(
            with(DecisionScope::WithCommonUnfoldings, SrMode::ChoiceComplete),
            Verdict::Open
        );
    }

    #[test]
    fn optional_disjunct_realizes_the_eventuality() {
        // Satisfied by one world where p is false. `~(p & C p)` already holds
        // through the forced `~C p`, so the `~p` branch is the only route to
        // the goal of `~C p`.
        assert_eq!(run("C ~C p").verdict, Verdict::Open);
        assert_eq!(run("p & C ~C p").verdict, Verdict::Open);
    }

    #[test]
    fn trivial_runs() {
        let r = run("p");
        assert_eq!(r.pretableau.prestates().count(), 1);
        assert_eq!(r.pretableau.states().count(), 1);
        assert_eq!(r.pretableau.marked_edges().count(), 0);

        let r = run("p & ~p");
        assert_eq!(r.pretableau.states().count(), 1);
        assert_eq!(r.pretableau.marked_edges().count(), 0);
        assert_eq!(r.final_tableau.states().count(), 0);
        assert_eq!(r.trace.records().len(), 1);
        assert_eq!(r.trace.records()[0].rule, Rule::E1);
    }
}
