//! Semantics: (pseudo-)models, frame conditions, the satisfaction relation,
//! the pseudo-model of a Hintikka structure, and a brute-force model oracle.

mod json;
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::formula::{AgentSet, Formula};
use crate::hintikka::{validate_hintikka, Maehs};
use crate::relation::Relation;

pub use json::ModelFile;
pub use oracle::{
    brute_force_sat, enumerate_models, minimal_witness, OracleResult, MAX_ORACLE_ATOMS,
    MAX_ORACLE_STATES,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("agent `{0}` is not an agent of the model")]
    UnknownAgent(String),
    #[error("relational and reachability evaluation of {0} disagree")]
    CommonDisagreement(String),
    #[error("the Hintikka structure is invalid: {}", .0.join("; "))]
    InvalidHintikka(Vec<String>),
    #[error("truth lemma fails: {}", .0.join("; "))]
    TruthLemma(Vec<String>),
    #[error("model has no worlds")]
    NoWorlds,
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("enumeration bound exceeded: {0}")]
    BoundExceeded(String),
}

/// A multi-agent epistemic (pseudo-)model over worlds `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoModel {
    agents: AgentSet,
    worlds: Vec<String>,
    atoms: Vec<String>,
    valuation: Vec<BTreeSet<String>>,
    ra: Vec<Relation>,
    rd: Relation,
    rc: Relation,
    labels: Option<Vec<Vec<String>>>,
}

impl PseudoModel {
    /// A model with `R_C` computed as the transitive closure of
    /// `R_D ∪ ⋃ R_a`. Relations are taken as given; see
    /// [`PseudoModel::check_frame_conditions`].
    pub fn new(
        agents: AgentSet,
        worlds: Vec<String>,
        valuation: Vec<BTreeSet<String>>,
        ra: Vec<Relation>,
        rd: Relation,
    ) -> Result<Self, ModelError> {
        let n = worlds.len();
        if n == 0 {
            return Err(ModelError::NoWorlds);
        }
        if valuation.len() != n
            || ra.len() != agents.len()
            || ra.iter().chain([&rd]).any(|r| r.size() != n)
        {
            return Err(ModelError::Malformed(
                "relation or valuation sizes do not match the worlds".into(),
            ));
        }
        let distinct: BTreeSet<&String> = worlds.iter().collect();
        if distinct.len() != n {
            return Err(ModelError::Malformed("duplicate world names".into()));
        }
        let atoms: BTreeSet<String> = valuation.iter().flatten().cloned().collect();
        let mut union = rd.clone();
        for r in &ra {
            union.union_with(r);
        }
        Ok(PseudoModel {
            agents,
            worlds,
            atoms: atoms.into_iter().collect(),
            valuation,
            ra,
            rd,
            rc: union.transitive_closure(),
            labels: None,
        })
    }

    /// Widens the atom set `AP` (atoms outside it are false everywhere anyway).
    pub fn with_atoms<I: IntoIterator<Item = String>>(mut self, atoms: I) -> Self {
        let mut all: BTreeSet<String> = self.atoms.into_iter().collect();
        all.extend(atoms);
        self.atoms = all.into_iter().collect();
        self
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Self {
        assert_eq!(labels.len(), self.worlds.len());
        self.labels = Some(labels);
        self
    }

    pub fn agents(&self) -> &AgentSet {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn world_name(&self, world: usize) -> &str {
        &self.worlds[world]
    }

    pub fn world(&self, name: &str) -> Result<usize, ModelError> {
        self.worlds
            .iter()
            .position(|w| w == name)
            .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn valuation(&self, world: usize) -> &BTreeSet<String> {
        &self.valuation[world]
    }

    pub fn ra(&self, agent: usize) -> &Relation {
        &self.ra[agent]
    }

    pub fn rd(&self) -> &Relation {
        &self.rd
    }

    pub fn rc(&self) -> &Relation {
        &self.rc
    }

    pub fn labels(&self) -> Option<&[Vec<String>]> {
        self.labels.as_deref()
    }

    /// `R_D = ⋂_a R_a`.
    pub fn is_genuine(&self) -> bool {
        self.rd == self.agent_intersection()
    }

    fn agent_intersection(&self) -> Relation {
        let n = self.len();
        self.ra.iter().fold(total(n), |acc, r| acc.intersection(r))
    }

    /// Checks the (pseudo-)frame conditions and reports whether the frame
    /// is genuine.
    pub fn check_frame_conditions(&self) -> FrameReport {
        let mut violations = Vec::new();
        let named = self
            .agents
            .iter()
            .map(|a| format!("R_{a}"))
            .zip(&self.ra)
            .chain([("R_D".to_string(), &self.rd)]);
        for (name, r) in named {
            if let Some(s) = r.reflexivity_violation() {
                violations.push(FrameViolation::NotReflexive {
                    relation: name.clone(),
                    world: self.worlds[s].clone(),
                });
            }
            if let Some((s, t)) = r.symmetry_violation() {
                violations.push(FrameViolation::NotSymmetric {
                    relation: name.clone(),
                    pair: (self.worlds[s].clone(), self.worlds[t].clone()),
                });
            }
            if let Some((s, u)) = r.transitivity_violation() {
                violations.push(FrameViolation::NotTransitive {
                    relation: name,
                    missing: (self.worlds[s].clone(), self.worlds[u].clone()),
                });
            }
        }
        let meet = self.agent_intersection();
        if let Some((s, t)) = self.rd.pairs().find(|&(s, t)| !meet.contains(s, t)) {
            violations.push(FrameViolation::DistNotIncluded {
                pair: (self.worlds[s].clone(), self.worlds[t].clone()),
            });
        }
        let mut union = Relation::empty(self.len());
        for r in &self.ra {
            union.union_with(r);
        }
        if union.transitive_closure() != self.rc {
            violations.push(FrameViolation::CommonMismatch);
        }
        FrameReport {
            violations,
            genuine: self.is_genuine(),
        }
    }

    /// Truth set of `formula`: the worlds where it holds.
    pub fn truth_set(&self, formula: &Formula) -> Result<FixedBitSet, ModelError> {
        let n = self.len();
        Ok(match formula {
            Formula::Atom(name) => {
                let mut set = FixedBitSet::with_capacity(n);
                for (w, val) in self.valuation.iter().enumerate() {
                    set.set(w, val.contains(&**name));
                }
                set
            }
            Formula::Not(inner) => {
                let mut set = self.truth_set(inner)?;
                set.toggle_range(..);
                set
            }
            Formula::And(l, r) => {
                let mut set = self.truth_set(l)?;
                set.intersect_with(&self.truth_set(r)?);
                set
            }
            Formula::Knows(agent, inner) => {
                let a = self
                    .agents
                    .position(agent)
                    .ok_or_else(|| ModelError::UnknownAgent(agent.to_string()))?;
                boxed(&self.ra[a], &self.truth_set(inner)?)
            }
            Formula::Dist(inner) => boxed(&self.rd, &self.truth_set(inner)?),
            Formula::Common(inner) => {
                let body = self.truth_set(inner)?;
                let relational = boxed(&self.rc, &body);
                let reachable = self.common_by_reachability(&body);
                if relational != reachable {
                    return Err(ModelError::CommonDisagreement(formula.render()));
                }
                relational
            }
        })
    }

    /// `Cφ` read as "`φ` holds at every world reachable in one or more
    /// steps along any `R_a` or `R_D`", by graph search.
    fn common_by_reachability(&self, body: &FixedBitSet) -> FixedBitSet {
        let n = self.len();
        let mut out = FixedBitSet::with_capacity(n);
        for s in 0..n {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            let mut ok = true;
            while let Some(u) = stack.pop() {
                let next = self
                    .ra
                    .iter()
                    .chain([&self.rd])
                    .flat_map(|r| r.successors(u));
                for t in next.collect::<Vec<_>>() {
                    if !seen[t] {
                        seen[t] = true;
                        ok &= body.contains(t);
                        stack.push(t);
                    }
                }
            }
            out.set(s, ok);
        }
        out
    }

    pub fn satisfies(&self, world: usize, formula: &Formula) -> Result<bool, ModelError> {
        if world >= self.len() {
            return Err(ModelError::UnknownWorld(world.to_string()));
        }
        Ok(self.truth_set(formula)?.contains(world))
    }

    /// Truth of `formula` at `world` with both readings of every
    /// `C`-subformula there.
    pub fn sat_report(&self, world: usize, formula: &Formula) -> Result<SatReport, ModelError> {
        let value = self.satisfies(world, formula)?;
        let mut common = Vec::new();
        for sub in crate::formula::subformulae(formula).iter() {
            if let Formula::Common(inner) = sub {
                let body = self.truth_set(inner)?;
                common.push(CommonCheck {
                    formula: sub.render(),
                    relational: boxed(&self.rc, &body).contains(world),
                    reachability: self.common_by_reachability(&body).contains(world),
                });
            }
        }
        Ok(SatReport {
            formula: formula.render(),
            world: self.worlds[world].clone(),
            value,
            common,
        })
    }
}

fn total(n: usize) -> Relation {
    Relation::from_pairs(n, (0..n).flat_map(|s| (0..n).map(move |t| (s, t))))
}

/// Worlds all of whose `r`-successors lie in `body`.
fn boxed(r: &Relation, body: &FixedBitSet) -> FixedBitSet {
    let n = r.size();
    let mut out = FixedBitSet::with_capacity(n);
    for s in 0..n {
        out.set(s, r.row(s).is_subset(body));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameViolation {
    NotReflexive {
        relation: String,
        world: String,
    },
    NotSymmetric {
        relation: String,
        pair: (String, String),
    },
    NotTransitive {
        relation: String,
        missing: (String, String),
    },
    /// `R_D ⊄ ⋂_a R_a`.
    DistNotIncluded {
        pair: (String, String),
    },
    /// `R_C` differs from the transitive closure of `⋃_a R_a`.
    CommonMismatch,
}

impl fmt::Display for FrameViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameViolation::NotReflexive { relation, world } => {
                write!(f, "{relation} is not reflexive at {world}")
            }
            FrameViolation::NotSymmetric {
                relation,
                pair: (s, t),
            } => {
                write!(f, "{relation} contains ({s}, {t}) but not ({t}, {s})")
            }
            FrameViolation::NotTransitive {
                relation,
                missing: (s, u),
            } => {
                write!(f, "{relation} is not transitive: ({s}, {u}) is missing")
            }
            FrameViolation::DistNotIncluded { pair: (s, t) } => {
                write!(f, "R_D contains ({s}, {t}), which is not in every R_a")
            }
            FrameViolation::CommonMismatch => {
                f.write_str("R_C is not the transitive closure of the union of the R_a")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameReport {
    pub violations: Vec<FrameViolation>,
    /// `R_D = ⋂_a R_a`.
    pub genuine: bool,
}

impl FrameReport {
    /// A pseudo-frame: no violations.
    pub fn is_pseudo_frame(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn is_frame(&self) -> bool {
        self.is_pseudo_frame() && self.genuine
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonCheck {
    pub formula: String,
    pub relational: bool,
    pub reachability: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatReport {
    pub formula: String,
    pub world: String,
    pub value: bool,
    pub common: Vec<CommonCheck>,
}

/// The pseudo-model of a valid Hintikka structure: `R'_a = rst(R_a ∪ R_D)`,
/// `R'_D = rst(R_D)`, `R'_C` their closure, `L(s) = H(s) ∩ AP`. The truth
/// lemma is checked for every label member before the model is returned.
pub fn pseudo_model_from_hintikka(hs: &Maehs, theta: &Formula) -> Result<PseudoModel, ModelError> {
    let violations = validate_hintikka(hs, theta);
    if !violations.is_empty() {
        return Err(ModelError::InvalidHintikka(
            violations.iter().map(ToString::to_string).collect(),
        ));
    }
    let n = hs.len();
    let ra = (0..hs.agents().len())
        .map(|a| hs.ra(a).union(hs.rd()).rst_closure())
        .collect();
    let rd = hs.rd().rst_closure();
    let atoms: BTreeSet<String> = hs
        .labels()
        .iter()
        .flatten()
        .flat_map(Formula::atoms)
        .collect();
    let valuation = hs
        .labels()
        .iter()
        .map(|h| {
            h.iter()
                .filter_map(|f| match f {
                    Formula::Atom(name) => Some(name.to_string()),
                    _ => None,
                })
                .collect()
        })
        .collect();
    let worlds = (0..n).map(|w| format!("s{w}")).collect();
    let labels = hs.labels().iter().map(|h| h.rendered()).collect();
    let model = PseudoModel::new(hs.agents().clone(), worlds, valuation, ra, rd)?
        .with_atoms(atoms)
        .with_labels(labels);
    let failures = truth_lemma_failures(&model, hs)?;
    if !failures.is_empty() {
        return Err(ModelError::TruthLemma(failures));
    }
    Ok(model)
}

/// Label members that are false at their world.
pub fn truth_lemma_failures(model: &PseudoModel, hs: &Maehs) -> Result<Vec<String>, ModelError> {
    if hs.len() != model.len() {
        return Err(ModelError::Malformed(format!(
            "{} labels for {} worlds",
            hs.len(),
            model.len()
        )));
    }
    let mut truth = BTreeMap::new();
    for f in hs.labels().iter().flatten() {
        if !truth.contains_key(f) {
            truth.insert(f, model.truth_set(f)?);
        }
    }
    let mut failures = Vec::new();
    for w in 0..hs.len() {
        for f in hs.label(w) {
            if !truth[f].contains(w) {
                failures.push(format!("{f} is false at {}", model.world_name(w)));
            }
        }
    }
    Ok(failures)
}
