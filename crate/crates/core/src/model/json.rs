//! The JSON model file format.
//!
//! Relations are written as unordered pairs `[s, t]` of distinct worlds;
//! loading takes the equivalence closure of each, recomputes `R_C`, checks
//! the pseudo-frame conditions, and verifies the `genuine` flag.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::formula::AgentSet;
use crate::relation::Relation;

use super::{ModelError, PseudoModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub agents: Vec<String>,
    pub states: Vec<String>,
    pub atoms: Vec<String>,
    pub valuation: BTreeMap<String, Vec<String>>,
    pub relations: BTreeMap<String, Vec<[String; 2]>>,
    pub rd: Vec<[String; 2]>,
    pub genuine: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<BTreeMap<String, Vec<String>>>,
}

fn pairs_of(model: &PseudoModel, r: &Relation) -> Vec<[String; 2]> {
    r.pairs()
        .filter(|&(s, t)| s < t)
        .map(|(s, t)| {
            [
                model.world_name(s).to_string(),
                model.world_name(t).to_string(),
            ]
        })
        .collect()
}

impl ModelFile {
    pub fn from_model(model: &PseudoModel) -> Self {
        let name = |w: usize| model.world_name(w).to_string();
        ModelFile {
            agents: model.agents().iter().map(ToString::to_string).collect(),
            states: (0..model.len()).map(name).collect(),
            atoms: model.atoms().to_vec(),
            valuation: (0..model.len())
                .map(|w| (name(w), model.valuation(w).iter().cloned().collect()))
                .collect(),
            relations: model
                .agents()
                .iter()
                .enumerate()
                .map(|(a, agent)| (agent.to_string(), pairs_of(model, model.ra(a))))
                .collect(),
            rd: pairs_of(model, model.rd()),
            genuine: model.is_genuine(),
            labels: model.labels().map(|ls| {
                ls.iter()
                    .enumerate()
                    .map(|(w, l)| (name(w), l.clone()))
                    .collect()
            }),
        }
    }

    /// Rebuilds the model, closing every relation and checking the frame.
    pub fn to_model(&self) -> Result<PseudoModel, ModelError> {
        let malformed = |m: String| ModelError::Malformed(m);
        let agents = AgentSet::new(self.agents.iter().map(String::as_str))
            .map_err(|e| malformed(e.to_string()))?;
        if agents.len() != self.agents.len() {
            return Err(malformed("duplicate agents".into()));
        }
        let n = self.states.len();
        let position = |name: &str| {
            self.states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
        };
        let relation = |pairs: &[[String; 2]]| -> Result<Relation, ModelError> {
            let mut r = Relation::empty(n);
            for [s, t] in pairs {
                r.insert(position(s)?, position(t)?);
            }
            Ok(r.rst_closure())
        };
        let atoms: BTreeSet<&String> = self.atoms.iter().collect();
        let mut valuation = vec![BTreeSet::new(); n];
        for (world, true_atoms) in &self.valuation {
            let w = position(world)?;
            for a in true_atoms {
                if !atoms.contains(a) {
                    return Err(malformed(format!(
                        "atom `{a}` at {world} is not listed in atoms"
                    )));
                }
                valuation[w].insert(a.clone());
            }
        }
        for agent in self.relations.keys() {
            if !self.agents.contains(agent) {
                return Err(malformed(format!("relation for unknown agent `{agent}`")));
            }
        }
        let ra = agents
            .iter()
            .map(|a| relation(self.relations.get(a.name()).map_or(&[][..], Vec::as_slice)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut model = PseudoModel::new(
            agents,
            self.states.clone(),
            valuation,
            ra,
            relation(&self.rd)?,
        )?
        .with_atoms(self.atoms.iter().cloned());
        if let Some(labels) = &self.labels {
            let mut by_world = vec![Vec::new(); n];
            for (world, l) in labels {
                by_world[position(world)?] = l.clone();
            }
            model = model.with_labels(by_world);
        }
        let report = model.check_frame_conditions();
        if let Some(v) = report.violations.first() {
            return Err(malformed(v.to_string()));
        }
        if report.genuine != self.genuine {
            return Err(malformed(format!(
                "genuine flag is {} but R_D {} the intersection of the R_a",
                self.genuine,
                if report.genuine {
                    "equals"
                } else {
                    "is strictly below"
                }
            )));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("model files serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))
    }
}

impl PseudoModel {
    pub fn to_json(&self) -> String {
        ModelFile::from_model(self).to_json()
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        ModelFile::from_json(text)?.to_model()
    }
}
