//! Exhaustive enumeration of small genuine models, and the brute-force
//! satisfiability oracle built on it.

use crate::formula::{AgentSet, Formula};
use crate::relation::Relation;

use super::{ModelError, PseudoModel};

/// Largest world count the enumerator accepts.
pub const MAX_ORACLE_STATES: usize = 5;
/// Largest number of atoms the enumerator accepts.
pub const MAX_ORACLE_ATOMS: usize = 2;

/// Set partitions of `0..n` as restricted growth strings, in lexicographic order.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for block in 0..=max + 1 {
            prefix.push(block);
            extend(prefix, max.max(block), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        extend(&mut vec![0], 0, n, &mut out);
    }
    out
}

/// Row masks of the equivalence relation of a partition.
fn partition_masks(rgs: &[usize]) -> Vec<u64> {
    rgs.iter()
        .map(|&b| {
            rgs.iter()
                .enumerate()
                .filter(|&(_, &c)| c == b)
                .fold(0u64, |m, (t, _)| m | (1 << t))
        })
        .collect()
}

fn masks_to_relation(masks: &[u64]) -> Relation {
    let n = masks.len();
    Relation::from_pairs(
        n,
        (0..n).flat_map(|s| {
            (0..n)
                .filter(move |&t| masks[s] >> t & 1 == 1)
                .map(move |t| (s, t))
        }),
    )
}

fn check_bounds(atoms: usize, max_states: usize) -> Result<(), ModelError> {
    if max_states == 0 || max_states > MAX_ORACLE_STATES {
        return Err(ModelError::BoundExceeded(format!(
            "world bound {max_states} is outside 1..={MAX_ORACLE_STATES}"
        )));
    }
    if atoms > MAX_ORACLE_ATOMS {
        return Err(ModelError::BoundExceeded(format!(
            "{atoms} atoms exceed the limit of {MAX_ORACLE_ATOMS}"
        )));
    }
    Ok(())
}

/// One genuine frame: a partition per agent, `R_D` their intersection.
struct Frame {
    ra: Vec<Vec<u64>>,
    rd: Vec<u64>,
    /// Reachability in one or more steps.
    rc: Vec<u64>,
}

impl Frame {
    fn new(ra: Vec<Vec<u64>>) -> Self {
        let n = ra[0].len();
        let rd: Vec<u64> = (0..n)
            .map(|s| ra.iter().fold(u64::MAX, |m, r| m & r[s]))
            .collect();
        let mut rc: Vec<u64> = (0..n)
            .map(|s| ra.iter().fold(rd[s], |m, r| m | r[s]))
            .collect();
        loop {
            let next: Vec<u64> = (0..n)
                .map(|s| {
                    (0..n)
                        .filter(|&t| rc[s] >> t & 1 == 1)
                        .fold(rc[s], |m, t| m | rc[t])
                })
                .collect();
            if next == rc {
                break;
            }
            rc = next;
        }
        Frame { ra, rd, rc }
    }

    fn model(&self, agents: &AgentSet, atoms: &[String], valuation: &[u64]) -> PseudoModel {
        let n = self.rd.len();
        let worlds = (0..n).map(|w| format!("s{w}")).collect();
        let val = (0..n)
            .map(|w| {
                atoms
                    .iter()
                    .zip(valuation)
                    .filter(|(_, &m)| m >> w & 1 == 1)
                    .map(|(a, _)| a.clone())
                    .collect()
            })
            .collect();
        let ra = self.ra.iter().map(|r| masks_to_relation(r)).collect();
        PseudoModel::new(agents.clone(), worlds, val, ra, masks_to_relation(&self.rd))
            .expect("enumerated models are well-formed")
            .with_atoms(atoms.iter().cloned())
    }
}

/// Every frame with `n` worlds, in odometer order over the agents' partitions.
fn frames(n: usize, agents: usize) -> impl Iterator<Item = Frame> {
    let parts: Vec<Vec<u64>> = partitions(n).iter().map(|p| partition_masks(p)).collect();
    let count = parts.len().pow(agents as u32);
    (0..count).map(move |mut code| {
        let mut ra = vec![Vec::new(); agents];
        for r in ra.iter_mut().rev() {
            *r = parts[code % parts.len()].clone();
            code /= parts.len();
        }
        Frame::new(ra)
    })
}

/// Every valuation of `atoms` atoms over `n` worlds, as one world mask per atom.
fn valuations(n: usize, atoms: usize) -> impl Iterator<Item = Vec<u64>> {
    let bits = n * atoms;
    (0..1u64 << bits).map(move |code| {
        (0..atoms)
            .map(|i| (code >> (i * n)) & ((1 << n) - 1))
            .collect()
    })
}

/// Every genuine model with 1 to `max_states` worlds over `agents` and
/// `atoms`, in a deterministic order (sizes ascending). Models isomorphic
/// up to renaming are not merged.
pub fn enumerate_models(
    agents: &AgentSet,
    atoms: &[String],
    max_states: usize,
) -> Result<impl Iterator<Item = PseudoModel>, ModelError> {
    check_bounds(atoms.len(), max_states)?;
    let agents = agents.clone();
    let atoms = atoms.to_vec();
    Ok((1..=max_states).flat_map(move |n| {
        let agents = agents.clone();
        let atoms = atoms.clone();
        frames(n, agents.len()).flat_map(move |frame| {
            let agents = agents.clone();
            let atoms = atoms.clone();
            valuations(n, atoms.len())
                .map(move |v| frame.model(&agents, &atoms, &v))
                .collect::<Vec<_>>()
        })
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    /// The first model (fewest worlds) and world satisfying the formula.
    Witness { model: PseudoModel, world: usize },
    /// No witness with at most the given number of worlds; not a proof of
    /// unsatisfiability.
    NotFoundWithinBound(usize),
}

/// A formula flattened for repeated evaluation on bit masks.
enum Op {
    Atom(usize),
    Not(usize),
    And(usize, usize),
    Knows(usize, usize),
    Dist(usize),
    Common(usize),
}

fn compile(
    formula: &Formula,
    agents: &AgentSet,
    atoms: &[String],
    ops: &mut Vec<Op>,
) -> Result<usize, ModelError> {
    let op = match formula {
        Formula::Atom(name) => Op::Atom(
            atoms
                .iter()
                .position(|a| **a == **name)
                .expect("atom collected"),
        ),
        Formula::Not(inner) => Op::Not(compile(inner, agents, atoms, ops)?),
        Formula::And(l, r) => {
            let l = compile(l, agents, atoms, ops)?;
            Op::And(l, compile(r, agents, atoms, ops)?)
        }
        Formula::Knows(agent, inner) => {
            let a = agents
                .position(agent)
                .ok_or_else(|| ModelError::UnknownAgent(agent.to_string()))?;
            Op::Knows(a, compile(inner, agents, atoms, ops)?)
        }
        Formula::Dist(inner) => Op::Dist(compile(inner, agents, atoms, ops)?),
        Formula::Common(inner) => Op::Common(compile(inner, agents, atoms, ops)?),
    };
    ops.push(op);
    Ok(ops.len() - 1)
}

fn boxed(rows: &[u64], body: u64) -> u64 {
    rows.iter()
        .enumerate()
        .filter(|&(_, &r)| r & !body == 0)
        .fold(0, |m, (s, _)| m | 1 << s)
}

/// Truth mask of the last op (the whole formula).
fn eval(ops: &[Op], frame: &Frame, valuation: &[u64], full: u64, scratch: &mut Vec<u64>) -> u64 {
    scratch.clear();
    for op in ops {
        let v = match *op {
            Op::Atom(i) => valuation[i],
            Op::Not(j) => !scratch[j] & full,
            Op::And(j, k) => scratch[j] & scratch[k],
            Op::Knows(a, j) => boxed(&frame.ra[a], scratch[j]),
            Op::Dist(j) => boxed(&frame.rd, scratch[j]),
            Op::Common(j) => boxed(&frame.rc, scratch[j]),
        };
        scratch.push(v);
    }
    *scratch.last().expect("non-empty formula")
}

/// Searches all genuine models with up to `max_states` worlds for one
/// satisfying `formula`; the first hit has the fewest worlds.
pub fn brute_force_sat(
    formula: &Formula,
    agents: &AgentSet,
    max_states: usize,
) -> Result<OracleResult, ModelError> {
    let atoms: Vec<String> = formula.atoms().into_iter().collect();
    check_bounds(atoms.len(), max_states)?;
    let mut ops = Vec::new();
    compile(formula, agents, &atoms, &mut ops)?;
    let mut scratch = Vec::with_capacity(ops.len());
    for n in 1..=max_states {
        let full = (1u64 << n) - 1;
        for frame in frames(n, agents.len()) {
            for valuation in valuations(n, atoms.len()) {
                let truth = eval(&ops, &frame, &valuation, full, &mut scratch);
                if truth != 0 {
                    return Ok(OracleResult::Witness {
                        model: frame.model(agents, &atoms, &valuation),
                        world: truth.trailing_zeros() as usize,
                    });
                }
            }
        }
    }
    Ok(OracleResult::NotFoundWithinBound(max_states))
}

/// Per bound `1..=max_states`: whether a witness exists with at most that
/// many worlds, stopping at the first bound that has one.
pub fn minimal_witness(
    formula: &Formula,
    agents: &AgentSet,
    max_states: usize,
) -> Result<Option<(usize, PseudoModel, usize)>, ModelError> {
    Ok(match brute_force_sat(formula, agents, max_states)? {
        OracleResult::Witness { model, world } => Some((model.len(), model, world)),
        OracleResult::NotFoundWithinBound(_) => None,
    })
}
