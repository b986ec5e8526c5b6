//! Formula corpora shared by the integration tests.

#![allow(dead_code)]

use epistemic_tableau::formula::{Agent, AgentSet, Formula};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RANDOM_SEED: u64 = 0x4d41_454c;
pub const RANDOM_COUNT: usize = 200;
pub const RANDOM_MAX_LENGTH: usize = 20;

pub fn ab() -> AgentSet {
    AgentSet::new(["a", "b"]).unwrap()
}

fn agent(name: &str) -> Agent {
    Agent::new(name).unwrap()
}

/// Every formula over the atom `p` with exactly `k` connectives drawn from
/// ¬, ∧, K_a, K_b, D, C.
fn with_connectives(k: usize, memo: &mut Vec<Vec<Formula>>) -> Vec<Formula> {
    while memo.len() <= k {
        let n = memo.len();
        let mut level = Vec::new();
        if n == 0 {
            level.push(Formula::atom("p"));
        } else {
            for child in &memo[n - 1] {
                level.push(child.clone().not());
                level.push(Formula::knows(&agent("a"), child.clone()));
                level.push(Formula::knows(&agent("b"), child.clone()));
                level.push(Formula::dist(child.clone()));
                level.push(Formula::common(child.clone()));
            }
            for left in 0..n {
                let right = n - 1 - left;
                for l in &memo[left] {
                    for r in &memo[right] {
                        level.push(l.clone().and(r.clone()));
                    }
                }
            }
        }
        memo.push(level);
    }
    memo[k].clone()
}

/// All formulas over `p` and agents a, b with at most `max` connectives.
pub fn exhaustive_corpus(max: usize) -> Vec<Formula> {
    let mut memo = Vec::new();
    (0..=max)
        .flat_map(|k| with_connectives(k, &mut memo))
        .collect()
}

fn random_formula(rng: &mut ChaCha8Rng, length: usize) -> Formula {
    if length == 1 {
        return Formula::atom(if rng.gen_bool(0.5) { "p" } else { "q" });
    }
    if length >= 3 && rng.gen_ratio(1, 3) {
        let left = rng.gen_range(1..length - 1);
        let l = random_formula(rng, left);
        let r = random_formula(rng, length - 1 - left);
        return l.and(r);
    }
    let child = random_formula(rng, length - 1);
    match rng.gen_range(0..5) {
        0 => child.not(),
        1 => Formula::knows(&agent("a"), child),
        2 => Formula::knows(&agent("b"), child),
        3 => Formula::dist(child),
        _ => Formula::common(child),
    }
}

/// `RANDOM_COUNT` seeded formulas over p, q and agents a, b, each of length
/// (symbols) at most `RANDOM_MAX_LENGTH`.
pub fn random_corpus() -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED);
    (0..RANDOM_COUNT)
        .map(|_| {
            let length = rng.gen_range(1..=RANDOM_MAX_LENGTH);
            random_formula(&mut rng, length)
        })
        .collect()
}
