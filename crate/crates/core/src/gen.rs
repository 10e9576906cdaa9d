//! Seeded random instances for property tests and fuzz suites.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{classify_dbi, to_dbi_normal, Agent, DbiFormula, Formula};
use crate::model::{ActionModel, ActionSpec, Frame, KripkeModel, KripkeSpec};

pub const SEED_VAR: &str = "DELSYNTH_SEED";

/// The seed from `DELSYNTH_SEED`, or `default` when unset or unparsable.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var(SEED_VAR)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(default)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn agents(n: usize) -> Vec<Agent> {
    ["a", "b", "c", "d", "e"][..n].iter().map(|s| Agent::from(*s)).collect()
}

pub fn atoms(n: usize) -> Vec<String> {
    ["p", "q", "r", "s"][..n].iter().map(|s| s.to_string()).collect()
}

pub fn propositional(rng: &mut impl Rng, atoms: &[String], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..10) {
            0 => Formula::Top,
            1 => Formula::Bot,
            _ => Formula::atom(atoms.choose(rng).expect("atoms").clone()),
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..4) {
        0 => Formula::not(propositional(rng, atoms, d)),
        1 => Formula::and(propositional(rng, atoms, d), propositional(rng, atoms, d)),
        2 => Formula::or(propositional(rng, atoms, d), propositional(rng, atoms, d)),
        _ => Formula::implies(propositional(rng, atoms, d), propositional(rng, atoms, d)),
    }
}

/// A formula of modal depth at most `depth` over all connectives.
pub fn formula(rng: &mut impl Rng, agents: &[Agent], atoms: &[String], depth: usize) -> Formula {
    formula_sized(rng, agents, atoms, depth, 3)
}

fn formula_sized(rng: &mut impl Rng, agents: &[Agent], atoms: &[String], depth: usize, fuel: usize) -> Formula {
    if fuel == 0 || rng.gen_bool(0.2) {
        return propositional(rng, atoms, 1);
    }
    let f = fuel - 1;
    match rng.gen_range(0..6) {
        0 => Formula::not(formula_sized(rng, agents, atoms, depth, f)),
        1 => Formula::and(
            formula_sized(rng, agents, atoms, depth, f),
            formula_sized(rng, agents, atoms, depth, f),
        ),
        2 => Formula::or(
            formula_sized(rng, agents, atoms, depth, f),
            formula_sized(rng, agents, atoms, depth, f),
        ),
        _ if depth == 0 => propositional(rng, atoms, 2),
        3 | 4 => {
            let a = agents.choose(rng).expect("agents").clone();
            Formula::believes(a, formula_sized(rng, agents, atoms, depth - 1, fuel))
        }
        _ => {
            let a = agents.choose(rng).expect("agents").clone();
            Formula::possible(a, formula_sized(rng, agents, atoms, depth - 1, fuel))
        }
    }
}

/// A DBI formula of modal depth at most `depth`, not necessarily normal.
pub fn dbi_raw(rng: &mut impl Rng, agents: &[Agent], atoms: &[String], depth: usize) -> Formula {
    let n = rng.gen_range(1..=2);
    Formula::conjunction((0..n).map(|_| dbi_goal(rng, agents, atoms, depth.max(1))))
}

fn dbi_goal(rng: &mut impl Rng, agents: &[Agent], atoms: &[String], depth: usize) -> Formula {
    let agent = agents.choose(rng).expect("agents").clone();
    let inner_count = if depth > 1 { rng.gen_range(0..=2) } else { 0 };
    let inner: Vec<Formula> = (0..inner_count).map(|_| dbi_goal(rng, agents, atoms, depth - 1)).collect();
    let prop = (inner.is_empty() || rng.gen_bool(0.5)).then(|| propositional(rng, atoms, 1));
    let body = match (prop, inner.is_empty()) {
        (Some(xi), true) => xi,
        (Some(xi), false) => Formula::and(xi, Formula::conjunction(inner)),
        (None, _) => Formula::conjunction(inner),
    };
    Formula::believes(agent, body)
}

/// A DBI normal formula of modal depth at most `depth`.
pub fn dbi_normal(rng: &mut impl Rng, agents: &[Agent], atoms: &[String], depth: usize) -> DbiFormula {
    let raw = dbi_raw(rng, agents, atoms, depth);
    to_dbi_normal(&classify_dbi(&raw).expect("generator emits DBI formulas"))
}

fn valuation(rng: &mut impl Rng, atoms: &[String]) -> BTreeSet<String> {
    atoms.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect()
}

/// A Kripke model with 1 to `max_worlds` worlds and random relations.
pub fn kripke(rng: &mut impl Rng, agents: &[Agent], atoms: &[String], max_worlds: usize) -> KripkeModel {
    let n = rng.gen_range(1..=max_worlds);
    let density = rng.gen_range(0.2..0.7);
    let names: Vec<String> = (0..n).map(|k| format!("w{k}")).collect();
    let mut relations = Vec::new();
    for a in agents {
        for x in &names {
            for y in &names {
                if rng.gen_bool(density) {
                    relations.push((a.clone(), x.clone(), y.clone()));
                }
            }
        }
    }
    let worlds = names.iter().map(|w| (w.clone(), valuation(rng, atoms))).collect();
    KripkeSpec {
        agents: agents.to_vec(),
        worlds,
        point: names.choose(rng).expect("non-empty").clone(),
        relations,
    }
    .build()
    .expect("generated model is valid")
}

/// A Kripke model whose relations are transitive and euclidean.
#[allow(clippy::needless_range_loop)]
pub fn k45(rng: &mut impl Rng, agents: &[Agent], atoms: &[String], max_worlds: usize) -> KripkeModel {
    let m = kripke(rng, agents, atoms, max_worlds);
    let n = m.len();
    let mut edges = Vec::new();
    for a in 0..agents.len() {
        let mut rel = vec![vec![false; n]; n];
        for x in 0..n {
            for &y in m.frame().successors(a, x) {
                rel[x][y] = true;
            }
        }
        let mut changed = true;
        while changed {
            changed = false;
            for x in 0..n {
                for y in 0..n {
                    if !rel[x][y] {
                        continue;
                    }
                    for z in 0..n {
                        // transitive: xRy, yRz => xRz; euclidean: xRy, xRz => yRz
                        if rel[y][z] && !rel[x][z] {
                            rel[x][z] = true;
                            changed = true;
                        }
                        if rel[x][z] && !rel[y][z] {
                            rel[y][z] = true;
                            changed = true;
                        }
                    }
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                if rel[x][y] {
                    edges.push((a, x, y));
                }
            }
        }
    }
    let frame = Frame::from_edges(m.frame().names().to_vec(), m.frame().agents().to_vec(), edges, m.point());
    KripkeModel::from_parts(frame, (0..n).map(|w| m.atoms_at(w).clone()).collect())
}

/// An action model with 1 to `max_events` events and preconditions drawn
/// from a small pool, so that equal preconditions recur.
pub fn action(rng: &mut impl Rng, agents: &[Agent], atoms: &[String], max_events: usize) -> ActionModel {
    let n = rng.gen_range(1..=max_events);
    let mut pool = vec![Formula::Top, propositional(rng, atoms, 1), propositional(rng, atoms, 1)];
    pool.push(formula(rng, agents, atoms, 1));
    let density = rng.gen_range(0.2..0.7);
    let names: Vec<String> = (0..n).map(|k| format!("e{k}")).collect();
    let mut relations = Vec::new();
    for a in agents {
        for x in &names {
            for y in &names {
                if rng.gen_bool(density) {
                    relations.push((a.clone(), x.clone(), y.clone()));
                }
            }
        }
    }
    let events = names
        .iter()
        .map(|e| (e.clone(), Some(pool.choose(rng).expect("pool").clone())))
        .collect();
    ActionSpec {
        agents: agents.to_vec(),
        events,
        point: names.choose(rng).expect("non-empty").clone(),
        relations,
    }
    .build()
    .expect("generated action model is valid")
}

/// A frame with one node duplicated: the copy gets the original's successors,
/// and every edge into the original is redirected to the original, the copy,
/// or both. `origin[k]` is the node of `frame` that node `k` copies.
fn split_node(rng: &mut impl Rng, frame: &Frame) -> (Frame, Vec<usize>) {
    let n = frame.len();
    let dup = rng.gen_range(0..n);
    let copy = n;
    let mut names = frame.names().to_vec();
    names.push(format!("{}'", frame.name(dup)));
    let mut edges = Vec::new();
    for (a, x, y) in frame.edges() {
        let sources: &[usize] = if x == dup { &[dup, copy] } else { &[x] };
        for &s in sources {
            if y == dup {
                match rng.gen_range(0..3) {
                    0 => edges.push((a, s, dup)),
                    1 => edges.push((a, s, copy)),
                    _ => edges.extend([(a, s, dup), (a, s, copy)]),
                }
            } else {
                edges.push((a, s, y));
            }
        }
    }
    let mut origin: Vec<usize> = (0..n).collect();
    origin.push(dup);
    let point = if frame.point() == dup && rng.gen_bool(0.5) { copy } else { frame.point() };
    (Frame::from_edges(names, frame.agents().to_vec(), edges, point), origin)
}

/// A model bisimilar to `m` (pointwise via the returned origin map), with one world split in two.
pub fn bisimilar_kripke(rng: &mut impl Rng, m: &KripkeModel) -> (KripkeModel, Vec<usize>) {
    let (frame, origin) = split_node(rng, m.frame());
    let val = origin.iter().map(|&o| m.atoms_at(o).clone()).collect();
    (KripkeModel::from_parts(frame, val), origin)
}

/// An action model bisimilar to `u`, with one event split in two.
pub fn bisimilar_action(rng: &mut impl Rng, u: &ActionModel) -> (ActionModel, Vec<usize>) {
    let (frame, origin) = split_node(rng, u.frame());
    let pre = origin.iter().map(|&o| u.pre(o).clone()).collect();
    (ActionModel::from_parts(frame, pre), origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::{bisimilar, check_bisimulation};

    #[test]
    fn seeded_generation_is_reproducible() {
        let (ag, at) = (agents(3), atoms(2));
        let a: Vec<String> = (0..20).map(|_| dbi_normal(&mut rng(7), &ag, &at, 3).to_string()).collect();
        let b: Vec<String> = (0..20).map(|_| dbi_normal(&mut rng(7), &ag, &at, 3).to_string()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn generators_respect_their_contracts() {
        let mut r = rng(11);
        let (ag, at) = (agents(3), atoms(2));
        for _ in 0..200 {
            let d = dbi_normal(&mut r, &ag, &at, 3);
            assert!(d.is_normal());
            assert!(d.formula().modal_depth() <= 3);
            assert!(formula(&mut r, &ag, &at, 2).modal_depth() <= 2);
            let m = k45(&mut r, &ag, &at, 6);
            assert!(m.len() <= 6);
            assert!(m.frame().is_transitive() && m.frame().is_euclidean());
            assert!(m.to_spec().validate().is_empty());
        }
    }

    #[test]
    fn split_models_are_bisimilar() {
        let mut r = rng(3);
        let (ag, at) = (agents(2), atoms(2));
        for _ in 0..100 {
            let m = kripke(&mut r, &ag, &at, 4);
            let (m2, origin) = bisimilar_kripke(&mut r, &m);
            let pairs = origin.iter().enumerate().map(|(k, &o)| (o, k)).collect();
            check_bisimulation(&m, &m2, &pairs).unwrap();
            assert!(bisimilar(&m, m.point(), &m2, m2.point()).unwrap());
            let u = action(&mut r, &ag, &at, 3);
            let (u2, _) = bisimilar_action(&mut r, &u);
            assert!(bisimilar(&u, u.point(), &u2, u2.point()).unwrap());
        }
    }
}
