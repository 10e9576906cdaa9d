//! Bisimulation, G-bisimulation, modal equivalence and pointed isomorphism.
//!
//! Everything works on the disjoint union of the two structures: nodes of the
//! left structure keep their indices, nodes of the right one are shifted by
//! the left size.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::formula::{Agent, Formula};
use crate::model::{ActionModel, Frame, KripkeModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error("structures declare different agents: {left:?} vs {right:?}")]
    AgentMismatch { left: Vec<String>, right: Vec<String> },
    #[error("unknown agent '{0}'")]
    UnknownAgent(Agent),
    #[error("node index {0} out of range")]
    UnknownNode(usize),
    #[error("bounded equivalence supports at most {max} worlds in total, got {got}")]
    TooLarge { max: usize, got: usize },
}

/// A structure whose nodes carry a label compared by the Atoms or Pre clause.
pub trait Labelled {
    fn frame(&self) -> &Frame;
    fn label(&self, node: usize) -> String;
}

impl Labelled for KripkeModel {
    fn frame(&self) -> &Frame {
        KripkeModel::frame(self)
    }

    fn label(&self, node: usize) -> String {
        self.atoms_at(node).iter().cloned().collect::<Vec<_>>().join(",")
    }
}

/// Pre clause as syntactic equality of desugared preconditions.
impl Labelled for ActionModel {
    fn frame(&self) -> &Frame {
        ActionModel::frame(self)
    }

    fn label(&self, node: usize) -> String {
        self.pre(node).desugar().to_string()
    }
}

/// Pre clause up to propositional equivalence.
///
/// Propositional preconditions are compared by their truth tables over the
/// variables they actually depend on; modal ones fall back to syntax.
pub struct SemanticPre<'a>(pub &'a ActionModel);

const SEMANTIC_ATOM_LIMIT: usize = 16;

impl Labelled for SemanticPre<'_> {
    fn frame(&self) -> &Frame {
        self.0.frame()
    }

    fn label(&self, node: usize) -> String {
        let pre = self.0.pre(node);
        match truth_table_key(pre) {
            Some(key) => key,
            None => pre.desugar().to_string(),
        }
    }
}

fn eval_prop(f: &Formula, val: &BTreeSet<&str>) -> bool {
    match f {
        Formula::Atom(p) => val.contains(p.as_str()),
        Formula::Top => true,
        Formula::Bot => false,
        Formula::Not(g) => !eval_prop(g, val),
        Formula::And(l, r) => eval_prop(l, val) && eval_prop(r, val),
        Formula::Or(l, r) => eval_prop(l, val) || eval_prop(r, val),
        Formula::Implies(l, r) => !eval_prop(l, val) || eval_prop(r, val),
        Formula::Believes(..) | Formula::Possible(..) => unreachable!("propositional input"),
    }
}

fn truth_table_key(f: &Formula) -> Option<String> {
    if !f.is_propositional() {
        return None;
    }
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    if atoms.len() > SEMANTIC_ATOM_LIMIT {
        return None;
    }
    let table = |vars: &[&str]| -> Vec<bool> {
        (0..1usize << vars.len())
            .map(|bits| {
                let val = vars
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| bits >> k & 1 == 1)
                    .map(|(_, v)| *v)
                    .collect();
                eval_prop(f, &val)
            })
            .collect()
    };
    let all: Vec<&str> = atoms.iter().map(String::as_str).collect();
    let full = table(&all);
    // a variable is essential iff flipping it changes some row
    let essential: Vec<&str> = all
        .iter()
        .enumerate()
        .filter(|(k, _)| (0..full.len()).any(|row| full[row] != full[row ^ (1 << k)]))
        .map(|(_, v)| *v)
        .collect();
    let bits: String = table(&essential).iter().map(|&b| if b { '1' } else { '0' }).collect();
    Some(format!("prop[{}]:{}", essential.join(","), bits))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BisimKind {
    Full,
    Group(BTreeSet<Agent>),
}

/// Pairs `(left node, right node)` of a bisimulation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BisimRelation {
    pub pairs: BTreeSet<(usize, usize)>,
    pub kind: BisimKind,
}

impl BisimRelation {
    pub fn contains(&self, left: usize, right: usize) -> bool {
        self.pairs.contains(&(left, right))
    }

    /// The relation as a JSON list of `[left id, right id]` pairs.
    pub fn to_json(&self, left: &Frame, right: &Frame) -> serde_json::Value {
        let pairs: Vec<[&str; 2]> = self
            .pairs
            .iter()
            .map(|&(l, r)| [left.name(l), right.name(r)])
            .collect();
        serde_json::json!({ "kind": self.kind, "pairs": pairs })
    }
}

struct Union<'a> {
    left: &'a Frame,
    right: &'a Frame,
}

impl Union<'_> {
    fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    fn offset(&self) -> usize {
        self.left.len()
    }

    fn successors(&self, agent: usize, node: usize) -> Box<dyn Iterator<Item = usize> + '_> {
        if node < self.offset() {
            Box::new(self.left.successors(agent, node).iter().copied())
        } else {
            let off = self.offset();
            Box::new(self.right.successors(agent, node - off).iter().map(move |&s| s + off))
        }
    }
}

fn union<'a>(left: &'a Frame, right: &'a Frame) -> Result<Union<'a>, BisimError> {
    if left.agents() != right.agents() {
        let names = |f: &Frame| f.agents().iter().map(|a| a.to_string()).collect();
        return Err(BisimError::AgentMismatch {
            left: names(left),
            right: names(right),
        });
    }
    Ok(Union { left, right })
}

/// Signature-based refinement. With `counting`, successor blocks are kept as
/// a multiset (color refinement); otherwise as a set (bisimulation).
fn refine<K: Ord>(u: &Union<'_>, initial: &[K], counting: bool) -> Vec<usize> {
    let mut ids = BTreeMap::new();
    let mut block: Vec<usize> = initial
        .iter()
        .map(|k| {
            let next = ids.len();
            *ids.entry(k).or_insert(next)
        })
        .collect();
    let mut count = ids.len();
    let agents = u.left.agents().len();
    loop {
        let mut sigs = BTreeMap::new();
        let next: Vec<usize> = (0..u.len())
            .map(|x| {
                let per_agent: Vec<Vec<usize>> = (0..agents)
                    .map(|a| {
                        let mut bs: Vec<usize> = u.successors(a, x).map(|s| block[s]).collect();
                        bs.sort_unstable();
                        if !counting {
                            bs.dedup();
                        }
                        bs
                    })
                    .collect();
                let n = sigs.len();
                *sigs.entry((block[x], per_agent)).or_insert(n)
            })
            .collect();
        block = next;
        if sigs.len() == count {
            return block;
        }
        count = sigs.len();
    }
}

fn labels<L: Labelled>(a: &L, b: &L) -> Vec<String> {
    (0..a.frame().len())
        .map(|x| a.label(x))
        .chain((0..b.frame().len()).map(|y| b.label(y)))
        .collect()
}

fn bisim_blocks<L: Labelled>(a: &L, b: &L) -> Result<Vec<usize>, BisimError> {
    let u = union(a.frame(), b.frame())?;
    Ok(refine(&u, &labels(a, b), false))
}

/// The greatest bisimulation between `a` and `b`.
pub fn max_bisimulation<L: Labelled>(a: &L, b: &L) -> Result<BisimRelation, BisimError> {
    let block = bisim_blocks(a, b)?;
    let off = a.frame().len();
    let mut pairs = BTreeSet::new();
    for x in 0..off {
        for y in 0..b.frame().len() {
            if block[x] == block[off + y] {
                pairs.insert((x, y));
            }
        }
    }
    Ok(BisimRelation {
        pairs,
        kind: BisimKind::Full,
    })
}

/// Checks Atoms/Pre, Forth and Back for every pair directly.
pub fn check_bisimulation<L: Labelled>(
    a: &L,
    b: &L,
    pairs: &BTreeSet<(usize, usize)>,
) -> Result<(), String> {
    let (fa, fb) = (a.frame(), b.frame());
    if fa.agents() != fb.agents() {
        return Err("agent sets differ".into());
    }
    for &(x, y) in pairs {
        if x >= fa.len() || y >= fb.len() {
            return Err(format!("pair ({x}, {y}) out of range"));
        }
        if a.label(x) != b.label(y) {
            return Err(format!("labels differ at ({}, {})", fa.name(x), fb.name(y)));
        }
        for (ag, agent) in fa.agents().iter().enumerate() {
            for &x2 in fa.successors(ag, x) {
                if !fb.successors(ag, y).iter().any(|&y2| pairs.contains(&(x2, y2))) {
                    return Err(format!(
                        "forth fails for {agent} at ({}, {}) towards {}",
                        fa.name(x),
                        fb.name(y),
                        fa.name(x2)
                    ));
                }
            }
            for &y2 in fb.successors(ag, y) {
                if !fa.successors(ag, x).iter().any(|&x2| pairs.contains(&(x2, y2))) {
                    return Err(format!(
                        "back fails for {agent} at ({}, {}) towards {}",
                        fa.name(x),
                        fb.name(y),
                        fb.name(y2)
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_nodes<L: Labelled>(a: &L, pa: usize, b: &L, pb: usize) -> Result<(), BisimError> {
    if pa >= a.frame().len() {
        return Err(BisimError::UnknownNode(pa));
    }
    if pb >= b.frame().len() {
        return Err(BisimError::UnknownNode(pb));
    }
    Ok(())
}

pub fn bisimilar<L: Labelled>(a: &L, pa: usize, b: &L, pb: usize) -> Result<bool, BisimError> {
    check_nodes(a, pa, b, pb)?;
    let block = bisim_blocks(a, b)?;
    Ok(block[pa] == block[a.frame().len() + pb])
}

/// G-Forth and G-Back at the points, with successors related by full bisimilarity.
pub fn g_bisimilar<L: Labelled>(
    a: &L,
    pa: usize,
    b: &L,
    pb: usize,
    group: &BTreeSet<Agent>,
) -> Result<bool, BisimError> {
    check_nodes(a, pa, b, pb)?;
    let block = bisim_blocks(a, b)?;
    let off = a.frame().len();
    for agent in group {
        let ag = a
            .frame()
            .agent_index(agent)
            .ok_or_else(|| BisimError::UnknownAgent(agent.clone()))?;
        let left: BTreeSet<usize> = a.frame().successors(ag, pa).iter().map(|&x| block[x]).collect();
        let right: BTreeSet<usize> = b.frame().successors(ag, pb).iter().map(|&y| block[off + y]).collect();
        if left != right {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub procedure: &'static str,
}

/// Modal equivalence (or G-indistinguishability) on finite models, decided by
/// (G-)bisimilarity. On image-finite models the two coincide.
pub fn modally_equivalent(
    a: &KripkeModel,
    pa: usize,
    b: &KripkeModel,
    pb: usize,
    group: Option<&BTreeSet<Agent>>,
) -> Result<EquivalenceVerdict, BisimError> {
    Ok(match group {
        None => EquivalenceVerdict {
            equivalent: bisimilar(a, pa, b, pb)?,
            procedure: "bisimilarity",
        },
        Some(g) => EquivalenceVerdict {
            equivalent: g_bisimilar(a, pa, b, pb, g)?,
            procedure: "group bisimilarity",
        },
    })
}

pub const BOUNDED_WORLD_LIMIT: usize = 16;

/// Agreement on every formula of modal depth at most `depth`.
///
/// Computes the extension of every such formula over the disjoint union: the
/// depth-0 sets are the Boolean combinations of atoms, and depth `d + 1` adds
/// `[B_i] X` for every depth-`d` set `X` before closing under Booleans again.
pub fn bounded_equivalent(
    a: &KripkeModel,
    pa: usize,
    b: &KripkeModel,
    pb: usize,
    depth: usize,
) -> Result<bool, BisimError> {
    check_nodes(a, pa, b, pb)?;
    let u = union(a.frame(), b.frame())?;
    let n = u.len();
    if n > BOUNDED_WORLD_LIMIT {
        return Err(BisimError::TooLarge {
            max: BOUNDED_WORLD_LIMIT,
            got: n,
        });
    }
    let valuation = |x: usize| if x < u.offset() { a.atoms_at(x) } else { b.atoms_at(x - u.offset()) };
    let atoms: BTreeSet<&String> = (0..n).flat_map(valuation).collect();
    let mut generators: Vec<u32> = atoms
        .iter()
        .map(|p| (0..n).filter(|&x| valuation(x).contains(*p)).fold(0, |s, x| s | 1 << x))
        .collect();
    let (x, y) = (pa, u.offset() + pb);
    let separates = |set: u32| (set >> x & 1) != (set >> y & 1);
    let mut sets = boolean_closure(&generators, n);
    for _ in 0..depth {
        if sets.iter().any(|&s| separates(s)) {
            return Ok(false);
        }
        for ag in 0..u.left.agents().len() {
            let succ: Vec<u32> = (0..n).map(|w| u.successors(ag, w).fold(0, |s, v| s | 1 << v)).collect();
            for &s in &sets {
                generators.push((0..n).filter(|&w| succ[w] & !s == 0).fold(0, |acc, w| acc | 1 << w));
            }
        }
        generators.sort_unstable();
        generators.dedup();
        sets = boolean_closure(&generators, n);
    }
    Ok(!sets.iter().any(|&s| separates(s)))
}

/// All Boolean combinations of `generators` over `n` worlds: unions of the
/// atoms of the generated partition.
fn boolean_closure(generators: &[u32], n: usize) -> Vec<u32> {
    let mut cells: HashMap<Vec<bool>, u32> = HashMap::new();
    for w in 0..n {
        let key: Vec<bool> = generators.iter().map(|g| g >> w & 1 == 1).collect();
        *cells.entry(key).or_default() |= 1 << w;
    }
    let cells: Vec<u32> = cells.into_values().collect();
    (0..1u64 << cells.len())
        .map(|pick| {
            cells
                .iter()
                .enumerate()
                .filter(|(k, _)| pick >> k & 1 == 1)
                .fold(0, |s, (_, c)| s | c)
        })
        .collect()
}

/// A point-, relation- and label-preserving bijection from `a` onto `b`, if any.
/// `mapping[x]` is the image of node `x`.
pub fn isomorphic_pointed<L: Labelled>(
    a: &L,
    pa: usize,
    b: &L,
    pb: usize,
) -> Result<Option<Vec<usize>>, BisimError> {
    check_nodes(a, pa, b, pb)?;
    let (fa, fb) = (a.frame(), b.frame());
    let u = union(fa, fb)?;
    if fa.len() != fb.len() || fa.edge_count() != fb.edge_count() {
        return Ok(None);
    }
    let off = fa.len();
    let initial: Vec<(String, bool)> = labels(a, b)
        .into_iter()
        .enumerate()
        .map(|(k, l)| (l, k == pa || k == off + pb))
        .collect();
    let color = refine(&u, &initial, true);

    let mut class_sizes: HashMap<usize, usize> = HashMap::new();
    for &c in &color[..off] {
        *class_sizes.entry(c).or_default() += 1;
    }
    let mut order: Vec<usize> = (0..off).collect();
    order.sort_by_key(|&x| (class_sizes[&color[x]], x));

    let adj = |f: &Frame| -> Vec<Vec<Vec<bool>>> {
        (0..f.agents().len())
            .map(|ag| {
                (0..f.len())
                    .map(|x| {
                        let mut row = vec![false; f.len()];
                        for &s in f.successors(ag, x) {
                            row[s] = true;
                        }
                        row
                    })
                    .collect()
            })
            .collect()
    };
    let search = Search {
        order,
        color,
        off,
        adj_a: adj(fa),
        adj_b: adj(fb),
    };
    let mut mapping = vec![usize::MAX; off];
    let mut used = vec![false; off];
    Ok(search.extend(0, &mut mapping, &mut used).then_some(mapping))
}

struct Search {
    order: Vec<usize>,
    color: Vec<usize>,
    off: usize,
    adj_a: Vec<Vec<Vec<bool>>>,
    adj_b: Vec<Vec<Vec<bool>>>,
}

impl Search {
    fn consistent(&self, x: usize, y: usize, mapping: &[usize], depth: usize) -> bool {
        self.order[..depth].iter().chain(std::iter::once(&x)).all(|&x2| {
            let y2 = if x2 == x { y } else { mapping[x2] };
            (0..self.adj_a.len()).all(|ag| {
                self.adj_a[ag][x][x2] == self.adj_b[ag][y][y2] && self.adj_a[ag][x2][x] == self.adj_b[ag][y2][y]
            })
        })
    }

    fn extend(&self, depth: usize, mapping: &mut [usize], used: &mut [bool]) -> bool {
        let Some(&x) = self.order.get(depth) else {
            return true;
        };
        for y in 0..self.off {
            if used[y] || self.color[self.off + y] != self.color[x] || !self.consistent(x, y, mapping, depth) {
                continue;
            }
            mapping[x] = y;
            used[y] = true;
            if self.extend(depth + 1, mapping, used) {
                return true;
            }
            used[y] = false;
            mapping[x] = usize::MAX;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{ActionSpec, KripkeSpec};
    use crate::update::{pointed_update, product_update};

    fn singleton(atoms: &[&str]) -> KripkeModel {
        KripkeSpec {
            agents: vec![Agent::from("i")],
            worlds: vec![("w".into(), atoms.iter().map(|s| s.to_string()).collect())],
            relations: vec![(Agent::from("i"), "w".into(), "w".into())],
            point: "w".into(),
        }
        .build()
        .unwrap()
    }

    #[test]
    fn identity_and_atoms() {
        let m = fixtures::blt_initial();
        let rel = max_bisimulation(&m, &m).unwrap();
        for w in 0..m.len() {
            assert!(rel.contains(w, w));
        }
        check_bisimulation(&m, &m, &rel.pairs).unwrap();
        let p = singleton(&["p"]);
        let q = singleton(&[]);
        assert!(max_bisimulation(&p, &q).unwrap().pairs.is_empty());
        assert!(!bisimilar(&p, 0, &q, 0).unwrap());
        assert!(isomorphic_pointed(&p, 0, &q, 0).unwrap().is_none());
    }

    #[test]
    fn pointed_and_product_updates_are_bisimilar() {
        let m = fixtures::blt_initial();
        let u = fixtures::blt_goal_u();
        let pointed = pointed_update(&m, &u).unwrap();
        let product = product_update(&m, &u).unwrap();
        let rel = max_bisimulation(&pointed.model, &product.model).unwrap();
        check_bisimulation(&pointed.model, &product.model, &rel.pairs).unwrap();
        for (k, pair) in pointed.pairs.iter().enumerate() {
            let j = product.world_of(pair.0, pair.1).unwrap();
            assert!(rel.contains(k, j));
        }
        let json = rel.to_json(pointed.model.frame(), product.model.frame());
        assert!(json["pairs"].as_array().unwrap().iter().any(|p| p[0] == "v@0" && p[1] == "v@0"));
    }

    #[test]
    fn checker_rejects_bad_relations() {
        let m = fixtures::blt_initial();
        let u = m.world("u").unwrap();
        let v = m.world("v").unwrap();
        assert!(check_bisimulation(&m, &m, &BTreeSet::from([(u, v)])).is_err());
        // (u,u) alone fails forth: u sees v
        assert!(check_bisimulation(&m, &m, &BTreeSet::from([(u, u)])).is_err());
    }

    #[test]
    fn group_bisimilarity_claims() {
        let m = fixtures::blt_initial();
        let upd = fixtures::blt_updated();
        let g = |s: &str| s.split(',').filter(|x| !x.is_empty()).map(Agent::from).collect::<BTreeSet<_>>();
        let v = m.world("v").unwrap();
        let u = m.world("u").unwrap();
        let at = |name: &str| upd.world(name).unwrap();
        assert!(g_bisimilar(&m, v, &upd, at("v@0"), &g("l,t")).unwrap());
        assert!(g_bisimilar(&m, u, &upd, at("u@1"), &g("b,l")).unwrap());
        assert!(g_bisimilar(&m, u, &upd, at("u@2"), &g("b")).unwrap());
        assert!(g_bisimilar(&m, u, &upd, at("u@3"), &g("b,l")).unwrap());
        assert!(!g_bisimilar(&m, v, &upd, at("v@0"), &g("b")).unwrap());
        assert!(g_bisimilar(&m, v, &upd, at("v@0"), &g("")).unwrap());
        assert_eq!(
            g_bisimilar(&m, v, &upd, at("v@0"), &g("x")),
            Err(BisimError::UnknownAgent(Agent::from("x")))
        );
        let verdict = modally_equivalent(&m, v, &upd, at("v@0"), Some(&g("l,t"))).unwrap();
        assert!(verdict.equivalent);
        assert_eq!(verdict.procedure, "group bisimilarity");
    }

    #[test]
    fn bounded_equivalence_tracks_depth() {
        let m = fixtures::blt_initial();
        let upd = fixtures::blt_updated();
        let v0 = upd.world("v@0").unwrap();
        let v = m.world("v").unwrap();
        // B_b B_t p separates them at depth 2 but nothing of depth 1 does
        assert!(bounded_equivalent(&m, v, &upd, v0, 1).unwrap());
        assert!(!bounded_equivalent(&m, v, &upd, v0, 2).unwrap());
        assert!(bounded_equivalent(&m, v, &m, v, 3).unwrap());
    }

    #[test]
    fn action_models_with_pre_equality() {
        let u = fixtures::priv_msg_u();
        let mut spec = u.to_spec();
        spec.events[0].1 = Some(crate::formula::parse("p & top").unwrap());
        let v = spec.build().unwrap();
        let m = u.event("m").unwrap();
        assert!(!bisimilar(&u, m, &v, m).unwrap());
        assert!(bisimilar(&SemanticPre(&u), m, &SemanticPre(&v), m).unwrap());
        assert_eq!(truth_table_key(&crate::formula::parse("p | ~p").unwrap()).unwrap(), "prop[]:1");
    }

    #[test]
    fn isomorphism_finds_relabeling() {
        let u = fixtures::blt_goal_u();
        let mut spec = u.to_spec();
        spec.events.reverse();
        for e in &mut spec.events {
            e.0 = format!("e{}", e.0);
        }
        for r in &mut spec.relations {
            r.1 = format!("e{}", r.1);
            r.2 = format!("e{}", r.2);
        }
        spec.point = format!("e{}", spec.point);
        let w = ActionSpec { ..spec }.build().unwrap();
        let map = isomorphic_pointed(&u, u.point(), &w, w.point()).unwrap().unwrap();
        for (x, &y) in map.iter().enumerate() {
            assert_eq!(format!("e{}", u.frame().name(x)), w.frame().name(y));
        }
        // a different point breaks it
        let other = w.with_point(w.event("e4").unwrap());
        assert!(isomorphic_pointed(&u, u.point(), &other, other.point()).unwrap().is_none());
    }
}
