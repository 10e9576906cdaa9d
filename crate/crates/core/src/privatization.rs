//! Modal syntactic trees, clusters, walk accessibility and privatization.
//!
//! Privatization quantifies over all agent sequences without successive
//! repeats (nsr sequences), an infinite set. Both formulations below decide
//! it exactly by exploring finite automata:
//!
//! * `cluster-disjointness` runs a subset construction whose states are
//!   `(cluster, last agent, position relative to the root path)`, so every
//!   reachable cluster of every nsr sequence is visited once.
//! * `walk-uniqueness` propagates, through the states `(node, last agent)`,
//!   up to two distinct nsr sequences reaching each state.
//!
//! An optional length bound restricts both to sequences of at most that many
//! agents. A bound of `2 * nodes * (agents + 1)` never changes the answer:
//! two distinct words accepted by an automaton with `n` states always include
//! two of length below `2n`.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{Agent, DbiFormula, Goal};
use crate::model::{ActionModel, Frame, KripkeModel};
use crate::update::{pointed_update, UpdateError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrivatizationError {
    #[error("agent '{0}' is not declared by the frame")]
    UnknownAgent(Agent),
    #[error("unknown privatization formulation '{0}' (known: cluster-disjointness, walk-uniqueness)")]
    UnknownFormulation(String),
    #[error(transparent)]
    Update(#[from] UpdateError),
}

/// Out-tree of the belief operators of a DBI formula; node 0 is the unlabeled root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModalSyntacticTree {
    labels: Vec<Option<Agent>>,
    children: Vec<Vec<usize>>,
}

impl ModalSyntacticTree {
    pub fn new(phi: &DbiFormula) -> Self {
        fn add(tree: &mut ModalSyntacticTree, parent: usize, g: &Goal) {
            let node = tree.labels.len();
            tree.labels.push(Some(g.agent.clone()));
            tree.children.push(Vec::new());
            tree.children[parent].push(node);
            for inner in &g.inner {
                add(tree, node, inner);
            }
        }
        let mut tree = ModalSyntacticTree {
            labels: vec![None],
            children: vec![Vec::new()],
        };
        for g in phi.goals() {
            add(&mut tree, 0, g);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, node: usize) -> Option<&Agent> {
        self.labels[node].as_ref()
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Agent sequences of all root-anchored paths, including the empty one.
    pub fn root_paths(&self) -> BTreeSet<Vec<Agent>> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(0, Vec::new())];
        while let Some((node, seq)) = stack.pop() {
            for &c in &self.children[node] {
                let mut next: Vec<Agent> = seq.clone();
                next.push(self.labels[c].clone().expect("non-root nodes are labeled"));
                stack.push((c, next));
            }
            out.insert(seq);
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph tree {\n  node [shape=circle];\n  n0 [label=\"\", shape=point];\n");
        for node in 1..self.len() {
            let agent = self.labels[node].as_ref().expect("labeled");
            let _ = writeln!(s, "  n{node} [label=\"B{agent}\"];");
        }
        for (p, cs) in self.children.iter().enumerate() {
            for c in cs {
                let _ = writeln!(s, "  n{p} -> n{c};");
            }
        }
        s.push_str("}\n");
        s
    }
}

pub fn root_paths(phi: &DbiFormula) -> BTreeSet<Vec<Agent>> {
    ModalSyntacticTree::new(phi).root_paths()
}

fn agent_indices(frame: &Frame, seq: &[Agent]) -> Result<Vec<usize>, PrivatizationError> {
    seq.iter()
        .map(|a| {
            frame
                .agent_index(a)
                .ok_or_else(|| PrivatizationError::UnknownAgent(a.clone()))
        })
        .collect()
}

fn step(frame: &Frame, set: &BTreeSet<usize>, agent: usize) -> BTreeSet<usize> {
    set.iter()
        .flat_map(|&x| frame.successors(agent, x).iter().copied())
        .collect()
}

/// Nodes reachable from `from` along exactly the agent sequence `seq`.
pub fn cluster(frame: &Frame, from: usize, seq: &[Agent]) -> Result<BTreeSet<usize>, PrivatizationError> {
    let idx = agent_indices(frame, seq)?;
    Ok(idx.into_iter().fold(BTreeSet::from([from]), |set, a| step(frame, &set, a)))
}

pub fn is_nsr(seq: &[Agent]) -> bool {
    seq.windows(2).all(|w| w[0] != w[1])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Walk {
    pub nodes: Vec<usize>,
    pub agents: Vec<Agent>,
}

/// Every nsr walk from `from` with at most `max_len` edges, including the empty walk.
pub fn root_walks_nsr(frame: &Frame, from: usize, max_len: usize) -> Vec<Walk> {
    let mut out = Vec::new();
    let mut stack = vec![(vec![from], Vec::<usize>::new())];
    while let Some((nodes, agents)) = stack.pop() {
        if agents.len() < max_len {
            let last = *nodes.last().expect("non-empty");
            for a in 0..frame.agents().len() {
                if agents.last() == Some(&a) {
                    continue;
                }
                for &n in frame.successors(a, last) {
                    let mut nn = nodes.clone();
                    nn.push(n);
                    let mut aa = agents.clone();
                    aa.push(a);
                    stack.push((nn, aa));
                }
            }
        }
        out.push(Walk {
            nodes,
            agents: agents.iter().map(|&a| frame.agents()[a].clone()).collect(),
        });
    }
    out.sort_by(|x, y| (x.agents.len(), &x.nodes).cmp(&(y.agents.len(), &y.nodes)));
    out
}

/// Agent sequences of the nsr walks from `from` that end at `to`, up to `max_len` agents.
pub fn walk_accessibility(frame: &Frame, from: usize, to: usize, max_len: usize) -> BTreeSet<Vec<Agent>> {
    let mut out = BTreeSet::new();
    let mut stack = vec![(Vec::<usize>::new(), BTreeSet::from([from]))];
    while let Some((seq, set)) = stack.pop() {
        if set.contains(&to) {
            out.insert(seq.iter().map(|&a| frame.agents()[a].clone()).collect());
        }
        if seq.len() == max_len {
            continue;
        }
        for a in 0..frame.agents().len() {
            if seq.last() == Some(&a) {
                continue;
            }
            let next = step(frame, &set, a);
            if !next.is_empty() {
                let mut s = seq.clone();
                s.push(a);
                stack.push((s, next));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// The cluster of a root path is empty.
    EmptyCluster,
    /// Another nsr sequence reaches a node of the root path's cluster.
    Clash { sequence: Vec<Agent>, shared: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub root_path: Vec<Agent>,
    #[serde(flatten)]
    pub violation: Violation,
}

/// How privatization is decided for one frame.
pub trait PrivatizationCheck: Send + Sync {
    fn name(&self) -> &'static str;

    /// The first violation for the given root paths, if any.
    fn find_violation(
        &self,
        frame: &Frame,
        root_paths: &BTreeSet<Vec<Agent>>,
        weak: bool,
        max_len: Option<usize>,
    ) -> Result<Option<Witness>, PrivatizationError>;
}

/// Pairwise disjointness of clusters, by subset construction.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClusterDisjointness;

/// Every node of a root-path cluster is reached by exactly one nsr sequence.
#[derive(Clone, Copy, Debug, Default)]
pub struct WalkUniqueness;

pub const FORMULATION_NAMES: &[&str] = &["cluster-disjointness", "walk-uniqueness"];

pub fn formulation_by_name(name: &str) -> Result<Box<dyn PrivatizationCheck>, PrivatizationError> {
    match name {
        "cluster-disjointness" => Ok(Box::new(ClusterDisjointness)),
        "walk-uniqueness" => Ok(Box::new(WalkUniqueness)),
        _ => Err(PrivatizationError::UnknownFormulation(name.to_string())),
    }
}

fn names(frame: &Frame, seq: &[usize]) -> Vec<Agent> {
    seq.iter().map(|&a| frame.agents()[a].clone()).collect()
}

impl PrivatizationCheck for ClusterDisjointness {
    fn name(&self) -> &'static str {
        "cluster-disjointness"
    }

    fn find_violation(
        &self,
        frame: &Frame,
        root_paths: &BTreeSet<Vec<Agent>>,
        weak: bool,
        max_len: Option<usize>,
    ) -> Result<Option<Witness>, PrivatizationError> {
        for path in root_paths {
            let s = agent_indices(frame, path)?;
            let target = cluster(frame, frame.point(), path)?;
            if target.is_empty() {
                if !weak {
                    return Ok(Some(Witness {
                        root_path: path.clone(),
                        violation: Violation::EmptyCluster,
                    }));
                }
                continue;
            }
            // tracker: Some(k) while the sequence equals s[..k], None once it differs
            type State = (BTreeSet<usize>, Option<usize>, Option<usize>);
            let start: State = (BTreeSet::from([frame.point()]), None, Some(0));
            let mut parent: HashMap<State, Option<(State, usize)>> = HashMap::from([(start.clone(), None)]);
            let mut queue = VecDeque::from([(start, 0usize)]);
            while let Some((state, len)) = queue.pop_front() {
                let (set, last, tracker) = &state;
                if *tracker != Some(s.len()) {
                    if let Some(&shared) = set.intersection(&target).next() {
                        let mut seq = Vec::new();
                        let mut cur = &state;
                        while let Some(Some((prev, a))) = parent.get(cur) {
                            seq.push(*a);
                            cur = prev;
                        }
                        seq.reverse();
                        return Ok(Some(Witness {
                            root_path: path.clone(),
                            violation: Violation::Clash {
                                sequence: names(frame, &seq),
                                shared: frame.name(shared).to_string(),
                            },
                        }));
                    }
                }
                if max_len.is_some_and(|m| len >= m) {
                    continue;
                }
                for a in 0..frame.agents().len() {
                    if *last == Some(a) {
                        continue;
                    }
                    let next_set = step(frame, set, a);
                    if next_set.is_empty() {
                        continue;
                    }
                    let next_tracker = match tracker {
                        Some(k) if *k < s.len() && s[*k] == a => Some(k + 1),
                        _ => None,
                    };
                    let next: State = (next_set, Some(a), next_tracker);
                    if !parent.contains_key(&next) {
                        parent.insert(next.clone(), Some((state.clone(), a)));
                        queue.push_back((next, len + 1));
                    }
                }
            }
        }
        Ok(None)
    }
}

impl PrivatizationCheck for WalkUniqueness {
    fn name(&self) -> &'static str {
        "walk-uniqueness"
    }

    fn find_violation(
        &self,
        frame: &Frame,
        root_paths: &BTreeSet<Vec<Agent>>,
        weak: bool,
        max_len: Option<usize>,
    ) -> Result<Option<Witness>, PrivatizationError> {
        let words = distinct_words(frame, max_len);
        for path in root_paths {
            let s = agent_indices(frame, path)?;
            let target = cluster(frame, frame.point(), path)?;
            if target.is_empty() && !weak {
                return Ok(Some(Witness {
                    root_path: path.clone(),
                    violation: Violation::EmptyCluster,
                }));
            }
            for &node in &target {
                let reaching = &words[node];
                if reaching.len() != 1 {
                    let other = reaching.iter().find(|w| **w != s).cloned().unwrap_or_default();
                    return Ok(Some(Witness {
                        root_path: path.clone(),
                        violation: Violation::Clash {
                            sequence: names(frame, &other),
                            shared: frame.name(node).to_string(),
                        },
                    }));
                }
            }
        }
        Ok(None)
    }
}

/// Up to two distinct nsr sequences (as agent indices) reaching each node.
fn distinct_words(frame: &Frame, max_len: Option<usize>) -> Vec<BTreeSet<Vec<usize>>> {
    let agents = frame.agents().len();
    // state (node, last agent); slot `agents` stands for the empty sequence
    let state = |node: usize, last: usize| node * (agents + 1) + last;
    let mut found: Vec<Vec<Vec<usize>>> = vec![Vec::new(); frame.len() * (agents + 1)];
    found[state(frame.point(), agents)].push(Vec::new());
    let mut queue = VecDeque::from([(frame.point(), agents, Vec::new())]);
    while let Some((node, last, word)) = queue.pop_front() {
        if max_len.is_some_and(|m| word.len() >= m) {
            continue;
        }
        for a in (0..agents).filter(|&a| a != last) {
            for &next in frame.successors(a, node) {
                let slot = &mut found[state(next, a)];
                let mut w = word.clone();
                w.push(a);
                if slot.len() < 2 && !slot.contains(&w) {
                    slot.push(w.clone());
                    queue.push_back((next, a, w));
                }
            }
        }
    }
    (0..frame.len())
        .map(|n| {
            (0..=agents)
                .flat_map(|l| found[state(n, l)].iter().cloned())
                .take(2)
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrivatizationReport {
    pub weak: bool,
    pub privatized: bool,
    /// Verdict of each formulation, by name.
    pub formulations: Vec<(String, bool)>,
    /// Whether all formulations agree.
    pub agree: bool,
    pub witness: Option<Witness>,
}

fn run_all(
    frame: &Frame,
    phi: &DbiFormula,
    weak: bool,
    max_len: Option<usize>,
) -> Result<PrivatizationReport, PrivatizationError> {
    let paths = root_paths(phi);
    let mut formulations = Vec::new();
    let mut witness = None;
    for name in FORMULATION_NAMES {
        let check = formulation_by_name(name)?;
        let found = check.find_violation(frame, &paths, weak, max_len)?;
        formulations.push((name.to_string(), found.is_none()));
        if witness.is_none() {
            witness = found;
        }
    }
    let privatized = formulations[0].1;
    Ok(PrivatizationReport {
        weak,
        privatized,
        agree: formulations.iter().all(|(_, v)| *v == privatized),
        formulations,
        witness: if privatized { None } else { witness },
    })
}

/// Privatization of the pointed frame with respect to `phi`, by both formulations.
pub fn is_privatized(
    frame: &Frame,
    phi: &DbiFormula,
    max_len: Option<usize>,
) -> Result<PrivatizationReport, PrivatizationError> {
    run_all(frame, phi, false, max_len)
}

/// As [`is_privatized`] without the non-emptiness requirement.
pub fn is_weakly_privatized(
    frame: &Frame,
    phi: &DbiFormula,
    max_len: Option<usize>,
) -> Result<PrivatizationReport, PrivatizationError> {
    run_all(frame, phi, true, max_len)
}

/// A length bound that never changes any privatization verdict on `frame`.
pub fn sound_length_bound(frame: &Frame) -> usize {
    2 * frame.len() * (frame.agents().len() + 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropagationViolation {
    pub sequence: Vec<Agent>,
    pub world: String,
}

/// Checks that every `(x, b)` in a cluster of `M . U` has `b` and `x` in the
/// corresponding clusters of `U` and `M`.
pub fn check_cluster_propagation(
    m: &KripkeModel,
    u: &ActionModel,
    sequences: &[Vec<Agent>],
) -> Result<Option<PropagationViolation>, PrivatizationError> {
    let res = pointed_update(m, u)?;
    let frame = res.model.frame();
    for seq in sequences {
        let upd = cluster(frame, frame.point(), seq)?;
        let cm = cluster(m.frame(), m.point(), seq)?;
        let cu = cluster(u.frame(), u.point(), seq)?;
        for k in upd {
            let (x, beta) = res.pairs[k];
            if !cm.contains(&x) || !cu.contains(&beta) {
                return Ok(Some(PropagationViolation {
                    sequence: seq.clone(),
                    world: frame.name(k).to_string(),
                }));
            }
        }
    }
    Ok(None)
}

/// All agent sequences over `agents` of length at most `max_len`.
pub fn all_sequences(agents: &[Agent], max_len: usize) -> Vec<Vec<Agent>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for a in agents {
                let mut s: Vec<Agent> = seq.clone();
                s.push(a.clone());
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
