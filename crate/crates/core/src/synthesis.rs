//! Synthesis of a pointed action model `U_phi` from a DBI normal goal.
//!
//! Events are integers: `0` is the actual event (the root), `-1` the
//! status-quo sink, and `1, 2, ...` are the fresh events, one per belief
//! operator of the goal. Fresh events are numbered in post-order, with the
//! right conjunct of a conjunction built before the left one, so that the
//! brothers' goal `B b (B t p & B l (p & B t p))` numbers its operators
//! `B_b = 4`, `B_t = 3`, `B_l = 2` and the innermost `B_t = 1`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::bisim::isomorphic_pointed;
use crate::formula::{Agent, DbiFormula, Formula, Goal};
use crate::model::{ActionModel, Frame, KripkeModel};
use crate::update::{pointed_update, UpdateError};

pub const ROOT: i64 = 0;
pub const SINK: i64 = -1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("goal is not in DBI normal form: {0}")]
    NotNormal(Formula),
    #[error("goal mentions undeclared agent '{0}'")]
    UnknownAgent(Agent),
    #[error("both conjuncts give the root a non-sink successor for agent '{0}'")]
    RootCollision(Agent),
    #[error("no event {0}")]
    UnknownEvent(i64),
    #[error("event {event} has {count} successors for agent '{agent}'")]
    NotDeterministic { event: i64, agent: Agent, count: usize },
}

/// The D-part of a synthesized model: fresh events plus the root's successors.
#[derive(Default)]
struct Part {
    // (id, precondition, introducing subformula)
    events: Vec<(i64, Formula, Formula)>,
    // successor per (event, agent index); missing entries go to the sink
    succ: BTreeMap<(i64, usize), i64>,
}

impl Part {
    fn root_successor(&self, agent: usize) -> i64 {
        self.succ.get(&(ROOT, agent)).copied().unwrap_or(SINK)
    }
}

struct Builder<'a> {
    agents: &'a [Agent],
    next: i64,
}

impl Builder<'_> {
    fn agent_index(&self, a: &Agent) -> Result<usize, SynthesisError> {
        self.agents
            .binary_search(a)
            .map_err(|_| SynthesisError::UnknownAgent(a.clone()))
    }

    /// Cases 1-3: `B_i xi`, `B_i psi` and `B_i (xi & psi)`.
    fn goal(&mut self, g: &Goal) -> Result<Part, SynthesisError> {
        let i = self.agent_index(&g.agent)?;
        let mut part = if g.inner.is_empty() { Part::default() } else { self.conjunction(&g.inner)? };
        let m = self.next;
        self.next += 1;
        for j in 0..self.agents.len() {
            let target = if j == i { m } else { part.root_successor(j) };
            part.succ.insert((m, j), target);
            part.succ.remove(&(ROOT, j));
        }
        part.succ.insert((ROOT, i), m);
        let pre = g.prop.clone().unwrap_or(Formula::Top);
        part.events.push((m, pre, g.to_formula()));
        Ok(part)
    }

    /// Case 4: the D-parts side by side, sharing root and sink.
    fn conjunction(&mut self, goals: &[Goal]) -> Result<Part, SynthesisError> {
        let mut out = Part::default();
        for g in goals.iter().rev() {
            let part = self.goal(g)?;
            for (&(e, j), &t) in &part.succ {
                if e == ROOT && out.succ.contains_key(&(ROOT, j)) {
                    return Err(SynthesisError::RootCollision(self.agents[j].clone()));
                }
                out.succ.insert((e, j), t);
            }
            out.events.extend(part.events);
        }
        Ok(out)
    }
}

/// A synthesized action model with its event metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesizedModel {
    action: ActionModel,
    ids: Vec<i64>,
    source: Formula,
    event_formulas: BTreeMap<i64, Formula>,
}

/// Builds `U_phi` for a DBI normal goal over the declared agents.
pub fn synthesize(phi: &DbiFormula, agents: &[Agent]) -> Result<SynthesizedModel, SynthesisError> {
    if !phi.is_normal() {
        return Err(SynthesisError::NotNormal(phi.formula().clone()));
    }
    let mut agents = agents.to_vec();
    agents.sort();
    agents.dedup();
    let mut builder = Builder { agents: &agents, next: 1 };
    let part = builder.conjunction(phi.goals())?;

    let mut events = part.events;
    events.sort_by_key(|e| std::cmp::Reverse(e.0));
    let mut ids = vec![ROOT];
    ids.extend(events.iter().map(|e| e.0));
    ids.push(SINK);
    let index: BTreeMap<i64, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();

    let mut edges = Vec::new();
    for &id in &ids {
        for j in 0..agents.len() {
            let target = if id == SINK { SINK } else { part.succ.get(&(id, j)).copied().unwrap_or(SINK) };
            edges.push((j, index[&id], index[&target]));
        }
    }
    let mut pre = vec![Formula::Top];
    pre.extend(events.iter().map(|e| e.1.clone()));
    pre.push(Formula::Top);
    let names = ids.iter().map(i64::to_string).collect();
    let frame = Frame::from_edges(names, agents.clone(), edges, 0);
    Ok(SynthesizedModel {
        action: ActionModel::from_parts(frame, pre),
        event_formulas: events.into_iter().map(|(id, _, f)| (id, f)).collect(),
        ids,
        source: phi.formula().clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SequenceWitness {
    pub sequence: Vec<Agent>,
    pub events: Vec<i64>,
    /// First event on the sequence whose precondition is not `top`.
    pub non_top: Option<(i64, String)>,
}

/// Whether a formula is in top-shape with respect to the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TopShapeReport {
    pub formula: String,
    pub independent: bool,
    pub witnesses: Vec<SequenceWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdempotenceReport {
    pub idempotent: bool,
    /// World of the single update mapped to the world of the double update.
    pub mapping: Option<Vec<(String, String)>>,
    /// Every world `((w, a), b)` of the double update has `b = a`.
    pub projection_holds: bool,
    pub sizes: (usize, usize),
}

impl SynthesizedModel {
    /// Reattaches synthesis metadata to an action model whose events are
    /// named by integers, e.g. one loaded from a document.
    pub fn from_action(
        action: ActionModel,
        source: Formula,
        event_formulas: BTreeMap<i64, Formula>,
    ) -> Result<SynthesizedModel, String> {
        let ids = action
            .frame()
            .names()
            .iter()
            .map(|n| n.parse::<i64>().map_err(|_| format!("event id '{n}' is not an integer")))
            .collect::<Result<Vec<_>, _>>()?;
        let out = SynthesizedModel {
            action,
            ids,
            source,
            event_formulas,
        };
        if out.index_of(ROOT).is_err() || out.index_of(SINK).is_err() {
            return Err("events 0 and -1 are required".into());
        }
        if out.action.point() != out.index_of(ROOT).expect("checked") {
            return Err("point must be event 0".into());
        }
        if let Some(id) = out.event_formulas.keys().find(|id| out.index_of(**id).is_err()) {
            return Err(format!("event formula for unknown event {id}"));
        }
        Ok(out)
    }

    pub fn action(&self) -> &ActionModel {
        &self.action
    }

    pub fn into_action(self) -> ActionModel {
        self.action
    }

    /// Integer id of each event in index order. Freshly synthesized models list
    /// the root, then fresh events descending, then the sink.
    pub fn event_ids(&self) -> &[i64] {
        &self.ids
    }

    pub fn root(&self) -> i64 {
        ROOT
    }

    pub fn sink(&self) -> i64 {
        SINK
    }

    pub fn dbi_events(&self) -> BTreeSet<i64> {
        self.event_formulas.keys().copied().collect()
    }

    pub fn source(&self) -> &Formula {
        &self.source
    }

    /// The belief subformula that introduced each fresh event.
    pub fn event_formulas(&self) -> &BTreeMap<i64, Formula> {
        &self.event_formulas
    }

    pub fn index_of(&self, id: i64) -> Result<usize, SynthesisError> {
        self.ids
            .iter()
            .position(|&e| e == id)
            .ok_or(SynthesisError::UnknownEvent(id))
    }

    pub fn id_of(&self, index: usize) -> i64 {
        self.ids[index]
    }

    pub fn pre(&self, id: i64) -> Result<&Formula, SynthesisError> {
        Ok(self.action.pre(self.index_of(id)?))
    }

    /// The unique `agent`-successor of event `id`.
    pub fn successor(&self, id: i64, agent: &Agent) -> Result<i64, SynthesisError> {
        let e = self.index_of(id)?;
        let frame = self.action.frame();
        let a = frame
            .agent_index(agent)
            .ok_or_else(|| SynthesisError::UnknownAgent(agent.clone()))?;
        match frame.successors(a, e) {
            [only] => Ok(self.ids[*only]),
            other => Err(SynthesisError::NotDeterministic {
                event: id,
                agent: agent.clone(),
                count: other.len(),
            }),
        }
    }

    /// The events visited from the root along `seq`.
    pub fn event_sequence_for(&self, seq: &[Agent]) -> Result<Vec<i64>, SynthesisError> {
        let mut cur = ROOT;
        seq.iter()
            .map(|a| {
                cur = self.successor(cur, a)?;
                Ok(cur)
            })
            .collect()
    }

    /// `B^_{i1} (pre(a1) & B^_{i2} (pre(a2) & ... B^_{ik} pre(ak)))` for the
    /// events `a1 ... ak` reached from the root along `seq`.
    pub fn consistency_formula(&self, seq: &[Agent]) -> Result<Formula, SynthesisError> {
        let events = self.event_sequence_for(seq)?;
        let mut f: Option<Formula> = None;
        for (agent, &e) in seq.iter().zip(&events).rev() {
            let pre = self.pre(e)?.clone();
            let body = match f {
                None => pre,
                Some(inner) => Formula::and(pre, inner),
            };
            f = Some(Formula::possible(agent.clone(), body));
        }
        Ok(f.unwrap_or(Formula::Top))
    }

    /// Structural invariants of a synthesized model; empty when all hold.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        let frame = self.action.frame();
        let (Ok(root), Ok(sink)) = (self.index_of(ROOT), self.index_of(SINK)) else {
            out.push("root or sink missing".to_string());
            return out;
        };
        if frame.point() != root {
            out.push("point is not the root".into());
        }
        for (a, agent) in frame.agents().iter().enumerate() {
            for e in 0..frame.len() {
                let succ = frame.successors(a, e);
                if succ.len() != 1 {
                    out.push(format!("event {} has {} {agent}-successors", self.ids[e], succ.len()));
                }
                if succ.contains(&root) {
                    out.push(format!("event {} has a {agent}-edge into the root", self.ids[e]));
                }
            }
            if frame.successors(a, sink) != [sink] {
                out.push(format!("sink has a non-loop {agent}-edge"));
            }
        }
        for id in [ROOT, SINK] {
            if self.action.pre(self.index_of(id).expect("present")) != &Formula::Top {
                out.push(format!("pre({id}) is not top"));
            }
        }
        for (e, pre) in self.action.preconditions().iter().enumerate() {
            if !pre.is_propositional() {
                out.push(format!("pre({}) is not propositional", self.ids[e]));
            }
        }
        let expected = self.event_formulas.len() + 2;
        if frame.len() != expected {
            out.push(format!("{} events, expected {expected}", frame.len()));
        }
        // fresh events form an out-tree: each has exactly one parent among root and fresh events
        for e in (0..frame.len()).filter(|&e| e != root && e != sink) {
            let parents = (0..frame.len())
                .filter(|&x| x != e && x != sink)
                .filter(|&x| (0..frame.agents().len()).any(|a| frame.successors(a, x).contains(&e)))
                .count();
            if parents != 1 {
                out.push(format!("event {} has {parents} parents", self.ids[e]));
            }
        }
        out
    }
}

/// Top-shape analysis of `theta` against the root of `u`.
pub fn analyze_independence(theta: &Formula, u: &SynthesizedModel) -> Result<TopShapeReport, SynthesisError> {
    let mut witnesses = Vec::new();
    for seq in theta.modal_sequences() {
        let events = u.event_sequence_for(&seq)?;
        let mut non_top = None;
        for &e in std::iter::once(&ROOT).chain(&events) {
            let pre = u.pre(e)?;
            if pre != &Formula::Top {
                non_top = Some((e, pre.to_string()));
                break;
            }
        }
        witnesses.push(SequenceWitness {
            sequence: seq,
            events,
            non_top,
        });
    }
    Ok(TopShapeReport {
        formula: theta.to_string(),
        independent: witnesses.iter().all(|w| w.non_top.is_none()),
        witnesses,
    })
}

/// Compares `M . U` with `(M . U) . U` by pointed isomorphism.
pub fn verify_idempotent(u: &ActionModel, m: &KripkeModel) -> Result<IdempotenceReport, UpdateError> {
    let once = pointed_update(m, u)?;
    let twice = pointed_update(&once.model, u)?;
    let projection_holds = twice.pairs.iter().all(|&(k, beta)| once.pairs[k].1 == beta);
    let iso = isomorphic_pointed(&once.model, once.model.point(), &twice.model, twice.model.point())
        .expect("same agents and valid points");
    let (f1, f2) = (once.model.frame(), twice.model.frame());
    Ok(IdempotenceReport {
        idempotent: iso.is_some(),
        mapping: iso.map(|map| {
            map.iter()
                .enumerate()
                .map(|(x, &y)| (f1.name(x).to_string(), f2.name(y).to_string()))
                .collect()
        }),
        projection_holds,
        sizes: (once.model.len(), twice.model.len()),
    })
}
