//! Finite pointed Kripke models, pointed action models and the static model checker.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::formula::{Agent, Formula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown world or event '{0}'")]
    UnknownWorld(String),
    #[error("unknown agent '{0}'")]
    UnknownAgent(Agent),
    #[error("invalid model: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// A finite pointed frame: named nodes, one accessibility relation per
/// declared agent, and a designated point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    names: Vec<String>,
    index: HashMap<String, usize>,
    agents: Vec<Agent>,
    // succ[agent][node] is sorted and duplicate-free
    succ: Vec<Vec<Vec<usize>>>,
    point: usize,
}

impl Frame {
    /// Builds a frame from already-validated parts.
    ///
    /// Panics if an edge refers to a node or agent index out of range.
    pub fn from_edges(
        names: Vec<String>,
        agents: Vec<Agent>,
        edges: impl IntoIterator<Item = (usize, usize, usize)>,
        point: usize,
    ) -> Frame {
        let mut agents_sorted = agents.clone();
        agents_sorted.sort();
        agents_sorted.dedup();
        let remap: Vec<usize> = agents
            .iter()
            .map(|a| agents_sorted.binary_search(a).expect("agent present"))
            .collect();
        let n = names.len();
        let mut succ = vec![vec![Vec::new(); n]; agents_sorted.len()];
        for (a, from, to) in edges {
            assert!(from < n && to < n, "edge endpoint out of range");
            succ[remap[a]][from].push(to);
        }
        for per_agent in &mut succ {
            for list in per_agent.iter_mut() {
                list.sort_unstable();
                list.dedup();
            }
        }
        assert!(point < n, "point out of range");
        let index = names.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Frame {
            names,
            index,
            agents: agents_sorted,
            succ,
            point,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, node: usize) -> &str {
        &self.names[node]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn point(&self) -> usize {
        self.point
    }

    /// Declared agents, sorted.
    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent_index(&self, agent: &Agent) -> Option<usize> {
        self.agents.binary_search(agent).ok()
    }

    /// Successors of `node` for the agent at position `agent` of [`Frame::agents`].
    pub fn successors(&self, agent: usize, node: usize) -> &[usize] {
        &self.succ[agent][node]
    }

    pub fn successors_of(&self, agent: &Agent, node: usize) -> Result<&[usize], ModelError> {
        let a = self
            .agent_index(agent)
            .ok_or_else(|| ModelError::UnknownAgent(agent.clone()))?;
        Ok(self.successors(a, node))
    }

    /// All edges as `(agent index, from, to)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.succ.iter().enumerate().flat_map(|(a, per)| {
            per.iter()
                .enumerate()
                .flat_map(move |(from, tos)| tos.iter().map(move |&to| (a, from, to)))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().flatten().map(Vec::len).sum()
    }

    pub fn with_point(&self, point: usize) -> Frame {
        assert!(point < self.len(), "point out of range");
        Frame {
            point,
            ..self.clone()
        }
    }

    /// Nodes reachable from the point along any relation.
    pub fn reachable(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([self.point]);
        let mut stack = vec![self.point];
        while let Some(n) = stack.pop() {
            for per in &self.succ {
                for &m in &per[n] {
                    if seen.insert(m) {
                        stack.push(m);
                    }
                }
            }
        }
        seen
    }

    pub fn is_serial(&self) -> bool {
        self.succ.iter().all(|per| per.iter().all(|s| !s.is_empty()))
    }

    pub fn is_transitive(&self) -> bool {
        self.succ.iter().all(|per| {
            per.iter().all(|s| {
                s.iter()
                    .all(|&u| per[u].iter().all(|w| s.binary_search(w).is_ok()))
            })
        })
    }

    pub fn is_euclidean(&self) -> bool {
        self.succ.iter().all(|per| {
            per.iter()
                .all(|s| s.iter().all(|&u| s.iter().all(|w| per[u].binary_search(w).is_ok())))
        })
    }
}

/// A pointed Kripke model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeModel {
    frame: Frame,
    valuation: Vec<BTreeSet<String>>,
}

/// A pointed action model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionModel {
    frame: Frame,
    pre: Vec<Formula>,
}

impl KripkeModel {
    /// `valuation[w]` is the set of atoms true at world `w`.
    pub fn from_parts(frame: Frame, valuation: Vec<BTreeSet<String>>) -> KripkeModel {
        assert_eq!(frame.len(), valuation.len());
        KripkeModel { frame, valuation }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    pub fn point(&self) -> usize {
        self.frame.point
    }

    pub fn atoms_at(&self, world: usize) -> &BTreeSet<String> {
        &self.valuation[world]
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        self.valuation.iter().flatten().cloned().collect()
    }

    pub fn with_point(&self, point: usize) -> KripkeModel {
        KripkeModel {
            frame: self.frame.with_point(point),
            valuation: self.valuation.clone(),
        }
    }

    pub fn world(&self, name: &str) -> Result<usize, ModelError> {
        self.frame
            .index_of(name)
            .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
    }

    /// Checks that every agent of `f` is declared here.
    pub fn check_agents(&self, f: &Formula) -> Result<(), ModelError> {
        match f.agents().into_iter().find(|a| self.frame.agent_index(a).is_none()) {
            Some(a) => Err(ModelError::UnknownAgent(a)),
            None => Ok(()),
        }
    }

    /// Truth of `f` at `world`.
    pub fn check(&self, world: usize, f: &Formula) -> Result<bool, ModelError> {
        if world >= self.len() {
            return Err(ModelError::UnknownWorld(world.to_string()));
        }
        self.check_agents(f)?;
        Ok(self.eval(world, f))
    }

    fn eval(&self, w: usize, f: &Formula) -> bool {
        match f {
            Formula::Atom(p) => self.valuation[w].contains(p),
            Formula::Top => true,
            Formula::Bot => false,
            Formula::Not(g) => !self.eval(w, g),
            Formula::And(l, r) => self.eval(w, l) && self.eval(w, r),
            Formula::Or(l, r) => self.eval(w, l) || self.eval(w, r),
            Formula::Implies(l, r) => !self.eval(w, l) || self.eval(w, r),
            Formula::Believes(a, g) => {
                let a = self.frame.agent_index(a).expect("agents checked");
                self.frame.successors(a, w).iter().all(|&u| self.eval(u, g))
            }
            Formula::Possible(a, g) => {
                let a = self.frame.agent_index(a).expect("agents checked");
                self.frame.successors(a, w).iter().any(|&u| self.eval(u, g))
            }
        }
    }

    /// The set of worlds where `f` holds, computed bottom-up over the whole model.
    pub fn truth_set(&self, f: &Formula) -> Result<Vec<bool>, ModelError> {
        self.check_agents(f)?;
        Ok(self.extension(f))
    }

    fn extension(&self, f: &Formula) -> Vec<bool> {
        let n = self.len();
        match f {
            Formula::Atom(p) => self.valuation.iter().map(|v| v.contains(p)).collect(),
            Formula::Top => vec![true; n],
            Formula::Bot => vec![false; n],
            Formula::Not(g) => self.extension(g).into_iter().map(|b| !b).collect(),
            Formula::And(l, r) => zip_with(self.extension(l), self.extension(r), |a, b| a && b),
            Formula::Or(l, r) => zip_with(self.extension(l), self.extension(r), |a, b| a || b),
            Formula::Implies(l, r) => {
                zip_with(self.extension(l), self.extension(r), |a, b| !a || b)
            }
            Formula::Believes(a, g) | Formula::Possible(a, g) => {
                let a = self.frame.agent_index(a).expect("agents checked");
                let inner = self.extension(g);
                let universal = matches!(f, Formula::Believes(..));
                (0..n)
                    .map(|w| {
                        let succ = self.frame.successors(a, w);
                        if universal {
                            succ.iter().all(|&u| inner[u])
                        } else {
                            succ.iter().any(|&u| inner[u])
                        }
                    })
                    .collect()
            }
        }
    }
}

fn zip_with(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

impl ActionModel {
    pub fn from_parts(frame: Frame, pre: Vec<Formula>) -> ActionModel {
        assert_eq!(frame.len(), pre.len());
        ActionModel { frame, pre }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    pub fn point(&self) -> usize {
        self.frame.point
    }

    pub fn pre(&self, event: usize) -> &Formula {
        &self.pre[event]
    }

    pub fn preconditions(&self) -> &[Formula] {
        &self.pre
    }

    pub fn event(&self, name: &str) -> Result<usize, ModelError> {
        self.frame
            .index_of(name)
            .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
    }

    pub fn with_point(&self, point: usize) -> ActionModel {
        ActionModel {
            frame: self.frame.with_point(point),
            pre: self.pre.clone(),
        }
    }
}

/// Truth of `f` at the named world.
pub fn model_check(m: &KripkeModel, world: &str, f: &Formula) -> Result<bool, ModelError> {
    m.check(m.world(world)?, f)
}

/// Truth of `B_{i1} ... B_{ik} bot` at the named world.
pub fn believes_bottom(m: &KripkeModel, world: &str, agents: &[Agent]) -> Result<bool, ModelError> {
    model_check(m, world, &Formula::belief_chain(agents, Formula::Bot))
}

/// Unvalidated description of a pointed Kripke model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KripkeSpec {
    pub agents: Vec<Agent>,
    pub worlds: Vec<(String, BTreeSet<String>)>,
    pub relations: Vec<(Agent, String, String)>,
    pub point: String,
}

/// Unvalidated description of a pointed action model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ActionSpec {
    pub agents: Vec<Agent>,
    pub events: Vec<(String, Option<Formula>)>,
    pub relations: Vec<(Agent, String, String)>,
    pub point: String,
}

fn frame_violations<'a>(
    agents: &[Agent],
    ids: impl Iterator<Item = &'a String>,
    relations: &[(Agent, String, String)],
    point: &str,
) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen_agents = BTreeSet::new();
    for a in agents {
        if !seen_agents.insert(a) {
            out.push(format!("duplicate agent '{a}'"));
        }
    }
    let mut domain = BTreeSet::new();
    for id in ids {
        if !domain.insert(id.as_str()) {
            out.push(format!("duplicate id '{id}'"));
        }
    }
    if domain.is_empty() {
        out.push("empty domain".to_string());
    }
    if !domain.contains(point) {
        out.push(format!("point not in domain: '{point}'"));
    }
    for (a, from, to) in relations {
        if !seen_agents.contains(a) {
            out.push(format!("relation for undeclared agent '{a}'"));
        }
        for end in [from, to] {
            if !domain.contains(end.as_str()) {
                out.push(format!("relation endpoint not in domain: '{end}'"));
            }
        }
    }
    out
}

fn build_frame(
    agents: &[Agent],
    ids: Vec<String>,
    relations: &[(Agent, String, String)],
    point: &str,
) -> Frame {
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let agent_pos: BTreeMap<&Agent, usize> = agents.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let edges: Vec<(usize, usize, usize)> = relations
        .iter()
        .map(|(a, f, t)| (agent_pos[a], index[f.as_str()], index[t.as_str()]))
        .collect();
    let point = index[point];
    Frame::from_edges(ids, agents.to_vec(), edges, point)
}

impl KripkeSpec {
    /// Every invariant violation; empty iff [`KripkeSpec::build`] succeeds.
    pub fn validate(&self) -> Vec<String> {
        frame_violations(
            &self.agents,
            self.worlds.iter().map(|(id, _)| id),
            &self.relations,
            &self.point,
        )
    }

    pub fn build(&self) -> Result<KripkeModel, ModelError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let ids = self.worlds.iter().map(|(id, _)| id.clone()).collect();
        let frame = build_frame(&self.agents, ids, &self.relations, &self.point);
        let valuation = self.worlds.iter().map(|(_, v)| v.clone()).collect();
        Ok(KripkeModel::from_parts(frame, valuation))
    }
}

impl ActionSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut out = frame_violations(
            &self.agents,
            self.events.iter().map(|(id, _)| id),
            &self.relations,
            &self.point,
        );
        if self.events.iter().any(|(_, pre)| pre.is_none()) {
            out.push("pre not total".to_string());
        }
        let declared: BTreeSet<&Agent> = self.agents.iter().collect();
        for (id, pre) in &self.events {
            if let Some(pre) = pre {
                for a in pre.agents() {
                    if !declared.contains(&a) {
                        out.push(format!("precondition of '{id}' mentions undeclared agent '{a}'"));
                    }
                }
            }
        }
        out
    }

    pub fn build(&self) -> Result<ActionModel, ModelError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let ids = self.events.iter().map(|(id, _)| id.clone()).collect();
        let frame = build_frame(&self.agents, ids, &self.relations, &self.point);
        let pre = self
            .events
            .iter()
            .map(|(_, p)| p.clone().expect("validated"))
            .collect();
        Ok(ActionModel::from_parts(frame, pre))
    }
}

impl KripkeModel {
    pub fn to_spec(&self) -> KripkeSpec {
        KripkeSpec {
            agents: self.frame.agents.clone(),
            worlds: (0..self.len())
                .map(|w| (self.frame.names[w].clone(), self.valuation[w].clone()))
                .collect(),
            relations: spec_relations(&self.frame),
            point: self.frame.names[self.frame.point].clone(),
        }
    }
}

impl ActionModel {
    pub fn to_spec(&self) -> ActionSpec {
        ActionSpec {
            agents: self.frame.agents.clone(),
            events: (0..self.len())
                .map(|e| (self.frame.names[e].clone(), Some(self.pre[e].clone())))
                .collect(),
            relations: spec_relations(&self.frame),
            point: self.frame.names[self.frame.point].clone(),
        }
    }
}

fn spec_relations(frame: &Frame) -> Vec<(Agent, String, String)> {
    frame
        .edges()
        .map(|(a, f, t)| (frame.agents[a].clone(), frame.names[f].clone(), frame.names[t].clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::formula::parse;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    #[test]
    fn blt_initial_answers() {
        let m = fixtures::blt_initial();
        assert!(!model_check(&m, "v", &f("p")).unwrap());
        assert!(model_check(&m, "u", &f("p")).unwrap());
        assert!(model_check(&m, "v", &Formula::Top).unwrap());
        assert!(model_check(&m, "v", &f("~B b p & ~B b ~p")).unwrap());
    }

    #[test]
    fn belief_in_bottom() {
        let m = fixtures::blt_initial();
        let b = Agent::from("b");
        assert!(!believes_bottom(&m, "v", std::slice::from_ref(&b)).unwrap());
        assert!(!believes_bottom(&m, "u", &[b.clone(), Agent::from("l"), b.clone()]).unwrap());

        let lonely = KripkeSpec {
            agents: vec![Agent::from("i")],
            worlds: vec![("w".into(), BTreeSet::new())],
            relations: vec![],
            point: "w".into(),
        }
        .build()
        .unwrap();
        assert!(believes_bottom(&lonely, "w", &[Agent::from("i")]).unwrap());
        assert!(model_check(&lonely, "w", &f("B i bot")).unwrap());
    }

    #[test]
    fn checker_errors() {
        let m = fixtures::blt_initial();
        assert_eq!(
            model_check(&m, "nowhere", &f("p")),
            Err(ModelError::UnknownWorld("nowhere".into()))
        );
        assert_eq!(
            model_check(&m, "v", &f("B z p")),
            Err(ModelError::UnknownAgent(Agent::from("z")))
        );
    }

    #[test]
    fn validation_reports() {
        assert!(fixtures::blt_initial().to_spec().validate().is_empty());
        let mut bad = fixtures::blt_initial().to_spec();
        bad.point = "elsewhere".into();
        assert_eq!(bad.validate(), vec!["point not in domain: 'elsewhere'".to_string()]);
        assert!(matches!(bad.build(), Err(ModelError::Invalid(_))));

        let mut act = fixtures::priv_msg_u().to_spec();
        act.events[1].1 = None;
        assert_eq!(act.validate(), vec!["pre not total".to_string()]);

        let mut edges = fixtures::blt_initial().to_spec();
        edges.relations.push((Agent::from("q"), "u".into(), "nope".into()));
        edges.worlds.push(("u".into(), BTreeSet::new()));
        let v = edges.validate();
        assert!(v.contains(&"duplicate id 'u'".to_string()));
        assert!(v.contains(&"relation for undeclared agent 'q'".to_string()));
        assert!(v.contains(&"relation endpoint not in domain: 'nope'".to_string()));

        let empty = KripkeSpec::default();
        assert!(empty.validate().contains(&"empty domain".to_string()));
    }

    #[test]
    fn frame_predicates() {
        let m = fixtures::blt_initial();
        assert!(m.frame().is_serial());
        assert!(m.frame().is_transitive());
        assert!(m.frame().is_euclidean());
        let u = fixtures::priv_msg_u();
        assert!(u.frame().is_serial());
        assert!(u.frame().is_transitive() && u.frame().is_euclidean());
        let lonely = Frame::from_edges(vec!["x".into(), "y".into()], vec![Agent::from("i")], [(0, 0, 1)], 0);
        assert!(!lonely.is_serial());
        assert!(lonely.is_transitive());
        assert!(!lonely.is_euclidean());
    }

    #[test]
    fn truth_set_matches_pointwise_evaluation() {
        let m = fixtures::blt_initial();
        for s in ["B b p", "~B l ~p", "B b (B t p & B l B t p & B l p)", "p -> B t p | q"] {
            let g = f(s);
            let set = m.truth_set(&g).unwrap();
            for (w, &expect) in set.iter().enumerate() {
                assert_eq!(m.check(w, &g).unwrap(), expect, "{s} at {w}");
            }
        }
    }
}
