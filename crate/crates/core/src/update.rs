//! Product update, pointed update and the dynamic modality.
//!
//! Worlds of an updated model are `(world, event)` pairs named `"w@e"`, so
//! repeated updates produce names such as `"v@0@0"`.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::formula::Formula;
use crate::model::{ActionModel, Frame, KripkeModel, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UpdateError {
    #[error("update undefined: no world satisfies any precondition")]
    Undefined,
    #[error("precondition of actual event fails at actual world")]
    PreconditionFails,
    #[error("model agents {model:?} differ from action-model agents {action:?}")]
    AgentMismatch { model: Vec<String>, action: Vec<String> },
    #[error("unknown update operator '{0}' (known: product, pointed)")]
    UnknownOperator(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UpdateStats {
    /// Pairs `(w, e)` whose precondition holds.
    pub candidate_pairs: usize,
    /// Pairs kept in the result.
    pub kept_pairs: usize,
}

/// Whether the pair of points survived the update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointStatus {
    Defined,
    /// The product is defined but `(point, actual event)` failed its
    /// precondition; the model's point is then an arbitrary world.
    Undefined,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateResult {
    pub model: KripkeModel,
    /// `pairs[k]` is the `(world, event)` that world `k` of `model` came from.
    pub pairs: Vec<(usize, usize)>,
    pub point_status: PointStatus,
    pub stats: UpdateStats,
}

impl UpdateResult {
    pub fn world_of(&self, world: usize, event: usize) -> Option<usize> {
        self.pairs.iter().position(|&p| p == (world, event))
    }
}

/// An update operator selectable by name.
pub trait UpdateOperator: Send + Sync {
    fn name(&self) -> &'static str;
    fn apply(&self, m: &KripkeModel, u: &ActionModel) -> Result<UpdateResult, UpdateError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ProductUpdate;

#[derive(Clone, Copy, Debug, Default)]
pub struct PointedUpdate;

impl UpdateOperator for ProductUpdate {
    fn name(&self) -> &'static str {
        "product"
    }

    fn apply(&self, m: &KripkeModel, u: &ActionModel) -> Result<UpdateResult, UpdateError> {
        product_update(m, u)
    }
}

impl UpdateOperator for PointedUpdate {
    fn name(&self) -> &'static str {
        "pointed"
    }

    fn apply(&self, m: &KripkeModel, u: &ActionModel) -> Result<UpdateResult, UpdateError> {
        pointed_update(m, u)
    }
}

pub const OPERATOR_NAMES: &[&str] = &["product", "pointed"];

pub fn operator_by_name(name: &str) -> Result<Box<dyn UpdateOperator>, UpdateError> {
    match name {
        "product" => Ok(Box::new(ProductUpdate)),
        "pointed" => Ok(Box::new(PointedUpdate)),
        _ => Err(UpdateError::UnknownOperator(name.to_string())),
    }
}

fn check_agents(m: &KripkeModel, u: &ActionModel) -> Result<(), UpdateError> {
    if m.frame().agents() != u.frame().agents() {
        let names = |f: &Frame| f.agents().iter().map(|a| a.to_string()).collect();
        return Err(UpdateError::AgentMismatch {
            model: names(m.frame()),
            action: names(u.frame()),
        });
    }
    Ok(())
}

/// `table[e][w]` says whether `pre(e)` holds at `w`; each precondition is
/// evaluated once over the whole model.
fn precondition_table(m: &KripkeModel, u: &ActionModel) -> Result<Vec<Vec<bool>>, UpdateError> {
    u.preconditions()
        .iter()
        .map(|pre| m.truth_set(pre).map_err(UpdateError::from))
        .collect()
}

fn assemble(
    m: &KripkeModel,
    u: &ActionModel,
    mut kept: Vec<(usize, usize)>,
    point: Option<(usize, usize)>,
    candidate_pairs: usize,
) -> UpdateResult {
    kept.sort_unstable();
    let index: HashMap<(usize, usize), usize> = kept.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let (mf, uf) = (m.frame(), u.frame());
    let mut edges = Vec::new();
    for (k, &(v, beta)) in kept.iter().enumerate() {
        for a in 0..mf.agents().len() {
            for &w in mf.successors(a, v) {
                for &gamma in uf.successors(a, beta) {
                    if let Some(&j) = index.get(&(w, gamma)) {
                        edges.push((a, k, j));
                    }
                }
            }
        }
    }
    let names = kept
        .iter()
        .map(|&(v, e)| format!("{}@{}", mf.name(v), uf.name(e)))
        .collect();
    let (point_idx, status) = match point.and_then(|p| index.get(&p)) {
        Some(&k) => (k, PointStatus::Defined),
        None => (0, PointStatus::Undefined),
    };
    let frame = Frame::from_edges(names, mf.agents().to_vec(), edges, point_idx);
    let valuation = kept.iter().map(|&(v, _)| m.atoms_at(v).clone()).collect();
    UpdateResult {
        model: KripkeModel::from_parts(frame, valuation),
        stats: UpdateStats {
            candidate_pairs,
            kept_pairs: kept.len(),
        },
        pairs: kept,
        point_status: status,
    }
}

/// The restricted modal product `M x U`: every pair whose precondition holds.
pub fn product_update(m: &KripkeModel, u: &ActionModel) -> Result<UpdateResult, UpdateError> {
    check_agents(m, u)?;
    let table = precondition_table(m, u)?;
    let kept: Vec<(usize, usize)> = (0..m.len())
        .flat_map(|w| (0..u.len()).map(move |e| (w, e)))
        .filter(|&(w, e)| table[e][w])
        .collect();
    if kept.is_empty() {
        return Err(UpdateError::Undefined);
    }
    let n = kept.len();
    Ok(assemble(m, u, kept, Some((m.point(), u.point())), n))
}

/// The pointed update: only pairs reachable from `(point, actual event)` through
/// pairs that satisfy their preconditions.
pub fn pointed_update(m: &KripkeModel, u: &ActionModel) -> Result<UpdateResult, UpdateError> {
    check_agents(m, u)?;
    let table = precondition_table(m, u)?;
    let start = (m.point(), u.point());
    if !table[start.1][start.0] {
        return Err(UpdateError::PreconditionFails);
    }
    let candidates = table.iter().flatten().filter(|&&b| b).count();
    let (mf, uf) = (m.frame(), u.frame());
    let mut seen = vec![vec![false; u.len()]; m.len()];
    seen[start.0][start.1] = true;
    let mut kept = vec![start];
    let mut queue = VecDeque::from([start]);
    while let Some((v, beta)) = queue.pop_front() {
        for a in 0..mf.agents().len() {
            for &w in mf.successors(a, v) {
                for &gamma in uf.successors(a, beta) {
                    if table[gamma][w] && !seen[w][gamma] {
                        seen[w][gamma] = true;
                        kept.push((w, gamma));
                        queue.push_back((w, gamma));
                    }
                }
            }
        }
    }
    Ok(assemble(m, u, kept, Some(start), candidates))
}

/// `M, w |= [U, alpha] phi`: true when `(w, alpha)` fails its precondition,
/// otherwise truth of `phi` at `(w, alpha)` in the product.
pub fn dynamic_check(
    m: &KripkeModel,
    world: usize,
    u: &ActionModel,
    event: usize,
    phi: &Formula,
) -> Result<bool, UpdateError> {
    check_agents(m, u)?;
    m.check_agents(phi)?;
    if !m.check(world, u.pre(event))? {
        return Ok(true);
    }
    let product = product_update(m, u)?;
    let k = product.world_of(world, event).expect("pair satisfies its precondition");
    Ok(product.model.check(k, phi)?)
}

/// World counts after each of `k` successive updates with the same action model.
pub fn blowup_series(
    m: &KripkeModel,
    u: &ActionModel,
    k: usize,
    op: &dyn UpdateOperator,
) -> Result<Vec<usize>, UpdateError> {
    let mut current = m.clone();
    let mut counts = Vec::with_capacity(k);
    for _ in 0..k {
        current = op.apply(&current, u)?.model;
        counts.push(current.len());
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::formula::parse;
    use crate::model::ActionSpec;

    #[test]
    fn private_message_product_and_pointed() {
        let m = fixtures::two_agent_m();
        let u = fixtures::priv_msg_u();
        let prod = product_update(&m, &u).unwrap();
        assert_eq!(prod.model.len(), 3);
        assert_eq!(prod.point_status, PointStatus::Defined);
        assert_eq!(prod.model.frame().name(prod.model.point()), "x@m");
        let pointed = pointed_update(&m, &u).unwrap();
        assert_eq!(pointed.model, prod.model);
        assert_eq!(pointed.stats, UpdateStats { candidate_pairs: 3, kept_pairs: 3 });
    }

    #[test]
    fn series_for_both_operators() {
        let m = fixtures::two_agent_m();
        let u = fixtures::priv_msg_u();
        assert_eq!(blowup_series(&m, &u, 3, &ProductUpdate).unwrap(), vec![3, 5, 9]);
        assert_eq!(blowup_series(&m, &u, 5, &PointedUpdate).unwrap(), vec![3; 5]);
        let counts = blowup_series(&m, &u, 6, &ProductUpdate).unwrap();
        for pair in counts.windows(2) {
            assert_eq!(pair[1], 2 * pair[0] - 1);
        }
    }

    #[test]
    fn identity_action_keeps_size() {
        let m = fixtures::blt_initial();
        let skip = ActionSpec {
            agents: m.frame().agents().to_vec(),
            events: vec![("skip".into(), Some(Formula::Top))],
            relations: m
                .frame()
                .agents()
                .iter()
                .map(|a| (a.clone(), "skip".into(), "skip".into()))
                .collect(),
            point: "skip".into(),
        }
        .build()
        .unwrap();
        for name in OPERATOR_NAMES {
            let op = operator_by_name(name).unwrap();
            assert_eq!(blowup_series(&m, &skip, 4, op.as_ref()).unwrap(), vec![2; 4]);
        }
    }

    #[test]
    fn undefined_and_failing_updates() {
        let m = fixtures::two_agent_m();
        let mut spec = fixtures::priv_msg_u().to_spec();
        for e in &mut spec.events {
            e.1 = Some(Formula::Bot);
        }
        let never = spec.build().unwrap();
        assert_eq!(product_update(&m, &never), Err(UpdateError::Undefined));
        assert_eq!(pointed_update(&m, &never), Err(UpdateError::PreconditionFails));

        let at_y = m.with_point(m.world("y").unwrap());
        assert_eq!(
            pointed_update(&at_y, &fixtures::priv_msg_u()),
            Err(UpdateError::PreconditionFails)
        );
        let prod = product_update(&at_y, &fixtures::priv_msg_u()).unwrap();
        assert_eq!(prod.point_status, PointStatus::Undefined);
        assert_eq!(prod.model.len(), 3);

        assert!(matches!(
            pointed_update(&fixtures::blt_initial(), &fixtures::priv_msg_u()),
            Err(UpdateError::AgentMismatch { .. })
        ));
        assert!(operator_by_name("arrow").is_err());
    }

    #[test]
    fn dynamic_modality() {
        let m = fixtures::two_agent_m();
        let u = fixtures::priv_msg_u();
        let x = m.world("x").unwrap();
        let y = m.world("y").unwrap();
        let msg = u.event("m").unwrap();
        assert!(dynamic_check(&m, x, &u, msg, &parse("B a p").unwrap()).unwrap());
        assert!(!dynamic_check(&m, x, &u, msg, &parse("B b p").unwrap()).unwrap());
        // (y, m) is excluded, so anything holds after it
        assert!(dynamic_check(&m, y, &u, msg, &Formula::Bot).unwrap());
    }

    #[test]
    fn eight_world_result_from_hand_built_action_model() {
        let res = pointed_update(&fixtures::blt_initial(), &fixtures::blt_goal_u()).unwrap();
        assert_eq!(res.model.len(), 8);
        let mut names: Vec<&str> = res.model.frame().names().iter().map(String::as_str).collect();
        names.sort();
        let drawn = fixtures::blt_updated();
        let mut want: Vec<&str> = drawn.frame().names().iter().map(String::as_str).collect();
        want.sort();
        assert_eq!(names, want);
        assert_eq!(res.model.frame().edge_count(), drawn.frame().edge_count());
        assert_eq!(product_update(&fixtures::blt_initial(), &fixtures::blt_goal_u()).unwrap().model.len(), 9);
    }
}
