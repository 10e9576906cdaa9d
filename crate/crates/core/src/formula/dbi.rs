//! Recognition and normalization of deterministic-belief-increase (DBI) goals.
//!
//! A DBI goal is a non-empty conjunction of belief operators whose bodies are a
//! propositional part, a nested DBI goal, or both. Conjunctions are treated as
//! associative and commutative when recognizing the shape: inside `B i (...)`,
//! all propositional conjuncts form the propositional part and all remaining
//! conjuncts must themselves be belief goals.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::{Agent, Formula};

/// One belief conjunct `B agent (prop & inner)` of a DBI goal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goal {
    pub agent: Agent,
    /// Propositional content, if any.
    pub prop: Option<Formula>,
    /// Nested belief conjuncts.
    pub inner: Vec<Goal>,
}

impl Goal {
    pub fn to_formula(&self) -> Formula {
        let body = match (&self.prop, self.inner.is_empty()) {
            (Some(xi), true) => xi.clone(),
            (None, false) => conjoin_goals(&self.inner),
            (Some(xi), false) => Formula::and(xi.clone(), conjoin_goals(&self.inner)),
            (None, true) => Formula::Top,
        };
        Formula::believes(self.agent.clone(), body)
    }

    fn is_normal(&self) -> bool {
        conjunction_is_normal(&self.inner) && !self.inner.iter().any(|g| g.agent == self.agent)
    }

    /// Number of belief operators in this conjunct.
    pub fn operator_count(&self) -> usize {
        1 + self.inner.iter().map(Goal::operator_count).sum::<usize>()
    }
}

fn conjoin_goals(goals: &[Goal]) -> Formula {
    Formula::conjunction(goals.iter().map(Goal::to_formula))
}

fn conjunction_is_normal(goals: &[Goal]) -> bool {
    let mut seen = BTreeSet::new();
    goals.iter().all(|g| seen.insert(&g.agent) && g.is_normal())
}

/// A formula certified to have the DBI shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DbiFormula {
    formula: Formula,
    goals: Vec<Goal>,
    normal: bool,
}

impl DbiFormula {
    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    /// The top-level belief conjuncts.
    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    pub fn is_normal(&self) -> bool {
        self.normal
    }

    pub fn target_agents(&self) -> BTreeSet<Agent> {
        self.goals.iter().map(|g| g.agent.clone()).collect()
    }

    pub fn operator_count(&self) -> usize {
        self.goals.iter().map(Goal::operator_count).sum()
    }

    fn from_goals(goals: Vec<Goal>) -> Self {
        let normal = conjunction_is_normal(&goals);
        DbiFormula {
            formula: conjoin_goals(&goals),
            goals,
            normal,
        }
    }
}

impl fmt::Display for DbiFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.formula.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DbiError {
    #[error("not a DBI goal ({reason}): {subterm}")]
    Rejected { subterm: Formula, reason: &'static str },
    #[error("formula is DBI but not in DBI normal form: {0}")]
    NotNormal(Formula),
}

fn reject<T>(subterm: &Formula, reason: &'static str) -> Result<T, DbiError> {
    Err(DbiError::Rejected {
        subterm: subterm.clone(),
        reason,
    })
}

fn conjuncts(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::And(l, r) => {
            let mut out = conjuncts(l);
            out.extend(conjuncts(r));
            out
        }
        other => vec![other],
    }
}

fn classify_goal(f: &Formula) -> Result<Goal, DbiError> {
    match f {
        Formula::Believes(agent, body) => {
            if body.is_propositional() {
                return Ok(Goal {
                    agent: agent.clone(),
                    prop: Some((**body).clone()),
                    inner: Vec::new(),
                });
            }
            let (props, modal): (Vec<&Formula>, Vec<&Formula>) =
                conjuncts(body).into_iter().partition(|g| g.is_propositional());
            let inner = modal
                .into_iter()
                .map(classify_goal)
                .collect::<Result<Vec<_>, _>>()?;
            let prop = (!props.is_empty()).then(|| Formula::conjunction(props.into_iter().cloned()));
            Ok(Goal {
                agent: agent.clone(),
                prop,
                inner,
            })
        }
        Formula::Not(_) => reject(f, "negation over a modal formula"),
        Formula::Or(..) => reject(f, "disjunction over a modal formula"),
        Formula::Implies(..) => reject(f, "implication over a modal formula"),
        Formula::Possible(..) => reject(f, "possibility operator"),
        Formula::Atom(_) | Formula::Top | Formula::Bot | Formula::And(..) => {
            reject(f, "propositional conjunct outside any belief operator")
        }
    }
}

/// Accepts `f` iff it has the DBI shape and records whether it is DBI normal.
pub fn classify_dbi(f: &Formula) -> Result<DbiFormula, DbiError> {
    let goals = conjuncts(f)
        .into_iter()
        .map(classify_goal)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DbiFormula {
        formula: f.clone(),
        normal: conjunction_is_normal(&goals),
        goals,
    })
}

/// Rewrites with `B_i B_i t = B_i t`, `B_i (x & B_i t) = B_i (x & t)` and
/// `B_i t & B_i u = B_i (t & u)` until the result is DBI normal.
///
/// Bottom-up: inside a `B_i` body, conjuncts that are themselves `B_i` are
/// spliced in place; then same-agent conjuncts merge at the position of
/// their first occurrence and their bodies are normalized recursively.
/// Propositional parts are conjoined in source order.
pub fn to_dbi_normal(f: &DbiFormula) -> DbiFormula {
    let (props, goals) = normalize_items(f.goals.clone(), None);
    debug_assert!(props.is_empty());
    let out = DbiFormula::from_goals(goals);
    debug_assert!(out.normal);
    out
}

fn normalize_items(items: Vec<Goal>, ctx: Option<&Agent>) -> (Vec<Formula>, Vec<Goal>) {
    fn splice(items: Vec<Goal>, ctx: Option<&Agent>, props: &mut Vec<Formula>, flat: &mut Vec<(Vec<Formula>, Goal)>) {
        for mut g in items {
            let own = g.prop.take().map(|p| flat_props(&p)).unwrap_or_default();
            if Some(&g.agent) == ctx {
                props.extend(own);
                splice(std::mem::take(&mut g.inner), ctx, props, flat);
            } else {
                flat.push((own, g));
            }
        }
    }

    let mut props = Vec::new();
    let mut flat = Vec::new();
    splice(items, ctx, &mut props, &mut flat);

    let mut merged: Vec<(Vec<Formula>, Goal)> = Vec::new();
    for (p, g) in flat {
        match merged.iter_mut().find(|(_, m)| m.agent == g.agent) {
            Some((mp, m)) => {
                mp.extend(p);
                m.inner.extend(g.inner);
            }
            None => merged.push((p, g)),
        }
    }

    let goals = merged
        .into_iter()
        .map(|(mut p, mut g)| {
            let (extra, inner) = normalize_items(std::mem::take(&mut g.inner), Some(&g.agent));
            p.extend(extra);
            g.inner = inner;
            g.prop = (!p.is_empty()).then(|| Formula::conjunction(p));
            g
        })
        .collect();
    (props, goals)
}

fn flat_props(f: &Formula) -> Vec<Formula> {
    conjuncts(f).into_iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn dbi(s: &str) -> DbiFormula {
        classify_dbi(&parse(s).unwrap()).unwrap()
    }

    #[test]
    fn normal_form_of_balder_goal() {
        let d = dbi("B b (B t p & B l (p & B t p))");
        assert!(d.is_normal());
        let d = dbi("B b (B t p & B l B t p & B l p)");
        assert!(!d.is_normal());
        let n = to_dbi_normal(&d);
        assert!(n.is_normal());
        assert_eq!(n.formula(), &parse("B b (B t p & B l (p & B t p))").unwrap());
    }

    #[test]
    fn k45_rewrite_rules() {
        assert_eq!(to_dbi_normal(&dbi("B i B i p")).formula(), &parse("B i p").unwrap());
        assert_eq!(to_dbi_normal(&dbi("B i p & B i q")).formula(), &parse("B i (p & q)").unwrap());
        assert_eq!(
            to_dbi_normal(&dbi("B i (q & B i (r & B j p))")).formula(),
            &parse("B i ((q & r) & B j p)").unwrap()
        );
        assert_eq!(
            to_dbi_normal(&dbi("B i B i B i (p & B i q)")).formula(),
            &parse("B i (p & q)").unwrap()
        );
    }

    #[test]
    fn rejections_name_the_subterm() {
        let err = classify_dbi(&parse("~B i p").unwrap()).unwrap_err();
        assert_eq!(
            err,
            DbiError::Rejected {
                subterm: parse("~B i p").unwrap(),
                reason: "negation over a modal formula"
            }
        );
        let err = classify_dbi(&parse("B i (p & (B j q | B k r))").unwrap()).unwrap_err();
        assert!(matches!(err, DbiError::Rejected { subterm: Formula::Or(..), .. }));
        assert!(classify_dbi(&parse("p & B i q").unwrap()).is_err());
        assert!(classify_dbi(&parse("p").unwrap()).is_err());
        assert!(classify_dbi(&Formula::possible("i", Formula::atom("p"))).is_err());
    }

    #[test]
    fn propositional_bodies_are_kept_verbatim() {
        let d = dbi("B i (p | ~q -> r)");
        assert!(d.is_normal());
        assert_eq!(d.goals()[0].prop, Some(parse("p | ~q -> r").unwrap()));
        assert!(d.goals()[0].inner.is_empty());
    }

    #[test]
    fn normalization_is_idempotent_and_preserves_targets() {
        for s in [
            "B b (B t p & B l B t p & B l p)",
            "B i p & B j q & B i B k r",
            "B a (B b p & B b (q & B a r)) & B c B c top",
        ] {
            let d = dbi(s);
            let n = to_dbi_normal(&d);
            assert!(n.is_normal());
            assert_eq!(to_dbi_normal(&n), n);
            assert_eq!(n.target_agents(), d.formula().target_agents());
            assert_eq!(classify_dbi(n.formula()).unwrap(), n);
        }
    }
}
