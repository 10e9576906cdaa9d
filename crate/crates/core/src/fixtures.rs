//! Hand-built models for the Balder-Loki-Thor scenario and the private-message example.
//!
//! Everything here is written out edge by edge, independently of the
//! synthesis and update code, so tests can compare against it.

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{parse, Agent, Formula};
use crate::model::{ActionModel, ActionSpec, KripkeModel, KripkeSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fixture {
    Kripke(KripkeModel),
    Action(ActionModel),
}

fn agents(names: &str) -> Vec<Agent> {
    names.split(',').map(Agent::from).collect()
}

/// Expands `(from, "a,b", to)` triples into one relation entry per agent.
fn relations(edges: &[(&str, &str, &str)]) -> Vec<(Agent, String, String)> {
    edges
        .iter()
        .flat_map(|(from, ags, to)| {
            ags.split(',')
                .map(move |a| (Agent::from(a), from.to_string(), to.to_string()))
        })
        .collect()
}

/// All-to-all edges between two groups of node names.
fn cluster_edges<'a>(from: &[&'a str], ags: &'a str, to: &[&'a str]) -> Vec<(&'a str, &'a str, &'a str)> {
    from.iter()
        .flat_map(|f| to.iter().map(move |t| (*f, ags, *t)))
        .collect()
}

fn kripke(ags: &str, worlds: &[(&str, &[&str])], edges: &[(&str, &str, &str)], point: &str) -> KripkeModel {
    KripkeSpec {
        agents: agents(ags),
        worlds: worlds
            .iter()
            .map(|(id, atoms)| (id.to_string(), atoms.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>()))
            .collect(),
        relations: relations(edges),
        point: point.to_string(),
    }
    .build()
    .expect("fixture is well-formed")
}

fn action(ags: &str, events: &[(&str, &str)], edges: &[(&str, &str, &str)], point: &str) -> ActionModel {
    ActionSpec {
        agents: agents(ags),
        events: events
            .iter()
            .map(|(id, pre)| (id.to_string(), Some(parse(pre).expect("fixture precondition"))))
            .collect(),
        relations: relations(edges),
        point: point.to_string(),
    }
    .build()
    .expect("fixture is well-formed")
}

/// Three brothers, two worlds `u` (p) and `v` (not p), everyone uncertain; actual world `v`.
pub fn blt_initial() -> KripkeModel {
    let all = cluster_edges(&["u", "v"], "b,l,t", &["u", "v"]);
    kripke("b,l,t", &[("u", &["p"]), ("v", &[])], &all, "v")
}

/// Two agents uncertain about p; actual world `x` (p), other world `y`.
pub fn two_agent_m() -> KripkeModel {
    let all = cluster_edges(&["x", "y"], "a,b", &["x", "y"]);
    kripke("a,b", &[("x", &["p"]), ("y", &[])], &all, "x")
}

/// Private message p to `a`; `b` believes nothing happened.
pub fn priv_msg_u() -> ActionModel {
    action(
        "a,b",
        &[("m", "p"), ("n", "top")],
        &[("m", "a", "m"), ("n", "a,b", "n"), ("m", "b", "n")],
        "m",
    )
}

/// The goal the brothers' story asks for, as written (not DBI normal).
pub fn blt_goal() -> Formula {
    parse("B b (B t p & B l B t p & B l p)").expect("goal parses")
}

/// Its DBI normal form.
pub fn blt_goal_normal() -> Formula {
    parse("B b (B t p & B l (p & B t p))").expect("goal parses")
}

const SINK_LOOPS: (&str, &str, &str) = ("-1", "b,l,t", "-1");

/// Action model for `B t p` as drawn in the intermediate construction stage.
pub fn partial_t() -> ActionModel {
    action(
        "b,l,t",
        &[("0", "top"), ("3", "p"), ("-1", "top")],
        &[("0", "t", "3"), ("0", "b,l", "-1"), ("3", "b,l", "-1"), ("3", "t", "3"), SINK_LOOPS],
        "0",
    )
}

/// Action model for `B l (p & B t p)`.
pub fn partial_l() -> ActionModel {
    action(
        "b,l,t",
        &[("0", "top"), ("2", "p"), ("1", "p"), ("-1", "top")],
        &[
            ("0", "l", "2"),
            ("0", "b,t", "-1"),
            ("2", "t", "1"),
            ("2", "b", "-1"),
            ("2", "l", "2"),
            ("1", "b,l", "-1"),
            ("1", "t", "1"),
            SINK_LOOPS,
        ],
        "0",
    )
}

/// Action model for `B t p & B l (p & B t p)`.
pub fn partial_tl() -> ActionModel {
    action(
        "b,l,t",
        &[("0", "top"), ("3", "p"), ("2", "p"), ("1", "p"), ("-1", "top")],
        &[
            ("0", "t", "3"),
            ("0", "l", "2"),
            ("0", "b", "-1"),
            ("3", "b,l", "-1"),
            ("3", "t", "3"),
            ("2", "t", "1"),
            ("2", "b", "-1"),
            ("2", "l", "2"),
            ("1", "b,l", "-1"),
            ("1", "t", "1"),
            SINK_LOOPS,
        ],
        "0",
    )
}

/// The full synthesized action model for the brothers' goal.
pub fn blt_goal_u() -> ActionModel {
    action(
        "b,l,t",
        &[("0", "top"), ("4", "top"), ("3", "p"), ("2", "p"), ("1", "p"), ("-1", "top")],
        &[
            ("0", "b", "4"),
            ("0", "l,t", "-1"),
            ("4", "b", "4"),
            ("4", "t", "3"),
            ("4", "l", "2"),
            ("3", "b,l", "-1"),
            ("3", "t", "3"),
            ("2", "t", "1"),
            ("2", "b", "-1"),
            ("2", "l", "2"),
            ("1", "b,l", "-1"),
            ("1", "t", "1"),
            SINK_LOOPS,
        ],
        "0",
    )
}

/// The eight-world result of the pointed update, drawn cluster by cluster.
pub fn blt_updated() -> KripkeModel {
    let c0 = ["v@0"];
    let c4 = ["u@4", "v@4"];
    let c3 = ["u@3"];
    let c2 = ["u@2"];
    let c1 = ["u@1"];
    let sink = ["u@-1", "v@-1"];
    let mut edges = Vec::new();
    edges.extend(cluster_edges(&c0, "b", &c4));
    edges.extend(cluster_edges(&c0, "l,t", &sink));
    edges.extend(cluster_edges(&c4, "b", &c4));
    edges.extend(cluster_edges(&c4, "t", &c3));
    edges.extend(cluster_edges(&c4, "l", &c2));
    edges.extend(cluster_edges(&c3, "t", &c3));
    edges.extend(cluster_edges(&c3, "b,l", &sink));
    edges.extend(cluster_edges(&c2, "l", &c2));
    edges.extend(cluster_edges(&c2, "t", &c1));
    edges.extend(cluster_edges(&c2, "b", &sink));
    edges.extend(cluster_edges(&c1, "t", &c1));
    edges.extend(cluster_edges(&c1, "b,l", &sink));
    edges.extend(cluster_edges(&sink, "b,l,t", &sink));
    kripke(
        "b,l,t",
        &[
            ("v@0", &[]),
            ("u@4", &["p"]),
            ("v@4", &[]),
            ("u@3", &["p"]),
            ("u@2", &["p"]),
            ("u@1", &["p"]),
            ("u@-1", &["p"]),
            ("v@-1", &[]),
        ],
        &edges,
        "v@0",
    )
}

/// Every hand-built fixture by name.
pub fn blt_fixtures() -> BTreeMap<&'static str, Fixture> {
    BTreeMap::from([
        ("blt_initial", Fixture::Kripke(blt_initial())),
        ("two_agent_M", Fixture::Kripke(two_agent_m())),
        ("priv_msg_U", Fixture::Action(priv_msg_u())),
        ("partial_t_U", Fixture::Action(partial_t())),
        ("partial_l_U", Fixture::Action(partial_l())),
        ("partial_tl_U", Fixture::Action(partial_tl())),
        ("blt_goal_U", Fixture::Action(blt_goal_u())),
        ("blt_updated", Fixture::Kripke(blt_updated())),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let m = blt_initial();
        assert_eq!(m.len(), 2);
        assert_eq!(m.frame().agents().len(), 3);
        assert_eq!(m.frame().edge_count(), 12);

        let u = priv_msg_u();
        assert_eq!(u.len(), 2);
        assert_eq!(u.pre(u.event("m").unwrap()), &Formula::atom("p"));
        assert_eq!(u.pre(u.event("n").unwrap()), &Formula::Top);
        assert_eq!(u.frame().name(u.point()), "m");

        let two = two_agent_m();
        assert_eq!(two.len(), 2);
        assert!(two.atoms_at(two.point()).contains("p"));

        assert_eq!(blt_goal_u().len(), 6);
        assert_eq!(blt_updated().len(), 8);
    }

    #[test]
    fn all_fixtures_validate() {
        for (name, fx) in blt_fixtures() {
            let v = match fx {
                Fixture::Kripke(m) => m.to_spec().validate(),
                Fixture::Action(u) => u.to_spec().validate(),
            };
            assert!(v.is_empty(), "{name}: {v:?}");
        }
    }
}
