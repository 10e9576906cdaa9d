//! Modal formulas over atoms, booleans and per-agent belief operators.

mod dbi;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use dbi::{classify_dbi, to_dbi_normal, DbiError, DbiFormula, Goal};
pub use parser::{parse, ParseError};

/// An agent name. Equality is exact string equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Agent(String);

impl Agent {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "agent names must be non-empty");
        Agent(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Agent {
    fn from(value: &str) -> Self {
        Agent::new(value)
    }
}

/// A formula of the doxastic language.
///
/// `Or`, `Implies` and `Possible` are sugar and disappear under [`Formula::desugar`].
/// `Top` and `Bot` are kept as primitive constants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Formula {
    Atom(String),
    Top,
    Bot,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Believes(Agent, Box<Formula>),
    Possible(Agent, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Formula, r: Formula) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    pub fn believes(agent: impl Into<Agent>, body: Formula) -> Self {
        Formula::Believes(agent.into(), Box::new(body))
    }

    pub fn possible(agent: impl Into<Agent>, body: Formula) -> Self {
        Formula::Possible(agent.into(), Box::new(body))
    }

    /// Right-nested conjunction of the items; `Top` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut items: Vec<Formula> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Formula::Top;
        };
        while let Some(prev) = items.pop() {
            acc = Formula::and(prev, acc);
        }
        acc
    }

    /// `B_{i1} ... B_{ik} body`.
    pub fn belief_chain<'a>(agents: impl IntoIterator<Item = &'a Agent>, body: Formula) -> Self {
        let agents: Vec<&Agent> = agents.into_iter().collect();
        agents
            .into_iter()
            .rev()
            .fold(body, |acc, a| Formula::believes(a.clone(), acc))
    }

    /// Rewrites `Or`, `Implies` and `Possible` into `Not`/`And`/`Believes`.
    pub fn desugar(&self) -> Formula {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => self.clone(),
            Formula::Not(f) => Formula::not(f.desugar()),
            Formula::And(l, r) => Formula::and(l.desugar(), r.desugar()),
            Formula::Or(l, r) => Formula::not(Formula::and(
                Formula::not(l.desugar()),
                Formula::not(r.desugar()),
            )),
            Formula::Implies(l, r) => {
                Formula::not(Formula::and(l.desugar(), Formula::not(r.desugar())))
            }
            Formula::Believes(a, f) => Formula::believes(a.clone(), f.desugar()),
            Formula::Possible(a, f) => {
                Formula::not(Formula::believes(a.clone(), Formula::not(f.desugar())))
            }
        }
    }

    /// Target agents: the agents of the outermost belief operators.
    pub fn target_agents(&self) -> BTreeSet<Agent> {
        let mut out = BTreeSet::new();
        self.collect_targets(&mut out);
        out
    }

    fn collect_targets(&self, out: &mut BTreeSet<Agent>) {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => {}
            Formula::Not(f) => f.collect_targets(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.collect_targets(out);
                r.collect_targets(out);
            }
            Formula::Believes(a, _) | Formula::Possible(a, _) => {
                out.insert(a.clone());
            }
        }
    }

    /// True iff the formula contains no modal operator.
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => true,
            Formula::Not(f) => f.is_propositional(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.is_propositional() && r.is_propositional()
            }
            Formula::Believes(..) | Formula::Possible(..) => false,
        }
    }

    /// Every agent mentioned anywhere in the formula.
    pub fn agents(&self) -> BTreeSet<Agent> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Believes(a, _) | Formula::Possible(a, _) = f {
                out.insert(a.clone());
            }
        });
        out
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(p) = f {
                out.insert(p.clone());
            }
        });
        out
    }

    /// Maximal nesting of modal operators.
    pub fn modal_depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => 0,
            Formula::Not(f) => f.modal_depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.modal_depth().max(r.modal_depth())
            }
            Formula::Believes(_, f) | Formula::Possible(_, f) => 1 + f.modal_depth(),
        }
    }

    /// Number of modal operator occurrences.
    pub fn modal_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |f| {
            if matches!(f, Formula::Believes(..) | Formula::Possible(..)) {
                n += 1;
            }
        });
        n
    }

    /// Every sequence of modal operators along a root-to-node path, including the empty one.
    pub fn modal_sequences(&self) -> BTreeSet<Vec<Agent>> {
        fn go(f: &Formula, prefix: &mut Vec<Agent>, out: &mut BTreeSet<Vec<Agent>>) {
            match f {
                Formula::Atom(_) | Formula::Top | Formula::Bot => {}
                Formula::Not(g) => go(g, prefix, out),
                Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                    go(l, prefix, out);
                    go(r, prefix, out);
                }
                Formula::Believes(a, g) | Formula::Possible(a, g) => {
                    prefix.push(a.clone());
                    out.insert(prefix.clone());
                    go(g, prefix, out);
                    prefix.pop();
                }
            }
        }
        let mut out = BTreeSet::from([Vec::new()]);
        go(self, &mut Vec::new(), &mut out);
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => {}
            Formula::Not(g) | Formula::Believes(_, g) | Formula::Possible(_, g) => g.visit(f),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.visit(f);
                r.visit(f);
            }
        }
    }

    /// Renders with mathematical symbols (used for diagrams).
    pub fn to_unicode(&self) -> String {
        let mut s = String::new();
        write_formula(&mut s, self, Prec::Imp, &UNICODE).expect("writing to a String");
        s
    }
}

// Binding strength, weakest first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Imp,
    Or,
    And,
    Unary,
}

struct Symbols {
    top: &'static str,
    bot: &'static str,
    not: &'static str,
    and: &'static str,
    or: &'static str,
    imp: &'static str,
    unicode: bool,
}

const ASCII: Symbols = Symbols {
    top: "top",
    bot: "bot",
    not: "~",
    and: " & ",
    or: " | ",
    imp: " -> ",
    unicode: false,
};

const UNICODE: Symbols = Symbols {
    top: "⊤",
    bot: "⊥",
    not: "¬",
    and: " ∧ ",
    or: " ∨ ",
    imp: " → ",
    unicode: true,
};

fn write_formula(out: &mut impl fmt::Write, f: &Formula, ctx: Prec, sym: &Symbols) -> fmt::Result {
    let prec = match f {
        Formula::Implies(..) => Prec::Imp,
        Formula::Or(..) => Prec::Or,
        Formula::And(..) => Prec::And,
        _ => Prec::Unary,
    };
    let paren = prec < ctx;
    if paren {
        out.write_char('(')?;
    }
    match f {
        Formula::Atom(p) => out.write_str(p)?,
        Formula::Top => out.write_str(sym.top)?,
        Formula::Bot => out.write_str(sym.bot)?,
        Formula::Not(g) => {
            out.write_str(sym.not)?;
            write_formula(out, g, Prec::Unary, sym)?;
        }
        // `&` and `|` chains nest to the right; a left operand of the same
        // operator needs parentheses to survive a round trip.
        Formula::And(l, r) => {
            write_formula(out, l, Prec::Unary, sym)?;
            out.write_str(sym.and)?;
            write_formula(out, r, Prec::And, sym)?;
        }
        Formula::Or(l, r) => {
            write_formula(out, l, Prec::And, sym)?;
            out.write_str(sym.or)?;
            write_formula(out, r, Prec::Or, sym)?;
        }
        Formula::Implies(l, r) => {
            write_formula(out, l, Prec::Or, sym)?;
            out.write_str(sym.imp)?;
            write_formula(out, r, Prec::Imp, sym)?;
        }
        Formula::Believes(a, g) => {
            if sym.unicode {
                write!(out, "B_{a} ")?;
            } else {
                write!(out, "B {a} ")?;
            }
            write_formula(out, g, Prec::Unary, sym)?;
        }
        Formula::Possible(a, g) => {
            if sym.unicode {
                write!(out, "B̂_{a} ")?;
                write_formula(out, g, Prec::Unary, sym)?;
            } else {
                // No concrete syntax for the dual; print its definition.
                write!(out, "~B {a} ~")?;
                write_formula(out, g, Prec::Unary, sym)?;
            }
        }
    }
    if paren {
        out.write_char(')')?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, Prec::Imp, &ASCII)
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    #[test]
    fn target_agents_clauses() {
        assert_eq!(
            f("B b (B t p & B l B t p & B l p)").target_agents(),
            BTreeSet::from([Agent::from("b")])
        );
        assert_eq!(
            f("B t p & B l B t p & B l p").target_agents(),
            BTreeSet::from([Agent::from("t"), Agent::from("l")])
        );
        assert!(f("p").target_agents().is_empty());
        assert_eq!(
            f("~B i p & B j q").target_agents(),
            BTreeSet::from([Agent::from("i"), Agent::from("j")])
        );
    }

    #[test]
    fn propositional_detection() {
        assert!(f("p & ~q").is_propositional());
        assert!(!f("B i p").is_propositional());
        assert!(Formula::Top.is_propositional());
    }

    #[test]
    fn desugar_removes_sugar() {
        let d = f("p | q -> B i r").desugar();
        let mut sugar = false;
        d.visit(&mut |g| sugar |= matches!(g, Formula::Or(..) | Formula::Implies(..) | Formula::Possible(..)));
        assert!(!sugar);
        assert_eq!(
            Formula::possible("i", f("p")).desugar(),
            f("~B i ~p")
        );
    }

    #[test]
    fn modal_sequences_of_independence_example() {
        let seqs = f("~B b B b p | B t B l p").modal_sequences();
        let names: Vec<String> = seqs
            .iter()
            .map(|s| s.iter().map(Agent::as_str).collect::<Vec<_>>().join(""))
            .collect();
        assert_eq!(names, vec!["", "b", "bb", "t", "tl"]);
    }

    #[test]
    fn unicode_rendering() {
        assert_eq!(f("B b (p & ~q)").to_unicode(), "B_b (p ∧ ¬q)");
        assert_eq!(Formula::Top.to_unicode(), "⊤");
    }
}
