//! Recursive-descent parser for the concrete formula syntax.
//!
//! ```text
//! formula := disj ("->" formula)?
//! disj    := conj ("|" disj)?
//! conj    := unary ("&" conj)?
//! unary   := "~" unary | "B" agent unary | "top" | "bot" | atom | "(" formula ")"
//! ```
//!
//! Binary chains nest to the right, so `a & b & c` is `a & (b & c)`.

use thiserror::Error;

use super::{Agent, Formula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Not,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Not => "'~'".into(),
            Tok::And => "'&'".into(),
            Tok::Or => "'|'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'~' => Tok::Not,
            b'&' => Tok::And,
            b'|' => Tok::Or,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((i, Tok::Arrow));
                i += 2;
                continue;
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Word(text[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: i,
                    message: format!("unexpected character '{ch}'"),
                });
            }
        };
        out.push((i, tok));
        i += 1;
    }
    out.push((text.len(), Tok::Eof));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.conjunction()?;
        if *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.disjunction()?;
            return Ok(Formula::or(lhs, rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if *self.peek() == Tok::And {
            self.bump();
            let rhs = self.conjunction()?;
            return Ok(Formula::and(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                if *self.peek() != Tok::RParen {
                    return self.error(format!("expected ')', found {}", self.peek().describe()));
                }
                self.bump();
                Ok(inner)
            }
            Tok::Word(w) if w == "B" => {
                self.bump();
                let agent = match self.peek().clone() {
                    Tok::Word(a) if a != "top" && a != "bot" => a,
                    other => {
                        return self.error(format!("expected agent name, found {}", other.describe()))
                    }
                };
                self.bump();
                let body = self.unary()?;
                Ok(Formula::Believes(Agent::new(agent), Box::new(body)))
            }
            Tok::Word(w) if w == "top" => {
                self.bump();
                Ok(Formula::Top)
            }
            Tok::Word(w) if w == "bot" => {
                self.bump();
                Ok(Formula::Bot)
            }
            Tok::Word(w) => {
                if w.as_bytes()[0].is_ascii_digit() {
                    return self.error(format!("atom names cannot start with a digit: '{w}'"));
                }
                self.bump();
                Ok(Formula::Atom(w))
            }
            other => self.error(format!("expected formula, found {}", other.describe())),
        }
    }
}

/// Parses the concrete syntax into a [`Formula`].
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {}", p.peek().describe()));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(name: &str) -> Formula {
        Formula::atom(name)
    }

    #[test]
    fn parses_balder_goal() {
        let got = parse("B b (B t p & B l B t p & B l p)").unwrap();
        let want = Formula::believes(
            "b",
            Formula::and(
                Formula::believes("t", a("p")),
                Formula::and(
                    Formula::believes("l", Formula::believes("t", a("p"))),
                    Formula::believes("l", a("p")),
                ),
            ),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn constants() {
        assert_eq!(parse("top").unwrap(), Formula::Top);
        assert_eq!(parse(" bot ").unwrap(), Formula::Bot);
    }

    #[test]
    fn unbalanced_input_reports_offset() {
        let err = parse("B b (p &").unwrap_err();
        assert_eq!(err.offset, 8);
        let err = parse("B b (p & q").unwrap_err();
        assert_eq!(err.offset, 10);
        assert!(err.message.contains("')'"));
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse("p $ q").unwrap_err().offset, 2);
        assert_eq!(parse("p q").unwrap_err().offset, 2);
        assert!(parse("B (p)").is_err());
        assert!(parse("1p").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(
            parse("~p & q | r -> s").unwrap(),
            Formula::implies(
                Formula::or(Formula::and(Formula::not(a("p")), a("q")), a("r")),
                a("s")
            )
        );
        assert_eq!(
            parse("p -> q -> r").unwrap(),
            Formula::implies(a("p"), Formula::implies(a("q"), a("r")))
        );
        assert_eq!(
            parse("B 1 B 2 p").unwrap(),
            Formula::believes("1", Formula::believes("2", a("p")))
        );
    }

    #[test]
    fn left_nested_chain_keeps_parentheses() {
        let f = Formula::and(Formula::and(a("p"), a("q")), a("r"));
        assert_eq!(f.to_string(), "(p & q) & r");
        assert_eq!(parse(&f.to_string()).unwrap(), f);
    }

    pub(crate) fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            prop::sample::select(vec!["p", "q", "r2", "_x"]).prop_map(Formula::atom),
            Just(Formula::Top),
            Just(Formula::Bot),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            let agent = prop::sample::select(vec!["a", "b", "1", "lo"]);
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::implies(l, r)),
                (agent.clone(), inner.clone()).prop_map(|(a, f)| Formula::believes(a, f)),
                (agent, inner).prop_map(|(a, f)| Formula::possible(a, f)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_is_identity_on_desugared(f in arb_formula()) {
            let d = f.desugar();
            prop_assert_eq!(parse(&d.to_string()).unwrap(), d);
        }

        #[test]
        fn print_parse_desugars_the_dual(f in arb_formula()) {
            prop_assert_eq!(parse(&f.to_string()).unwrap().desugar(), f.desugar());
        }

        #[test]
        fn target_agents_survive_desugaring(f in arb_formula()) {
            prop_assert_eq!(f.target_agents(), f.desugar().target_agents());
        }
    }
}
