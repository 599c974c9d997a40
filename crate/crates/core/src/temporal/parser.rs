//! Recursive-descent parser for the formula grammar:
//!
//! ```text
//! formula := or
//! or      := and ('|' and)*
//! and     := until ('&' until)*
//! until   := unary ('U' '[' int ',' int ']' until)?
//! unary   := '!' unary | 'G' '[' int ',' int ']' unary
//!          | 'F' '[' int ',' int ']' unary | primary
//! primary := '(' formula ')' | 'true' | 'false' | ident
//! ```
//!
//! `G`, `F` and `U` are operators only when immediately followed by an
//! interval; otherwise they are ordinary identifiers.

use super::formula::{Formula, Interval};
use super::predicates::PredicateTable;
use super::TemporalError;

pub fn parse_formula(text: &str, table: &PredicateTable) -> Result<Formula, TemporalError> {
    let mut p = Parser { text, bytes: text.as_bytes(), pos: 0, table };
    let f = p.parse_or()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    table: &'a PredicateTable,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> TemporalError {
        TemporalError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), TemporalError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn parse_or(&mut self) -> Result<Formula, TemporalError> {
        let mut f = self.parse_and()?;
        while self.eat(b'|') {
            let rhs = self.parse_and()?;
            f = Formula::or(f, rhs);
        }
        Ok(f)
    }

    fn parse_and(&mut self) -> Result<Formula, TemporalError> {
        let mut f = self.parse_until()?;
        while self.eat(b'&') {
            let rhs = self.parse_until()?;
            f = Formula::and(f, rhs);
        }
        Ok(f)
    }

    fn parse_until(&mut self) -> Result<Formula, TemporalError> {
        let lhs = self.parse_unary()?;
        self.skip_ws();
        if self.at_operator(b'U') {
            self.pos += 1;
            let i = self.parse_interval()?;
            let rhs = self.parse_until()?; // right-associative
            return Ok(Formula::until(i, lhs, rhs));
        }
        Ok(lhs)
    }

    /// True when the next token is the given temporal-operator letter
    /// immediately followed by `[`.
    fn at_operator(&mut self, letter: u8) -> bool {
        self.skip_ws();
        self.bytes.get(self.pos) == Some(&letter)
            && self.bytes.get(self.pos + 1) == Some(&b'[')
    }

    fn parse_unary(&mut self) -> Result<Formula, TemporalError> {
        if self.eat(b'!') {
            return Ok(Formula::not(self.parse_unary()?));
        }
        if self.at_operator(b'G') {
            self.pos += 1;
            let i = self.parse_interval()?;
            return Ok(Formula::always(i, self.parse_unary()?));
        }
        if self.at_operator(b'F') {
            self.pos += 1;
            let i = self.parse_interval()?;
            return Ok(Formula::eventually(i, self.parse_unary()?));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Formula, TemporalError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let f = self.parse_or()?;
                self.expect(b')')?;
                Ok(f)
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self
                    .bytes
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
                {
                    self.pos += 1;
                }
                let name = &self.text[start..self.pos];
                match name {
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    _ => match self.table.lookup(name) {
                        Some(id) => Ok(Formula::Atom(id)),
                        None => Err(TemporalError::UnknownPredicate {
                            pos: start,
                            name: name.to_string(),
                        }),
                    },
                }
            }
            _ => Err(self.err("expected formula")),
        }
    }

    fn parse_interval(&mut self) -> Result<Interval, TemporalError> {
        self.expect(b'[')?;
        let lo = self.parse_int()?;
        self.expect(b',')?;
        let hi = self.parse_int()?;
        if lo > hi {
            return Err(self.err(&format!("interval [{lo},{hi}] has lower bound above upper")));
        }
        self.expect(b']')?;
        Ok(Interval::new(lo, hi))
    }

    fn parse_int(&mut self) -> Result<usize, TemporalError> {
        self.skip_ws();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        self.text[start..self.pos]
            .parse()
            .map_err(|_| self.err("integer out of range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::predicates::{AtomicPredicate, PredId};

    fn table() -> PredicateTable {
        let mut t = PredicateTable::new();
        for name in ["g1", "a", "b"] {
            t.insert(name, AtomicPredicate::boxed(vec![0], vec![-5.0], vec![5.0])).unwrap();
        }
        t
    }

    #[test]
    fn paper_example_parses() {
        let t = table();
        let f = parse_formula("G[0,20] F[0,10] g1", &t).unwrap();
        assert_eq!(
            f,
            Formula::always(
                Interval::new(0, 20),
                Formula::eventually(Interval::new(0, 10), Formula::Atom(PredId(0)))
            )
        );
    }

    #[test]
    fn negation() {
        let t = table();
        let f = parse_formula("!(a)", &t).unwrap();
        assert_eq!(f, Formula::not(Formula::Atom(PredId(1))));
    }

    #[test]
    fn interval_order_rejected() {
        let t = table();
        let e = parse_formula("a U[3,2] b", &t);
        assert!(matches!(e, Err(TemporalError::Parse { .. })), "{e:?}");
    }

    #[test]
    fn unknown_predicate_rejected() {
        let t = table();
        let e = parse_formula("G[0,2] nope", &t);
        match e {
            Err(TemporalError::UnknownPredicate { name, .. }) => assert_eq!(name, "nope"),
            other => panic!("expected unknown-predicate error, got {other:?}"),
        }
    }

    #[test]
    fn precedence_and_binds_tighter_than_or() {
        let t = table();
        let f = parse_formula("a | b & g1", &t).unwrap();
        assert_eq!(
            f,
            Formula::or(
                Formula::Atom(PredId(1)),
                Formula::and(Formula::Atom(PredId(2)), Formula::Atom(PredId(0)))
            )
        );
    }

    #[test]
    fn until_chain_right_associative() {
        let t = table();
        let f = parse_formula("a U[0,1] b U[2,3] g1", &t).unwrap();
        assert_eq!(
            f,
            Formula::until(
                Interval::new(0, 1),
                Formula::Atom(PredId(1)),
                Formula::until(Interval::new(2, 3), Formula::Atom(PredId(2)), Formula::Atom(PredId(0)))
            )
        );
    }

    #[test]
    fn display_round_trips() {
        let t = table();
        for text in ["G[0,20] F[0,10] g1", "!(a) & (b | true)", "a U[1,4] !(b)"] {
            let f = parse_formula(text, &t).unwrap();
            let shown = f.display(&t).to_string();
            let f2 = parse_formula(&shown, &t).unwrap();
            assert_eq!(f, f2, "`{text}` -> `{shown}`");
        }
    }

    #[test]
    fn error_position_reported() {
        let t = table();
        match parse_formula("a & ", &t) {
            Err(TemporalError::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
    }
}
