use std::fmt;

use super::predicates::{PredId, PredicateTable};

/// Closed time-index interval `[lo, hi]`, `0 <= lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Self {
        assert!(lo <= hi, "interval [{lo},{hi}] is empty");
        Interval { lo, hi }
    }

    /// Indices referenced when the operator is evaluated at `k`.
    pub fn shifted(&self, k: usize) -> std::ops::RangeInclusive<usize> {
        (k + self.lo)..=(k + self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// MTL formula over atomic predicates resolved through a [`PredicateTable`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(PredId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Always(Interval, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn until(i: Interval, a: Formula, b: Formula) -> Formula {
        Formula::Until(i, Box::new(a), Box::new(b))
    }
    pub fn eventually(i: Interval, f: Formula) -> Formula {
        Formula::Eventually(i, Box::new(f))
    }
    pub fn always(i: Interval, f: Formula) -> Formula {
        Formula::Always(i, Box::new(f))
    }

    /// Conjunction of `a` and `b` with constant folding.
    pub fn and_fold(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::False, _) | (_, Formula::False) => Formula::False,
            (Formula::True, f) | (f, Formula::True) => f,
            (a, b) => Formula::and(a, b),
        }
    }

    /// Disjunction of `a` and `b` with constant folding.
    pub fn or_fold(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::True, _) | (_, Formula::True) => Formula::True,
            (Formula::False, f) | (f, Formula::False) => f,
            (a, b) => Formula::or(a, b),
        }
    }

    /// Largest time index any atom can reference when the formula is
    /// evaluated at index 0. Sizes trajectories and MILP lookahead.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 0,
            Formula::Not(f) => f.horizon(),
            Formula::And(a, b) | Formula::Or(a, b) => a.horizon().max(b.horizon()),
            Formula::Eventually(i, f) | Formula::Always(i, f) => i.hi + f.horizon(),
            Formula::Until(i, a, b) => {
                let rhs = i.hi + b.horizon();
                // the left operand is checked at indices strictly before the
                // chosen k', so it never reaches past hi - 1
                if i.hi >= 1 {
                    rhs.max(i.hi - 1 + a.horizon())
                } else {
                    rhs
                }
            }
        }
    }

    /// Rewrites derived operators into the core `Until`/negation fragment:
    /// `F_I f == true U_I f` and `G_I f == !(true U_I !f)`. Semantics are
    /// preserved exactly; see the round-trip tests.
    pub fn desugared(&self) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(p) => Formula::Atom(*p),
            Formula::Not(f) => Formula::not(f.desugared()),
            Formula::And(a, b) => Formula::and(a.desugared(), b.desugared()),
            Formula::Or(a, b) => Formula::or(a.desugared(), b.desugared()),
            Formula::Until(i, a, b) => Formula::until(*i, a.desugared(), b.desugared()),
            Formula::Eventually(i, f) => Formula::until(*i, Formula::True, f.desugared()),
            Formula::Always(i, f) => {
                Formula::not(Formula::until(*i, Formula::True, Formula::not(f.desugared())))
            }
        }
    }

    /// Shift every interval left by `delta` time steps. Intended for
    /// rewritten formulas whose anchors are absolute time indices, so the
    /// result can be evaluated on a trajectory that starts at index `delta`.
    /// Returns `None` when any interval would cross below zero.
    pub fn shifted_left(&self, delta: usize) -> Option<Formula> {
        let shift = |i: &Interval| -> Option<Interval> {
            if i.lo < delta {
                None
            } else {
                Some(Interval::new(i.lo - delta, i.hi - delta))
            }
        };
        Some(match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(p) => {
                if delta == 0 {
                    Formula::Atom(*p)
                } else {
                    // a bare atom is anchored at index 0 and cannot move left
                    return None;
                }
            }
            Formula::Not(f) => Formula::not(f.shifted_left(delta)?),
            Formula::And(a, b) => Formula::and(a.shifted_left(delta)?, b.shifted_left(delta)?),
            Formula::Or(a, b) => Formula::or(a.shifted_left(delta)?, b.shifted_left(delta)?),
            Formula::Until(i, a, b) => {
                // operands are evaluated relative to the chosen window index,
                // so only the window itself moves
                Formula::until(shift(i)?, a.as_ref().clone(), b.as_ref().clone())
            }
            Formula::Eventually(i, f) => Formula::eventually(shift(i)?, f.as_ref().clone()),
            Formula::Always(i, f) => Formula::always(shift(i)?, f.as_ref().clone()),
        })
    }

    /// Display with predicate names resolved through `table`. The output is
    /// re-parseable by [`super::parse_formula`].
    pub fn display<'a>(&'a self, table: &'a PredicateTable) -> FormulaDisplay<'a> {
        FormulaDisplay { formula: self, table }
    }
}

pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    table: &'a PredicateTable,
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(self.formula, self.table, f)
    }
}

fn fmt_formula(phi: &Formula, t: &PredicateTable, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match phi {
        Formula::True => write!(f, "true"),
        Formula::False => write!(f, "false"),
        Formula::Atom(p) => write!(f, "{}", t.name(*p)),
        Formula::Not(inner) => {
            write!(f, "!(")?;
            fmt_formula(inner, t, f)?;
            write!(f, ")")
        }
        Formula::And(a, b) => {
            write!(f, "(")?;
            fmt_formula(a, t, f)?;
            write!(f, " & ")?;
            fmt_formula(b, t, f)?;
            write!(f, ")")
        }
        Formula::Or(a, b) => {
            write!(f, "(")?;
            fmt_formula(a, t, f)?;
            write!(f, " | ")?;
            fmt_formula(b, t, f)?;
            write!(f, ")")
        }
        Formula::Until(i, a, b) => {
            write!(f, "(")?;
            fmt_formula(a, t, f)?;
            write!(f, " U{i} ")?;
            fmt_formula(b, t, f)?;
            write!(f, ")")
        }
        Formula::Eventually(i, inner) => {
            write!(f, "F{i} (")?;
            fmt_formula(inner, t, f)?;
            write!(f, ")")
        }
        Formula::Always(i, inner) => {
            write!(f, "G{i} (")?;
            fmt_formula(inner, t, f)?;
            write!(f, ")")
        }
    }
}
