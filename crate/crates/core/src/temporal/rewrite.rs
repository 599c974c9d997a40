//! Online rewriting of a formula against an observed state prefix: atoms at
//! indices `k <= l` are replaced by `true`/`false` according to region
//! membership of `x[k]`, temporal operators are expanded over their windows,
//! and constants are folded eagerly. Remaining future atoms are anchored to
//! their absolute time index with point intervals (`F[k,k] p`), so the
//! result is always evaluated at index 0 of the same time axis.
//!
//! Only semantic equality is promised for the output, not a particular
//! syntactic shape.

use nalgebra::DVector;

use super::formula::{Formula, Interval};
use super::predicates::{signed_distance, PredicateTable};
use super::TemporalError;

pub fn rewrite(
    phi: &Formula,
    prefix: &[DVector<f64>],
    l: usize,
    table: &PredicateTable,
) -> Result<Formula, TemporalError> {
    if prefix.len() < l + 1 {
        return Err(TemporalError::PrefixTooShort { len: prefix.len(), l });
    }
    rw(phi, 0, prefix, l, table)
}

fn rw(
    phi: &Formula,
    k: usize,
    prefix: &[DVector<f64>],
    l: usize,
    table: &PredicateTable,
) -> Result<Formula, TemporalError> {
    Ok(match phi {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Atom(p) => {
            if k <= l {
                if signed_distance(&prefix[k], table.get(*p))? >= 0.0 {
                    Formula::True
                } else {
                    Formula::False
                }
            } else {
                Formula::eventually(Interval::new(k, k), Formula::Atom(*p))
            }
        }
        Formula::Not(f) => not_fold(rw(f, k, prefix, l, table)?),
        Formula::And(a, b) => {
            Formula::and_fold(rw(a, k, prefix, l, table)?, rw(b, k, prefix, l, table)?)
        }
        Formula::Or(a, b) => {
            Formula::or_fold(rw(a, k, prefix, l, table)?, rw(b, k, prefix, l, table)?)
        }
        Formula::Eventually(i, f) => {
            let mut out = Formula::False;
            for kp in i.shifted(k) {
                out = Formula::or_fold(out, rw(f, kp, prefix, l, table)?);
                if matches!(out, Formula::True) {
                    break;
                }
            }
            out
        }
        Formula::Always(i, f) => {
            let mut out = Formula::True;
            for kp in i.shifted(k) {
                out = Formula::and_fold(out, rw(f, kp, prefix, l, table)?);
                if matches!(out, Formula::False) {
                    break;
                }
            }
            out
        }
        Formula::Until(i, a, b) => {
            let mut out = Formula::False;
            for kp in i.shifted(k) {
                let mut term = rw(b, kp, prefix, l, table)?;
                for kpp in k..kp {
                    if matches!(term, Formula::False) {
                        break;
                    }
                    term = Formula::and_fold(term, rw(a, kpp, prefix, l, table)?);
                }
                out = Formula::or_fold(out, term);
                if matches!(out, Formula::True) {
                    break;
                }
            }
            out
        }
    })
}

fn not_fold(f: Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Not(inner) => *inner,
        other => Formula::not(other),
    }
}
