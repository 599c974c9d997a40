//! Reductions applied before the LP relaxations are built.
//!
//! Two passes, iterated to a fixed point:
//!  - substitution of fixed variables (`lb == ub`) into rows and objective;
//!  - Gaussian elimination of equality rows through a pivot variable that is
//!    continuous, unbounded on both sides, and absent from the objective
//!    (the trajectory variables defined by the dynamics rows).
//!
//! The reduced problem is expressed over the surviving variables; a recovery
//! map rebuilds the full assignment, so callers never see the reduction.

use std::collections::HashMap;

use super::model::{MilpModel, Sense, VarKind};
use super::simplex::DenseLp;

/// Row representation during reduction.
#[derive(Debug, Clone)]
struct Row {
    terms: HashMap<usize, f64>,
    sense: Sense,
    rhs: f64,
}

/// One eliminated variable: `var = const + Σ coef_j * x_j` over original
/// variable indices (which may themselves be eliminated; recovery applies
/// the list in reverse order).
#[derive(Debug, Clone)]
struct Elimination {
    var: usize,
    constant: f64,
    terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct Reduced {
    pub lp: DenseLp,
    /// Columns of the reduced LP, as original variable indices.
    pub kept: Vec<usize>,
    /// Binary columns of the reduced LP (reduced indices).
    pub binary_cols: Vec<usize>,
    /// Objective constant folded out by substitutions.
    pub obj_offset: f64,
    /// Trivially detected infeasibility (constant row violated).
    pub infeasible: bool,
    fixed: Vec<(usize, f64)>,
    eliminated: Vec<Elimination>,
    nvars_full: usize,
}

const ELIM_PIVOT_TOL: f64 = 1e-7;
const CONST_ROW_TOL: f64 = 1e-7;

pub fn presolve(model: &MilpModel) -> Reduced {
    let nvars = model.num_vars();
    let mut rows: Vec<Option<Row>> = model
        .constraints()
        .iter()
        .map(|c| {
            let mut terms = HashMap::with_capacity(c.terms.len());
            for &(v, a) in &c.terms {
                if a != 0.0 {
                    *terms.entry(v.index()).or_insert(0.0) += a;
                }
            }
            Some(Row { terms, sense: c.sense, rhs: c.rhs })
        })
        .collect();
    let mut obj: Vec<f64> = model.vars().iter().map(|v| v.obj).collect();
    let mut obj_offset = 0.0;
    let lb: Vec<f64> = model.vars().iter().map(|v| v.lb).collect();
    let ub: Vec<f64> = model.vars().iter().map(|v| v.ub).collect();
    let mut alive: Vec<bool> = vec![true; nvars];
    let mut fixed: Vec<(usize, f64)> = Vec::new();
    let mut eliminated: Vec<Elimination> = Vec::new();
    let mut infeasible = false;

    // pass 1: fold fixed variables into rhs and objective
    for v in 0..nvars {
        if alive[v] && lb[v] == ub[v] && lb[v].is_finite() {
            let val = lb[v];
            obj_offset += obj[v] * val;
            obj[v] = 0.0;
            alive[v] = false;
            fixed.push((v, val));
        }
    }
    let fixed_set: HashMap<usize, f64> = fixed.iter().copied().collect();
    for row in rows.iter_mut().flatten() {
        let mut shift = 0.0;
        row.terms.retain(|v, a| {
            if let Some(val) = fixed_set.get(v) {
                shift += *a * val;
                false
            } else {
                true
            }
        });
        row.rhs -= shift;
    }

    // pass 2: eliminate equality rows through free unbounded pivots. Later
    // rows first: dynamics chains eliminate backward with less fill-in.
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); nvars];
    for (ri, row) in rows.iter().enumerate() {
        if let Some(r) = row {
            for &v in r.terms.keys() {
                col_rows[v].push(ri);
            }
        }
    }
    for ri in (0..rows.len()).rev() {
        let Some(row) = &rows[ri] else { continue };
        if row.sense != Sense::Eq {
            continue;
        }
        // pivot: free unbounded continuous var with no objective, largest
        // |coef| (ties to the highest variable index for determinism)
        let mut pivot: Option<(usize, f64)> = None;
        for (&v, &a) in &row.terms {
            if !alive[v]
                || model.vars()[v].kind != VarKind::Continuous
                || lb[v].is_finite()
                || ub[v].is_finite()
                || obj[v] != 0.0
                || a.abs() < ELIM_PIVOT_TOL
            {
                continue;
            }
            match pivot {
                None => pivot = Some((v, a)),
                Some((pv, pa)) => {
                    if a.abs() > pa.abs() + 1e-12
                        || ((a.abs() - pa.abs()).abs() <= 1e-12 && v > pv)
                    {
                        pivot = Some((v, a));
                    }
                }
            }
        }
        let Some((pv, pa)) = pivot else { continue };
        // pv = (rhs - Σ other terms) / pa
        let row = rows[ri].take().unwrap();
        let constant = row.rhs / pa;
        let expr: Vec<(usize, f64)> = {
            let mut e: Vec<(usize, f64)> = row
                .terms
                .iter()
                .filter(|(v, _)| **v != pv)
                .map(|(&v, &a)| (v, -a / pa))
                .collect();
            e.sort_unstable_by_key(|(v, _)| *v);
            e
        };
        alive[pv] = false;
        // substitute into every other row containing pv
        let holders = std::mem::take(&mut col_rows[pv]);
        for hi in holders {
            if hi == ri {
                continue;
            }
            let Some(target) = rows[hi].as_mut() else { continue };
            let Some(c) = target.terms.remove(&pv) else { continue };
            target.rhs -= c * constant;
            for &(v, a) in &expr {
                let entry = target.terms.entry(v).or_insert(0.0);
                *entry += c * a;
                if entry.abs() < 1e-13 {
                    target.terms.remove(&v);
                } else {
                    col_rows[v].push(hi);
                }
            }
        }
        eliminated.push(Elimination { var: pv, constant, terms: expr });
    }

    // drop rows with no surviving terms, checking their consistency
    for row in rows.iter_mut() {
        let keep = match row {
            Some(r) if r.terms.is_empty() => {
                let viol = match r.sense {
                    Sense::Le => -r.rhs,
                    Sense::Ge => r.rhs,
                    Sense::Eq => r.rhs.abs(),
                };
                if viol > CONST_ROW_TOL {
                    infeasible = true;
                }
                false
            }
            Some(_) => true,
            None => false,
        };
        if !keep {
            *row = None;
        }
    }

    // assemble the reduced dense LP
    let kept: Vec<usize> = (0..nvars).filter(|&v| alive[v]).collect();
    let red_index: HashMap<usize, usize> =
        kept.iter().enumerate().map(|(r, &v)| (v, r)).collect();
    let live_rows: Vec<&Row> = rows.iter().flatten().collect();
    let m = live_rows.len();
    let n = kept.len();
    let mut a = vec![0.0; m * n];
    let mut b = vec![0.0; m];
    let mut dlb = vec![0.0; n + m];
    let mut dub = vec![0.0; n + m];
    let mut dobj = vec![0.0; n + m];
    for (r, &v) in kept.iter().enumerate() {
        dlb[r] = lb[v];
        dub[r] = ub[v];
        dobj[r] = obj[v];
    }
    for (i, row) in live_rows.iter().enumerate() {
        b[i] = row.rhs;
        for (&v, &coef) in &row.terms {
            a[i * n + red_index[&v]] = coef;
        }
        let (sl, su) = match row.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        dlb[n + i] = sl;
        dub[n + i] = su;
    }
    let binary_cols = kept
        .iter()
        .enumerate()
        .filter(|(_, &v)| model.vars()[v].kind == VarKind::Binary)
        .map(|(r, _)| r)
        .collect();

    Reduced {
        lp: DenseLp { m, n, a, b, obj: dobj, lb: dlb, ub: dub },
        kept,
        binary_cols,
        obj_offset,
        infeasible,
        fixed,
        eliminated,
        nvars_full: nvars,
    }
}

impl Reduced {
    /// Rebuild a full assignment from reduced structural values.
    pub fn recover(&self, reduced_x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.nvars_full];
        for (r, &v) in self.kept.iter().enumerate() {
            full[v] = reduced_x[r];
        }
        for &(v, val) in &self.fixed {
            full[v] = val;
        }
        // eliminations were recorded while scanning rows backward; an entry
        // may reference variables eliminated by earlier rows (recorded after
        // it), so resolve the list in reverse
        for e in self.eliminated.iter().rev() {
            let mut val = e.constant;
            for &(v, a) in &e.terms {
                val += a * full[v];
            }
            full[e.var] = val;
        }
        full
    }
}
