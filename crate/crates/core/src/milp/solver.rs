//! Branch-and-bound over simplex relaxations.
//!
//! Best-first on the node frontier (ordered by parent relaxation bound, ties
//! by creation order) with a plunge at each selected node: the chosen child
//! keeps the live tableau and re-optimizes in place, which costs a handful
//! of pivots instead of a fresh solve. Branching picks the most fractional
//! binary. The search is single-threaded and fully deterministic: identical
//! models produce identical status, objective, and assignment on every run.

use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::model::{MilpModel, Solution, SolveStatus};
use super::presolve::{presolve, Reduced};
use super::simplex::{LpStatus, Simplex};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Maximum number of LP relaxations solved.
    pub max_nodes: u64,
    /// Optional wall-clock limit. Off by default: elapsed-time cutoffs make
    /// results timing-dependent.
    pub max_wall: Option<Duration>,
    /// A node whose bound is within this of the incumbent is pruned.
    pub gap_tol: f64,
    /// Binary integrality tolerance.
    pub int_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_nodes: 2_000_000, max_wall: None, gap_tol: 1e-7, int_tol: 1e-9 }
    }
}

/// Branch decisions along a path: binary column fixed to 0 or 1.
type Diffs = Vec<(usize, bool)>;

struct FrontierNode {
    bound: f64,
    id: u64,
    diffs: Diffs,
}

impl PartialEq for FrontierNode {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for FrontierNode {}
impl PartialOrd for FrontierNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FrontierNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap; we want the smallest bound first, then
        // the oldest node
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap()
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve(model: &MilpModel, opts: &SolveOptions) -> Solution {
    let started = Instant::now();
    let reduced = presolve(model);
    if reduced.infeasible {
        return Solution {
            status: SolveStatus::Infeasible,
            objective: None,
            assignment: None,
            nodes: 0,
            wall: started.elapsed(),
        };
    }
    let mut search = Search {
        reduced: &reduced,
        simplex: Simplex::new(reduced.lp.clone()),
        opts,
        incumbent: None,
        nodes: 0,
        next_id: 1,
        frontier: BinaryHeap::new(),
        started,
        budget_hit: false,
    };
    search.run();

    let status = if search.budget_hit {
        SolveStatus::BudgetExceeded
    } else if search.incumbent.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    let (objective, assignment) = match search.incumbent {
        Some((obj, red_x)) => {
            let full = reduced.recover(&red_x);
            (Some(obj), Some(full))
        }
        None => (None, None),
    };
    Solution { status, objective, assignment, nodes: search.nodes, wall: started.elapsed() }
}

struct Search<'a> {
    reduced: &'a Reduced,
    simplex: Simplex,
    opts: &'a SolveOptions,
    /// Best (objective, reduced structural assignment) so far.
    incumbent: Option<(f64, Vec<f64>)>,
    nodes: u64,
    next_id: u64,
    frontier: BinaryHeap<FrontierNode>,
    started: Instant,
    budget_hit: bool,
}

impl Search<'_> {
    fn run(&mut self) {
        let trace = std::env::var_os("MTLSYNTH_BB_TRACE").is_some();
        self.frontier.push(FrontierNode { bound: f64::NEG_INFINITY, id: 0, diffs: Vec::new() });
        while let Some(node) = self.frontier.pop() {
            if self.over_budget() {
                self.budget_hit = true;
                return;
            }
            if self.prunable(node.bound) {
                continue;
            }
            if trace {
                eprintln!(
                    "pop id {} bound {:.6} depth {} frontier {} nodes {}",
                    node.id,
                    node.bound,
                    node.diffs.len(),
                    self.frontier.len(),
                    self.nodes
                );
            }
            // bring the tableau to this node's bounds
            self.apply_diffs(&node.diffs);
            self.plunge(node.diffs, trace);
        }
    }

    /// Restore a branched column to its root bounds (branch columns are
    /// always plain binaries in the reduced problem).
    fn unfix(&mut self, col: usize) {
        let (lb, ub) = (self.reduced.lp.lb[col], self.reduced.lp.ub[col]);
        self.simplex.set_bounds(col, lb, ub);
    }

    fn over_budget(&self) -> bool {
        if self.nodes >= self.opts.max_nodes {
            return true;
        }
        if let Some(limit) = self.opts.max_wall {
            if self.started.elapsed() >= limit {
                return true;
            }
        }
        false
    }

    fn prunable(&self, bound: f64) -> bool {
        match &self.incumbent {
            Some((best, _)) => bound >= best - self.opts.gap_tol,
            None => false,
        }
    }

    /// Bounded depth-first subsearch from a frontier node, reusing the live
    /// tableau across bound flips. Failed fixes backtrack in place (flip the
    /// deepest untried side) instead of dying, which is what turns
    /// conflicting selector fixes into incumbents. When the local node cap
    /// is hit, the unexplored siblings go back to the best-first frontier.
    fn plunge(&mut self, root_diffs: Diffs, trace: bool) {
        // (col, fixed_one, bound_at_branch, flipped)
        let mut path: Vec<(usize, bool, f64, bool)> = Vec::new();
        let cap = 2_000u64;
        let mut local_nodes = 0u64;
        'outer: loop {
            if self.over_budget() || local_nodes >= cap {
                if local_nodes >= cap {
                    // hand the untried flips to the frontier
                    let mut diffs = root_diffs.clone();
                    for &(col, one, bound, flipped) in &path {
                        if !flipped {
                            let mut sibling = diffs.clone();
                            sibling.push((col, !one));
                            self.frontier.push(FrontierNode {
                                bound,
                                id: self.next_id,
                                diffs: sibling,
                            });
                            self.next_id += 1;
                        }
                        diffs.push((col, one));
                    }
                } else {
                    self.budget_hit = true;
                }
                // restore root bounds for the path columns
                for &(col, _, _, _) in &path {
                    self.unfix(col);
                }
                return;
            }
            self.nodes += 1;
            local_nodes += 1;
            let status = self.simplex.optimize();
            if trace {
                eprintln!(
                    "  node {} depth {} lp {:?} obj {:.6}",
                    self.nodes,
                    path.len(),
                    status,
                    self.simplex.objective() + self.reduced.obj_offset
                );
            }
            let mut cut = match status {
                LpStatus::Infeasible => true,
                LpStatus::Unbounded | LpStatus::IterLimit => {
                    // encoded models are bounded; treat numerical failures as
                    // budget events rather than wrong answers
                    log::warn!("simplex returned {status:?} inside branch-and-bound");
                    self.budget_hit = true;
                    for &(col, _, _, _) in &path {
                        self.unfix(col);
                    }
                    return;
                }
                LpStatus::Optimal => false,
            };
            let mut bound = f64::NEG_INFINITY;
            if !cut {
                bound = self.simplex.objective() + self.reduced.obj_offset;
                cut = self.prunable(bound);
            }
            if !cut {
                // pick the most fractional binary
                let x = self.simplex.values();
                let mut branch: Option<(usize, f64)> = None;
                for &col in &self.reduced.binary_cols {
                    let frac = (x[col] - x[col].round()).abs();
                    if frac > self.opts.int_tol {
                        let score = (x[col] - 0.5).abs();
                        match branch {
                            None => branch = Some((col, score)),
                            Some((bc, bs)) => {
                                if score < bs - 1e-12 || (score <= bs + 1e-12 && col < bc) {
                                    branch = Some((col, score));
                                }
                            }
                        }
                    }
                }
                match branch {
                    Some((col, _)) => {
                        // dive upward first: selector binaries enable the
                        // constraints a satisfying plan needs
                        let one = x[col] > self.opts.int_tol;
                        path.push((col, one, bound, false));
                        let v = if one { 1.0 } else { 0.0 };
                        self.simplex.set_bounds(col, v, v);
                        continue 'outer;
                    }
                    None => {
                        // integral: refine and record the incumbent
                        self.simplex.refine();
                        let xr = self.simplex.values();
                        let mut obj = self.reduced.obj_offset;
                        for (j, &v) in xr.iter().take(self.reduced.lp.n).enumerate() {
                            obj += self.reduced.lp.obj[j] * v;
                        }
                        let better = match &self.incumbent {
                            Some((best, _)) => obj < best - 1e-12,
                            None => true,
                        };
                        if better {
                            self.incumbent = Some((obj, xr[..self.reduced.lp.n].to_vec()));
                        }
                        cut = true;
                    }
                }
            }
            debug_assert!(cut);
            // backtrack: flip the deepest untried decision
            loop {
                match path.pop() {
                    Some((col, one, b, flipped)) => {
                        if flipped || self.prunable(b) {
                            self.unfix(col);
                            continue;
                        }
                        let v = if one { 0.0 } else { 1.0 };
                        self.simplex.set_bounds(col, v, v);
                        path.push((col, !one, b, true));
                        continue 'outer;
                    }
                    None => return,
                }
            }
        }
    }

    /// Reset every binary to its root bounds, then apply the node's fixes.
    fn apply_diffs(&mut self, diffs: &Diffs) {
        for &col in &self.reduced.binary_cols {
            let (lb, ub) = (self.reduced.lp.lb[col], self.reduced.lp.ub[col]);
            self.simplex.set_bounds(col, lb, ub);
        }
        for &(col, one) in diffs {
            let v = if one { 1.0 } else { 0.0 };
            self.simplex.set_bounds(col, v, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::{MilpModel, Sense, VarKind};
    use approx::assert_relative_eq;

    #[test]
    fn pure_lp_no_binaries() {
        // min -x - y, x + 2y <= 4, 3x + y <= 6
        let mut m = MilpModel::new("lp");
        let x = m.add_continuous("x".into(), 0.0, 10.0);
        let y = m.add_continuous("y".into(), 0.0, 10.0);
        m.set_objective_coef(x, -1.0);
        m.set_objective_coef(y, -1.0);
        m.add_constraint("c1".into(), vec![(x, 1.0), (y, 2.0)], Sense::Le, 4.0);
        m.add_constraint("c2".into(), vec![(x, 3.0), (y, 1.0)], Sense::Le, 6.0);
        let sol = solve(&m, &SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.objective.unwrap(), -14.0 / 5.0, epsilon = 1e-9);
        assert_eq!(sol.nodes, 1);
    }

    #[test]
    fn knapsack_small() {
        // max 5a + 4b + 3c st 2a + 3b + c <= 5, binaries; optimum a=b=1 -> 9
        let mut m = MilpModel::new("knap");
        let a = m.add_binary("a".into());
        let b = m.add_binary("b".into());
        let c = m.add_binary("c".into());
        m.set_objective_coef(a, -5.0);
        m.set_objective_coef(b, -4.0);
        m.set_objective_coef(c, -3.0);
        m.add_constraint("w".into(), vec![(a, 2.0), (b, 3.0), (c, 1.0)], Sense::Le, 5.0);
        let sol = solve(&m, &SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.objective.unwrap(), -9.0, epsilon = 1e-9);
        let x = sol.assignment.unwrap();
        assert_relative_eq!(x[a.index()], 1.0, epsilon = 1e-9);
        assert_relative_eq!(x[b.index()], 1.0, epsilon = 1e-9);
        assert_relative_eq!(x[c.index()], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_toy() {
        let mut m = MilpModel::new("bad");
        let x = m.add_continuous("x".into(), f64::NEG_INFINITY, f64::INFINITY);
        m.add_constraint("lo".into(), vec![(x, 1.0)], Sense::Ge, 1.0);
        m.add_constraint("hi".into(), vec![(x, 1.0)], Sense::Le, 0.0);
        let sol = solve(&m, &SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn budget_exceeded_reports_status() {
        // fractional relaxation, so one node cannot finish the tree
        let mut m = MilpModel::new("tight");
        let a = m.add_binary("a".into());
        let b = m.add_binary("b".into());
        let c = m.add_binary("c".into());
        m.set_objective_coef(a, -5.0);
        m.set_objective_coef(b, -4.0);
        m.set_objective_coef(c, -3.0);
        m.add_constraint("w".into(), vec![(a, 2.0), (b, 3.0), (c, 1.0)], Sense::Le, 5.0);
        let opts = SolveOptions { max_nodes: 1, ..Default::default() };
        let sol = solve(&m, &opts);
        assert_eq!(sol.status, SolveStatus::BudgetExceeded);
        assert_eq!(sol.nodes, 1);
    }

    #[test]
    fn integral_solution_feasible_and_integral() {
        let mut m = MilpModel::new("mix");
        let z = m.add_binary("z".into());
        let x = m.add_continuous("x".into(), 0.0, 4.0);
        m.set_objective_coef(x, 1.0);
        m.set_objective_coef(z, 0.5);
        // x >= 1 + 2z, so z = 0 and x = 1 is optimal
        m.add_constraint("link".into(), vec![(x, 1.0), (z, -2.0)], Sense::Ge, 1.0);
        let sol = solve(&m, &SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        let a = sol.assignment.as_ref().unwrap();
        assert!(m.max_violation(a) <= 1e-6);
        assert!(m.max_integrality_gap(a) <= 1e-9);
        assert_relative_eq!(sol.objective.unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn deterministic_across_runs() {
        let mut m = MilpModel::new("det");
        let mut vars = Vec::new();
        for i in 0..8 {
            let z = m.add_binary(format!("z{i}"));
            m.set_objective_coef(z, if i % 2 == 0 { -1.0 } else { -1.5 });
            vars.push(z);
        }
        let terms: Vec<_> = vars.iter().map(|v| (*v, 1.0)).collect();
        m.add_constraint("cap".into(), terms, Sense::Le, 4.0);
        let s1 = solve(&m, &SolveOptions::default());
        let s2 = solve(&m, &SolveOptions::default());
        assert_eq!(s1.objective, s2.objective);
        assert_eq!(s1.assignment, s2.assignment);
        assert_eq!(s1.nodes, s2.nodes);
    }
}
